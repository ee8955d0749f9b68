//! Window-based TCP sender and cumulative-ACK receiver.
//!
//! Slow start, congestion avoidance, fast retransmit on the third duplicate
//! ACK and go-back-N on timeout. The congestion window never exceeds the
//! configured maximum window. Sequence numbers start at 1; an ACK carries
//! the highest in-order sequence received.

use std::collections::BTreeSet;

use super::{SimError, SimTime};

/// Lower bound on the retransmission timeout, in seconds.
pub const MIN_RTO: f64 = 1.0;
const SRTT_GAIN: f64 = 1.0 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcpEvent {
    /// Cumulative ACK advancing `highest_acked` to this sequence.
    Ack(u64),
    DupAck,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcpFlowState {
    pub direction: Direction,
    pub cwnd: f64,
    pub ssthresh: f64,
    pub max_window: u32,
    /// Next sequence to hand to the network.
    pub next_seq: u64,
    pub highest_acked: u64,
    /// Highest sequence ever sent.
    pub max_sent: u64,
    pub dupack_count: u32,
    pub rto_deadline: Option<SimTime>,
    /// Bumped every time the deadline changes; stale timer events carry an
    /// older value.
    pub timer_generation: u64,
    pub retransmit_pending: Option<u64>,
    pub srtt: Option<f64>,
    timed: Option<(u64, SimTime)>,
}

impl TcpFlowState {
    pub fn new(direction: Direction, max_window: u32) -> Self {
        Self {
            direction,
            cwnd: 1.0,
            ssthresh: f64::from(max_window),
            max_window,
            next_seq: 1,
            highest_acked: 0,
            max_sent: 0,
            dupack_count: 0,
            rto_deadline: None,
            timer_generation: 0,
            retransmit_pending: None,
            srtt: None,
            timed: None,
        }
    }

    pub fn in_flight(&self) -> u64 {
        self.next_seq - self.highest_acked - 1
    }

    pub fn window(&self) -> u64 {
        (self.cwnd.floor() as u64).clamp(1, u64::from(self.max_window))
    }

    pub fn can_send(&self) -> bool {
        self.retransmit_pending.is_some() || self.in_flight() < self.window()
    }

    pub fn rto(&self) -> f64 {
        self.srtt.map_or(MIN_RTO, |s| (4.0 * s).max(MIN_RTO))
    }

    fn arm(&mut self, now: SimTime) {
        self.rto_deadline = Some(now.after_secs(self.rto()));
        self.timer_generation += 1;
    }

    fn disarm(&mut self) {
        if self.rto_deadline.take().is_some() {
            self.timer_generation += 1;
        }
    }

    /// Takes the next packet the window allows. Returns the sequence and
    /// whether it is a retransmission.
    pub fn take_packet(&mut self, now: SimTime) -> Option<(u64, bool)> {
        if let Some(seq) = self.retransmit_pending.take() {
            self.timed = None;
            self.arm(now);
            return Some((seq, true));
        }
        if self.in_flight() >= self.window() {
            return None;
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        let retx = seq <= self.max_sent;
        if retx {
            if matches!(self.timed, Some((t, _)) if t >= seq) {
                self.timed = None;
            }
        } else {
            self.max_sent = seq;
            if self.timed.is_none() {
                self.timed = Some((seq, now));
            }
        }
        if self.rto_deadline.is_none() {
            self.arm(now);
        }
        Some((seq, retx))
    }

    /// Maps a received cumulative ACK to an event, or `None` for a stale
    /// ACK that carries no information.
    pub fn classify_ack(&self, ack: u64) -> Result<Option<TcpEvent>, SimError> {
        if ack > self.max_sent {
            return Err(SimError::InconsistentTcp(format!(
                "ack {ack} beyond highest sent {}",
                self.max_sent
            )));
        }
        Ok(if ack > self.highest_acked {
            Some(TcpEvent::Ack(ack))
        } else if ack == self.highest_acked && self.max_sent > self.highest_acked {
            Some(TcpEvent::DupAck)
        } else {
            None
        })
    }

    pub fn on_event(&mut self, event: TcpEvent, now: SimTime) -> Result<(), SimError> {
        let w = f64::from(self.max_window);
        match event {
            TcpEvent::Ack(ack) => {
                if ack <= self.highest_acked || ack > self.max_sent {
                    return Err(SimError::InconsistentTcp(format!(
                        "ack {ack} outside ({}, {}]",
                        self.highest_acked, self.max_sent
                    )));
                }
                if let Some((seq, sent_at)) = self.timed {
                    if ack >= seq {
                        let sample = now.secs_since(sent_at);
                        self.srtt = Some(match self.srtt {
                            None => sample,
                            Some(s) => (1.0 - SRTT_GAIN) * s + SRTT_GAIN * sample,
                        });
                        self.timed = None;
                    }
                }
                self.highest_acked = ack;
                self.next_seq = self.next_seq.max(ack + 1);
                self.dupack_count = 0;
                if matches!(self.retransmit_pending, Some(s) if s <= ack) {
                    self.retransmit_pending = None;
                }
                if self.cwnd < self.ssthresh {
                    self.cwnd += 1.0;
                } else {
                    self.cwnd += 1.0 / self.cwnd;
                }
                self.cwnd = self.cwnd.min(w);
                if self.in_flight() > 0 {
                    self.arm(now);
                } else {
                    self.disarm();
                }
            }
            TcpEvent::DupAck => {
                if self.max_sent <= self.highest_acked {
                    return Err(SimError::InconsistentTcp(
                        "duplicate ack with nothing outstanding".into(),
                    ));
                }
                self.dupack_count += 1;
                if self.dupack_count == 3 {
                    self.ssthresh = (self.cwnd / 2.0).max(2.0);
                    self.cwnd = self.ssthresh.min(w);
                    self.retransmit_pending = Some(self.highest_acked + 1);
                    self.timed = None;
                }
            }
            TcpEvent::Timeout => {
                if self.max_sent <= self.highest_acked {
                    return Err(SimError::InconsistentTcp(
                        "timeout with nothing outstanding".into(),
                    ));
                }
                self.ssthresh = (self.cwnd / 2.0).max(2.0);
                self.cwnd = 1.0;
                self.next_seq = self.highest_acked + 1;
                self.retransmit_pending = None;
                self.dupack_count = 0;
                self.timed = None;
                self.disarm();
            }
        }
        Ok(())
    }
}

/// Receiver that buffers out-of-order segments and acknowledges every
/// arriving data packet.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TcpReceiver {
    next_expected: u64,
    out_of_order: BTreeSet<u64>,
}

impl TcpReceiver {
    pub fn new() -> Self {
        Self {
            next_expected: 1,
            out_of_order: BTreeSet::new(),
        }
    }

    /// Returns the cumulative ACK to send and the number of packets newly
    /// delivered in order.
    pub fn on_data(&mut self, seq: u64) -> (u64, u64) {
        let mut delivered = 0;
        if seq == self.next_expected {
            self.next_expected += 1;
            delivered += 1;
            while self.out_of_order.remove(&self.next_expected) {
                self.next_expected += 1;
                delivered += 1;
            }
        } else if seq > self.next_expected {
            self.out_of_order.insert(seq);
        }
        (self.next_expected - 1, delivered)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T0: SimTime = SimTime::ZERO;

    fn sent(flow: &mut TcpFlowState, n: usize) {
        for _ in 0..n {
            flow.take_packet(T0).unwrap();
        }
    }

    #[test]
    fn slow_start_step() {
        let mut f = TcpFlowState::new(Direction::Up, 42);
        assert_eq!(f.ssthresh, 42.0);
        sent(&mut f, 1);
        assert!(!f.can_send());
        f.on_event(TcpEvent::Ack(1), T0).unwrap();
        assert_eq!(f.cwnd, 2.0);
        assert_eq!(f.window(), 2);
    }

    #[test]
    fn window_capped_at_max() {
        let mut f = TcpFlowState::new(Direction::Up, 42);
        f.cwnd = 42.0;
        sent(&mut f, 42);
        assert!(!f.can_send());
        f.on_event(TcpEvent::Ack(1), T0).unwrap();
        assert_eq!(f.cwnd, 42.0);
        f.ssthresh = 10.0;
        f.on_event(TcpEvent::Ack(2), T0).unwrap();
        assert_eq!(f.cwnd, 42.0);
    }

    #[test]
    fn congestion_avoidance_increment() {
        let mut f = TcpFlowState::new(Direction::Down, 42);
        f.cwnd = 10.0;
        f.ssthresh = 8.0;
        sent(&mut f, 10);
        f.on_event(TcpEvent::Ack(1), T0).unwrap();
        assert!((f.cwnd - 10.1).abs() < 1e-12);
    }

    #[test]
    fn timeout_halves_threshold_and_resets() {
        let mut f = TcpFlowState::new(Direction::Down, 42);
        f.cwnd = 40.0;
        sent(&mut f, 40);
        f.on_event(TcpEvent::Timeout, T0).unwrap();
        assert_eq!(f.cwnd, 1.0);
        assert_eq!(f.ssthresh, 20.0);
        assert_eq!(f.next_seq, 1);
        assert_eq!(f.take_packet(T0), Some((1, true)));
    }

    #[test]
    fn third_dupack_fast_retransmits() {
        let mut f = TcpFlowState::new(Direction::Down, 42);
        f.cwnd = 16.0;
        sent(&mut f, 16);
        f.on_event(TcpEvent::Ack(3), T0).unwrap();
        for _ in 0..2 {
            assert_eq!(f.classify_ack(3).unwrap(), Some(TcpEvent::DupAck));
            f.on_event(TcpEvent::DupAck, T0).unwrap();
            assert!(f.retransmit_pending.is_none());
        }
        f.on_event(TcpEvent::DupAck, T0).unwrap();
        // cwnd grew to 17 on the new ACK.
        assert_eq!(f.ssthresh, 8.5);
        assert_eq!(f.cwnd, f.ssthresh);
        assert_eq!(f.retransmit_pending, Some(4));
        assert_eq!(f.take_packet(T0), Some((4, true)));
        // Further duplicates do not retrigger.
        f.on_event(TcpEvent::DupAck, T0).unwrap();
        assert!(f.retransmit_pending.is_none());
    }

    #[test]
    fn threshold_floor_is_two() {
        let mut f = TcpFlowState::new(Direction::Up, 42);
        sent(&mut f, 1);
        f.on_event(TcpEvent::Timeout, T0).unwrap();
        assert_eq!(f.ssthresh, 2.0);
    }

    #[test]
    fn inconsistent_events_fail_fast() {
        let mut f = TcpFlowState::new(Direction::Up, 42);
        assert!(f.classify_ack(1).is_err());
        assert!(f.on_event(TcpEvent::Timeout, T0).is_err());
        assert!(f.on_event(TcpEvent::DupAck, T0).is_err());
        sent(&mut f, 1);
        assert!(f.on_event(TcpEvent::Ack(2), T0).is_err());
        f.on_event(TcpEvent::Ack(1), T0).unwrap();
        assert!(f.on_event(TcpEvent::Ack(1), T0).is_err());
        assert_eq!(f.classify_ack(0).unwrap(), None);
    }

    #[test]
    fn timer_follows_outstanding_data() {
        let mut f = TcpFlowState::new(Direction::Up, 42);
        assert!(f.rto_deadline.is_none());
        sent(&mut f, 1);
        assert_eq!(f.rto_deadline, Some(T0.after_secs(MIN_RTO)));
        let later = T0.after_secs(0.05);
        f.on_event(TcpEvent::Ack(1), later).unwrap();
        assert!(f.rto_deadline.is_none());
        assert!((f.srtt.unwrap() - 0.05).abs() < 1e-9);
    }

    #[test]
    fn receiver_buffers_out_of_order() {
        let mut r = TcpReceiver::new();
        assert_eq!(r.on_data(1), (1, 1));
        assert_eq!(r.on_data(3), (1, 0));
        assert_eq!(r.on_data(4), (1, 0));
        assert_eq!(r.on_data(2), (4, 3));
        assert_eq!(r.on_data(2), (4, 0));
    }
}
