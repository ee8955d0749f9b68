//! Discrete-event simulator of one infrastructure WLAN cell.
//!
//! Topology: `U` uplink stations each run a TCP sender towards a wired
//! server, `D` downlink stations each receive from a wired server. All
//! wireless traffic crosses the access point:
//!
//! * uplink data goes station -> AP -> wire; the AP forwards it without
//!   buffering;
//! * uplink ACKs and downlink data arrive from the wire into the AP's single
//!   drop-tail FIFO and wait for the AP to win the channel;
//! * a downlink station answers each data frame with an ACK sent
//!   immediately after the data frame, without contending.
//!
//! The channel carries one frame at a time. When it becomes free, one of the
//! backlogged transmitters (the AP if its buffer is nonempty, each uplink
//! station whose window allows a packet) is picked uniformly at random. The
//! wired side has infinite bandwidth and a fixed one-way delay.
//!
//! Time is kept in integer nanoseconds and simultaneous events run in
//! insertion order, so a run is a pure function of its [`SimConfig`].

pub mod ap;
pub mod mac;
pub mod rng;
pub mod tcp;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::analytic::ScenarioParams;
use crate::metrics::{self, Ratio, ThroughputVector};

pub use ap::{ApBuffer, ClassCounts, Enqueue};
pub use mac::{mac_grant, saturated_grant_counts, Station};
pub use rng::SimRng;
pub use tcp::{Direction, TcpEvent, TcpFlowState, TcpReceiver};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("channel granted with no contenders")]
    IdleGrant,
    #[error("inconsistent TCP event: {0}")]
    InconsistentTcp(String),
    #[error("packet conservation violated for flow {flow}: sent {sent} != arrived {arrived} + dropped {dropped} + in flight {in_flight}")]
    Conservation {
        flow: usize,
        sent: u64,
        arrived: u64,
        dropped: u64,
        in_flight: u64,
    },
}

/// Simulated time in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs(s: f64) -> Self {
        SimTime((s * 1e9).round() as u64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn after_secs(self, s: f64) -> Self {
        SimTime(self.0 + SimTime::from_secs(s).0)
    }

    pub fn after(self, ns: u64) -> Self {
        SimTime(self.0 + ns)
    }

    pub fn secs_since(self, earlier: SimTime) -> f64 {
        SimTime(self.0 - earlier.0).as_secs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: ScenarioParams,
    pub seed: u64,
    /// Seconds.
    pub duration: f64,
    /// Seconds excluded from throughput measurement.
    pub warmup: f64,
    /// Bits per second.
    pub wireless_rate: f64,
    /// One-way wired delay, seconds.
    pub wired_delay: f64,
    /// Bytes.
    pub data_frame: u32,
    pub ack_frame: u32,
}

impl SimConfig {
    pub const DEFAULT_DURATION: f64 = 100.0;
    pub const DEFAULT_WIRELESS_RATE: f64 = 11e6;
    pub const DEFAULT_WIRED_DELAY: f64 = 1e-3;
    pub const DEFAULT_DATA_FRAME: u32 = 1040;
    pub const DEFAULT_ACK_FRAME: u32 = 40;

    pub fn new(scenario: ScenarioParams, seed: u64) -> Self {
        Self {
            scenario,
            seed,
            duration: Self::DEFAULT_DURATION,
            warmup: 0.0,
            wireless_rate: Self::DEFAULT_WIRELESS_RATE,
            wired_delay: Self::DEFAULT_WIRED_DELAY,
            data_frame: Self::DEFAULT_DATA_FRAME,
            ack_frame: Self::DEFAULT_ACK_FRAME,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        let s = &self.scenario;
        if s.up + s.down == 0 {
            return bad("need at least one station");
        }
        if s.buffer == 0 {
            return bad("buffer must be at least 1 packet");
        }
        if s.window == 0 {
            return bad("window must be at least 1 packet");
        }
        if !(self.warmup >= 0.0) || !(self.duration > self.warmup) || !self.duration.is_finite() {
            return bad("require duration > warmup >= 0");
        }
        if !(self.wireless_rate > 0.0) || !self.wireless_rate.is_finite() {
            return bad("wireless rate must be positive");
        }
        if !(self.wired_delay > 0.0) || !self.wired_delay.is_finite() {
            return bad("wired delay must be positive");
        }
        if self.data_frame == 0 || self.ack_frame == 0 {
            return bad("frame sizes must be positive");
        }
        Ok(())
    }

    fn airtime_ns(&self, bytes: u32) -> u64 {
        ((f64::from(bytes) * 8.0 / self.wireless_rate) * 1e9)
            .round()
            .max(1.0) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Data,
    Ack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub flow: usize,
    pub kind: FrameKind,
    /// Data: sequence number. ACK: cumulative acknowledgement.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub id: usize,
    pub direction: Direction,
    /// Data transmissions, including retransmissions.
    pub sent: u64,
    /// Data frames that reached the receiver, duplicates included.
    pub arrived: u64,
    /// Data frames dropped at the AP.
    pub dropped: u64,
    /// Data frames still in the network at the end of the run.
    pub in_flight: u64,
    /// New in-order packets delivered inside the measurement window.
    pub delivered: u64,
    /// Packets per second over the measurement window.
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub per_flow: Vec<FlowResult>,
    pub up_total: f64,
    pub down_total: f64,
    pub ratio_up_down: Ratio,
    /// `None` when no flow delivered anything.
    pub jain_index: Option<f64>,
    pub ap_drops: ClassCounts,
    pub max_ap_occupancy: usize,
    pub events: u64,
}

#[derive(Debug, Clone, Copy)]
enum Transmitter {
    Ap,
    Station,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    ChannelAccess,
    TxDone {
        tx: Transmitter,
        frame: Frame,
    },
    /// Frame from the wire reaching the AP buffer.
    AtAp(Frame),
    /// Frame from the AP reaching the wired server.
    AtServer(Frame),
    Rto {
        flow: usize,
        generation: u64,
    },
}

struct Scheduled {
    at: SimTime,
    order: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.order == other.order
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.order).cmp(&(self.at, self.order))
    }
}

#[derive(Debug, Clone, Default)]
struct FlowCounters {
    sent: u64,
    arrived: u64,
    dropped: u64,
    delivered: u64,
}

struct Simulator {
    cfg: SimConfig,
    queue: BinaryHeap<Scheduled>,
    next_order: u64,
    rng: SimRng,
    ap: ApBuffer,
    senders: Vec<TcpFlowState>,
    receivers: Vec<TcpReceiver>,
    counters: Vec<FlowCounters>,
    up: usize,
    channel_busy: bool,
    access_pending: bool,
    data_air: u64,
    ack_air: u64,
    wired: u64,
    warmup: SimTime,
    end: SimTime,
    events: u64,
}

impl Simulator {
    fn new(cfg: SimConfig) -> Self {
        let s = cfg.scenario;
        let up = s.up as usize;
        let flows = up + s.down as usize;
        let senders = (0..flows)
            .map(|f| {
                let dir = if f < up {
                    Direction::Up
                } else {
                    Direction::Down
                };
                TcpFlowState::new(dir, s.window)
            })
            .collect();
        Self {
            queue: BinaryHeap::new(),
            next_order: 0,
            rng: SimRng::new(cfg.seed),
            ap: ApBuffer::new(s.buffer as usize),
            senders,
            receivers: vec![TcpReceiver::new(); flows],
            counters: vec![FlowCounters::default(); flows],
            up,
            channel_busy: false,
            access_pending: false,
            data_air: cfg.airtime_ns(cfg.data_frame),
            ack_air: cfg.airtime_ns(cfg.ack_frame),
            wired: SimTime::from_secs(cfg.wired_delay).0.max(1),
            warmup: SimTime::from_secs(cfg.warmup),
            end: SimTime::from_secs(cfg.duration),
            events: 0,
            cfg,
        }
    }

    fn schedule(&mut self, at: SimTime, event: Event) {
        self.queue.push(Scheduled {
            at,
            order: self.next_order,
            event,
        });
        self.next_order += 1;
    }

    fn is_up(&self, flow: usize) -> bool {
        flow < self.up
    }

    fn contenders(&self) -> Vec<Station> {
        let mut c = Vec::with_capacity(self.up + 1);
        if !self.ap.is_empty() {
            c.push(Station::AccessPoint);
        }
        c.extend(
            (0..self.up)
                .filter(|&i| self.senders[i].can_send())
                .map(Station::Uplink),
        );
        c
    }

    /// Requests a contention round at `now` if the channel is idle and
    /// somebody is backlogged.
    fn kick_channel(&mut self, now: SimTime) {
        if self.channel_busy || self.access_pending {
            return;
        }
        let backlogged = !self.ap.is_empty() || (0..self.up).any(|i| self.senders[i].can_send());
        if backlogged {
            self.access_pending = true;
            self.schedule(now, Event::ChannelAccess);
        }
    }

    /// Schedules a timer event if the sender's deadline changed.
    fn sync_timer(&mut self, flow: usize, generation_before: u64) {
        let s = &self.senders[flow];
        if s.timer_generation != generation_before {
            if let Some(at) = s.rto_deadline {
                let generation = s.timer_generation;
                self.schedule(at, Event::Rto { flow, generation });
            }
        }
    }

    fn record_delivery(&mut self, flow: usize, now: SimTime, newly: u64) {
        let c = &mut self.counters[flow];
        c.arrived += 1;
        if now > self.warmup && now <= self.end {
            c.delivered += newly;
        }
    }

    /// Wired server of a downlink flow sends everything its window allows.
    fn pump_downlink(&mut self, flow: usize, now: SimTime) {
        let generation = self.senders[flow].timer_generation;
        while let Some((seq, _)) = self.senders[flow].take_packet(now) {
            self.counters[flow].sent += 1;
            let frame = Frame {
                flow,
                kind: FrameKind::Data,
                seq,
            };
            self.schedule(now.after(self.wired), Event::AtAp(frame));
        }
        self.sync_timer(flow, generation);
    }

    fn deliver_ack(&mut self, flow: usize, ack: u64, now: SimTime) -> Result<(), SimError> {
        let generation = self.senders[flow].timer_generation;
        if let Some(ev) = self.senders[flow].classify_ack(ack)? {
            self.senders[flow].on_event(ev, now)?;
        }
        self.sync_timer(flow, generation);
        Ok(())
    }

    fn handle(&mut self, now: SimTime, event: Event) -> Result<(), SimError> {
        match event {
            Event::ChannelAccess => {
                self.access_pending = false;
                if self.channel_busy {
                    return Ok(());
                }
                let contenders = self.contenders();
                if contenders.is_empty() {
                    return Ok(());
                }
                self.channel_busy = true;
                match mac_grant(&contenders, &mut self.rng)? {
                    Station::AccessPoint => {
                        let frame = self.ap.dequeue().ok_or(SimError::IdleGrant)?;
                        let air = match frame.kind {
                            FrameKind::Data => self.data_air,
                            FrameKind::Ack => self.ack_air,
                        };
                        self.schedule(
                            now.after(air),
                            Event::TxDone {
                                tx: Transmitter::Ap,
                                frame,
                            },
                        );
                    }
                    Station::Uplink(i) => {
                        let generation = self.senders[i].timer_generation;
                        let (seq, _) = self.senders[i]
                            .take_packet(now)
                            .ok_or(SimError::IdleGrant)?;
                        self.sync_timer(i, generation);
                        self.counters[i].sent += 1;
                        let frame = Frame {
                            flow: i,
                            kind: FrameKind::Data,
                            seq,
                        };
                        self.schedule(
                            now.after(self.data_air),
                            Event::TxDone {
                                tx: Transmitter::Station,
                                frame,
                            },
                        );
                    }
                }
            }
            Event::TxDone { tx, frame } => {
                match (tx, frame.kind) {
                    (Transmitter::Ap, FrameKind::Data) => {
                        let (ack, newly) = self.receivers[frame.flow].on_data(frame.seq);
                        self.record_delivery(frame.flow, now, newly);
                        let reply = Frame {
                            flow: frame.flow,
                            kind: FrameKind::Ack,
                            seq: ack,
                        };
                        // The receiving station answers right away; the
                        // channel stays busy until its ACK is on the air.
                        self.schedule(
                            now.after(self.ack_air),
                            Event::TxDone {
                                tx: Transmitter::Station,
                                frame: reply,
                            },
                        );
                        return Ok(());
                    }
                    (Transmitter::Ap, FrameKind::Ack) => {
                        self.deliver_ack(frame.flow, frame.seq, now)?;
                    }
                    (Transmitter::Station, _) => {
                        self.schedule(now.after(self.wired), Event::AtServer(frame));
                    }
                }
                self.channel_busy = false;
                self.kick_channel(now);
            }
            Event::AtServer(frame) => match frame.kind {
                FrameKind::Data => {
                    let (ack, newly) = self.receivers[frame.flow].on_data(frame.seq);
                    self.record_delivery(frame.flow, now, newly);
                    let reply = Frame {
                        flow: frame.flow,
                        kind: FrameKind::Ack,
                        seq: ack,
                    };
                    self.schedule(now.after(self.wired), Event::AtAp(reply));
                }
                FrameKind::Ack => {
                    self.deliver_ack(frame.flow, frame.seq, now)?;
                    self.pump_downlink(frame.flow, now);
                }
            },
            Event::AtAp(frame) => match self.ap.enqueue(frame) {
                Enqueue::Accepted => self.kick_channel(now),
                Enqueue::Dropped => {
                    if frame.kind == FrameKind::Data {
                        self.counters[frame.flow].dropped += 1;
                    }
                }
            },
            Event::Rto { flow, generation } => {
                let s = &self.senders[flow];
                if s.timer_generation != generation || s.rto_deadline != Some(now) {
                    return Ok(());
                }
                let before = s.timer_generation;
                self.senders[flow].on_event(TcpEvent::Timeout, now)?;
                self.sync_timer(flow, before);
                if self.is_up(flow) {
                    self.kick_channel(now);
                } else {
                    self.pump_downlink(flow, now);
                }
            }
        }
        Ok(())
    }

    fn in_flight_data(&self) -> Vec<u64> {
        let mut n = vec![0u64; self.senders.len()];
        let data_frames = self.queue.iter().filter_map(|s| match s.event {
            Event::TxDone { frame, .. } | Event::AtAp(frame) | Event::AtServer(frame) => {
                Some(frame)
            }
            _ => None,
        });
        for f in data_frames.chain(self.ap.iter().copied()) {
            if f.kind == FrameKind::Data {
                n[f.flow] += 1;
            }
        }
        n
    }

    fn run(mut self) -> Result<SimResult, SimError> {
        let start = SimTime::ZERO;
        for flow in self.up..self.senders.len() {
            self.pump_downlink(flow, start);
        }
        self.kick_channel(start);

        while let Some(next) = self.queue.peek() {
            if next.at > self.end {
                break;
            }
            let Scheduled { at, event, .. } = self.queue.pop().expect("peeked");
            self.events += 1;
            self.handle(at, event)?;
        }
        self.finish()
    }

    fn finish(self) -> Result<SimResult, SimError> {
        let in_flight = self.in_flight_data();
        let window = self.cfg.duration - self.cfg.warmup;
        let mut per_flow = Vec::with_capacity(self.senders.len());
        for (id, c) in self.counters.iter().enumerate() {
            if c.sent != c.arrived + c.dropped + in_flight[id] {
                return Err(SimError::Conservation {
                    flow: id,
                    sent: c.sent,
                    arrived: c.arrived,
                    dropped: c.dropped,
                    in_flight: in_flight[id],
                });
            }
            per_flow.push(FlowResult {
                id,
                direction: self.senders[id].direction,
                sent: c.sent,
                arrived: c.arrived,
                dropped: c.dropped,
                in_flight: in_flight[id],
                delivered: c.delivered,
                throughput: c.delivered as f64 / window,
            });
        }
        let total = |d: Direction| {
            per_flow
                .iter()
                .filter(|f| f.direction == d)
                .map(|f| f.throughput)
                .sum::<f64>()
        };
        let up_total = total(Direction::Up);
        let down_total = total(Direction::Down);
        let ratio_up_down = metrics::throughput_ratio(up_total, down_total)
            .expect("throughputs are finite and non-negative");
        let jain_index = ThroughputVector::new(per_flow.iter().map(|f| f.throughput).collect())
            .ok()
            .and_then(|v| metrics::jain_index(&v).ok());
        Ok(SimResult {
            per_flow,
            up_total,
            down_total,
            ratio_up_down,
            jain_index,
            ap_drops: self.ap.drops(),
            max_ap_occupancy: self.ap.max_occupancy(),
            events: self.events,
        })
    }
}

/// Runs one simulation to `cfg.duration`.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    Simulator::new(cfg.clone()).run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(up: u32, down: u32, buffer: u32, seed: u64, duration: f64) -> SimConfig {
        SimConfig {
            duration,
            ..SimConfig::new(ScenarioParams::new(up, down, 42, buffer), seed)
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(run_simulation(&cfg(0, 0, 10, 1, 1.0)).is_err());
        assert!(run_simulation(&cfg(1, 1, 0, 1, 1.0)).is_err());
        let mut c = cfg(1, 1, 10, 1, 1.0);
        c.warmup = 1.0;
        assert!(run_simulation(&c).is_err());
        let mut c = cfg(1, 1, 10, 1, 1.0);
        c.wireless_rate = 0.0;
        assert!(run_simulation(&c).is_err());
    }

    #[test]
    fn downlink_only_has_zero_ratio() {
        let r = run_simulation(&cfg(0, 1, 50, 1, 10.0)).unwrap();
        assert_eq!(r.up_total, 0.0);
        assert!(r.down_total > 0.0);
        assert_eq!(r.ratio_up_down, Ratio::Finite(0.0));
    }

    #[test]
    fn uplink_only_saturates_channel() {
        let c = cfg(1, 0, 500, 3, 20.0);
        let r = run_simulation(&c).unwrap();
        let service = c.wireless_rate / (f64::from(c.data_frame) * 8.0);
        assert!(r.up_total > 0.95 * service, "{} vs {}", r.up_total, service);
        assert_eq!(r.ratio_up_down, Ratio::Infinite);
        assert_eq!(r.jain_index, Some(1.0));
    }

    #[test]
    fn buffer_bound_holds() {
        for b in [1, 3, 10] {
            let r = run_simulation(&cfg(2, 2, b, 9, 5.0)).unwrap();
            assert!(r.max_ap_occupancy <= b as usize);
            assert!(r.ap_drops.total() > 0);
        }
    }

    #[test]
    fn warmup_shrinks_measurement_window() {
        let mut c = cfg(1, 1, 200, 4, 10.0);
        c.warmup = 5.0;
        let r = run_simulation(&c).unwrap();
        for f in &r.per_flow {
            assert!((f.throughput - f.delivered as f64 / 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let a = run_simulation(&cfg(2, 1, 12, 77, 5.0)).unwrap();
        let b = run_simulation(&cfg(2, 1, 12, 77, 5.0)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
