//! Drop-tail FIFO buffer at the access point.

use std::collections::VecDeque;

use super::{Frame, FrameKind};

/// Counters split by frame class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub data: u64,
    pub ack: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.data + self.ack
    }

    fn bump(&mut self, kind: FrameKind) {
        match kind {
            FrameKind::Data => self.data += 1,
            FrameKind::Ack => self.ack += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enqueue {
    Accepted,
    Dropped,
}

/// Shared wireless-side queue holding downlink data and uplink ACKs.
#[derive(Debug, Clone)]
pub struct ApBuffer {
    capacity: usize,
    queue: VecDeque<Frame>,
    drops: ClassCounts,
    max_occupancy: usize,
}

impl ApBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            queue: VecDeque::with_capacity(capacity.min(4096)),
            drops: ClassCounts::default(),
            max_occupancy: 0,
        }
    }

    pub fn enqueue(&mut self, frame: Frame) -> Enqueue {
        if self.queue.len() >= self.capacity {
            self.drops.bump(frame.kind);
            return Enqueue::Dropped;
        }
        self.queue.push_back(frame);
        self.max_occupancy = self.max_occupancy.max(self.queue.len());
        Enqueue::Accepted
    }

    pub fn dequeue(&mut self) -> Option<Frame> {
        self.queue.pop_front()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn drops(&self) -> ClassCounts {
        self.drops
    }

    pub fn max_occupancy(&self) -> usize {
        self.max_occupancy
    }

    pub fn iter(&self) -> impl Iterator<Item = &Frame> {
        self.queue.iter()
    }
}
