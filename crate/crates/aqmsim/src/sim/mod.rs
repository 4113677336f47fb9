//! Discrete-event core: virtual clock, ordered event queue, seeded random
//! streams, and the bottleneck link with its AQM-fronted queue.

mod engine;
mod rng;

pub use engine::{LinkParams, RunTotals, SimParams, Simulation};
pub use rng::{RngStreams, StreamId};

/// Virtual time in seconds. Starts at zero and never decreases across
/// dispatched events.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    /// Wraps a finite, non-negative number of seconds.
    pub fn from_secs(secs: f64) -> SimTime {
        assert!(
            secs.is_finite() && secs >= 0.0,
            "invalid simulation time: {secs}"
        );
        SimTime(secs)
    }

    pub fn as_secs(self) -> f64 {
        self.0
    }

    /// The instant `dt` seconds after this one.
    pub fn after(self, dt: f64) -> SimTime {
        SimTime::from_secs(self.0 + dt)
    }

    pub(crate) fn total_cmp(&self, other: &SimTime) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::fmt::Display for SimTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}s", self.0)
    }
}

/// Index of a traffic source within a simulation instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlowId(pub usize);

/// A data packet traversing the bottleneck.
#[derive(Debug, Clone)]
pub struct Packet {
    pub id: u64,
    pub flow: FlowId,
    /// Size in bytes; always positive.
    pub size: u32,
    /// Set if and only if the packet was accepted into the buffer.
    pub enqueue_time: Option<SimTime>,
    /// Sender's retransmission epoch at send time; acknowledgments and
    /// loss timers from an older epoch are ignored by the source.
    pub epoch: u64,
}

/// Snapshot of the bottleneck buffer as seen by AQM controllers.
#[derive(Debug, Clone, Copy)]
pub struct QueueState {
    /// Packets waiting in the buffer (excludes the one in service).
    pub occupancy: usize,
    pub capacity: usize,
    /// 0 or 1 packets currently on the wire.
    pub in_service: usize,
}

impl QueueState {
    /// occupancy / capacity, in [0, 1].
    pub fn utilization(&self) -> f64 {
        self.occupancy as f64 / self.capacity as f64
    }

    pub fn is_full(&self) -> bool {
        self.occupancy >= self.capacity
    }
}

/// What the dispatcher does when an event fires.
#[derive(Debug, Clone)]
pub enum EventKind {
    /// A packet from `flow` reaches the bottleneck queue.
    PacketArrival {
        flow: FlowId,
        epoch: u64,
    },
    /// The link finished serializing the packet in service.
    ServiceComplete,
    TimerFire(Timer),
    SamplingTick(Tick),
}

/// Flow-level timers.
#[derive(Debug, Clone)]
pub enum Timer {
    /// Jittered activation of a traffic source.
    FlowStart { flow: FlowId },
    /// The acknowledgment for a packet sent at `sent_at` reaches the source.
    AckArrival {
        flow: FlowId,
        epoch: u64,
        sent_at: SimTime,
    },
    /// The source notices a drop (timeout abstraction).
    LossDetect { flow: FlowId, epoch: u64 },
    /// An idle HTTP source begins its next transfer burst.
    HttpRestart { flow: FlowId },
}

/// Periodic sampling consumers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tick {
    /// Queue-length sampling for the metrics series.
    Metrics,
    /// Controller sampling (the PI update law).
    Controller,
}

/// Identity of a scheduled event: its insertion sequence number, which is
/// also the tie-breaker among simultaneous events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventHandle(pub u64);
