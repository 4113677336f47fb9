//! Traffic sources closing the control loop: window-based bulk transfers
//! (FTP) and on-off request bursts (HTTP). Window growth follows slow
//! start / congestion avoidance; a detected drop halves the threshold and
//! restarts the window from one.

use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric};

use crate::sim::FlowId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Ftp,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    SlowStart,
    CongestionAvoidance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    /// Not yet started.
    Pending,
    /// Sending (FTP always, HTTP while a burst is open).
    Active,
    /// HTTP think time between bursts.
    Thinking,
}

pub const INITIAL_SSTHRESH: f64 = 20.0;
pub const INITIAL_RTT_ESTIMATE_S: f64 = 0.2;
const RTT_EWMA_WEIGHT: f64 = 0.125;

/// One traffic source.
#[derive(Debug, Clone)]
pub struct Flow {
    pub id: FlowId,
    pub kind: FlowKind,
    pub status: FlowStatus,
    /// Congestion window in packets, always >= 1.
    pub cwnd: f64,
    pub ssthresh: f64,
    pub phase: Phase,
    /// Packets sent in the current epoch and not yet acknowledged or
    /// written off.
    pub in_flight: u64,
    /// Smoothed round-trip estimate in seconds; also the loss-detection
    /// delay after a drop.
    pub rtt_estimate: f64,
    /// HTTP only: packets left to send in the current burst.
    pub remaining: u64,
    /// Bumped on every timeout reaction; packets from older epochs are
    /// stale and their ACKs / loss timers are ignored.
    pub epoch: u64,
}

impl Flow {
    pub fn new(id: FlowId, kind: FlowKind) -> Flow {
        Flow {
            id,
            kind,
            status: FlowStatus::Pending,
            cwnd: 1.0,
            ssthresh: INITIAL_SSTHRESH,
            phase: Phase::SlowStart,
            in_flight: 0,
            rtt_estimate: INITIAL_RTT_ESTIMATE_S,
            remaining: 0,
            epoch: 0,
        }
    }

    /// Window growth on an acknowledgment: +1 per ACK in slow start,
    /// +1/cwnd per ACK in congestion avoidance. Crossing ssthresh moves
    /// the flow into congestion avoidance.
    pub fn on_ack(&mut self) {
        match self.phase {
            Phase::SlowStart => {
                self.cwnd += 1.0;
                if self.cwnd >= self.ssthresh {
                    self.phase = Phase::CongestionAvoidance;
                }
            }
            Phase::CongestionAvoidance => {
                self.cwnd += 1.0 / self.cwnd;
            }
        }
    }

    /// Timeout reaction: ssthresh = max(cwnd/2, 2), window restarts from
    /// one in slow start. The outstanding window is written off (epoch
    /// bump), so late ACKs and further loss timers from the old window
    /// are ignored when they fire.
    pub fn on_loss(&mut self) {
        self.ssthresh = (self.cwnd / 2.0).max(2.0);
        self.cwnd = 1.0;
        self.phase = Phase::SlowStart;
        self.epoch += 1;
        self.in_flight = 0;
    }

    pub fn update_rtt(&mut self, sample_s: f64) {
        self.rtt_estimate =
            (1.0 - RTT_EWMA_WEIGHT) * self.rtt_estimate + RTT_EWMA_WEIGHT * sample_s;
    }

    /// Whether one more packet fits in the window right now.
    pub fn can_send(&self) -> bool {
        self.status == FlowStatus::Active
            && (self.in_flight + 1) as f64 <= self.cwnd
            && (self.kind == FlowKind::Ftp || self.remaining > 0)
    }

    /// Commit one send; returns the epoch to tag the packet with.
    pub fn note_send(&mut self) -> u64 {
        debug_assert!(self.can_send());
        self.in_flight += 1;
        if self.kind == FlowKind::Http {
            self.remaining -= 1;
        }
        self.epoch
    }

    /// HTTP: the open burst is fully sent and accounted for.
    pub fn burst_finished(&self) -> bool {
        self.kind == FlowKind::Http
            && self.status == FlowStatus::Active
            && self.remaining == 0
            && self.in_flight == 0
    }

    /// HTTP: open a new transfer burst of geometric size.
    pub fn start_burst(&mut self, size_mean_pkts: f64, rng: &mut impl Rng) {
        debug_assert_eq!(self.kind, FlowKind::Http);
        self.remaining = sample_burst_size(size_mean_pkts, rng);
        self.status = FlowStatus::Active;
    }

    /// HTTP: burst done; go idle and restart the window from one.
    pub fn end_burst(&mut self) {
        debug_assert_eq!(self.kind, FlowKind::Http);
        self.cwnd = 1.0;
        self.phase = Phase::SlowStart;
        self.status = FlowStatus::Thinking;
    }

    /// First activation at the flow's jittered start time.
    pub fn activate(&mut self, http_size_mean: f64, rng: &mut impl Rng) {
        match self.kind {
            FlowKind::Ftp => self.status = FlowStatus::Active,
            FlowKind::Http => self.start_burst(http_size_mean, rng),
        }
    }
}

/// Burst length in packets: geometric with the given mean, support 1, 2, ...
pub fn sample_burst_size(mean_pkts: f64, rng: &mut impl Rng) -> u64 {
    assert!(mean_pkts >= 1.0, "burst mean must be >= 1 packet");
    let geo = Geometric::new(1.0 / mean_pkts).expect("valid geometric parameter");
    geo.sample(rng) + 1
}

/// Think time in seconds: exponential with the given mean.
pub fn sample_idle_time(mean_s: f64, rng: &mut impl Rng) -> f64 {
    assert!(mean_s > 0.0, "idle mean must be positive");
    Exp::new(1.0 / mean_s)
        .expect("valid exponential rate")
        .sample(rng)
}

/// HTTP on-off model parameters.
#[derive(Debug, Clone, Copy)]
pub struct HttpParams {
    pub size_mean_pkts: f64,
    pub idle_mean_s: f64,
}

impl Default for HttpParams {
    fn default() -> Self {
        HttpParams {
            size_mean_pkts: 10.0,
            idle_mean_s: 1.0,
        }
    }
}

/// Offered load: how many sources of each kind share the bottleneck.
#[derive(Debug, Clone, Copy)]
pub struct TrafficMix {
    pub n_ftp: usize,
    pub n_http: usize,
}

impl TrafficMix {
    /// FTP flows first, then HTTP flows; ids are positional.
    pub fn build_flows(&self) -> Vec<Flow> {
        let mut flows = Vec::with_capacity(self.n_ftp + self.n_http);
        for i in 0..self.n_ftp {
            flows.push(Flow::new(FlowId(i), FlowKind::Ftp));
        }
        for i in 0..self.n_http {
            flows.push(Flow::new(FlowId(self.n_ftp + i), FlowKind::Http));
        }
        flows
    }
}
