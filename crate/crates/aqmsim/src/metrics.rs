//! Per-run accounting: event counters, dense per-second series, queue
//! averages (time-weighted and tick-mean), and the CSV / summary exports.

use std::io;
use std::path::Path;

use crate::fsutil::write_atomic;
use crate::sim::{QueueState, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventClass {
    Arrival,
    Departure,
    Drop,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Totals {
    pub arrivals: u64,
    pub departures: u64,
    pub drops: u64,
}

/// Counters for one [k, k+1) second of virtual time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SecondBucket {
    pub arrivals: u64,
    pub departures: u64,
    pub drops: u64,
    queue_sum: f64,
    queue_ticks: u64,
}

impl SecondBucket {
    /// Mean of the tick samples that fell into this second.
    pub fn queue_mean(&self) -> f64 {
        if self.queue_ticks == 0 {
            0.0
        } else {
            self.queue_sum / self.queue_ticks as f64
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct EndState {
    t: f64,
    occupancy: usize,
    in_service: usize,
}

#[derive(Debug, Clone)]
pub struct MetricsLog {
    buckets: Vec<SecondBucket>,
    totals: Totals,
    // occupancy trajectory integration for the time-weighted average
    last_occupancy: usize,
    last_change_t: f64,
    occupancy_integral: f64,
    // periodic samples for the plot series
    tick_samples: Vec<(f64, usize)>,
    end: Option<EndState>,
}

impl MetricsLog {
    pub fn new(duration_s: f64) -> MetricsLog {
        assert!(duration_s >= 0.0 && duration_s.is_finite());
        MetricsLog {
            buckets: vec![SecondBucket::default(); duration_s.ceil() as usize],
            totals: Totals::default(),
            last_occupancy: 0,
            last_change_t: 0.0,
            occupancy_integral: 0.0,
            tick_samples: Vec::new(),
            end: None,
        }
    }

    /// Bucket k covers [k, k+1). Events landing exactly on the run
    /// horizon fold into the last bucket.
    fn bucket_mut(&mut self, t: SimTime) -> Option<&mut SecondBucket> {
        if self.buckets.is_empty() {
            return None;
        }
        let idx = (t.as_secs().floor() as usize).min(self.buckets.len() - 1);
        Some(&mut self.buckets[idx])
    }

    pub fn on_event(&mut self, class: EventClass, t: SimTime) {
        let (total, field): (&mut u64, fn(&mut SecondBucket) -> &mut u64) = match class {
            EventClass::Arrival => (&mut self.totals.arrivals, |b| &mut b.arrivals),
            EventClass::Departure => (&mut self.totals.departures, |b| &mut b.departures),
            EventClass::Drop => (&mut self.totals.drops, |b| &mut b.drops),
        };
        *total += 1;
        if let Some(bucket) = self.bucket_mut(t) {
            *field(bucket) += 1;
        }
    }

    /// Advance the occupancy integral to `t`; call on every enqueue and
    /// dequeue with the post-change occupancy.
    pub fn sample_queue(&mut self, occupancy: usize, t: SimTime) {
        let t = t.as_secs();
        debug_assert!(t >= self.last_change_t, "time moved backwards");
        self.occupancy_integral += self.last_occupancy as f64 * (t - self.last_change_t);
        self.last_change_t = t;
        self.last_occupancy = occupancy;
    }

    /// Periodic sampling tick: records the plot series point and advances
    /// the integral.
    pub fn sample_tick(&mut self, occupancy: usize, t: SimTime) {
        self.sample_queue(occupancy, t);
        if let Some(bucket) = self.bucket_mut(t) {
            bucket.queue_sum += occupancy as f64;
            bucket.queue_ticks += 1;
        }
        self.tick_samples.push((t.as_secs(), occupancy));
    }

    /// Close the log at the end of the run.
    pub fn finalize(&mut self, queue: &QueueState, t_end: SimTime) {
        self.sample_queue(queue.occupancy, t_end);
        self.end = Some(EndState {
            t: t_end.as_secs(),
            occupancy: queue.occupancy,
            in_service: queue.in_service,
        });
    }

    fn end(&self) -> &EndState {
        self.end.as_ref().expect("metrics used before finalize()")
    }

    /// Time-weighted mean occupancy over the whole run.
    pub fn avg_queue(&self) -> f64 {
        let end = self.end();
        if end.t == 0.0 {
            0.0
        } else {
            self.occupancy_integral / end.t
        }
    }

    /// Plain mean of the periodic tick samples.
    pub fn tick_mean_queue(&self) -> f64 {
        if self.tick_samples.is_empty() {
            0.0
        } else {
            self.tick_samples
                .iter()
                .map(|(_, q)| *q as f64)
                .sum::<f64>()
                / self.tick_samples.len() as f64
        }
    }

    pub fn totals(&self) -> Totals {
        self.totals
    }

    pub fn buckets(&self) -> &[SecondBucket] {
        &self.buckets
    }

    pub fn tick_samples(&self) -> &[(f64, usize)] {
        &self.tick_samples
    }

    /// `t,arrivals,departures,drops,queue` — one row per second, counts
    /// as integers, queue (tick mean within the second) with exactly
    /// three decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,arrivals,departures,drops,queue\n");
        for (t, b) in self.buckets.iter().enumerate() {
            out.push_str(&format!(
                "{t},{},{},{},{:.3}\n",
                b.arrivals,
                b.departures,
                b.drops,
                b.queue_mean()
            ));
        }
        out
    }

    pub fn export_csv(&self, path: &Path) -> io::Result<()> {
        write_atomic(path, &self.to_csv())
    }

    pub fn summary(&self, controller: &str) -> RunSummary {
        let end = self.end();
        RunSummary {
            controller: controller.to_string(),
            total_arrivals: self.totals.arrivals,
            total_departures: self.totals.departures,
            total_drops: self.totals.drops,
            avg_queue: self.avg_queue(),
            tick_mean_queue: self.tick_mean_queue(),
            final_occupancy: end.occupancy,
            in_service: end.in_service,
        }
    }
}

/// One controller's run totals, shaped like a comparison-table row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub controller: String,
    pub total_arrivals: u64,
    pub total_departures: u64,
    pub total_drops: u64,
    /// Time-weighted mean occupancy.
    pub avg_queue: f64,
    /// Mean of the periodic tick samples, for comparison.
    pub tick_mean_queue: f64,
    pub final_occupancy: usize,
    pub in_service: usize,
}

impl RunSummary {
    pub const CSV_HEADER: &'static str = "controller,arrivals,departures,drops,avg_queue";

    /// Every packet is accounted for: arrivals equal departures plus
    /// drops plus whatever is still queued or on the wire.
    pub fn conservation_holds(&self) -> bool {
        self.total_arrivals
            == self.total_departures
                + self.total_drops
                + self.final_occupancy as u64
                + self.in_service as u64
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.3}",
            self.controller,
            self.total_arrivals,
            self.total_departures,
            self.total_drops,
            self.avg_queue
        )
    }
}

/// Aligned text table over summary rows.
pub fn format_summary_table(rows: &[RunSummary]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>12} {:>12} {:>12} {:>12}\n",
        "controller", "arrivals", "departures", "drops", "avg queue"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:>12} {:>12} {:>12} {:>12.3}\n",
            r.controller, r.total_arrivals, r.total_departures, r.total_drops, r.avg_queue
        ));
    }
    out
}
