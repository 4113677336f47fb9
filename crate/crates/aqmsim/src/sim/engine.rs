//! The event loop: a binary heap of (time, seq)-ordered events driving
//! the bottleneck queue, the traffic sources, and the AQM controller.

use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::aqm::{Aqm, AqmDecision};
use crate::metrics::{EventClass, MetricsLog};
use crate::transport::{sample_idle_time, Flow, HttpParams};

use super::{
    EventHandle, EventKind, FlowId, Packet, QueueState, RngStreams, SimTime, StreamId, Tick, Timer,
};

/// Bottleneck link parameters.
#[derive(Debug, Clone, Copy)]
pub struct LinkParams {
    pub bandwidth_bps: f64,
    pub propagation_delay_s: f64,
    pub packet_bytes: u32,
}

impl LinkParams {
    /// Serialization delay for one packet: size * 8 / bandwidth.
    pub fn service_time(&self, size_bytes: u32) -> f64 {
        f64::from(size_bytes) * 8.0 / self.bandwidth_bps
    }
}

/// Cumulative counters returned by the run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunTotals {
    pub arrivals: u64,
    pub departures: u64,
    pub drops: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SimParams {
    pub link: LinkParams,
    pub buffer_packets: usize,
    pub duration_s: f64,
    pub metrics_tick_s: f64,
    /// Flow start times are jittered uniformly over [0, this).
    pub start_jitter_s: f64,
    pub http: HttpParams,
}

struct Scheduled {
    time: SimTime,
    seq: u64,
    kind: EventKind,
}

// Min-heap ordering on (time, seq); seq is unique so the order is total.
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}

impl Eq for Scheduled {}

/// FIFO buffer plus the single-packet service slot behind it.
struct BottleneckQueue {
    buf: VecDeque<Packet>,
    capacity: usize,
    in_service: Option<Packet>,
}

impl BottleneckQueue {
    fn new(capacity: usize) -> BottleneckQueue {
        assert!(capacity > 0, "buffer capacity must be positive");
        BottleneckQueue {
            buf: VecDeque::new(),
            capacity,
            in_service: None,
        }
    }

    fn occupancy(&self) -> usize {
        self.buf.len()
    }

    fn is_full(&self) -> bool {
        self.buf.len() >= self.capacity
    }

    fn link_idle(&self) -> bool {
        self.in_service.is_none()
    }

    fn state(&self) -> QueueState {
        QueueState {
            occupancy: self.buf.len(),
            capacity: self.capacity,
            in_service: usize::from(self.in_service.is_some()),
        }
    }

    fn push(&mut self, pkt: Packet) {
        debug_assert!(!self.is_full(), "enqueue into a full buffer");
        self.buf.push_back(pkt);
    }

    /// Move the head-of-line packet onto the wire.
    fn begin_service(&mut self) -> Option<(u64, u32)> {
        debug_assert!(self.link_idle());
        let pkt = self.buf.pop_front()?;
        let info = (pkt.id, pkt.size);
        self.in_service = Some(pkt);
        Some(info)
    }

    fn complete_service(&mut self) -> Option<Packet> {
        self.in_service.take()
    }
}

/// One self-contained simulation instance. Single-threaded by
/// construction; independent instances share nothing mutable.
pub struct Simulation {
    clock: SimTime,
    next_seq: u64,
    next_packet_id: u64,
    heap: BinaryHeap<Scheduled>,
    link: LinkParams,
    queue: BottleneckQueue,
    aqm: Box<dyn Aqm>,
    controller_tick_s: Option<f64>,
    flows: Vec<Flow>,
    flow_rngs: Vec<ChaCha8Rng>,
    aqm_rng: ChaCha8Rng,
    metrics: MetricsLog,
    totals: RunTotals,
    duration_s: f64,
    metrics_tick_s: f64,
    start_jitter_s: f64,
    http: HttpParams,
    primed: bool,
}

impl Simulation {
    pub fn new(
        params: SimParams,
        aqm: Box<dyn Aqm>,
        flows: Vec<Flow>,
        streams: &RngStreams,
    ) -> Simulation {
        assert!(params.duration_s >= 0.0);
        assert!(params.metrics_tick_s > 0.0);
        let flow_rngs = (0..flows.len())
            .map(|i| streams.stream(StreamId::Flow(i as u32)))
            .collect();
        let controller_tick_s = aqm.tick_interval();
        Simulation {
            clock: SimTime::ZERO,
            next_seq: 0,
            next_packet_id: 0,
            heap: BinaryHeap::new(),
            link: params.link,
            queue: BottleneckQueue::new(params.buffer_packets),
            aqm,
            controller_tick_s,
            flows,
            flow_rngs,
            aqm_rng: streams.stream(StreamId::Aqm),
            metrics: MetricsLog::new(params.duration_s),
            totals: RunTotals::default(),
            duration_s: params.duration_s,
            metrics_tick_s: params.metrics_tick_s,
            start_jitter_s: params.start_jitter_s,
            http: params.http,
            primed: false,
        }
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn totals(&self) -> RunTotals {
        self.totals
    }

    pub fn queue_state(&self) -> QueueState {
        self.queue.state()
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn metrics(&self) -> &MetricsLog {
        &self.metrics
    }

    pub fn into_metrics(self) -> MetricsLog {
        self.metrics
    }

    /// Queue an event. Scheduling into the past is a programming error.
    pub fn schedule(&mut self, time: SimTime, kind: EventKind) -> EventHandle {
        assert!(
            time >= self.clock,
            "event scheduled in the past: {time} < {}",
            self.clock
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Scheduled { time, seq, kind });
        EventHandle(seq)
    }

    fn schedule_in(&mut self, dt: f64, kind: EventKind) -> EventHandle {
        self.schedule(self.clock.after(dt), kind)
    }

    /// Schedule sampling ticks and the jittered flow starts.
    pub fn prime(&mut self) {
        if self.primed {
            return;
        }
        self.primed = true;
        self.schedule(SimTime::ZERO, EventKind::SamplingTick(Tick::Metrics));
        if let Some(dt) = self.controller_tick_s {
            self.schedule(
                SimTime::from_secs(dt),
                EventKind::SamplingTick(Tick::Controller),
            );
        }
        for i in 0..self.flows.len() {
            let jitter = if self.start_jitter_s > 0.0 {
                self.flow_rngs[i].gen_range(0.0..self.start_jitter_s)
            } else {
                0.0
            };
            self.schedule(
                SimTime::from_secs(jitter),
                EventKind::TimerFire(Timer::FlowStart { flow: FlowId(i) }),
            );
        }
    }

    /// Dispatch everything with time <= t_end, then advance the clock to
    /// t_end. Returns the cumulative totals.
    pub fn run_until(&mut self, t_end: SimTime) -> RunTotals {
        assert!(t_end >= self.clock, "cannot run backwards");
        while let Some(top) = self.heap.peek() {
            if top.time > t_end {
                break;
            }
            let ev = self.heap.pop().expect("peeked event vanished");
            debug_assert!(ev.time >= self.clock, "clock would move backwards");
            self.clock = ev.time;
            self.dispatch(ev.kind);
        }
        self.clock = t_end;
        self.totals
    }

    /// Full run over the configured horizon; finalizes the metrics log.
    pub fn run(&mut self) -> RunTotals {
        self.prime();
        let end = SimTime::from_secs(self.duration_s);
        let totals = self.run_until(end);
        let qs = self.queue.state();
        self.metrics.finalize(&qs, end);
        totals
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::PacketArrival { flow, epoch } => self.on_packet_arrival(flow, epoch),
            EventKind::ServiceComplete => self.on_service_complete(),
            EventKind::TimerFire(timer) => self.on_timer(timer),
            EventKind::SamplingTick(tick) => self.on_sampling_tick(tick),
        }
    }

    fn on_packet_arrival(&mut self, flow: FlowId, epoch: u64) {
        let now = self.clock;
        self.totals.arrivals += 1;
        self.metrics.on_event(EventClass::Arrival, now);

        let qs = self.queue.state();
        let decision = self.aqm.decide(&qs, now, &mut self.aqm_rng);
        // Physical bound: a full buffer drops no matter what the
        // controller said (RED's lagging average can ask for it).
        let forced = decision == AqmDecision::Enqueue && self.queue.is_full();
        if forced {
            self.aqm.on_forced_drop(now);
        }

        if decision == AqmDecision::Drop || forced {
            self.totals.drops += 1;
            self.metrics.on_event(EventClass::Drop, now);
            let rtt = self.flows[flow.0].rtt_estimate;
            self.schedule_in(rtt, EventKind::TimerFire(Timer::LossDetect { flow, epoch }));
        } else {
            let pkt = Packet {
                id: self.next_packet_id,
                flow,
                size: self.link.packet_bytes,
                enqueue_time: Some(now),
                epoch,
            };
            self.next_packet_id += 1;
            self.queue.push(pkt);
            self.metrics.sample_queue(self.queue.occupancy(), now);
            if self.queue.link_idle() {
                self.transmit_next();
            }
        }
    }

    /// Pull the next packet onto the wire; notifies the controller when
    /// the queue has drained and the link goes idle. Returns the id of
    /// the packet now in service.
    pub fn transmit_next(&mut self) -> Option<u64> {
        debug_assert!(self.queue.link_idle(), "transmit while busy");
        let now = self.clock;
        match self.queue.begin_service() {
            Some((id, size)) => {
                self.metrics.sample_queue(self.queue.occupancy(), now);
                let st = self.link.service_time(size);
                self.schedule_in(st, EventKind::ServiceComplete);
                Some(id)
            }
            None => {
                self.aqm.on_idle(now);
                None
            }
        }
    }

    fn on_service_complete(&mut self) {
        let pkt = self
            .queue
            .complete_service()
            .expect("service completion with idle link");
        self.totals.departures += 1;
        self.metrics.on_event(EventClass::Departure, self.clock);

        // Delivery to the sink and the returning ACK each take one
        // propagation delay; the reverse path is uncontended.
        let sent_at = pkt
            .enqueue_time
            .expect("serviced packet was never enqueued");
        self.schedule_in(
            2.0 * self.link.propagation_delay_s,
            EventKind::TimerFire(Timer::AckArrival {
                flow: pkt.flow,
                epoch: pkt.epoch,
                sent_at,
            }),
        );
        self.transmit_next();
    }

    fn on_timer(&mut self, timer: Timer) {
        match timer {
            Timer::FlowStart { flow } => {
                let (f, rng) = (&mut self.flows[flow.0], &mut self.flow_rngs[flow.0]);
                f.activate(self.http.size_mean_pkts, rng);
                self.pump_flow(flow);
            }
            Timer::AckArrival {
                flow,
                epoch,
                sent_at,
            } => {
                let f = &mut self.flows[flow.0];
                if f.epoch != epoch || f.in_flight == 0 {
                    return; // stale: that window was written off
                }
                f.in_flight -= 1;
                let sample = self.clock.as_secs() - sent_at.as_secs();
                f.update_rtt(sample);
                f.on_ack();
                self.pump_flow(flow);
                self.finish_burst_if_done(flow);
            }
            Timer::LossDetect { flow, epoch } => {
                let f = &mut self.flows[flow.0];
                if f.epoch != epoch {
                    return; // already collapsed once for this window
                }
                f.on_loss();
                self.pump_flow(flow);
                self.finish_burst_if_done(flow);
            }
            Timer::HttpRestart { flow } => {
                let (f, rng) = (&mut self.flows[flow.0], &mut self.flow_rngs[flow.0]);
                f.start_burst(self.http.size_mean_pkts, rng);
                self.pump_flow(flow);
            }
        }
    }

    /// Inject packets while the window has room.
    fn pump_flow(&mut self, flow: FlowId) {
        while self.flows[flow.0].can_send() {
            let epoch = self.flows[flow.0].note_send();
            self.schedule_in(0.0, EventKind::PacketArrival { flow, epoch });
        }
    }

    fn finish_burst_if_done(&mut self, flow: FlowId) {
        if self.flows[flow.0].burst_finished() {
            self.flows[flow.0].end_burst();
            let idle = sample_idle_time(self.http.idle_mean_s, &mut self.flow_rngs[flow.0]);
            self.schedule_in(idle, EventKind::TimerFire(Timer::HttpRestart { flow }));
        }
    }

    fn on_sampling_tick(&mut self, tick: Tick) {
        match tick {
            Tick::Metrics => {
                self.metrics.sample_tick(self.queue.occupancy(), self.clock);
                if self.primed {
                    self.schedule_in(self.metrics_tick_s, EventKind::SamplingTick(Tick::Metrics));
                }
            }
            Tick::Controller => {
                let qs = self.queue.state();
                self.aqm.on_tick(&qs, self.clock);
                if self.primed {
                    if let Some(dt) = self.controller_tick_s {
                        self.schedule_in(dt, EventKind::SamplingTick(Tick::Controller));
                    }
                }
            }
        }
    }
}
