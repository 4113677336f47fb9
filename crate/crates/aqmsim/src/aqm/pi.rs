//! Proportional-integral controller: the drop probability follows the
//! error between the sampled queue length and a reference level, updated
//! on a fixed sampling tick rather than per packet.

use rand::RngCore;

use crate::sim::{QueueState, SimTime};

use super::{bernoulli, Aqm, AqmDecision};

#[derive(Debug, Clone, Copy)]
pub struct PiParams {
    /// Gain on the current error (per packet).
    pub gain_a: f64,
    /// Gain on the previous error (per packet). Stability convention:
    /// gain_a > gain_b > 0.
    pub gain_b: f64,
    /// Target queue length in packets.
    pub q_ref: f64,
    pub sample_interval_s: f64,
}

impl Default for PiParams {
    fn default() -> Self {
        PiParams {
            gain_a: 0.0000182,
            gain_b: 0.0000181,
            q_ref: 200.0,
            sample_interval_s: 0.00625,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PiState {
    params: PiParams,
    p: f64,
    q_old: f64,
}

impl PiState {
    pub fn new(params: PiParams) -> PiState {
        assert!(
            params.gain_a > params.gain_b && params.gain_b > 0.0,
            "PI gains must satisfy a > b > 0"
        );
        assert!(params.q_ref >= 0.0);
        assert!(params.sample_interval_s > 0.0);
        PiState {
            params,
            p: 0.0,
            q_old: 0.0,
        }
    }

    pub fn params(&self) -> &PiParams {
        &self.params
    }

    pub fn drop_prob(&self) -> f64 {
        self.p
    }

    #[cfg(test)]
    pub(crate) fn set_state(&mut self, p: f64, q_old: f64) {
        self.p = p;
        self.q_old = q_old;
    }

    /// One sampling-tick step of the control law:
    /// p' = clamp01(p + a (q - q_ref) - b (q_old - q_ref)).
    pub fn update(&mut self, q: f64) {
        let e_now = q - self.params.q_ref;
        let e_old = self.q_old - self.params.q_ref;
        self.p = (self.p + self.params.gain_a * e_now - self.params.gain_b * e_old).clamp(0.0, 1.0);
        self.q_old = q;
    }
}

impl Aqm for PiState {
    fn name(&self) -> &'static str {
        "pi"
    }

    fn decide(&mut self, _queue: &QueueState, _now: SimTime, rng: &mut dyn RngCore) -> AqmDecision {
        if bernoulli(self.p, rng) {
            AqmDecision::Drop
        } else {
            AqmDecision::Enqueue
        }
    }

    fn on_tick(&mut self, queue: &QueueState, _now: SimTime) {
        self.update(queue.occupancy as f64);
    }

    fn tick_interval(&self) -> Option<f64> {
        Some(self.params.sample_interval_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn probability_stays_in_unit_interval(qs in proptest::collection::vec(0.0..2000.0f64, 0..300)) {
            let mut s = PiState::new(PiParams {
                gain_a: 0.01,
                gain_b: 0.005,
                q_ref: 100.0,
                sample_interval_s: 0.01,
            });
            for q in qs {
                s.update(q);
                prop_assert!((0.0..=1.0).contains(&s.drop_prob()));
            }
        }
    }

    #[test]
    fn update_arithmetic() {
        let mut s = PiState::new(PiParams {
            gain_a: 0.001,
            gain_b: 0.0005,
            q_ref: 200.0,
            sample_interval_s: 0.01,
        });
        s.set_state(0.01, 200.0);
        s.update(250.0);
        assert!((s.drop_prob() - 0.06).abs() < 1e-12);
    }

    #[test]
    fn zero_error_is_a_fixed_point() {
        let mut s = PiState::new(PiParams::default());
        s.set_state(0.37, 200.0);
        for _ in 0..1000 {
            s.update(200.0);
        }
        assert_eq!(s.drop_prob(), 0.37);
    }

    #[test]
    fn clamps_at_zero() {
        let mut s = PiState::new(PiParams::default());
        s.set_state(0.0, 200.0);
        s.update(0.0);
        assert_eq!(s.drop_prob(), 0.0);
    }

    #[test]
    fn clamps_at_one() {
        let mut s = PiState::new(PiParams {
            gain_a: 0.5,
            gain_b: 0.25,
            q_ref: 0.0,
            sample_interval_s: 0.01,
        });
        s.set_state(0.9, 0.0);
        s.update(1000.0);
        assert_eq!(s.drop_prob(), 1.0);
    }

    #[test]
    fn decide_extremes() {
        let q = QueueState {
            occupancy: 5,
            capacity: 100,
            in_service: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = PiState::new(PiParams::default());
        for _ in 0..1000 {
            assert_eq!(s.decide(&q, SimTime::ZERO, &mut rng), AqmDecision::Enqueue);
        }
        s.set_state(1.0, 0.0);
        for _ in 0..1000 {
            assert_eq!(s.decide(&q, SimTime::ZERO, &mut rng), AqmDecision::Drop);
        }
    }

    #[test]
    fn monte_carlo_rate_matches_held_probability() {
        let q = QueueState {
            occupancy: 5,
            capacity: 100,
            in_service: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut s = PiState::new(PiParams::default());
        s.set_state(0.1, 0.0);
        let n = 100_000;
        let drops = (0..n)
            .filter(|_| s.decide(&q, SimTime::ZERO, &mut rng) == AqmDecision::Drop)
            .count();
        let rate = drops as f64 / n as f64;
        assert!(
            (rate - 0.1).abs() < 0.005,
            "empirical rate {rate} not within 0.1 +/- 0.005"
        );
    }
}
