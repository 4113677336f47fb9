//! Wiring: build a runnable simulation from a scenario configuration.
//! The topology is the standard dumbbell — many sources, one bottleneck
//! link, one sink.

use std::path::PathBuf;

use crate::aqm::{Aqm, BlueState, DropTail, PiState, RedState};
use crate::config::{ControllerKind, ScenarioConfig};
use crate::metrics::{MetricsLog, RunSummary};
use crate::sam::SamAqm;
use crate::sim::{LinkParams, RngStreams, RunTotals, SimParams, Simulation};
use crate::svm::{load_model, ModelFileError};
use crate::transport::TrafficMix;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot load sam model {path}: {source}")]
    Model {
        path: PathBuf,
        source: ModelFileError,
    },
}

fn link_params(cfg: &ScenarioConfig) -> LinkParams {
    LinkParams {
        bandwidth_bps: cfg.bandwidth_bps,
        propagation_delay_s: cfg.link_delay_s,
        packet_bytes: cfg.packet_bytes,
    }
}

/// Instantiate the configured controller. Model files are loaded here, at
/// startup, never on the per-packet path.
pub fn build_aqm(cfg: &ScenarioConfig) -> Result<Box<dyn Aqm>, ScenarioError> {
    Ok(match cfg.controller {
        ControllerKind::DropTail => Box::new(DropTail),
        ControllerKind::Red => {
            let mut p = cfg.red;
            p.idle_service_time_s = link_params(cfg).service_time(cfg.packet_bytes);
            Box::new(RedState::new(p))
        }
        ControllerKind::Blue => Box::new(BlueState::new(cfg.blue)),
        ControllerKind::Pi => Box::new(PiState::new(cfg.pi)),
        ControllerKind::Sam => {
            let path = cfg
                .sam_model_path
                .as_ref()
                .expect("validated config has a model path");
            let model = load_model(path).map_err(|source| ScenarioError::Model {
                path: path.clone(),
                source,
            })?;
            Box::new(SamAqm::new(model))
        }
    })
}

pub fn build_simulation(cfg: &ScenarioConfig) -> Result<Simulation, ScenarioError> {
    let aqm = build_aqm(cfg)?;
    let flows = TrafficMix {
        n_ftp: cfg.n_ftp,
        n_http: cfg.n_http,
    }
    .build_flows();
    let params = SimParams {
        link: link_params(cfg),
        buffer_packets: cfg.buffer_packets,
        duration_s: cfg.duration_s,
        metrics_tick_s: cfg.metrics_tick_s,
        start_jitter_s: cfg.start_jitter_s,
        http: cfg.http,
    };
    Ok(Simulation::new(
        params,
        aqm,
        flows,
        &RngStreams::new(cfg.seed),
    ))
}

pub struct RunOutput {
    pub totals: RunTotals,
    pub summary: RunSummary,
    pub metrics: MetricsLog,
}

/// Build, run to the horizon, and summarize.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, ScenarioError> {
    let mut sim = build_simulation(cfg)?;
    let totals = sim.run();
    let metrics = sim.into_metrics();
    let summary = metrics.summary(cfg.controller.name());
    Ok(RunOutput {
        totals,
        summary,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{load_scenario, Preset};

    #[test]
    fn droptail_scenario_runs_and_conserves() {
        let overrides = vec![
            ("n_ftp".to_string(), "1".to_string()),
            ("n_http".to_string(), "0".to_string()),
            ("duration_s".to_string(), "10".to_string()),
            ("buffer_packets".to_string(), "50".to_string()),
            ("start_jitter_s".to_string(), "0".to_string()),
        ];
        let cfg = load_scenario(None, None, &overrides).unwrap();
        let out = run_scenario(&cfg).unwrap();
        assert!(out.summary.conservation_holds());
        assert!(out.totals.arrivals > 0);
        assert_eq!(out.metrics.to_csv().lines().count(), 11);
    }

    #[test]
    fn identical_seeds_reproduce_bit_identical_output() {
        let cfg = {
            let mut c = load_scenario(None, Some(Preset::Desk), &[]).unwrap();
            c.duration_s = 15.0;
            c.controller = ControllerKind::Red;
            c
        };
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(a.totals, b.totals);
        assert_eq!(a.metrics.to_csv(), b.metrics.to_csv());
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn different_seeds_differ() {
        let mut cfg = load_scenario(None, Some(Preset::Desk), &[]).unwrap();
        cfg.duration_s = 15.0;
        let a = run_scenario(&cfg).unwrap();
        cfg.seed = 2;
        let b = run_scenario(&cfg).unwrap();
        assert_ne!(a.metrics.to_csv(), b.metrics.to_csv());
    }

    #[test]
    fn missing_model_file_is_a_startup_error() {
        let mut cfg = ScenarioConfig::default();
        cfg.controller = ControllerKind::Sam;
        cfg.sam_model_path = Some(PathBuf::from("/nonexistent/model.svm"));
        assert!(matches!(
            build_simulation(&cfg),
            Err(ScenarioError::Model { .. })
        ));
    }
}
