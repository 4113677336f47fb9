//! Scenario and training configuration: flat `key = value` files with
//! `#` comments, two built-in presets, and command-line overrides that
//! always win. Unknown keys are rejected by name.

use std::io;
use std::path::{Path, PathBuf};

use crate::aqm::{BlueParams, PiParams, RedParams};
use crate::sam::{LabelPolicy, PolicyError};
use crate::svm::TrainConfig;
use crate::transport::HttpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    DropTail,
    Red,
    Blue,
    Pi,
    Sam,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        ControllerKind::DropTail,
        ControllerKind::Red,
        ControllerKind::Blue,
        ControllerKind::Pi,
        ControllerKind::Sam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::DropTail => "droptail",
            ControllerKind::Red => "red",
            ControllerKind::Blue => "blue",
            ControllerKind::Pi => "pi",
            ControllerKind::Sam => "sam",
        }
    }

    pub fn parse(s: &str) -> Option<ControllerKind> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub bandwidth_bps: f64,
    pub link_delay_s: f64,
    pub buffer_packets: usize,
    pub packet_bytes: u32,
    pub n_http: usize,
    pub n_ftp: usize,
    pub duration_s: f64,
    pub seed: u64,
    pub start_jitter_s: f64,
    pub metrics_tick_s: f64,
    pub controller: ControllerKind,
    pub red: RedParams,
    pub blue: BlueParams,
    pub pi: PiParams,
    pub http: HttpParams,
    pub sam_model_path: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            bandwidth_bps: 1_000_000.0,
            link_delay_s: 0.010,
            buffer_packets: 800,
            packet_bytes: 500,
            n_http: 200,
            n_ftp: 100,
            duration_s: 180.0,
            seed: 1,
            start_jitter_s: 10.0,
            metrics_tick_s: 0.1,
            controller: ControllerKind::DropTail,
            red: RedParams::default(),
            blue: BlueParams::default(),
            pi: PiParams::default(),
            http: HttpParams::default(),
            sam_model_path: None,
        }
    }
}

/// Canned scenario shapes: `paper` is the full 300-flow, 180 s load;
/// `desk` is a small CI-friendly variant with thresholds rescaled to its
/// 200-packet buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Paper,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Preset> {
        match s {
            "desk" => Some(Preset::Desk),
            "paper" => Some(Preset::Paper),
            _ => None,
        }
    }

    pub fn apply(self, cfg: &mut ScenarioConfig) {
        match self {
            Preset::Paper => {
                // the defaults
            }
            Preset::Desk => {
                cfg.buffer_packets = 200;
                cfg.n_http = 20;
                cfg.n_ftp = 10;
                cfg.duration_s = 60.0;
                cfg.red.min_th = 50.0;
                cfg.red.max_th = 150.0;
                cfg.pi.q_ref = 50.0;
                // The default gains suit the full-scale link; the desk
                // link moves ~15x fewer packets per sample, so the loop
                // needs proportionally stronger gains to converge inside
                // the short run.
                cfg.pi.gain_a = 0.0004;
                cfg.pi.gain_b = 0.00039;
                // Finer marking steps: p_m only decays on full drains,
                // which are rare at this load, so a coarse increment
                // would park p_m at the start-up transient's peak.
                cfg.blue.increment = 0.0025;
                cfg.blue.decrement = 0.00025;
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: expected `key = value`")]
    Malformed { path: PathBuf, line: usize },
    #[error("unknown configuration key `{key}`")]
    UnknownKey { key: String },
    #[error("invalid value `{value}` for `{key}`: expected {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("missing required key `{key}`: {why}")]
    MissingKey {
        key: &'static str,
        why: &'static str,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("bad override `{0}`: expected KEY=VALUE")]
    BadOverride(String),
}

impl From<(&str, &str, PolicyError)> for ConfigError {
    fn from((key, value, _): (&str, &str, PolicyError)) -> Self {
        ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "a valid labeling-policy parameter",
        }
    }
}

/// `KEY=VALUE` as passed to `--set`.
pub fn parse_override(s: &str) -> Result<(String, String), ConfigError> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(ConfigError::BadOverride(s.to_string())),
    }
}

fn read_kv_file(path: &Path) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
            });
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn parse_pos_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = parse_num(key, value, "a positive number")?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "a positive number",
        })
    }
}

fn parse_nonneg_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = parse_num(key, value, "a non-negative number")?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "a non-negative number",
        })
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "a boolean (true/false)",
        }),
    }
}

/// Apply one scenario key. Unknown keys are an error naming the key.
pub fn apply_scenario_key(
    cfg: &mut ScenarioConfig,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    match key {
        "bandwidth_bps" => cfg.bandwidth_bps = parse_pos_f64(key, value)?,
        "link_delay_s" => cfg.link_delay_s = parse_nonneg_f64(key, value)?,
        "buffer_packets" => {
            cfg.buffer_packets = parse_num(key, value, "a positive integer")?;
            if cfg.buffer_packets == 0 {
                return Err(ConfigError::BadValue {
                    key: key.to_string(),
                    value: value.to_string(),
                    expected: "a positive integer",
                });
            }
        }
        "packet_bytes" => {
            cfg.packet_bytes = parse_num(key, value, "a positive integer")?;
            if cfg.packet_bytes == 0 {
                return Err(ConfigError::BadValue {
                    key: key.to_string(),
                    value: value.to_string(),
                    expected: "a positive integer",
                });
            }
        }
        "n_http" => cfg.n_http = parse_num(key, value, "a non-negative integer")?,
        "n_ftp" => cfg.n_ftp = parse_num(key, value, "a non-negative integer")?,
        "duration_s" => cfg.duration_s = parse_pos_f64(key, value)?,
        "seed" => cfg.seed = parse_num(key, value, "an unsigned integer")?,
        "start_jitter_s" => cfg.start_jitter_s = parse_nonneg_f64(key, value)?,
        "metrics_tick_s" => cfg.metrics_tick_s = parse_pos_f64(key, value)?,
        "controller" => {
            cfg.controller = ControllerKind::parse(value).ok_or_else(|| ConfigError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
                expected: "one of droptail, red, blue, pi, sam",
            })?
        }
        "http.size_mean_pkts" => cfg.http.size_mean_pkts = parse_pos_f64(key, value)?,
        "http.idle_mean_s" => cfg.http.idle_mean_s = parse_pos_f64(key, value)?,
        "red.w_q" => cfg.red.w_q = parse_pos_f64(key, value)?,
        "red.min_th" => cfg.red.min_th = parse_nonneg_f64(key, value)?,
        "red.max_th" => cfg.red.max_th = parse_pos_f64(key, value)?,
        "red.max_p" => cfg.red.max_p = parse_pos_f64(key, value)?,
        "red.count_correction" => cfg.red.count_correction = parse_bool(key, value)?,
        "blue.d1" => cfg.blue.increment = parse_pos_f64(key, value)?,
        "blue.d2" => cfg.blue.decrement = parse_pos_f64(key, value)?,
        "blue.freeze_s" => cfg.blue.freeze_time_s = parse_pos_f64(key, value)?,
        "pi.a" => cfg.pi.gain_a = parse_pos_f64(key, value)?,
        "pi.b" => cfg.pi.gain_b = parse_pos_f64(key, value)?,
        "pi.q_ref" => cfg.pi.q_ref = parse_nonneg_f64(key, value)?,
        "pi.sample_interval_s" => cfg.pi.sample_interval_s = parse_pos_f64(key, value)?,
        "sam.model_path" => cfg.sam_model_path = Some(PathBuf::from(value)),
        _ => {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
            })
        }
    }
    Ok(())
}

pub fn validate_scenario(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    if cfg.controller == ControllerKind::Sam && cfg.sam_model_path.is_none() {
        return Err(ConfigError::MissingKey {
            key: "sam.model_path",
            why: "the sam controller needs a trained model file",
        });
    }
    if cfg.controller == ControllerKind::Red {
        if cfg.red.min_th >= cfg.red.max_th {
            return Err(ConfigError::Invalid(format!(
                "red.min_th ({}) must be below red.max_th ({})",
                cfg.red.min_th, cfg.red.max_th
            )));
        }
        if cfg.red.max_th > cfg.buffer_packets as f64 {
            return Err(ConfigError::Invalid(format!(
                "red.max_th ({}) must not exceed buffer_packets ({})",
                cfg.red.max_th, cfg.buffer_packets
            )));
        }
        if cfg.red.w_q > 1.0 || cfg.red.max_p > 1.0 {
            return Err(ConfigError::Invalid(
                "red.w_q and red.max_p must lie in (0, 1]".to_string(),
            ));
        }
    }
    if cfg.controller == ControllerKind::Pi && cfg.pi.gain_a <= cfg.pi.gain_b {
        return Err(ConfigError::Invalid(format!(
            "pi.a ({}) must exceed pi.b ({})",
            cfg.pi.gain_a, cfg.pi.gain_b
        )));
    }
    if cfg.controller == ControllerKind::Blue
        && (cfg.blue.increment > 1.0 || cfg.blue.decrement > 1.0)
    {
        return Err(ConfigError::Invalid(
            "blue.d1 and blue.d2 must lie in (0, 1]".to_string(),
        ));
    }
    if cfg.http.size_mean_pkts < 1.0 {
        return Err(ConfigError::Invalid(
            "http.size_mean_pkts must be at least 1".to_string(),
        ));
    }
    Ok(())
}

/// Assemble a scenario: defaults, then preset, then file, then overrides.
pub fn load_scenario(
    file: Option<&Path>,
    preset: Option<Preset>,
    overrides: &[(String, String)],
) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    if let Some(p) = preset {
        p.apply(&mut cfg);
    }
    if let Some(path) = file {
        for (_line, key, value) in read_kv_file(path)? {
            apply_scenario_key(&mut cfg, &key, &value)?;
        }
    }
    for (key, value) in overrides {
        apply_scenario_key(&mut cfg, key, value)?;
    }
    validate_scenario(&cfg)?;
    Ok(cfg)
}

/// Hyperparameters for `train` and `gen-dataset`.
#[derive(Debug, Clone)]
pub struct TrainSpec {
    pub svm: TrainConfig,
    pub policy: LabelPolicy,
    pub n: usize,
    pub seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            svm: TrainConfig::default(),
            policy: LabelPolicy::default(),
            n: 2000,
            seed: 1,
        }
    }
}

/// Parse training keys from overrides. Raw policy parameters are
/// collected first and validated as a whole.
pub fn load_train_spec(overrides: &[(String, String)]) -> Result<TrainSpec, ConfigError> {
    let mut spec = TrainSpec::default();
    let default_policy = LabelPolicy::default();
    let mut weights = *default_policy.weights();
    let mut theta = default_policy.theta;
    let mut trend_gain = default_policy.trend_gain;

    for (key, value) in overrides {
        match key.as_str() {
            "train.c" => spec.svm.c = parse_pos_f64(key, value)?,
            "train.gamma" => spec.svm.gamma = parse_pos_f64(key, value)?,
            "train.tol" => spec.svm.tol = parse_pos_f64(key, value)?,
            "train.max_passes" => {
                spec.svm.max_passes = parse_num(key, value, "a positive integer")?
            }
            "train.n" => spec.n = parse_num(key, value, "an integer >= 2")?,
            "seed" => spec.seed = parse_num(key, value, "an unsigned integer")?,
            "policy.theta" => theta = parse_num(key, value, "a number in (0, 1)")?,
            "policy.trend_gain" => trend_gain = parse_nonneg_f64(key, value)?,
            "policy.weights" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 5 {
                    return Err(ConfigError::BadValue {
                        key: key.clone(),
                        value: value.clone(),
                        expected: "five comma-separated non-negative numbers",
                    });
                }
                for (i, p) in parts.iter().enumerate() {
                    weights[i] = parse_nonneg_f64(key, p)?;
                }
            }
            // Reserved for alternative labeling sources; only the
            // deterministic policy ships.
            "label_mode" => {
                if value != "policy" {
                    return Err(ConfigError::BadValue {
                        key: key.clone(),
                        value: value.clone(),
                        expected: "`policy` (the only implemented mode)",
                    });
                }
            }
            _ => return Err(ConfigError::UnknownKey { key: key.clone() }),
        }
    }

    spec.policy = LabelPolicy::new(weights, theta, trend_gain)
        .map_err(|e| ConfigError::Invalid(format!("labeling policy: {e}")))?;
    Ok(spec)
}
