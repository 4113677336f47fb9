//! Deterministic discrete-event simulation of a dumbbell bottleneck with
//! pluggable active queue management, plus a self-contained RBF-kernel
//! support vector classifier that backs the SAM controller.
//!
//! The crate is organized around the simulation loop:
//!
//! * [`sim`] — virtual clock, event queue, seeded random streams, and the
//!   bottleneck link with its AQM-fronted FIFO buffer.
//! * [`transport`] — window-based bulk (FTP) and on-off (HTTP) traffic
//!   sources that close the congestion control loop.
//! * [`aqm`] — the admission-decision interface and the classic
//!   controllers: DropTail, RED, Blue, PI.
//! * [`svm`] — RBF kernel, SMO trainer, decision function, and the text
//!   model-file format.
//! * [`sam`] — utilization-pattern window, labeling policy, dataset
//!   generation, and the model-backed SAM controller.
//! * [`metrics`] — per-second series, run totals, and CSV export.
//! * [`config`] / [`scenario`] / [`cli`] — configuration files, presets,
//!   and the `run` / `train` / `gen-dataset` / `compare` commands.

pub mod aqm;
pub mod cli;
pub mod config;
pub mod metrics;
pub mod sam;
pub mod scenario;
pub mod sim;
pub mod svm;
pub mod transport;

mod fsutil;
