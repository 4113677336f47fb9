//! Subcommand implementations, shared by the binary and the integration
//! tests. All file output goes through write-temp-then-rename, so a
//! failing run leaves no partial files.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{ConfigError, ControllerKind, ScenarioConfig, TrainSpec};
use crate::fsutil::write_atomic;
use crate::metrics::{format_summary_table, RunSummary};
use crate::sam::{gen_dataset, train_sam, SamTrainError, TrainReport};
use crate::scenario::{run_scenario, ScenarioError};
use crate::sim::{RngStreams, StreamId};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Train(#[from] SamTrainError),
    #[error(transparent)]
    Dataset(#[from] crate::sam::DatasetError),
    #[error("{0}")]
    InvalidArgs(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// `run`: simulate one scenario, write `<controller>.csv` and
/// `summary.csv` under `out_dir`, print the summary table.
pub fn cmd_run(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let out = run_scenario(cfg)?;
    out.metrics
        .export_csv(&out_dir.join(format!("{}.csv", cfg.controller.name())))?;
    write_summaries(std::slice::from_ref(&out.summary), out_dir)?;
    print!(
        "{}",
        format_summary_table(std::slice::from_ref(&out.summary))
    );
    Ok(out.summary)
}

/// `compare`: run each controller on the identical scenario and seed
/// (concurrently, fully isolated instances), write one CSV per controller
/// plus a combined summary.
pub fn cmd_compare(
    base: &ScenarioConfig,
    controllers: &[ControllerKind],
    vary_seeds: bool,
    out_dir: &Path,
) -> Result<Vec<RunSummary>, CliError> {
    if controllers.len() < 2 {
        return Err(CliError::InvalidArgs(
            "compare needs at least two controllers".to_string(),
        ));
    }
    let mut configs = Vec::with_capacity(controllers.len());
    for (i, &controller) in controllers.iter().enumerate() {
        let mut cfg = base.clone();
        cfg.controller = controller;
        if vary_seeds {
            cfg.seed = base.seed.wrapping_add(i as u64);
        }
        crate::config::validate_scenario(&cfg)?;
        configs.push(cfg);
    }

    std::fs::create_dir_all(out_dir)?;
    let outputs: Vec<Result<crate::scenario::RunOutput, ScenarioError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = configs
                .iter()
                .map(|cfg| scope.spawn(move || run_scenario(cfg)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation thread panicked"))
                .collect()
        });

    let mut summaries = Vec::with_capacity(outputs.len());
    for (cfg, result) in configs.iter().zip(outputs) {
        let out = result?;
        out.metrics
            .export_csv(&out_dir.join(format!("{}.csv", cfg.controller.name())))?;
        summaries.push(out.summary);
    }
    write_summaries(&summaries, out_dir)?;
    print!("{}", format_summary_table(&summaries));
    Ok(summaries)
}

fn write_summaries(rows: &[RunSummary], out_dir: &Path) -> Result<(), CliError> {
    let mut csv = String::from(RunSummary::CSV_HEADER);
    csv.push('\n');
    for r in rows {
        writeln!(csv, "{}", r.csv_row()).unwrap();
    }
    write_atomic(&out_dir.join("summary.csv"), &csv)?;
    Ok(())
}

/// `train`: generate a dataset, train the classifier, save the model, and
/// report dataset shape, accuracy, and support-vector count.
pub fn cmd_train(spec: &TrainSpec, out_path: &Path) -> Result<TrainReport, CliError> {
    let mut rng = RngStreams::new(spec.seed).stream(StreamId::Training);
    let report = train_sam(&spec.svm, &spec.policy, spec.n, &mut rng, out_path)?;
    println!(
        "trained on {} patterns ({} drop / {} enqueue), training accuracy {:.2}%, {} support vectors -> {}",
        report.n,
        report.n_drop,
        report.n_enqueue,
        report.training_accuracy * 100.0,
        report.support_vectors,
        out_path.display()
    );
    Ok(report)
}

/// `gen-dataset`: write `u1..u5,label` rows and print the class balance.
pub fn cmd_gen_dataset(n: usize, spec: &TrainSpec, out_path: &Path) -> Result<(), CliError> {
    let mut rng = RngStreams::new(spec.seed).stream(StreamId::Dataset);
    let data = gen_dataset(n, &spec.policy, &mut rng)?;
    let mut csv = String::from("u1,u2,u3,u4,u5,label\n");
    for s in &data {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            s.x[0], s.x[1], s.x[2], s.x[3], s.x[4], s.y
        )
        .unwrap();
    }
    write_atomic(out_path, &csv)?;
    let pos = data.iter().filter(|s| s.y == 1).count();
    println!(
        "wrote {} patterns ({} drop / {} enqueue) -> {}",
        n,
        pos,
        n - pos,
        out_path.display()
    );
    Ok(())
}
