//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `cargo test --test acceptance -- --nocapture`).

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aqmsim::aqm::{
    Aqm, AqmDecision, BlueParams, BlueState, PiParams, PiState, RedParams, RedState,
};
use aqmsim::cli::cmd_compare;
use aqmsim::config::ControllerKind;
use aqmsim::sam::{train_sam, LabelPolicy, PatternWindow};
use aqmsim::scenario::run_scenario;
use aqmsim::sim::{QueueState, RngStreams, SimTime, StreamId};
use aqmsim::svm::{
    dual_objective, kkt_max_violation, load_model, parse_model, smo_train, write_model,
    ModelFileError, Sample, TrainConfig,
};

use common::{
    default_model_path, desk_config, median, oracle_bias, oracle_decision, qp_oracle, queue_cov,
};

fn report(criterion: &str, ok: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn qstate(occupancy: usize, capacity: usize) -> QueueState {
    QueueState {
        occupancy,
        capacity,
        in_service: 0,
    }
}

/// 1. Packet conservation, exact, for every controller over a 20-seed
/// desk sweep.
#[test]
fn criterion_1_conservation_sweep() {
    let start = Instant::now();
    let mut runs = 0;
    for controller in ControllerKind::ALL {
        for seed in 1..=20 {
            let cfg = desk_config(controller, seed);
            let out = run_scenario(&cfg).expect("scenario runs");
            assert!(
                out.summary.conservation_holds(),
                "conservation broken: {controller} seed {seed}: {:?}",
                out.summary
            );
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    report(
        "1 (conservation)",
        runs == 100 && elapsed.as_secs() < 120,
        &format!("{runs} runs, exact, in {elapsed:.1?}"),
    );
}

/// 2. SMO matches an independent projected-gradient QP oracle on 50
/// random small datasets: dual objective within 1e-4, identical labels
/// away from the boundary, KKT conditions within tolerance.
#[test]
fn criterion_2_svm_oracle_equivalence() {
    let start = Instant::now();
    let cfg = TrainConfig {
        c: 1.0,
        gamma: 1.0,
        tol: 1e-4,
        max_passes: 5000,
    };
    let mut worst_gap = 0.0f64;
    let mut worst_kkt = 0.0f64;
    let mut compared_points = 0usize;

    for trial in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let n = rng.gen_range(6..=15);
        let mut data: Vec<Sample> = (0..n)
            .map(|_| {
                let x = std::array::from_fn(|_| rng.gen::<f64>());
                Sample::new(x, if rng.gen::<bool>() { 1 } else { -1 })
            })
            .collect();
        // both classes must be present
        if data.iter().all(|s| s.y == 1) {
            data[0] = Sample::new(data[0].x, -1);
        }
        if data.iter().all(|s| s.y == -1) {
            data[0] = Sample::new(data[0].x, 1);
        }

        let mut train_rng = ChaCha8Rng::seed_from_u64(2000 + trial);
        let out = smo_train(&data, &cfg, &mut train_rng).expect("smo converges");

        let kkt = kkt_max_violation(&data, &out.alphas, out.model.bias, &cfg);
        assert!(kkt <= cfg.tol, "trial {trial}: KKT violation {kkt:.3e}");
        worst_kkt = worst_kkt.max(kkt);

        let oracle = qp_oracle(&data, cfg.c, cfg.gamma);
        let w_smo = dual_objective(&data, &out.alphas, cfg.gamma);
        let w_oracle = dual_objective(&data, &oracle, cfg.gamma);
        let gap = (w_smo - w_oracle).abs();
        assert!(
            gap <= 1e-4,
            "trial {trial}: objective gap {gap:.3e} (smo {w_smo}, oracle {w_oracle})"
        );
        worst_gap = worst_gap.max(gap);

        let b_oracle = oracle_bias(&data, &oracle, cfg.c, cfg.gamma);
        for _ in 0..200 {
            let x: [f64; 5] = std::array::from_fn(|_| rng.gen());
            let f_smo = out.model.decision_value(&x);
            let f_orc = oracle_decision(&data, &oracle, b_oracle, cfg.gamma, &x);
            if f_smo.abs() > 1e-3 && f_orc.abs() > 1e-3 {
                assert_eq!(
                    f_smo > 0.0,
                    f_orc > 0.0,
                    "trial {trial}: label mismatch at {x:?} (smo {f_smo}, oracle {f_orc})"
                );
                compared_points += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        "2 (svm oracle equivalence)",
        elapsed.as_secs() < 60,
        &format!(
            "50 datasets, worst objective gap {worst_gap:.2e}, worst KKT {worst_kkt:.2e}, \
             {compared_points} grid labels agree, in {elapsed:.1?}"
        ),
    );
}

/// 3. Two-point training recovers the closed-form dual solution.
#[test]
fn criterion_3_two_point_analytic() {
    let data = vec![Sample::new([0.0; 5], -1), Sample::new([1.0; 5], 1)];
    let cfg = TrainConfig {
        c: 10.0,
        gamma: 0.1,
        tol: 1e-3,
        max_passes: 200,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let out = smo_train(&data, &cfg, &mut rng).expect("two-point training");
    let expected = 2.0 / (2.0 - 2.0 * (-0.5f64).exp());
    let err = (out.alphas[0] - expected)
        .abs()
        .max((out.alphas[1] - expected).abs());
    report(
        "3 (two-point analytic)",
        err < 1e-6 && out.model.bias.abs() < 1e-9,
        &format!("alpha error {err:.2e}, bias {:.2e}", out.model.bias),
    );
}

/// 4. Controller laws: RED piecewise probabilities exact, Blue marking
/// probability clamped under fuzzed event sequences, PI fixed point
/// exact.
#[test]
fn criterion_4_controller_laws() {
    // RED: w_q = 1 pins the average to the last queue sample, making the
    // piecewise law directly observable.
    let mut red = RedState::new(RedParams {
        w_q: 1.0,
        min_th: 100.0,
        max_th: 300.0,
        max_p: 0.1,
        count_correction: true,
        idle_service_time_s: 0.004,
    });
    red.avg_update(50.0);
    assert_eq!(red.drop_prob(), 0.0, "below min_th must be 0");
    red.avg_update(200.0);
    assert_eq!(red.drop_prob(), 0.1 / 2.0, "midpoint must be max_p/2");
    red.avg_update(300.0);
    assert_eq!(red.drop_prob(), 1.0, "at max_th must be 1");
    red.avg_update(350.0);
    assert_eq!(red.drop_prob(), 1.0, "beyond max_th must stay 1");

    // Blue: 10,000 fuzzed overflow/idle/decide interleavings never push
    // p_m outside [0,1].
    let mut blue = BlueState::new(BlueParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut now = 0.0f64;
    for _ in 0..10_000 {
        now += rng.gen::<f64>() * 0.2;
        let t = SimTime::from_secs(now);
        match rng.gen_range(0..3) {
            0 => blue.on_overflow(t),
            1 => blue.on_idle_event(t),
            _ => {
                let occ = rng.gen_range(0..=100);
                let _ = blue.decide(&qstate(occ, 100), t, &mut rng);
            }
        }
        let p = blue.marking_prob();
        assert!((0.0..=1.0).contains(&p), "p_m escaped to {p}");
    }

    // PI: with the queue pinned at the reference, the probability is a
    // fixed point, bit-exact over many ticks.
    let mut pi = PiState::new(PiParams {
        gain_a: 0.001,
        gain_b: 0.0005,
        q_ref: 50.0,
        sample_interval_s: 0.01,
    });
    pi.update(50.0); // q_old 0 -> 50: charges p to b * q_ref
    let held = pi.drop_prob();
    assert!(held > 0.0);
    for _ in 0..1000 {
        pi.update(50.0);
        assert_eq!(pi.drop_prob(), held, "fixed point drifted");
    }

    report(
        "4 (controller laws)",
        true,
        "RED piecewise exact, Blue clamped over 10k fuzzed events, PI fixed point exact",
    );
}

/// 5. Monte Carlo calibration: held drop probabilities of 0.05, 0.1 and
/// 0.3 produce matching empirical rates over 100,000 decisions, each
/// exercised through a controller's public decision path.
#[test]
fn criterion_5_monte_carlo_calibration() {
    let n = 100_000;
    let mut results = Vec::new();

    // p = 0.05 through RED at its ramp midpoint (q == avg is an EWMA
    // fixed point, so the average stays put).
    let mut red = RedState::new(RedParams {
        count_correction: false,
        min_th: 100.0,
        max_th: 300.0,
        max_p: 0.1,
        ..RedParams::default()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..30_000 {
        // converge the average onto the midpoint
        let _ = red.decide(&qstate(200, 800), SimTime::ZERO, &mut rng);
    }
    let drops = (0..n)
        .filter(|_| red.decide(&qstate(200, 800), SimTime::ZERO, &mut rng) == AqmDecision::Drop)
        .count();
    results.push((0.05, drops as f64 / n as f64));

    // p = 0.1 through PI with a held probability.
    let mut pi = PiState::new(PiParams {
        gain_a: 0.1,
        gain_b: 0.05,
        q_ref: 0.0,
        sample_interval_s: 0.01,
    });
    pi.update(1.0); // p = 0.1 exactly, then no further ticks
    assert!((pi.drop_prob() - 0.1).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let drops = (0..n)
        .filter(|_| pi.decide(&qstate(5, 100), SimTime::ZERO, &mut rng) == AqmDecision::Drop)
        .count();
    results.push((0.1, drops as f64 / n as f64));

    // p = 0.3 through Blue after six spaced overflow updates of 0.05.
    let mut blue = BlueState::new(BlueParams {
        increment: 0.05,
        decrement: 0.001,
        freeze_time_s: 0.1,
    });
    for k in 0..6 {
        blue.on_overflow(SimTime::from_secs(k as f64));
    }
    assert!((blue.marking_prob() - 0.3).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let drops = (0..n)
        .filter(|_| blue.decide(&qstate(5, 100), SimTime::ZERO, &mut rng) == AqmDecision::Drop)
        .count();
    results.push((0.3, drops as f64 / n as f64));

    let mut detail = String::new();
    let mut ok = true;
    for (p, rate) in &results {
        detail.push_str(&format!("p={p}: {rate:.4}; "));
        ok &= (rate - p).abs() < 0.01;
    }
    report(
        "5 (monte carlo calibration)",
        ok,
        detail.trim_end_matches("; "),
    );
}

/// 6. Directional reproduction of the four-controller comparison on the
/// desk preset: per seed, Blue drops least and queues deepest, PI drops
/// most, and SAM's queue varies less than RED's and Blue's. Each
/// ordering must hold in at least 7 of 10 seeds.
#[test]
fn criterion_6_directional_ordering() {
    let start = Instant::now();
    let controllers = [
        ControllerKind::Red,
        ControllerKind::Blue,
        ControllerKind::Pi,
        ControllerKind::Sam,
    ];

    let mut blue_ok = 0;
    let mut pi_ok = 0;
    let mut sam_ok = 0;
    let mut med = |_: ()| {};
    let _ = &mut med;
    let mut blue_drops = Vec::new();
    let mut blue_queue = Vec::new();
    let mut pi_drops = Vec::new();
    let mut sam_cov = Vec::new();
    let mut red_cov = Vec::new();

    for seed in 1..=10u64 {
        let mut drops = std::collections::HashMap::new();
        let mut avgq = std::collections::HashMap::new();
        let mut cov = std::collections::HashMap::new();
        for controller in controllers {
            let cfg = desk_config(controller, seed);
            let out = run_scenario(&cfg).expect("scenario runs");
            drops.insert(controller.name(), out.summary.total_drops);
            avgq.insert(controller.name(), out.summary.avg_queue);
            cov.insert(
                controller.name(),
                queue_cov(out.metrics.tick_samples(), 10.0),
            );
        }

        let fewest_drops = drops["blue"] < drops["red"]
            && drops["blue"] < drops["pi"]
            && drops["blue"] < drops["sam"];
        let largest_queue =
            avgq["blue"] > avgq["red"] && avgq["blue"] > avgq["pi"] && avgq["blue"] > avgq["sam"];
        let most_drops =
            drops["pi"] > drops["red"] && drops["pi"] > drops["blue"] && drops["pi"] > drops["sam"];
        let sam_stable = cov["sam"] < cov["red"] && cov["sam"] < cov["blue"];

        if fewest_drops && largest_queue {
            blue_ok += 1;
        }
        if most_drops {
            pi_ok += 1;
        }
        if sam_stable {
            sam_ok += 1;
        }
        println!(
            "  seed {seed:>2}: drops r/b/p/s = {}/{}/{}/{}  avgq b = {:.0}  cov r/b/s = {:.3}/{:.3}/{:.3}  [blue {} pi {} sam {}]",
            drops["red"], drops["blue"], drops["pi"], drops["sam"], avgq["blue"],
            cov["red"], cov["blue"], cov["sam"],
            if fewest_drops && largest_queue { "ok" } else { "MISS" },
            if most_drops { "ok" } else { "MISS" },
            if sam_stable { "ok" } else { "MISS" },
        );

        blue_drops.push(drops["blue"] as f64);
        blue_queue.push(avgq["blue"]);
        pi_drops.push(drops["pi"] as f64);
        sam_cov.push(cov["sam"]);
        red_cov.push(cov["red"]);
    }

    let elapsed = start.elapsed();
    println!(
        "  medians: blue drops {:.0}, blue avg queue {:.0}, pi drops {:.0}, sam cov {:.3}, red cov {:.3}",
        median(&mut blue_drops),
        median(&mut blue_queue),
        median(&mut pi_drops),
        median(&mut sam_cov),
        median(&mut red_cov),
    );
    report(
        "6 (directional ordering)",
        blue_ok >= 7 && pi_ok >= 7 && sam_ok >= 7 && elapsed.as_secs() < 300,
        &format!("blue {blue_ok}/10, pi {pi_ok}/10, sam stability {sam_ok}/10, in {elapsed:.1?}"),
    );
}

/// 7. `compare` on the desk preset is byte-identical across invocations.
#[test]
fn criterion_7_compare_determinism() {
    let controllers = [
        ControllerKind::Red,
        ControllerKind::Blue,
        ControllerKind::Pi,
        ControllerKind::Sam,
    ];
    let cfg = desk_config(ControllerKind::Red, 7);
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    cmd_compare(&cfg, &controllers, false, dir_a.path()).expect("first compare");
    cmd_compare(&cfg, &controllers, false, dir_b.path()).expect("second compare");

    let mut identical = true;
    let mut checked = 0;
    for name in ["red.csv", "blue.csv", "pi.csv", "sam.csv", "summary.csv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        identical &= a == b;
        checked += 1;
    }
    report(
        "7 (compare determinism)",
        identical && checked == 5,
        "4 controller CSVs + summary byte-identical across two invocations",
    );
}

/// 8. The default training pipeline fits its own labeling policy to at
/// least 95% and never drops during a cold start.
#[test]
fn criterion_8_sam_training_quality() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("default.svm");
    let cfg = TrainConfig::default();
    let mut rng = RngStreams::new(1).stream(StreamId::Training);
    let rep = train_sam(&cfg, &LabelPolicy::default(), 2000, &mut rng, &path)
        .expect("default pipeline trains");

    let model = load_model(&path).unwrap();
    // First five arrivals onto an initially empty desk-sized queue: the
    // window is zero-padded and utilization grows one packet at a time.
    let mut window = PatternWindow::new();
    let mut cold_ok = true;
    for k in 0..5usize {
        window.push(k as f64 / 200.0);
        cold_ok &= model.classify(&window.features()) == -1;
    }
    // A nearly-empty pattern admits; a high-and-rising one drops.
    let verdicts_ok = model.classify(&[0.0, 0.0, 0.0, 0.0, 0.1]) == -1
        && model.classify(&[0.9, 0.9, 0.9, 0.9, 0.95]) == 1;

    report(
        "8 (sam training quality)",
        rep.training_accuracy >= 0.95 && cold_ok && verdicts_ok,
        &format!(
            "training accuracy {:.2}%, {} support vectors, cold-start all enqueue: {cold_ok}, \
             boundary verdicts: {verdicts_ok}",
            rep.training_accuracy * 100.0,
            rep.support_vectors
        ),
    );
}

/// 9. Model files round-trip decision values and malformed files are
/// rejected with line-numbered errors.
#[test]
fn criterion_9_model_file_round_trip() {
    let model = load_model(default_model_path()).expect("default model loads");
    let reparsed = parse_model(&write_model(&model)).expect("round trip parses");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut max_err = 0.0f64;
    for _ in 0..100 {
        let x: [f64; 5] = std::array::from_fn(|_| rng.gen());
        max_err = max_err.max((model.decision_value(&x) - reparsed.decision_value(&x)).abs());
    }

    let wrong_dim = parse_model("svm-rbf v1\ngamma 1\nbias 0\nnsv 1\n0.5 0.1 0.2 0.3 0.4\n");
    let empty = parse_model("svm-rbf v1\ngamma 1\nbias 0\nnsv 0\n");
    let bad_num = parse_model("svm-rbf v1\ngamma 1\nbias zero\nnsv 1\n0.5 0.1 0.2 0.3 0.4 0.5\n");
    let rejects_ok = matches!(wrong_dim, Err(ModelFileError::Dimension { line: 5, .. }))
        && matches!(empty, Err(ModelFileError::Empty { line: 4 }))
        && matches!(bad_num, Err(ModelFileError::Syntax { line: 3, .. }));

    report(
        "9 (model file round trip)",
        max_err <= 1e-12 && rejects_ok,
        &format!("max decision drift {max_err:.1e}, malformed files rejected with line numbers"),
    );
}
