//! Acceptance suite: one PASS/FAIL line per criterion, then a single
//! assertion that all of them passed. Run with
//! `cargo test -p qlstm-forecast-cli --test acceptance -- --nocapture`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use qlstm_cli::report::{CompareReport, TrainReport};
use qlstm_forecast::dataset::{
    fit_normalize, generate_synthetic, make_windows, month_starts, split_chronological, write_csv,
    RawSeries, SyntheticKind,
};
use qlstm_forecast::linalg::{sigmoid, Matrix};
use qlstm_forecast::lstm::{lstm_backward, lstm_forward, LstmParams};
use qlstm_forecast::qlstm::{qlstm_backward, qlstm_forward, qlstm_step, QlstmParams, QlstmState};
use qlstm_forecast::statevector::{apply_circuit, init_zero, Circuit, GateOp};
use qlstm_forecast::training::mse_loss;
use qlstm_forecast::vqc::{vqc_forward, vqc_gradients, Encoding, VqcDescriptor, VqcParams};
use qlstm_forecast::Parameterized;
use qlstm_testkit::calendar::inclusive_days;
use qlstm_testkit::dense::{run_from_zero, OracleGate};
use qlstm_testkit::finite_diff::{central_gradient, max_abs_error, max_relative_error};
use qlstm_testkit::precise::{self, dd, LstmWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: u64) -> String {
    format!("{:.1}s of {limit_s}s", elapsed.as_secs_f64())
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qlstm-forecast"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> (GateOp, OracleGate) {
    let target = rng.gen_range(0..n);
    let angle = rng.gen_range(-7.0..7.0);
    let pick = if n >= 2 {
        rng.gen_range(0..5)
    } else {
        rng.gen_range(0..4)
    };
    match pick {
        0 => (GateOp::H { target }, OracleGate::H(target)),
        1 => (GateOp::Rx { target, angle }, OracleGate::Rx(target, angle)),
        2 => (GateOp::Ry { target, angle }, OracleGate::Ry(target, angle)),
        3 => (GateOp::Rz { target, angle }, OracleGate::Rz(target, angle)),
        _ => {
            let control = (target + rng.gen_range(1..n)) % n;
            (
                GateOp::Cnot { control, target },
                OracleGate::Cnot(control, target),
            )
        }
    }
}

fn random_circuit(rng: &mut ChaCha8Rng, n: usize, len: usize) -> (Circuit, Vec<OracleGate>) {
    let (ops, oracle): (Vec<_>, Vec<_>) = (0..len).map(|_| random_gate(rng, n)).unzip();
    (Circuit::with_ops(n, ops).unwrap(), oracle)
}

fn simulator_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=3);
        let len = rng.gen_range(0..=30);
        let (circuit, oracle) = random_circuit(&mut rng, n, len);
        let state = apply_circuit(&init_zero(n).unwrap(), &circuit).unwrap();
        let expected = run_from_zero(&oracle, n);
        for (a, b) in state.amplitudes().iter().zip(&expected) {
            worst = worst.max((a - b).norm());
        }
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-12 && elapsed < Duration::from_secs(10),
        format!(
            "200 circuits, max amplitude diff {worst:.2e}, {}",
            within(elapsed, 10)
        ),
    )
}

fn norm_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let len = rng.gen_range(0..=60);
        let (circuit, _) = random_circuit(&mut rng, n, len);
        let state = apply_circuit(&init_zero(n).unwrap(), &circuit).unwrap();
        worst = worst.max((state.norm() - 1.0).abs());
    }
    check(
        worst < 1e-10,
        format!("1000 circuits, max |norm - 1| {worst:.2e}"),
    )
}

fn parameter_shift() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let encoding = if k % 2 == 0 {
            Encoding::AngleArctan
        } else {
            Encoding::AngleLinear
        };
        let d = VqcDescriptor::new(4, 2, encoding).unwrap();
        let params = VqcParams::random(&d, std::f64::consts::PI, &mut rng);
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let up: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = vqc_gradients(&d, &params, &v, &up).unwrap();
        let f = |angles: &[f64], x: &[f64]| -> f64 {
            let q = VqcParams {
                angles: angles.to_vec(),
            };
            vqc_forward(&d, &q, x)
                .unwrap()
                .iter()
                .zip(&up)
                .map(|(e, u)| e * u)
                .sum()
        };
        let fd_a = central_gradient(&params.angles, 1e-5, |a| f(a, &v));
        let fd_x = central_gradient(&v, 1e-5, |x| f(&params.angles, x));
        worst = worst
            .max(max_abs_error(&g.angles, &fd_a))
            .max(max_abs_error(&g.inputs, &fd_x));
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-6 && elapsed < Duration::from_secs(60),
        format!(
            "100 instances, max abs error {worst:.2e}, {}",
            within(elapsed, 60)
        ),
    )
}

fn lstm_bptt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst: f64 = 0.0;
    for c in 0..50 {
        let (hidden, input, len) = (1 + c % 5, 1 + c % 3, 1 + c % 8);
        let params = LstmParams::init(input, hidden, &mut rng);
        let seq: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..input).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let target: f64 = rng.gen_range(-1.0..1.0);
        let (pred, cache) = lstm_forward(&params, &seq).unwrap();
        let analytic = lstm_backward(&params, &cache, 2.0 * (pred - target))
            .unwrap()
            .flat();
        // The finite-difference objective is evaluated in double-double.
        let numeric = precise::central_gradient(&params.flat(), 1e-6, |x| {
            let mut q = params.clone();
            q.set_flat(x).unwrap();
            let weights = LstmWeights {
                hidden,
                input,
                w: [
                    q.w_i.as_slice(),
                    q.w_f.as_slice(),
                    q.w_c.as_slice(),
                    q.w_o.as_slice(),
                ],
                b: [&q.b_i, &q.b_f, &q.b_c, &q.b_o],
                head_w: &q.head_w,
                head_b: q.head_b,
            };
            let e = precise::lstm_prediction(&weights, &seq) - dd(target);
            e * e
        });
        worst = worst.max(max_relative_error(&analytic, &numeric));
    }
    check(
        worst < 1e-6,
        format!("50 configurations, max relative error {worst:.2e}"),
    )
}

fn qlstm_hybrid() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst: f64 = 0.0;
    for c in 0..20 {
        let d = VqcDescriptor::new(4, 1 + c % 2, Encoding::AngleArctan).unwrap();
        let params = QlstmParams::init(d, 2, 2, &mut rng);
        let seq: Vec<Vec<f64>> = (0..1 + c % 4)
            .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let target: f64 = rng.gen_range(-1.0..1.0);
        let (pred, cache) = qlstm_forward(&params, &seq).unwrap();
        let analytic = qlstm_backward(&params, &cache, 2.0 * (pred - target))
            .unwrap()
            .flat();
        let numeric = central_gradient(&params.flat(), 1e-6, |x| {
            let mut q = params.clone();
            q.set_flat(x).unwrap();
            (qlstm_forward(&q, &seq).unwrap().0 - target).powi(2)
        });
        worst = worst.max(max_relative_error(&analytic, &numeric));
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-4 && elapsed < Duration::from_secs(300),
        format!(
            "20 configurations, max relative error {worst:.2e}, {}",
            within(elapsed, 300)
        ),
    )
}

fn trainability(dir: &Path) -> Outcome {
    let start = Instant::now();
    let data = dir.join("sine.csv");
    cli(&[
        "synth",
        "--kind",
        "sine",
        "--len",
        "200",
        "--seed",
        "0",
        "--out",
        p(&data),
    ])?;
    let mut lines = Vec::new();
    let mut ok = true;
    for model in ["lstm", "qlstm"] {
        let out = dir.join(format!("train-{model}"));
        cli(&[
            "train",
            "--model",
            model,
            "--data",
            p(&data),
            "--lookback",
            "4",
            "--hidden",
            "4",
            "--epochs",
            "200",
            "--out",
            p(&out),
        ])?;
        let report: TrainReport =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
                .map_err(|e| e.to_string())?;
        let initial = report.loss_history.initial.unwrap().train_mse;
        let last = report.loss_history.last().unwrap().metrics.train_mse;
        ok &= last < 0.01 && last <= initial / 5.0;
        lines.push(format!("{model} {initial:.4} -> {last:.5}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(600);
    check(
        ok,
        format!("train MSE {}, {}", lines.join("; "), within(elapsed, 600)),
    )
}

fn comparative_pipeline(dir: &Path) -> Outcome {
    let data = dir.join("long.csv");
    cli(&[
        "synth",
        "--kind",
        "trend_sine",
        "--len",
        "1100",
        "--features",
        "2",
        "--seed",
        "1",
        "--out",
        p(&data),
    ])?;
    let (l, q) = (dir.join("cmp-lstm"), dir.join("cmp-qlstm"));
    cli(&[
        "train",
        "--model",
        "lstm",
        "--data",
        p(&data),
        "--epochs",
        "3",
        "--out",
        p(&l),
    ])?;
    cli(&[
        "train",
        "--model",
        "qlstm",
        "--data",
        p(&data),
        "--epochs",
        "1",
        "--hidden",
        "2",
        "--out",
        p(&q),
    ])?;
    let out = dir.join("compare");
    cli(&[
        "compare",
        "--lstm-file",
        p(&l.join("model.json")),
        "--qlstm-file",
        p(&q.join("model.json")),
        "--data",
        p(&data),
        "--out",
        p(&out),
        "--head",
        "1000",
    ])?;
    let report: CompareReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
            .map_err(|e| e.to_string())?;
    let mut rdr = csv::Reader::from_path(out.join("overlay.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|r| {
            r.unwrap()
                .iter()
                .skip(1)
                .map(|v| v.parse().unwrap())
                .collect()
        })
        .collect();
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let lstm_mse = mse_loss(&col(1), &col(0)).unwrap().0;
    let qlstm_mse = mse_loss(&col(2), &col(0)).unwrap().0;
    let diff = (lstm_mse - report.summary.lstm.mse)
        .abs()
        .max((qlstm_mse - report.summary.qlstm.mse).abs());
    check(
        rows.len() == 1000 && report.overlay.len() == 1000 && diff <= 1e-12,
        format!(
            "1096 windows, --head 1000 -> {} rows, recomputed MSE diff {diff:.1e}",
            rows.len()
        ),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let data = dir.join("det.csv");
    cli(&[
        "synth",
        "--kind",
        "ar1",
        "--len",
        "120",
        "--features",
        "2",
        "--seed",
        "4",
        "--out",
        p(&data),
    ])?;
    let mut same = true;
    for model in ["lstm", "qlstm"] {
        let runs: Vec<_> = (0..2)
            .map(|k| {
                let out = dir.join(format!("det-{model}-{k}"));
                cli(&[
                    "train",
                    "--model",
                    model,
                    "--data",
                    p(&data),
                    "--epochs",
                    "3",
                    "--hidden",
                    "3",
                    "--seed",
                    "42",
                    "--out",
                    p(&out),
                ])
                .map(|_| out)
            })
            .collect::<Result<_, _>>()?;
        for file in ["model.json", "report.json"] {
            same &= std::fs::read(runs[0].join(file)).unwrap()
                == std::fs::read(runs[1].join(file)).unwrap();
        }
    }
    check(
        same,
        "lstm and qlstm: model.json and report.json byte-identical across two runs".into(),
    )
}

fn data_protocol(dir: &Path) -> Outcome {
    let s = generate_synthetic(SyntheticKind::Sine, 1004, 1, 2).unwrap();
    let (train, test) = split_chronological(&make_windows(&s, 4).unwrap(), 0.8).unwrap();
    let split_ok = (train.len(), test.len()) == (800, 200);

    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut raw = generate_synthetic(SyntheticKind::Ar1, 500, 3, 9).unwrap();
    for row in raw.features.iter_mut() {
        for v in row.iter_mut() {
            *v = *v * 900.0 - rng.gen_range(0.0..100.0);
        }
    }
    let (norm, scaler) = fit_normalize(&raw, 0.8).unwrap();
    let back = scaler.invert(&norm).unwrap();
    let mut worst: f64 = 0.0;
    for (a, b) in back
        .features
        .iter()
        .flatten()
        .zip(raw.features.iter().flatten())
    {
        worst = worst.max((a - b).abs());
    }
    for (a, b) in back.target.iter().zip(&raw.target) {
        worst = worst.max((a - b).abs());
    }

    let dates = month_starts(2004, 2, 2020, 12);
    let n = dates.len();
    let monthly = RawSeries {
        features: (0..n).map(|k| vec![(k as f64).sin()]).collect(),
        target: (0..n).map(|k| 5000.0 + 10.0 * k as f64).collect(),
        dates: dates.clone(),
        feature_names: vec!["cpi".into()],
        target_name: "close".into(),
    };
    let monthly_path = dir.join("monthly.csv");
    write_csv(&monthly, &monthly_path).unwrap();
    let daily_path = dir.join("daily.csv");
    cli(&[
        "interpolate",
        "--in",
        p(&monthly_path),
        "--method",
        "linear",
        "--out",
        p(&daily_path),
    ])?;
    let rows = csv::Reader::from_path(&daily_path)
        .unwrap()
        .records()
        .count() as i64;
    let (first, last) = (dates[0].to_string(), dates[n - 1].to_string());
    let parse = |s: &str| -> (i64, i64, i64) {
        let v: Vec<i64> = s.split('-').map(|x| x.parse().unwrap()).collect();
        (v[0], v[1], v[2])
    };
    let calendar = inclusive_days(parse(&first), parse(&last));
    check(
        split_ok && worst <= 1e-12 && n == 203 && rows == calendar,
        format!(
            "split {}/{}; round-trip max error {worst:.1e}; {n} monthly rows -> {rows} daily rows, calendar oracle {calendar}",
            train.len(),
            test.len()
        ),
    )
}

fn gate_ranges() -> Outcome {
    let (lo, hi) = (sigmoid(-1.0), sigmoid(1.0));
    let (tlo, thi) = ((-1f64).tanh(), 1f64.tanh());
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let (mut steps, mut violations) = (0usize, 0usize);
    while steps < 10_000 {
        let hidden = rng.gen_range(1..=5);
        let layers = rng.gen_range(0..=2);
        let d = VqcDescriptor::new(4, layers, Encoding::AngleArctan).unwrap();
        let mut params = QlstmParams::init(d, 2, hidden, &mut rng);
        let scale = rng.gen_range(0.1..10.0);
        params.in_proj = Matrix::from_fn(hidden + 2, 4, |_, _| rng.gen_range(-scale..scale));
        let mut state = QlstmState::zeros(hidden);
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let (_, _, next, cache) = qlstm_step(&params, &x, &state).unwrap();
            for g in cache.i.iter().chain(&cache.f).chain(&cache.o) {
                violations += usize::from(!(lo..=hi).contains(g));
            }
            for g in &cache.c_tilde {
                violations += usize::from(!(tlo..=thi).contains(g));
            }
            state = next;
            steps += 1;
        }
    }
    check(
        violations == 0,
        format!("{steps} steps, {violations} violations"),
    )
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("simulator matches dense oracle", Box::new(simulator_oracle)),
        ("norm preservation", Box::new(norm_preservation)),
        ("parameter-shift exactness", Box::new(parameter_shift)),
        ("LSTM BPTT correctness", Box::new(lstm_bptt)),
        ("QLSTM hybrid gradient correctness", Box::new(qlstm_hybrid)),
        (
            "trainability on synthetic sine",
            Box::new(move || trainability(d)),
        ),
        (
            "comparative pipeline",
            Box::new(move || comparative_pipeline(d)),
        ),
        ("determinism", Box::new(move || determinism(d))),
        ("data protocol", Box::new(move || data_protocol(d))),
        ("gate-range invariants", Box::new(gate_ranges)),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_string()));
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {:>2} {tag}: {name} ({detail})", k + 1);
        if outcome.is_err() {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
