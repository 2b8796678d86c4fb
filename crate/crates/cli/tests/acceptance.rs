//! One line per acceptance criterion. Run with `cargo test -p lfa-cli --test acceptance`.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use lfa_core::analysis::{
    estimate_class_distance, nfl_construct, Domain, EquivalenceMatrix, NflConfig, SearchConfig,
};
use lfa_core::dataio::{split, synth_generate, SynthKind};
use lfa_core::engine::{fit_closed_form_on, fit_iterative_on, PsetSplit, SurrogateParam};
use lfa_core::models::{
    train_sgd, Activation, Architecture, LinearModel, LogisticModel, MlpModel, QuadraticModel,
    SinusoidModel, TrainConfig,
};
use lfa_core::reference::ref_integrated_gradients;
use lfa_core::{
    explain, registry, sample_perturbations, CombineOp, FitConfig, Method, MethodParams, Model,
    NeighborhoodSpec, NoiseFamily, PredictiveModel, RandomStream, WeightKernel,
};
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_l1(a: &[f64], want: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(want).map(|(x, y)| (x - y).abs()).sum();
    let den: f64 = want.iter().map(|y| y.abs()).sum();
    num / den
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// The default CLI pipeline: friedman-like data, n=1000, d=5, default MLP.
fn trained_mlp(seed: u64) -> (Model, Vec<Vec<f64>>) {
    let data = synth_generate(SynthKind::FriedmanLike, 1000, 5, 0.0, seed).unwrap();
    let (train, test) = split(&data, 0.8, seed).unwrap();
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let (model, _) = train_sgd(
        &train.features,
        &train.targets,
        &Architecture::default_regression_mlp(),
        &cfg,
    )
    .unwrap();
    (model, test.features.into_iter().take(20).collect())
}

fn criterion_1(model: &Model, points: &[Vec<f64>]) -> Outcome {
    let cfg = FitConfig::default();
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for (p, x0) in points.iter().take(5).enumerate() {
        let t = Instant::now();
        for m in [Method::SmoothGrad, Method::IntegratedGradients] {
            let inst = registry(m, &MethodParams::default(), x0.len()).unwrap();
            let rng = RandomStream::new(p as u64).fork(m.id());
            let pset = sample_perturbations(
                &inst.neighborhood,
                model,
                x0,
                &mut rng.fork("perturbations"),
                true,
            )
            .unwrap();
            let split = PsetSplit::new(pset.len(), &cfg, &mut rng.fork("split")).unwrap();
            let it = fit_iterative_on(&inst, &pset, &split, &cfg).unwrap();
            let cf = fit_closed_form_on(&inst, &pset, &split).unwrap();
            worst = worst.max(rel_l1(&it.weights, &cf.weights));
        }
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    outcome(
        worst < 1e-2 && slowest < 10.0,
        format!("max relative L1 {worst:.2e} (< 1e-2), slowest point {slowest:.3}s (< 10s)"),
    )
}

fn criterion_2() -> Outcome {
    let f = MlpModel::random(
        &[4, 8, 8, 1],
        Activation::Tanh,
        Activation::Identity,
        &mut RandomStream::new(21),
    );
    let x0 = [0.4, 0.1, -0.6, 0.2];
    let vg = f.gradient(&x0).unwrap();
    let sg: Vec<f64> = [0.5, 0.1, 0.01, 0.001]
        .iter()
        .map(|&s| {
            let p = MethodParams {
                sigma: Some(s),
                ..Default::default()
            };
            l1(
                &explain(Method::SmoothGrad, &p, &f, &x0, &mut RandomStream::new(3))
                    .unwrap()
                    .weights,
                &vg,
            )
        })
        .collect();
    let gxi: Vec<f64> = vg.iter().zip(&x0).map(|(g, x)| g * x).collect();
    let ig: Vec<f64> = [0.0, 0.5, 0.9, 0.99, 1.0 - 1e-4]
        .iter()
        .map(|&a| {
            let p = MethodParams {
                low: Some(a),
                ..Default::default()
            };
            l1(
                &explain(
                    Method::IntegratedGradients,
                    &p,
                    &f,
                    &x0,
                    &mut RandomStream::new(3),
                )
                .unwrap()
                .weights,
                &gxi,
            )
        })
        .collect();
    let mono = |d: &[f64]| d.windows(2).all(|w| w[1] <= w[0]);
    let sg_rel = sg[3] / vg.iter().map(|v| v.abs()).sum::<f64>();
    let ig_rel = ig[4] / gxi.iter().map(|v| v.abs()).sum::<f64>();
    outcome(
        mono(&sg) && mono(&ig) && sg_rel < 1e-3 && ig_rel < 1e-3,
        format!(
            "SmoothGrad L1 {:?} (relative {sg_rel:.1e} at 0.001); IG L1 {:?} (relative {ig_rel:.1e} at 1-1e-4)",
            sg.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>(),
            ig.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()
        ),
    )
}

fn run_cli(command: &str, out: &Path, threads: &str) -> Value {
    let o = Command::new(env!("CARGO_BIN_EXE_lfa"))
        .args([
            command,
            "--out",
            out.to_str().unwrap(),
            "--no-timestamp",
            "--threads",
            threads,
        ])
        .output()
        .unwrap();
    assert!(
        o.status.success(),
        "{command}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let file = match command {
        "perturb-test" => "perturb.json".to_string(),
        "train" => "metrics.json".to_string(),
        "explain" => "explain_smooth_grad.json".to_string(),
        _ => format!("{command}.json"),
    };
    serde_json::from_str(&std::fs::read_to_string(out.join(file)).unwrap()).unwrap()
}

fn criterion_3(out: &Path) -> Outcome {
    let report = run_cli("equivalence", out, "4");
    let m: EquivalenceMatrix = serde_json::from_value(report["result"]["matrix"].clone()).unwrap();
    let k = m.methods.len();
    let diagonal = (0..k).all(|i| (0..k).all(|j| m.l1[i][i] <= m.l1[i][j]));
    let gradient = [Method::SmoothGrad, Method::VanillaGradients, Method::CLime];
    let mut within = (0.0, 0);
    let mut cross = (0.0, 0);
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let same = gradient.contains(&m.methods[i]) == gradient.contains(&m.methods[j]);
            let slot = if same { &mut within } else { &mut cross };
            slot.0 += m.l1[i][j];
            slot.1 += 1;
        }
    }
    let (w, c) = (within.0 / within.1 as f64, cross.0 / cross.1 as f64);
    outcome(
        k == 8 && m.n_points == 20 && diagonal && w < c,
        format!("{k}x{k} matrix over {} points, diagonal argmin {diagonal}, within {w:.3} < cross {c:.3}", m.n_points),
    )
}

fn criterion_4() -> Outcome {
    let w = vec![2.0, -1.0, 0.5, 1.5];
    let f = Model::Linear(LinearModel::new(w.clone(), 0.3));
    let x0 = [0.8, 1.3, -0.6, 0.4];
    let wx: Vec<f64> = w.iter().zip(&x0).map(|(a, b)| a * b).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for m in Method::ALL {
        let e = explain(
            m,
            &MethodParams::default(),
            &f,
            &x0,
            &mut RandomStream::new(5),
        )
        .unwrap();
        let (target, tol) = if m.is_additive() {
            (&w, 1e-3)
        } else {
            (&wx, 1e-2)
        };
        let r = rel_l1(&e.weights, target);
        pass &= r < tol;
        parts.push(format!("{}={r:.1e}", m.id()));
    }
    outcome(
        pass,
        format!("relative L1 to w (additive) or w*x0: {}", parts.join(" ")),
    )
}

fn criterion_5() -> Outcome {
    let mut worst_mask: f64 = 0.0;
    for (x0, n) in [
        (vec![1.0, 0.5, 2.0], 1),
        (vec![0.3, -0.7, 1.1, 0.9], 2),
        (vec![0.25; 5], 3),
    ] {
        let f = SinusoidModel::vanishing_on_masks(&x0, n);
        for m in Method::ALL.into_iter().filter(|m| m.is_mask()) {
            let e = explain(
                m,
                &MethodParams::default(),
                &f,
                &x0,
                &mut RandomStream::new(6),
            )
            .unwrap();
            worst_mask = worst_mask.max(e.weights.iter().fold(0.0, |a, v| a.max(v.abs())));
        }
    }
    let w = vec![0.5, -1.0, 2.0];
    let f = LinearModel::new(w.clone(), 0.1);
    let x0 = [1.2, -0.7, 0.4];
    let mut worst_reparam: f64 = 0.0;
    for m in Method::ALL.into_iter().filter(|m| !m.is_additive()) {
        let p = MethodParams {
            param: Some(SurrogateParam::OfPerturbedInput),
            ..Default::default()
        };
        let e = explain(m, &p, &f, &x0, &mut RandomStream::new(7)).unwrap();
        worst_reparam = worst_reparam.max(rel_l1(&e.weights, &w));
    }
    outcome(
        worst_mask < 1e-8 && worst_reparam < 1e-3,
        format!("mask methods max |w_g| {worst_mask:.1e} (< 1e-8); reparameterized relative L1 {worst_reparam:.1e} (< 1e-3)"),
    )
}

/// Minimax linear fit by exhaustive grid over slope, intercept and input.
fn grid_class_distance(
    f: impl Fn(f64) -> f64,
    low: f64,
    high: f64,
    w_range: (f64, f64),
    b_range: (f64, f64),
) -> f64 {
    let xs: Vec<f64> = (0..=2000)
        .map(|i| low + (high - low) * i as f64 / 2000.0)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
    let score = |w: f64, b: f64| {
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| 0.5 * (y - w * x - b).powi(2))
            .fold(0.0, f64::max)
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let (mut wr, mut br) = (w_range, b_range);
    for _ in 0..4 {
        for i in 0..=60 {
            let w = wr.0 + (wr.1 - wr.0) * i as f64 / 60.0;
            for j in 0..=60 {
                let b = br.0 + (br.1 - br.0) * j as f64 / 60.0;
                let s = score(w, b);
                if s < best.0 {
                    best = (s, w, b);
                }
            }
        }
        let (dw, db) = ((wr.1 - wr.0) / 15.0, (br.1 - br.0) / 15.0);
        wr = (best.1 - dw, best.1 + dw);
        br = (best.2 - db, best.2 + db);
    }
    best.0
}

fn criterion_6() -> Outcome {
    let benign = NeighborhoodSpec {
        noise: NoiseFamily::GaussianAdditive { sigma: 0.01 },
        combine: CombineOp::Add,
        kernel: WeightKernel::Uniform,
        n_samples: 1000,
    };
    let sine = SinusoidModel::new(vec![1.0]);
    let r = nfl_construct(
        &sine,
        &Domain::cube(1, -PI, PI),
        &[0.0],
        &benign,
        &NflConfig::default(),
        &mut RandomStream::new(8),
    )
    .unwrap();
    let oracle = grid_class_distance(f64::sin, -PI, PI, (-1.0, 1.0), (-1.0, 1.0));
    let d = r.class_distance.d_hat;
    let sq = estimate_class_distance(
        &QuadraticModel::new(vec![1.0]),
        &Domain::cube(1, -1.0, 1.0),
        &SearchConfig::default(),
        &mut RandomStream::new(9),
    )
    .unwrap();
    let sq_oracle = grid_class_distance(|x| x * x, -1.0, 1.0, (-1.0, 1.0), (-1.0, 1.0));
    let pass = r.eps_hat < 0.01
        && r.adversarial_max_loss >= 0.95 * d
        && (d - oracle).abs() <= 0.05 * oracle
        && (sq.d_hat - 0.125).abs() <= 0.05 * 0.125
        && (sq_oracle - 0.125).abs() <= 1e-3;
    outcome(
        pass,
        format!(
            "sine: eps {:.1e}, Z2 max loss {:.3} vs 0.95*d {:.3}, d {d:.4} vs grid {oracle:.4}; x^2: d {:.4} vs 0.125",
            r.eps_hat,
            r.adversarial_max_loss,
            0.95 * d,
            sq.d_hat
        ),
    )
}

fn criterion_7(out: &Path) -> Outcome {
    let report = run_cli("perturb-test", out, "4");
    let tests = report["result"]["sign_tests"].as_array().unwrap();
    let mut pass = tests.len() == 2;
    let mut parts = Vec::new();
    for t in tests {
        let noise = t["noise"]["kind"].as_str().unwrap().to_string();
        let first = t["first"].as_array().unwrap();
        let expect_mask_first = noise == "binary_zero";
        pass &= first.iter().any(|m| m == "lime") == expect_mask_first;
        let wins: Vec<u64> = t["tests"]
            .as_array()
            .unwrap()
            .iter()
            .map(|k| k["wins"].as_u64().unwrap())
            .collect();
        let ks: Vec<u64> = t["tests"]
            .as_array()
            .unwrap()
            .iter()
            .map(|k| k["k"].as_u64().unwrap())
            .collect();
        pass &= ks == [1, 2, 3] && wins.iter().all(|w| *w >= 15);
        let winner = if expect_mask_first {
            "mask/multiplicative"
        } else {
            "additive-gradient"
        };
        parts.push(format!("{noise}: {winner} wins {wins:?}/20"));
    }
    outcome(pass, parts.join("; "))
}

fn fd_relative_error(f: &dyn PredictiveModel, x: &[f64]) -> f64 {
    let h = 1e-5;
    let g = f.gradient(x).unwrap();
    let mut probe = x.to_vec();
    let fd: Vec<f64> = (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f.value(&probe);
            probe[i] = x[i] - h;
            let down = f.value(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect();
    let diff = g
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / norm.max(1e-8)
}

fn criterion_8(model: &Model, points: &[Vec<f64>], out_a: &Path, out_b: &Path) -> Outcome {
    let mut rng = RandomStream::new(10);
    let zoo: Vec<Box<dyn PredictiveModel>> = vec![
        Box::new(LinearModel::new(vec![1.0, -2.0, 0.5], 0.2)),
        Box::new(LogisticModel::new(vec![1.0, -2.0, 0.5], 0.2)),
        Box::new(SinusoidModel::new(vec![1.0, 2.5, -0.7])),
        Box::new(QuadraticModel::new(vec![1.0, -3.0, 0.25])),
        Box::new(MlpModel::random(
            &[3, 6, 6, 1],
            Activation::Tanh,
            Activation::Identity,
            &mut rng,
        )),
        Box::new(MlpModel::random(
            &[3, 6, 1],
            Activation::Sigmoid,
            Activation::Sigmoid,
            &mut rng,
        )),
        Box::new(MlpModel::random(
            &[3, 6, 6, 1],
            Activation::Relu,
            Activation::Identity,
            &mut rng,
        )),
    ];
    let mut worst_fd: f64 = 0.0;
    for f in &zoo {
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.uniform(-1.5, 1.5)).collect();
            worst_fd = worst_fd.max(fd_relative_error(f.as_ref(), &x));
        }
    }
    for x in points {
        worst_fd = worst_fd.max(fd_relative_error(model, x));
    }
    let mut worst_ig: f64 = 0.0;
    for x0 in points.iter().take(5) {
        let ig = ref_integrated_gradients(model, x0, 1000).unwrap();
        let gap = model.value(x0) - model.value(&vec![0.0; x0.len()]);
        worst_ig = worst_ig.max((ig.iter().sum::<f64>() - gap).abs() / gap.abs());
    }
    let commands = [
        "train",
        "explain",
        "equivalence",
        "recover",
        "nfl",
        "perturb-test",
    ];
    for c in commands {
        run_cli(c, out_a, "1");
        run_cli(c, out_b, "4");
    }
    let mut files: Vec<_> = std::fs::read_dir(out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    files.sort();
    let differing: Vec<String> = files
        .iter()
        .filter(|name| {
            let a = std::fs::read_to_string(out_a.join(name)).unwrap();
            let b = std::fs::read_to_string(out_b.join(name)).unwrap();
            a.replace(out_a.to_str().unwrap(), "OUT") != b.replace(out_b.to_str().unwrap(), "OUT")
        })
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    let mut rerun_identical = true;
    for c in commands {
        let before: Vec<Vec<u8>> = files
            .iter()
            .map(|n| std::fs::read(out_a.join(n)).unwrap())
            .collect();
        run_cli(c, out_a, "2");
        let after: Vec<Vec<u8>> = files
            .iter()
            .map(|n| std::fs::read(out_a.join(n)).unwrap())
            .collect();
        rerun_identical &= before == after;
    }
    outcome(
        worst_fd < 1e-4 && worst_ig < 1e-3 && differing.is_empty() && rerun_identical,
        format!(
            "gradient check max relative error {worst_fd:.1e} (< 1e-4); IG completeness {worst_ig:.1e} (< 1e-3); {} output files byte-identical across reruns and thread counts: {}",
            files.len(),
            differing.is_empty() && rerun_identical
        ),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let (model, points) = trained_mlp(0);
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        (
            "closed-form equivalence of the iterative fit",
            Box::new(|| criterion_1(&model, &points)),
        ),
        (
            "limit convergence to gradients and gradient x input",
            Box::new(criterion_2),
        ),
        (
            "reference-vs-engine diagonal dominance",
            Box::new(|| criterion_3(&dir.path().join("c3"))),
        ),
        ("recovery dichotomy on linear models", Box::new(criterion_4)),
        (
            "vanishing sinusoid and reparameterized recovery",
            Box::new(criterion_5),
        ),
        ("no-free-lunch construction", Box::new(criterion_6)),
        (
            "perturbation-test crossover",
            Box::new(|| criterion_7(&dir.path().join("c7"))),
        ),
        (
            "numerical hygiene and determinism",
            Box::new(|| {
                criterion_8(
                    &model,
                    &points,
                    &dir.path().join("c8a"),
                    &dir.path().join("c8b"),
                )
            }),
        ),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!(
            "criterion {} {status} {name} [{:.1}s]: {}",
            i + 1,
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
