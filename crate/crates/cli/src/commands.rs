use lfa_core::analysis::{
    check_recovery, crossover_sign_test, equivalence_matrix, nfl_construct, perturbation_test,
    reparam_recovery_check, Domain, PerturbCurve, PerturbNoise, RecoveryReport,
};
use lfa_core::engine::{explain_instance, Solver};
use lfa_core::models::{LinearModel, LogisticModel, QuadraticModel, SinusoidModel};
use lfa_core::{
    explain, registry, CombineOp, Explanation, Method, Model, NeighborhoodSpec, NoiseFamily,
    PredictiveModel, RandomStream, WeightKernel,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{MethodEntry, NflFunction, RecoveryCase};
use crate::pipeline::{mse, prepare, select_points};
use crate::report::Writer;
use crate::{CliError, Command, Run};

pub fn dispatch(run: &Run) -> Result<Vec<std::path::PathBuf>, CliError> {
    let mut out = Writer::new(run)?;
    match run.command {
        Command::Train => train(run, &mut out)?,
        Command::Explain => explain_points(run, &mut out)?,
        Command::Equivalence => equivalence(run, &mut out)?,
        Command::Recover => recover(run, &mut out)?,
        Command::Nfl => nfl(run, &mut out)?,
        Command::PerturbTest => perturb(run, &mut out)?,
    }
    Ok(out.finish())
}

fn train(run: &Run, out: &mut Writer) -> Result<(), CliError> {
    let p = prepare(&run.config)?;
    out.text("model.json", &(p.model.to_json()? + "\n"))?;
    out.report(
        "metrics.json",
        json!({
            "family": p.model.family(),
            "n_train": p.train.len(),
            "n_test": p.test.len(),
            "train_mse": mse(&p.model, &p.train),
            "test_mse": mse(&p.model, &p.test),
            "final_training_loss": p.training.as_ref().map(|r| r.final_loss()),
            "epoch_losses": p.training.as_ref().map(|r| r.epoch_losses.clone()),
        }),
    )
}

/// One explanation per point, each drawn from its own forked stream.
fn explain_method<M: PredictiveModel + Sync + ?Sized>(
    run: &Run,
    entry: &MethodEntry,
    f: &M,
    points: &[Vec<f64>],
    root: &RandomStream,
) -> Result<Vec<Explanation>, CliError> {
    let stream = root.fork(entry.method.id());
    let section = &run.config.explain;
    points
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let mut rng = stream.fork_indexed("point", i as u64);
            let e = match section.solver {
                Solver::ClosedForm => explain(entry.method, &entry.params, f, x0, &mut rng)?,
                Solver::Iterative => {
                    let instance = registry(entry.method, &entry.params, x0.len())?;
                    explain_instance(&instance, f, x0, &mut rng, Solver::Iterative, &section.fit)?
                }
            };
            Ok(e)
        })
        .collect()
}

fn explain_points(run: &Run, out: &mut Writer) -> Result<(), CliError> {
    let p = prepare(&run.config)?;
    let points = select_points(&run.config, &p)?;
    let root = RandomStream::new(run.config.seed).fork("explain");
    let mut summary = String::from("method,point,intercept");
    for j in 0..p.model.input_dim() {
        summary.push_str(&format!(",w{j}"));
    }
    summary.push('\n');
    for entry in &run.config.methods {
        let exps = explain_method(run, entry, &p.model, &points, &root)?;
        for (i, e) in exps.iter().enumerate() {
            summary.push_str(&format!("{},{i},{:?}", entry.method, e.intercept));
            for w in &e.weights {
                summary.push_str(&format!(",{w:?}"));
            }
            summary.push('\n');
        }
        out.report(&format!("explain_{}.json", entry.method.id()), &exps)?;
    }
    out.text("explanations.csv", &summary)
}

fn equivalence(run: &Run, out: &mut Writer) -> Result<(), CliError> {
    let p = prepare(&run.config)?;
    let points = select_points(&run.config, &p)?;
    let cfg = run.config.equivalence.to_config(&run.config.methods);
    let rng = RandomStream::new(run.config.seed).fork("equivalence");
    let m = equivalence_matrix(&p.model, &points, &cfg, &rng)?;
    let argmin = m.row_argmin();
    out.text("equivalence.csv", &m.to_csv())?;
    out.report(
        "equivalence.json",
        json!({
            "matrix": &m,
            "row_argmin": argmin,
            "diagonal_dominant": m.diagonal_dominant(),
        }),
    )
}

fn case_model(case: &RecoveryCase) -> (Model, Vec<f64>) {
    match case {
        RecoveryCase::Linear {
            weights,
            intercept,
            x0,
        } => (
            Model::Linear(LinearModel::new(weights.clone(), *intercept)),
            x0.clone(),
        ),
        RecoveryCase::Logistic {
            weights,
            intercept,
            x0,
        } => (
            Model::Logistic(LogisticModel::new(weights.clone(), *intercept)),
            x0.clone(),
        ),
        RecoveryCase::VanishingSinusoid { x0, n } => (
            Model::Sinusoid(SinusoidModel::vanishing_on_masks(x0, *n)),
            x0.clone(),
        ),
    }
}

fn recover(run: &Run, out: &mut Writer) -> Result<(), CliError> {
    let root = RandomStream::new(run.config.seed).fork("recover");
    let mut reports: Vec<RecoveryReport> = Vec::new();
    for (c, case) in run.config.recover.cases.iter().enumerate() {
        let (f, x0) = case_model(case);
        let stream = root.fork_indexed("case", c as u64);
        for entry in &run.config.methods {
            let m = entry.method;
            if matches!(f, Model::Sinusoid(_)) && !m.is_mask() {
                continue;
            }
            let mut rng = stream.fork(m.id());
            reports.push(check_recovery(m, &entry.params, &f, &x0, &mut rng)?);
            if run.config.recover.reparameterize
                && matches!(f, Model::Linear(_))
                && !m.is_additive()
            {
                let mut rng = stream.fork(m.id()).fork("reparameterized");
                reports.push(reparam_recovery_check(m, &entry.params, &f, &x0, &mut rng)?);
            }
        }
    }
    let mut csv = String::from("family,method,param,target,relative_l1,linf,threshold,recovered\n");
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{:?},{:?},{:?},{}\n",
            r.family,
            r.method,
            serde_json::to_value(r.param)
                .map_err(|e| CliError::Runtime(e.to_string()))?
                .as_str()
                .unwrap_or(""),
            serde_json::to_value(r.target)
                .map_err(|e| CliError::Runtime(e.to_string()))?
                .as_str()
                .unwrap_or(""),
            r.relative_l1,
            r.linf,
            r.threshold,
            r.recovered
        ));
    }
    out.text("recover.csv", &csv)?;
    out.report("recover.json", &reports)
}

fn nfl(run: &Run, out: &mut Writer) -> Result<(), CliError> {
    let s = &run.config.nfl;
    let d = s.x0.len();
    let f = match s.function {
        NflFunction::Sine => Model::Sinusoid(SinusoidModel::new(vec![1.0; d])),
        NflFunction::Square => Model::Quadratic(QuadraticModel::new(vec![1.0; d])),
    };
    let domain = Domain {
        low: s.low.clone(),
        high: s.high.clone(),
    };
    let benign = NeighborhoodSpec {
        noise: NoiseFamily::GaussianAdditive {
            sigma: s.benign_sigma,
        },
        combine: CombineOp::Add,
        kernel: WeightKernel::Uniform,
        n_samples: s.benign_samples,
    };
    let mut rng = RandomStream::new(run.config.seed).fork("nfl");
    let r = nfl_construct(&f, &domain, &s.x0, &benign, &s.search, &mut rng)?;
    out.report("nfl.json", &r)
}

#[derive(Serialize)]
struct SignTestReport {
    first: Vec<Method>,
    second: Vec<Method>,
    noise: PerturbNoise,
    tests: Vec<lfa_core::analysis::SignTest>,
}

fn perturb(run: &Run, out: &mut Writer) -> Result<(), CliError> {
    let s = &run.config.perturb_test;
    let p = prepare(&run.config)?;
    let points = select_points(&run.config, &p)?;
    let explain_root = RandomStream::new(run.config.seed).fork("explain");
    let perturb_root = RandomStream::new(run.config.seed).fork("perturb");
    let noises = [
        PerturbNoise::BinaryZero,
        PerturbNoise::Gaussian {
            sigma: s.gaussian_sigma,
        },
    ];
    let mut curves: Vec<Vec<PerturbCurve>> = vec![Vec::new(); noises.len()];
    let mut csv = String::from("method,noise,k,mean_abs_delta\n");
    for entry in &run.config.methods {
        let weights: Vec<Vec<f64>> = explain_method(run, entry, &p.model, &points, &explain_root)?
            .into_iter()
            .map(|e| e.weights)
            .collect();
        for (slot, noise) in noises.iter().enumerate() {
            let trials = if matches!(noise, PerturbNoise::BinaryZero) {
                1
            } else {
                s.trials
            };
            let c = perturbation_test(
                &p.model,
                entry.method.id(),
                &points,
                &weights,
                &s.k_values,
                *noise,
                trials,
                &perturb_root,
            )?;
            csv.push_str(
                c.to_csv()
                    .lines()
                    .skip(1)
                    .map(|l| format!("{l}\n"))
                    .collect::<String>()
                    .as_str(),
            );
            curves[slot].push(c);
        }
    }
    out.text("perturb_curves.csv", &csv)?;
    let (multiplicative, additive): (Vec<&MethodEntry>, Vec<&MethodEntry>) = run
        .config
        .methods
        .iter()
        .partition(|e| !e.method.is_additive());
    let mut tests = Vec::new();
    if !multiplicative.is_empty() && !additive.is_empty() {
        for (slot, noise) in noises.iter().enumerate() {
            let group = |g: &[&MethodEntry]| -> Vec<&PerturbCurve> {
                curves[slot]
                    .iter()
                    .filter(|c| g.iter().any(|e| e.method.id() == c.method))
                    .collect()
            };
            let (first, second) = match noise {
                PerturbNoise::BinaryZero => (&multiplicative, &additive),
                PerturbNoise::Gaussian { .. } => (&additive, &multiplicative),
            };
            tests.push(SignTestReport {
                first: first.iter().map(|e| e.method).collect(),
                second: second.iter().map(|e| e.method).collect(),
                noise: *noise,
                tests: crossover_sign_test(&group(first), &group(second))?,
            });
        }
    }
    out.report(
        "perturb.json",
        json!({ "curves": curves, "sign_tests": tests }),
    )
}
