//! Acceptance gate. Prints one `PASS`/`FAIL`/`SKIP` line per criterion, with
//! indented detail lines, and exits nonzero if any criterion fails.
//!
//! The optional real-data check runs only when `RGNN_CORA_DIR` points at a
//! directory holding the Planetoid-format Cora files.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use rgnn::audit::{audit_pair, DEFAULT_OUTPUT_CAP};
use rgnn::cluster::{max_cluster_size, partition};
use rgnn::experiment::{records_to_jsonl, run_once, run_pipeline, DataSource, Dataset, ExperimentConfig, Variant};
use rgnn::features::NodeSplit;
use rgnn::freq::true_variance_grr_fs;
use rgnn::gnn::TrainConfig;
use rgnn::ldp::{amplified_budget, Budget, TransitionMatrix};
use rgnn::synth::SynthConfig;

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    details: Vec<String>,
}

impl Outcome {
    fn check(ok: bool, details: Vec<String>) -> Self {
        Outcome {
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            details,
        }
    }
}

fn budget_accountant() -> Outcome {
    let cases = [(1.0, 8.33, 0.05), (0.1, 0.28, 0.03), (0.01, 0.0197, 0.002)];
    let mut ok = true;
    let mut details = Vec::new();
    for (eps, target, tol) in cases {
        let got = amplified_budget(eps, 10, 53).unwrap();
        ok &= (got - target).abs() <= tol;
        details.push(format!("eps_x={eps}, m=10, d=53: {got:.4} (target {target} ± {tol})"));
    }
    Outcome::check(ok, details)
}

/// Largest likelihood ratio over all inputs and all neighbors that differ in
/// exactly one coordinate.
fn worst_single_coordinate_ratio(domains: &[u32], m: usize, eps: f64) -> (f64, Vec<u32>, Vec<u32>) {
    let mut inputs: Vec<Vec<u32>> = vec![vec![]];
    for &g in domains {
        inputs = inputs
            .into_iter()
            .flat_map(|x| (1..=g).map(move |v| [x.clone(), vec![v]].concat()))
            .collect();
    }
    let mut worst = (0.0, vec![], vec![]);
    for x in &inputs {
        for i in 0..domains.len() {
            for alt in 1..=domains[i] {
                if alt == x[i] {
                    continue;
                }
                let mut xp = x.clone();
                xp[i] = alt;
                let r = audit_pair(domains, m, Budget::Finite(eps), x, &xp, DEFAULT_OUTPUT_CAP).unwrap();
                if r.max_ratio > worst.0 {
                    worst = (r.max_ratio, x.clone(), xp);
                }
            }
        }
    }
    worst
}

fn privacy_audit() -> Outcome {
    let mut details = Vec::new();
    let (exact, _, _) = worst_single_coordinate_ratio(&[2, 2], 1, 3f64.ln());
    let exact_ok = (exact - 2.0).abs() <= 1e-9;
    details.push(format!(
        "d=2, m=1, γ=(2,2), ε_x=ln 3: max ratio {exact:.12} (target 2.0)"
    ));

    let mut r = common::rng(2024);
    let configs = 60;
    let (mut violations, mut equal_total, mut equal_bad, mut multi_total, mut multi_bad) = (0, 0, 0, 0, 0);
    let mut worst_excess: Option<(f64, String)> = None;
    for _ in 0..configs {
        let d = r.random_range(1..=4usize);
        let domains: Vec<u32> = (0..d).map(|_| r.random_range(2..=3)).collect();
        let m = r.random_range(1..=d);
        let eps = r.random_range(0.05..2.5);
        let (ratio, x, xp) = worst_single_coordinate_ratio(&domains, m, eps);
        let bound = amplified_budget(eps, m, d).unwrap().exp();
        let bad = ratio > bound * (1.0 + 1e-9);
        let equal = domains.iter().all(|&g| g == domains[0]);
        violations += usize::from(bad);
        equal_total += usize::from(equal);
        equal_bad += usize::from(equal && bad);
        multi_total += usize::from(m >= 2);
        multi_bad += usize::from(m >= 2 && bad);
        let excess = ratio / bound;
        if bad && worst_excess.as_ref().is_none_or(|(e, _)| excess > *e) {
            worst_excess = Some((
                excess,
                format!("γ={domains:?}, m={m}, ε_x={eps:.4}, x={x:?} vs {xp:?}: ratio {ratio:.4} > bound {bound:.4}"),
            ));
        }
    }
    details.push(format!("randomized sweep: {violations}/{configs} configs exceed e^ε_X"));
    details.push(format!("  equal domain sizes: {equal_bad}/{equal_total} exceed"));
    details.push(format!("  m >= 2: {multi_bad}/{multi_total} exceed"));
    if let Some((excess, desc)) = worst_excess {
        details.push(format!("  worst (×{excess:.4}): {desc}"));
        details.push("  violations need unequal domain sizes with m=1; the bound is not attainable there".into());
    }
    Outcome::check(exact_ok && violations == 0, details)
}

fn unbiasedness() -> Outcome {
    let (pi1, n, trials) = (0.8, 5000, 500);
    let eps = 3f64.ln();
    let t = common::run_trials(&[2, 2, 2, 2], 2, eps, pi1, n, trials, 7);
    let ch = TransitionMatrix::new(2, Budget::Finite(eps)).unwrap();
    let true_var = true_variance_grr_fs(t.lambda, 4, 2, ch.p(), ch.q(), n).unwrap();
    let se = (true_var / trials as f64).sqrt();
    let avg = common::mean(&t.estimates);
    let emp = common::sample_var(&t.estimates);
    let rel = (emp / true_var - 1.0).abs();
    Outcome::check(
        (avg - pi1).abs() <= 3.0 * se && rel <= 0.2,
        vec![
            format!("mean π̃_1 = {avg:.5}, |mean − 0.8| = {:.2} SE", (avg - pi1).abs() / se),
            format!(
                "empirical variance {emp:.3e} vs formula {true_var:.3e} ({:.1}% off)",
                100.0 * rel
            ),
        ],
    )
}

fn argmax_invariance() -> Outcome {
    let graphs = 25;
    let feat: usize = (0..graphs).map(common::feature_argmax_mismatches).sum();
    let lab: usize = (0..graphs).map(common::label_argmax_mismatches).sum();
    Outcome::check(
        feat == 0 && lab == 0,
        vec![format!(
            "{graphs} graphs: {feat} feature cells and {lab} labels differ from propagated argmax"
        )],
    )
}

fn gradient_check() -> Outcome {
    let errors: Vec<f64> = (0..12).map(|s| common::gradient_check_error(s, 1.0)).collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    Outcome::check(
        worst <= 1e-4,
        vec![format!("{} draws, worst relative error {worst:.2e}", errors.len())],
    )
}

fn trend_config(seed: u64) -> TrainConfig {
    TrainConfig {
        eps_x: Budget::Finite(1.0),
        eps_y: Budget::Finite(1.0),
        m: 10,
        k_x: 8,
        k_y: 6,
        clusters: 4,
        alpha: 1.0,
        seed,
        ..TrainConfig::default()
    }
}

/// Test accuracy of every variant for each seed (rows follow `Variant::ALL`).
fn accuracy_table(data: &Dataset, seeds: u64, config: impl Fn(u64) -> TrainConfig + Sync) -> Vec<[f64; 5]> {
    let n = data.graph.num_nodes();
    let jobs: Vec<(u64, usize)> = (0..seeds)
        .flat_map(|s| (0..Variant::ALL.len()).map(move |v| (s, v)))
        .collect();
    let accs: Vec<f64> = jobs
        .par_iter()
        .map(|&(seed, v)| {
            let split = NodeSplit::random(n, 0.5, 0.25, seed).unwrap();
            run_once(data, &config(seed), Variant::ALL[v], split).unwrap().0
        })
        .collect();
    accs.chunks(Variant::ALL.len()).map(|c| c.try_into().unwrap()).collect()
}

fn column_mean(table: &[[f64; 5]], v: Variant) -> f64 {
    let k = Variant::ALL.iter().position(|&x| x == v).unwrap();
    table.iter().map(|row| row[k]).sum::<f64>() / table.len() as f64
}

fn end_to_end_trend() -> Outcome {
    let data = Dataset::load(&DataSource::Synth(SynthConfig::default())).unwrap();
    let table = accuracy_table(&data, 5, trend_config);
    let k = |v: Variant| Variant::ALL.iter().position(|&x| x == v).unwrap();
    let rgnn = column_mean(&table, Variant::Rgnn);
    let noisy = column_mean(&table, Variant::NoisyBaseline);
    let mut ok = rgnn >= noisy + 0.10;
    let mut details = vec![format!(
        "mean accuracy over 5 seeds: rgnn {rgnn:.3}, noisy-baseline {noisy:.3}"
    )];
    for v in [Variant::NoLlp, Variant::NoFy, Variant::NoFx] {
        let wins = table.iter().filter(|row| row[k(Variant::Rgnn)] >= row[k(v)]).count();
        ok &= wins * 2 > table.len();
        details.push(format!(
            "rgnn >= {} in {wins}/{} seeds (mean {:.3})",
            v.as_str(),
            table.len(),
            column_mean(&table, v)
        ));
    }
    Outcome::check(ok, details)
}

fn real_data_check() -> Outcome {
    let Some(dir) = std::env::var_os("RGNN_CORA_DIR").map(PathBuf::from) else {
        return Outcome {
            verdict: Verdict::Skip,
            details: vec!["RGNN_CORA_DIR not set".into()],
        };
    };
    let source = DataSource::Citation {
        dir,
        name: "cora".into(),
        group_size: Some(25),
    };
    let data = match Dataset::load(&source) {
        Ok(d) => d,
        Err(e) => return Outcome::check(false, vec![format!("could not load dataset: {e}")]),
    };
    let table = accuracy_table(&data, 5, |seed| TrainConfig {
        eps_x: Budget::Finite(1.0),
        eps_y: Budget::Finite(2.0),
        m: 10,
        seed,
        ..TrainConfig::default()
    });
    let rgnn = column_mean(&table, Variant::Rgnn);
    let noisy = column_mean(&table, Variant::NoisyBaseline);
    Outcome::check(
        rgnn >= noisy + 0.20,
        vec![format!(
            "d'={}, rgnn {rgnn:.3} vs noisy-baseline {noisy:.3}",
            data.features.dim()
        )],
    )
}

fn partitioner() -> Outcome {
    let graphs = 60;
    let (mut unbalanced, mut empty, mut increasing, mut nondet) = (0, 0, 0, 0);
    for i in 0..graphs {
        let n = 20 + 7 * i as usize;
        let g = common::random_graph(n, 4.0 / n as f64, 500 + i);
        let c = 2 + (i as usize % 10);
        let a = partition(&g, c, i).unwrap();
        let cap = max_cluster_size(n, c);
        let sizes = a.sizes();
        unbalanced += usize::from(sizes.iter().any(|&s| s > cap));
        empty += usize::from(sizes.contains(&0));
        increasing += usize::from(a.cut_history.windows(2).any(|w| w[1] > w[0]));
        nondet += usize::from(partition(&g, c, i).unwrap() != a);
    }
    Outcome::check(
        unbalanced + empty + increasing + nondet == 0,
        vec![format!(
            "{graphs} graphs: {unbalanced} over the size cap, {empty} with empty clusters, \
             {increasing} with a rising cut, {nondet} nondeterministic"
        )],
    )
}

fn sweep_determinism() -> Outcome {
    let config = ExperimentConfig {
        data: DataSource::Synth(SynthConfig {
            num_nodes: 300,
            p_in: 0.06,
            p_out: 0.006,
            ..SynthConfig::default()
        }),
        train: TrainConfig {
            epochs: 30,
            clusters: 4,
            ..TrainConfig::default()
        },
        variants: Variant::ALL.to_vec(),
        repeats: 2,
        seed: 17,
        ..ExperimentConfig::default()
    };
    let data = Dataset::load(&config.data).unwrap();
    let a = records_to_jsonl(&run_pipeline(&config, &data, 1).unwrap().records).unwrap();
    let b = records_to_jsonl(&run_pipeline(&config, &data, 1).unwrap().records).unwrap();
    Outcome::check(
        a == b,
        vec![format!(
            "{} records, {} bytes, identical: {}",
            a.lines().count(),
            a.len(),
            a == b
        )],
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("1 budget accountant", budget_accountant),
        ("2 privacy audit", privacy_audit),
        ("3 unbiasedness", unbiasedness),
        ("4 argmax invariances", argmax_invariance),
        ("5 gradient check", gradient_check),
        ("6 end-to-end trend", end_to_end_trend),
        ("7 real-data check", real_data_check),
        ("8 partitioner", partitioner),
        ("9 sweep determinism", sweep_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let tag = match outcome.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Skip => "SKIP",
        };
        println!("{tag} {name} ({:.1}s)", start.elapsed().as_secs_f64());
        for line in outcome.details {
            println!("     {line}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
