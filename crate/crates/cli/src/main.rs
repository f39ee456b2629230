use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

use rgnn::audit::{audit_pair, AuditReport, DEFAULT_OUTPUT_CAP};
use rgnn::cluster::partition;
use rgnn::experiment::{
    prepare_run, records_from_jsonl, records_to_jsonl, run_pipeline, summarize, summary_csv, summary_text, DataSource,
    Dataset, ExperimentConfig, Variant,
};
use rgnn::features::{LabelData, NodeSplit, Role};
use rgnn::freq::{estimate_grr_fs, estimate_matrix_inverse};
use rgnn::gnn::{accuracy, encode_input, evaluate, train, write_checkpoint, TrainConfig, TrainInputs};
use rgnn::graph::load_edge_list;
use rgnn::io;
use rgnn::ldp::{
    amplified_budget, perturb_features, perturb_labels, Budget, BudgetReport, PerturbMeta, PerturbedFeatures,
    PerturbedLabels, TransitionMatrix,
};
use rgnn::reconstruct::{
    feature_disagreement, reconstruct_features, reconstruct_labels, FeatureMode, ReconstructedFeatures,
};
use rgnn::synth::{synth_homophily_graph, SynthConfig};

const THREADS_ENV: &str = "RGNN_THREADS";

#[derive(Parser)]
#[command(
    name = "rgnn",
    version,
    about = "Node classification with locally private features and labels"
)]
struct Cli {
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic homophilous graph with categorical features.
    Synth(SynthArgs),
    /// Randomize features (GRR-FS) and labels (GRR) on the client side.
    Perturb(PerturbArgs),
    /// Balanced edge-cut partition of a graph.
    Partition(PartitionArgs),
    /// Server-side reconstruction of features and labels from reports.
    Reconstruct(ReconstructArgs),
    /// Frequency estimate from aggregated report counts.
    Estimate(EstimateArgs),
    /// Exact likelihood-ratio audit of GRR-FS.
    Audit(AuditArgs),
    /// Run the private pipeline once and train a model.
    Train(TrainArgs),
    /// Run a grid of experiments.
    Sweep(SweepArgs),
    /// Summarize sweep records.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    domain: Option<u32>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out: Option<f64>,
    #[arg(long)]
    skew: Option<f64>,
    #[arg(long)]
    label_rate: Option<f64>,
}

#[derive(Args)]
struct PerturbArgs {
    /// Directory with features.csv and labels.csv (and optionally splits.csv).
    #[arg(long, default_value = ".")]
    data_dir: PathBuf,
    #[arg(long, default_value = "1")]
    eps_x: Budget,
    #[arg(long, default_value = "1")]
    eps_y: Budget,
    /// Features sampled per node.
    #[arg(long, default_value_t = 10)]
    m: usize,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long, default_value = "edges.txt")]
    edges: PathBuf,
    #[arg(long, default_value_t = 16)]
    clusters: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Argmax,
    BinaryProb,
    BinaryProbFirst,
}

impl From<ModeArg> for FeatureMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Argmax => FeatureMode::Argmax,
            ModeArg::BinaryProb => FeatureMode::BinaryProb,
            ModeArg::BinaryProbFirst => FeatureMode::BinaryProbFirst,
        }
    }
}

#[derive(Args)]
struct ReconstructArgs {
    /// Directory with edges.txt, perturbed_features.csv, perturbed_labels.csv
    /// and perturb_meta.json.
    #[arg(long, default_value = ".")]
    data_dir: PathBuf,
    #[arg(long, default_value_t = 8)]
    k_x: usize,
    #[arg(long, default_value_t = 8)]
    k_y: usize,
    #[arg(long, value_enum, default_value = "argmax")]
    mode: ModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mechanism {
    Grr,
    GrrFs,
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV with header `category,count`; rows define the domain.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    eps: Budget,
    #[arg(long, value_enum, default_value = "grr")]
    mechanism: Mechanism,
    /// Feature dimension (grr-fs).
    #[arg(long)]
    d: Option<usize>,
    /// Sampled features per report (grr-fs).
    #[arg(long)]
    m: Option<usize>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Domain sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    domains: Vec<u32>,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    eps_x: f64,
    /// Input record; with --x-prime audits that pair only. Without both,
    /// every pair of inputs differing in one coordinate is audited.
    #[arg(long, value_delimiter = ',')]
    x: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    x_prime: Option<Vec<u32>>,
    /// Fail when the max ratio exceeds this value.
    #[arg(long)]
    bound: Option<f64>,
    /// Fail when the max ratio exceeds exp(amplified budget).
    #[arg(long)]
    assert_amplified: bool,
    #[arg(long, default_value_t = DEFAULT_OUTPUT_CAP)]
    cap: u128,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory with edges.txt, features.csv, labels.csv; splits.csv and
    /// truth.csv are used when present.
    #[arg(long, default_value = ".")]
    data_dir: PathBuf,
    #[arg(long, value_enum, default_value = "rgnn")]
    variant: VariantArg,
    #[arg(long)]
    eps_x: Option<Budget>,
    #[arg(long)]
    eps_y: Option<Budget>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k_x: Option<usize>,
    #[arg(long)]
    k_y: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Rgnn,
    NoFx,
    NoFy,
    NoLlp,
    NoisyBaseline,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Rgnn => Variant::Rgnn,
            VariantArg::NoFx => Variant::NoFx,
            VariantArg::NoFy => Variant::NoFy,
            VariantArg::NoLlp => Variant::NoLlp,
            VariantArg::NoisyBaseline => Variant::NoisyBaseline,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',')]
    variants: Option<Vec<VariantArg>>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON-lines records written by `sweep`.
    #[arg(long)]
    records: Option<PathBuf>,
}

fn threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV}={v:?} is not a count"))?;
            Ok(n.max(1))
        }
        Err(_) => Ok(1),
    }
}

fn read_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(io::read_json(p).with_context(|| format!("reading config {}", p.display()))?),
        None => Ok(T::default()),
    }
}

fn set_if<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn cmd_synth(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let mut cfg: SynthConfig = read_config(cli.config.as_deref())?;
    set_if(&mut cfg.num_nodes, args.nodes);
    set_if(&mut cfg.num_classes, args.classes);
    set_if(&mut cfg.dim, args.dim);
    set_if(&mut cfg.domain, args.domain);
    set_if(&mut cfg.p_in, args.p_in);
    set_if(&mut cfg.p_out, args.p_out);
    set_if(&mut cfg.feature_skew, args.skew);
    set_if(&mut cfg.label_rate, args.label_rate);
    set_if(&mut cfg.seed, cli.seed);
    let data = synth_homophily_graph(&cfg)?;
    let truth = LabelData::new(
        cfg.num_classes,
        data.communities.iter().map(|&c| Some(c as u32)).collect(),
    )?;
    let out = &cli.out_dir;
    data.graph.write_edge_list(&out.join("edges.txt"))?;
    io::write_features(&out.join("features.csv"), &data.features)?;
    io::write_labels(&out.join("labels.csv"), &data.labels)?;
    io::write_labels(&out.join("truth.csv"), &truth)?;
    io::write_splits(&out.join("splits.csv"), &NodeSplit::standard(cfg.num_nodes, cfg.seed))?;
    io::write_json(&out.join("synth.json"), &cfg)?;
    println!(
        "{} nodes, {} edges, homophily {:.3}",
        data.graph.num_nodes(),
        data.graph.num_edges(),
        data.graph.homophily(&data.communities)
    );
    Ok(())
}

fn cmd_perturb(cli: &Cli, args: &PerturbArgs) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let features = io::read_features(&args.data_dir.join("features.csv"), None)?;
    let n = features.num_nodes();
    let mut labels = io::read_labels(&args.data_dir.join("labels.csv"), n, None)?;
    let splits = args.data_dir.join("splits.csv");
    if splits.exists() {
        // test clients never report their labels
        let split = io::read_splits(&splits, n)?;
        let kept = (0..n)
            .map(|v| {
                if split.role(v) == Role::Test {
                    None
                } else {
                    labels.raw()[v]
                }
            })
            .collect();
        labels = LabelData::new(labels.num_classes(), kept)?;
    }
    let px = perturb_features(&features, args.m, args.eps_x, seed)?;
    let py = perturb_labels(&labels, args.eps_y, seed)?;
    let out = &cli.out_dir;
    io::write_features(&out.join("perturbed_features.csv"), px.table())?;
    io::write_labels(&out.join("perturbed_labels.csv"), py.data())?;
    let meta = PerturbMeta {
        eps_x: args.eps_x,
        eps_y: args.eps_y,
        m: args.m,
        seed,
        domains: features.domains().to_vec(),
        num_classes: labels.num_classes(),
    };
    io::write_json(&out.join("perturb_meta.json"), &meta)?;
    println!("{}", BudgetReport::new(args.eps_x, args.m, features.dim(), args.eps_y)?);
    Ok(())
}

fn cmd_partition(cli: &Cli, args: &PartitionArgs) -> Result<()> {
    let graph = load_edge_list(&args.edges, None)?;
    let assignment = partition(&graph, args.clusters, cli.seed.unwrap_or(0))?;
    io::write_clusters(&cli.out_dir.join("clusters.csv"), &assignment.cluster)?;
    println!("edge_cut {}", assignment.edge_cut);
    println!("cut_history {:?}", assignment.cut_history);
    println!("cluster,size");
    for (r, s) in assignment.sizes().iter().enumerate() {
        println!("{r},{s}");
    }
    Ok(())
}

fn cmd_reconstruct(cli: &Cli, args: &ReconstructArgs) -> Result<()> {
    let dir = &args.data_dir;
    let meta: PerturbMeta = io::read_json(&dir.join("perturb_meta.json"))?;
    let table = io::read_features(&dir.join("perturbed_features.csv"), Some(&meta.domains))?;
    let n = table.num_nodes();
    let graph = load_edge_list(&dir.join("edges.txt"), Some(n))?;
    let px = PerturbedFeatures::from_reports(table, meta.eps_x, meta.m)?;
    let labels = io::read_labels(&dir.join("perturbed_labels.csv"), n, Some(meta.num_classes))?;
    let py = PerturbedLabels::from_reports(labels, meta.eps_y)?;

    let rx = reconstruct_features(&graph, &px, args.k_x, args.mode.into())?;
    let ry = reconstruct_labels(&graph, &py, args.k_y)?;
    let out = &cli.out_dir;
    let disagreement = match &rx {
        ReconstructedFeatures::Categorical(f) => {
            io::write_features(&out.join("reconstructed_features.csv"), f)?;
            Some(feature_disagreement(&px, f))
        }
        ReconstructedFeatures::Probabilities { num_nodes, dim, values } => {
            io::write_real_features(&out.join("reconstructed_features.csv"), *num_nodes, *dim, values)?;
            None
        }
    };
    io::write_labels(&out.join("reconstructed_labels.csv"), ry.data())?;

    let class_counts = |f: &dyn Fn(usize) -> Option<usize>| {
        let mut counts = vec![0usize; meta.num_classes];
        for v in 0..n {
            if let Some(c) = f(v) {
                counts[c] += 1;
            }
        }
        counts
    };
    let changed = py
        .labeled_nodes()
        .iter()
        .filter(|&&v| py.class_of(v) != ry.class_of(v))
        .count();
    let report = serde_json::json!({
        "k_x": args.k_x,
        "k_y": args.k_y,
        "feature_disagreement": disagreement,
        "labeled_nodes": py.labeled_nodes().len(),
        "label_disagreement": changed as f64 / py.labeled_nodes().len().max(1) as f64,
        "perturbed_class_counts": class_counts(&|v| py.class_of(v)),
        "reconstructed_class_counts": class_counts(&|v| ry.class_of(v)),
    });
    io::write_json(&out.join("reconstruct_report.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let mut rdr = csv::Reader::from_path(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let mut cats = Vec::new();
    let mut counts = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        cats.push(rec.get(0).context("missing category")?.trim().to_string());
        let c: f64 = rec
            .get(1)
            .context("missing count")?
            .trim()
            .parse()
            .context("count must be a number")?;
        counts.push(c);
    }
    let n = counts.iter().sum::<f64>();
    if cats.len() < 2 || n <= 0.0 {
        bail!("need at least two categories and a positive total count");
    }
    let observed: Vec<f64> = counts.iter().map(|c| c / n).collect();
    let channel = TransitionMatrix::new(cats.len(), args.eps)?;
    let est = match args.mechanism {
        Mechanism::Grr => estimate_matrix_inverse(&observed, &channel, n.round() as usize)?,
        Mechanism::GrrFs => {
            let (Some(d), Some(m)) = (args.d, args.m) else {
                bail!("grr-fs needs --d and --m");
            };
            estimate_grr_fs(&observed, d, m, &channel, n.round() as usize)?
        }
    };
    let mut out = String::from("category,estimate,variance\n");
    for (k, cat) in cats.iter().enumerate() {
        out.push_str(&format!("{cat},{:?},{:?}\n", est.estimate[k], est.variance[k]));
    }
    match &args.output {
        Some(p) => fs::write(p, out).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn print_audit(report: &AuditReport, x: &[u32], xp: &[u32]) {
    println!("x={x:?} x'={xp:?}");
    println!("{:<16} {:>12} {:>12} {:>10}", "output", "Pr|x", "Pr|x'", "ratio");
    for r in &report.rows {
        println!(
            "{:<16} {:>12.6} {:>12.6} {:>10.6}",
            format!("{:?}", r.output),
            r.prob_x,
            r.prob_x_prime,
            r.ratio
        );
    }
    println!("max ratio {:.12} at {:?}", report.max_ratio, report.argmax);
}

fn all_inputs(domains: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &g in domains {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                (1..=g).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

fn cmd_audit(args: &AuditArgs) -> Result<bool> {
    let eps = Budget::finite(args.eps_x)?;
    let d = args.domains.len();
    let bound = match (args.bound, args.assert_amplified) {
        (Some(b), _) => Some(b),
        (None, true) => Some(amplified_budget(args.eps_x, args.m, d)?.exp()),
        (None, false) => None,
    };
    let pairs: Vec<(Vec<u32>, Vec<u32>)> = match (&args.x, &args.x_prime) {
        (Some(x), Some(xp)) => vec![(x.clone(), xp.clone())],
        (None, None) => {
            let inputs = all_inputs(&args.domains);
            let mut pairs = Vec::new();
            for x in &inputs {
                for xp in &inputs {
                    if x.iter().zip(xp).filter(|(a, b)| a != b).count() == 1 {
                        pairs.push((x.clone(), xp.clone()));
                    }
                }
            }
            pairs
        }
        _ => bail!("--x and --x-prime must be given together"),
    };
    let mut worst: f64 = 0.0;
    if pairs.len() == 1 {
        let (x, xp) = &pairs[0];
        let report = audit_pair(&args.domains, args.m, eps, x, xp, args.cap)?;
        print_audit(&report, x, xp);
        worst = report.max_ratio;
    } else {
        println!("{:<16} {:<16} {:>14}", "x", "x'", "max ratio");
        for (x, xp) in &pairs {
            let report = audit_pair(&args.domains, args.m, eps, x, xp, args.cap)?;
            println!(
                "{:<16} {:<16} {:>14.10}",
                format!("{x:?}"),
                format!("{xp:?}"),
                report.max_ratio
            );
            worst = worst.max(report.max_ratio);
        }
        println!("max ratio over {} pairs {:.12}", pairs.len(), worst);
    }
    if let Some(b) = bound {
        let ok = worst <= b * (1.0 + 1e-9);
        println!("bound {b:.12}: {}", if ok { "ok" } else { "VIOLATED" });
        return Ok(ok);
    }
    Ok(true)
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = read_config(cli.config.as_deref())?;
    set_if(&mut cfg.eps_x, args.eps_x);
    set_if(&mut cfg.eps_y, args.eps_y);
    set_if(&mut cfg.m, args.m);
    set_if(&mut cfg.k_x, args.k_x);
    set_if(&mut cfg.k_y, args.k_y);
    set_if(&mut cfg.clusters, args.clusters);
    set_if(&mut cfg.alpha, args.alpha);
    set_if(&mut cfg.epochs, args.epochs);
    set_if(&mut cfg.lr, args.lr);
    set_if(&mut cfg.seed, cli.seed);

    let dir = &args.data_dir;
    let data = Dataset::load(&DataSource::Files {
        edges: dir.join("edges.txt"),
        features: dir.join("features.csv"),
        labels: dir.join("labels.csv"),
    })?;
    let n = data.graph.num_nodes();
    let truth = match dir.join("truth.csv") {
        p if p.exists() => io::read_labels(&p, n, Some(data.labels.num_classes()))?,
        _ => data.labels.clone(),
    };
    let split = match dir.join("splits.csv") {
        p if p.exists() => io::read_splits(&p, n)?,
        _ => NodeSplit::standard(n, cfg.seed),
    };
    let test_nodes = split.nodes(Role::Test);
    let variant: Variant = args.variant.into();
    let prep = prepare_run(&data, &cfg, variant, split)?;
    println!(
        "{}",
        BudgetReport::new(cfg.eps_x, cfg.m, data.features.dim(), cfg.eps_y)?
    );

    let mut monitor = |probs: &Array2<f64>| accuracy(probs, |v| truth.class_of(v), &test_nodes).unwrap_or(f64::NAN);
    let inputs = TrainInputs {
        graph: &data.graph,
        features: &prep.features,
        labels: &prep.labels,
        train_nodes: &prep.train_nodes,
        val_nodes: &prep.val_nodes,
        val_labels: &prep.labels,
        bags: Some(&prep.bags),
    };
    let outcome = train(&prep.config, inputs, Some(&mut monitor))?;
    let x = encode_input(&prep.features)?;
    let test_acc = evaluate(&outcome.params, &data.graph, &x, &truth, &test_nodes).ok();

    let out = &cli.out_dir;
    let metrics = serde_json::json!({
        "variant": variant,
        "config": prep.config,
        "best_epoch": outcome.best_epoch,
        "test_acc": test_acc,
        "epochs": outcome.history,
    });
    io::write_json(&out.join("metrics.json"), &metrics)?;
    write_checkpoint(&outcome.params, &out.join("params.ckpt"))?;
    println!(
        "best epoch {} test accuracy {}",
        outcome.best_epoch,
        test_acc.map_or("n/a".into(), |a| format!("{:.4}", a))
    );
    Ok(())
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let mut cfg: ExperimentConfig = read_config(cli.config.as_deref())?;
    set_if(&mut cfg.seed, cli.seed);
    set_if(&mut cfg.repeats, args.repeats);
    set_if(&mut cfg.train.epochs, args.epochs);
    if let Some(v) = &args.variants {
        cfg.variants = v.iter().map(|&a| a.into()).collect();
    }
    let data = Dataset::load(&cfg.data)?;
    let result = run_pipeline(&cfg, &data, threads()?)?;
    for (gp, report) in &result.budgets {
        println!(
            "eps_x={} eps_y={} k_x={} k_y={} C={} alpha={}: {report}",
            gp.eps_x, gp.eps_y, gp.k_x, gp.k_y, gp.clusters, gp.alpha
        );
    }
    let out = &cli.out_dir;
    let records_path = out.join("records.jsonl");
    fs::write(&records_path, records_to_jsonl(&result.records)?)
        .with_context(|| format!("writing {}", records_path.display()))?;
    let budgets: Vec<_> = result
        .budgets
        .iter()
        .map(|(gp, r)| serde_json::json!({ "grid_point": gp, "budget": r }))
        .collect();
    io::write_json(&out.join("budgets.json"), &budgets)?;
    let failed = result.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see records.jsonl", result.records.len());
    }
    write_summary(out, &result.records)
}

fn write_summary(out: &Path, records: &[rgnn::experiment::RunRecord]) -> Result<()> {
    let rows = summarize(records);
    let text = summary_text(&rows);
    print!("{text}");
    fs::write(out.join("summary.txt"), &text)?;
    fs::write(out.join("summary.csv"), summary_csv(&rows))?;
    io::write_json(&out.join("summary.json"), &rows)?;
    Ok(())
}

fn cmd_report(cli: &Cli, args: &ReportArgs) -> Result<()> {
    let path = args
        .records
        .clone()
        .unwrap_or_else(|| cli.out_dir.join("records.jsonl"));
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let records = records_from_jsonl(&text)?;
    if records.is_empty() {
        bail!("no records in {}", path.display());
    }
    write_summary(&cli.out_dir, &records)
}

fn run(cli: &Cli) -> Result<bool> {
    fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    match &cli.command {
        Command::Synth(a) => cmd_synth(cli, a)?,
        Command::Perturb(a) => cmd_perturb(cli, a)?,
        Command::Partition(a) => cmd_partition(cli, a)?,
        Command::Reconstruct(a) => cmd_reconstruct(cli, a)?,
        Command::Estimate(a) => cmd_estimate(a)?,
        Command::Audit(a) => return cmd_audit(a),
        Command::Train(a) => cmd_train(cli, a)?,
        Command::Sweep(a) => cmd_sweep(cli, a)?,
        Command::Report(a) => cmd_report(cli, a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Ok(n) = threads() {
        if n > 1 {
            let _ = rayon_pool(n);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn rayon_pool(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}
