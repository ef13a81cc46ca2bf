use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use amie::config::Config;
use amie::error::{AppError, AppResult, CoreContext};
use amie::formats::{dataset_csv, graph_text};
use amie::harness::figures::run_figure_suite;
use amie::harness::inducing::count_inducing_paths;
use amie::harness::output::{read_json, write_result, Export, Format};
use amie::harness::semi::{run_semisynthetic, NetworkSource, SemiSpec};
use amie::harness::synthetic::{run_grid, ExperimentResult};
use amie::harness::verify::{chi_square_calibration, graph_equivalence, parent_recovery};
use amie::harness::{ExperimentKind, ExperimentSpec};
use amie_core::data::split;
use amie_core::explain::{build_report, ReportOptions, Threshold};
use amie_core::graph::{CausalDag, RoleConfig};
use amie_core::learn::{fit_forest, fit_logreg, ForestParams, LogRegParams, ModelKind, ProbModel};
use amie_core::synth::{generate_dag, mask_latents, random_cpts, sample, GenConfig, LatentMode, OracleModel};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "amie", version, about = "Average model intervention effects on synthetic and public networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one random network (and optionally a sample) as files.
    Gen(Common),
    /// Consistency study without latent variables.
    NoLatent(Common),
    /// Consistency study with latents that keep an observed relative.
    ConnectedLatent(Common),
    /// Risk study with standalone latent direct causes.
    Standalone(Common),
    /// Count random masked DAGs containing inducing paths.
    InducingCount(Common),
    /// Rankings on a public network (insurance, water or a BIF file).
    Semisynthetic(Semi),
    /// One report for a dataset and a model.
    Explain(Explain),
    /// Run the property suites.
    Verify(Verify),
    /// Check the cell statistics of a result file against its rows.
    Check { file: PathBuf },
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the built-in defaults.
#[derive(Args, Clone, Default)]
struct Common {
    /// `key = value` file with defaults for any flag below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Node counts, comma separated.
    #[arg(long)]
    nodes: Option<String>,
    /// Edges per node, comma separated.
    #[arg(long)]
    density: Option<String>,
    /// Latent counts, comma separated.
    #[arg(long)]
    latents: Option<String>,
    /// none, connected or standalone (gen only).
    #[arg(long)]
    latent_mode: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    /// logreg, rf, oracle; comma separated.
    #[arg(long)]
    model: Option<String>,
    /// Absolute non-zero cut-off for every model.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    train_frac: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv.
    #[arg(long)]
    format: Option<String>,
    /// Use the full-scale grid instead of the desk-scale one.
    #[arg(long)]
    full: bool,
}

#[derive(Args, Clone)]
struct Semi {
    #[command(flatten)]
    common: Common,
    /// insurance, water, or a path to a BIF file.
    #[arg(long, default_value = "insurance")]
    network: String,
    #[arg(long)]
    outcome: Option<String>,
    /// Outcome levels mapped to 1; defaults to the most frequent level.
    #[arg(long)]
    positive: Option<String>,
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Args, Clone)]
struct Explain {
    #[command(flatten)]
    common: Common,
    /// Dataset CSV; without a `__split__` column it is split with --train-frac.
    #[arg(long)]
    data: PathBuf,
    /// Network text; needed by the oracle and used as truth graph.
    #[arg(long)]
    net: Option<PathBuf>,
    /// Graph text used as truth graph.
    #[arg(long)]
    graph: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Verify {
    #[command(flatten)]
    common: Common,
    /// graph, chi-square, parents, figures or all.
    #[arg(long, default_value = "all")]
    suite: String,
}

/// Flag values merged over the config file.
struct Settings {
    common: Common,
    config: Config,
}

impl Settings {
    fn new(common: &Common) -> AppResult<Self> {
        let config = match &common.config {
            Some(p) => Config::parse(&std::fs::read_to_string(p).map_err(|e| AppError::io(p, e))?)?,
            None => Config::default(),
        };
        const KNOWN: &[&str] = &[
            "nodes",
            "density",
            "latents",
            "latent-mode",
            "replicates",
            "samples",
            "model",
            "epsilon",
            "alpha",
            "train-frac",
            "seed",
            "out",
            "format",
            "full",
        ];
        if let Some(k) = config.keys().find(|k| !KNOWN.contains(k)) {
            return Err(AppError::Usage(format!("unknown config key `{k}`")));
        }
        Ok(Self { common: common.clone(), config })
    }

    fn raw(&self, key: &str) -> Option<String> {
        let c = &self.common;
        let flag = match key {
            "nodes" => &c.nodes,
            "density" => &c.density,
            "latents" => &c.latents,
            "latent-mode" => &c.latent_mode,
            "replicates" => &c.replicates,
            "samples" => &c.samples,
            "model" => &c.model,
            "epsilon" => &c.epsilon,
            "alpha" => &c.alpha,
            "train-frac" => &c.train_frac,
            "seed" => &c.seed,
            "format" => &c.format,
            _ => &None,
        };
        flag.clone().or_else(|| self.config.get(key).map(str::to_string))
    }

    fn one<T: FromStr>(&self, key: &str) -> AppResult<Option<T>> {
        self.raw(key)
            .map(|v| v.trim().parse().map_err(|_| AppError::Usage(format!("invalid --{key} `{v}`"))))
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> AppResult<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|p| p.trim().parse().map_err(|_| AppError::Usage(format!("invalid --{key} entry `{p}`"))))
                    .collect()
            })
            .transpose()
    }

    fn models(&self) -> AppResult<Option<Vec<ModelKind>>> {
        self.raw("model")
            .map(|v| {
                v.split(',')
                    .map(|p| {
                        ModelKind::parse(p.trim())
                            .ok_or_else(|| AppError::Usage(format!("unknown model `{p}` (logreg, rf, oracle)")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn full(&self) -> bool {
        self.common.full || self.config.get("full") == Some("true")
    }

    fn out(&self) -> PathBuf {
        self.common
            .out
            .clone()
            .or_else(|| self.config.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }

    fn format(&self) -> AppResult<Format> {
        match self.raw("format") {
            None => Ok(Format::Json),
            Some(f) => Format::parse(&f).ok_or_else(|| AppError::Usage(format!("unknown format `{f}` (csv, json)"))),
        }
    }

    fn seed(&self) -> AppResult<u64> {
        Ok(self.one("seed")?.unwrap_or(0))
    }

    fn grid_spec(&self, kind: ExperimentKind) -> AppResult<ExperimentSpec> {
        if let Some(mode) = self.raw("latent-mode") {
            let m = LatentMode::parse(&mode).ok_or_else(|| AppError::Usage(format!("unknown latent mode `{mode}`")))?;
            if m != kind.latent_mode() {
                return Err(AppError::Usage(format!(
                    "{} runs use latent mode {}",
                    kind.name(),
                    kind.latent_mode().as_str()
                )));
            }
        }
        let mut spec = if self.full() { ExperimentSpec::full(kind) } else { ExperimentSpec::desk(kind) };
        if let Some(v) = self.list("nodes")? {
            spec.nodes = v;
        }
        if let Some(v) = self.list("density")? {
            spec.densities = v;
        }
        if let Some(v) = self.list("latents")? {
            spec.latents = v;
        }
        if let Some(v) = self.one("replicates")? {
            spec.replicates = v;
        }
        if let Some(v) = self.one("samples")? {
            spec.samples = v;
        }
        if let Some(v) = self.models()? {
            spec.models = v;
        }
        spec.epsilon = self.one("epsilon")?.or(spec.epsilon);
        if let Some(v) = self.one("alpha")? {
            spec.alpha = v;
        }
        if let Some(v) = self.one("train-frac")? {
            spec.train_fraction = v;
        }
        spec.seed = self.seed()?;
        spec.validate()?;
        Ok(spec)
    }
}

fn emit<T: Export>(settings: &Settings, name: &str, value: &T) -> AppResult<()> {
    for path in write_result(&settings.out(), name, settings.format()?, value)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

fn print_grid(res: &ExperimentResult) {
    println!("nodes  d    l  model   reps  recall        precision     accuracy  case1 case2 case3 unexpl");
    for s in &res.summaries {
        println!(
            "{:<6} {:<4} {:<2} {:<7} {:<5} {:>5}±{:<6} {:>5}±{:<6} {:>8}  {:<5} {:<5} {:<5} {}",
            s.nodes,
            s.density,
            s.latents,
            s.model.as_str(),
            s.replicates,
            fmt_opt(s.recall.map(|x| x.mean)),
            fmt_opt(s.recall.map(|x| x.std)),
            fmt_opt(s.precision.map(|x| x.mean)),
            fmt_opt(s.precision.map(|x| x.std)),
            fmt_opt(s.accuracy.map(|x| x.mean)),
            s.case1,
            s.case2,
            s.case3 + s.case3_relaxed,
            s.unexplained
        );
    }
}

fn run_grid_command(common: &Common, kind: ExperimentKind) -> AppResult<()> {
    let settings = Settings::new(common)?;
    let spec = settings.grid_spec(kind)?;
    let out = settings.out();
    std::fs::create_dir_all(&out).map_err(|e| AppError::io(&out, e))?;
    if kind == ExperimentKind::InducingPathCount {
        let res = count_inducing_paths(&spec)?;
        res.verify()?;
        println!("nodes  d    l  dags  with-path  strict  case3");
        for c in &res.cells {
            println!(
                "{:<6} {:<4} {:<2} {:<5} {:<10} {:<7} {}",
                c.nodes,
                c.density,
                c.latents,
                c.replicates,
                c.dags_with_path,
                c.dags_with_strict_path,
                c.dags_with_case3
            );
        }
        return emit(&settings, kind.name(), &res);
    }
    let checkpoint = out.join(format!("{}.checkpoint.jsonl", kind.name()));
    let res = run_grid(&spec, Some(&checkpoint))?;
    res.verify()?;
    print_grid(&res);
    emit(&settings, kind.name(), &res)?;
    std::fs::remove_file(&checkpoint).map_err(|e| AppError::io(&checkpoint, e))
}

fn run_gen(common: &Common) -> AppResult<()> {
    let settings = Settings::new(common)?;
    let mode = match settings.raw("latent-mode") {
        Some(m) => LatentMode::parse(&m).ok_or_else(|| AppError::Usage(format!("unknown latent mode `{m}`")))?,
        None => LatentMode::None,
    };
    let latents: usize = settings.one("latents")?.unwrap_or(0);
    if latents > 0 && mode == LatentMode::None {
        return Err(AppError::Usage("--latents needs --latent-mode connected or standalone".into()));
    }
    let cfg = GenConfig {
        total_nodes: settings.one("nodes")?.unwrap_or(20),
        edge_ratio: settings.one("density")?.unwrap_or(2.0),
        latent_count: latents,
        latent_mode: mode,
        seed: settings.seed()?,
        ..GenConfig::default()
    };
    cfg.validate().map_err(|e| AppError::Usage(e.to_string()))?;
    let dag = mask_latents(&generate_dag(&cfg).context(|| "generating DAG".into())?, &cfg)
        .context(|| "masking latents".into())?;
    let net = random_cpts(&dag, &cfg).context(|| "drawing CPTs".into())?;
    let out = settings.out();
    std::fs::create_dir_all(&out).map_err(|e| AppError::io(&out, e))?;
    let net_path = out.join("net.txt");
    std::fs::write(&net_path, graph_text::write_net(&net)).map_err(|e| AppError::io(&net_path, e))?;
    println!("wrote {} ({} nodes, {} edges)", net_path.display(), dag.node_count(), dag.edge_count());
    let samples: usize = settings.one("samples")?.unwrap_or(0);
    if samples > 0 {
        let data = sample(&net, samples, cfg.seed).context(|| "sampling".into())?.data;
        let data = split(&data, settings.one("train-frac")?.unwrap_or(0.7), cfg.seed).context(|| "split".into())?;
        let path = out.join("data.csv");
        let file = std::fs::File::create(&path).map_err(|e| AppError::io(&path, e))?;
        dataset_csv::write_dataset(&data, file).map_err(|source| AppError::Csv { path: path.clone(), source })?;
        println!("wrote {} ({samples} rows)", path.display());
    }
    Ok(())
}

fn run_semi(args: &Semi) -> AppResult<()> {
    let settings = Settings::new(&args.common)?;
    let mut spec = SemiSpec::for_network(NetworkSource::parse(&args.network), args.outcome.as_deref())?;
    if let Some(p) = &args.positive {
        spec.positive_levels = Some(p.split(',').map(|s| s.trim().to_string()).collect());
    }
    if let Some(k) = args.top_k {
        spec.top_k = k;
    }
    if let Some(v) = settings.one("samples")? {
        spec.samples = v;
    }
    if let Some(v) = settings.models()? {
        spec.models = v;
    }
    spec.epsilon = settings.one("epsilon")?;
    if let Some(v) = settings.one("alpha")? {
        spec.alpha = v;
    }
    if let Some(v) = settings.one("train-frac")? {
        spec.train_fraction = v;
    }
    spec.seed = settings.seed()?;
    let res = run_semisynthetic(&spec)?;
    for d in &res.counts.discrepancies {
        println!("note: {d}");
    }
    println!("positive levels: {} (rate {:.3})", res.positive_levels.join(", "), res.positive_rate);
    for m in &res.models {
        println!(
            "{} accuracy {:.3}; truth columns in top {}: amie {}, {} {}",
            m.model.as_str(),
            m.accuracy,
            spec.top_k,
            m.truth_in_amie_top,
            m.baseline,
            m.truth_in_baseline_top
        );
        for r in &m.amie_top {
            println!("  {:>2} {:<28} {:+.4}{}", r.rank, r.name, r.score, if r.truth_group { "  *" } else { "" });
        }
    }
    let name = match &spec.network {
        NetworkSource::Insurance => "semisynthetic_insurance".to_string(),
        NetworkSource::Water => "semisynthetic_water".to_string(),
        NetworkSource::File(p) => {
            format!("semisynthetic_{}", p.file_stem().and_then(|s| s.to_str()).unwrap_or("network"))
        }
    };
    emit(&settings, &name, &res)
}

fn read_text(path: &Path) -> AppResult<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

fn run_explain(args: &Explain) -> AppResult<()> {
    let settings = Settings::new(&args.common)?;
    let file = std::fs::File::open(&args.data).map_err(|e| AppError::io(&args.data, e))?;
    let mut data = dataset_csv::read_dataset(file).context(|| args.data.display().to_string())?;
    if data.split_tags().is_none() {
        data = split(&data, settings.one("train-frac")?.unwrap_or(0.7), settings.seed()?).context(|| "split".into())?;
    }
    let net = match &args.net {
        Some(p) => Some(graph_text::parse_net(&read_text(p)?).context(|| p.display().to_string())?),
        None => None,
    };
    let truth: Option<CausalDag> = match (&args.graph, &net) {
        (Some(p), _) => Some(graph_text::parse_graph(&read_text(p)?).context(|| p.display().to_string())?),
        (None, Some(n)) => Some(n.dag().clone()),
        (None, None) => None,
    };
    let kind = match settings.models()?.as_deref() {
        None => ModelKind::LogReg,
        Some([k]) => *k,
        Some(_) => return Err(AppError::Usage("explain takes a single --model".into())),
    };
    let (train, test) = (data.train(), data.test());
    let (model, summary): (Box<dyn ProbModel>, Option<serde_json::Value>) = match kind {
        ModelKind::LogReg => {
            let lr = fit_logreg(&train, &LogRegParams::default()).context(|| "fitting logreg".into())?;
            let summary =
                serde_json::to_value(&lr).map_err(|source| AppError::Json { path: "<memory>".into(), source })?;
            (Box::new(lr), Some(summary))
        }
        ModelKind::RandomForest => {
            let params = ForestParams { seed: settings.seed()?, ..ForestParams::default() };
            let rf = fit_forest(&train, &params).context(|| "fitting forest".into())?;
            let summary = serde_json::json!({ "params": params, "forest": rf.summary() });
            (Box::new(rf), Some(summary))
        }
        ModelKind::Oracle => {
            let net = net.ok_or_else(|| AppError::Usage("the oracle needs --net".into()))?;
            (Box::new(OracleModel::new(net).context(|| "building oracle".into())?), None)
        }
    };
    let threshold = settings.one("epsilon")?.map_or_else(|| Threshold::default_for(kind), Threshold::Absolute);
    let alpha = settings.one("alpha")?.unwrap_or(amie_core::explain::DEFAULT_ALPHA);
    let options = ReportOptions { threshold, alpha, roles: RoleConfig::default() };
    let report = build_report(model.as_ref(), &test, &options, truth.as_ref()).context(|| "building report".into())?;
    for &k in report.top(10) {
        let f = &report.features[k];
        println!(
            "{:>3} {:<24} {:+.4} {}{}",
            f.abs_rank,
            f.name,
            f.amie,
            if f.nonzero { "nonzero" } else { "" },
            if f.filtered { " filtered" } else { "" }
        );
    }
    if let Some(summary) = summary {
        for path in write_result(&settings.out(), &format!("model_{}", kind.as_str()), Format::Json, &summary)? {
            println!("wrote {}", path.display());
        }
    }
    emit(&settings, &format!("report_{}", kind.as_str()), &report)
}

fn run_verify(args: &Verify) -> AppResult<()> {
    let settings = Settings::new(&args.common)?;
    let seed = settings.seed()?;
    let alpha = settings.one("alpha")?.unwrap_or(0.05);
    let all = args.suite == "all";
    let mut ran = false;
    let mut failures = Vec::new();
    if all || args.suite == "graph" {
        ran = true;
        let r = graph_equivalence(1000, seed)?;
        println!(
            "graph: {} DAGs, d-separation {}/{} disagree, inducing {}/{} disagree",
            r.dags, r.dsep_disagreements, r.dsep_queries, r.inducing_disagreements, r.inducing_queries
        );
        emit(&settings, "verify_graph", &r)?;
        if r.dsep_disagreements + r.inducing_disagreements > 0 {
            failures.push(format!("graph algorithms disagree with enumeration on seeds {:?}", r.failing_seeds));
        }
    }
    if all || args.suite == "chi-square" {
        ran = true;
        let r = chi_square_calibration(10_000, 1000, alpha, seed)?;
        println!(
            "chi-square: rejection rate {:.4} at alpha {alpha}; fixture statistic {} p {:.3e}",
            r.rejection_rate, r.fixture_statistic, r.fixture_p_value
        );
        emit(&settings, "verify_chi_square", &r)?;
    }
    if all || args.suite == "parents" {
        ran = true;
        let r = parent_recovery(50, 1000, seed)?;
        println!("parents: exact recovery on {}/{} networks", r.exact, r.nets);
        emit(&settings, "verify_parents", &r)?;
    }
    if all || args.suite == "figures" {
        ran = true;
        let r = run_figure_suite(100, 10_000, alpha, seed)?;
        for s in &r.summaries {
            println!(
                "figures: {} world, {}/{} runs on the correct side of the filter",
                s.world.name(),
                s.correct,
                s.runs
            );
        }
        emit(&settings, "verify_figures", &r)?;
    }
    if !ran {
        return Err(AppError::Usage(format!(
            "unknown suite `{}` (graph, chi-square, parents, figures, all)",
            args.suite
        )));
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(AppError::Invariant(failures.join("; ")))
    }
}

fn run_check(file: &Path) -> AppResult<()> {
    let value: serde_json::Value = read_json(file)?;
    let kind = value.get("kind").cloned().and_then(|k| serde_json::from_value::<ExperimentKind>(k).ok());
    match kind {
        Some(ExperimentKind::InducingPathCount) => {
            read_json::<amie::harness::inducing::InducingResult>(file)?.verify()?
        }
        Some(ExperimentKind::SemiSynthetic) | None => {
            return Err(AppError::Usage(format!("{} is not a grid result file", file.display())))
        }
        Some(_) => read_json::<ExperimentResult>(file)?.verify()?,
    }
    println!("{}: cell statistics match the replicate rows", file.display());
    Ok(())
}

fn run(cli: Cli) -> AppResult<()> {
    match &cli.command {
        Command::Gen(c) => run_gen(c),
        Command::NoLatent(c) => run_grid_command(c, ExperimentKind::NoLatent),
        Command::ConnectedLatent(c) => run_grid_command(c, ExperimentKind::ConnectedLatent),
        Command::Standalone(c) => run_grid_command(c, ExperimentKind::StandaloneLatent),
        Command::InducingCount(c) => run_grid_command(c, ExperimentKind::InducingPathCount),
        Command::Semisynthetic(s) => run_semi(s),
        Command::Explain(e) => run_explain(e),
        Command::Verify(v) => run_verify(v),
        Command::Check { file } => run_check(file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
