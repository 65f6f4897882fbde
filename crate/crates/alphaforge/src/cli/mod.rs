//! Operator-facing command-line surface: data generation, single-factor
//! evaluation and backtesting, mining, and reporting.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. Every command
//! is non-interactive, and all file output stays under `--output-dir`,
//! which receives a `manifest.json` listing what was written.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::backtest::{simulate, StrategyConfig};
use crate::dsl::parse;
use crate::eval::evaluate;
use crate::evolution::{
    evolve, EvolutionConfig, MiningContext, PoolSnapshot, SplitIndices, Trajectory,
};
use crate::panel::csv_io::ingest_csv;
use crate::panel::synth::{generate, panel_to_csv, sidecar, SynthConfig};
use crate::panel::PanelOf;
use crate::providers::{
    HeuristicProvider, Provider, RecordingProvider, RemoteProvider, ReplayProvider,
};
use crate::structure::{ComplexityWeights, GateConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or malformed user input: exit code 2.
    Usage(String),
    /// Failure while doing the work: exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser)]
#[command(name = "alphaforge", version, about = "Evolutionary alpha-mining engine")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic market CSV with a planted signal.
    GenData(GenDataArgs),
    /// Evaluate one factor expression: predictive and strategy metrics.
    Eval(EvalArgs),
    /// Backtest one factor expression with the TopkDropout strategy.
    Backtest(BacktestArgs),
    /// Run the evolutionary mining loop.
    Mine(MineArgs),
    /// Inspect a pool snapshot and export its correlation matrix.
    Pool(PoolArgs),
    /// Summarize a trajectory log into per-round tables and plot data.
    Report(ReportArgs),
}

#[derive(Args)]
struct SplitArgs {
    /// Fraction of dates in the training split.
    #[arg(long, default_value_t = 0.6)]
    train_frac: f64,
    /// Fraction of dates in the validation split (remainder is test).
    #[arg(long, default_value_t = 0.2)]
    valid_frac: f64,
}

impl SplitArgs {
    fn indices(&self, n_dates: usize) -> Result<SplitIndices, CliError> {
        if !(0.0..=1.0).contains(&self.train_frac)
            || !(0.0..=1.0).contains(&self.valid_frac)
            || self.train_frac + self.valid_frac >= 1.0
        {
            return Err(CliError::Usage(
                "--train-frac and --valid-frac must lie in [0,1] and sum below 1".into(),
            ));
        }
        Ok(SplitIndices::positional(n_dates, self.train_frac, self.valid_frac))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitName {
    Train,
    Valid,
    Test,
    All,
}

#[derive(Args)]
struct StrategyArgs {
    /// Number of stocks held.
    #[arg(long)]
    topk: Option<usize>,
    /// Holdings replaced per day.
    #[arg(long)]
    n_drop: Option<usize>,
    #[arg(long)]
    buy_fee: Option<f64>,
    #[arg(long)]
    sell_fee: Option<f64>,
    /// Overnight-gap threshold above which a stock is untradable.
    #[arg(long)]
    limit_threshold: Option<f64>,
    /// Optional benchmark daily-return series (one value per line);
    /// default is equal-weight buy-and-hold of the universe.
    #[arg(long)]
    benchmark: Option<PathBuf>,
}

impl StrategyArgs {
    fn to_config(&self) -> Result<StrategyConfig, CliError> {
        let mut cfg = StrategyConfig::default();
        if let Some(v) = self.topk {
            cfg.topk = v;
        }
        if let Some(v) = self.n_drop {
            cfg.n_drop = v;
        }
        if let Some(v) = self.buy_fee {
            cfg.buy_fee = v;
        }
        if let Some(v) = self.sell_fee {
            cfg.sell_fee = v;
        }
        if let Some(v) = self.limit_threshold {
            cfg.limit_threshold = v;
        }
        if let Some(path) = &self.benchmark {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("benchmark file {}: {e}", path.display())))?;
            let series: Result<Vec<f64>, _> =
                text.lines().filter(|l| !l.trim().is_empty()).map(|l| l.trim().parse()).collect();
            cfg.benchmark_returns =
                Some(series.map_err(|e| CliError::Usage(format!("benchmark file: {e}")))?);
        }
        Ok(cfg)
    }
}

/// Collects everything written under --output-dir and finishes with a
/// manifest. When no output dir was given, writes are silently skipped
/// (stdout still carries the primary result).
struct OutDir {
    path: Option<PathBuf>,
    written: Vec<String>,
}

impl OutDir {
    fn new(path: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(p) = &path {
            fs::create_dir_all(p).map_err(|e| {
                CliError::Runtime(format!("cannot create output dir {}: {e}", p.display()))
            })?;
        }
        Ok(OutDir {
            path,
            written: Vec::new(),
        })
    }

    fn required(path: PathBuf) -> Result<Self, CliError> {
        OutDir::new(Some(path))
    }

    fn file(&self, name: &str) -> Option<PathBuf> {
        self.path.as_ref().map(|p| p.join(name))
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        if let Some(p) = self.file(name) {
            fs::write(&p, contents)
                .map_err(|e| CliError::Runtime(format!("write {}: {e}", p.display())))?;
            self.written.push(name.to_string());
        }
        Ok(())
    }

    fn note(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    fn finish(&mut self, command: &str, config: serde_json::Value) -> Result<(), CliError> {
        if self.path.is_none() {
            return Ok(());
        }
        self.written.sort();
        self.written.dedup();
        let manifest = json!({
            "tool": "alphaforge",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "outputs": self.written,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        if let Some(p) = self.file("manifest.json") {
            fs::write(&p, text)
                .map_err(|e| CliError::Runtime(format!("write {}: {e}", p.display())))?;
        }
        Ok(())
    }
}

fn load_panel(path: &Path) -> Result<PanelOf<f64>, CliError> {
    ingest_csv(path).map_err(|e| CliError::Usage(format!("data file {}: {e}", path.display())))
}

fn parse_expression(text: &str) -> Result<crate::dsl::Expr, CliError> {
    parse(text).map_err(|e| CliError::Usage(format!("invalid expression {text:?}: {e}")))
}

// ---------------------------------------------------------------------------
// gen-data

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, default_value_t = 20)]
    symbols: usize,
    #[arg(long, default_value_t = 500)]
    days: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    signal_strength: f64,
    #[arg(long)]
    output_dir: PathBuf,
}

fn cmd_gen_data(args: GenDataArgs) -> Result<(), CliError> {
    if args.symbols == 0 || args.days == 0 {
        return Err(CliError::Usage("--symbols and --days must be positive".into()));
    }
    let cfg = SynthConfig {
        symbols: args.symbols,
        days: args.days,
        seed: args.seed,
        signal_strength: args.signal_strength,
    };
    let panel = generate(&cfg);
    let mut out = OutDir::required(args.output_dir)?;
    out.write("market.csv", &panel_to_csv(&panel))?;
    out.write(
        "market.json",
        &serde_json::to_string_pretty(&sidecar(&cfg)).expect("sidecar serializes"),
    )?;
    out.finish("gen-data", serde_json::to_value(&cfg).unwrap())?;
    println!(
        "wrote market.csv ({} symbols × {} dates) to {}",
        panel.n_symbols(),
        panel.n_dates(),
        out.path.as_ref().unwrap().display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

#[derive(Args)]
struct EvalArgs {
    /// Factor expression to evaluate.
    #[arg(long, allow_hyphen_values = true)]
    expr: String,
    /// Market CSV (date,symbol,open,high,low,close,volume,vwap).
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    split: SplitArgs,
    /// Which split to report on.
    #[arg(long, value_enum, default_value_t = SplitName::Test)]
    on: SplitName,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let expr = parse_expression(&args.expr)?;
    let panel = load_panel(&args.data)?;
    let split = args.split.indices(panel.n_dates())?;
    let ctx = MiningContext::new(
        &panel,
        split.clone(),
        args.strategy.to_config()?,
        GateConfig::default(),
        ComplexityWeights::default(),
    )
    .map_err(runtime)?;
    let indices: Vec<usize> = match args.on {
        SplitName::Train => split.train,
        SplitName::Valid => split.valid,
        SplitName::Test => split.test,
        SplitName::All => (0..panel.n_dates()).collect(),
    };
    if indices.is_empty() {
        return Err(CliError::Usage("selected split contains no dates".into()));
    }
    let (_, report) = ctx.evaluate_on(&expr, &indices);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    let mut out = OutDir::new(args.output_dir)?;
    out.write("report.json", &text)?;
    out.finish(
        "eval",
        json!({ "expr": args.expr, "data": args.data, "on": match args.on {
            SplitName::Train => "train", SplitName::Valid => "valid",
            SplitName::Test => "test", SplitName::All => "all" } }),
    )
}

// ---------------------------------------------------------------------------
// backtest

#[derive(Args)]
struct BacktestArgs {
    #[arg(long, allow_hyphen_values = true)]
    expr: String,
    #[arg(long)]
    data: PathBuf,
    /// First trading date (inclusive); default: second panel date.
    #[arg(long)]
    start: Option<String>,
    /// Last trading date (inclusive); default: last panel date.
    #[arg(long)]
    end: Option<String>,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn cmd_backtest(args: BacktestArgs) -> Result<(), CliError> {
    let expr = parse_expression(&args.expr)?;
    let raw = load_panel(&args.data)?;
    let panel = raw.preprocess();
    let resolve = |d: &Option<String>, fallback: usize| -> Result<usize, CliError> {
        match d {
            None => Ok(fallback),
            Some(date) => panel
                .date_index(date)
                .ok_or_else(|| CliError::Usage(format!("date {date:?} not in panel"))),
        }
    };
    let start = resolve(&args.start, 1.min(panel.n_dates().saturating_sub(1)))?;
    let end = resolve(&args.end, panel.n_dates().saturating_sub(1))? + 1;
    let cfg = args.strategy.to_config()?;
    let fm = evaluate(&expr, &panel).map_err(runtime)?;
    let result = simulate(&fm.values, &panel, &cfg, start, end).map_err(runtime)?;
    let excess = result.excess_after_cost();
    let metrics = crate::metrics::annualized_metrics(&excess, false);
    let turnover = result.turnover();
    let mean_turnover = if turnover.is_empty() {
        0.0
    } else {
        turnover.iter().sum::<f64>() / turnover.len() as f64
    };
    let summary = json!({
        "expression": fm.expr_text,
        "n_days": excess.len(),
        "arr": metrics.arr,
        "ir": metrics.ir,
        "mdd": metrics.mdd,
        "calmar": metrics.calmar,
        "mean_turnover": mean_turnover,
        "n_trades": result.trades.len(),
    });
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    let mut out = OutDir::new(args.output_dir)?;
    out.write("daily.jsonl", &result.to_jsonl())?;
    out.write("trades.csv", &result.trades_csv())?;
    out.write("summary.json", &serde_json::to_string_pretty(&summary).unwrap())?;
    out.finish(
        "backtest",
        json!({ "expr": args.expr, "data": args.data, "strategy": cfg }),
    )
}

// ---------------------------------------------------------------------------
// mine

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderChoice {
    Heuristic,
    Remote,
    Replay,
}

/// Optional config-file counterpart of the mine flags; explicit flags win.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    directions: Option<usize>,
    iterations: Option<usize>,
    factors_per_hypothesis: Option<usize>,
    parent_selection_size: Option<usize>,
    lambda: Option<f64>,
    train_frac: Option<f64>,
    valid_frac: Option<f64>,
    topk: Option<usize>,
    n_drop: Option<usize>,
    buy_fee: Option<f64>,
    sell_fee: Option<f64>,
    limit_threshold: Option<f64>,
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    /// JSON config file; any explicit flag overrides it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ProviderChoice::Heuristic)]
    provider: ProviderChoice,
    /// Deterministic seed (mandatory for the heuristic provider; defaults
    /// to 1 when neither flag nor config supplies one).
    #[arg(long)]
    seed: Option<u64>,
    /// Replay file (required with --provider replay).
    #[arg(long)]
    replay_file: Option<PathBuf>,
    /// Record every provider response to this JSONL file.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    factors_per_hypothesis: Option<usize>,
    #[arg(long)]
    parent_selection_size: Option<usize>,
    /// Complexity-regularization strength in the trajectory reward.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long)]
    valid_frac: Option<f64>,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Accepted for compatibility; execution is sequential so runs stay
    /// byte-reproducible.
    #[arg(long)]
    jobs: Option<usize>,
}

fn build_provider(
    choice: ProviderChoice,
    seed: u64,
    replay_file: Option<&Path>,
    record: Option<&Path>,
) -> Result<Box<dyn Provider>, CliError> {
    let base: Box<dyn Provider> = match choice {
        ProviderChoice::Heuristic => Box::new(HeuristicProvider::new(seed)),
        ProviderChoice::Remote => Box::new(RemoteProvider::from_env().map_err(|e| {
            CliError::Usage(format!("remote provider unavailable: {e}"))
        })?),
        ProviderChoice::Replay => {
            let path = replay_file.ok_or_else(|| {
                CliError::Usage("--provider replay requires --replay-file".into())
            })?;
            Box::new(ReplayProvider::load(path).map_err(|e| {
                CliError::Usage(format!("replay file {}: {e}", path.display()))
            })?)
        }
    };
    match record {
        None => Ok(base),
        Some(path) => Ok(Box::new(
            RecordingProvider::create(base, path)
                .map_err(|e| CliError::Runtime(format!("record file {}: {e}", path.display())))?,
        )),
    }
}

fn cmd_mine(args: MineArgs) -> Result<(), CliError> {
    let file_cfg: FileConfig = match &args.config {
        None => FileConfig::default(),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?
        }
    };

    let seed = args.seed.or(file_cfg.seed).unwrap_or(1);
    let evo = EvolutionConfig {
        n_directions: args.directions.or(file_cfg.directions).unwrap_or(10),
        n_iterations: args.iterations.or(file_cfg.iterations).unwrap_or(5),
        factors_per_hypothesis: args
            .factors_per_hypothesis
            .or(file_cfg.factors_per_hypothesis)
            .unwrap_or(3),
        parent_selection_size: args.parent_selection_size.or(file_cfg.parent_selection_size),
        lambda: args.lambda.or(file_cfg.lambda).unwrap_or(0.05),
        seed,
    };
    let train_frac = args.train_frac.or(file_cfg.train_frac).unwrap_or(0.6);
    let valid_frac = args.valid_frac.or(file_cfg.valid_frac).unwrap_or(0.2);

    let panel = load_panel(&args.data)?;
    let mut strategy = args.strategy.to_config()?;
    if args.strategy.topk.is_none() {
        // Keep the strategy meaningful on small universes.
        strategy.topk = file_cfg
            .topk
            .unwrap_or_else(|| strategy.topk.min((panel.n_symbols() / 2).max(1)));
    }
    if args.strategy.n_drop.is_none() {
        strategy.n_drop = file_cfg.n_drop.unwrap_or_else(|| (strategy.topk / 5).max(1));
    }
    if let (None, Some(v)) = (args.strategy.buy_fee, file_cfg.buy_fee) {
        strategy.buy_fee = v;
    }
    if let (None, Some(v)) = (args.strategy.sell_fee, file_cfg.sell_fee) {
        strategy.sell_fee = v;
    }
    if let (None, Some(v)) = (args.strategy.limit_threshold, file_cfg.limit_threshold) {
        strategy.limit_threshold = v;
    }

    let weights = ComplexityWeights {
        lambda: evo.lambda,
        ..Default::default()
    };
    let split = SplitArgs {
        train_frac,
        valid_frac,
    }
    .indices(panel.n_dates())?;
    let ctx = MiningContext::new(&panel, split, strategy.clone(), GateConfig::default(), weights)
        .map_err(runtime)?;

    let provider = build_provider(
        args.provider,
        seed,
        args.replay_file.as_deref(),
        args.record.as_deref(),
    )?;

    let mut out = OutDir::required(args.output_dir)?;
    let resolved = json!({
        "data": args.data,
        "seed": seed,
        "provider": provider.name(),
        "evolution": evo,
        "train_frac": train_frac,
        "valid_frac": valid_frac,
        "strategy": strategy,
    });
    out.write("config.json", &serde_json::to_string_pretty(&resolved).unwrap())?;

    // Resumable log: the run is deterministic, so we re-derive each
    // trajectory, check it against any existing log line, and append only
    // past the previously written prefix.
    let log_path = out.file("trajectories.jsonl").expect("output dir is set");
    let existing: Vec<String> = if log_path.exists() {
        fs::read_to_string(&log_path)
            .map_err(runtime)?
            .lines()
            .map(str::to_string)
            .collect()
    } else {
        Vec::new()
    };
    let resumed = existing.len();
    let mut log = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(runtime)?;
    let mut line_no = 0usize;
    let mut mismatch: Option<String> = None;
    let mut io_error: Option<String> = None;

    let generations = evolve(&ctx, &evo, provider.as_ref(), |t: &Trajectory| {
        if mismatch.is_some() || io_error.is_some() {
            return;
        }
        let line = serde_json::to_string(t).expect("trajectory serializes");
        if line_no < existing.len() {
            if existing[line_no] != line {
                mismatch = Some(format!(
                    "existing log line {} does not match this run (different data, seed, or config?)",
                    line_no + 1
                ));
            }
        } else if let Err(e) = writeln!(log, "{line}") {
            io_error = Some(e.to_string());
        }
        line_no += 1;
    })
    .map_err(runtime)?;
    if let Some(m) = mismatch {
        return Err(CliError::Runtime(format!("refusing to resume: {m}")));
    }
    if let Some(e) = io_error {
        return Err(CliError::Runtime(format!("write trajectory log: {e}")));
    }
    out.note("trajectories.jsonl");

    let final_snapshot = generations
        .last()
        .map(|g| g.snapshot.clone())
        .expect("evolve yields at least one generation");
    out.write(
        "pool.json",
        &serde_json::to_string_pretty(&final_snapshot).unwrap(),
    )?;
    let rounds: Vec<serde_json::Value> = generations
        .iter()
        .map(|g| {
            let rank_ics: Vec<f64> = g
                .trajectories
                .iter()
                .flat_map(|t| t.factors.iter().map(|f| f.report.rank_ic_mean))
                .filter(|v| v.is_finite())
                .collect();
            json!({
                "round": g.round,
                "trajectories": g.trajectories.len(),
                "factors": rank_ics.len(),
                "pool_size": g.snapshot.pool.admitted.len(),
                "best_rank_ic": rank_ics.iter().cloned().fold(f64::NAN, f64::max),
                "mean_rank_ic": if rank_ics.is_empty() { f64::NAN }
                    else { rank_ics.iter().sum::<f64>() / rank_ics.len() as f64 },
            })
        })
        .collect();
    out.write(
        "report.json",
        &serde_json::to_string_pretty(&json!({ "rounds": rounds })).unwrap(),
    )?;
    out.finish("mine", resolved)?;

    println!(
        "mined {} trajectories over {} round(s); pool holds {} factor(s); best validation RankIC {:.4}{}",
        line_no,
        generations.len(),
        final_snapshot.pool.admitted.len(),
        final_snapshot.pool.best_rank_ic().unwrap_or(f64::NAN),
        if resumed > 0 {
            format!(" (verified {resumed} previously logged line(s))")
        } else {
            String::new()
        }
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// pool

#[derive(Args)]
struct PoolArgs {
    /// Pool snapshot JSON produced by `mine`.
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn cmd_pool(args: PoolArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.pool)
        .map_err(|e| CliError::Usage(format!("pool file {}: {e}", args.pool.display())))?;
    let snapshot: PoolSnapshot = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("pool file {}: {e}", args.pool.display())))?;

    println!(
        "round {}: {} admitted of {} mined (corr < {}, cap {})",
        snapshot.round,
        snapshot.pool.admitted.len(),
        snapshot.pool.total_mined,
        snapshot.pool.corr_threshold,
        snapshot.pool.cap_ratio
    );
    for f in &snapshot.pool.admitted {
        println!(
            "  {}  rank_ic={:+.4}  {}",
            f.factor_id, f.report.rank_ic_mean, f.expression
        );
    }

    let mut csv = String::from("factor_id");
    for f in &snapshot.pool.admitted {
        csv.push(',');
        csv.push_str(&f.factor_id);
    }
    csv.push('\n');
    for (i, f) in snapshot.pool.admitted.iter().enumerate() {
        csv.push_str(&f.factor_id);
        for v in &snapshot.correlations[i] {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    let mut out = OutDir::new(args.output_dir)?;
    out.write("correlations.csv", &csv)?;
    out.finish("pool", json!({ "pool": args.pool }))
}

// ---------------------------------------------------------------------------
// report

#[derive(Args)]
struct ReportArgs {
    /// Trajectory log (JSONL) produced by `mine`.
    #[arg(long)]
    log: PathBuf,
    /// Market CSV; when given, the best factor's cumulative excess-return
    /// series is exported for plotting.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.log)
        .map_err(|e| CliError::Usage(format!("log file {}: {e}", args.log.display())))?;
    let mut trajectories: Vec<Trajectory> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        trajectories.push(serde_json::from_str(line).map_err(|e| {
            CliError::Usage(format!("log file line {}: {e}", i + 1))
        })?);
    }

    let max_round = trajectories.iter().map(|t| t.round).max();
    let mut csv = String::from("round,trajectories,factors,best_rank_ic,mean_rank_ic\n");
    println!("round  trajectories  factors  best_rank_ic  mean_rank_ic");
    if let Some(max_round) = max_round {
        for round in 0..=max_round {
            let in_round: Vec<&Trajectory> =
                trajectories.iter().filter(|t| t.round == round).collect();
            let rank_ics: Vec<f64> = in_round
                .iter()
                .flat_map(|t| t.factors.iter().map(|f| f.report.rank_ic_mean))
                .filter(|v| v.is_finite())
                .collect();
            let best = rank_ics.iter().cloned().fold(f64::NAN, f64::max);
            let mean = if rank_ics.is_empty() {
                f64::NAN
            } else {
                rank_ics.iter().sum::<f64>() / rank_ics.len() as f64
            };
            println!(
                "{round:>5}  {:>12}  {:>7}  {best:>12.4}  {mean:>12.4}",
                in_round.len(),
                rank_ics.len()
            );
            csv.push_str(&format!(
                "{round},{},{},{best},{mean}\n",
                in_round.len(),
                rank_ics.len()
            ));
        }
    } else {
        println!("(empty log)");
    }
    let mut out = OutDir::new(args.output_dir)?;
    out.write("rank_ic_by_round.csv", &csv)?;

    if let Some(data) = &args.data {
        let best = trajectories
            .iter()
            .flat_map(|t| t.factors.iter())
            .filter(|f| f.report.rank_ic_mean.is_finite())
            .max_by(|a, b| a.report.rank_ic_mean.partial_cmp(&b.report.rank_ic_mean).unwrap());
        if let Some(best) = best {
            let panel = load_panel(data)?.preprocess();
            let expr = parse_expression(&best.expression)?;
            let fm = evaluate(&expr, &panel).map_err(runtime)?;
            let cfg = args.strategy.to_config()?;
            let result = simulate(&fm.values, &panel, &cfg, 1, panel.n_dates()).map_err(runtime)?;
            let excess = result.excess_after_cost();
            let metrics = crate::metrics::annualized_metrics(&excess, false);
            let mut series = String::from("date,daily_excess,cumulative_excess\n");
            for (rec, (r, c)) in result
                .daily
                .iter()
                .zip(excess.iter().zip(metrics.cumulative_curve.iter()))
            {
                series.push_str(&format!("{},{r},{c}\n", rec.date));
            }
            out.write("cumulative_excess.csv", &series)?;
            println!(
                "best factor {} ({}): ARR {:.4}, MDD {:.4}",
                best.factor_id, best.expression, metrics.arr, metrics.mdd
            );
        }
    }
    out.finish("report", json!({ "log": args.log, "data": args.data }))
}

// ---------------------------------------------------------------------------

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData(a) => cmd_gen_data(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Backtest(a) => cmd_backtest(a),
        Command::Mine(a) => cmd_mine(a),
        Command::Pool(a) => cmd_pool(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        // clap uses exit code 2 for usage errors, 0 for --help/--version.
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["alphaforge", "no-such-command"]), 2);
        assert_eq!(run(["alphaforge", "eval"]), 2); // missing required flags
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run(["alphaforge", "--help"]), 0);
    }

    #[test]
    fn malformed_expression_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("d");
        assert_eq!(
            run([
                "alphaforge",
                "gen-data",
                "--symbols",
                "5",
                "--days",
                "30",
                "--seed",
                "1",
                "--output-dir",
                out.to_str().unwrap(),
            ]),
            0
        );
        let data = out.join("market.csv");
        assert_eq!(
            run([
                "alphaforge",
                "eval",
                "--expr",
                "TS_MEAN($close",
                "--data",
                data.to_str().unwrap(),
            ]),
            2
        );
    }
}
