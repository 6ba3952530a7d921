//! `metalevel` command-line driver.
//!
//! Exit status: 0 on success, 2 when arguments or config fail validation,
//! 3 when a run fails.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metalevel::bench::{self, BenchError, ExperimentConfig, PolicyId, SweepMode};
use metalevel::bernoulli::{BetaCounts, FlatState};
use metalevel::counterexamples::{
    example3_continuation, interval_property_check, ChainTruncation, ContextBase, CounterexampleError, QGapSweep,
};
use metalevel::mcts::{self, HybridParams, MctsError, Player, TreeConfig};
use metalevel::policies::{solve_one_armed, BlinkeredIndex, PolicyError, DEFAULT_EXPLORATION, DEFAULT_GRID_POINTS};
use metalevel::voi::VoiVariant;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "metalevel", version, about = "Selecting computations: policies, bounds and experiments")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file for the main CSV or table; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config file; flags given on the command line override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the one-armed problem against a known arm worth LAMBDA.
    SolveOneArmed {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        cost: f64,
    },
    /// Precompute the blinkered index on a lambda grid and dump it.
    BuildBlinkered {
        #[arg(long)]
        cost: f64,
        /// Lambda grid points.
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        points: usize,
    },
    /// Regret against sample cost for policies with a stopping rule.
    BenchCost(BenchArgs),
    /// Selection regret against a fixed sample budget.
    BenchBudget(BenchArgs),
    /// Run one of the counterexamples.
    Counterexample(CounterexampleArgs),
    /// Play a match between two tree searchers.
    MctsMatch(MatchArgs),
    /// Win rate of the VOI hybrid against UCT over budgets and costs.
    MctsCalibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Number of arms [default: 25].
    #[arg(long)]
    k: Option<usize>,
    /// Trials per grid value [default: 1000].
    #[arg(long)]
    trials: Option<u64>,
    /// Comma-separated costs [default: 7 log-spaced values in 1e-3..10^-1.5].
    #[arg(long, value_delimiter = ',')]
    costs: Option<Vec<f64>>,
    /// Comma-separated budgets [default: 200,400,800,1600,2000].
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<u64>>,
    /// Comma-separated policy names [default: all policies of the sweep].
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    /// Also write an SVG chart of the summary here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Example {
    /// Q-gap curves of the three-action problem where no index policy is optimal.
    Indexability,
    /// Continuation set of the chain where the optimal policy never stops.
    Unbounded,
    /// Context-interval check for one flat state.
    Interval,
}

#[derive(Args, Debug)]
struct CounterexampleArgs {
    #[arg(long, value_enum)]
    name: Example,
    /// Sample cost (unbounded, interval).
    #[arg(long, default_value_t = 0.005)]
    cost: f64,
    /// Arm tallies as `s:f` pairs separated by commas (interval).
    #[arg(long, default_value = "1:0,0:1")]
    counts: String,
    /// Further samples allowed when solving the state (interval).
    #[arg(long, default_value_t = 6)]
    max_samples: u64,
    /// Lambda grid points over [0, 1] (interval).
    #[arg(long, default_value_t = 65)]
    points: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum PlayerKind {
    Uct,
    Hybrid,
    Minimax,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
enum VariantArg {
    #[value(name = "voi")]
    Voi,
    #[value(name = "voi-plus")]
    VoiPlus,
}

impl From<VariantArg> for VoiVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Voi => VoiVariant::Voi,
            VariantArg::VoiPlus => VoiVariant::VoiPlus,
        }
    }
}

/// Tree-search experiment settings shared by the match and calibration
/// commands; the JSON config has the same fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct MctsConfig {
    schema_version: u32,
    tree: TreeConfig,
    budgets: Vec<u64>,
    costs: Vec<f64>,
    games: u64,
    variant: VoiVariant,
    exploration: f64,
    init_rounds: u64,
}

impl Default for MctsConfig {
    fn default() -> Self {
        MctsConfig {
            schema_version: bench::SCHEMA_VERSION,
            tree: TreeConfig::default(),
            budgets: vec![50, 100, 200],
            costs: vec![1e-4, 1e-3, 3e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.3],
            games: 2000,
            variant: VoiVariant::Voi,
            exploration: DEFAULT_EXPLORATION,
            init_rounds: 3,
        }
    }
}

#[derive(Args, Debug)]
struct TreeArgs {
    #[arg(long)]
    branching: Option<usize>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    games: Option<u64>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    exploration: Option<f64>,
    /// Round-robin passes at the root before the hybrid's VOI rule.
    #[arg(long)]
    init_rounds: Option<u64>,
}

#[derive(Args, Debug)]
struct MatchArgs {
    #[arg(long, value_enum, default_value = "hybrid")]
    a: PlayerKind,
    #[arg(long, value_enum, default_value = "uct")]
    b: PlayerKind,
    /// Rollouts per move.
    #[arg(long, default_value_t = 100)]
    budget: u64,
    /// Hybrid sample cost.
    #[arg(long, default_value_t = 0.01)]
    cost: f64,
    #[command(flatten)]
    tree: TreeArgs,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    costs: Option<Vec<f64>>,
    #[command(flatten)]
    tree: TreeArgs,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid input: {m}"),
            Failure::Runtime(m) => write!(f, "run failed: {m}"),
        }
    }
}

fn invalid(m: impl Into<String>) -> Failure {
    Failure::Validation(m.into())
}

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Io(_) | BenchError::StepCap { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<PolicyError> for Failure {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Io(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<MctsError> for Failure {
    fn from(e: MctsError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<CounterexampleError> for Failure {
    fn from(e: CounterexampleError) -> Self {
        match e {
            CounterexampleError::BadGrid | CounterexampleError::Policy(_) => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

/// Where the main output goes. With a file, the summary line goes to stdout;
/// otherwise the table goes to stdout and the summary to stderr.
struct Output {
    path: Option<PathBuf>,
    sink: Box<dyn Write>,
}

impl Output {
    fn open(path: Option<&PathBuf>) -> Result<Output, Failure> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Output { path: path.cloned(), sink })
    }

    fn finish(mut self, summary: &str) -> Result<(), Failure> {
        let label = self.path.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
        self.sink.flush().map_err(|e| io_err(&label, e))?;
        drop(self.sink);
        if self.path.is_some() {
            println!("{summary}");
        } else {
            eprintln!("{summary}");
        }
        Ok(())
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let f = File::open(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn bench_config(cli: &Cli, mode: SweepMode, a: &BenchArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::new(mode),
    };
    cfg.mode = mode;
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(c) = &a.costs {
        cfg.costs = c.clone();
    }
    if let Some(b) = &a.budgets {
        cfg.budgets = b.clone();
    }
    if let Some(ps) = &a.policies {
        cfg.policies = ps
            .iter()
            .map(|s| PolicyId::parse(s.trim()).ok_or_else(|| invalid(format!("unknown policy {s}"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_bench(cli: &Cli, mode: SweepMode, a: &BenchArgs) -> Result<(), Failure> {
    let cfg = bench_config(cli, mode, a)?;
    let out = Output::open(cfg.output.as_ref())?;
    let records = bench::run_experiment(&cfg)?;
    let rows = bench::summarize(&records)?;
    let mut out = out;
    bench::write_summary_csv(&rows, &mut out.sink)?;
    if let Some(svg) = &a.svg {
        std::fs::write(svg, bench::render_svg(&rows)).map_err(|e| io_err(svg, e))?;
    }
    let rel = bench::max_relative_error(&rows).map(|r| format!("{r:.3}")).unwrap_or_else(|| "n/a".into());
    out.finish(&format!(
        "{} rows over {} trials per cell, {} records; relative error at most {rel}",
        rows.len(),
        cfg.trials,
        records.len()
    ))
}

fn mcts_config(cli: &Cli, t: &TreeArgs) -> Result<MctsConfig, Failure> {
    let mut cfg: MctsConfig = match &cli.config {
        Some(p) => read_json(p)?,
        None => MctsConfig::default(),
    };
    if cfg.schema_version != bench::SCHEMA_VERSION {
        return Err(invalid(format!("unsupported config schema version {}", cfg.schema_version)));
    }
    if let Some(b) = t.branching {
        cfg.tree.branching = b;
    }
    if let Some(d) = t.depth {
        cfg.tree.depth = d;
    }
    if let Some(n) = t.noise {
        cfg.tree.noise = n;
    }
    if let Some(g) = t.games {
        cfg.games = g;
    }
    if let Some(v) = t.variant {
        cfg.variant = v.into();
    }
    if let Some(e) = t.exploration {
        cfg.exploration = e;
    }
    if let Some(r) = t.init_rounds {
        cfg.init_rounds = r;
    }
    cfg.tree.validate()?;
    if cfg.games == 0 {
        return Err(MctsError::NoGames.into());
    }
    if !(cfg.exploration >= 0.0 && cfg.exploration.is_finite()) {
        return Err(invalid(format!("exploration must be finite and nonnegative, got {}", cfg.exploration)));
    }
    Ok(cfg)
}

fn hybrid_params(cfg: &MctsConfig, cost: f64) -> Result<HybridParams, Failure> {
    if !(cost >= 0.0 && cost.is_finite()) {
        return Err(MctsError::InvalidCost(cost).into());
    }
    Ok(HybridParams { cost, variant: cfg.variant, exploration: cfg.exploration, init_rounds: cfg.init_rounds })
}

fn check_budget(cfg: &MctsConfig, budget: u64) -> Result<(), Failure> {
    if budget < cfg.tree.branching as u64 {
        return Err(MctsError::BudgetTooSmall { budget, children: cfg.tree.branching }.into());
    }
    Ok(())
}

fn run_match(cli: &Cli, a: &MatchArgs) -> Result<(), Failure> {
    let cfg = mcts_config(cli, &a.tree)?;
    check_budget(&cfg, a.budget)?;
    let player = |k: PlayerKind| -> Result<Player, Failure> {
        Ok(match k {
            PlayerKind::Uct => Player::Uct { budget: a.budget, exploration: cfg.exploration },
            PlayerKind::Hybrid => Player::Hybrid { budget: a.budget, params: hybrid_params(&cfg, a.cost)? },
            PlayerKind::Minimax => Player::Minimax,
            PlayerKind::Random => Player::Random,
        })
    };
    let (pa, pb) = (player(a.a)?, player(a.b)?);
    let mut out = Output::open(cli.out.as_ref())?;
    let m = mcts::play_match(pa, pb, &cfg.tree, cfg.games, cli.seed.unwrap_or(0))?;
    let label = |k: PlayerKind| format!("{k:?}").to_lowercase();
    writeln!(out.sink, "a,b,budget,c,wins,games,win_rate,ci_lo,ci_hi")
        .and_then(|_| {
            writeln!(
                out.sink,
                "{},{},{},{},{},{},{},{},{}",
                label(a.a),
                label(a.b),
                a.budget,
                a.cost,
                m.wins,
                m.games,
                m.win_rate,
                m.ci.0,
                m.ci.1
            )
        })
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    out.finish(&format!(
        "{} won {}/{} against {} (rate {:.3}, 95% CI [{:.3}, {:.3}])",
        label(a.a),
        m.wins,
        m.games,
        label(a.b),
        m.win_rate,
        m.ci.0,
        m.ci.1
    ))
}

fn run_calibrate(cli: &Cli, a: &CalibrateArgs) -> Result<(), Failure> {
    let mut cfg = mcts_config(cli, &a.tree)?;
    if let Some(b) = &a.budgets {
        cfg.budgets = b.clone();
    }
    if let Some(c) = &a.costs {
        cfg.costs = c.clone();
    }
    if cfg.budgets.is_empty() || cfg.costs.is_empty() {
        return Err(MctsError::EmptyGrid.into());
    }
    for &b in &cfg.budgets {
        check_budget(&cfg, b)?;
    }
    for &c in &cfg.costs {
        hybrid_params(&cfg, c)?;
    }
    let mut out = Output::open(cli.out.as_ref())?;
    let base = hybrid_params(&cfg, 0.0)?;
    let table = mcts::calibrate_cost(&cfg.tree, &cfg.budgets, &cfg.costs, &base, cfg.games, cli.seed.unwrap_or(0))?;
    table.write_csv(&mut out.sink).map_err(|e| Failure::Runtime(e.to_string()))?;
    let best = table.recommended_cost().expect("nonempty grid");
    out.finish(&format!("{} cells; recommended cost {best}", table.rows.len()))
}

fn parse_counts(s: &str) -> Result<Vec<BetaCounts>, Failure> {
    s.split(',')
        .map(|pair| {
            let (a, b) = pair.trim().split_once(':').ok_or_else(|| invalid(format!("expected s:f, got {pair}")))?;
            let parse = |x: &str| x.trim().parse::<u64>().map_err(|e| invalid(format!("{pair}: {e}")));
            Ok(BetaCounts::new(parse(a)?, parse(b)?))
        })
        .collect()
}

fn run_counterexample(cli: &Cli, a: &CounterexampleArgs) -> Result<(), Failure> {
    match a.name {
        Example::Indexability => {
            let mut out = Output::open(cli.out.as_ref())?;
            let sweep = QGapSweep::run(&QGapSweep::grid(-2.0, 2.0, 0.05)).map_err(|e| Failure::Runtime(e.to_string()))?;
            sweep.write_csv(&mut out.sink)?;
            let crossings = sweep.crossings().map_err(|e| Failure::Runtime(e.to_string()))?;
            out.finish(&format!("inversion={} crossings={crossings:?}", sweep.has_inversion()))
        }
        Example::Unbounded => {
            if !(a.cost > 0.0 && a.cost.is_finite()) {
                return Err(invalid(format!("cost must be positive and finite, got {}", a.cost)));
            }
            let mut out = Output::open(cli.out.as_ref())?;
            let set = example3_continuation(a.cost, ChainTruncation::default(), 4)?;
            writeln!(out.sink, "d").map_err(|e| Failure::Runtime(e.to_string()))?;
            for d in &set {
                writeln!(out.sink, "{d}").map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            out.finish(&format!("cost {}: continue at s - f in {set:?}", a.cost))
        }
        Example::Interval => {
            if !(a.cost > 0.0 && a.cost.is_finite()) {
                return Err(invalid(format!("cost must be positive and finite, got {}", a.cost)));
            }
            if a.points < 2 {
                return Err(invalid("need at least two grid points"));
            }
            let state = FlatState::with_prior(parse_counts(&a.counts)?).map_err(|e| invalid(e.to_string()))?;
            let grid: Vec<f64> = (0..a.points).map(|j| j as f64 / (a.points - 1) as f64).collect();
            let mut out = Output::open(cli.out.as_ref())?;
            let base = ContextBase::Flat { state: state.clone(), max_samples: a.max_samples };
            let r = interval_property_check(&grid, &base, a.cost)?;
            writeln!(out.sink, "lambda,continue").map_err(|e| Failure::Runtime(e.to_string()))?;
            for (l, c) in grid.iter().zip(&r.continues) {
                writeln!(out.sink, "{l},{c}").map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            out.finish(&format!(
                "continue interval {:?}, best mean {}, property holds: {}",
                r.interval,
                state.best_mean(),
                r.holds()
            ))
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(invalid("--workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match &cli.command {
        Command::SolveOneArmed { lambda, cost } => {
            let t = solve_one_armed(*lambda, *cost)?;
            let mut out = Output::open(cli.out.as_ref())?;
            t.write_csv(&mut out.sink).map_err(|e| Failure::Runtime(e.to_string()))?;
            out.finish(&format!("n_max = {}, value(0,0) = {}", t.n_max(), t.value(0, 0)))
        }
        Command::BuildBlinkered { cost, points } => {
            if *points < 2 {
                return Err(PolicyError::GridTooSmall(*points).into());
            }
            if !(*cost > 0.0 && cost.is_finite()) {
                return Err(PolicyError::InvalidCost(*cost).into());
            }
            let mut out = Output::open(cli.out.as_ref())?;
            let idx = BlinkeredIndex::build(*cost, *points)?;
            idx.write_csv(&mut out.sink).map_err(|e| Failure::Runtime(e.to_string()))?;
            let largest = idx.tables().iter().map(|t| t.n_max()).max().unwrap_or(0);
            out.finish(&format!("{} one-armed tables at cost {cost}, largest n_max = {largest}", idx.points()))
        }
        Command::BenchCost(a) => run_bench(cli, SweepMode::CostSweep, a),
        Command::BenchBudget(a) => run_bench(cli, SweepMode::BudgetSweep, a),
        Command::Counterexample(a) => run_counterexample(cli, a),
        Command::MctsMatch(a) => run_match(cli, a),
        Command::MctsCalibrate(a) => run_calibrate(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("metalevel: {f}");
            ExitCode::from(f.code())
        }
    }
}
