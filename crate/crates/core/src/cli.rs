//! Command-line front end. [`run`] returns the process exit code: 0 on
//! success, 1 when a checked property fails, 2 on usage or input errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::chain::{build_chain, Backend};
use crate::coupon::{
    builtin_coupling, collector_bound, simulate_connected_geometrics, simulate_multipass, simulate_slow_type,
    CouponSpec, IndexMap, SlowTypeSpec, TargetModel, VerifiedCoupling,
};
use crate::dgr::{self, DgrParams};
use crate::error::{invalid, Error, Result};
use crate::experiments::{self, BenchRow, NamedGraph};
use crate::graph::parse_graph;
use crate::mc::{self, Estimate};
use crate::process::{replicate_outcomes, EstimateConfig, InitMode, SimStats, StrategyState, DEFAULT_STEP_CAP};

#[derive(Debug, Parser)]
#[command(name = "consensus-lab", version, about = "Pairwise consensus on graphs: simulation and exact analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo estimate of the winner distribution and consensus time.
    Simulate(SimulateArgs),
    /// Exact winner distribution and expected consensus time.
    Exact(ExactArgs),
    /// Expected absorption times of a gambler's ruin walk with delays.
    Dgr(DgrArgs),
    /// Law of the surviving strategy.
    Survivor(SurvivorArgs),
    /// Coupon-collector simulations.
    Coupon(CouponArgs),
    /// Benchmark table for one graph or the standard suite.
    Bench(BenchArgs),
    /// Check the p = 0 time bound n^2 ln n + n.
    VerifyBound(VerifyBoundArgs),
    /// Exact times on small regular graphs; checks K_n is fastest.
    CompareRegular(CompareRegularArgs),
    /// Paired comparison of sundew and lollipop graphs at p = 0.
    SundewLollipop(SundewLollipopArgs),
    /// Monotonicity scan of expected absorption times over lambda.
    ScanMonotonicity(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Edge-list file.
    #[arg(long, conflicts_with = "family")]
    graph: Option<PathBuf>,
    /// complete, path, cycle, star, sundew, lollipop or jellyfish.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// uniform, nonempty or fixed:K.
    #[arg(long, default_value = "uniform")]
    init: String,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: u64,
    /// Emit one row per replication instead of the aggregate.
    #[arg(long)]
    per_run: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value = "uniform")]
    init: String,
    #[arg(long, value_enum, default_value = "auto")]
    backend: BackendArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct DgrArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    /// complete, ones, const:R or a comma-separated list of n-1 values.
    #[arg(long, default_value = "ones")]
    gamma: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SurvivorArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: u32,
    #[arg(long)]
    p: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CouponMode {
    /// Collect one coupon of each type.
    Multipass,
    /// Geometric targets driven by shared Bernoulli sequences.
    Geometric,
    /// Coupled pair with one slow type.
    Slow,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IndexMapArg {
    Disjoint,
    Shared,
}

#[derive(Debug, Args)]
struct CouponArgs {
    #[arg(long, value_enum, default_value = "multipass")]
    mode: CouponMode,
    #[arg(long)]
    n: usize,
    /// Inverse per-type arrival rate; defaults to n.
    #[arg(long)]
    big_n: Option<f64>,
    /// independent, single or bundled.
    #[arg(long, default_value = "single")]
    coupling: String,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long)]
    q_slow: Option<f64>,
    #[arg(long, value_enum, default_value = "disjoint")]
    index_map: IndexMapArg,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long)]
    per_run: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value = "uniform")]
    init: String,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct VerifyBoundArgs {
    /// A single graph; the standard suite when omitted.
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    mc: McArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CompareRegularArgs {
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5")]
    p_grid: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SundewLollipopArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    #[command(flatten)]
    mc: McArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "ones")]
    gamma: String,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Scan E_k alone instead of the symmetric sums.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

/// A run that completed but whose checked property failed.
struct CheckFailed;

type CmdResult = Result<std::result::Result<(), CheckFailed>>;

fn passed() -> CmdResult {
    Ok(Ok(()))
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(Ok(())) => 0,
        Ok(Err(CheckFailed)) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::Parse { .. } | Error::Io(_) | Error::Capacity { .. } => 2,
        _ => 1,
    }
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Exact(a) => exact(a),
        Command::Dgr(a) => dgr_table(a),
        Command::Survivor(a) => survivor(a),
        Command::Coupon(a) => coupon(a),
        Command::Bench(a) => bench(a),
        Command::VerifyBound(a) => verify_bound(a),
        Command::CompareRegular(a) => compare_regular(a),
        Command::SundewLollipop(a) => sundew_lollipop(a),
        Command::ScanMonotonicity(a) => scan(a),
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes `rows` as CSV, or `json` as pretty JSON.
fn emit<T: Serialize, J: Serialize + ?Sized>(output: &OutputArgs, rows: &[T], json: &J) -> Result<()> {
    let mut out = sink(&output.out)?;
    match output.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for row in rows {
                w.serialize(row).map_err(csv_error)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, json).map_err(|e| Error::Internal(e.to_string()))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn emit_rows<T: Serialize>(output: &OutputArgs, rows: &[T]) -> Result<()> {
    emit(output, rows, rows)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Internal(format!("{other:?}")),
    }
}

fn load_graph(args: &GraphArgs) -> Result<Option<NamedGraph>> {
    if let Some(path) = &args.graph {
        let text = std::fs::read_to_string(path)?;
        let graph = parse_graph(&text)?;
        return Ok(Some(NamedGraph::new(file_label(path), graph)));
    }
    match (&args.family, args.n) {
        (Some(f), Some(n)) => Ok(Some(experiments::family(f, n, args.r)?)),
        (Some(_), None) => invalid("--family needs --n"),
        (None, _) => Ok(None),
    }
}

fn require_graph(args: &GraphArgs) -> Result<NamedGraph> {
    load_graph(args)?.ok_or_else(|| Error::InvalidParameter("give --graph FILE or --family NAME --n N".into()))
}

fn file_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Parses `uniform`, `nonempty` or `fixed:K`.
pub fn parse_init(text: &str, n: usize, m: u32) -> Result<InitMode> {
    match text {
        "uniform" => Ok(InitMode::Uniform),
        "nonempty" => Ok(InitMode::ConditionedNonempty),
        _ => match text.strip_prefix("fixed:") {
            Some(k) => {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad fixed count {k:?}")))?;
                Ok(InitMode::Fixed(StrategyState::split(n, k, m)?))
            }
            None => invalid(format!("unknown init mode {text:?}")),
        },
    }
}

/// Parses `complete`, `ones`, `const:R` or a comma-separated list.
pub fn parse_gammas(text: &str, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return invalid("need n >= 2");
    }
    match text {
        "complete" => dgr::complete_graph_gammas(n),
        "ones" => Ok(vec![1.0; n - 1]),
        _ => {
            if let Some(r) = text.strip_prefix("const:") {
                let r: f64 = r
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad constant {r:?}")))?;
                return Ok(vec![r; n - 1]);
            }
            text.split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad delay value {s:?}")))
                })
                .collect()
        }
    }
}

fn mc_config(p: f64, m: u32, mc: &McArgs, init: InitMode, step_cap: u64) -> EstimateConfig {
    let mut config = EstimateConfig::new(p, m, mc.reps, mc.seed)
        .with_init(init)
        .with_step_cap(step_cap);
    config.workers = mc.workers;
    config
}

#[derive(Serialize)]
struct RunRow {
    replication: usize,
    winner: u32,
    steps: u64,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    row: &'a BenchRow,
    stats: &'a SimStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    runs: Option<&'a [RunRow]>,
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let named = require_graph(&a.graph)?;
    let init = parse_init(&a.init, named.graph.vertex_count(), a.m)?;
    let config = mc_config(a.p, a.m, &a.mc, init, a.step_cap);
    let outcomes = replicate_outcomes(&named.graph, &config)?;
    let stats = SimStats::from_outcomes(&outcomes, a.m, a.mc.seed);
    let row = BenchRow::new(&named, a.p, &stats, None, &config.init);
    let runs: Vec<RunRow> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| RunRow {
            replication: i,
            winner: o.winner,
            steps: o.steps,
        })
        .collect();
    let report = SimulateReport {
        row: &row,
        stats: &stats,
        runs: a.per_run.then_some(&runs[..]),
    };
    if a.per_run {
        emit(&a.output, &runs, &report)?;
    } else {
        emit(&a.output, std::slice::from_ref(&row), &report)?;
    }
    passed()
}

#[derive(Serialize)]
struct ExactRow {
    graph: String,
    n: usize,
    edges: usize,
    m: u32,
    p: f64,
    init: String,
    expected_time: f64,
    winner: u32,
    probability: f64,
}

fn exact(a: ExactArgs) -> CmdResult {
    let named = require_graph(&a.graph)?;
    let init = parse_init(&a.init, named.graph.vertex_count(), a.m)?;
    let chain = build_chain(&named.graph, a.m, a.p)?;
    let dist = chain.init_distribution(&init)?;
    let backend = match a.backend {
        BackendArg::Auto => Backend::Auto,
        BackendArg::Dense => Backend::Dense,
        BackendArg::Iterative => Backend::Iterative,
    };
    let solution = chain.solve(backend)?;
    let expected_time = solution.expected_time(&dist)?;
    let winners = solution.absorption_distribution(&dist)?;
    let rows: Vec<ExactRow> = winners
        .iter()
        .enumerate()
        .map(|(i, &probability)| ExactRow {
            graph: named.name.clone(),
            n: named.graph.vertex_count(),
            edges: named.graph.edge_count(),
            m: a.m,
            p: a.p,
            init: init.label(),
            expected_time,
            winner: i as u32 + 1,
            probability,
        })
        .collect();
    emit_rows(&a.output, &rows)?;
    passed()
}

#[derive(Serialize)]
struct DgrRow {
    k: usize,
    lambda: f64,
    #[serde(rename = "E_k")]
    e_k: f64,
    #[serde(rename = "E_sym")]
    e_sym: f64,
}

fn dgr_table(a: DgrArgs) -> CmdResult {
    let gammas = parse_gammas(&a.gamma, a.n)?;
    let params = DgrParams::new(a.n, a.p, gammas)?;
    let times = dgr::expected_times(&params)?;
    let lambda = params.lambda();
    let rows: Vec<DgrRow> = (0..=a.n)
        .map(|k| DgrRow {
            k,
            lambda,
            e_k: times[k],
            e_sym: times[k] + times[a.n - k],
        })
        .collect();
    emit_rows(&a.output, &rows)?;
    passed()
}

#[derive(Serialize)]
struct SurvivorRow {
    l: u32,
    probability: f64,
}

fn survivor(a: SurvivorArgs) -> CmdResult {
    let dist = dgr::survivor_distribution(a.n, a.m, a.p)?;
    let rows: Vec<SurvivorRow> = dist
        .iter()
        .enumerate()
        .map(|(i, &probability)| SurvivorRow {
            l: i as u32 + 1,
            probability,
        })
        .collect();
    emit_rows(&a.output, &rows)?;
    passed()
}

#[derive(Serialize)]
struct CouponRow {
    mode: String,
    coupling: String,
    n: usize,
    big_n: f64,
    q: f64,
    replications: usize,
    estimate: f64,
    stderr: f64,
    bound: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct SlowRow {
    n: usize,
    big_n: f64,
    q: f64,
    q_slow: f64,
    replications: usize,
    uniform_mean: f64,
    uniform_stderr: f64,
    slow_mean: f64,
    slow_stderr: f64,
    slow_last_frequency: f64,
    slow_last_probability: f64,
}

#[derive(Serialize)]
struct CouponRun {
    replication: usize,
    time: u64,
}

fn coupon(a: CouponArgs) -> CmdResult {
    let big_n = a.big_n.unwrap_or(a.n as f64);
    let reps = a.mc.reps;
    if reps == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    if let CouponMode::Slow = a.mode {
        let spec = SlowTypeSpec::new(a.n, big_n, a.q, a.q_slow.unwrap_or(a.q / 2.0))?;
        let runs = mc::replicate(reps, a.mc.seed, a.mc.workers, |_, rng| simulate_slow_type(&spec, rng))?;
        let uniform: Vec<f64> = runs.iter().map(|o| o.uniform_time as f64).collect();
        let slow: Vec<f64> = runs.iter().map(|o| o.slow_time as f64).collect();
        let (u, s) = (Estimate::from_samples(&uniform), Estimate::from_samples(&slow));
        let row = SlowRow {
            n: a.n,
            big_n,
            q: spec.q,
            q_slow: spec.q_slow,
            replications: reps,
            uniform_mean: u.mean,
            uniform_stderr: u.stderr,
            slow_mean: s.mean,
            slow_stderr: s.stderr,
            slow_last_frequency: runs.iter().filter(|o| o.slow_type_last).count() as f64 / reps as f64,
            slow_last_probability: spec.slow_last_probability(),
        };
        emit_rows(&a.output, std::slice::from_ref(&row))?;
        return passed();
    }
    let coupling = VerifiedCoupling::new(builtin_coupling(&a.coupling, a.n, big_n)?, big_n)?;
    let (times, q) = match a.mode {
        CouponMode::Multipass => (
            mc::replicate(reps, a.mc.seed, a.mc.workers, |_, rng| simulate_multipass(&coupling, rng))?,
            1.0,
        ),
        _ => {
            let index_map = match a.index_map {
                IndexMapArg::Disjoint => IndexMap::Disjoint,
                IndexMapArg::Shared => IndexMap::Shared,
            };
            let spec = CouponSpec::new(a.n, TargetModel::Geometric { q: a.q, index_map })?;
            let runs = mc::replicate(reps, a.mc.seed, a.mc.workers, |_, rng| {
                simulate_connected_geometrics(&spec, &coupling, rng)
            })?;
            (runs.into_iter().collect::<Result<Vec<u64>>>()?, a.q)
        }
    };
    if a.per_run {
        let runs: Vec<CouponRun> = times
            .iter()
            .enumerate()
            .map(|(replication, &time)| CouponRun { replication, time })
            .collect();
        emit_rows(&a.output, &runs)?;
        return passed();
    }
    let samples: Vec<f64> = times.iter().map(|&t| t as f64).collect();
    let est = Estimate::from_samples(&samples);
    let bound = collector_bound(a.n, big_n, q);
    let row = CouponRow {
        mode: format!("{:?}", a.mode).to_lowercase(),
        coupling: coupling.name(),
        n: a.n,
        big_n,
        q,
        replications: reps,
        estimate: est.mean,
        stderr: est.stderr,
        bound,
        ratio: est.mean / bound,
    };
    emit_rows(&a.output, std::slice::from_ref(&row))?;
    passed()
}

fn bench(a: BenchArgs) -> CmdResult {
    let graphs = match load_graph(&a.graph)? {
        Some(g) => vec![g],
        None => experiments::standard_suite()?,
    };
    let mut rows = Vec::with_capacity(graphs.len());
    for named in &graphs {
        let init = parse_init(&a.init, named.graph.vertex_count(), a.m)?;
        let config = mc_config(a.p, a.m, &a.mc, init, a.step_cap);
        rows.push(experiments::bench(named, &config)?);
    }
    emit_rows(&a.output, &rows)?;
    passed()
}

fn verify_bound(a: VerifyBoundArgs) -> CmdResult {
    let graphs = match load_graph(&a.graph)? {
        Some(g) => vec![g],
        None => experiments::standard_suite()?,
    };
    let report = experiments::verify_upper_bound(&graphs, a.mc.reps, a.mc.seed, a.mc.workers)?;
    emit(&a.output, &report.rows, &report)?;
    if report.passed() {
        passed()
    } else {
        eprintln!("bound violated on: {}", report.violations.join(", "));
        Ok(Err(CheckFailed))
    }
}

fn compare_regular(a: CompareRegularArgs) -> CmdResult {
    let cmp = experiments::regular_graph_comparison(a.n, &a.p_grid)?;
    emit(&a.output, &cmp.rows, &cmp)?;
    if cmp.complete_is_minimal() {
        passed()
    } else {
        eprintln!("K_{} not strictly fastest at p = {:?}", a.n, cmp.failures);
        Ok(Err(CheckFailed))
    }
}

fn sundew_lollipop(a: SundewLollipopArgs) -> CmdResult {
    let cmp = experiments::sundew_vs_lollipop(a.n, a.r, a.mc.reps, a.mc.seed, a.mc.workers)?;
    let rows = [cmp.sundew.clone(), cmp.lollipop.clone()];
    emit(&a.output, &rows, &cmp)?;
    eprintln!(
        "gap {:.3} (stderr {:.3}), normalized {:.4}",
        cmp.gap, cmp.gap_stderr, cmp.normalized_gap
    );
    if cmp.separated {
        passed()
    } else {
        eprintln!("sundew not separated from lollipop by 3 standard errors");
        Ok(Err(CheckFailed))
    }
}

#[derive(Serialize)]
struct ScanRow {
    k: usize,
    lambda: f64,
    value: f64,
}

fn scan(a: ScanArgs) -> CmdResult {
    if !(a.step > 0.0 && a.step <= 1.0) {
        return Err(Error::InvalidParameter(format!("step {} outside (0, 1]", a.step)));
    }
    let gammas = parse_gammas(&a.gamma, a.n)?;
    let grid = dgr::lambda_grid(a.step);
    let report = match a.k {
        Some(k) => dgr::single_term_scan(a.n, &gammas, k, &grid)?,
        None => dgr::symmetric_sum_scan(a.n, &gammas, &grid)?,
    };
    let rows: Vec<ScanRow> = report
        .ks
        .iter()
        .zip(&report.values)
        .flat_map(|(&k, series)| {
            grid.iter()
                .zip(series)
                .map(move |(&lambda, &value)| ScanRow { k, lambda, value })
        })
        .collect();
    emit(&a.output, &rows, &report)?;
    for v in &report.violations {
        eprintln!(
            "k = {}: drop of {:.3e} between lambda {} and {}",
            v.k, v.lambda_from, v.lambda_to, v.drop
        );
    }
    if a.k.is_none() && !report.is_monotone() {
        return Ok(Err(CheckFailed));
    }
    passed()
}
