//! Graph-family comparisons at desk scale.
//!
//! Experiments about the `p = 0` bounds use the conditioned-nonempty start
//! (at least one vertex plays strategy 1); exact comparisons use the uniform
//! start. Every row records which one it used.

use serde::Serialize;

use crate::chain::{build_chain, Backend};
use crate::coupon::HarmonicTable;
use crate::error::{invalid, Result};
use crate::graph::{self, Graph};
use crate::process::{estimate, EstimateConfig, InitMode, SimStats};

/// A graph with a display name.
#[derive(Debug, Clone)]
pub struct NamedGraph {
    pub name: String,
    pub graph: Graph,
}

impl NamedGraph {
    pub fn new(name: impl Into<String>, graph: Graph) -> Self {
        NamedGraph {
            name: name.into(),
            graph,
        }
    }
}

/// Builds a named family member: `complete`, `path`, `cycle`, `star`,
/// `sundew`, `lollipop` (these two need `r`) or `jellyfish`.
pub fn family(name: &str, n: usize, r: Option<usize>) -> Result<NamedGraph> {
    let need_r = || r.ok_or_else(|| crate::Error::InvalidParameter(format!("family {name} needs r")));
    let (label, g) = match name {
        "complete" => (format!("K_{n}"), graph::make_complete(n)?),
        "path" => (format!("P_{n}"), graph::make_path(n)?),
        "cycle" => (format!("C_{n}"), graph::make_cycle(n)?),
        "star" => (format!("star_{n}"), graph::make_star(n)?),
        "sundew" => {
            let r = need_r()?;
            (format!("Sd_{n}_{r}"), graph::make_sundew(n, r)?)
        }
        "lollipop" => {
            let r = need_r()?;
            (format!("Lp_{n}_{r}"), graph::make_lollipop(n, r)?)
        }
        "jellyfish" => (format!("J_{n}"), graph::make_jellyfish(n)?),
        other => return invalid(format!("unknown graph family {other:?}")),
    };
    Ok(NamedGraph::new(label, g))
}

/// One line of a benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub graph: String,
    pub n: usize,
    pub edges: usize,
    pub p: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub theory: Option<f64>,
    pub ratio: Option<f64>,
    pub init: String,
}

impl BenchRow {
    pub fn new(named: &NamedGraph, p: f64, stats: &SimStats, theory: Option<f64>, init: &InitMode) -> Self {
        BenchRow {
            graph: named.name.clone(),
            n: named.graph.vertex_count(),
            edges: named.graph.edge_count(),
            p,
            estimate: stats.time_mean,
            stderr: stats.time_stderr(),
            theory,
            ratio: theory.map(|t| stats.time_mean / t),
            init: init.label(),
        }
    }
}

/// `n^2 ln n + n`, the bound on the `p = 0` stabilisation time for any connected graph.
pub fn upper_bound(n: usize) -> f64 {
    let n = n as f64;
    n * n * n.ln() + n
}

fn p_zero_config(reps: usize, seed: u64, workers: Option<usize>) -> EstimateConfig {
    let mut config = EstimateConfig::new(0.0, 2, reps, seed).with_init(InitMode::ConditionedNonempty);
    config.workers = workers;
    config
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub rows: Vec<BenchRow>,
    /// Names of graphs whose `estimate + 3 stderr` reached the bound.
    pub violations: Vec<String>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Estimates the `p = 0` stabilisation time on each graph and checks
/// `estimate + 3 stderr < n^2 ln n + n`.
pub fn verify_upper_bound(
    graphs: &[NamedGraph],
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<BoundReport> {
    let config = p_zero_config(reps, seed, workers);
    let mut rows = Vec::with_capacity(graphs.len());
    let mut violations = Vec::new();
    for named in graphs {
        let stats = estimate(&named.graph, &config)?;
        let bound = upper_bound(named.graph.vertex_count());
        let row = BenchRow::new(named, 0.0, &stats, Some(bound), &config.init);
        if row.estimate + 3.0 * row.stderr >= bound {
            violations.push(named.name.clone());
        }
        rows.push(row);
    }
    Ok(BoundReport { rows, violations })
}

/// Paths, cycles, cliques, sundews, lollipops and jellyfish up to 128 vertices.
pub fn standard_suite() -> Result<Vec<NamedGraph>> {
    let mut graphs = Vec::new();
    for n in [10, 32, 128] {
        graphs.push(family("path", n, None)?);
        graphs.push(family("cycle", n, None)?);
        graphs.push(family("complete", n, None)?);
        graphs.push(family("sundew", n, Some(n / 3))?);
        graphs.push(family("lollipop", n, Some(n / 3))?);
    }
    for n in [16, 32, 64, 128] {
        graphs.push(family("jellyfish", n, None)?);
    }
    Ok(graphs)
}

#[derive(Debug, Clone, Serialize)]
pub struct SundewLollipop {
    pub sundew: BenchRow,
    pub lollipop: BenchRow,
    /// `mean(Sd) - mean(Lp)`.
    pub gap: f64,
    pub gap_stderr: f64,
    /// `gap / e(G)`; tends to `ln 2` as `r` and `n - r` grow.
    pub normalized_gap: f64,
    /// Sundew larger by at least three standard errors.
    pub separated: bool,
}

/// Compares Sd_{n,r} and Lp_{n,r} at `p = 0` on identical replication streams.
pub fn sundew_vs_lollipop(
    n: usize,
    r: usize,
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<SundewLollipop> {
    let sd = family("sundew", n, Some(r))?;
    let lp = family("lollipop", n, Some(r))?;
    let config = p_zero_config(reps, seed, workers);
    let e = sd.graph.edge_count() as f64;
    let h_r = HarmonicTable::new(r).get(r);
    let sd_stats = estimate(&sd.graph, &config)?;
    let lp_stats = estimate(&lp.graph, &config)?;
    let sundew = BenchRow::new(
        &sd,
        0.0,
        &sd_stats,
        Some(e * (h_r - std::f64::consts::LN_2)),
        &config.init,
    );
    let lollipop = BenchRow::new(&lp, 0.0, &lp_stats, Some(e * (h_r - 4f64.ln())), &config.init);
    let gap = sundew.estimate - lollipop.estimate;
    let gap_stderr = sundew.stderr.hypot(lollipop.stderr);
    Ok(SundewLollipop {
        separated: gap > 3.0 * gap_stderr,
        normalized_gap: gap / e,
        gap,
        gap_stderr,
        sundew,
        lollipop,
    })
}

/// `p = 0` stabilisation time on P_n; `theory` is `n ln n`.
pub fn path_time(n: usize, reps: usize, seed: u64, workers: Option<usize>) -> Result<BenchRow> {
    let named = family("path", n, None)?;
    let config = p_zero_config(reps, seed, workers);
    let stats = estimate(&named.graph, &config)?;
    let nf = n as f64;
    Ok(BenchRow::new(&named, 0.0, &stats, Some(nf * nf.ln()), &config.init))
}

/// Connected regular graphs on `n <= 8` vertices used for the exact comparison.
pub fn curated_regular_graphs(n: usize) -> Result<Vec<NamedGraph>> {
    if !(3..=8).contains(&n) {
        return invalid(format!("regular graph comparison supports 3 <= n <= 8, got {n}"));
    }
    let mut out = vec![NamedGraph::new(format!("K_{n}"), graph::make_complete(n)?)];
    if n > 3 {
        out.push(NamedGraph::new(format!("C_{n}"), graph::make_cycle(n)?));
    }
    if n % 2 == 0 && n >= 4 {
        let k = n / 2;
        if n >= 6 {
            out.push(NamedGraph::new(format!("K_{k}_{k}"), graph::make_complete_bipartite(k, k)?));
            out.push(NamedGraph::new(format!("prism_{k}"), graph::make_prism(k)?));
            out.push(NamedGraph::new(format!("cocktail_{k}"), graph::make_cocktail_party(k)?));
        }
        if n == 8 {
            out.push(NamedGraph::new("wagner_8", graph::make_circulant(8, &[1, 4])?));
            out.push(NamedGraph::new("circulant_8_1_2", graph::make_circulant(8, &[1, 2])?));
        }
    }
    if n == 7 {
        out.push(NamedGraph::new("circulant_7_1_2", graph::make_circulant(7, &[1, 2])?));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularRow {
    pub graph: String,
    pub n: usize,
    pub edges: usize,
    pub degree: usize,
    pub p: f64,
    pub expected_time: f64,
    /// At `p = 1/2` on a regular graph the process is the voter model.
    pub voter_model: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularComparison {
    pub rows: Vec<RegularRow>,
    /// Grid values of `p` at which K_n was not strictly fastest.
    pub failures: Vec<f64>,
}

impl RegularComparison {
    pub fn complete_is_minimal(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Exact two-strategy expected consensus times (uniform start) on the
/// curated regular graphs; checks that K_n is strictly fastest at every `p`.
pub fn regular_graph_comparison(n: usize, p_grid: &[f64]) -> Result<RegularComparison> {
    let graphs = curated_regular_graphs(n)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &p in p_grid {
        let mut times = Vec::with_capacity(graphs.len());
        for named in &graphs {
            let degree = named
                .graph
                .regular_degree()
                .ok_or_else(|| crate::Error::Internal(format!("{} is not regular", named.name)))?;
            let chain = build_chain(&named.graph, 2, p)?;
            let init = chain.init_distribution(&InitMode::Uniform)?;
            let t = chain.solve(Backend::Auto)?.expected_time(&init)?;
            times.push(t);
            rows.push(RegularRow {
                graph: named.name.clone(),
                n,
                edges: named.graph.edge_count(),
                degree,
                p,
                expected_time: t,
                voter_model: p == 0.5,
            });
        }
        if times[1..].iter().any(|&t| t <= times[0]) {
            failures.push(p);
        }
    }
    Ok(RegularComparison { rows, failures })
}

/// Monte Carlo against the exact chain on one instance.
#[derive(Debug, Clone, Serialize)]
pub struct Consistency {
    pub graph: String,
    pub m: u32,
    pub p: f64,
    pub exact_time: f64,
    pub exact_winners: Vec<f64>,
    pub stats: SimStats,
    /// `|mc - exact| / stderr` for the time.
    pub time_z: f64,
    /// Largest standardized winner-frequency deviation (binomial stderr at the exact value).
    pub winner_z: f64,
}

impl Consistency {
    pub fn within(&self, k: f64) -> bool {
        self.time_z <= k && self.winner_z <= k
    }
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        diff.abs() / se
    }
}

/// Runs both routes on a small instance (`m^n <= 4096`).
pub fn mc_exact_consistency(named: &NamedGraph, config: &EstimateConfig) -> Result<Consistency> {
    let n = named.graph.vertex_count();
    if (config.m as f64).powi(n as i32) > 4096.0 {
        return invalid("instance too large for the exact comparison (m^n > 4096)");
    }
    let chain = build_chain(&named.graph, config.m, config.p)?;
    let init = chain.init_distribution(&config.init)?;
    let solution = chain.solve(Backend::Dense)?;
    let exact_time = solution.expected_time(&init)?;
    let exact_winners = solution.absorption_distribution(&init)?;
    let stats = estimate(&named.graph, config)?;
    let reps = stats.replications as f64;
    let time_z = z_score(stats.time_mean - exact_time, stats.time_stderr());
    let winner_z = exact_winners
        .iter()
        .enumerate()
        .map(|(i, &pi)| {
            let freq = stats.winner_counts[i] as f64 / reps;
            z_score(freq - pi, (pi * (1.0 - pi) / reps).sqrt())
        })
        .fold(0.0, f64::max);
    Ok(Consistency {
        graph: named.name.clone(),
        m: config.m,
        p: config.p,
        exact_time,
        exact_winners,
        stats,
        time_z,
        winner_z,
    })
}

/// Monte Carlo bench row, with the exact expectation as `theory` when the
/// instance is small enough.
pub fn bench(named: &NamedGraph, config: &EstimateConfig) -> Result<BenchRow> {
    let stats = estimate(&named.graph, config)?;
    let n = named.graph.vertex_count();
    let theory = if (config.m as f64).powi(n as i32) <= 4096.0 {
        let chain = build_chain(&named.graph, config.m, config.p)?;
        let init = chain.init_distribution(&config.init)?;
        Some(chain.solve(Backend::Auto)?.expected_time(&init)?)
    } else {
        None
    };
    Ok(BenchRow::new(named, config.p, &stats, theory, &config.init))
}
