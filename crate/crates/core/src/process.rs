//! The pairwise consensus dynamics and its Monte Carlo estimator.
//!
//! At each step one edge is sampled uniformly. If its endpoints disagree,
//! both adopt the higher strategy with probability `p` and the lower one
//! otherwise. Time counts every edge sample, significant or not.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::mc;

pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;

/// Strategy assignment in `1..=m` for each vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrategyState {
    strategies: Vec<u32>,
    m: u32,
}

impl StrategyState {
    pub fn new(strategies: Vec<u32>, m: u32) -> Result<Self> {
        if m == 0 {
            return invalid("strategy count m must be positive");
        }
        if strategies.is_empty() {
            return invalid("state must cover at least one vertex");
        }
        if let Some(bad) = strategies.iter().find(|&&s| s == 0 || s > m) {
            return invalid(format!("strategy {bad} outside 1..={m}"));
        }
        Ok(StrategyState { strategies, m })
    }

    /// Independent uniform strategies.
    pub fn uniform<R: Rng + ?Sized>(n: usize, m: u32, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return invalid("state must cover at least one vertex");
        }
        if m == 0 {
            return invalid("strategy count m must be positive");
        }
        let strategies = (0..n).map(|_| rng.gen_range(1..=m)).collect();
        Ok(StrategyState { strategies, m })
    }

    /// Uniform state conditioned on at least one vertex playing strategy 1.
    pub fn conditioned_nonempty<R: Rng + ?Sized>(n: usize, m: u32, rng: &mut R) -> Result<Self> {
        loop {
            let state = Self::uniform(n, m, rng)?;
            if state.strategies.contains(&1) {
                return Ok(state);
            }
        }
    }

    /// Vertices `0..k` play strategy 1, the rest play `m`.
    pub fn split(n: usize, k: usize, m: u32) -> Result<Self> {
        if k > n {
            return invalid(format!("fixed split {k} exceeds vertex count {n}"));
        }
        Self::new((0..n).map(|v| if v < k { 1 } else { m }).collect(), m)
    }

    pub fn strategies(&self) -> &[u32] {
        &self.strategies
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    /// The common strategy if every vertex agrees.
    pub fn consensus(&self) -> Option<u32> {
        let first = self.strategies[0];
        self.strategies.iter().all(|&s| s == first).then_some(first)
    }

    /// Merges strategies into `{<= l} -> 1` and `{> l} -> 2`.
    pub fn coarse_grain(&self, l: u32) -> Result<StrategyState> {
        if l == 0 || l >= self.m {
            return invalid(format!("coarse-graining level {l} must lie in 1..{}", self.m));
        }
        Ok(StrategyState {
            strategies: self
                .strategies
                .iter()
                .map(|&s| if s <= l { 1 } else { 2 })
                .collect(),
            m: 2,
        })
    }

    fn check_graph(&self, graph: &Graph) -> Result<()> {
        if self.len() != graph.vertex_count() {
            return invalid(format!(
                "state has {} entries but the graph has {} vertices",
                self.len(),
                graph.vertex_count()
            ));
        }
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("p = {p} outside [0, 1]"));
    }
    Ok(())
}

/// Applies one step in place; returns whether the sampled edge was significant.
pub fn step<R: Rng + ?Sized>(graph: &Graph, state: &mut StrategyState, p: f64, rng: &mut R) -> bool {
    step_with_change(graph, &mut state.strategies, p, rng).is_some()
}

/// One step on a raw strategy slice. Returns `(vertex, old, new)` for the
/// endpoint that changed, if any.
#[inline]
fn step_with_change<R: Rng + ?Sized>(
    graph: &Graph,
    strategies: &mut [u32],
    p: f64,
    rng: &mut R,
) -> Option<(usize, u32, u32)> {
    let e = graph.edge_count();
    if e == 0 {
        return None;
    }
    let (u, v) = graph.edges()[rng.gen_range(0..e)];
    let (su, sv) = (strategies[u], strategies[v]);
    if su == sv {
        return None;
    }
    let winner = if rng.gen::<f64>() < p { su.max(sv) } else { su.min(sv) };
    if su != winner {
        strategies[u] = winner;
        Some((u, su, winner))
    } else {
        strategies[v] = winner;
        Some((v, sv, winner))
    }
}

/// Surviving strategy and stabilisation time of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub winner: u32,
    pub steps: u64,
}

/// Runs until every vertex agrees. Exceeding `step_cap` is an error carrying
/// the state at that moment.
pub fn run_to_consensus<R: Rng + ?Sized>(
    graph: &Graph,
    mut state: StrategyState,
    p: f64,
    rng: &mut R,
    step_cap: u64,
) -> Result<Outcome> {
    check_p(p)?;
    state.check_graph(graph)?;
    let m = state.m as usize;
    let mut counts = vec![0usize; m + 1];
    for &s in &state.strategies {
        counts[s as usize] += 1;
    }
    let mut alive = counts.iter().filter(|&&c| c > 0).count();
    let mut steps = 0u64;
    while alive > 1 {
        if steps == step_cap {
            return Err(Error::Timeout {
                steps,
                state: Box::new(state),
            });
        }
        steps += 1;
        if let Some((_, old, new)) = step_with_change(graph, &mut state.strategies, p, rng) {
            counts[old as usize] -= 1;
            if counts[old as usize] == 0 {
                alive -= 1;
            }
            counts[new as usize] += 1;
        }
    }
    Ok(Outcome {
        winner: state.strategies[0],
        steps,
    })
}

/// At `p = 0` the initially lowest strategy spreads monotonically; call its
/// holders active. Returns the consensus outcome together with, for each
/// subset `U`, the first step at which all of `U` is active (`T_U`).
pub fn run_recording_subsets<R: Rng + ?Sized>(
    graph: &Graph,
    mut state: StrategyState,
    rng: &mut R,
    step_cap: u64,
    subsets: &[Vec<usize>],
) -> Result<(Outcome, Vec<u64>)> {
    state.check_graph(graph)?;
    let n = graph.vertex_count();
    let active = *state.strategies.iter().min().expect("non-empty state");
    let mut member_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut missing = vec![0usize; subsets.len()];
    for (i, subset) in subsets.iter().enumerate() {
        for &v in subset {
            if v >= n {
                return invalid(format!("subset vertex {v} outside 0..{n}"));
            }
            member_of[v].push(i);
            if state.strategies[v] != active {
                missing[i] += 1;
            }
        }
    }
    let mut times = vec![0u64; subsets.len()];
    let mut inactive = state.strategies.iter().filter(|&&s| s != active).count();
    let mut steps = 0u64;
    while inactive > 0 {
        if steps == step_cap {
            return Err(Error::Timeout {
                steps,
                state: Box::new(state),
            });
        }
        steps += 1;
        if let Some((v, _, new)) = step_with_change(graph, &mut state.strategies, 0.0, rng) {
            debug_assert_eq!(new, active);
            inactive -= 1;
            for &i in &member_of[v] {
                missing[i] -= 1;
                if missing[i] == 0 {
                    times[i] = steps;
                }
            }
        }
    }
    Ok((
        Outcome {
            winner: active,
            steps,
        },
        times,
    ))
}

/// How each replication's initial state is drawn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitMode {
    /// Uniform over `[m]^n`.
    Uniform,
    /// Uniform conditioned on at least one vertex playing strategy 1.
    ConditionedNonempty,
    /// The same state every replication.
    Fixed(StrategyState),
}

impl InitMode {
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, m: u32, rng: &mut R) -> Result<StrategyState> {
        match self {
            InitMode::Uniform => StrategyState::uniform(n, m, rng),
            InitMode::ConditionedNonempty => StrategyState::conditioned_nonempty(n, m, rng),
            InitMode::Fixed(state) => {
                if state.len() != n || state.m() != m {
                    return invalid("fixed state does not match the graph size or m");
                }
                Ok(state.clone())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            InitMode::Uniform => "uniform".into(),
            InitMode::ConditionedNonempty => "nonempty".into(),
            InitMode::Fixed(s) => {
                let k = s.strategies().iter().filter(|&&x| x == 1).count();
                if *s == StrategyState::split(s.len(), k, s.m()).unwrap_or_else(|_| s.clone()) {
                    format!("fixed:{k}")
                } else {
                    "fixed".into()
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub p: f64,
    pub m: u32,
    pub replications: usize,
    pub seed: u64,
    pub init: InitMode,
    pub step_cap: u64,
    /// `None` defers to `CONSENSUS_LAB_THREADS` / rayon.
    pub workers: Option<usize>,
}

impl EstimateConfig {
    pub fn new(p: f64, m: u32, replications: usize, seed: u64) -> Self {
        EstimateConfig {
            p,
            m,
            replications,
            seed,
            init: InitMode::Uniform,
            step_cap: DEFAULT_STEP_CAP,
            workers: None,
        }
    }

    pub fn with_init(mut self, init: InitMode) -> Self {
        self.init = init;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }
}

/// Aggregated Monte Carlo output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    pub replications: usize,
    /// `winner_counts[l - 1]` counts runs won by strategy `l`.
    pub winner_counts: Vec<u64>,
    pub time_mean: f64,
    pub time_var: f64,
    pub seed: u64,
}

impl SimStats {
    /// Aggregates outcomes in the order given.
    pub fn from_outcomes(outcomes: &[Outcome], m: u32, seed: u64) -> Self {
        let mut winner_counts = vec![0u64; m as usize];
        for o in outcomes {
            winner_counts[o.winner as usize - 1] += 1;
        }
        let times: Vec<f64> = outcomes.iter().map(|o| o.steps as f64).collect();
        let (time_mean, time_var) = mc::mean_var(&times);
        SimStats {
            replications: outcomes.len(),
            winner_counts,
            time_mean,
            time_var,
            seed,
        }
    }

    pub fn winner_frequency(&self, l: u32) -> f64 {
        self.winner_counts[l as usize - 1] as f64 / self.replications as f64
    }

    /// Binomial standard error of [`winner_frequency`](Self::winner_frequency).
    pub fn winner_stderr(&self, l: u32) -> f64 {
        let f = self.winner_frequency(l);
        (f * (1.0 - f) / self.replications as f64).sqrt()
    }

    pub fn time_stderr(&self) -> f64 {
        (self.time_var / self.replications as f64).sqrt()
    }
}

/// Per-replication outcomes, in replication order.
pub fn replicate_outcomes(graph: &Graph, config: &EstimateConfig) -> Result<Vec<Outcome>> {
    check_p(config.p)?;
    if config.replications == 0 {
        return invalid("need at least one replication");
    }
    if config.m == 0 {
        return invalid("strategy count m must be positive");
    }
    let n = graph.vertex_count();
    let results = mc::replicate(config.replications, config.seed, config.workers, |_, rng| {
        let state = config.init.sample(n, config.m, rng)?;
        run_to_consensus(graph, state, config.p, rng, config.step_cap)
    })?;
    let mut outcomes = Vec::with_capacity(results.len());
    let mut timed_out = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(Error::Timeout { .. }) => timed_out.push(i),
            Err(e) => return Err(e),
        }
    }
    if !timed_out.is_empty() {
        return Err(Error::ReplicationTimeouts {
            indices: timed_out,
            step_cap: config.step_cap,
        });
    }
    Ok(outcomes)
}

/// Monte Carlo estimate of the winner distribution and stabilisation time.
pub fn estimate(graph: &Graph, config: &EstimateConfig) -> Result<SimStats> {
    let outcomes = replicate_outcomes(graph, config)?;
    Ok(SimStats::from_outcomes(&outcomes, config.m, config.seed))
}
