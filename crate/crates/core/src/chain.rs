//! Exact analysis of the consensus process on small instances.
//!
//! The full chain on `[m]^n` is built explicitly and absorption quantities
//! are obtained from linear solves against `I - Q`, where `Q` is the
//! transient block. A state `(s_0, .., s_{n-1})` is encoded little-endian as
//! `sum (s_v - 1) * m^v`.

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::process::{InitMode, StrategyState};

/// Largest `m^n` the builder accepts.
pub const STATE_LIMIT: u128 = 2_000_000;
/// Transient-state count up to which `Backend::Auto` uses the dense solver.
pub const DENSE_LIMIT: usize = 4096;
/// Residual tolerance of the iterative backend.
pub const ITERATIVE_TOLERANCE: f64 = 1e-12;
const ROW_SUM_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Auto,
    /// LU with partial pivoting on the transient block.
    Dense,
    /// Gauss-Seidel sweeps on the sparse rows.
    Iterative,
}

/// Mixed-radix encoding of strategy states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateCodec {
    pub n: usize,
    pub m: u32,
}

impl StateCodec {
    pub fn state_count(&self) -> usize {
        (self.m as usize).pow(self.n as u32)
    }

    pub fn encode(&self, state: &StrategyState) -> usize {
        state
            .strategies()
            .iter()
            .rev()
            .fold(0usize, |acc, &s| acc * self.m as usize + (s as usize - 1))
    }

    pub fn decode_into(&self, mut index: usize, digits: &mut [u32]) {
        let m = self.m as usize;
        for d in digits.iter_mut() {
            *d = (index % m) as u32 + 1;
            index /= m;
        }
    }

    pub fn decode(&self, index: usize) -> StrategyState {
        let mut digits = vec![0; self.n];
        self.decode_into(index, &mut digits);
        StrategyState::new(digits, self.m).expect("decoded digits lie in 1..=m")
    }
}

/// A finite absorbing Markov chain with labelled absorbing states.
#[derive(Debug, Clone)]
pub struct AbsorbingChain {
    /// Sparse rows sorted by target, including any self-loop entry.
    rows: Vec<Vec<(usize, f64)>>,
    /// Outcome label for absorbing states.
    outcome: Vec<Option<usize>>,
    outcomes: usize,
    codec: Option<StateCodec>,
}

impl AbsorbingChain {
    /// Builds a chain from explicit rows. `outcome[s]` labels absorbing
    /// states (rows must then be a unit self-loop); labels must be `0..k`.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, outcome: Vec<Option<usize>>) -> Result<Self> {
        if rows.len() != outcome.len() || rows.is_empty() {
            return invalid("rows and outcome labels must have the same non-zero length");
        }
        let outcomes = outcome.iter().flatten().max().map_or(0, |&l| l + 1);
        let mut rows = rows;
        for (s, row) in rows.iter_mut().enumerate() {
            row.retain(|&(_, w)| w != 0.0);
            row.sort_unstable_by_key(|&(t, _)| t);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            if let Some(&(t, _)) = row.iter().find(|&&(t, _)| t >= outcome.len()) {
                return invalid(format!("row {s} points at missing state {t}"));
            }
            if row.iter().any(|&(_, w)| !(0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&w)) {
                return invalid(format!("row {s} has a weight outside [0, 1]"));
            }
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return invalid(format!("row {s} sums to {sum}"));
            }
            if outcome[s].is_some() && *row != [(s, 1.0)] {
                return invalid(format!("absorbing state {s} must have a unit self-loop"));
            }
        }
        let chain = AbsorbingChain {
            rows,
            outcome,
            outcomes,
            codec: None,
        };
        chain.check_absorbing_reachable()?;
        Ok(chain)
    }

    /// Birth-death chain on `0..=n` with absorbing ends; `down[k]` and
    /// `up[k]` are the move probabilities from interior state `k`. State `0`
    /// has outcome 0 and state `n` outcome 1.
    pub fn birth_death(down: &[f64], up: &[f64]) -> Result<Self> {
        let size = down.len();
        if size < 2 || up.len() != size {
            return invalid("birth-death chain needs matching vectors of length >= 2");
        }
        let n = size - 1;
        let mut rows = Vec::with_capacity(size);
        let mut outcome = vec![None; size];
        outcome[0] = Some(0);
        outcome[n] = Some(1);
        rows.push(vec![(0, 1.0)]);
        for k in 1..n {
            rows.push(vec![
                (k - 1, down[k]),
                (k, 1.0 - down[k] - up[k]),
                (k + 1, up[k]),
            ]);
        }
        rows.push(vec![(n, 1.0)]);
        Self::from_rows(rows, outcome)
    }

    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes
    }

    pub fn row(&self, s: usize) -> &[(usize, f64)] {
        &self.rows[s]
    }

    pub fn outcome(&self, s: usize) -> Option<usize> {
        self.outcome[s]
    }

    pub fn codec(&self) -> Option<StateCodec> {
        self.codec
    }

    pub fn absorbing_states(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&s| self.outcome[s].is_some()).collect()
    }

    /// Every state can reach an absorbing state (reverse sweep from the absorbing set).
    fn check_absorbing_reachable(&self) -> Result<()> {
        let size = self.rows.len();
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); size];
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, _) in row {
                if t != s {
                    reverse[t].push(s);
                }
            }
        }
        let mut reached = vec![false; size];
        let mut stack: Vec<usize> = self.absorbing_states();
        if stack.is_empty() {
            return invalid("chain has no absorbing state");
        }
        for &s in &stack {
            reached[s] = true;
        }
        while let Some(t) = stack.pop() {
            for &s in &reverse[t] {
                if !reached[s] {
                    reached[s] = true;
                    stack.push(s);
                }
            }
        }
        match reached.iter().position(|&r| !r) {
            Some(s) => invalid(format!("state {s} cannot reach an absorbing state")),
            None => Ok(()),
        }
    }

    /// One forward step of a distribution over states.
    pub fn propagate(&self, dist: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; dist.len()];
        for (s, &mass) in dist.iter().enumerate() {
            if mass != 0.0 {
                for &(t, w) in &self.rows[s] {
                    next[t] += mass * w;
                }
            }
        }
        next
    }

    /// Initial distribution for a process chain.
    pub fn init_distribution(&self, init: &InitMode) -> Result<Vec<f64>> {
        let codec = self
            .codec
            .ok_or_else(|| Error::InvalidParameter("chain does not encode strategy states".into()))?;
        let size = self.rows.len();
        match init {
            InitMode::Uniform => Ok(vec![1.0 / size as f64; size]),
            InitMode::ConditionedNonempty => {
                let mut digits = vec![0; codec.n];
                let mask: Vec<bool> = (0..size)
                    .map(|s| {
                        codec.decode_into(s, &mut digits);
                        digits.contains(&1)
                    })
                    .collect();
                let admissible = mask.iter().filter(|&&b| b).count() as f64;
                Ok(mask
                    .into_iter()
                    .map(|b| if b { 1.0 / admissible } else { 0.0 })
                    .collect())
            }
            InitMode::Fixed(state) => {
                if state.len() != codec.n || state.m() != codec.m {
                    return invalid("fixed state does not match the chain");
                }
                let mut dist = vec![0.0; size];
                dist[codec.encode(state)] = 1.0;
                Ok(dist)
            }
        }
    }

    /// Solves for per-state absorption probabilities and expected times.
    pub fn solve(&self, backend: Backend) -> Result<ChainSolution> {
        let size = self.rows.len();
        let transient: Vec<usize> = (0..size).filter(|&s| self.outcome[s].is_none()).collect();
        let mut position = vec![usize::MAX; size];
        for (i, &s) in transient.iter().enumerate() {
            position[s] = i;
        }
        // Right-hand sides: one per outcome plus the all-ones vector for times.
        let k = transient.len();
        let mut rhs = vec![vec![0.0; k]; self.outcomes + 1];
        for (i, &s) in transient.iter().enumerate() {
            for &(t, w) in &self.rows[s] {
                if let Some(l) = self.outcome[t] {
                    rhs[l][i] += w;
                }
            }
            rhs[self.outcomes][i] = 1.0;
        }
        let backend = match backend {
            Backend::Auto if k <= DENSE_LIMIT => Backend::Dense,
            Backend::Auto => Backend::Iterative,
            b => b,
        };
        let solutions = match backend {
            Backend::Dense => {
                let lu = DenseLu::factor(self.transient_matrix(&transient, &position))?;
                rhs.iter().map(|b| lu.solve(b)).collect::<Vec<_>>()
            }
            _ => rhs
                .iter()
                .map(|b| self.gauss_seidel(&transient, &position, b))
                .collect::<Result<Vec<_>>>()?,
        };

        let mut absorption = vec![vec![0.0; self.outcomes]; size];
        let mut times = vec![0.0; size];
        for s in 0..size {
            match self.outcome[s] {
                Some(l) => absorption[s][l] = 1.0,
                None => {
                    let i = position[s];
                    for (l, sol) in solutions.iter().take(self.outcomes).enumerate() {
                        absorption[s][l] = sol[i];
                    }
                    times[s] = solutions[self.outcomes][i];
                }
            }
        }
        Ok(ChainSolution { absorption, times })
    }

    fn transient_matrix(&self, transient: &[usize], position: &[usize]) -> DenseMatrix {
        let k = transient.len();
        let mut a = DenseMatrix::identity(k);
        for (i, &s) in transient.iter().enumerate() {
            for &(t, w) in &self.rows[s] {
                let j = position[t];
                if j != usize::MAX {
                    a.data[i * k + j] -= w;
                }
            }
        }
        a
    }

    fn gauss_seidel(&self, transient: &[usize], position: &[usize], b: &[f64]) -> Result<Vec<f64>> {
        let k = transient.len();
        let mut x = vec![0.0; k];
        let b_norm = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for _ in 0..MAX_SWEEPS {
            for (i, &s) in transient.iter().enumerate() {
                let mut acc = b[i];
                let mut stay = 0.0;
                for &(t, w) in &self.rows[s] {
                    if t == s {
                        stay = w;
                    } else {
                        let j = position[t];
                        if j != usize::MAX {
                            acc += w * x[j];
                        }
                    }
                }
                x[i] = acc / (1.0 - stay);
            }
            // residual of (I - Q) x = b
            let mut res = 0.0f64;
            for (i, &s) in transient.iter().enumerate() {
                let mut r = x[i] - b[i];
                for &(t, w) in &self.rows[s] {
                    let j = position[t];
                    if j != usize::MAX {
                        r -= w * x[j];
                    }
                }
                res = res.max(r.abs());
            }
            let x_norm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if res <= ITERATIVE_TOLERANCE * (b_norm + x_norm).max(1e-300) {
                return Ok(x);
            }
        }
        Err(Error::Internal("Gauss-Seidel did not converge".into()))
    }
}

/// Per-state exact absorption data.
#[derive(Debug, Clone)]
pub struct ChainSolution {
    /// `absorption[s][l]`: probability of ending in outcome `l` from `s`.
    pub absorption: Vec<Vec<f64>>,
    /// Expected absorption time from each state.
    pub times: Vec<f64>,
}

fn check_init(init: &[f64], size: usize) -> Result<()> {
    if init.len() != size {
        return invalid(format!("init has {} entries, chain has {size} states", init.len()));
    }
    let sum: f64 = init.iter().sum();
    if (sum - 1.0).abs() > 1e-10 || init.iter().any(|&w| w < 0.0) {
        return invalid(format!("init is not a distribution (sum {sum})"));
    }
    Ok(())
}

impl ChainSolution {
    pub fn absorption_distribution(&self, init: &[f64]) -> Result<Vec<f64>> {
        check_init(init, self.times.len())?;
        let outcomes = self.absorption.first().map_or(0, Vec::len);
        let mut out = vec![0.0; outcomes];
        for (w, row) in init.iter().zip(&self.absorption) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    pub fn expected_time(&self, init: &[f64]) -> Result<f64> {
        check_init(init, self.times.len())?;
        Ok(init.iter().zip(&self.times).map(|(w, t)| w * t).sum())
    }
}

/// Builds the consensus chain on `[m]^n` for `graph`.
pub fn build_chain(graph: &Graph, m: u32, p: f64) -> Result<AbsorbingChain> {
    if m == 0 {
        return invalid("strategy count m must be positive");
    }
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("p = {p} outside [0, 1]"));
    }
    let n = graph.vertex_count();
    let states = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if states > STATE_LIMIT {
        return Err(Error::Capacity {
            states,
            limit: STATE_LIMIT,
        });
    }
    let codec = StateCodec { n, m };
    let size = states as usize;
    let radix: Vec<usize> = (0..n).map(|v| (m as usize).pow(v as u32)).collect();
    let e = graph.edge_count() as f64;
    let mut rows = Vec::with_capacity(size);
    let mut outcome = vec![None; size];
    let mut digits = vec![0u32; n];
    for s in 0..size {
        codec.decode_into(s, &mut digits);
        if digits.iter().all(|&d| d == digits[0]) {
            outcome[s] = Some(digits[0] as usize - 1);
            rows.push(vec![(s, 1.0)]);
            continue;
        }
        let mut row = Vec::with_capacity(2 * graph.edge_count() + 1);
        let mut quiet = 0usize;
        for &(u, v) in graph.edges() {
            let (du, dv) = (digits[u], digits[v]);
            if du == dv {
                quiet += 1;
                continue;
            }
            // the endpoint holding the smaller strategy moves up, or vice versa
            let (lo_vertex, hi_vertex) = if du < dv { (u, v) } else { (v, u) };
            let gap = du.abs_diff(dv) as usize;
            let to_max = s + gap * radix[lo_vertex];
            let to_min = s - gap * radix[hi_vertex];
            row.push((to_max, p / e));
            row.push((to_min, (1.0 - p) / e));
        }
        if quiet > 0 {
            row.push((s, quiet as f64 / e));
        }
        rows.push(row);
    }
    let mut chain = AbsorbingChain::from_rows(rows, outcome)?;
    chain.codec = Some(codec);
    Ok(chain)
}

/// Exact `P(S = l)` for `l = 1..=m` from the given initial distribution.
pub fn absorption_distribution(chain: &AbsorbingChain, init: &[f64]) -> Result<Vec<f64>> {
    chain.solve(Backend::Auto)?.absorption_distribution(init)
}

/// Exact expected absorption time from the given initial distribution.
pub fn expected_absorption_time(chain: &AbsorbingChain, init: &[f64]) -> Result<f64> {
    chain.solve(Backend::Auto)?.expected_time(init)
}

#[derive(Debug, Clone)]
struct DenseMatrix {
    k: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    fn identity(k: usize) -> Self {
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            data[i * k + i] = 1.0;
        }
        DenseMatrix { k, data }
    }
}

struct DenseLu {
    lu: DenseMatrix,
    pivots: Vec<usize>,
}

impl DenseLu {
    fn factor(mut a: DenseMatrix) -> Result<Self> {
        let k = a.k;
        let mut pivots = Vec::with_capacity(k);
        for col in 0..k {
            let (piv, best) = (col..k)
                .map(|r| (r, a.data[r * k + col].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= 1e-300 {
                return Err(Error::Internal("singular transient block".into()));
            }
            if piv != col {
                for j in 0..k {
                    a.data.swap(piv * k + j, col * k + j);
                }
            }
            pivots.push(piv);
            let d = a.data[col * k + col];
            let (head, tail) = a.data.split_at_mut((col + 1) * k);
            let pivot_row = &head[col * k..];
            for row in tail.chunks_exact_mut(k) {
                let f = row[col] / d;
                if f != 0.0 {
                    row[col] = f;
                    for j in col + 1..k {
                        row[j] -= f * pivot_row[j];
                    }
                }
            }
        }
        Ok(DenseLu { lu: a, pivots })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.lu.k;
        let a = &self.lu.data;
        let mut x = b.to_vec();
        for (col, &piv) in self.pivots.iter().enumerate() {
            x.swap(col, piv);
        }
        for i in 0..k {
            let mut acc = x[i];
            for j in 0..i {
                acc -= a[i * k + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..k).rev() {
            let mut acc = x[i];
            for j in i + 1..k {
                acc -= a[i * k + j] * x[j];
            }
            x[i] = acc / a[i * k + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_complete, make_cycle, make_path, make_star};

    #[test]
    fn k2_rows() {
        let chain = build_chain(&make_complete(2).unwrap(), 2, 0.3).unwrap();
        assert_eq!(chain.state_count(), 4);
        // (1,2) -> index 0 + 1*2 = 2; (2,1) -> 1
        for s in [1, 2] {
            let row = chain.row(s);
            assert_eq!(row.len(), 2);
            assert_eq!((row[0].0, row[1].0), (0, 3));
            assert!((row[0].1 - 0.7).abs() < 1e-15 && (row[1].1 - 0.3).abs() < 1e-15);
        }
        assert_eq!(chain.row(0), &[(0, 1.0)]);
        assert_eq!(chain.row(3), &[(3, 1.0)]);
        assert_eq!(chain.absorbing_states(), vec![0, 3]);
    }

    #[test]
    fn rows_are_stochastic() {
        for (g, m, p) in [
            (make_cycle(5).unwrap(), 3, 0.17),
            (make_path(4).unwrap(), 4, 0.9),
            (make_star(6).unwrap(), 2, 0.0),
        ] {
            let chain = build_chain(&g, m, p).unwrap();
            for s in 0..chain.state_count() {
                let sum: f64 = chain.row(s).iter().map(|x| x.1).sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
            assert_eq!(chain.absorbing_states().len(), m as usize);
        }
    }

    #[test]
    fn capacity_guard() {
        let g = make_path(21).unwrap();
        assert!(matches!(build_chain(&g, 2, 0.5), Err(Error::Capacity { .. })));
    }

    #[test]
    fn k2_exact_values() {
        let chain = build_chain(&make_complete(2).unwrap(), 2, 0.0).unwrap();
        let init = chain.init_distribution(&InitMode::Uniform).unwrap();
        let dist = absorption_distribution(&chain, &init).unwrap();
        assert!((dist[0] - 0.75).abs() < 1e-15);
        assert!((expected_absorption_time(&chain, &init).unwrap() - 0.5).abs() < 1e-15);
        let cond = chain.init_distribution(&InitMode::ConditionedNonempty).unwrap();
        assert!((expected_absorption_time(&chain, &cond).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn codec_roundtrip() {
        let codec = StateCodec { n: 4, m: 3 };
        for s in 0..codec.state_count() {
            assert_eq!(codec.encode(&codec.decode(s)), s);
        }
        let st = StrategyState::new(vec![2, 1, 3, 1], 3).unwrap();
        assert_eq!(codec.encode(&st), 1 + 2 * 9);
    }

    #[test]
    fn backends_agree() {
        let g = make_cycle(5).unwrap();
        let chain = build_chain(&g, 3, 0.35).unwrap();
        let dense = chain.solve(Backend::Dense).unwrap();
        let iter = chain.solve(Backend::Iterative).unwrap();
        for s in 0..chain.state_count() {
            assert!((dense.times[s] - iter.times[s]).abs() <= 1e-9 * (1.0 + dense.times[s]));
            for l in 0..3 {
                assert!((dense.absorption[s][l] - iter.absorption[s][l]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn from_rows_validation() {
        assert!(AbsorbingChain::from_rows(vec![vec![(0, 0.5)]], vec![None]).is_err());
        // state 1 loops forever
        let rows = vec![vec![(0, 1.0)], vec![(1, 1.0)]];
        assert!(AbsorbingChain::from_rows(rows, vec![Some(0), None]).is_err());
    }

    #[test]
    fn birth_death_ruin() {
        // symmetric walk on 0..=4, outcome 1 = hit 4
        let down = [0.0, 0.5, 0.5, 0.5, 0.0];
        let chain = AbsorbingChain::birth_death(&down, &down).unwrap();
        let sol = chain.solve(Backend::Auto).unwrap();
        for k in 0..=4 {
            assert!((sol.absorption[k][1] - k as f64 / 4.0).abs() < 1e-14);
            assert!((sol.times[k] - (k * (4 - k)) as f64).abs() < 1e-12);
        }
    }
}
