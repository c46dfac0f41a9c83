//! Coupon-collector variants: simultaneous arrivals, geometric targets built
//! from a shared Bernoulli sequence, and a collector with one slow type.

use std::collections::HashMap;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::error::{invalid, Result};

/// `H_n`.
pub fn harmonic(n: u64) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

/// Harmonic numbers with piecewise-linear interpolation `h(x)`.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    values: Vec<f64>,
}

impl HarmonicTable {
    /// Caches `H_0..=H_max`.
    pub fn new(max: usize) -> Self {
        let mut values = Vec::with_capacity(max + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for k in 1..=max {
            acc += 1.0 / k as f64;
            values.push(acc);
        }
        HarmonicTable { values }
    }

    pub fn max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: usize) -> f64 {
        match self.values.get(n) {
            Some(&v) => v,
            None => harmonic(n as u64),
        }
    }

    /// `h(x)`: equals `H_n` at integers, linear in between.
    pub fn h(&self, x: f64) -> f64 {
        assert!(x >= 0.0, "h is defined on x >= 0");
        let lo = x.floor() as usize;
        let frac = x - lo as f64;
        if frac == 0.0 {
            return self.get(lo);
        }
        let (a, b) = (self.get(lo), self.get(lo + 1));
        a + frac * (b - a)
    }
}

/// Interpolated harmonic number `h(x)`.
pub fn harmonic_interp(x: f64) -> f64 {
    HarmonicTable::new(x.ceil() as usize).h(x)
}

/// `N H_n / q`: bound on the expected completion time with geometric targets.
pub fn collector_bound(n: usize, big_n: f64, q: f64) -> f64 {
    big_n * harmonic(n as u64) / q
}

/// A joint law for which coupon types arrive in one step.
pub trait ArrivalCoupling: Send + Sync {
    fn types(&self) -> usize;
    /// Exact probability that type `i` arrives in a given step.
    fn marginal(&self, i: usize) -> f64;
    /// Appends the types arriving this step to `out` (cleared by the caller).
    fn sample(&self, rng: &mut dyn RngCore, out: &mut Vec<usize>);
    fn name(&self) -> String;
}

/// Each type arrives independently with probability `1/N`.
#[derive(Debug, Clone)]
pub struct IndependentArrivals {
    pub n: usize,
    pub big_n: f64,
}

impl ArrivalCoupling for IndependentArrivals {
    fn types(&self) -> usize {
        self.n
    }
    fn marginal(&self, _: usize) -> f64 {
        1.0 / self.big_n
    }
    fn sample(&self, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        let q = 1.0 / self.big_n;
        out.extend((0..self.n).filter(|_| rng.gen::<f64>() < q));
    }
    fn name(&self) -> String {
        "independent".into()
    }
}

/// At most one coupon per step: with probability `n/N` a uniformly chosen type.
#[derive(Debug, Clone)]
pub struct SingleArrival {
    pub n: usize,
    pub big_n: f64,
}

impl ArrivalCoupling for SingleArrival {
    fn types(&self) -> usize {
        self.n
    }
    fn marginal(&self, _: usize) -> f64 {
        if self.n as f64 <= self.big_n {
            1.0 / self.big_n
        } else {
            // probabilities would exceed one; report the law that can actually be realised
            1.0 / self.n as f64
        }
    }
    fn sample(&self, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        let u = rng.gen::<f64>() * self.big_n;
        if u < self.n as f64 {
            out.push(u as usize);
        }
    }
    fn name(&self) -> String {
        "single".into()
    }
}

/// Every type at once with probability `1/N`, otherwise nothing.
#[derive(Debug, Clone)]
pub struct BundledArrivals {
    pub n: usize,
    pub big_n: f64,
}

impl ArrivalCoupling for BundledArrivals {
    fn types(&self) -> usize {
        self.n
    }
    fn marginal(&self, _: usize) -> f64 {
        1.0 / self.big_n
    }
    fn sample(&self, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        if rng.gen::<f64>() * self.big_n < 1.0 {
            out.extend(0..self.n);
        }
    }
    fn name(&self) -> String {
        "bundled".into()
    }
}

/// Explicit joint law: outcome `i` (a set of types) occurs with probability
/// `outcomes[i].0`; the leftover mass delivers nothing.
#[derive(Debug, Clone)]
pub struct TableArrivals {
    n: usize,
    outcomes: Vec<(f64, Vec<usize>)>,
}

impl TableArrivals {
    pub fn new(n: usize, outcomes: Vec<(f64, Vec<usize>)>) -> Result<Self> {
        let total: f64 = outcomes.iter().map(|o| o.0).sum();
        if outcomes.iter().any(|o| o.0 < 0.0) || total > 1.0 + 1e-12 {
            return invalid("outcome probabilities must be non-negative and sum to at most 1");
        }
        for (_, set) in &outcomes {
            let mut sorted = set.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != set.len() || sorted.last().is_some_and(|&t| t >= n) {
                return invalid(format!("outcome {set:?} is not a set of types in 0..{n}"));
            }
        }
        Ok(TableArrivals { n, outcomes })
    }
}

impl ArrivalCoupling for TableArrivals {
    fn types(&self) -> usize {
        self.n
    }
    fn marginal(&self, i: usize) -> f64 {
        self.outcomes
            .iter()
            .filter(|(_, set)| set.contains(&i))
            .map(|o| o.0)
            .sum()
    }
    fn sample(&self, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        let mut u = rng.gen::<f64>();
        for (w, set) in &self.outcomes {
            if u < *w {
                out.extend_from_slice(set);
                return;
            }
            u -= w;
        }
    }
    fn name(&self) -> String {
        "table".into()
    }
}

/// Built-in coupling by name: `independent`, `single` or `bundled`.
pub fn builtin_coupling(name: &str, n: usize, big_n: f64) -> Result<Box<dyn ArrivalCoupling>> {
    Ok(match name {
        "independent" => Box::new(IndependentArrivals { n, big_n }),
        "single" => Box::new(SingleArrival { n, big_n }),
        "bundled" => Box::new(BundledArrivals { n, big_n }),
        other => return invalid(format!("unknown coupling {other:?}")),
    })
}

/// A coupling whose per-type marginals have been checked to equal `1/N`.
pub struct VerifiedCoupling<C: ?Sized> {
    big_n: f64,
    inner: Box<C>,
}

impl<C: ArrivalCoupling + ?Sized> VerifiedCoupling<C> {
    pub fn new(inner: Box<C>, big_n: f64) -> Result<Self> {
        let n = inner.types();
        if !(big_n >= n as f64) || !big_n.is_finite() {
            return invalid(format!("need N >= n, got N = {big_n}, n = {n}"));
        }
        let target = 1.0 / big_n;
        for i in 0..n {
            let m = inner.marginal(i);
            if (m - target).abs() > 1e-12 {
                return invalid(format!(
                    "coupling {} gives type {i} probability {m}, expected {target}",
                    inner.name()
                ));
            }
        }
        Ok(VerifiedCoupling { big_n, inner })
    }

    pub fn types(&self) -> usize {
        self.inner.types()
    }

    pub fn big_n(&self) -> f64 {
        self.big_n
    }

    pub fn name(&self) -> String {
        self.inner.name()
    }

    pub fn sample(&self, rng: &mut dyn RngCore, out: &mut Vec<usize>) {
        self.inner.sample(rng, out)
    }
}

/// Steps until every type has arrived at least once.
pub fn simulate_multipass<C, R>(coupling: &VerifiedCoupling<C>, rng: &mut R) -> u64
where
    C: ArrivalCoupling + ?Sized,
    R: RngCore,
{
    let n = coupling.types();
    let mut have = vec![false; n];
    let mut missing = n;
    let mut t = 0u64;
    let mut buf = Vec::with_capacity(n);
    while missing > 0 {
        t += 1;
        buf.clear();
        coupling.sample(rng, &mut buf);
        for &i in &buf {
            if !have[i] {
                have[i] = true;
                missing -= 1;
            }
        }
    }
    t
}

/// Which Bernoulli variable type `j` consults for its `k`-th coupon.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexMap {
    /// Private sequences: targets are independent.
    Disjoint,
    /// One sequence for everyone: all targets equal.
    Shared,
    /// `groups[j]` names the sequence type `j` reads; types in a group share targets.
    Grouped(Vec<usize>),
    /// Explicit prefixes, continued with private fresh indices.
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetModel {
    /// One coupon of each type.
    Single,
    /// Geometric(q) targets from a shared Bernoulli(q) sequence.
    Geometric { q: f64, index_map: IndexMap },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouponSpec {
    n: usize,
    targets: TargetModel,
    /// Number of distinct sequences for `Grouped`, fresh-index base for `Explicit`.
    stride: usize,
}

impl CouponSpec {
    pub fn new(n: usize, targets: TargetModel) -> Result<Self> {
        let mut stride = 0;
        if let TargetModel::Geometric { q, index_map } = &targets {
            if !(*q > 0.0 && *q <= 1.0) {
                return invalid(format!("q = {q} outside (0, 1]"));
            }
            match index_map {
                IndexMap::Grouped(groups) => {
                    if groups.len() != n {
                        return invalid("need one group label per type");
                    }
                    stride = groups.iter().max().map_or(0, |g| g + 1);
                }
                IndexMap::Explicit(prefixes) => {
                    if prefixes.len() != n {
                        return invalid("need one index prefix per type");
                    }
                    for (j, prefix) in prefixes.iter().enumerate() {
                        let mut seen = prefix.clone();
                        seen.sort_unstable();
                        seen.dedup();
                        if seen.len() != prefix.len() {
                            return invalid(format!("index sequence of type {j} repeats an index"));
                        }
                    }
                    stride = prefixes.iter().flatten().max().map_or(0, |m| m + 1);
                }
                IndexMap::Disjoint | IndexMap::Shared => {}
            }
        }
        Ok(CouponSpec { n, targets, stride })
    }

    pub fn independent(n: usize, q: f64) -> Result<Self> {
        Self::new(
            n,
            TargetModel::Geometric {
                q,
                index_map: IndexMap::Disjoint,
            },
        )
    }

    pub fn types(&self) -> usize {
        self.n
    }

    pub fn targets(&self) -> &TargetModel {
        &self.targets
    }

    /// `q`, or 1 for single targets.
    pub fn q(&self) -> f64 {
        match self.targets {
            TargetModel::Single => 1.0,
            TargetModel::Geometric { q, .. } => q,
        }
    }

    /// Bernoulli index consulted for the `k`-th coupon (`k >= 1`) of type `j`.
    pub fn index(&self, j: usize, k: usize) -> usize {
        let n = self.n;
        match &self.targets {
            TargetModel::Single => (k - 1) * n + j,
            TargetModel::Geometric { index_map, .. } => match index_map {
                IndexMap::Disjoint => (k - 1) * n + j,
                IndexMap::Shared => k - 1,
                IndexMap::Grouped(groups) => (k - 1) * self.stride + groups[j],
                IndexMap::Explicit(prefixes) => match prefixes[j].get(k - 1) {
                    Some(&i) => i,
                    None => self.stride + (k - 1) * n + j,
                },
            },
        }
    }
}

/// Lazily revealed Bernoulli sequence.
struct Revealed {
    q: f64,
    values: HashMap<usize, bool>,
}

impl Revealed {
    fn new(q: f64) -> Self {
        Revealed {
            q,
            values: HashMap::new(),
        }
    }

    fn get<R: RngCore + ?Sized>(&mut self, i: usize, rng: &mut R) -> bool {
        let q = self.q;
        *self.values.entry(i).or_insert_with(|| q >= 1.0 || rng.gen::<f64>() < q)
    }
}

/// Draws the targets `Y_j` directly, revealing each type's sequence until
/// its first success.
pub fn realize_targets<R: RngCore>(spec: &CouponSpec, rng: &mut R) -> Vec<u64> {
    let mut xs = Revealed::new(spec.q());
    (0..spec.n)
        .map(|j| {
            let mut k = 1;
            while !xs.get(spec.index(j, k), rng) {
                k += 1;
            }
            k as u64
        })
        .collect()
}

/// Steps until type `j` has received `Y_j` coupons for every `j`. Each
/// received coupon of type `j` reveals the next variable of `j`'s sequence;
/// a success completes the type.
pub fn simulate_connected_geometrics<C, R>(
    spec: &CouponSpec,
    coupling: &VerifiedCoupling<C>,
    rng: &mut R,
) -> Result<u64>
where
    C: ArrivalCoupling + ?Sized,
    R: RngCore,
{
    let n = spec.n;
    if coupling.types() != n {
        return invalid(format!(
            "coupling covers {} types, spec has {n}",
            coupling.types()
        ));
    }
    let mut xs = Revealed::new(spec.q());
    let mut received = vec![0usize; n];
    let mut done = vec![false; n];
    let mut missing = n;
    let mut t = 0u64;
    let mut buf = Vec::with_capacity(n);
    while missing > 0 {
        t += 1;
        buf.clear();
        coupling.sample(rng, &mut buf);
        for &j in &buf {
            if done[j] {
                continue;
            }
            received[j] += 1;
            if xs.get(spec.index(j, received[j]), rng) {
                done[j] = true;
                missing -= 1;
            }
        }
    }
    Ok(t)
}

/// Two collectors fed by the same single-arrival stream: every type is kept
/// with probability `q`, except type 0 in the second one, kept with `q_slow`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowTypeSpec {
    pub n: usize,
    pub big_n: f64,
    pub q: f64,
    pub q_slow: f64,
}

impl SlowTypeSpec {
    pub fn new(n: usize, big_n: f64, q: f64, q_slow: f64) -> Result<Self> {
        if n == 0 || !(big_n >= n as f64) {
            return invalid("need n >= 1 and N >= n");
        }
        if !(q_slow > 0.0 && q_slow <= q && q <= 1.0) {
            return invalid(format!("need 0 < q' <= q <= 1, got q = {q}, q' = {q_slow}"));
        }
        Ok(SlowTypeSpec { n, big_n, q, q_slow })
    }

    /// Probability that the slow type is the last one kept in the second collector.
    pub fn slow_last_probability(&self) -> f64 {
        (1..self.n)
            .map(|k| k as f64 * self.q / (k as f64 * self.q + self.q_slow))
            .product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlowTypeOutcome {
    /// Completion time with every type kept at rate `q`.
    pub uniform_time: u64,
    /// Completion time with the slow type.
    pub slow_time: u64,
    /// Whether the slow type was the last one the second collector kept.
    pub slow_type_last: bool,
}

/// Runs the coupled pair. A coupon kept by the slow collector is always kept
/// by the uniform one.
pub fn simulate_slow_type<R: RngCore>(spec: &SlowTypeSpec, rng: &mut R) -> SlowTypeOutcome {
    let n = spec.n;
    let mut kept = [vec![false; n], vec![false; n]];
    let mut missing = [n, n];
    let mut finish = [0u64; 2];
    let mut last_type = 0;
    let mut t = 0u64;
    while missing[0] > 0 || missing[1] > 0 {
        t += 1;
        let u = rng.gen::<f64>() * spec.big_n;
        if u >= n as f64 {
            continue;
        }
        let j = u as usize;
        let v = rng.gen::<f64>();
        let keep = [v < spec.q, v < if j == 0 { spec.q_slow } else { spec.q }];
        for c in 0..2 {
            if keep[c] && !kept[c][j] {
                kept[c][j] = true;
                missing[c] -= 1;
                if missing[c] == 0 {
                    finish[c] = t;
                    if c == 1 {
                        last_type = j;
                    }
                }
            }
        }
    }
    SlowTypeOutcome {
        uniform_time: finish[0],
        slow_time: finish[1],
        slow_type_last: last_type == 0,
    }
}
