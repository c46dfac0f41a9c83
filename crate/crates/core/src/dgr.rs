//! Gambler's ruin with delays.
//!
//! A birth-death walk on `0..=n`, absorbing at both ends. From interior state
//! `k` it moves down with probability `p * gamma_k`, up with probability
//! `(1 - p) * gamma_k` and stays put otherwise. On the complete graph with
//! two strategies, `k` is the number of vertices playing the lower strategy
//! and `gamma_k` the chance of sampling a significant edge.
//!
//! Expected absorption times `E_k` come from a closed form in
//! `lambda = p / (1 - p)` and, independently, from a direct tridiagonal solve
//! of `gamma_k E_k = 1 + gamma_k (p E_{k-1} + (1 - p) E_{k+1})`.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Within this distance of `lambda = 1` the closed form is replaced by the solver.
pub const LAMBDA_SWITCH: f64 = 1e-3;

/// Default tolerance for monotonicity scans (relative to the value).
pub const SCAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DgrParams {
    n: usize,
    p: f64,
    /// `gammas[k - 1]` is the move probability at interior state `k`.
    gammas: Vec<f64>,
}

impl DgrParams {
    pub fn new(n: usize, p: f64, gammas: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return invalid("walk needs n >= 1");
        }
        if !(0.0..1.0).contains(&p) {
            return invalid(format!("p = {p} must lie in [0, 1)"));
        }
        if gammas.len() != n - 1 {
            return invalid(format!(
                "expected {} delay parameters, got {}",
                n - 1,
                gammas.len()
            ));
        }
        if let Some(g) = gammas.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
            return invalid(format!("delay parameter {g} outside (0, 1]"));
        }
        Ok(DgrParams { n, p, gammas })
    }

    /// Classical gambler's ruin, no delays.
    pub fn classical(n: usize, p: f64) -> Result<Self> {
        Self::new(n, p, vec![1.0; n.saturating_sub(1)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `gamma_k` for `1 <= k <= n - 1`; zero at the absorbing ends.
    pub fn gamma(&self, k: usize) -> f64 {
        if k == 0 || k >= self.n {
            0.0
        } else {
            self.gammas[k - 1]
        }
    }

    pub fn lambda(&self) -> f64 {
        self.p / (1.0 - self.p)
    }

    /// The mirrored walk `k -> n - k`: bias flipped, delays reversed.
    fn mirrored(&self) -> Result<Self> {
        let mut gammas = self.gammas.clone();
        gammas.reverse();
        Self::new(self.n, 1.0 - self.p, gammas)
    }

    fn check_state(&self, k: usize) -> Result<()> {
        if k > self.n {
            return invalid(format!("state {k} outside 0..={}", self.n));
        }
        Ok(())
    }
}

/// Neumaier-compensated sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `1 - lambda^j` for `0 <= lambda < 1`, without cancellation near 1.
fn one_minus_pow(ln_lambda: f64, j: usize) -> f64 {
    if j == 0 {
        0.0
    } else if ln_lambda == f64::NEG_INFINITY {
        1.0
    } else {
        -(j as f64 * ln_lambda).exp_m1()
    }
}

/// Probability that the walk started at `k` is absorbed at `n`. Independent
/// of the delays.
pub fn ruin_probability(params: &DgrParams, k: usize) -> Result<f64> {
    params.check_state(k)?;
    let n = params.n;
    if k == 0 {
        return Ok(0.0);
    }
    if k == n {
        return Ok(1.0);
    }
    let lambda = params.lambda();
    if lambda == 1.0 {
        return Ok(k as f64 / n as f64);
    }
    if lambda < 1.0 {
        let l = lambda.ln();
        Ok(one_minus_pow(l, k) / one_minus_pow(l, n))
    } else {
        // (1 - lambda^k) / (1 - lambda^n) rewritten in mu = 1 / lambda < 1
        let l = -lambda.ln();
        Ok(((n - k) as f64 * l).exp() * one_minus_pow(l, k) / one_minus_pow(l, n))
    }
}

/// Closed-form `E_k` for every `k in 0..=n`, assuming `lambda < 1`.
fn closed_form_all(params: &DgrParams) -> Vec<f64> {
    let n = params.n;
    let lambda = params.lambda();
    debug_assert!(lambda < 1.0);
    let l = lambda.ln();
    let prefactor = (1.0 + lambda) / (1.0 - lambda);
    let inv: Vec<f64> = params.gammas.iter().map(|g| 1.0 / g).collect();

    let mut s_n = CompensatedSum::default();
    for i in 1..n {
        s_n.add(inv[i - 1] * one_minus_pow(l, n - i));
    }
    let s_n = s_n.value();
    let denom = one_minus_pow(l, n);

    (0..=n)
        .map(|k| {
            if k == 0 || k == n {
                return 0.0;
            }
            let mut inner = CompensatedSum::default();
            inner.add(s_n * one_minus_pow(l, k) / denom);
            for i in 1..k {
                inner.add(-inv[i - 1] * one_minus_pow(l, k - i));
            }
            prefactor * inner.value()
        })
        .collect()
}

/// Closed-form `E_k`. Near `lambda = 1` this defers to the tridiagonal solve;
/// for `lambda > 1` it evaluates the mirrored walk.
pub fn expected_time_closed(params: &DgrParams, k: usize) -> Result<f64> {
    params.check_state(k)?;
    Ok(expected_times(params)?[k])
}

/// All `E_0..=E_n`, by closed form away from `lambda = 1` and by solve near it.
pub fn expected_times(params: &DgrParams) -> Result<Vec<f64>> {
    let lambda = params.lambda();
    if (lambda - 1.0).abs() <= LAMBDA_SWITCH {
        return Ok(expected_time_solve(params));
    }
    if lambda > 1.0 {
        let mut times = closed_form_all(&params.mirrored()?);
        times.reverse();
        return Ok(times);
    }
    Ok(closed_form_all(params))
}

/// Closed-form `E_0..=E_n` with no switch to the solver. Requires `lambda != 1`;
/// exposed so the two routes can be compared right up to the singularity.
pub fn expected_times_closed_unswitched(params: &DgrParams) -> Result<Vec<f64>> {
    let lambda = params.lambda();
    if lambda == 1.0 {
        return invalid("closed form is singular at lambda = 1");
    }
    if lambda > 1.0 {
        let mut times = closed_form_all(&params.mirrored()?);
        times.reverse();
        return Ok(times);
    }
    Ok(closed_form_all(params))
}

/// Solves the recurrence directly with the Thomas algorithm.
///
/// Dividing by `gamma_k` gives the rows
/// `-p E_{k-1} + E_k - (1 - p) E_{k+1} = 1 / gamma_k`, which are weakly
/// diagonally dominant, so no pivoting is needed.
pub fn expected_time_solve(params: &DgrParams) -> Vec<f64> {
    let n = params.n;
    let mut times = vec![0.0; n + 1];
    if n < 2 {
        return times;
    }
    let p = params.p;
    let (sub, sup) = (-p, -(1.0 - p));
    let m = n - 1;
    let mut c_prime = vec![0.0; m];
    let mut d_prime = vec![0.0; m];
    for i in 0..m {
        let rhs = 1.0 / params.gammas[i];
        let (denom, d) = if i == 0 {
            (1.0, rhs)
        } else {
            (1.0 - sub * c_prime[i - 1], rhs - sub * d_prime[i - 1])
        };
        c_prime[i] = sup / denom;
        d_prime[i] = d / denom;
    }
    times[m] = d_prime[m - 1];
    for i in (0..m - 1).rev() {
        times[i + 1] = d_prime[i] - c_prime[i] * times[i + 2];
    }
    times
}

/// Largest residual of the recurrence over interior states, scaled by `1 + E_k`.
pub fn recurrence_residual(params: &DgrParams, times: &[f64]) -> f64 {
    let p = params.p;
    (1..params.n)
        .map(|k| {
            let g = params.gamma(k);
            let r = g * times[k] - 1.0 - g * (p * times[k - 1] + (1.0 - p) * times[k + 1]);
            r.abs() / (1.0 + times[k].abs())
        })
        .fold(0.0, f64::max)
}

/// `gamma_k = 2k(n - k) / (n(n - 1))` for `k = 1..n-1`.
pub fn complete_graph_gammas(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return invalid(format!("complete graph delays need n >= 2, got {n}"));
    }
    let denom = (n * (n - 1)) as f64;
    Ok((1..n).map(|k| (2 * k * (n - k)) as f64 / denom).collect())
}

/// Initial condition for the two-strategy process on K_n; `k` counts
/// vertices playing the lower strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompleteInit {
    /// Every vertex independently uniform: `k ~ Bin(n, 1/2)`.
    Binomial,
    /// Binomial conditioned on `k >= 1`.
    Conditioned,
    Fixed(usize),
}

fn binomial_half_weights(n: usize) -> Vec<f64> {
    let mut log_w = -(n as f64) * std::f64::consts::LN_2;
    let mut weights = Vec::with_capacity(n + 1);
    weights.push(log_w.exp());
    for k in 1..=n {
        log_w += ((n - k + 1) as f64 / k as f64).ln();
        weights.push(log_w.exp());
    }
    weights
}

/// Expected consensus time on K_n with two strategies.
pub fn complete_graph_expected_consensus_time(n: usize, p: f64, init: CompleteInit) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("p = {p} outside [0, 1]"));
    }
    let gammas = complete_graph_gammas(n)?;
    // p = 1 is the mirror image of p = 0; gammas are symmetric.
    let (params, mirror) = if p == 1.0 {
        (DgrParams::new(n, 0.0, gammas)?, true)
    } else {
        (DgrParams::new(n, p, gammas)?, false)
    };
    let times = expected_times(&params)?;
    let at = |k: usize| if mirror { times[n - k] } else { times[k] };
    match init {
        CompleteInit::Fixed(k) => {
            params.check_state(k)?;
            Ok(at(k))
        }
        CompleteInit::Binomial | CompleteInit::Conditioned => {
            let weights = binomial_half_weights(n);
            let mut total = CompensatedSum::default();
            for (k, w) in weights.iter().enumerate() {
                total.add(w * at(k));
            }
            let scale = if init == CompleteInit::Conditioned {
                1.0 - weights[0]
            } else {
                1.0
            };
            Ok(total.value() / scale)
        }
    }
}

/// `(1 - lambda)/(1 + lambda) * (1 + lambda^alpha)/(1 - lambda^alpha)`,
/// decreasing on `[0, 1]` for `alpha > 1`.
pub fn symmetric_ratio(lambda: f64, alpha: f64) -> f64 {
    let la = lambda.powf(alpha);
    (1.0 - lambda) / (1.0 + lambda) * (1.0 + la) / (1.0 - la)
}

/// A point where a scanned series drops.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub k: usize,
    pub lambda_from: f64,
    pub lambda_to: f64,
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub n: usize,
    pub lambda_grid: Vec<f64>,
    /// `ks[i]` labels `values[i]`.
    pub ks: Vec<usize>,
    /// `values[i][j]`: series `ks[i]` at `lambda_grid[j]`.
    pub values: Vec<Vec<f64>>,
    pub violations: Vec<Violation>,
    pub tolerance: f64,
}

impl MonotonicityReport {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `p` corresponding to `lambda`.
pub fn p_from_lambda(lambda: f64) -> f64 {
    if lambda == 1.0 {
        0.5
    } else {
        lambda / (1.0 + lambda)
    }
}

/// Evenly spaced `lambda` grid on `[0, 1]`.
pub fn lambda_grid(step: f64) -> Vec<f64> {
    let count = (1.0 / step).round() as usize;
    (0..=count).map(|i| i as f64 / count as f64).collect()
}

fn times_on_grid(n: usize, gammas: &[f64], grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    grid.iter()
        .map(|&lambda| {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return invalid(format!("lambda = {lambda} must be finite and >= 0"));
            }
            expected_times(&DgrParams::new(n, p_from_lambda(lambda), gammas.to_vec())?)
        })
        .collect()
}

fn find_violations(ks: &[usize], values: &[Vec<f64>], grid: &[f64], tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for (series, &k) in values.iter().zip(ks) {
        for j in 1..grid.len() {
            let (a, b) = (series[j - 1], series[j]);
            if b < a - tol * a.abs().max(1.0) {
                out.push(Violation {
                    k,
                    lambda_from: grid[j - 1],
                    lambda_to: grid[j],
                    drop: a - b,
                });
            }
        }
    }
    out
}

/// Scans `E_k + E_{n-k}` for every `0 < k < n` over the grid. Delays must be
/// symmetric (`gamma_i = gamma_{n-i}`).
pub fn symmetric_sum_scan(n: usize, gammas: &[f64], grid: &[f64]) -> Result<MonotonicityReport> {
    if gammas.len() + 1 != n {
        return invalid(format!("expected {} delay parameters", n.saturating_sub(1)));
    }
    for i in 0..gammas.len() {
        let (a, b) = (gammas[i], gammas[gammas.len() - 1 - i]);
        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
            return invalid(format!(
                "delays are not symmetric: gamma_{} = {a} but gamma_{} = {b}",
                i + 1,
                n - 1 - i
            ));
        }
    }
    let per_lambda = times_on_grid(n, gammas, grid)?;
    let ks: Vec<usize> = (1..n).collect();
    let values: Vec<Vec<f64>> = ks
        .iter()
        .map(|&k| per_lambda.iter().map(|t| t[k] + t[n - k]).collect())
        .collect();
    let violations = find_violations(&ks, &values, grid, SCAN_TOLERANCE);
    Ok(MonotonicityReport {
        n,
        lambda_grid: grid.to_vec(),
        ks,
        values,
        violations,
        tolerance: SCAN_TOLERANCE,
    })
}

/// Scans a single `E_k` over the grid. No symmetry is required, and none of
/// these series is monotone in general.
pub fn single_term_scan(n: usize, gammas: &[f64], k: usize, grid: &[f64]) -> Result<MonotonicityReport> {
    if k > n {
        return invalid(format!("state {k} outside 0..={n}"));
    }
    let per_lambda = times_on_grid(n, gammas, grid)?;
    let values = vec![per_lambda.iter().map(|t| t[k]).collect::<Vec<_>>()];
    let violations = find_violations(&[k], &values, grid, SCAN_TOLERANCE);
    Ok(MonotonicityReport {
        n,
        lambda_grid: grid.to_vec(),
        ks: vec![k],
        values,
        violations,
        tolerance: SCAN_TOLERANCE,
    })
}

/// Surviving-strategy law `P(S = l)`, `l = 1..=m`, for `n` vertices with
/// uniform initial strategies. Graph-independent.
///
/// The count of vertices playing `<= l` performs a walk that steps up with
/// probability `1 - p` per significant edge, which gives
/// `P(S <= j) = (b_j^n - b_0^n) / (b_m^n - b_0^n)` with
/// `b_j = m(1 - p) - j(1 - 2p)`.
pub fn survivor_distribution(n: usize, m: u32, p: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("need at least one vertex");
    }
    if m == 0 {
        return invalid("strategy count m must be positive");
    }
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("p = {p} outside [0, 1]"));
    }
    if p == 0.5 {
        return Ok(vec![1.0 / m as f64; m as usize]);
    }
    let mf = m as f64;
    let scale = (mf * (1.0 - p)).max(mf * p);
    let power = |j: u32| {
        let b = (mf * (1.0 - p) - j as f64 * (1.0 - 2.0 * p)) / scale;
        b.powi(n as i32)
    };
    let denom = power(m) - power(0);
    Ok((1..=m).map(|l| (power(l) - power(l - 1)) / denom).collect())
}

/// `P(S = l)` for a single `l`.
pub fn survivor_probability(n: usize, m: u32, p: f64, l: u32) -> Result<f64> {
    if l == 0 || l > m {
        return invalid(format!("strategy {l} outside 1..={m}"));
    }
    Ok(survivor_distribution(n, m, p)?[l as usize - 1])
}
