//! Reference computations shared by the integration tests. Nothing here
//! calls into the library's solvers.
#![allow(dead_code)]

use std::collections::HashMap;

/// Winner law and expected consensus time obtained by pushing the state
/// distribution forward one step at a time until the transient mass is
/// negligible. States are plain strategy vectors.
pub fn forward_iteration(
    n: usize,
    edges: &[(usize, usize)],
    m: u32,
    p: f64,
    init: &[(Vec<u32>, f64)],
) -> (Vec<f64>, f64) {
    let mut winners = vec![0.0; m as usize];
    let mut current: HashMap<Vec<u32>, f64> = HashMap::new();
    for (s, w) in init {
        assert_eq!(s.len(), n);
        *current.entry(s.clone()).or_default() += w;
    }
    let e = edges.len() as f64;
    let mut expected = 0.0;
    let mut iterations = 0u64;
    loop {
        current.retain(|s, w| {
            if s.iter().all(|&x| x == s[0]) {
                winners[s[0] as usize - 1] += *w;
                false
            } else {
                true
            }
        });
        let mass: f64 = current.values().sum();
        if mass < 1e-17 {
            break;
        }
        expected += mass;
        iterations += 1;
        assert!(iterations < 10_000_000, "forward iteration did not converge");
        let mut next: HashMap<Vec<u32>, f64> = HashMap::with_capacity(current.len());
        for (s, &w) in &current {
            for &(u, v) in edges {
                let (a, b) = (s[u], s[v]);
                if a == b {
                    *next.entry(s.clone()).or_default() += w / e;
                    continue;
                }
                for (value, prob) in [(a.max(b), p), (a.min(b), 1.0 - p)] {
                    if prob == 0.0 {
                        continue;
                    }
                    let mut t = s.clone();
                    t[u] = value;
                    t[v] = value;
                    *next.entry(t).or_default() += w * prob / e;
                }
            }
        }
        current = next;
    }
    (winners, expected)
}

/// Every strategy vector in `[m]^n`, each with weight `m^-n`.
pub fn uniform_init(n: usize, m: u32) -> Vec<(Vec<u32>, f64)> {
    let total = (m as usize).pow(n as u32);
    let w = 1.0 / total as f64;
    (0..total)
        .map(|mut idx| {
            let mut s = vec![0u32; n];
            for slot in s.iter_mut().rev() {
                *slot = (idx % m as usize) as u32 + 1;
                idx /= m as usize;
            }
            (s, w)
        })
        .collect()
}

/// Uniform over vectors with at least one entry equal to 1.
pub fn nonempty_init(n: usize, m: u32) -> Vec<(Vec<u32>, f64)> {
    let states: Vec<Vec<u32>> = uniform_init(n, m)
        .into_iter()
        .map(|(s, _)| s)
        .filter(|s| s.contains(&1))
        .collect();
    let w = 1.0 / states.len() as f64;
    states.into_iter().map(|s| (s, w)).collect()
}

/// Constant-delay expected duration from `k`:
/// `(1/(1-r)) (1+l)/(1-l) (n (1-l^k)/(1-l^n) - k)`.
pub fn constant_delay_time(n: usize, r: f64, lambda: f64, k: usize) -> f64 {
    if lambda == 0.0 {
        return (n - k) as f64 / (1.0 - r);
    }
    let a = 1.0 - lambda.powi(k as i32);
    let b = 1.0 - lambda.powi(n as i32);
    (1.0 / (1.0 - r)) * ((1.0 + lambda) / (1.0 - lambda)) * (n as f64 * a / b - k as f64)
}

/// Classical walk: `E_k + E_{n-k} = n (1+l)/(1-l) (1-l^k)(1-l^{n-k})/(1-l^n)`.
pub fn classical_symmetric_sum(n: usize, lambda: f64, k: usize) -> f64 {
    if lambda == 1.0 {
        return 2.0 * (k * (n - k)) as f64;
    }
    let pw = |j: usize| 1.0 - lambda.powi(j as i32);
    n as f64 * (1.0 + lambda) / (1.0 - lambda) * pw(k) * pw(n - k) / pw(n)
}

pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// Birth-death chain on `0..=n` with the given down/up probabilities per
/// interior state; returns expected absorption times by Gaussian
/// elimination on the dense system.
pub fn birth_death_times(down: &[f64], up: &[f64]) -> Vec<f64> {
    let m = down.len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        a[i][i] = down[i] + up[i];
        if i > 0 {
            a[i][i - 1] = -down[i];
        }
        if i + 1 < m {
            a[i][i + 1] = -up[i];
        }
        a[i][m] = 1.0;
    }
    for c in 0..m {
        let piv = (c..m)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, piv);
        for r in 0..m {
            if r != c && a[r][c] != 0.0 {
                let f = a[r][c] / a[c][c];
                for j in c..=m {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    let mut out = vec![0.0; m + 2];
    for i in 0..m {
        out[i + 1] = a[i][m] / a[i][i];
    }
    out
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300) || a == b
}
