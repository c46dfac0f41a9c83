//! Simple connected graphs and the families the consensus experiments run on.
//!
//! Generated families place the clique on the lowest vertex indices, so that
//! vertex `0` is always a clique vertex and pendant structure follows.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};

/// An immutable simple connected graph on vertices `0..n`.
///
/// Edges are stored canonically as `(u, v)` with `u < v`, sorted
/// lexicographically. Edge indices are stable and are what the process
/// samples uniformly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Validates and builds a graph. Edge orientation and order are irrelevant.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return invalid("graph must have at least one vertex");
        }
        let mut seen = HashSet::new();
        let mut canon = Vec::new();
        for (u, v) in edges {
            check_edge(n, u, v, &mut seen).map_err(Error::InvalidParameter)?;
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &canon {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let graph = Graph {
            n,
            edges: canon,
            adjacency,
        };
        if !graph.is_connected() {
            return invalid("graph is not connected");
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// e(G).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    /// Vertices of degree one.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.degree(v) == 1).collect()
    }

    /// Common degree if the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (0..self.n).all(|v| self.degree(v) == d).then_some(d)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }

    fn is_connected(&self) -> bool {
        let mut visited = vec![false; self.n];
        let mut stack = vec![0];
        visited[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &self.adjacency[u] {
                if !visited[w] {
                    visited[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

fn check_edge(
    n: usize,
    u: usize,
    v: usize,
    seen: &mut HashSet<(usize, usize)>,
) -> std::result::Result<(), String> {
    if u >= n || v >= n {
        return Err(format!("edge ({u}, {v}) references a vertex outside 0..{n}"));
    }
    if u == v {
        return Err(format!("self-loop at vertex {u}"));
    }
    if !seen.insert((u.min(v), u.max(v))) {
        return Err(format!("duplicate edge ({u}, {v})"));
    }
    Ok(())
}

fn clique_edges(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..k).flat_map(move |u| (u + 1..k).map(move |v| (u, v)))
}

/// K_n.
pub fn make_complete(n: usize) -> Result<Graph> {
    if n == 0 {
        return invalid("complete graph needs n >= 1");
    }
    Graph::new(n, clique_edges(n))
}

/// P_n, vertices in order along the path.
pub fn make_path(n: usize) -> Result<Graph> {
    if n == 0 {
        return invalid("path needs n >= 1");
    }
    Graph::new(n, (1..n).map(|v| (v - 1, v)))
}

/// C_n.
pub fn make_cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return invalid(format!("cycle needs n >= 3, got {n}"));
    }
    Graph::new(n, (0..n).map(|v| (v, (v + 1) % n)))
}

/// Star with centre 0 and `n - 1` leaves.
pub fn make_star(n: usize) -> Result<Graph> {
    if n == 0 {
        return invalid("star needs n >= 1");
    }
    Graph::new(n, (1..n).map(|v| (0, v)))
}

fn check_clique_with_pendants(n: usize, r: usize, family: &str) -> Result<usize> {
    if r == 0 || n < r + 2 {
        return invalid(format!(
            "{family} needs 1 <= r <= n - 2, got n = {n}, r = {r}"
        ));
    }
    Ok(n - r)
}

/// Spider: a clique on `n - r` vertices plus `r` pendant edges. Pendant
/// vertex `n - r + j` hangs off clique vertex `attachment[j]`.
pub fn make_spider(n: usize, r: usize, attachment: &[usize]) -> Result<Graph> {
    if attachment.len() != r {
        return invalid(format!(
            "spider needs {r} attachment points, got {}",
            attachment.len()
        ));
    }
    if n < r + 1 {
        return invalid(format!("spider needs r < n, got n = {n}, r = {r}"));
    }
    let clique = n - r;
    if r > 0 && clique < 2 {
        return invalid("spider clique must have at least 2 vertices");
    }
    if let Some(&bad) = attachment.iter().find(|&&a| a >= clique) {
        return invalid(format!(
            "attachment vertex {bad} is outside the clique 0..{clique}"
        ));
    }
    let pendants = attachment
        .iter()
        .enumerate()
        .map(|(j, &a)| (a, clique + j));
    Graph::new(n, clique_edges(clique).chain(pendants))
}

/// Sundew Sd_{n,r}: pendants attached round-robin over the clique vertices.
pub fn make_sundew(n: usize, r: usize) -> Result<Graph> {
    let clique = check_clique_with_pendants(n, r, "sundew")?;
    let attachment: Vec<usize> = (0..r).map(|j| j % clique).collect();
    make_spider(n, r, &attachment)
}

/// Lollipop Lp_{n,r}: a path of `r` edges hanging off clique vertex 0.
pub fn make_lollipop(n: usize, r: usize) -> Result<Graph> {
    let clique = check_clique_with_pendants(n, r, "lollipop")?;
    let path = (0..r).map(|j| {
        let prev = if j == 0 { 0 } else { clique + j - 1 };
        (prev, clique + j)
    });
    Graph::new(n, clique_edges(clique).chain(path))
}

/// Shape of a jellyfish graph after rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JellyfishLayout {
    pub clique: usize,
    pub paths: usize,
    pub path_length: usize,
}

/// Integer layout for J_n: path length `round(2 log2 n)`, path count
/// `round(n / log2(n)^2)` reduced until the clique keeps at least two vertices
/// and every path has its own clique vertex.
pub fn jellyfish_layout(n: usize) -> Result<JellyfishLayout> {
    if n < 4 {
        return invalid(format!("jellyfish needs n >= 4, got {n}"));
    }
    let log2n = (n as f64).log2();
    let path_length = (2.0 * log2n).round() as usize;
    let mut paths = (n as f64 / (log2n * log2n)).round() as usize;
    while paths > 0 && (paths * path_length + 2 > n || paths > n - paths * path_length) {
        paths -= 1;
    }
    if paths == 0 {
        return invalid(format!("jellyfish with n = {n} has no room for a pendant path"));
    }
    Ok(JellyfishLayout {
        clique: n - paths * path_length,
        paths,
        path_length,
    })
}

/// Jellyfish J_n: a clique with several pendant paths, one per clique vertex
/// `0..paths`.
pub fn make_jellyfish(n: usize) -> Result<Graph> {
    let layout = jellyfish_layout(n)?;
    let mut edges: Vec<(usize, usize)> = clique_edges(layout.clique).collect();
    let mut next = layout.clique;
    for root in 0..layout.paths {
        let mut prev = root;
        for _ in 0..layout.path_length {
            edges.push((prev, next));
            prev = next;
            next += 1;
        }
    }
    debug_assert_eq!(next, n);
    Graph::new(n, edges)
}

/// K_{a,b}; the first `a` vertices form one side.
pub fn make_complete_bipartite(a: usize, b: usize) -> Result<Graph> {
    if a == 0 || b == 0 {
        return invalid("complete bipartite graph needs both sides non-empty");
    }
    Graph::new(a + b, (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v))))
}

/// Circular ladder C_k x K_2 on `2k` vertices.
pub fn make_prism(k: usize) -> Result<Graph> {
    if k < 3 {
        return invalid(format!("prism needs k >= 3, got {k}"));
    }
    let rims = (0..k).flat_map(|i| [(i, (i + 1) % k), (k + i, k + (i + 1) % k)]);
    let spokes = (0..k).map(|i| (i, k + i));
    Graph::new(2 * k, rims.chain(spokes))
}

/// K_{2k} minus a perfect matching.
pub fn make_cocktail_party(k: usize) -> Result<Graph> {
    if k < 2 {
        return invalid(format!("cocktail party graph needs k >= 2, got {k}"));
    }
    let n = 2 * k;
    Graph::new(n, clique_edges(n).filter(|&(u, v)| v != u + k))
}

/// Circulant graph: `v ~ v ± s (mod n)` for each step `s`.
pub fn make_circulant(n: usize, steps: &[usize]) -> Result<Graph> {
    let mut set = HashSet::new();
    for &s in steps {
        if s == 0 || s >= n {
            return invalid(format!("circulant step {s} out of range for n = {n}"));
        }
        for v in 0..n {
            let w = (v + s) % n;
            set.insert((v.min(w), v.max(w)));
        }
    }
    Graph::new(n, set)
}

/// d-dimensional hypercube.
pub fn make_hypercube(d: u32) -> Result<Graph> {
    let n = 1usize << d;
    let edges = (0..n).flat_map(|v| {
        (0..d)
            .map(move |b| (v, v ^ (1 << b)))
            .filter(|&(u, w)| u < w)
    });
    Graph::new(n, edges)
}

/// Parses the edge-list text format: a vertex count line followed by one
/// `u v` pair per line. Blank lines and lines starting with `#` are skipped.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let number = |tok: &str| {
            tok.parse::<usize>()
                .map_err(|_| parse_err(format!("bad token {tok:?}")))
        };
        match n {
            None => {
                if tokens.len() != 1 {
                    return Err(parse_err("expected a single vertex count".into()));
                }
                let count = number(tokens[0])?;
                if count == 0 {
                    return Err(parse_err("vertex count must be positive".into()));
                }
                n = Some(count);
            }
            Some(count) => {
                if tokens.len() != 2 {
                    return Err(parse_err(format!(
                        "expected \"u v\", found {} tokens",
                        tokens.len()
                    )));
                }
                let (u, v) = (number(tokens[0])?, number(tokens[1])?);
                check_edge(count, u, v, &mut seen).map_err(parse_err)?;
                edges.push((u, v));
            }
        }
    }
    let n = n.ok_or(Error::Parse {
        line: last_line.max(1),
        message: "missing vertex count".into(),
    })?;
    Graph::new(n, edges).map_err(|e| Error::Parse {
        line: last_line,
        message: match e {
            Error::InvalidParameter(m) => m,
            other => other.to_string(),
        },
    })
}

/// Canonical edge-list text: vertex count, then sorted `u v` pairs with `u < v`.
pub fn write_graph(graph: &Graph) -> String {
    let mut out = format!("{}\n", graph.n);
    for &(u, v) in &graph.edges {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}
