//! Finite balls of the hexagonal lattice H and of the triangular lattice with
//! a weight-3 loop at every vertex (T*), plus exact weighted closed-walk
//! counting by dynamic programming over (vertex, step).
//!
//! Vertices carry the integer coordinates (x, y, c) of the embedding
//! (√3·x + √3·y/2, 3y/2 + c), c ∈ {0, 1}. The triangular lattice is the c = 0
//! sublattice.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub const LOOP_WEIGHT: u64 = 3;

/// Radius above which ball construction is refused.
pub const MAX_BALL_RADIUS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Hexagonal,
    TriangularStar,
}

pub type Coord = [i64; 3];

impl LatticeKind {
    /// Weighted neighbours of a vertex in the infinite lattice, the loop
    /// included for T*.
    pub fn neighbours(self, v: Coord) -> Vec<(Coord, u64)> {
        let [x, y, c] = v;
        match self {
            LatticeKind::Hexagonal => {
                if c == 0 {
                    vec![([x, y, 1], 1), ([x, y - 1, 1], 1), ([x + 1, y - 1, 1], 1)]
                } else {
                    vec![([x, y, 0], 1), ([x, y + 1, 0], 1), ([x - 1, y + 1, 0], 1)]
                }
            }
            LatticeKind::TriangularStar => vec![
                ([x + 1, y, 0], 1),
                ([x - 1, y, 0], 1),
                ([x, y + 1, 0], 1),
                ([x, y - 1, 0], 1),
                ([x + 1, y - 1, 0], 1),
                ([x - 1, y + 1, 0], 1),
                ([x, y, 0], LOOP_WEIGHT),
            ],
        }
    }
}

/// Planar position of a lattice vertex.
pub fn position(v: Coord) -> (f64, f64) {
    let s3 = 3f64.sqrt();
    let [x, y, c] = v;
    (
        s3 * x as f64 + s3 * y as f64 / 2.0,
        1.5 * y as f64 + c as f64,
    )
}

#[derive(Debug, Clone)]
pub struct LatticeBall {
    pub kind: LatticeKind,
    pub radius: usize,
    pub vertices: Vec<Coord>,
    /// Graph distance of each vertex from the root.
    pub depth: Vec<usize>,
    pub adjacency: Vec<Vec<(usize, u64)>>,
    pub root: usize,
}

/// All vertices within graph distance `radius` of the origin.
pub fn build_ball(kind: LatticeKind, radius: usize) -> Result<LatticeBall> {
    if radius > MAX_BALL_RADIUS {
        return Err(Error::Resource(format!(
            "ball radius {radius} exceeds limit {MAX_BALL_RADIUS}"
        )));
    }
    let origin: Coord = [0, 0, 0];
    let mut index: HashMap<Coord, usize> = HashMap::new();
    let mut vertices = vec![origin];
    let mut depth = vec![0usize];
    index.insert(origin, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        if depth[i] == radius {
            continue;
        }
        for (w, _) in kind.neighbours(vertices[i]) {
            if let Entry::Vacant(slot) = index.entry(w) {
                slot.insert(vertices.len());
                vertices.push(w);
                depth.push(depth[i] + 1);
                queue.push_back(vertices.len() - 1);
            }
        }
    }
    let adjacency = vertices
        .iter()
        .map(|&v| {
            kind.neighbours(v)
                .into_iter()
                .filter_map(|(w, wt)| index.get(&w).map(|&j| (j, wt)))
                .collect()
        })
        .collect();
    Ok(LatticeBall {
        kind,
        radius,
        vertices,
        depth,
        adjacency,
        root: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallExport {
    pub kind: LatticeKind,
    pub radius: usize,
    pub vertices: Vec<Coord>,
    pub edges: Vec<(usize, usize, u64)>,
}

impl LatticeBall {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Undirected edge list with each edge once (i ≤ j); loops appear as (i, i, 3).
    pub fn edges(&self) -> Vec<(usize, usize, u64)> {
        let mut out = Vec::new();
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &(j, w) in nbrs {
                if i <= j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn export(&self) -> BallExport {
        BallExport {
            kind: self.kind,
            radius: self.radius,
            vertices: self.vertices.clone(),
            edges: self.edges(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.export()).expect("ball export serialises")
    }
}

/// One DP step: next[v] = Σ_{(u, w) ~ v} w · cur[u].
fn walk_step(adjacency: &[Vec<(usize, u64)>], cur: &[BigUint]) -> Vec<BigUint> {
    adjacency
        .par_iter()
        .map(|nbrs| {
            let mut acc = BigUint::zero();
            for &(u, w) in nbrs {
                if !cur[u].is_zero() {
                    acc += &cur[u] * w;
                }
            }
            acc
        })
        .collect()
}

/// Weighted closed-walk counts at the root for lengths 0..=k_max.
pub fn closed_walks(ball: &LatticeBall, k_max: usize) -> Result<Vec<BigUint>> {
    let needed = k_max.div_ceil(2);
    if ball.radius < needed {
        return Err(Error::Precondition(format!(
            "ball radius {} too small for walks of length {k_max} (needs {needed})",
            ball.radius
        )));
    }
    let mut cur = vec![BigUint::zero(); ball.len()];
    cur[ball.root] = BigUint::one();
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(BigUint::one());
    for _ in 0..k_max {
        cur = walk_step(&ball.adjacency, &cur);
        out.push(cur[ball.root].clone());
    }
    Ok(out)
}

/// A finite undirected graph with integer edge weights; self-loops allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, u64)>,
}

#[derive(Deserialize)]
struct GraphJson {
    n: Option<usize>,
    vertices: Option<Vec<serde_json::Value>>,
    edges: Vec<(usize, usize, u64)>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, u64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = edges.iter().find(|&&(i, j, _)| i >= n || j >= n) {
            return domain(format!("edge ({i}, {j}) references a vertex outside 0..{n}"));
        }
        Ok(WeightedGraph { n, edges })
    }

    /// Cycle graph Cₙ.
    pub fn cycle(n: usize) -> Self {
        WeightedGraph {
            n,
            edges: (0..n).map(|i| (i, (i + 1) % n, 1)).collect(),
        }
    }

    /// Accepts `{"n": .., "edges": [[i, j, w], ..]}` or a ball export.
    pub fn from_json(text: &str) -> Result<Self> {
        let g: GraphJson =
            serde_json::from_str(text).map_err(|e| Error::Domain(format!("graph JSON: {e}")))?;
        let n = match (g.n, g.vertices) {
            (Some(n), _) => n,
            (None, Some(v)) => v.len(),
            (None, None) => {
                return domain("graph JSON needs either \"n\" or \"vertices\"");
            }
        };
        WeightedGraph::new(n, g.edges)
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, u64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, w) in &self.edges {
            adj[i].push((j, w));
            if i != j {
                adj[j].push((i, w));
            }
        }
        adj
    }
}

impl From<&LatticeBall> for WeightedGraph {
    fn from(ball: &LatticeBall) -> Self {
        WeightedGraph {
            n: ball.len(),
            edges: ball.edges(),
        }
    }
}

/// Empirical spectral moments tr(Aᵏ)/n for k = 0..=k_max, computed as the
/// average number of weighted closed walks per vertex.
pub fn esd_moments(graph: &WeightedGraph, k_max: usize) -> Result<Vec<BigRational>> {
    if graph.n == 0 {
        return domain("esd_moments: empty graph");
    }
    let adj = graph.adjacency();
    let totals = (0..graph.n)
        .into_par_iter()
        .map(|start| {
            let mut cur = vec![BigUint::zero(); graph.n];
            cur[start] = BigUint::one();
            let mut counts = vec![BigUint::one()];
            for _ in 0..k_max {
                cur = adj
                    .iter()
                    .map(|nbrs| {
                        nbrs.iter()
                            .fold(BigUint::zero(), |acc, &(u, w)| acc + &cur[u] * w)
                    })
                    .collect();
                counts.push(cur[start].clone());
            }
            counts
        })
        .reduce(
            || vec![BigUint::zero(); k_max + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let n = num_bigint::BigInt::from(graph.n);
    Ok(totals
        .into_iter()
        .map(|t| BigRational::new(t.into(), n.clone()))
        .collect())
}
