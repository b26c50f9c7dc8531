//! Proximity graph, edge numbering and incidence matrices.
//!
//! Agents are 0-based internally. An edge `(tail, head)` always has
//! `tail < head`; reports print them 1-based.

use std::fmt;

use crate::scalar::{dist_sq, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("edge ({0}, {1}) is not ordered tail < head")]
    Unordered(usize, usize),
    #[error("edge ({0}, {1}) references an agent outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    Duplicate(usize, usize),
}

/// Ordered list of undirected edges; position in the list is the edge number.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct EdgeSet {
    edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn new(edges: Vec<(usize, usize)>, n: usize) -> Result<Self, GraphError> {
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a >= b {
                return Err(GraphError::Unordered(a, b));
            }
            if b >= n {
                return Err(GraphError::OutOfRange(a, b, n));
            }
            if edges[..k].contains(&(a, b)) {
                return Err(GraphError::Duplicate(a, b));
            }
        }
        Ok(Self { edges })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn get(&self, m: usize) -> (usize, usize) {
        self.edges[m]
    }

    pub fn contains(&self, tail: usize, head: usize) -> bool {
        self.edges.contains(&(tail.min(head), tail.max(head)))
    }

    /// Edge numbers incident to `agent`.
    pub fn incident(&self, agent: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a == agent || b == agent)
            .map(|(m, _)| m)
            .collect()
    }
}

impl fmt::Display for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .edges
            .iter()
            .map(|(a, b)| format!("({},{})", a + 1, b + 1))
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Pairs within mutual sensing range, `‖x_i − x_j‖ ≤ min(d_con,i, d_con,j)`,
/// in lexicographic order.
pub fn sense_edges<T: Scalar>(x: &[Vec<T>], d_con: &[T]) -> EdgeSet {
    let n = x.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let range = d_con[i].min(d_con[j]);
            if dist_sq(&x[i], &x[j]) <= range * range {
                edges.push((i, j));
            }
        }
    }
    EdgeSet { edges }
}

/// All `N(N−1)/2` pairs: `e0` first with its numbering, the rest appended in
/// lexicographic order.
pub fn complete_edges(n: usize, e0: &EdgeSet) -> EdgeSet {
    let mut edges = e0.edges.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            if !e0.edges.contains(&(i, j)) {
                edges.push((i, j));
            }
        }
    }
    EdgeSet { edges }
}

/// `N × M` matrix with `−1` at the tail and `+1` at the head of each edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl IncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, agent: usize, edge: usize) -> i8 {
        self.data[agent * self.cols + edge]
    }

    pub fn row(&self, agent: usize) -> &[i8] {
        &self.data[agent * self.cols..(agent + 1) * self.cols]
    }

    pub fn column_sums(&self) -> Vec<i32> {
        (0..self.cols)
            .map(|m| (0..self.rows).map(|i| i32::from(self.get(i, m))).sum())
            .collect()
    }

    /// `(D ⊗ I_n) y` for a stacked per-edge vector `y ∈ ℝ^{nM}`.
    pub fn kron_mul<T: Scalar>(&self, dim: usize, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.cols * dim);
        let mut out = vec![T::zero(); self.rows * dim];
        for i in 0..self.rows {
            for m in 0..self.cols {
                let d = self.get(i, m);
                if d == 0 {
                    continue;
                }
                let d = T::lit(f64::from(d));
                for k in 0..dim {
                    out[i * dim + k] = out[i * dim + k] + d * y[m * dim + k];
                }
            }
        }
        out
    }
}

pub fn incidence(e: &EdgeSet, n: usize) -> IncidenceMatrix {
    let cols = e.len();
    let mut data = vec![0i8; n * cols];
    for (m, &(tail, head)) in e.edges.iter().enumerate() {
        data[tail * cols + m] = -1;
        data[head * cols + m] = 1;
    }
    IncidenceMatrix {
        rows: n,
        cols,
        data,
    }
}

pub fn is_connected(e: &EdgeSet, n: usize) -> bool {
    if n <= 1 {
        return true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    let mut components = n;
    for &(a, b) in &e.edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components == 1
}

/// First pair whose open balls intersect, `‖x_i − x_j‖ < r_i + r_j`.
pub fn first_collision<T: Scalar>(x: &[Vec<T>], r: &[T]) -> Option<(usize, usize)> {
    let n = x.len();
    (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .find(|&(i, j)| {
            let s = r[i] + r[j];
            dist_sq(&x[i], &x[j]) < s * s
        })
}

/// Open balls are pairwise disjoint; touching spheres count as disjoint.
pub fn check_collision_free<T: Scalar>(x: &[Vec<T>], r: &[T]) -> bool {
    first_collision(x, r).is_none()
}
