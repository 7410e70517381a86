use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Line,
    Ring,
    Grid { rows: usize, cols: usize },
    Complete,
    Custom,
}

/// Qubit connectivity graph. Edges are unordered and stored as `(low, high)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub kind: TopologyKind,
    pub n_qubits: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Topology {
    pub fn line(n: usize) -> Self {
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        Self::normalized(TopologyKind::Line, n, edges)
    }

    pub fn ring(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((0, n - 1));
        }
        Self::normalized(TopologyKind::Ring, n, edges)
    }

    /// Row-major grid; qubit `r·cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let q = r * cols + c;
                if c + 1 < cols {
                    edges.push((q, q + 1));
                }
                if r + 1 < rows {
                    edges.push((q, q + cols));
                }
            }
        }
        Self::normalized(TopologyKind::Grid { rows, cols }, rows * cols, edges)
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b));
            }
        }
        Self::normalized(TopologyKind::Complete, n, edges)
    }

    pub fn custom(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let t = Self::normalized(TopologyKind::Custom, n, edges);
        t.validate()?;
        Ok(t)
    }

    fn normalized(kind: TopologyKind, n_qubits: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut edges: Vec<_> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        edges.sort_unstable();
        edges.dedup();
        Self { kind, n_qubits, edges }
    }

    pub fn validate(&self) -> Result<()> {
        for &(a, b) in &self.edges {
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop on qubit {a}")));
            }
            if a >= self.n_qubits || b >= self.n_qubits {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) outside {} qubits",
                    self.n_qubits
                )));
            }
        }
        Ok(())
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Size of a maximum matching (exhaustive; graphs here are tiny).
    pub fn max_matching(&self) -> usize {
        fn go(edges: &[(usize, usize)], used: u64) -> usize {
            match edges.split_first() {
                None => 0,
                Some((&(a, b), rest)) => {
                    let skip = go(rest, used);
                    if used & (1 << a) == 0 && used & (1 << b) == 0 {
                        skip.max(1 + go(rest, used | (1 << a) | (1 << b)))
                    } else {
                        skip
                    }
                }
            }
        }
        go(&self.edges, 0)
    }

    /// A random matching of exactly `size` edges.
    pub(crate) fn random_matching<R: Rng>(&self, size: usize, rng: &mut R) -> Option<Vec<(usize, usize)>> {
        fn go(edges: &[(usize, usize)], used: u64, need: usize, out: &mut Vec<(usize, usize)>) -> bool {
            if need == 0 {
                return true;
            }
            for (i, &(a, b)) in edges.iter().enumerate() {
                if used & (1 << a) == 0 && used & (1 << b) == 0 {
                    out.push((a, b));
                    if go(&edges[i + 1..], used | (1 << a) | (1 << b), need - 1, out) {
                        return true;
                    }
                    out.pop();
                }
            }
            false
        }
        let mut edges = self.edges.clone();
        edges.shuffle(rng);
        let mut out = Vec::with_capacity(size);
        go(&edges, 0, size, &mut out).then_some(out)
    }
}
