//! Exact linear sum assignment on square cost matrices.
//!
//! Shortest augmenting path with row/column potentials: each row in turn is
//! connected to a free column through a Dijkstra search over reduced costs,
//! then potentials are updated and the path is flipped. O(n^3) worst case.
//!
//! Ties are broken deterministically: rows are augmented in index order and
//! the search always settles the lowest-index column among equal distances.

use crate::error::{Error, Result};

const UNASSIGNED: usize = usize::MAX;

/// Dense square matrix of finite, non-negative costs, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "cost matrix is not square: row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Self::from_entries(n, entries)
    }

    /// Builds a matrix from `n * n` row-major entries.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("cost matrix is empty"));
        }
        if entries.len() != n * n {
            return Err(Error::invalid(format!("cost matrix is not square: {} entries for n = {n}", entries.len())));
        }
        if let Some(pos) = entries.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::invalid(format!(
                "cost ({}, {}) = {} is not finite and non-negative",
                pos / n,
                pos % n,
                entries[pos]
            )));
        }
        Ok(CostMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.n..(row + 1) * self.n]
    }
}

/// Optimal bijection from rows (players) to columns (slots).
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `mapping[row]` is the column assigned to `row`.
    pub mapping: Vec<usize>,
    pub total_cost: f64,
}

impl Assignment {
    fn from_mapping(costs: &CostMatrix, mapping: Vec<usize>) -> Self {
        let total_cost = mapping.iter().enumerate().map(|(row, &col)| costs.get(row, col)).sum();
        Assignment { mapping, total_cost }
    }
}

pub fn solve(costs: &CostMatrix) -> Assignment {
    let n = costs.n();
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut col_for_row = vec![UNASSIGNED; n];
    let mut row_for_col = vec![UNASSIGNED; n];

    let mut shortest = vec![f64::INFINITY; n];
    let mut path = vec![UNASSIGNED; n];
    let mut row_seen = vec![false; n];
    let mut col_done = vec![false; n];

    for start in 0..n {
        shortest.fill(f64::INFINITY);
        path.fill(UNASSIGNED);
        row_seen.fill(false);
        col_done.fill(false);

        let mut min_val = 0.0;
        let mut row = start;
        let sink = loop {
            row_seen[row] = true;
            let mut lowest = f64::INFINITY;
            let mut next = UNASSIGNED;
            let cost_row = costs.row(row);
            for col in 0..n {
                if col_done[col] {
                    continue;
                }
                let reduced = min_val + cost_row[col] - u[row] - v[col];
                if reduced < shortest[col] {
                    path[col] = row;
                    shortest[col] = reduced;
                }
                if shortest[col] < lowest {
                    lowest = shortest[col];
                    next = col;
                }
            }
            // Finite costs on a complete bipartite graph always leave a reachable column.
            debug_assert!(next != UNASSIGNED);
            min_val = lowest;
            col_done[next] = true;
            if row_for_col[next] == UNASSIGNED {
                break next;
            }
            row = row_for_col[next];
        };

        u[start] += min_val;
        for r in 0..n {
            if row_seen[r] && r != start {
                u[r] += min_val - shortest[col_for_row[r]];
            }
        }
        for c in 0..n {
            if col_done[c] {
                v[c] -= min_val - shortest[c];
            }
        }

        let mut col = sink;
        loop {
            let r = path[col];
            row_for_col[col] = r;
            let previous = std::mem::replace(&mut col_for_row[r], col);
            if r == start {
                break;
            }
            col = previous;
        }
    }

    Assignment::from_mapping(costs, col_for_row)
}
