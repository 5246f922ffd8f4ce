//! Minimum-cost linear assignment via shortest augmenting paths.
//!
//! Solves rectangular problems directly: with `rows <= cols` every row is
//! assigned, otherwise every column. Ties are broken deterministically (rows
//! processed in ascending order; among equal-cost columns an unassigned one
//! is preferred, scanned in ascending index), so a constant cost matrix
//! yields the identity assignment.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> CostMatrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost matrix");
        Self { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }
}

/// Result of [`hungarian`]: `row_to_col[r]` is the column assigned to row
/// `r`, and `total_cost` the sum over assigned pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<T = f64> {
    pub row_to_col: Vec<Option<usize>>,
    pub total_cost: T,
}

const UNSET: usize = usize::MAX;

/// Minimum-cost assignment over a finite rectangular cost matrix.
///
/// min(rows, cols) pairs are always produced; surplus rows (or columns) stay
/// unassigned. Non-finite costs are rejected.
pub fn hungarian<T: Real>(cost: &CostMatrix<T>) -> Result<Assignment<T>> {
    if cost.data.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParams("cost matrix contains non-finite values".into()));
    }
    if cost.rows == 0 || cost.cols == 0 {
        return Ok(Assignment { row_to_col: vec![None; cost.rows], total_cost: T::zero() });
    }

    let transpose = cost.rows > cost.cols;
    let (nr, nc, flat): (usize, usize, Vec<T>) = if transpose {
        let mut t = Vec::with_capacity(cost.data.len());
        for c in 0..cost.cols {
            for r in 0..cost.rows {
                t.push(cost.get(r, c));
            }
        }
        (cost.cols, cost.rows, t)
    } else {
        (cost.rows, cost.cols, cost.data.clone())
    };

    let col4row = solve_flat(nr, nc, &flat);

    let mut row_to_col = vec![None; cost.rows];
    if transpose {
        for (c, &r) in col4row.iter().enumerate() {
            row_to_col[r] = Some(c);
        }
    } else {
        for (r, &c) in col4row.iter().enumerate() {
            row_to_col[r] = Some(c);
        }
    }
    let mut total_cost = T::zero();
    for (r, c) in row_to_col.iter().enumerate() {
        if let Some(c) = c {
            total_cost += cost.get(r, *c);
        }
    }
    Ok(Assignment { row_to_col, total_cost })
}

/// Core solver; requires `nr <= nc` and finite costs. Returns `col4row`.
fn solve_flat<T: Real>(nr: usize, nc: usize, cost: &[T]) -> Vec<usize> {
    let mut u = vec![T::zero(); nr];
    let mut v = vec![T::zero(); nc];
    let mut shortest_path_costs = vec![T::infinity(); nc];
    let mut path = vec![UNSET; nc];
    let mut col4row = vec![UNSET; nr];
    let mut row4col = vec![UNSET; nc];
    let mut scanned_rows = vec![false; nr];
    let mut scanned_cols = vec![false; nc];
    let mut remaining = vec![0usize; nc];

    for cur_row in 0..nr {
        let mut min_val = T::zero();
        let mut i = cur_row;
        let mut num_remaining = nc;
        for it in 0..nc {
            remaining[it] = it;
        }
        scanned_rows.fill(false);
        scanned_cols.fill(false);
        shortest_path_costs.fill(T::infinity());

        // Dijkstra-style search for the shortest augmenting path.
        let mut sink = UNSET;
        while sink == UNSET {
            let mut index = UNSET;
            let mut lowest = T::infinity();
            scanned_rows[i] = true;

            for it in 0..num_remaining {
                let j = remaining[it];
                let r = min_val + cost[i * nc + j] - u[i] - v[j];
                if r < shortest_path_costs[j] {
                    path[j] = i;
                    shortest_path_costs[j] = r;
                }
                // Prefer a column that immediately finishes the path when
                // costs tie, without displacing an earlier unassigned one;
                // keeps constant matrices on the diagonal.
                if shortest_path_costs[j] < lowest
                    || (shortest_path_costs[j] == lowest
                        && row4col[j] == UNSET
                        && (index == UNSET || row4col[remaining[index]] != UNSET))
                {
                    lowest = shortest_path_costs[j];
                    index = it;
                }
            }

            min_val = lowest;
            debug_assert!(min_val.is_finite(), "finite costs imply a feasible assignment");
            let j = remaining[index];
            if row4col[j] == UNSET {
                sink = j;
            } else {
                i = row4col[j];
            }
            scanned_cols[j] = true;
            num_remaining -= 1;
            remaining.swap(index, num_remaining);
        }

        u[cur_row] += min_val;
        for r in 0..nr {
            if scanned_rows[r] && r != cur_row {
                u[r] += min_val - shortest_path_costs[col4row[r]];
            }
        }
        for c in 0..nc {
            if scanned_cols[c] {
                v[c] -= min_val - shortest_path_costs[c];
            }
        }

        // Augment along the found path.
        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    col4row
}
