//! Kuhn–Munkres with row/column potentials, O(n²m) for n ≤ m.

use super::CostMatrix;

/// Minimum-cost assignment over the valid cells of `c`.
///
/// Among all partial matchings that use only valid cells, the result has
/// the largest number of pairs and, among those, the smallest total cost.
/// Internally the matrix is padded to a full assignment in which every
/// invalid cell costs more than any set of valid cells could, so the
/// solver first minimizes the number of invalid cells used; those pairs are
/// then dropped. Pairs are `(row, col)` sorted by row.
pub fn hungarian(c: &CostMatrix) -> Vec<(usize, usize)> {
    let (rows, cols) = (c.nrows(), c.ncols());
    if rows == 0 || cols == 0 {
        return Vec::new();
    }

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..rows {
        for j in 0..cols {
            if c.is_valid(i, j) {
                lo = lo.min(c.get(i, j));
                hi = hi.max(c.get(i, j));
            }
        }
    }
    if lo > hi {
        return Vec::new();
    }
    let big = rows.min(cols) as f64 * (hi - lo) + 1.0;
    let shifted = |i: usize, j: usize| if c.is_valid(i, j) { c.get(i, j) - lo } else { big };

    let pairs = if rows <= cols {
        solve(rows, cols, shifted)
    } else {
        let mut t: Vec<_> = solve(cols, rows, |j, i| shifted(i, j)).into_iter().map(|(j, i)| (i, j)).collect();
        t.sort_unstable();
        t
    };
    pairs.into_iter().filter(|&(i, j)| c.is_valid(i, j)).collect()
}

/// Assigns every one of `n` rows to a distinct column out of `m ≥ n`.
fn solve(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    // 1-based, index 0 is the virtual column that seeds each augmentation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0; m + 1];
    let mut used = vec![false; m + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m).filter(|&j| owner[j] != 0).map(|j| (owner[j] - 1, j - 1)).collect();
    pairs.sort_unstable();
    pairs
}
