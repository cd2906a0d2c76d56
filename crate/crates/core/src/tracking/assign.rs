//! Optimal one-to-one assignment with inadmissible entries.
//!
//! The solver maximises the number of admissible pairs first and minimises
//! their total cost second. Internally every subproblem is padded to a square
//! matrix whose filler entries (and inadmissible ones) cost `(1, 0)` under a
//! lexicographic order, so the shortest-augmenting-path method applies as is.

use std::cmp::Ordering;
use std::ops::{Add, Sub};

/// Rectangular cost matrix, `None` = inadmissible.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Option<f64>>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![None; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost matrix");
        Self { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let wrapped: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.iter().map(|&c| Some(c)).collect()).collect();
        Self::from_rows(&wrapped)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Option<f64>) {
        self.data[r * self.cols + c] = v;
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment {
    /// Matched `(row, col)` pairs in ascending row order.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
    pub total: f64,
}

impl Assignment {
    fn from_pairs(m: &CostMatrix, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        let total = pairs.iter().map(|&(r, c)| m.get(r, c).unwrap_or(0.0)).sum();
        let unmatched_rows = (0..m.rows).filter(|r| !pairs.iter().any(|p| p.0 == *r)).collect();
        let unmatched_cols = (0..m.cols).filter(|c| !pairs.iter().any(|p| p.1 == *c)).collect();
        Self { pairs, unmatched_rows, unmatched_cols, total }
    }

    pub fn col_of(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == row).map(|p| p.1)
    }
}

/// `(unmatched slots, summed cost)` ordered lexicographically.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Lex {
    k: i64,
    c: f64,
}

impl Lex {
    const ZERO: Lex = Lex { k: 0, c: 0.0 };
    const INF: Lex = Lex { k: i64::MAX / 4, c: 0.0 };
}

impl Add for Lex {
    type Output = Lex;
    fn add(self, o: Lex) -> Lex {
        Lex { k: self.k + o.k, c: self.c + o.c }
    }
}

impl Sub for Lex {
    type Output = Lex;
    fn sub(self, o: Lex) -> Lex {
        Lex { k: self.k - o.k, c: self.c - o.c }
    }
}

impl PartialOrd for Lex {
    fn partial_cmp(&self, o: &Lex) -> Option<Ordering> {
        Some(self.k.cmp(&o.k).then(self.c.total_cmp(&o.c)))
    }
}

/// Shortest augmenting path with potentials on an `n x n` matrix.
/// Returns `row_to_col`.
fn hungarian_square(n: usize, cost: impl Fn(usize, usize) -> Lex) -> Vec<usize> {
    // 1-based arrays; column 0 is the virtual source.
    let mut u = vec![Lex::ZERO; n + 1];
    let mut v = vec![Lex::ZERO; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![Lex::INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = Lex::INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Optimal matching restricted to `rows x cols` of `m`.
fn solve_sub(m: &CostMatrix, rows: &[usize], cols: &[usize]) -> (Vec<(usize, usize)>, usize, f64) {
    let n = rows.len().max(cols.len());
    if n == 0 || rows.is_empty() || cols.is_empty() {
        return (Vec::new(), 0, 0.0);
    }
    let cost = |i: usize, j: usize| -> Lex {
        if i < rows.len() && j < cols.len() {
            if let Some(c) = m.get(rows[i], cols[j]) {
                return Lex { k: 0, c };
            }
        }
        Lex { k: 1, c: 0.0 }
    };
    let r2c = hungarian_square(n, cost);
    let mut pairs = Vec::new();
    let mut total = 0.0;
    for (i, &j) in r2c.iter().enumerate().take(rows.len()) {
        if j < cols.len() {
            if let Some(c) = m.get(rows[i], cols[j]) {
                pairs.push((rows[i], cols[j]));
                total += c;
            }
        }
    }
    let count = pairs.len();
    (pairs, count, total)
}

/// Any optimal matching (maximum admissible count, then minimum cost).
pub fn solve(m: &CostMatrix) -> Assignment {
    let rows: Vec<usize> = (0..m.rows).collect();
    let cols: Vec<usize> = (0..m.cols).collect();
    let (pairs, _, _) = solve_sub(m, &rows, &cols);
    Assignment::from_pairs(m, pairs)
}

fn same_value(count: usize, cost: f64, best_count: usize, best_cost: f64) -> bool {
    count == best_count && (cost - best_cost).abs() <= 1e-9 * best_cost.abs().max(1.0)
}

/// Optimal matching with ties resolved towards the lexicographically smallest
/// `(row, col)` choices: rows are fixed in ascending order, each to the lowest
/// column that still admits an optimal completion.
pub fn solve_canonical(m: &CostMatrix) -> Assignment {
    let mut rows: Vec<usize> = (0..m.rows).collect();
    let mut cols: Vec<usize> = (0..m.cols).collect();
    let (_, best_count, best_cost) = solve_sub(m, &rows, &cols);
    let (mut need_count, mut need_cost) = (best_count, best_cost);
    let mut pairs = Vec::new();
    while let Some(&r) = rows.first() {
        rows.remove(0);
        let mut fixed = false;
        for (ci, &c) in cols.iter().enumerate() {
            let Some(rc) = m.get(r, c) else { continue };
            if need_count == 0 {
                break;
            }
            let rest_cols: Vec<usize> = cols.iter().enumerate().filter(|(k, _)| *k != ci).map(|(_, &x)| x).collect();
            let (_, n2, c2) = solve_sub(m, &rows, &rest_cols);
            if same_value(n2 + 1, c2 + rc, need_count, need_cost) {
                pairs.push((r, c));
                cols.remove(ci);
                need_count -= 1;
                need_cost -= rc;
                fixed = true;
                break;
            }
        }
        if !fixed {
            // Row stays unmatched; the remainder must still reach the optimum.
            debug_assert!({
                let (_, n2, c2) = solve_sub(m, &rows, &cols);
                same_value(n2, c2, need_count, need_cost)
            });
        }
    }
    Assignment::from_pairs(m, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive search over partial matchings of admissible pairs.
    fn brute(m: &CostMatrix) -> (usize, f64) {
        fn rec(m: &CostMatrix, r: usize, used: &mut Vec<bool>, count: usize, cost: f64, best: &mut (usize, f64)) {
            if r == m.rows() {
                if count > best.0 || (count == best.0 && cost < best.1) {
                    *best = (count, cost);
                }
                return;
            }
            rec(m, r + 1, used, count, cost, best);
            for c in 0..m.cols() {
                if !used[c] {
                    if let Some(v) = m.get(r, c) {
                        used[c] = true;
                        rec(m, r + 1, used, count + 1, cost + v, best);
                        used[c] = false;
                    }
                }
            }
        }
        let mut best = (0, 0.0);
        rec(m, 0, &mut vec![false; m.cols()], 0, 0.0, &mut best);
        best
    }

    #[test]
    fn two_by_two() {
        let m = CostMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let a = solve_canonical(&m);
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(a.total, 2.0);
    }

    #[test]
    fn all_inadmissible_gives_empty() {
        let m = CostMatrix::new(3, 2);
        let a = solve_canonical(&m);
        assert!(a.pairs.is_empty());
        assert_eq!(a.unmatched_rows, vec![0, 1, 2]);
        assert_eq!(a.unmatched_cols, vec![0, 1]);
    }

    #[test]
    fn ties_pick_lowest_indices() {
        let m = CostMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(solve_canonical(&m).pairs, vec![(0, 0), (1, 1)]);
        let m = CostMatrix::from_dense(&[vec![1.0, 1.0, 1.0]]);
        assert_eq!(solve_canonical(&m).pairs, vec![(0, 0)]);
        let m = CostMatrix::from_dense(&[vec![2.0], vec![2.0], vec![2.0]]);
        assert_eq!(solve_canonical(&m).pairs, vec![(0, 0)]);
    }

    #[test]
    fn prefers_more_admissible_pairs() {
        // Row 0 could take col 0 cheaply, but then row 1 has nothing.
        let m = CostMatrix::from_rows(&[vec![Some(0.1), Some(5.0)], vec![Some(0.2), None]]);
        let a = solve_canonical(&m);
        assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn empty_matrices() {
        assert!(solve(&CostMatrix::new(0, 4)).pairs.is_empty());
        assert_eq!(solve(&CostMatrix::new(2, 0)).unmatched_rows, vec![0, 1]);
    }

    fn matrix_strategy() -> impl Strategy<Value = CostMatrix> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::option::weighted(0.8, 0u32..20), r * c).prop_map(move |v| {
                let rows: Vec<Vec<Option<f64>>> = v.chunks(c).map(|ch| ch.iter().map(|x| x.map(f64::from)).collect()).collect();
                CostMatrix::from_rows(&rows)
            })
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(m in matrix_strategy()) {
            let (count, cost) = brute(&m);
            for a in [solve(&m), solve_canonical(&m)] {
                prop_assert_eq!(a.pairs.len(), count);
                prop_assert_eq!(a.total, cost);
                let mut rs: Vec<usize> = a.pairs.iter().map(|p| p.0).collect();
                let mut cs: Vec<usize> = a.pairs.iter().map(|p| p.1).collect();
                rs.dedup();
                cs.sort_unstable();
                cs.dedup();
                prop_assert_eq!(rs.len(), a.pairs.len());
                prop_assert_eq!(cs.len(), a.pairs.len());
            }
        }
    }
}
