//! Assignment on a top-k sparsified similarity matrix.
//!
//! Every omitted entry has value exactly 0. Any row that does not use one of
//! its retained entries therefore scores 0 wherever it lands, so the search
//! runs on a reduced graph: each row keeps its retained edges plus one
//! private zero-valued slot. After the shortest augmenting path search on
//! that graph, rows parked on their slot are placed onto free real columns
//! where they score 0. If no such placement exists (only possible when the
//! retained entries cover nearly every free column) the solver falls back to
//! the dense route on the zero-filled matrix.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::dense::TIE_EPS;

/// Per-row retained entries, sorted by column, with implicit zeros elsewhere.
pub(crate) struct SparseRows<'a> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub rows: &'a [Vec<(usize, f32)>],
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    free: bool,
    col: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // BinaryHeap is a max-heap: the "greatest" candidate is the one with the
    // smallest distance, then free, then lowest column.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then(self.free.cmp(&other.free))
            .then(other.col.cmp(&self.col))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Maximizes total similarity with every row matched; requires `n_rows <= n_cols`.
/// Returns `None` when the zero-slot placement fails.
pub(crate) fn max_sparse_assignment(sp: &SparseRows<'_>) -> Option<Vec<usize>> {
    let n = sp.n_rows;
    let m = sp.n_cols;
    debug_assert!(n <= m);
    // Columns 0..m are real, m + i is the private zero slot of row i.
    let total_cols = m + n;

    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; total_cols];
    let mut shortest = vec![f64::INFINITY; total_cols];
    let mut path = vec![usize::MAX; total_cols];
    let mut col4row = vec![usize::MAX; n];
    let mut row4col = vec![usize::MAX; total_cols];
    let mut done_col = vec![false; total_cols];
    let mut touched: Vec<usize> = Vec::new();
    let mut scanned_rows: Vec<usize> = Vec::new();
    let mut scanned_cols: Vec<usize> = Vec::new();
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();

    for cur_row in 0..n {
        for &c in &touched {
            shortest[c] = f64::INFINITY;
            done_col[c] = false;
        }
        touched.clear();
        scanned_rows.clear();
        scanned_cols.clear();
        heap.clear();

        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let sink = loop {
            scanned_rows.push(i);
            let slot = m + i;
            let edges = sp.rows[i]
                .iter()
                .map(|&(c, w)| (c, -(w as f64)))
                .chain(std::iter::once((slot, 0.0)));
            for (j, cost) in edges {
                if done_col[j] {
                    continue;
                }
                let r = min_val + cost - u[i] - v[j];
                if r < shortest[j] {
                    if shortest[j] == f64::INFINITY {
                        touched.push(j);
                    }
                    shortest[j] = r;
                    path[j] = i;
                    heap.push(Candidate {
                        dist: r,
                        free: row4col[j] == usize::MAX,
                        col: j,
                    });
                }
            }
            let j = loop {
                let c = heap.pop()?;
                if !done_col[c.col] && c.dist == shortest[c.col] {
                    break c.col;
                }
            };
            min_val = shortest[j];
            done_col[j] = true;
            scanned_cols.push(j);
            if row4col[j] == usize::MAX {
                break j;
            }
            i = row4col[j];
        };

        u[cur_row] += min_val;
        for &r in &scanned_rows {
            if r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for &c in &scanned_cols {
            v[c] -= min_val - shortest[c];
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            let prev = std::mem::replace(&mut col4row[r], j);
            if r == cur_row {
                break;
            }
            j = prev;
        }
    }

    place_zero_rows(sp, col4row)
}

/// Moves rows parked on their zero slot onto free real columns where the
/// row's value is not negative.
fn place_zero_rows(sp: &SparseRows<'_>, mut col4row: Vec<usize>) -> Option<Vec<usize>> {
    let m = sp.n_cols;
    let mut used = vec![false; m];
    let mut parked = Vec::new();
    for (r, &c) in col4row.iter().enumerate() {
        if c < m {
            used[c] = true;
        } else {
            parked.push(r);
        }
    }
    if parked.is_empty() {
        return Some(col4row);
    }
    let free: Vec<usize> = (0..m).filter(|&c| !used[c]).collect();
    let allowed = |r: usize, c: usize| -> bool {
        match sp.rows[r].binary_search_by(|e| e.0.cmp(&c)) {
            Ok(k) => sp.rows[r][k].1 as f64 >= -TIE_EPS,
            Err(_) => true,
        }
    };

    // Greedy pass in row order, lowest free column first.
    let mut taken = vec![false; free.len()];
    let mut first_open = 0usize;
    let mut stuck = Vec::new();
    for &r in &parked {
        while first_open < free.len() && taken[first_open] {
            first_open += 1;
        }
        let pick = (first_open..free.len()).find(|&k| !taken[k] && allowed(r, free[k]));
        match pick {
            Some(k) => {
                taken[k] = true;
                col4row[r] = free[k];
            }
            None => stuck.push(r),
        }
    }
    if stuck.is_empty() {
        return Some(col4row);
    }

    // Kuhn's augmenting paths over the parked rows when greedy gets stuck.
    let mut owner: Vec<usize> = vec![usize::MAX; free.len()];
    let mut col_of: Vec<usize> = vec![usize::MAX; parked.len()];
    for (pi, &r) in parked.iter().enumerate() {
        if let Ok(k) = free.binary_search(&col4row[r]) {
            owner[k] = pi;
            col_of[pi] = k;
        }
    }
    fn augment(
        pi: usize,
        parked: &[usize],
        free: &[usize],
        allowed: &dyn Fn(usize, usize) -> bool,
        owner: &mut [usize],
        col_of: &mut [usize],
        seen: &mut [bool],
    ) -> bool {
        for k in 0..free.len() {
            if seen[k] || !allowed(parked[pi], free[k]) {
                continue;
            }
            seen[k] = true;
            if owner[k] == usize::MAX
                || augment(owner[k], parked, free, allowed, owner, col_of, seen)
            {
                owner[k] = pi;
                col_of[pi] = k;
                return true;
            }
        }
        false
    }
    for pi in 0..parked.len() {
        if col_of[pi] != usize::MAX {
            continue;
        }
        let mut seen = vec![false; free.len()];
        if !augment(
            pi,
            &parked,
            &free,
            &allowed,
            &mut owner,
            &mut col_of,
            &mut seen,
        ) {
            return None;
        }
    }
    for (pi, &r) in parked.iter().enumerate() {
        col4row[r] = free[col_of[pi]];
    }
    Some(col4row)
}
