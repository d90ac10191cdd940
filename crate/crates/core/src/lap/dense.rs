//! Shortest augmenting path assignment in the Jonker–Volgenant family.
//!
//! Rows are inserted one at a time; each insertion runs a Dijkstra search
//! over reduced costs `c(i, j) - u(i) - v(j)` and augments along the
//! shortest alternating path to a free column. Works for any `n <= m`.

/// Reduced costs closer than this are treated as ties.
pub(crate) const TIE_EPS: f64 = 1e-7;

/// Minimizes `Σ cost(i, col[i])` over injective `col: rows → columns`,
/// requiring `n_rows <= n_cols`. `cost` is row-major with `n_cols` per row.
pub(crate) fn min_cost_assignment(n_rows: usize, n_cols: usize, cost: &[f64]) -> Vec<usize> {
    debug_assert!(n_rows <= n_cols);
    debug_assert_eq!(cost.len(), n_rows * n_cols);

    let mut u = vec![0.0f64; n_rows];
    let mut v = vec![0.0f64; n_cols];
    let mut shortest = vec![f64::INFINITY; n_cols];
    let mut path = vec![usize::MAX; n_cols];
    let mut col4row = vec![usize::MAX; n_rows];
    let mut row4col = vec![usize::MAX; n_cols];
    let mut scanned_rows = vec![false; n_rows];
    let mut scanned_cols = vec![false; n_cols];
    let mut remaining: Vec<usize> = Vec::with_capacity(n_cols);

    for cur_row in 0..n_rows {
        shortest.fill(f64::INFINITY);
        scanned_rows.fill(false);
        scanned_cols.fill(false);
        remaining.clear();
        remaining.extend(0..n_cols);

        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let sink = loop {
            scanned_rows[i] = true;
            let row = &cost[i * n_cols..(i + 1) * n_cols];
            let mut best: Option<usize> = None;
            for (slot, &j) in remaining.iter().enumerate() {
                let r = min_val + row[j] - u[i] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                best = match best {
                    None => Some(slot),
                    Some(b) => {
                        let jb = remaining[b];
                        if prefer(shortest[j], row4col[j], j, shortest[jb], row4col[jb], jb) {
                            Some(slot)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            // n_rows <= n_cols and every column is reachable, so `best` exists.
            let slot = best.expect("augmenting path search ran out of columns");
            let j = remaining.swap_remove(slot);
            min_val = shortest[j];
            scanned_cols[j] = true;
            if row4col[j] == usize::MAX {
                break j;
            }
            i = row4col[j];
        };

        u[cur_row] += min_val;
        for r in 0..n_rows {
            if scanned_rows[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for c in 0..n_cols {
            if scanned_cols[c] {
                v[c] -= min_val - shortest[c];
            }
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
    col4row
}

/// Candidate ordering: smaller reduced cost, then free columns, then lower index.
#[inline]
fn prefer(a: f64, a_owner: usize, a_col: usize, b: f64, b_owner: usize, b_col: usize) -> bool {
    if a < b - TIE_EPS {
        return true;
    }
    if a > b + TIE_EPS {
        return false;
    }
    let (a_free, b_free) = (a_owner == usize::MAX, b_owner == usize::MAX);
    if a_free != b_free {
        return a_free;
    }
    a_col < b_col
}
