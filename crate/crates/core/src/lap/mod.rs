//! Maximum-similarity linear assignment.
//!
//! [`solve_dense`] and [`solve_sparse`] share one contract: when there are at
//! least as many columns as rows every row is matched exactly once and every
//! column at most once, maximizing the total similarity. With more rows than
//! columns every column is matched and the surplus rows stay unmatched,
//! which is what padding with dummy columns valued below every real entry
//! produces. [`solve_oracle`] enumerates all injective mappings and exists
//! to check the other two.

mod dense;
mod sparse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, SimilarityMatrix};

pub const ORACLE_MAX_ROWS: usize = 8;
pub const ORACLE_MAX_COLS: usize = 10;

/// Top-k retained similarities per row; every omitted entry is exactly 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSimilarity {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<(usize, f32)>>,
}

impl SparseSimilarity {
    pub fn new(n_rows: usize, n_cols: usize, mut rows: Vec<Vec<(usize, f32)>>) -> Result<Self> {
        if rows.len() != n_rows {
            return Err(Error::Dimension(format!(
                "{} row lists for {n_rows} rows",
                rows.len()
            )));
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|e| e.0);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Input(format!("row {i} repeats a column")));
            }
            if let Some(&(c, _)) = row.iter().find(|e| e.0 >= n_cols) {
                return Err(Error::Dimension(format!(
                    "row {i} references column {c} of {n_cols}"
                )));
            }
            if row.iter().any(|e| !e.1.is_finite()) {
                return Err(Error::Input(format!("row {i} has a non-finite value")));
            }
        }
        Ok(SparseSimilarity {
            n_rows,
            n_cols,
            rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Retained `(column, value)` entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f32)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(k) => self.rows[i][k].1,
            Err(_) => 0.0,
        }
    }

    /// Dense matrix with omitted entries set to 0.
    pub fn to_dense(&self) -> SimilarityMatrix {
        let mut values = vec![0.0f32; self.n_rows * self.n_cols];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                values[i * self.n_cols + j] = w;
            }
        }
        SimilarityMatrix::new(self.n_rows, self.n_cols, values)
            .expect("sparse values are validated finite")
    }

    fn transposed(&self) -> SparseSimilarity {
        let mut rows = vec![Vec::new(); self.n_cols];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                rows[j].push((i, w));
            }
        }
        SparseSimilarity {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            rows,
        }
    }
}

fn check_shape(n_rows: usize, n_cols: usize) -> Result<()> {
    if n_rows == 0 || n_cols == 0 {
        return Err(Error::Dimension(format!(
            "assignment needs a non-empty matrix, got {n_rows}x{n_cols}"
        )));
    }
    Ok(())
}

/// Optimal assignment over the full matrix.
pub fn solve_dense(sim: &SimilarityMatrix) -> Result<Assignment> {
    let (n, m) = (sim.n_probe(), sim.n_gallery());
    check_shape(n, m)?;
    // `SimilarityMatrix` guarantees finite entries.
    let pairs = if n <= m {
        let cost: Vec<f64> = sim.values().iter().map(|&s| -(s as f64)).collect();
        dense::min_cost_assignment(n, m, &cost)
            .into_iter()
            .enumerate()
            .collect()
    } else {
        let t = sim.transposed();
        let cost: Vec<f64> = t.values().iter().map(|&s| -(s as f64)).collect();
        dense::min_cost_assignment(m, n, &cost)
            .into_iter()
            .enumerate()
            .map(|(c, r)| (r, c))
            .collect()
    };
    Assignment::from_pairs(pairs, |r, c| sim.get(r, c) as f64)
}

/// Keeps the `k_a` largest entries of each row (ties to the lower column).
pub fn sparsify(sim: &SimilarityMatrix, k_a: usize) -> Result<SparseSimilarity> {
    if k_a == 0 {
        return Err(Error::Parameter("k_a must be at least 1".into()));
    }
    let m = sim.n_gallery();
    let keep = k_a.min(m);
    let mut rows = Vec::with_capacity(sim.n_probe());
    let mut order: Vec<usize> = Vec::with_capacity(m);
    for i in 0..sim.n_probe() {
        let row = sim.row(i);
        order.clear();
        order.extend(0..m);
        let by_value = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
        if keep < m {
            order.select_nth_unstable_by(keep, by_value);
            order.truncate(keep);
        }
        order.sort_unstable();
        rows.push(order.iter().map(|&j| (j, row[j])).collect());
    }
    Ok(SparseSimilarity {
        n_rows: sim.n_probe(),
        n_cols: m,
        rows,
    })
}

/// Optimal assignment for the sparsified matrix, omitted entries valued 0.
pub fn solve_sparse(sparse: &SparseSimilarity) -> Result<Assignment> {
    let (n, m) = (sparse.n_rows, sparse.n_cols);
    check_shape(n, m)?;
    let transposed;
    let work = if n <= m {
        sparse
    } else {
        transposed = sparse.transposed();
        &transposed
    };
    let view = sparse::SparseRows {
        n_rows: work.n_rows,
        n_cols: work.n_cols,
        rows: &work.rows,
    };
    let col4row = match sparse::max_sparse_assignment(&view) {
        Some(c) => c,
        None => {
            let dense = work.to_dense();
            let cost: Vec<f64> = dense.values().iter().map(|&s| -(s as f64)).collect();
            dense::min_cost_assignment(work.n_rows, work.n_cols, &cost)
        }
    };
    let pairs = col4row.into_iter().enumerate();
    let pairs: Vec<(usize, usize)> = if n <= m {
        pairs.collect()
    } else {
        pairs.map(|(c, r)| (r, c)).collect()
    };
    Assignment::from_pairs(pairs, |r, c| sparse.get(r, c) as f64)
}

/// Exhaustive maximum over all injective mappings. Among equal totals the
/// first mapping in lexicographic order of the mapped side wins.
pub fn solve_oracle(sim: &SimilarityMatrix) -> Result<Assignment> {
    let (n, m) = (sim.n_probe(), sim.n_gallery());
    check_shape(n, m)?;
    if n > ORACLE_MAX_ROWS || m > ORACLE_MAX_COLS {
        return Err(Error::Size(format!(
            "oracle limited to {ORACLE_MAX_ROWS}x{ORACLE_MAX_COLS}, got {n}x{m}"
        )));
    }
    let transposed = n > m;
    let work = if transposed {
        sim.transposed()
    } else {
        sim.clone()
    };
    let (rows, cols) = (work.n_probe(), work.n_gallery());

    struct Search<'a> {
        sim: &'a SimilarityMatrix,
        rows: usize,
        cols: usize,
        current: Vec<usize>,
        used: Vec<bool>,
        best: Vec<usize>,
        best_total: f64,
    }
    impl Search<'_> {
        fn go(&mut self, r: usize, acc: f64) {
            if r == self.rows {
                if acc > self.best_total {
                    self.best_total = acc;
                    self.best.clone_from(&self.current);
                }
                return;
            }
            for c in 0..self.cols {
                if self.used[c] {
                    continue;
                }
                self.used[c] = true;
                self.current.push(c);
                self.go(r + 1, acc + self.sim.get(r, c) as f64);
                self.current.pop();
                self.used[c] = false;
            }
        }
    }
    let mut search = Search {
        sim: &work,
        rows,
        cols,
        current: Vec::with_capacity(rows),
        used: vec![false; cols],
        best: Vec::new(),
        best_total: f64::NEG_INFINITY,
    };
    search.go(0, 0.0);
    let pairs = search.best.into_iter().enumerate();
    let pairs: Vec<(usize, usize)> = if transposed {
        pairs.map(|(c, r)| (r, c)).collect()
    } else {
        pairs.collect()
    };
    Assignment::from_pairs(pairs, |r, c| sim.get(r, c) as f64)
}
