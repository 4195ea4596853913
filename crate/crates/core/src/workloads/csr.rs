use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use super::{Element, WorkloadError};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_ind: Vec<u32>,
    val: Vec<T>,
}

impl<T: Element> CsrMatrix<T> {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_ind: Vec<u32>,
        val: Vec<T>,
    ) -> Result<Self, WorkloadError> {
        let bad = |m: String| Err(WorkloadError::InvalidMatrix(m));
        if n_cols > u32::MAX as usize {
            return bad(format!("{n_cols} columns exceed the u32 index range"));
        }
        if row_ptr.len() != n_rows + 1 {
            return bad(format!("row_ptr has {} entries, want {}", row_ptr.len(), n_rows + 1));
        }
        if row_ptr[0] != 0 {
            return bad("row_ptr[0] must be 0".into());
        }
        if col_ind.len() != val.len() {
            return bad(format!("{} column indices but {} values", col_ind.len(), val.len()));
        }
        if row_ptr[n_rows] != val.len() {
            return bad(format!("row_ptr ends at {}, nnz is {}", row_ptr[n_rows], val.len()));
        }
        for i in 0..n_rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return bad(format!("row_ptr decreases at row {i}"));
            }
            let cols = &col_ind[row_ptr[i]..row_ptr[i + 1]];
            if let Some(c) = cols.iter().find(|c| **c as usize >= n_cols) {
                return bad(format!("row {i}: column {c} out of range"));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {i}: column indices not strictly increasing"));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_ind,
            val,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_ind: (0..n as u32).collect(),
            val: vec![T::from_f64(1.0); n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_ind(&self) -> &[u32] {
        &self.col_ind
    }

    pub fn val(&self) -> &[T] {
        &self.val
    }

    /// Entries of row `i` as `(column, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_ind[r.clone()]
            .iter()
            .zip(&self.val[r])
            .map(|(c, v)| (*c as usize, *v))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(i) {
                row[c] = v.to_f64();
            }
        }
        d
    }

    /// Same structure with values converted to another element type.
    pub fn convert<U: Element>(&self) -> CsrMatrix<U> {
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr: self.row_ptr.clone(),
            col_ind: self.col_ind.clone(),
            val: self.val.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixPattern {
    Identity,
    /// Geometric row lengths with mean `density * n`, values in [-1, 1).
    /// Density 1 yields every entry.
    Random { density: f64, seed: u64 },
}

/// Deterministic square `n × n` test matrix.
pub fn generate_matrix(n: usize, pattern: MatrixPattern) -> Result<CsrMatrix<f64>, WorkloadError> {
    if n == 0 {
        return Err(WorkloadError::InvalidArgument("matrix dimension must be >= 1".into()));
    }
    if n > u32::MAX as usize {
        return Err(WorkloadError::InvalidArgument(format!("dimension {n} too large")));
    }
    let (density, seed) = match pattern {
        MatrixPattern::Identity => return Ok(CsrMatrix::identity(n)),
        MatrixPattern::Random { density, seed } => (density, seed),
    };
    if !(density > 0.0 && density <= 1.0) {
        return Err(WorkloadError::InvalidArgument(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = density * n as f64;
    let lengths = Geometric::new(1.0 / (mean + 1.0))
        .map_err(|e| WorkloadError::InvalidArgument(e.to_string()))?;

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut col_ind = Vec::new();
    let mut val = Vec::new();
    for _ in 0..n {
        let len = if density >= 1.0 {
            n
        } else {
            (lengths.sample(&mut rng) as usize).min(n)
        };
        let mut cols: Vec<u32> = index::sample(&mut rng, n, len)
            .into_iter()
            .map(|c| c as u32)
            .collect();
        cols.sort_unstable();
        for c in cols {
            col_ind.push(c);
            val.push(rng.random_range(-1.0..1.0));
        }
        row_ptr.push(col_ind.len());
    }
    CsrMatrix::new(n, n, row_ptr, col_ind, val)
}
