use std::fmt::Write as _;
use std::path::Path;

use super::{CsrMatrix, Element, WorkloadError};

fn perr(line: usize, message: impl Into<String>) -> WorkloadError {
    WorkloadError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses Matrix Market `coordinate` text (`real`, `integer` or `pattern`;
/// `general` or `symmetric`). Indices are 1-based; duplicates are rejected.
pub fn read_matrix_market(text: &str) -> Result<CsrMatrix<f64>, WorkloadError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(perr(1, "missing %%MatrixMarket matrix banner"));
    }
    if tokens[2] != "coordinate" {
        return Err(perr(1, format!("unsupported format `{}`", tokens[2])));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        f => return Err(perr(1, format!("unsupported field `{f}`"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        s => return Err(perr(1, format!("unsupported symmetry `{s}`"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| perr(1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|e| perr(size_line, format!("bad size line: {e}")))?;
    let [n_rows, n_cols, nnz] = dims[..] else {
        return Err(perr(size_line, "size line needs rows, cols, nnz"));
    };

    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(nnz * (1 + usize::from(symmetric)));
    let mut seen = 0;
    for (ln, l) in body {
        let f: Vec<&str> = l.split_whitespace().collect();
        let want = if pattern { 2 } else { 3 };
        if f.len() != want {
            return Err(perr(ln, format!("expected {want} fields, got {}", f.len())));
        }
        let idx = |s: &str, max: usize| -> Result<usize, WorkloadError> {
            let v: usize = s.parse().map_err(|_| perr(ln, format!("bad index `{s}`")))?;
            if v == 0 || v > max {
                return Err(perr(ln, format!("index {v} outside 1..={max}")));
            }
            Ok(v - 1)
        };
        let (i, j) = (idx(f[0], n_rows)?, idx(f[1], n_cols)?);
        let v = if pattern {
            1.0
        } else {
            f[2].parse().map_err(|_| perr(ln, format!("bad value `{}`", f[2])))?
        };
        if symmetric && j > i {
            return Err(perr(ln, "symmetric storage must hold the lower triangle only"));
        }
        entries.push((i, j, v));
        if symmetric && i != j {
            entries.push((j, i, v));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(perr(size_line, format!("declared {nnz} entries, found {seen}")));
    }

    entries.sort_by_key(|&(i, j, _)| (i, j));
    if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
        return Err(perr(size_line, format!("duplicate entry ({}, {})", w[0].0 + 1, w[0].1 + 1)));
    }
    let mut row_ptr = vec![0usize; n_rows + 1];
    for &(i, _, _) in &entries {
        row_ptr[i + 1] += 1;
    }
    for i in 0..n_rows {
        row_ptr[i + 1] += row_ptr[i];
    }
    let col_ind = entries.iter().map(|e| e.1 as u32).collect();
    let val = entries.iter().map(|e| e.2).collect();
    CsrMatrix::new(n_rows, n_cols, row_ptr, col_ind, val)
}

pub fn read_matrix_market_file(path: &Path) -> Result<CsrMatrix<f64>, WorkloadError> {
    let text = std::fs::read_to_string(path).map_err(|source| WorkloadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_matrix_market(&text)
}

/// Writes `coordinate real general`, rows and columns sorted.
pub fn write_matrix_market<T: Element>(m: &CsrMatrix<T>) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz());
    for i in 0..m.n_rows() {
        for (c, v) in m.row(i) {
            let _ = writeln!(s, "{} {} {}", i + 1, c + 1, v.to_f64());
        }
    }
    s
}
