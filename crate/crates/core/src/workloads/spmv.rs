use std::hint::black_box;

use super::{partition, CsrMatrix, Element, WorkloadError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpmvParams {
    /// Times the multiply-add is issued per nonzero.
    pub repeat: u32,
    pub elen_bits: u32,
    pub threads: u32,
}

impl Default for SpmvParams {
    fn default() -> Self {
        Self {
            repeat: 1,
            elen_bits: 64,
            threads: 1,
        }
    }
}

impl SpmvParams {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.repeat == 0 {
            return Err(WorkloadError::InvalidArgument("repeat must be >= 1".into()));
        }
        if self.threads == 0 {
            return Err(WorkloadError::InvalidArgument("threads must be >= 1".into()));
        }
        if !matches!(self.elen_bits, 32 | 64) {
            return Err(WorkloadError::InvalidArgument(format!(
                "spmv element width must be 32 or 64, got {}",
                self.elen_bits
            )));
        }
        Ok(())
    }
}

#[inline(never)]
fn row_dot<T: Element>(a: &CsrMatrix<T>, i: usize, x: &[T], repeat: u32) -> T {
    let (vals, cols) = (a.val(), a.col_ind());
    let mut temp = T::default();
    for k in a.row_ptr()[i]..a.row_ptr()[i + 1] {
        // Operands are reloaded on every repetition so the loop body is
        // issued `repeat` times instead of being folded into one product.
        for _ in 0..repeat {
            let v = *black_box(&vals[k]);
            let c = *black_box(&cols[k]) as usize;
            temp = v * x[c] + temp;
        }
    }
    black_box(temp)
}

/// `y[i] = repeat * sum_j A[i][j] * x[j]`, rows split across `threads`.
///
/// Each row is reduced by exactly one thread in column order, so the result
/// does not depend on the thread count.
pub fn spmv_kernel<T: Element>(
    a: &CsrMatrix<T>,
    x: &[T],
    params: SpmvParams,
) -> Result<Vec<T>, WorkloadError> {
    params.validate()?;
    if params.elen_bits != T::BITS {
        return Err(WorkloadError::InvalidArgument(format!(
            "params say {}-bit elements, matrix holds {}-bit",
            params.elen_bits,
            T::BITS
        )));
    }
    if x.len() != a.n_cols() {
        return Err(WorkloadError::DimensionMismatch {
            expected: a.n_cols(),
            got: x.len(),
        });
    }
    let mut y = vec![T::default(); a.n_rows()];
    let ranges = partition(a.n_rows(), params.threads as usize);
    if ranges.len() <= 1 {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = row_dot(a, i, x, params.repeat);
        }
        return Ok(y);
    }
    std::thread::scope(|s| {
        let mut rest = y.as_mut_slice();
        for r in ranges {
            let (chunk, tail) = rest.split_at_mut(r.len());
            rest = tail;
            s.spawn(move || {
                for (yi, i) in chunk.iter_mut().zip(r) {
                    *yi = row_dot(a, i, x, params.repeat);
                }
            });
        }
    });
    Ok(y)
}

/// Dense f64 reference: `repeat * (A x)`.
pub fn dense_oracle(dense: &[Vec<f64>], x: &[f64], repeat: u32) -> Vec<f64> {
    dense
        .iter()
        .map(|row| f64::from(repeat) * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workloads::{generate_matrix, MatrixPattern};

    #[test]
    fn identity_is_copy() {
        let a = CsrMatrix::<f64>::identity(5);
        let x = [1.0, -2.0, 3.5, 0.0, 9.0];
        assert_eq!(spmv_kernel(&a, &x, SpmvParams::default()).unwrap(), x);
    }

    #[test]
    fn two_by_two_repeat_twenty() {
        let a = CsrMatrix::<f64>::new(2, 2, vec![0, 2, 3], vec![0, 1, 1], vec![1.0, 2.0, 3.0]).unwrap();
        let p = SpmvParams {
            repeat: 20,
            ..Default::default()
        };
        assert_eq!(spmv_kernel(&a, &[1.0, 1.0], p).unwrap(), vec![60.0, 60.0]);
    }

    #[test]
    fn thread_count_invariant() {
        let a = generate_matrix(97, MatrixPattern::Random { density: 0.2, seed: 3 }).unwrap();
        let x: Vec<f64> = (0..97).map(|i| (i as f64).sin()).collect();
        let one = spmv_kernel(&a, &x, SpmvParams { repeat: 3, ..Default::default() }).unwrap();
        for t in [2, 4, 7, 200] {
            let p = SpmvParams { repeat: 3, elen_bits: 64, threads: t };
            let y = spmv_kernel(&a, &x, p).unwrap();
            assert!(one.iter().zip(&y).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn errors() {
        let a = CsrMatrix::<f64>::identity(3);
        assert!(matches!(
            spmv_kernel(&a, &[1.0; 2], SpmvParams::default()),
            Err(WorkloadError::DimensionMismatch { expected: 3, got: 2 })
        ));
        let p = SpmvParams { repeat: 0, ..Default::default() };
        assert!(spmv_kernel(&a, &[1.0; 3], p).is_err());
        let p = SpmvParams { elen_bits: 32, ..Default::default() };
        assert!(spmv_kernel(&a, &[1.0; 3], p).is_err());
    }
}
