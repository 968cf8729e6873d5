//! Sparse Hermitian operators in compressed-row form.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("entry ({row}, {col}) outside {dim}x{dim} operator")]
    EntryOutOfRange { row: usize, col: usize, dim: usize },
    #[error("operator is not Hermitian: |H[{row},{col}] - conj(H[{col},{row}])| = {defect:.3e}")]
    NotHermitian { row: usize, col: usize, defect: f64 },
    #[error("dimension mismatch: operator is {dim}, vector is {vec_len}")]
    DimMismatch { dim: usize, vec_len: usize },
    #[error("operators have incompatible dimensions {0} and {1}")]
    SizeMismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, OperatorError>;

const HERMITICITY_TOL: f64 = 1e-14;

/// Builder accumulating matrix elements before freezing into CSR form.
#[derive(Debug, Clone, Default)]
pub struct OperatorBuilder {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl OperatorBuilder {
    pub fn new(dim: usize) -> Self {
        OperatorBuilder { dim, entries: Vec::new() }
    }

    /// Adds `value` to element `(row, col)`. Duplicates accumulate.
    pub fn add(&mut self, row: usize, col: usize, value: C64) -> Result<()> {
        if row >= self.dim || col >= self.dim {
            return Err(OperatorError::EntryOutOfRange { row, col, dim: self.dim });
        }
        if value != C64::new(0.0, 0.0) {
            self.entries.push((row, col, value));
        }
        Ok(())
    }

    pub fn add_real(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        self.add(row, col, C64::new(value, 0.0))
    }

    /// Adds `value` to `(row, col)` and its conjugate to `(col, row)`.
    pub fn add_pair(&mut self, row: usize, col: usize, value: C64) -> Result<()> {
        self.add(row, col, value)?;
        if row != col {
            self.add(col, row, value.conj())?;
        }
        Ok(())
    }

    /// Freezes into CSR form, verifying hermiticity to `1e-14` relative to
    /// the largest element magnitude.
    pub fn build(self) -> Result<SparseHermitianOperator> {
        let dim = self.dim;
        let mut merged = std::collections::BTreeMap::<(usize, usize), C64>::new();
        for (r, c, v) in self.entries {
            *merged.entry((r, c)).or_insert(C64::new(0.0, 0.0)) += v;
        }
        merged.retain(|_, v| v.norm() > 0.0);

        let scale = merged.values().map(|v| v.norm()).fold(1.0f64, f64::max);
        for (&(r, c), &v) in &merged {
            if r > c {
                continue;
            }
            let mirror = merged.get(&(c, r)).copied().unwrap_or(C64::new(0.0, 0.0));
            let defect = (v - mirror.conj()).norm();
            if defect > HERMITICITY_TOL * scale {
                return Err(OperatorError::NotHermitian { row: r, col: c, defect });
            }
        }

        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(merged.len());
        let mut vals = Vec::with_capacity(merged.len());
        for (&(r, c), &v) in &merged {
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseHermitianOperator { dim, row_ptr, cols, vals })
    }
}

/// Hermitian operator in compressed sparse row storage.
#[derive(Debug, Clone)]
pub struct SparseHermitianOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseHermitianOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Diagonal operator from real eigenvalue-like entries.
    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut b = OperatorBuilder::new(dim);
        for (i, &d) in diag.iter().enumerate() {
            b.add_real(i, i, d).expect("in range");
        }
        b.build().expect("diagonal is Hermitian")
    }

    pub fn matvec(&self, x: ArrayView1<C64>) -> Result<Array1<C64>> {
        if x.len() != self.dim {
            return Err(OperatorError::DimMismatch { dim: self.dim, vec_len: x.len() });
        }
        let mut y = Array1::zeros(self.dim);
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    /// Real expectation value `<x|H|x>`; the imaginary part is discarded
    /// (it vanishes up to roundoff for a Hermitian operator).
    pub fn expectation(&self, x: ArrayView1<C64>) -> Result<f64> {
        let hx = self.matvec(x)?;
        Ok(x.iter().zip(hx.iter()).map(|(a, b)| (a.conj() * b).re).sum())
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    /// Element-wise sum of two operators of equal dimension.
    pub fn add(&self, other: &SparseHermitianOperator) -> Result<SparseHermitianOperator> {
        if self.dim != other.dim {
            return Err(OperatorError::SizeMismatch(self.dim, other.dim));
        }
        let mut b = OperatorBuilder::new(self.dim);
        for op in [self, other] {
            for r in 0..op.dim {
                for k in op.row_ptr[r]..op.row_ptr[r + 1] {
                    b.add(r, op.cols[k], op.vals[k])?;
                }
            }
        }
        b.build()
    }

    /// Maximum absolute difference of matrix elements.
    pub fn max_abs_diff(&self, other: &SparseHermitianOperator) -> Result<f64> {
        if self.dim != other.dim {
            return Err(OperatorError::SizeMismatch(self.dim, other.dim));
        }
        let a = self.to_dense();
        let b = other.to_dense();
        Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
    }
}
