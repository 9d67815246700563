use nalgebra::{DMatrix, DVector};

use super::{Operator, C64, ZERO};

/// Compressed-row complex matrix used as a product kernel.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    pub fn from_dense(op: &Operator) -> Self {
        let m = op.matrix();
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            for c in 0..dim {
                let v = m[(r, c)];
                if v != ZERO {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> Operator {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        Operator::from_matrix(m).expect("square by construction")
    }

    /// `out = self · v`.
    pub fn mul_vec_into(&self, v: &DVector<C64>, out: &mut DVector<C64>) {
        for r in 0..self.dim {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            out[r] = acc;
        }
    }

    pub fn mul_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim);
        self.mul_vec_into(v, &mut out);
        out
    }

    /// `out += scale · self · m`.
    pub fn mul_mat_acc(&self, m: &DMatrix<C64>, scale: C64, out: &mut DMatrix<C64>) {
        let ncols = m.ncols();
        for j in 0..ncols {
            let col = m.column(j);
            for r in 0..self.dim {
                let mut acc = ZERO;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[k] * col[self.cols[k]];
                }
                out[(r, j)] += scale * acc;
            }
        }
    }

    pub fn mul_mat(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, m.ncols());
        self.mul_mat_acc(m, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// `out += scale · m · self`.
    pub fn right_mul_mat_acc(&self, m: &DMatrix<C64>, scale: C64, out: &mut DMatrix<C64>) {
        // (m · S)[i, c] = Σ_r m[i, r] S[r, c]
        for r in 0..self.dim {
            let mcol = m.column(r);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let s = self.vals[k] * scale;
                let c = self.cols[k];
                let mut ocol = out.column_mut(c);
                for i in 0..mcol.len() {
                    ocol[i] += mcol[i] * s;
                }
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_dense(&self.to_dense().adjoint())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(|v| v * factor).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{fock_annihilation, tensor_product, qubit};

    #[test]
    fn matches_dense_products() {
        let a = fock_annihilation(5).unwrap();
        let op = &tensor_product(&qubit::sigma_plus(), &a).unwrap()
            + &tensor_product(&qubit::pauli_x(), &a.adjoint()).unwrap();
        let s = SparseOperator::from_dense(&op);
        assert_eq!(s.to_dense(), op);
        let m = DMatrix::from_fn(10, 10, |i, j| C64::new(i as f64 - 0.3 * j as f64, 0.1 * (i * j) as f64));
        let dense = op.matrix() * &m;
        assert!((s.mul_mat(&m) - &dense).norm() < 1e-12);
        let mut right = DMatrix::zeros(10, 10);
        s.right_mul_mat_acc(&m, C64::new(1.0, 0.0), &mut right);
        assert!((right - &m * op.matrix()).norm() < 1e-12);
        let v = m.column(3).into_owned();
        assert!((s.mul_vec(&v) - op.matrix() * &v).norm() < 1e-12);
        assert!((s.adjoint().to_dense().max_abs_diff(&op.adjoint())) < 1e-15);
    }
}
