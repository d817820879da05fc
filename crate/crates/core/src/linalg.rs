//! Dense symmetric positive-definite solves for the least-squares fit.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Row-major square matrix.
#[derive(Clone, Debug)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }
}

/// Lower-triangular Cholesky factor.
pub struct Cholesky {
    l: SquareMatrix,
}

impl Cholesky {
    /// Factorizes `a`; `None` if a pivot is not safely positive.
    pub fn factor(a: &SquareMatrix) -> Option<Self> {
        let n = a.n;
        let max_diag = (0..n).map(|i| a.at(i, i)).fold(0.0f64, f64::max);
        if !(max_diag > 0.0) {
            return None;
        }
        let mut l = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut d = a.at(j, j);
            for k in 0..j {
                d -= l.at(j, k) * l.at(j, k);
            }
            if !(d > 1e-14 * max_diag) {
                return None;
            }
            let djj = math::sqrt(d);
            *l.at_mut(j, j) = djj;
            for i in (j + 1)..n {
                let mut s = a.at(i, j);
                for k in 0..j {
                    s -= l.at(i, k) * l.at(j, k);
                }
                *l.at_mut(i, j) = s / djj;
            }
        }
        Some(Cholesky { l })
    }

    /// Rough 2-norm condition estimate of the factored matrix.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.l.n;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = self.l.at(i, i);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (hi / lo) * (hi / lo)
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.l.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l.at(i, k) * b[k];
            }
            b[i] = s / self.l.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l.at(k, i) * b[k];
            }
            b[i] = s / self.l.at(i, i);
        }
    }
}
