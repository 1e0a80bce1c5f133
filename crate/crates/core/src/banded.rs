//! Complex tridiagonal matrices and their pivoted LU factorization.

use crate::error::{Error, Result};
use crate::scalar::{czero, Real, C};

/// Tridiagonal matrix: `sub[i] = A[i+1][i]`, `sup[i] = A[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T: Real> {
    pub sub: Vec<C<T>>,
    pub diag: Vec<C<T>>,
    pub sup: Vec<C<T>>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn zeros(n: usize) -> Self {
        let off = n.saturating_sub(1);
        Tridiagonal { sub: vec![czero(); off], diag: vec![czero(); n], sup: vec![czero(); off] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Entry `(i, j)`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> C<T> {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.sup[i]
        } else if i == j + 1 {
            self.sub[j]
        } else {
            czero()
        }
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, v: C<T>) {
        if i == j {
            self.diag[i] += v;
        } else if j == i + 1 {
            self.sup[i] += v;
        } else if i == j + 1 {
            self.sub[j] += v;
        } else {
            panic!("entry ({i}, {j}) outside the tridiagonal band");
        }
    }

    pub fn matvec(&self, x: &[C<T>]) -> Vec<C<T>> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.sub.iter().chain(&self.diag).chain(&self.sup).fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `I·s + A·t` for complex scalars, used to build Crank–Nicolson operators.
    pub fn shifted(&self, weights: &[T], s: C<T>, t: C<T>) -> Self {
        Tridiagonal {
            sub: self.sub.iter().map(|z| *z * t).collect(),
            diag: self.diag.iter().zip(weights).map(|(z, w)| s * *w + *z * t).collect(),
            sup: self.sup.iter().map(|z| *z * t).collect(),
        }
    }
}

/// LU factorization with partial (row) pivoting, as in LAPACK `gttrf`.
#[derive(Debug, Clone)]
pub struct TridiagLu<T: Real> {
    dl: Vec<C<T>>,
    d: Vec<C<T>>,
    du: Vec<C<T>>,
    du2: Vec<C<T>>,
    swapped: Vec<bool>,
}

impl<T: Real> TridiagLu<T> {
    pub fn factor(a: &Tridiagonal<T>) -> Result<Self> {
        let n = a.dim();
        let mut dl = a.sub.clone();
        let mut d = a.diag.clone();
        let mut du = a.sup.clone();
        let mut du2 = vec![czero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i] != czero() {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] = d[i + 1] - fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if let Some(row) = d.iter().position(|z| *z == czero()) {
            return Err(Error::SingularSolve(row));
        }
        Ok(TridiagLu { dl, d, du, du2, swapped })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [C<T>]) {
        let n = self.d.len();
        assert_eq!(b.len(), n);
        if n == 0 {
            return;
        }
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - self.dl[i] * b[i];
            }
        }
        b[n - 1] = b[n - 1] / self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}
