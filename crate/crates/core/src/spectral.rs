//! Lowest eigenpairs of assembled Hamiltonians and analytic reference spectra.
//!
//! `A` is W-Hermitian and tridiagonal. `W^{1/2} A W^{-1/2}` is Hermitian
//! tridiagonal and a diagonal phase change makes it real symmetric. That
//! matrix is split wherever an off-diagonal vanishes, so block-diagonal
//! operators yield eigenvectors supported on a single block. Eigenvalues
//! come from Sturm-sequence bisection, vectors from inverse iteration, and
//! each eigenvalue is finally replaced by the Rayleigh quotient of the stored
//! quadratic form.

use crate::assembly::{hermiticity_defect, HamiltonianMatrix};
use crate::error::{Error, Result};
use crate::grid::Block;
use crate::scalar::{czero, Real, C};

/// Defect above which [`eigensolve`] refuses the matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_BISECTION: usize = 400;
const INVERSE_STEPS: usize = 3;
const MAX_INVERSE: usize = 12;

/// Where an eigenvector lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Block(Block),
    /// Mass spread over several blocks (transversal operators).
    Mixed,
}

impl Support {
    pub fn label(self) -> &'static str {
        match self {
            Support::Block(b) => b.label(),
            Support::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult<T: Real> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// W-orthonormal vectors on the matrix DOFs.
    pub eigenvectors: Vec<Vec<C<T>>>,
    /// `‖Av - λv‖_W / max|A|`.
    pub residuals: Vec<T>,
    pub support: Vec<Support>,
    /// Weighted mass of each vector per block, indexed by [`Block::index`].
    pub block_mass: Vec<[T; 3]>,
}

/// Cross-block mass fraction below which a vector counts as block-pure.
pub const PURITY_TOL: f64 = 1e-12;

struct SymTridiag<T> {
    d: Vec<T>,
    e: Vec<T>,
}

impl<T: Real> SymTridiag<T> {
    fn norm(&self) -> T {
        let n = self.d.len();
        (0..n).fold(T::zero(), |m, i| {
            let mut r = self.d[i].abs();
            if i > 0 {
                r += self.e[i - 1].abs();
            }
            if i + 1 < n {
                r += self.e[i].abs();
            }
            m.max(r)
        })
    }

    fn gershgorin(&self) -> (T, T) {
        let n = self.d.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let mut r = T::zero();
            if i > 0 {
                r += self.e[i - 1].abs();
            }
            if i + 1 < n {
                r += self.e[i].abs();
            }
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: T, pivmin: T) -> usize {
        let mut count = 0;
        let mut q = T::one();
        for i in 0..self.d.len() {
            q = if i == 0 { self.d[0] - x } else { self.d[i] - x - self.e[i - 1] * self.e[i - 1] / q };
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based).
    fn eigenvalue(&self, k: usize, pivmin: T) -> Result<T> {
        let (mut lo, mut hi) = self.gershgorin();
        let pad = T::lit(2.0) * (self.norm() * T::epsilon() + pivmin);
        lo -= pad;
        hi += pad;
        for _ in 0..MAX_BISECTION {
            let mid = (lo + hi) / T::lit(2.0);
            let width = hi - lo;
            if width <= T::lit(2.0) * T::epsilon() * lo.abs().max(hi.abs()) + pivmin || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.count_below(mid, pivmin) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::Convergence { iterations: MAX_BISECTION })
    }

    /// Solves `(S - λI) x = b` with partial pivoting; tiny pivots are
    /// replaced so that exact eigenvalues still give a finite (huge) solution.
    fn shifted_solve(&self, lambda: T, b: &mut [T], tiny: T) {
        let n = self.d.len();
        let mut d: Vec<T> = self.d.iter().map(|x| *x - lambda).collect();
        let mut dl = self.e.clone();
        let mut du = self.e.clone();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < tiny {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] = d[i + 1] - fact * du[i];
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
        if d[n - 1].abs() < tiny {
            d[n - 1] = tiny;
        }
        for i in 0..n - 1 {
            if swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - dl[i] * b[i];
            }
        }
        b[n - 1] = b[n - 1] / d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
    }

    fn residual(&self, lambda: T, x: &[T]) -> T {
        let n = self.d.len();
        let mut r = T::zero();
        for i in 0..n {
            let mut y = (self.d[i] - lambda) * x[i];
            if i > 0 {
                y += self.e[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                y += self.e[i] * x[i + 1];
            }
            r += y * y;
        }
        r.sqrt()
    }

    /// Inverse iteration for the given eigenvalues, orthogonalized within
    /// clusters as in LAPACK `stein`.
    fn eigenvectors(&self, lambdas: &[T]) -> Result<Vec<Vec<T>>> {
        let n = self.d.len();
        if n == 1 {
            return Ok(vec![vec![T::one()]]);
        }
        let norm = self.norm().max(T::min_positive_value());
        let tiny = T::epsilon() * norm;
        let cluster = T::lit(1e-3) * norm;
        let tol = T::lit(64.0) * T::epsilon() * norm;
        let mut out: Vec<Vec<T>> = Vec::with_capacity(lambdas.len());
        for (j, &lambda) in lambdas.iter().enumerate() {
            // deterministic, generic start vector
            let mut x: Vec<T> = (0..n)
                .map(|i| T::one() + T::lit(0.5) * T::lit(((i * 7 + j * 13) % 17) as f64 / 17.0))
                .collect();
            let mut done = 0;
            for it in 0..MAX_INVERSE {
                self.shifted_solve(lambda, &mut x, tiny);
                for (prev, &mu) in out.iter().zip(lambdas) {
                    if (mu - lambda).abs() <= cluster {
                        let dot = prev.iter().zip(&x).fold(T::zero(), |a, (p, q)| a + *p * *q);
                        x.iter_mut().zip(prev).for_each(|(q, p)| *q -= dot * *p);
                    }
                }
                let nrm = x.iter().fold(T::zero(), |a, v| a + *v * *v).sqrt();
                if !(nrm > T::zero()) || !nrm.is_finite() {
                    return Err(Error::Convergence { iterations: it + 1 });
                }
                x.iter_mut().for_each(|v| *v /= nrm);
                if it + 1 >= INVERSE_STEPS && self.residual(lambda, &x) <= tol {
                    done = it + 1;
                    break;
                }
            }
            if done == 0 && self.residual(lambda, &x) > T::lit(1e-8) * norm {
                return Err(Error::Convergence { iterations: MAX_INVERSE });
            }
            out.push(x);
        }
        Ok(out)
    }
}

/// Lowest `count` eigenpairs of `hm`.
pub fn eigensolve<T: Real>(hm: &HamiltonianMatrix<T>, count: usize) -> Result<EigenResult<T>> {
    let n = hm.dim();
    if count > n {
        return Err(Error::InvalidArgument(format!("requested {count} eigenpairs of a {n}-dimensional operator")));
    }
    let defect = hermiticity_defect(hm);
    if defect > T::lit(HERMITIAN_TOL) {
        return Err(Error::NotHermitian(defect.to_f64_lossy()));
    }
    let a = hm.matrix();
    let w = hm.weights();
    let sq: Vec<T> = w.iter().map(|x| x.sqrt()).collect();

    // T = W^{1/2} A W^{-1/2}, then D* T D real with d_{i+1} = d_i e^{-iθ_i}
    let diag: Vec<T> = a.diag.iter().map(|z| z.re).collect();
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut phase = vec![C::new(T::one(), T::zero()); n];
    for i in 0..n.saturating_sub(1) {
        let t = a.sup[i] * (sq[i] / sq[i + 1]);
        let m = t.norm();
        off.push(m);
        phase[i + 1] = if m > T::zero() { phase[i] * (t / m).conj() } else { C::new(T::one(), T::zero()) };
    }

    // split at negligible couplings
    let mut bounds = Vec::new();
    let mut start = 0;
    for i in 0..n.saturating_sub(1) {
        if off[i] <= T::epsilon() * (diag[i].abs() * diag[i + 1].abs()).sqrt() {
            bounds.push((start, i + 1));
            start = i + 1;
        }
    }
    bounds.push((start, n));

    let scale = a.max_abs().max(T::min_positive_value());
    let pivmin = T::min_positive_value() * T::lit(1e4) * scale;
    let mut candidates: Vec<(T, usize, usize)> = Vec::new();
    let mut pieces = Vec::with_capacity(bounds.len());
    for (bi, &(s, e)) in bounds.iter().enumerate() {
        let piece = SymTridiag { d: diag[s..e].to_vec(), e: off[s..e - 1].to_vec() };
        for k in 0..count.min(e - s) {
            candidates.push((piece.eigenvalue(k, pivmin)?, bi, k));
        }
        pieces.push(piece);
    }
    candidates.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal).then((x.1, x.2).cmp(&(y.1, y.2))));
    candidates.truncate(count);

    let mut chosen: Vec<Vec<(usize, T)>> = vec![Vec::new(); bounds.len()];
    for (slot, &(lambda, bi, _)) in candidates.iter().enumerate() {
        chosen[bi].push((slot, lambda));
    }
    let mut vectors: Vec<Vec<C<T>>> = vec![Vec::new(); candidates.len()];
    for (bi, picks) in chosen.iter().enumerate() {
        if picks.is_empty() {
            continue;
        }
        let (s, e) = bounds[bi];
        let lambdas: Vec<T> = picks.iter().map(|p| p.1).collect();
        let local = pieces[bi].eigenvectors(&lambdas)?;
        for ((slot, _), u) in picks.iter().zip(local) {
            let mut v = vec![czero(); n];
            for (k, x) in u.into_iter().enumerate() {
                let i = s + k;
                v[i] = phase[i] * (x / sq[i]);
            }
            debug_assert!(e <= n);
            vectors[*slot] = v;
        }
    }

    let mut pairs: Vec<(T, Vec<C<T>>)> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let lambda = hm.rayleigh_quotient(&v)?;
        pairs.push((lambda, v));
    }
    // stable: ties keep the bisection order
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut result = EigenResult {
        eigenvalues: Vec::new(),
        eigenvectors: Vec::new(),
        residuals: Vec::new(),
        support: Vec::new(),
        block_mass: Vec::new(),
    };
    for (lambda, v) in pairs {
        let av = hm.apply(&v);
        let r: Vec<C<T>> = av.iter().zip(&v).map(|(x, y)| *x - *y * lambda).collect();
        let res = hm.norm_squared(&r).sqrt() / scale;
        let masses = hm.block_masses(&v);
        let total: T = masses.iter().copied().sum();
        let support = Block::ALL
            .into_iter()
            .find(|b| total - masses[b.index()] <= T::lit(PURITY_TOL) * total)
            .map_or(Support::Mixed, Support::Block);
        result.eigenvalues.push(lambda);
        result.residuals.push(res);
        result.support.push(support);
        result.block_mass.push(masses);
        result.eigenvectors.push(v);
    }
    Ok(result)
}

/// End condition `p ψ - q ∂ₙψ = 0` with `∂ₙ` the outward derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    Dirichlet,
    Neumann,
    /// `∂ₙψ = f ψ`.
    Robin(f64),
}

impl EndCondition {
    fn pq(self) -> (f64, f64) {
        match self {
            EndCondition::Dirichlet => (1.0, 0.0),
            EndCondition::Neumann => (0.0, 1.0),
            EndCondition::Robin(f) => (f, 1.0),
        }
    }
}

/// Root tolerance in `k` (and `κ`) for the reference spectra.
pub const ROOT_TOL: f64 = 1e-12;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign-change roots of `f` on `(0, limit]`, scanned with step `step`.
fn scan_roots(f: &impl Fn(f64) -> f64, step: f64, limit: f64, want: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut x0 = step * 1e-3;
    let mut f0 = f(x0);
    while x0 < limit && roots.len() < want {
        let x1 = x0 + step;
        let f1 = f(x1);
        if f1 == 0.0 {
            roots.push(x1);
            x0 = x1 + step * 1e-3;
            f0 = f(x0);
            continue;
        }
        if (f0 < 0.0) != (f1 < 0.0) {
            roots.push(bisect(f, x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

/// Lowest `count` eigenvalues of `-ψ''` on an interval of length `ell` with
/// the given end conditions, from the transcendental secular equations.
pub fn reference_spectrum(left: EndCondition, right: EndCondition, ell: f64, count: usize) -> Result<Vec<f64>> {
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::InvalidArgument(format!("interval length must be positive, got {ell}")));
    }
    let (pl, ql) = left.pq();
    let (pr, qr) = right.pq();
    let mut out = Vec::new();

    // λ = -κ² < 0
    let g = |k: f64| (ql * qr * k * k + pl * pr) * (k * ell).sinh() - (pr * ql + pl * qr) * k * (k * ell).cosh();
    let kappa_max = 2.0 * (pl.abs() + pr.abs()) + 4.0 / ell;
    let neg = scan_roots(&g, kappa_max / 4096.0, kappa_max, 2);
    out.extend(neg.iter().rev().map(|k| -k * k));

    // λ = 0
    if (pl * (pr * ell - qr) - ql * pr).abs() <= 1e-14 * (1.0 + pl.abs() + pr.abs()) * (1.0 + ell) {
        out.push(0.0);
    }

    // λ = k² > 0
    let f = |k: f64| (ql * qr * k * k - pl * pr) * (k * ell).sin() + (pr * ql + pl * qr) * k * (k * ell).cos();
    let want = count.saturating_sub(out.len());
    let step = std::f64::consts::PI / (64.0 * ell);
    let limit = (want as f64 + 3.0) * std::f64::consts::PI / ell;
    let pos = scan_roots(&f, step, limit, want);
    if pos.len() < want {
        return Err(Error::RootBracketing(format!(
            "found {} of {want} positive roots below k = {limit}",
            pos.len()
        )));
    }
    out.extend(pos.iter().map(|k| k * k));
    out.truncate(count);
    Ok(out)
}

/// Both ends with the same condition.
pub fn reference_spectrum_uniform(c: EndCondition, ell: f64, count: usize) -> Result<Vec<f64>> {
    reference_spectrum(c, c, ell, count)
}
