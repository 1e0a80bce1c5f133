//! Crank–Nicolson evolution and probability bookkeeping.

use crate::assembly::HamiltonianMatrix;
use crate::banded::{TridiagLu, Tridiagonal};
use crate::error::{Error, Result};
use crate::grid::{norm_squared, project_omega, Block, Decomposition, Region, WaveFunction};
use crate::scalar::{czero, Real, C};

/// One row of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord<T: Real> {
    pub t: T,
    /// `‖ψ‖_W`.
    pub norm: T,
    /// `‖P₁ψ‖²_W / ‖ψ‖²_W`, shared interface DOFs counted in `Ω₁`.
    pub p_omega: T,
    /// `⟨ψ, Hψ⟩_W / ‖ψ‖²_W`.
    pub energy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    /// Step 0 (the initial state) followed by one record per step.
    pub records: Vec<StepRecord<T>>,
    /// Final DOF vector.
    pub state: Vec<C<T>>,
}

impl<T: Real> Trajectory<T> {
    /// `max_t |p(t) - p(0)|`.
    pub fn max_probability_drift(&self) -> T {
        let p0 = self.records[0].p_omega;
        self.records.iter().fold(T::zero(), |m, r| m.max((r.p_omega - p0).abs()))
    }

    /// `max_t |‖ψ(t)‖ - ‖ψ(0)‖| / ‖ψ(0)‖`.
    pub fn max_norm_drift(&self) -> T {
        let n0 = self.records[0].norm;
        self.records.iter().fold(T::zero(), |m, r| m.max((r.norm - n0).abs())) / n0
    }

    /// `max_t |E(t) - E(0)| / max(|E(0)|, 1)`.
    pub fn max_energy_drift(&self) -> T {
        let e0 = self.records[0].energy;
        self.records.iter().fold(T::zero(), |m, r| m.max((r.energy - e0).abs())) / e0.abs().max(T::one())
    }
}

/// `‖P_k v‖²_W / ‖v‖²_W` on matrix DOFs (shared DOFs count as `Ω₁`).
pub fn probability_in_dofs<T: Real>(hm: &HamiltonianMatrix<T>, v: &[C<T>], region: Region) -> Result<T> {
    let total = hm.norm_squared(v);
    if !(total > T::zero()) {
        return Err(Error::ZeroVector);
    }
    Ok(hm.region_mass(v, region) / total)
}

/// `‖P_k ψ‖²_W / ‖ψ‖²_W` for a block wave function with the decomposition
/// weights; each interface copy carries its own half-cell weight.
pub fn probability_in<T: Real>(dec: &Decomposition<T>, psi: &WaveFunction<T>, region: Region) -> Result<T> {
    let total = norm_squared(dec, psi)?;
    if !(total > T::zero()) {
        return Err(Error::ZeroVector);
    }
    Ok(norm_squared(dec, &project_omega(psi, region))? / total)
}

fn record<T: Real>(hm: &HamiltonianMatrix<T>, v: &[C<T>], t: T) -> StepRecord<T> {
    let n2 = hm.norm_squared(v);
    StepRecord {
        t,
        norm: n2.sqrt(),
        p_omega: hm.region_mass(v, Region::Omega1) / n2,
        energy: hm.form().value(v) / n2,
    }
}

/// Crank–Nicolson propagator `(I + iτA/2)⁻¹(I - iτA/2)` for a fixed step `τ`.
#[derive(Debug, Clone)]
pub struct CrankNicolson<'a, T: Real> {
    hm: &'a HamiltonianMatrix<T>,
    dt: T,
    explicit: Tridiagonal<T>,
    implicit: TridiagLu<T>,
}

impl<'a, T: Real> CrankNicolson<'a, T> {
    /// `dt` may be negative, which runs time backwards.
    pub fn new(hm: &'a HamiltonianMatrix<T>, dt: T) -> Result<Self> {
        if dt == T::zero() || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be finite and nonzero, got {dt}")));
        }
        let ones = vec![T::one(); hm.dim()];
        let one = C::new(T::one(), T::zero());
        let half = C::new(T::zero(), dt / T::lit(2.0));
        let explicit = hm.matrix().shifted(&ones, one, -half);
        let implicit = TridiagLu::factor(&hm.matrix().shifted(&ones, one, half))?;
        Ok(CrankNicolson { hm, dt, explicit, implicit })
    }

    pub fn step(&self, v: &mut Vec<C<T>>) {
        let mut rhs = self.explicit.matvec(v);
        self.implicit.solve(&mut rhs);
        *v = rhs;
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn operator(&self) -> &HamiltonianMatrix<T> {
        self.hm
    }
}

/// Evolves DOF vector `v0` for `steps` steps of size `dt`.
pub fn evolve_dofs<T: Real>(hm: &HamiltonianMatrix<T>, v0: &[C<T>], dt: T, steps: usize) -> Result<Trajectory<T>> {
    if v0.len() != hm.dim() {
        return Err(Error::ShapeMismatch(format!("state has {} entries, operator has {}", v0.len(), hm.dim())));
    }
    if v0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("initial state has non-finite entries".into()));
    }
    if !(hm.norm_squared(v0) > T::zero()) {
        return Err(Error::ZeroVector);
    }
    let cn = CrankNicolson::new(hm, dt)?;
    let mut v = v0.to_vec();
    let mut records = Vec::with_capacity(steps + 1);
    records.push(record(hm, &v, T::zero()));
    for k in 1..=steps {
        cn.step(&mut v);
        records.push(record(hm, &v, dt * T::from_usize_exact(k)));
    }
    Ok(Trajectory { records, state: v })
}

/// Evolves a wave function; its values on eliminated nodes are ignored.
pub fn crank_nicolson_evolve<T: Real>(
    hm: &HamiltonianMatrix<T>,
    psi0: &WaveFunction<T>,
    dt: T,
    steps: usize,
) -> Result<Trajectory<T>> {
    let v0 = hm.gather(psi0)?;
    evolve_dofs(hm, &v0, dt, steps)
}

/// `exp(-(x - x₀)²/(4σ²) + i k₀ x)` on the blocks of `region`, zero elsewhere.
pub fn gaussian_packet<T: Real>(dec: &Decomposition<T>, x0: T, sigma: T, k0: T, region: Region) -> Result<WaveFunction<T>> {
    if !(sigma > T::zero()) || !x0.is_finite() || !k0.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid packet x0={x0}, sigma={sigma}, k0={k0}")));
    }
    let four = T::lit(4.0);
    Ok(WaveFunction::from_fn(dec, |b: Block, x| {
        if b.region() != region {
            return czero();
        }
        let env = (-(x - x0) * (x - x0) / (four * sigma * sigma)).exp();
        C::new(env * (k0 * x).cos(), env * (k0 * x).sin())
    }))
}
