//! Distributional action of `-Δ + V` on functions glued from the two
//! subdomains, and the singular boundary potentials that turn it into a
//! confining self-adjoint operator.
//!
//! Singular parts are kept symbolically as coefficients of `δ_x` and of the
//! oriented dipole layer `∇·(n δ_x)` at each interface point. A function lies
//! in the operator domain exactly when those coefficients vanish.

use crate::bc::{SeparatedBc, SideCondition};
use crate::error::{Error, Result};
use crate::grid::{Block, Decomposition, GammaPoint, Side, WaveFunction};
use crate::scalar::{czero, Real, C};
use crate::traces::{interface_functionals, InterfaceValues, RobinData};

/// Regular grid function plus point masses and dipole layers on `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularFunction<T: Real> {
    pub regular: WaveFunction<T>,
    delta: [C<T>; 2],
    dipole: [C<T>; 2],
    normals: [T; 2],
}

impl<T: Real> SingularFunction<T> {
    fn new(dec: &Decomposition<T>, regular: WaveFunction<T>, delta: [C<T>; 2], dipole: [C<T>; 2]) -> Self {
        let normals = [dec.normal(GammaPoint::A), dec.normal(GammaPoint::B)];
        SingularFunction { regular, delta, dipole, normals }
    }

    /// Coefficient of `δ_x`.
    pub fn delta_coeff(&self, p: GammaPoint) -> C<T> {
        self.delta[p.index()]
    }

    /// Coefficient of `∇·(n δ_x)`.
    pub fn dipole_coeff(&self, p: GammaPoint) -> C<T> {
        self.dipole[p.index()]
    }

    /// Coefficient of the unoriented `δ'_x`, i.e. `n(x)` times the dipole
    /// coefficient. Changes sign under reflection.
    pub fn raw_dipole_coeff(&self, p: GammaPoint) -> C<T> {
        self.dipole[p.index()] * self.normals[p.index()]
    }

    /// Largest singular coefficient over `Γ`.
    pub fn singular_magnitude(&self) -> T {
        self.delta.iter().chain(&self.dipole).fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `‖ψ‖_∞ + h ‖regular‖_∞`, the size singular coefficients are measured against.
    pub fn scale(&self, dec: &Decomposition<T>, psi: &WaveFunction<T>) -> T {
        psi.max_abs() + dec.h() * self.regular.max_abs()
    }

    pub fn is_regular(&self, dec: &Decomposition<T>, psi: &WaveFunction<T>, tol: T) -> bool {
        self.singular_magnitude() <= tol * self.scale(dec, psi)
    }

    fn plus(&self, other: &Self) -> Self {
        let one = C::new(T::one(), T::zero());
        SingularFunction {
            regular: self.regular.axpy(one, &other.regular),
            delta: [self.delta[0] + other.delta[0], self.delta[1] + other.delta[1]],
            dipole: [self.dipole[0] + other.dipole[0], self.dipole[1] + other.dipole[1]],
            normals: self.normals,
        }
    }
}

/// Bounded real potential, evaluated at node coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec<T: Real> {
    Zero,
    Constant(T),
    /// `ω² (x - x₀)²`, whose full-line spectrum is `ω (2n + 1)`.
    Harmonic { omega: T, center: T },
    /// Values on the global nodes `0..=N`.
    Table(Vec<T>),
}

impl<T: Real> PotentialSpec<T> {
    pub fn validate(&self, dec: &Decomposition<T>) -> Result<()> {
        let finite = |x: &T| x.is_finite();
        let ok = match self {
            PotentialSpec::Zero => true,
            PotentialSpec::Constant(c) => finite(c),
            PotentialSpec::Harmonic { omega, center } => finite(omega) && finite(center),
            PotentialSpec::Table(v) => {
                if v.len() != dec.node_count() + 1 {
                    return Err(Error::ShapeMismatch(format!(
                        "potential table has {} values, expected {}",
                        v.len(),
                        dec.node_count() + 1
                    )));
                }
                v.iter().all(finite)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("potential must be finite".into()))
        }
    }

    /// Value at global node `node`.
    pub fn at_node(&self, dec: &Decomposition<T>, node: usize) -> T {
        match self {
            PotentialSpec::Zero => T::zero(),
            PotentialSpec::Constant(c) => *c,
            PotentialSpec::Harmonic { omega, center } => {
                let d = dec.x(node) - *center;
                *omega * *omega * d * d
            }
            PotentialSpec::Table(v) => v[node],
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PotentialSpec::Zero)
    }
}

/// Linear functional `F ψ_k = p γ̂⁰ψ_k + q γ̂¹ψ_k` on one side of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceFunctional<T: Real> {
    pub value: C<T>,
    pub normal: C<T>,
}

impl<T: Real> TraceFunctional<T> {
    pub fn new(value: C<T>, normal: C<T>) -> Self {
        TraceFunctional { value, normal }
    }

    /// `F^D = γ̂⁰`
    pub fn dirichlet() -> Self {
        Self::new(C::new(T::one(), T::zero()), czero())
    }

    /// `F^N = γ̂¹`
    pub fn neumann() -> Self {
        Self::new(czero(), C::new(T::one(), T::zero()))
    }

    /// `F^R = γ̂¹ - f γ̂⁰`
    pub fn robin(f: T) -> Self {
        Self::new(C::new(-f, T::zero()), C::new(T::one(), T::zero()))
    }

    pub fn for_condition(c: SideCondition<T>) -> Self {
        match c {
            SideCondition::Dirichlet => Self::dirichlet(),
            SideCondition::Neumann => Self::neumann(),
            SideCondition::Robin(f) => Self::robin(f),
        }
    }

    fn eval(&self, v: &InterfaceValues<T>, side: Side) -> C<T> {
        self.value * v.g0(side) + self.normal * v.g1(side)
    }
}

/// Which singular boundary potential to add to `-Δ + V`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryPotentialSpec<T: Real> {
    Dirichlet,
    Neumann,
    Robin(RobinData<T>),
    /// `F ψ = c₁(F₁ψ₁ + F₂ψ₂) δ_Γ + c₂ ∇·((F₁ψ₁ - F₂ψ₂) n δ_Γ)` with one
    /// functional per point and side (indexed `[point][side]`).
    General { functionals: [[TraceFunctional<T>; 2]; 2], c1: T, c2: T },
}

impl<T: Real> BoundaryPotentialSpec<T> {
    /// Potential whose domain is the separated operator `bc`. Uniform
    /// conditions map to the dedicated Dirichlet/Neumann/Robin forms,
    /// anything mixed to the general form with `c₁ = c₂ = 1`.
    pub fn from_separated(bc: &SeparatedBc<T>) -> Self {
        let all: Vec<SideCondition<T>> =
            GammaPoint::ALL.iter().flat_map(|p| Side::ALL.map(|s| bc.at(*p, s))).collect();
        if all.iter().all(|c| *c == SideCondition::Dirichlet) {
            return BoundaryPotentialSpec::Dirichlet;
        }
        if all.iter().all(|c| *c == SideCondition::Neumann) {
            return BoundaryPotentialSpec::Neumann;
        }
        if all.iter().all(|c| !matches!(c, SideCondition::Dirichlet)) {
            let f = |p, s| bc.at(p, s).robin_coefficient().unwrap();
            return BoundaryPotentialSpec::Robin(RobinData::new(
                (f(GammaPoint::A, Side::One), f(GammaPoint::A, Side::Two)),
                (f(GammaPoint::B, Side::One), f(GammaPoint::B, Side::Two)),
            ));
        }
        let fun = |p| Side::ALL.map(|s| TraceFunctional::for_condition(bc.at(p, s)));
        BoundaryPotentialSpec::General {
            functionals: [fun(GammaPoint::A), fun(GammaPoint::B)],
            c1: T::one(),
            c2: T::one(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let BoundaryPotentialSpec::General { c1, c2, .. } = self {
            if *c1 * *c2 == T::zero() {
                return Err(Error::DegenerateWeights { c1: c1.to_f64_lossy(), c2: c2.to_f64_lossy() });
            }
        }
        Ok(())
    }

    fn robin(&self) -> Option<&RobinData<T>> {
        match self {
            BoundaryPotentialSpec::Robin(r) => Some(r),
            _ => None,
        }
    }
}

fn second_difference<T: Real>(
    dec: &Decomposition<T>,
    psi: &WaveFunction<T>,
    block: Block,
    local: usize,
) -> Result<C<T>> {
    let sg = dec.subgrid(block);
    let values = psi.block(block);
    let i = local as isize;
    let ih2 = T::one() / (dec.h() * dec.h());
    match (sg.read(values, i - 1), sg.read(values, i + 1)) {
        (Some(l), Some(r)) => Ok((values[local] * T::lit(2.0) - l - r) * ih2),
        (left, right) => {
            // interface endpoint: one-sided 4-point stencil, exact on cubics
            let dir = if left.is_none() { 1 } else { -1 };
            debug_assert!(left.is_some() || right.is_some());
            let at = |k: isize| {
                sg.read(values, i + k * dir).ok_or_else(|| {
                    Error::Resolution(format!("one-sided stencil needs 4 nodes inside {}", block.label()))
                })
            };
            let (p0, p1, p2, p3) = (at(0)?, at(1)?, at(2)?, at(3)?);
            Ok(-(p0 * T::lit(2.0) - p1 * T::lit(5.0) + p2 * T::lit(4.0) - p3) * ih2)
        }
    }
}

/// `S₁* ⊕ S₂*`: `-ψ'' + Vψ` computed separately on every subgrid, never
/// reading across `Γ`.
pub fn apply_maximal<T: Real>(
    dec: &Decomposition<T>,
    psi: &WaveFunction<T>,
    potential: &PotentialSpec<T>,
) -> Result<WaveFunction<T>> {
    psi.check(dec)?;
    potential.validate(dec)?;
    let mut out = WaveFunction::zeros(dec);
    for block in Block::ALL {
        let first = dec.subgrid(block).first;
        for k in 0..dec.subgrid(block).len() {
            let v = potential.at_node(dec, first + k);
            let value = second_difference(dec, psi, block, k)? + psi.block(block)[k] * v;
            out.block_mut(block)[k] = value;
        }
    }
    Ok(out)
}

/// `-Δψ + Vψ = S*ψ + j¹ψ δ_Γ + ∇·(j⁰ψ n δ_Γ)` for glued `ψ`.
pub fn apply_h0_distributional<T: Real>(
    dec: &Decomposition<T>,
    psi: &WaveFunction<T>,
    potential: &PotentialSpec<T>,
) -> Result<SingularFunction<T>> {
    let regular = apply_maximal(dec, psi, potential)?;
    let data = interface_functionals(dec, psi, None)?;
    let delta = GammaPoint::ALL.map(|p| data.at(p).j1);
    let dipole = GammaPoint::ALL.map(|p| data.at(p).j0);
    Ok(SingularFunction::new(dec, regular, delta, dipole))
}

/// The singular boundary potential `Bψ` (regular part zero).
pub fn boundary_potential<T: Real>(
    dec: &Decomposition<T>,
    psi: &WaveFunction<T>,
    spec: &BoundaryPotentialSpec<T>,
) -> Result<SingularFunction<T>> {
    spec.validate()?;
    let data = interface_functionals(dec, psi, spec.robin())?;
    let mut delta = [czero(); 2];
    let mut dipole = [czero(); 2];
    for p in GammaPoint::ALL {
        let v = data.at(p);
        let (d, q) = match spec {
            BoundaryPotentialSpec::Dirichlet => (v.mu0 - v.j1, czero()),
            BoundaryPotentialSpec::Neumann => (czero(), v.mu1 - v.j0),
            BoundaryPotentialSpec::Robin(_) => {
                let (j0f, mu0f) = (v.j0f.ok_or(Error::MissingRobinData)?, v.mu0f.ok_or(Error::MissingRobinData)?);
                (-j0f, v.mu1 - mu0f - v.j0)
            }
            BoundaryPotentialSpec::General { functionals, c1, c2 } => {
                let [f1, f2] = functionals[p.index()];
                let (a, b) = (f1.eval(v, Side::One), f2.eval(v, Side::Two));
                ((a + b) * *c1 - v.j1, (a - b) * *c2 - v.j0)
            }
        };
        delta[p.index()] = d;
        dipole[p.index()] = q;
    }
    Ok(SingularFunction::new(dec, WaveFunction::zeros(dec), delta, dipole))
}

/// `Hψ = -Δψ + Vψ + Bψ`.
pub fn apply_full<T: Real>(
    dec: &Decomposition<T>,
    psi: &WaveFunction<T>,
    potential: &PotentialSpec<T>,
    spec: &BoundaryPotentialSpec<T>,
) -> Result<SingularFunction<T>> {
    let h0 = apply_h0_distributional(dec, psi, potential)?;
    let b = boundary_potential(dec, psi, spec)?;
    Ok(h0.plus(&b))
}

/// Offending interface point of a failed domain test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainWitness<T: Real> {
    pub point: GammaPoint,
    pub delta: C<T>,
    pub dipole: C<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainCheck<T: Real> {
    pub inside: bool,
    /// Largest singular coefficient relative to [`SingularFunction::scale`].
    pub relative_singular: T,
    pub witness: Option<DomainWitness<T>>,
}

/// Default relative tolerance for [`in_domain`].
pub const DEFAULT_DOMAIN_TOL: f64 = 1e-10;

/// `ψ ∈ D(H)` iff `Hψ` has no singular part.
pub fn in_domain<T: Real>(
    dec: &Decomposition<T>,
    psi: &WaveFunction<T>,
    potential: &PotentialSpec<T>,
    spec: &BoundaryPotentialSpec<T>,
    tol: T,
) -> Result<DomainCheck<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let full = apply_full(dec, psi, potential, spec)?;
    let scale = full.scale(dec, psi);
    let rel = if scale > T::zero() { full.singular_magnitude() / scale } else { full.singular_magnitude() };
    let inside = full.is_regular(dec, psi, tol);
    let witness = if inside {
        None
    } else {
        let worst = GammaPoint::ALL
            .into_iter()
            .max_by(|p, q| {
                let m = |x: &GammaPoint| full.delta_coeff(*x).norm().max(full.dipole_coeff(*x).norm());
                m(p).partial_cmp(&m(q)).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        Some(DomainWitness { point: worst, delta: full.delta_coeff(worst), dipole: full.dipole_coeff(worst) })
    };
    Ok(DomainCheck { inside, relative_singular: rel, witness })
}
