//! Boundary and coupling conditions at the interface points.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Decomposition, GammaPoint, Side, WaveFunction};
use crate::scalar::{Real, C};

/// Local condition imposed on one side of an interface point.
///
/// Robin reads `γ̂¹ψ = f γ̂⁰ψ` with `γ̂¹` the outward normal derivative;
/// Neumann is `f = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SideCondition<T: Real> {
    Dirichlet,
    Neumann,
    Robin(T),
}

impl<T: Real> SideCondition<T> {
    /// Robin coefficient, with Neumann as `f = 0`; `None` for Dirichlet.
    pub fn robin_coefficient(&self) -> Option<T> {
        match *self {
            SideCondition::Dirichlet => None,
            SideCondition::Neumann => Some(T::zero()),
            SideCondition::Robin(f) => Some(f),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SideCondition::Robin(f) if !f.is_finite() => {
                Err(Error::InvalidBoundary(format!("Robin coefficient must be finite, got {f}")))
            }
            _ => Ok(()),
        }
    }
}

/// Separated conditions, one per side of each interface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatedBc<T: Real> {
    conditions: [[SideCondition<T>; 2]; 2],
}

impl<T: Real> SeparatedBc<T> {
    pub fn new(at_a: (SideCondition<T>, SideCondition<T>), at_b: (SideCondition<T>, SideCondition<T>)) -> Self {
        SeparatedBc { conditions: [[at_a.0, at_a.1], [at_b.0, at_b.1]] }
    }

    pub fn uniform(c: SideCondition<T>) -> Self {
        Self::new((c, c), (c, c))
    }

    pub fn at(&self, p: GammaPoint, side: Side) -> SideCondition<T> {
        self.conditions[p.index()][side.index()]
    }

    pub fn validate(&self) -> Result<()> {
        self.conditions.iter().flatten().try_for_each(SideCondition::validate)
    }

    /// Random element of the discrete operator domain.
    ///
    /// Interior values are uniform in the unit square. At a Dirichlet side
    /// the interface copy is zero. At a Neumann/Robin side the first four
    /// nodes lie on a quadratic `c₀ + c₁t + c₂t²` (t the inward distance)
    /// with `c₁ = -f c₀`, so the one-sided traces satisfy the condition
    /// exactly and the ghost-eliminated row reproduces the one-sided
    /// second derivative.
    pub fn sample_member<R: Rng + ?Sized>(
        &self,
        dec: &Decomposition<T>,
        rng: &mut R,
    ) -> Result<WaveFunction<T>> {
        let mut uni = || C::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)));
        let mut psi = WaveFunction::from_fn(dec, |_, _| uni());
        for p in GammaPoint::ALL {
            for side in Side::ALL {
                let block = dec.block_at(p, side);
                let len = dec.subgrid(block).len();
                let (local, inward) = dec.gamma_local(p, side);
                let values = psi.block_mut(block);
                match self.at(p, side).robin_coefficient() {
                    None => values[local] = C::new(T::zero(), T::zero()),
                    Some(f) => {
                        let reach = if block == crate::grid::Block::Interior { 8 } else { 4 };
                        if len < reach {
                            return Err(Error::Resolution(format!(
                                "{} needs {reach} nodes to host a domain sample",
                                block.label()
                            )));
                        }
                        let c0 = C::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)));
                        let c2 = C::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)));
                        let c1 = -c0 * f;
                        let h = dec.h();
                        for k in 0..4isize {
                            let t = T::from_isize(k).unwrap() * h;
                            let idx = (local as isize + k * inward) as usize;
                            values[idx] = c0 + c1 * t + c2 * (t * t);
                        }
                    }
                }
            }
        }
        Ok(psi)
    }
}

/// Condition at one interface point for a possibly transversal operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointCoupling<T: Real> {
    Separated { side1: SideCondition<T>, side2: SideCondition<T> },
    /// Plain continuity of value and derivative.
    Transparent,
    /// Continuity plus a derivative jump `α ψ(x)`.
    Delta(T),
    /// Derivative continuity plus a value jump `β ψ'(x)`.
    DeltaPrime(T),
}

/// Coupling conditions at both interface points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSpec<T: Real> {
    pub at_a: PointCoupling<T>,
    pub at_b: PointCoupling<T>,
}

impl<T: Real> CouplingSpec<T> {
    pub fn new(at_a: PointCoupling<T>, at_b: PointCoupling<T>) -> Self {
        CouplingSpec { at_a, at_b }
    }

    pub fn uniform(c: PointCoupling<T>) -> Self {
        Self::new(c, c)
    }

    pub fn separated(bc: &SeparatedBc<T>) -> Self {
        let at = |p| PointCoupling::Separated { side1: bc.at(p, Side::One), side2: bc.at(p, Side::Two) };
        Self::new(at(GammaPoint::A), at(GammaPoint::B))
    }

    pub fn at(&self, p: GammaPoint) -> PointCoupling<T> {
        match p {
            GammaPoint::A => self.at_a,
            GammaPoint::B => self.at_b,
        }
    }

    /// The separated conditions when every point is separated.
    pub fn as_separated(&self) -> Option<SeparatedBc<T>> {
        match (self.at_a, self.at_b) {
            (
                PointCoupling::Separated { side1: a1, side2: a2 },
                PointCoupling::Separated { side1: b1, side2: b2 },
            ) => Some(SeparatedBc::new((a1, a2), (b1, b2))),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in GammaPoint::ALL {
            match self.at(p) {
                PointCoupling::Separated { side1, side2 } => {
                    side1.validate()?;
                    side2.validate()?;
                }
                PointCoupling::Transparent => {}
                PointCoupling::Delta(alpha) if !alpha.is_finite() => {
                    return Err(Error::InvalidCoupling(format!("delta strength must be finite, got {alpha}")));
                }
                PointCoupling::DeltaPrime(beta) if beta == T::zero() || !beta.is_finite() => {
                    return Err(Error::InvalidCoupling(format!(
                        "delta-prime strength must be finite and nonzero, got {beta}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
