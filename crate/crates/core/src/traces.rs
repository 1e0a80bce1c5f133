//! Discrete trace operators and the interface jump/mean functionals.
//!
//! `γ̂⁰` is the nodal readout of a side's own copy of an interface node.
//! `γ̂¹` is the outward normal derivative from the three-point one-sided
//! stencil, exact on quadratics.

use crate::error::{Error, Result};
use crate::grid::{Decomposition, GammaPoint, Side, WaveFunction};
use crate::scalar::{Real, C};

/// Real Robin coefficients `f₁, f₂` (side 1, side 2) at each interface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinData<T: Real> {
    coeffs: [[T; 2]; 2],
}

impl<T: Real> RobinData<T> {
    pub fn new(at_a: (T, T), at_b: (T, T)) -> Self {
        RobinData { coeffs: [[at_a.0, at_a.1], [at_b.0, at_b.1]] }
    }

    /// Same `(f₁, f₂)` at both interface points.
    pub fn uniform(f1: T, f2: T) -> Self {
        Self::new((f1, f2), (f1, f2))
    }

    pub fn coefficient(&self, p: GammaPoint, side: Side) -> T {
        self.coeffs[p.index()][side.index()]
    }
}

/// Traces and interface functionals at a single interface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceValues<T: Real> {
    pub g0_side1: C<T>,
    pub g0_side2: C<T>,
    pub g1_side1: C<T>,
    pub g1_side2: C<T>,
    /// `γ̂⁰₁ - γ̂⁰₂`
    pub j0: C<T>,
    /// `γ̂¹₁ + γ̂¹₂`
    pub j1: C<T>,
    /// `(γ̂⁰₁ + γ̂⁰₂) / 2`
    pub mu0: C<T>,
    /// `(γ̂¹₁ - γ̂¹₂) / 2`
    pub mu1: C<T>,
    /// `f₁ γ̂⁰₁ + f₂ γ̂⁰₂`, when Robin data was supplied.
    pub j0f: Option<C<T>>,
    /// `(f₁ γ̂⁰₁ - f₂ γ̂⁰₂) / 2`, when Robin data was supplied.
    pub mu0f: Option<C<T>>,
}

impl<T: Real> InterfaceValues<T> {
    fn from_traces(g0: [C<T>; 2], g1: [C<T>; 2], f: Option<[T; 2]>) -> Self {
        let half = T::lit(0.5);
        InterfaceValues {
            g0_side1: g0[0],
            g0_side2: g0[1],
            g1_side1: g1[0],
            g1_side2: g1[1],
            j0: g0[0] - g0[1],
            j1: g1[0] + g1[1],
            mu0: (g0[0] + g0[1]) * half,
            mu1: (g1[0] - g1[1]) * half,
            j0f: f.map(|f| g0[0] * f[0] + g0[1] * f[1]),
            mu0f: f.map(|f| (g0[0] * f[0] - g0[1] * f[1]) * half),
        }
    }

    pub fn g0(&self, side: Side) -> C<T> {
        match side {
            Side::One => self.g0_side1,
            Side::Two => self.g0_side2,
        }
    }

    pub fn g1(&self, side: Side) -> C<T> {
        match side {
            Side::One => self.g1_side1,
            Side::Two => self.g1_side2,
        }
    }
}

/// Interface functionals at both points of `Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceData<T: Real> {
    points: [InterfaceValues<T>; 2],
}

impl<T: Real> InterfaceData<T> {
    pub fn at(&self, p: GammaPoint) -> &InterfaceValues<T> {
        &self.points[p.index()]
    }
}

/// `γ̂⁰`: the value of `side`'s own copy of the interface node `p`.
pub fn trace_value<T: Real>(
    dec: &Decomposition<T>,
    psi: &WaveFunction<T>,
    p: GammaPoint,
    side: Side,
) -> Result<C<T>> {
    psi.check(dec)?;
    let (local, _) = dec.gamma_local(p, side);
    Ok(psi.block(dec.block_at(p, side))[local])
}

/// [`trace_value`] addressed by coordinate.
pub fn trace_value_at<T: Real>(
    dec: &Decomposition<T>,
    psi: &WaveFunction<T>,
    x: T,
    side: Side,
) -> Result<C<T>> {
    trace_value(dec, psi, dec.gamma_point_at(x)?, side)
}

/// `γ̂¹`: outward normal derivative `n_k (-3ψ₀ + 4ψ₁ - ψ₂) / (2h s)` with `s`
/// the inward direction along x.
pub fn trace_normal_derivative<T: Real>(
    dec: &Decomposition<T>,
    psi: &WaveFunction<T>,
    p: GammaPoint,
    side: Side,
) -> Result<C<T>> {
    psi.check(dec)?;
    let block = dec.block_at(p, side);
    let sg = dec.subgrid(block);
    let values = psi.block(block);
    let (local, inward) = dec.gamma_local(p, side);
    let at = |k: isize| {
        sg.read(values, local as isize + k * inward).ok_or_else(|| {
            Error::Resolution(format!(
                "normal derivative at {} needs 3 nodes inside {}",
                p.label(),
                block.label()
            ))
        })
    };
    let (p0, p1, p2) = (at(0)?, at(1)?, at(2)?);
    let s = if inward > 0 { T::one() } else { -T::one() };
    let n = dec.side_normal(p, side);
    let diff = p1 * T::lit(4.0) - p0 * T::lit(3.0) - p2;
    Ok(diff * (n / (T::lit(2.0) * dec.h() * s)))
}

/// Both traces on both sides of every interface point, combined into the
/// jump and mean functionals.
pub fn interface_functionals<T: Real>(
    dec: &Decomposition<T>,
    psi: &WaveFunction<T>,
    robin: Option<&RobinData<T>>,
) -> Result<InterfaceData<T>> {
    let mut points = Vec::with_capacity(2);
    for p in GammaPoint::ALL {
        let g0 = [trace_value(dec, psi, p, Side::One)?, trace_value(dec, psi, p, Side::Two)?];
        let g1 = [
            trace_normal_derivative(dec, psi, p, Side::One)?,
            trace_normal_derivative(dec, psi, p, Side::Two)?,
        ];
        let f = robin.map(|r| [r.coefficient(p, Side::One), r.coefficient(p, Side::Two)]);
        points.push(InterfaceValues::from_traces(g0, g1, f));
    }
    Ok(InterfaceData { points: [points[0], points[1]] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Block;
    use crate::scalar::creal;
    use proptest::prelude::*;

    fn indicator(dec: &Decomposition<f64>, inside: f64, outside: f64) -> WaveFunction<f64> {
        WaveFunction::from_fn(dec, |b, _| creal(if b == Block::Interior { inside } else { outside }))
    }

    #[test]
    fn value_trace_reads_owned_copy() {
        let d = Decomposition::new(1.0, 8, 0.25, 0.75).unwrap();
        let psi = WaveFunction::from_fn(&d, |b, x| creal(if b == Block::Interior { x } else { 0.0 }));
        assert_eq!(trace_value_at(&d, &psi, 0.25, Side::One).unwrap(), creal(0.25));
        assert_eq!(trace_value_at(&d, &psi, 0.25, Side::Two).unwrap(), creal(0.0));
        assert!(matches!(trace_value_at(&d, &psi, 0.5, Side::One), Err(Error::NotInterfacePoint(_))));

        let ind = indicator(&d, 1.0, 0.0);
        assert_eq!(trace_value(&d, &ind, GammaPoint::A, Side::One).unwrap(), creal(1.0));
        assert_eq!(trace_value(&d, &ind, GammaPoint::A, Side::Two).unwrap(), creal(0.0));

        let (a, b) = (d.a(), d.b());
        let bump = WaveFunction::from_fn(&d, |blk, x| {
            creal(if blk == Block::Interior { (std::f64::consts::PI * (x - a) / (b - a)).sin() } else { 0.0 })
        });
        for p in GammaPoint::ALL {
            assert!(trace_value(&d, &bump, p, Side::One).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn normal_derivative_exact_on_linear() {
        // h = 0.25 with a = 0.75 so every subgrid has room for the stencil.
        let d = Decomposition::new(2.0, 8, 0.75, 1.25).unwrap();
        let psi = WaveFunction::sample(&d, |x| creal(x));
        let g = trace_normal_derivative(&d, &psi, GammaPoint::A, Side::One).unwrap();
        assert!((g - creal(-1.0)).norm() < 1e-14);
        let g = trace_normal_derivative(&d, &psi, GammaPoint::A, Side::Two).unwrap();
        assert!((g - creal(1.0)).norm() < 1e-14);
        let g = trace_normal_derivative(&d, &psi, GammaPoint::B, Side::One).unwrap();
        assert!((g - creal(1.0)).norm() < 1e-14);
    }

    #[test]
    fn normal_derivative_exact_on_quadratic_with_zero_slope() {
        let d = Decomposition::new(2.0, 16, 0.5, 1.5).unwrap();
        let a = d.a();
        let psi = WaveFunction::sample(&d, |x| creal((x - a) * (x - a)));
        for side in Side::ALL {
            let g = trace_normal_derivative(&d, &psi, GammaPoint::A, side).unwrap();
            assert!(g.norm() < 1e-13, "{g}");
        }
        let c = WaveFunction::sample(&d, |_| creal(3.0));
        for p in GammaPoint::ALL {
            for side in Side::ALL {
                assert!(trace_normal_derivative(&d, &c, p, side).unwrap().norm() < 1e-13);
            }
        }
    }

    #[test]
    fn normal_derivative_uses_wall_but_no_further() {
        // left exterior block holds two nodes; the wall supplies the third.
        let d = Decomposition::new(1.0, 8, 0.25, 0.75).unwrap();
        let psi = WaveFunction::sample(&d, |x| creal(x));
        let g = trace_normal_derivative(&d, &psi, GammaPoint::A, Side::Two).unwrap();
        assert!((g - creal(1.0)).norm() < 1e-14);
        // interior block of width 2h cannot host the 3-point stencil
        let d = Decomposition::new(1.0, 8, 0.25, 0.375).unwrap();
        let psi = WaveFunction::sample(&d, |x| creal(x));
        assert!(matches!(
            trace_normal_derivative(&d, &psi, GammaPoint::A, Side::One),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn functionals_of_indicators() {
        let d = Decomposition::new(1.0, 16, 0.25, 0.75).unwrap();
        let data = interface_functionals(&d, &indicator(&d, 1.0, 0.0), None).unwrap();
        for p in GammaPoint::ALL {
            let v = data.at(p);
            assert_eq!((v.j0, v.mu0, v.j1, v.mu1), (creal(1.0), creal(0.5), creal(0.0), creal(0.0)));
            assert!(v.j0f.is_none());
        }
        let data = interface_functionals(&d, &indicator(&d, 0.0, 1.0), None).unwrap();
        for p in GammaPoint::ALL {
            let v = data.at(p);
            assert_eq!((v.j0, v.mu0, v.j1, v.mu1), (creal(-1.0), creal(0.5), creal(0.0), creal(0.0)));
        }
    }

    #[test]
    fn robin_functionals() {
        let d = Decomposition::new(1.0, 16, 0.25, 0.75).unwrap();
        let robin = RobinData::new((2.0, -1.0), (0.5, 3.0));
        let psi = WaveFunction::from_fn(&d, |b, x| creal(if b == Block::Interior { 1.0 + x } else { 2.0 - x }));
        let data = interface_functionals(&d, &psi, Some(&robin)).unwrap();
        for p in GammaPoint::ALL {
            let v = data.at(p);
            let (f1, f2) = (robin.coefficient(p, Side::One), robin.coefficient(p, Side::Two));
            assert_eq!(v.j0f.unwrap(), v.g0_side1 * f1 + v.g0_side2 * f2);
            assert_eq!(v.mu0f.unwrap(), (v.g0_side1 * f1 - v.g0_side2 * f2) * 0.5);
        }
    }

    #[test]
    fn smooth_function_has_no_value_jump_and_second_order_derivative_jump() {
        // Oracle: the global function is C^∞, so j1 is pure stencil error.
        let mut errs = Vec::new();
        for n in [64usize, 128, 256, 512] {
            let d = Decomposition::new(1.0, n, 0.25, 0.75).unwrap();
            let psi = WaveFunction::sample(&d, |x| creal((std::f64::consts::PI * x).sin()));
            let data = interface_functionals(&d, &psi, None).unwrap();
            let mut e: f64 = 0.0;
            for p in GammaPoint::ALL {
                assert_eq!(data.at(p).j0, creal(0.0));
                e = e.max(data.at(p).j1.norm());
            }
            errs.push(e);
        }
        // the two one-sided stencil errors cancel at leading order, so the
        // observed rate is 3; the contract is the O(h²) bound
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate > 1.9, "rate {rate}");
        }
    }

    proptest! {
        #[test]
        fn functionals_are_linear(seed in proptest::collection::vec(-1.0f64..1.0, 64), s in -3.0f64..3.0) {
            let d = Decomposition::new(1.0, 16, 0.25, 0.75).unwrap();
            let mut it = seed.iter().cycle();
            let mut next = || C::new(*it.next().unwrap(), *it.next().unwrap());
            let u = WaveFunction::from_fn(&d, |_, _| next());
            let v = WaveFunction::from_fn(&d, |_, _| next());
            let robin = RobinData::uniform(1.5, -0.5);
            let w = u.axpy(C::new(s, 0.25), &v);
            let (du, dv, dw) = (
                interface_functionals(&d, &u, Some(&robin)).unwrap(),
                interface_functionals(&d, &v, Some(&robin)).unwrap(),
                interface_functionals(&d, &w, Some(&robin)).unwrap(),
            );
            let k = C::new(s, 0.25);
            for p in GammaPoint::ALL {
                let (a, b, c) = (du.at(p), dv.at(p), dw.at(p));
                let pairs = [
                    (c.j0, a.j0 + k * b.j0), (c.j1, a.j1 + k * b.j1),
                    (c.mu0, a.mu0 + k * b.mu0), (c.mu1, a.mu1 + k * b.mu1),
                    (c.j0f.unwrap(), a.j0f.unwrap() + k * b.j0f.unwrap()),
                    (c.mu0f.unwrap(), a.mu0f.unwrap() + k * b.mu0f.unwrap()),
                ];
                for (lhs, rhs) in pairs {
                    let scale = 1.0 + lhs.norm().max(rhs.norm()) + a.g1_side1.norm().max(b.g1_side1.norm()) * 4.0;
                    prop_assert!((lhs - rhs).norm() <= 1e-13 * scale);
                }
            }
        }
    }
}
