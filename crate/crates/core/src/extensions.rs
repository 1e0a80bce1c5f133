//! Deficiency indices of the minimal operators and classification of
//! extensions as separating or transversal.
//!
//! `m_±` is the nullity of the interior-row operator `ψ ↦ (-Δ_h + V ∓ i)ψ`
//! evaluated on every node that has both neighbors in the component. Fixed
//! ends are pinned to zero and dropped from the unknowns; free ends stay as
//! unknowns without a row of their own.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::bc::{CouplingSpec, PointCoupling};
use crate::distributional::PotentialSpec;
use crate::error::{Error, Result};
use crate::grid::{Block, Decomposition, GammaPoint};
use crate::scalar::{Real, C};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndStatus {
    /// Pinned to zero (a hard wall).
    Fixed,
    /// Left open (an interface point).
    Free,
}

/// Run of global nodes `first..=last` with the status of each end node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub first: usize,
    pub last: usize,
    pub lower: EndStatus,
    pub upper: EndStatus,
}

impl Component {
    /// The component carried by `block`; hard walls become fixed end nodes.
    pub fn of_block<T: Real>(dec: &Decomposition<T>, block: Block) -> Self {
        let sg = dec.subgrid(block);
        let (first, lower) = if sg.wall_below { (sg.first - 1, EndStatus::Fixed) } else { (sg.first, EndStatus::Free) };
        let (last, upper) = if sg.wall_above { (sg.last + 1, EndStatus::Fixed) } else { (sg.last, EndStatus::Free) };
        Component { first, last, lower, upper }
    }

    pub fn node_count(&self) -> usize {
        self.last - self.first + 1
    }

    fn unknowns(&self) -> std::ops::RangeInclusive<usize> {
        let lo = self.first + usize::from(self.lower == EndStatus::Fixed);
        let hi = self.last - usize::from(self.upper == EndStatus::Fixed);
        lo..=hi
    }

    /// Distance in nodes from `node` to the nearest free end, if any.
    pub fn distance_to_free_end(&self, node: usize) -> Option<usize> {
        let lo = (self.lower == EndStatus::Free).then(|| node - self.first);
        let hi = (self.upper == EndStatus::Free).then(|| self.last - node);
        match (lo, hi) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        }
    }
}

/// `(m₊, m₋)` with orthonormal (Euclidean) bases of the null spaces, indexed
/// by the component's unknown nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Deficiency<T: Real> {
    pub m_plus: usize,
    pub m_minus: usize,
    /// Global node index of each basis entry.
    pub nodes: Vec<usize>,
    pub basis_plus: Vec<Vec<C<T>>>,
    pub basis_minus: Vec<Vec<C<T>>>,
}

fn interior_rows<T: Real>(
    dec: &Decomposition<T>,
    comps: &[Component],
    potential: &PotentialSpec<T>,
    sign: f64,
) -> (DMatrix<Complex<f64>>, Vec<usize>) {
    let h = dec.h().to_f64_lossy();
    let ih2 = 1.0 / (h * h);
    let mut nodes = Vec::new();
    let mut offsets = Vec::new();
    for c in comps {
        offsets.push(nodes.len());
        nodes.extend(c.unknowns());
    }
    let rows: usize = comps.iter().map(|c| c.node_count() - 2).sum();
    let cols = nodes.len();
    // padded to square so the SVD returns a complete right basis
    let dim = rows.max(cols);
    let mut m = DMatrix::<Complex<f64>>::zeros(dim, cols);
    let mut r = 0;
    for (c, off) in comps.iter().zip(offsets) {
        let start = *c.unknowns().start();
        let col = |node: usize| c.unknowns().contains(&node).then(|| off + node - start);
        for node in c.first + 1..c.last {
            let v = potential.at_node(dec, node).to_f64_lossy();
            if let Some(j) = col(node - 1) {
                m[(r, j)] = Complex::new(-ih2, 0.0);
            }
            if let Some(j) = col(node) {
                m[(r, j)] = Complex::new(2.0 * ih2 + v, -sign);
            }
            if let Some(j) = col(node + 1) {
                m[(r, j)] = Complex::new(-ih2, 0.0);
            }
            r += 1;
        }
    }
    (m, nodes)
}

fn null_space<T: Real>(m: DMatrix<Complex<f64>>) -> Result<Vec<Vec<C<T>>>> {
    let cols = m.ncols();
    let svd = m.try_svd(false, true, f64::EPSILON, 10_000).ok_or(Error::Convergence { iterations: 10_000 })?;
    let v_t = svd.v_t.expect("right vectors requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, s| a.max(*s));
    let mut basis = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= RANK_TOL * smax {
            basis.push((0..cols).map(|j| {
                let z = v_t[(k, j)].conj();
                C::new(T::lit(z.re), T::lit(z.im))
            }).collect());
        }
    }
    Ok(basis)
}

fn deficiency_of<T: Real>(
    dec: &Decomposition<T>,
    comps: &[Component],
    potential: &PotentialSpec<T>,
) -> Result<Deficiency<T>> {
    potential.validate(dec)?;
    for c in comps {
        if c.last < c.first + 3 || c.last > dec.node_count() {
            return Err(Error::Resolution(format!(
                "deficiency component {}..={} needs at least 4 nodes inside the box",
                c.first, c.last
            )));
        }
    }
    let (mp, nodes) = interior_rows(dec, comps, potential, 1.0);
    let (mm, _) = interior_rows(dec, comps, potential, -1.0);
    let basis_plus = null_space(mp)?;
    let basis_minus = null_space(mm)?;
    Ok(Deficiency { m_plus: basis_plus.len(), m_minus: basis_minus.len(), nodes, basis_plus, basis_minus })
}

/// `(m₊, m₋)` of the minimal operator on one component.
pub fn deficiency_indices<T: Real>(
    dec: &Decomposition<T>,
    component: Component,
    potential: &PotentialSpec<T>,
) -> Result<Deficiency<T>> {
    deficiency_of(dec, &[component], potential)
}

/// Indices of `S₁`, of each `Ω₂` component, and of `S₁ ⊕ S₂`; the direct sum
/// is computed from its own block-diagonal operator, not by adding.
#[derive(Debug, Clone, PartialEq)]
pub struct DeficiencyReport<T: Real> {
    pub components: Vec<(Block, Component, Deficiency<T>)>,
    pub omega2: (usize, usize),
    pub total: (usize, usize),
}

impl<T: Real> DeficiencyReport<T> {
    pub fn omega1(&self) -> (usize, usize) {
        self.components
            .iter()
            .find(|(b, _, _)| *b == Block::Interior)
            .map(|(_, _, d)| (d.m_plus, d.m_minus))
            .unwrap_or((0, 0))
    }

    /// `m_± = m_±¹ + m_±²`.
    pub fn sum_rule_holds(&self) -> bool {
        let (p1, m1) = self.omega1();
        self.total == (p1 + self.omega2.0, m1 + self.omega2.1)
    }
}

pub fn deficiency_report<T: Real>(dec: &Decomposition<T>, potential: &PotentialSpec<T>) -> Result<DeficiencyReport<T>> {
    let mut components = Vec::new();
    for block in Block::ALL {
        let c = Component::of_block(dec, block);
        components.push((block, c, deficiency_indices(dec, c, potential)?));
    }
    let exterior: Vec<Component> =
        components.iter().filter(|(b, _, _)| *b != Block::Interior).map(|(_, c, _)| *c).collect();
    let all: Vec<Component> = components.iter().map(|(_, c, _)| *c).collect();
    let d2 = deficiency_of(dec, &exterior, potential)?;
    let dt = deficiency_of(dec, &all, potential)?;
    Ok(DeficiencyReport { components, omega2: (d2.m_plus, d2.m_minus), total: (dt.m_plus, dt.m_minus) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionClass {
    Separating,
    Transversal,
}

/// Separating iff no point couples the two sides.
pub fn classify<T: Real>(coupling: &CouplingSpec<T>) -> ExtensionClass {
    let separated = GammaPoint::ALL.iter().all(|p| matches!(coupling.at(*p), PointCoupling::Separated { .. }));
    if separated {
        ExtensionClass::Separating
    } else {
        ExtensionClass::Transversal
    }
}
