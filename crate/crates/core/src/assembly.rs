//! Concrete Hamiltonian matrices in the weighted inner product.
//!
//! Every operator is assembled from its quadratic form: one stiffness term
//! `|ψᵢ - ψⱼ|²/h` per grid edge (wall edges included, with the wall value
//! zero), `V|ψ|²` on every node, and point terms for Robin, delta and
//! delta-prime conditions. Dividing the form matrix `K` by the node weights
//! gives `A = W⁻¹K`, which is W-Hermitian by construction. Degrees of
//! freedom are ordered by position (left copy of an interface node before
//! the right one), so `A` is tridiagonal.

use std::fmt::Write as _;

use crate::banded::Tridiagonal;
use crate::bc::{CouplingSpec, PointCoupling, SeparatedBc, SideCondition};
use crate::distributional::{apply_full, BoundaryPotentialSpec, PotentialSpec};
use crate::error::{Error, Result};
use crate::grid::{Block, Decomposition, GammaPoint, Region, Side, WaveFunction};
use crate::scalar::{czero, Real, C};

/// One matrix degree of freedom and the wave-function copies it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct Dof {
    /// Global node index.
    pub node: usize,
    /// Region for `P₁`; merged interface nodes count as `Ω₁`.
    pub region: Region,
    /// `(block, local index)` copies; the first is the primary one.
    pub copies: Vec<(Block, usize)>,
}

impl Dof {
    pub fn block(&self) -> Block {
        self.copies[0].0
    }
}

/// `A` together with the weights, the DOF map and a description of the
/// conditions it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix<T: Real> {
    matrix: Tridiagonal<T>,
    weights: Vec<T>,
    dofs: Vec<Dof>,
    separating: bool,
    description: String,
    shape: [usize; 3],
    form: Form<T>,
}

/// `K = WA` written as `Σ node_i |v_i|² + Σ edge_i |v_i - v_{i+1}|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Form<T: Real> {
    pub node: Vec<C<T>>,
    pub edge: Vec<T>,
}

impl<T: Real> Form<T> {
    fn zeros(n: usize) -> Self {
        Form { node: vec![czero(); n], edge: vec![T::zero(); n.saturating_sub(1)] }
    }

    /// Real part of `v* K v`, evaluated term by term so that differences
    /// never cancel against large diagonal entries.
    pub fn value(&self, v: &[C<T>]) -> T {
        let nodes = self.node.iter().zip(v).fold(T::zero(), |acc, (r, z)| acc + r.re * z.norm_sqr());
        let edges = self.edge.iter().zip(v.windows(2)).fold(T::zero(), |acc, (c, w)| acc + *c * (w[0] - w[1]).norm_sqr());
        nodes + edges
    }
}

impl<T: Real> HamiltonianMatrix<T> {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn matrix(&self) -> &Tridiagonal<T> {
        &self.matrix
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn dofs(&self) -> &[Dof] {
        &self.dofs
    }

    pub fn is_separating(&self) -> bool {
        self.separating
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn form(&self) -> &Form<T> {
        &self.form
    }

    /// `⟨v, Av⟩_W / ⟨v, v⟩_W` from the stored form.
    pub fn rayleigh_quotient(&self, v: &[C<T>]) -> Result<T> {
        let n = self.norm_squared(v);
        if !(n > T::zero()) {
            return Err(Error::ZeroVector);
        }
        Ok(self.form.value(v) / n)
    }

    /// Matrix DOF values of `psi`, read from each DOF's primary copy.
    pub fn gather(&self, psi: &WaveFunction<T>) -> Result<Vec<C<T>>> {
        self.check_shape(psi)?;
        Ok(self.dofs.iter().map(|d| psi.block(d.copies[0].0)[d.copies[0].1]).collect())
    }

    /// Wave function with every copy of every DOF set; eliminated nodes are zero.
    pub fn scatter(&self, v: &[C<T>]) -> Result<WaveFunction<T>> {
        if v.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!("vector has {} entries, matrix has {}", v.len(), self.dim())));
        }
        let [n1, nl, nr] = self.shape;
        let mut blocks = [vec![czero(); n1], vec![czero(); nl], vec![czero(); nr]];
        for (d, z) in self.dofs.iter().zip(v) {
            for &(b, k) in &d.copies {
                blocks[b.index()][k] = *z;
            }
        }
        let [i, l, r] = blocks;
        Ok(WaveFunction::from_blocks_unchecked(i, l, r))
    }

    pub fn apply(&self, v: &[C<T>]) -> Vec<C<T>> {
        self.matrix.matvec(v)
    }

    /// `Aψ` on the DOFs of `psi`, scattered back.
    pub fn apply_wave(&self, psi: &WaveFunction<T>) -> Result<WaveFunction<T>> {
        let v = self.gather(psi)?;
        self.scatter(&self.apply(&v))
    }

    /// `Σ w conj(u) v` over matrix DOFs.
    pub fn inner(&self, u: &[C<T>], v: &[C<T>]) -> C<T> {
        self.weights.iter().zip(u).zip(v).fold(czero(), |acc, ((w, x), y)| acc + x.conj() * y * *w)
    }

    pub fn norm_squared(&self, v: &[C<T>]) -> T {
        self.weights.iter().zip(v).fold(T::zero(), |acc, (w, z)| acc + *w * z.norm_sqr())
    }

    /// `‖P_k v‖²_W` with shared DOFs counted in `Ω₁`.
    pub fn region_mass(&self, v: &[C<T>], region: Region) -> T {
        self.dofs
            .iter()
            .zip(&self.weights)
            .zip(v)
            .filter(|((d, _), _)| d.region == region)
            .fold(T::zero(), |acc, ((_, w), z)| acc + *w * z.norm_sqr())
    }

    /// Weighted mass per block, indexed by [`Block::index`].
    pub fn block_masses(&self, v: &[C<T>]) -> [T; 3] {
        let mut m = [T::zero(); 3];
        for ((d, w), z) in self.dofs.iter().zip(&self.weights).zip(v) {
            m[d.block().index()] += *w * z.norm_sqr();
        }
        m
    }

    fn check_shape(&self, psi: &WaveFunction<T>) -> Result<()> {
        for b in Block::ALL {
            if psi.block(b).len() != self.shape[b.index()] {
                return Err(Error::ShapeMismatch(format!(
                    "block {} has {} entries, matrix expects {}",
                    b.label(),
                    psi.block(b).len(),
                    self.shape[b.index()]
                )));
            }
        }
        Ok(())
    }

    /// `K_ij = w_i A_ij`.
    fn form_entry(&self, i: usize, j: usize) -> C<T> {
        self.matrix.get(i, j) * self.weights[i]
    }
}

/// Point term attached to a kept DOF.
#[derive(Debug, Clone, Copy)]
enum Penalty<T: Real> {
    None,
    /// Adds `-f |ψ|²` to the form.
    Robin(C<T>),
    /// Adds `α |ψ|²` to the form.
    Delta(T),
}

struct Builder<T: Real> {
    dofs: Vec<Dof>,
    /// Weight multiplier `h / w`, 1 or 2 (kept exact so `w·A` is bit-symmetric).
    inv_m: Vec<T>,
    penalty: Vec<Penalty<T>>,
    /// `(left, right, 1/β)` delta-prime pairs.
    jumps: Vec<(usize, usize, T)>,
    index: [Vec<Option<usize>>; 3],
}

impl<T: Real> Builder<T> {
    fn push(&mut self, dof: Dof, inv_m: T, penalty: Penalty<T>) -> usize {
        let i = self.dofs.len();
        for &(b, k) in &dof.copies {
            self.index[b.index()][k] = Some(i);
        }
        self.dofs.push(dof);
        self.inv_m.push(inv_m);
        self.penalty.push(penalty);
        i
    }
}

/// Override hook used to break Hermiticity on purpose in tests.
#[derive(Debug, Clone, Copy)]
struct ComplexRobin<T: Real> {
    point: GammaPoint,
    side: Side,
    f: C<T>,
}

fn side_label<T: Real>(c: SideCondition<T>) -> String {
    match c {
        SideCondition::Dirichlet => "dirichlet".into(),
        SideCondition::Neumann => "neumann".into(),
        SideCondition::Robin(f) => format!("robin({f})"),
    }
}

fn describe<T: Real>(coupling: &CouplingSpec<T>) -> String {
    let mut s = String::new();
    for p in GammaPoint::ALL {
        if !s.is_empty() {
            s.push_str("; ");
        }
        let _ = match coupling.at(p) {
            PointCoupling::Separated { side1, side2 } => {
                write!(s, "{}: separated({}|{})", p.label(), side_label(side1), side_label(side2))
            }
            PointCoupling::Transparent => write!(s, "{}: transparent", p.label()),
            PointCoupling::Delta(alpha) => write!(s, "{}: delta({alpha})", p.label()),
            PointCoupling::DeltaPrime(beta) => write!(s, "{}: delta_prime({beta})", p.label()),
        };
    }
    s
}

fn owning_block<T: Real>(dec: &Decomposition<T>, node: usize) -> Block {
    Block::ALL.into_iter().find(|b| dec.subgrid(*b).contains_node(node)).expect("every node has an owner")
}

fn local_of<T: Real>(dec: &Decomposition<T>, block: Block, node: usize) -> usize {
    node - dec.subgrid(block).first
}

fn build<T: Real>(
    dec: &Decomposition<T>,
    potential: &PotentialSpec<T>,
    coupling: &CouplingSpec<T>,
    hook: Option<ComplexRobin<T>>,
) -> Result<HamiltonianMatrix<T>> {
    coupling.validate()?;
    potential.validate(dec)?;
    let h = dec.h();
    let ih2 = T::one() / (h * h);
    let two = T::lit(2.0);
    let mut bld = Builder {
        dofs: Vec::new(),
        inv_m: Vec::new(),
        penalty: Vec::new(),
        jumps: Vec::new(),
        index: Block::ALL.map(|b| vec![None; dec.subgrid(b).len()]),
    };

    for node in 1..dec.node_count() {
        let gamma = GammaPoint::ALL.into_iter().find(|p| dec.gamma_node(*p) == node);
        let Some(p) = gamma else {
            let block = owning_block(dec, node);
            let dof = Dof { node, region: block.region(), copies: vec![(block, local_of(dec, block, node))] };
            bld.push(dof, T::one(), Penalty::None);
            continue;
        };
        let (left, right) = match p {
            GammaPoint::A => (Side::Two, Side::One),
            GammaPoint::B => (Side::One, Side::Two),
        };
        let copy = |side: Side| {
            let block = dec.block_at(p, side);
            (block, local_of(dec, block, node))
        };
        let single = |side: Side| {
            let c = copy(side);
            Dof { node, region: c.0.region(), copies: vec![c] }
        };
        match coupling.at(p) {
            PointCoupling::Separated { side1, side2 } => {
                for side in [left, right] {
                    let cond = if side == Side::One { side1 } else { side2 };
                    let Some(f) = cond.robin_coefficient() else { continue };
                    let mut f = C::new(f, T::zero());
                    if let Some(hk) = hook.filter(|hk| hk.point == p && hk.side == side) {
                        f = hk.f;
                    }
                    let pen = if f == czero() { Penalty::None } else { Penalty::Robin(f) };
                    bld.push(single(side), two, pen);
                }
            }
            PointCoupling::Transparent | PointCoupling::Delta(_) => {
                let pen = match coupling.at(p) {
                    PointCoupling::Delta(alpha) if alpha != T::zero() => Penalty::Delta(alpha),
                    _ => Penalty::None,
                };
                let dof = Dof { node, region: Region::Omega1, copies: vec![copy(Side::One), copy(Side::Two)] };
                bld.push(dof, T::one(), pen);
            }
            PointCoupling::DeltaPrime(beta) => {
                let l = bld.push(single(left), two, Penalty::None);
                let r = bld.push(single(right), two, Penalty::None);
                bld.jumps.push((l, r, T::one() / beta));
            }
        }
    }

    let n = bld.dofs.len();
    if n == 0 {
        return Err(Error::Resolution("no degrees of freedom left after elimination".into()));
    }
    let mut a = Tridiagonal::zeros(n);
    let mut form = Form::zeros(n);
    let stiff = h * ih2;
    let edge = C::new(ih2, T::zero());
    for block in Block::ALL {
        let sg = dec.subgrid(block);
        let idx = &bld.index[block.index()];
        let len = sg.len() as isize;
        let lo = if sg.wall_below { -1 } else { 0 };
        let hi = if sg.wall_above { len } else { len - 1 };
        let at = |k: isize| if (0..len).contains(&k) { idx[k as usize] } else { None };
        for k in lo..hi {
            let (u, v) = (at(k), at(k + 1));
            match (u, v) {
                (Some(i), Some(j)) => form.edge[i.min(j)] += stiff,
                (Some(i), None) | (None, Some(i)) => form.node[i] += C::new(stiff, T::zero()),
                (None, None) => {}
            }
            for (i, j) in [(u, v), (v, u)] {
                if let Some(i) = i {
                    a.add(i, i, edge * bld.inv_m[i]);
                    if let Some(j) = j {
                        a.add(i, j, -(edge * bld.inv_m[i]));
                    }
                }
            }
        }
    }
    for (i, dof) in bld.dofs.iter().enumerate() {
        let v = potential.at_node(dec, dof.node);
        a.diag[i] += C::new(v, T::zero());
        form.node[i] += C::new(v * h / bld.inv_m[i], T::zero());
        match bld.penalty[i] {
            Penalty::None => {}
            Penalty::Robin(f) => {
                a.diag[i] -= f * (bld.inv_m[i] / h);
                form.node[i] -= f;
            }
            Penalty::Delta(alpha) => {
                a.diag[i] += C::new(alpha * bld.inv_m[i] / h, T::zero());
                form.node[i] += C::new(alpha, T::zero());
            }
        }
    }
    for &(l, r, c) in &bld.jumps {
        let sl = C::new(c * bld.inv_m[l] / h, T::zero());
        let sr = C::new(c * bld.inv_m[r] / h, T::zero());
        a.add(l, l, sl);
        a.add(l, r, -sl);
        a.add(r, r, sr);
        a.add(r, l, -sr);
        form.edge[l] += c;
    }

    let weights = bld.inv_m.iter().map(|m| h / *m).collect();
    let separating = coupling.as_separated().is_some();
    Ok(HamiltonianMatrix {
        matrix: a,
        weights,
        dofs: bld.dofs,
        separating,
        description: describe(coupling),
        shape: Block::ALL.map(|b| dec.subgrid(b).len()),
        form,
    })
}

/// `H = H₁ ⊕ H₂` for separated conditions on each side of each interface point.
pub fn assemble_separating<T: Real>(
    dec: &Decomposition<T>,
    potential: &PotentialSpec<T>,
    bc: &SeparatedBc<T>,
) -> Result<HamiltonianMatrix<T>> {
    bc.validate().map_err(|e| Error::InvalidBoundary(e.to_string()))?;
    build(dec, potential, &CouplingSpec::separated(bc), None)
}

/// Operator for arbitrary per-point couplings; separating only when every
/// point is separated.
pub fn assemble_coupled<T: Real>(
    dec: &Decomposition<T>,
    potential: &PotentialSpec<T>,
    coupling: &CouplingSpec<T>,
) -> Result<HamiltonianMatrix<T>> {
    build(dec, potential, coupling, None)
}

/// Separating operator with one Robin coefficient replaced by a complex
/// number. The result is not Hermitian; only diagnostics should consume it.
#[doc(hidden)]
pub fn assemble_with_complex_robin<T: Real>(
    dec: &Decomposition<T>,
    potential: &PotentialSpec<T>,
    bc: &SeparatedBc<T>,
    point: GammaPoint,
    side: Side,
    f: C<T>,
) -> Result<HamiltonianMatrix<T>> {
    if bc.at(point, side).robin_coefficient().is_none() {
        return Err(Error::InvalidBoundary("complex Robin override needs a kept interface node".into()));
    }
    build(dec, potential, &CouplingSpec::separated(bc), Some(ComplexRobin { point, side, f }))
}

/// Global box operator `-Δ + V` on nodes `1..N-1` with hard walls, built
/// directly from the 3-point stencil. Interface nodes are single shared DOFs.
pub fn assemble_box<T: Real>(dec: &Decomposition<T>, potential: &PotentialSpec<T>) -> Result<HamiltonianMatrix<T>> {
    potential.validate(dec)?;
    let h = dec.h();
    let ih2 = T::one() / (h * h);
    let n = dec.node_count() - 1;
    let mut a = Tridiagonal::zeros(n);
    let mut form = Form::zeros(n);
    let mut dofs = Vec::with_capacity(n);
    for node in 1..dec.node_count() {
        let i = node - 1;
        let v = potential.at_node(dec, node);
        a.diag[i] = C::new(ih2 + ih2 + v, T::zero());
        form.node[i] = C::new(h * v, T::zero());
        if i + 1 < n {
            a.sup[i] = C::new(-ih2, T::zero());
            a.sub[i] = C::new(-ih2, T::zero());
            form.edge[i] = h * ih2;
        }
        if i == 0 || i + 1 == n {
            form.node[i] += C::new(h * ih2, T::zero());
        }
        let mut copies: Vec<(Block, usize)> = Block::ALL
            .into_iter()
            .filter(|b| dec.subgrid(*b).contains_node(node))
            .map(|b| (b, local_of(dec, b, node)))
            .collect();
        copies.sort_by_key(|(b, _)| b.index());
        let region = copies[0].0.region();
        dofs.push(Dof { node, region, copies });
    }
    Ok(HamiltonianMatrix {
        matrix: a,
        weights: vec![h; n],
        dofs,
        separating: false,
        description: "box operator".into(),
        shape: Block::ALL.map(|b| dec.subgrid(b).len()),
        form,
    })
}

/// `max |K_ij - conj(K_ji)| / max |K|` with `K = WA`.
pub fn hermiticity_defect<T: Real>(hm: &HamiltonianMatrix<T>) -> T {
    let n = hm.dim();
    let mut defect = T::zero();
    let mut scale = T::zero();
    for i in 0..n {
        let d = hm.form_entry(i, i);
        scale = scale.max(d.norm());
        defect = defect.max((d - d.conj()).norm());
        if i + 1 < n {
            let (u, l) = (hm.form_entry(i, i + 1), hm.form_entry(i + 1, i));
            scale = scale.max(u.norm()).max(l.norm());
            defect = defect.max((u - l.conj()).norm());
        }
    }
    if scale > T::zero() {
        defect / scale
    } else {
        defect
    }
}

/// Max-entry norm of `P₁A - AP₁`: the largest entry coupling an `Ω₁` DOF to
/// an `Ω₂` DOF.
pub fn projection_commutator_norm<T: Real>(hm: &HamiltonianMatrix<T>) -> T {
    let mut m = T::zero();
    for i in 0..hm.dim().saturating_sub(1) {
        if hm.dofs[i].region != hm.dofs[i + 1].region {
            m = m.max(hm.matrix.sup[i].norm()).max(hm.matrix.sub[i].norm());
        }
    }
    m
}

/// Outcome of comparing the distributional operator with the assembled matrix
/// on one domain element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecouplingCheck<T: Real> {
    /// Singular coefficients relative to [`crate::distributional::SingularFunction::scale`].
    pub singular_relative: T,
    /// `max |regular - Aψ|` over matrix DOFs, relative to `max |Aψ|`.
    pub action_relative: T,
}

/// Applies `-Δ + V + B` to `psi` and compares its regular part with the
/// matrix action of the separating operator for the same conditions.
pub fn decoupling_check<T: Real>(
    dec: &Decomposition<T>,
    potential: &PotentialSpec<T>,
    bc: &SeparatedBc<T>,
    hm: &HamiltonianMatrix<T>,
    psi: &WaveFunction<T>,
) -> Result<DecouplingCheck<T>> {
    let full = apply_full(dec, psi, potential, &BoundaryPotentialSpec::from_separated(bc))?;
    let scale = full.scale(dec, psi);
    let singular_relative = if scale > T::zero() { full.singular_magnitude() / scale } else { full.singular_magnitude() };
    let action = hm.apply(&hm.gather(psi)?);
    let mut diff = T::zero();
    let mut size = T::zero();
    for (d, z) in hm.dofs().iter().zip(&action) {
        let (b, k) = d.copies[0];
        diff = diff.max((full.regular.block(b)[k] - *z).norm());
        size = size.max(z.norm());
    }
    let action_relative = if size > T::zero() { diff / size } else { diff };
    Ok(DecouplingCheck { singular_relative, action_relative })
}
