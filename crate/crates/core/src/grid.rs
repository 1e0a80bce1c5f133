//! Uniform grid on the box `[0, L]`, split into the interior interval
//! `Ω₁ = (a, b)` and the two exterior components of `Ω₂`.
//!
//! Every subgrid owns its own copy of the interface nodes it touches, so a
//! [`WaveFunction`] can carry different one-sided limits at `a` and `b`.
//! The box ends `0` and `L` are hard walls: their nodes are not degrees of
//! freedom and read as zero inside stencils.

use crate::error::{Error, Result};
use crate::scalar::{czero, Real, C};

/// Minimum number of owned nodes per subgrid accepted by
/// [`Decomposition::new`]. Stencil operations check their own reach.
pub const MIN_SUBGRID_NODES: usize = 2;

/// One of the two interface points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GammaPoint {
    A,
    B,
}

impl GammaPoint {
    pub const ALL: [GammaPoint; 2] = [GammaPoint::A, GammaPoint::B];

    pub fn index(self) -> usize {
        match self {
            GammaPoint::A => 0,
            GammaPoint::B => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GammaPoint::A => "a",
            GammaPoint::B => "b",
        }
    }
}

/// Side of an interface point: `One` looks into `Ω₁`, `Two` into `Ω₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub const ALL: [Side; 2] = [Side::One, Side::Two];

    pub fn index(self) -> usize {
        match self {
            Side::One => 0,
            Side::Two => 1,
        }
    }
}

/// Subdomain label used by the projection `P_Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Omega1,
    Omega2,
}

/// The three subgrids making up a [`WaveFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    /// `Ω₁ = [a, b]`.
    Interior,
    /// Left component of `Ω₂`, nodes `h..=a`.
    ExteriorLeft,
    /// Right component of `Ω₂`, nodes `b..=L-h`.
    ExteriorRight,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::Interior, Block::ExteriorLeft, Block::ExteriorRight];

    pub fn index(self) -> usize {
        match self {
            Block::Interior => 0,
            Block::ExteriorLeft => 1,
            Block::ExteriorRight => 2,
        }
    }

    pub fn region(self) -> Region {
        match self {
            Block::Interior => Region::Omega1,
            _ => Region::Omega2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Block::Interior => "omega1",
            Block::ExteriorLeft => "omega2_left",
            Block::ExteriorRight => "omega2_right",
        }
    }
}

/// Contiguous run of global nodes owned by one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subgrid {
    pub block: Block,
    /// First owned global node index.
    pub first: usize,
    /// Last owned global node index (inclusive).
    pub last: usize,
    /// A hard wall node sits just below `first`.
    pub wall_below: bool,
    /// A hard wall node sits just above `last`.
    pub wall_above: bool,
}

impl Subgrid {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn contains_node(&self, node: usize) -> bool {
        (self.first..=self.last).contains(&node)
    }

    /// Value at a local index, reading hard walls as zero. `None` when the
    /// index leaves the subgrid.
    pub fn read<T: Real>(&self, values: &[C<T>], local: isize) -> Option<C<T>> {
        let n = self.len() as isize;
        if (0..n).contains(&local) {
            Some(values[local as usize])
        } else if (local == -1 && self.wall_below) || (local == n && self.wall_above) {
            Some(czero())
        } else {
            None
        }
    }
}

/// Domain decomposition of the computational box.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T: Real> {
    length: T,
    node_count: usize,
    h: T,
    a: T,
    b: T,
    ia: usize,
    ib: usize,
    subgrids: [Subgrid; 3],
    weights: [Vec<T>; 3],
}

fn grid_index<T: Real>(name: &'static str, x: T, h: T) -> Result<usize> {
    let r = x / h;
    let i = r.round();
    let slack = T::lit(64.0) * T::epsilon() * (T::one() + r.abs());
    if (r - i).abs() > slack || i < T::zero() {
        return Err(Error::Alignment {
            name,
            value: x.to_f64_lossy(),
            h: h.to_f64_lossy(),
        });
    }
    Ok(i.to_usize().expect("non-negative grid index"))
}

impl<T: Real> Decomposition<T> {
    /// Builds the decomposition of `[0, L]` with `N` cells and `Ω₁ = (a, b)`.
    pub fn new(length: T, node_count: usize, a: T, b: T) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::Geometry(format!("box length must be positive, got {length}")));
        }
        if node_count == 0 {
            return Err(Error::Geometry("node count must be positive".into()));
        }
        if !(T::zero() < a && a < b && b < length) {
            return Err(Error::Geometry(format!(
                "need 0 < a < b < L, got a = {a}, b = {b}, L = {length}"
            )));
        }
        let h = length / T::from_usize_exact(node_count);
        let ia = grid_index("a", a, h)?;
        let ib = grid_index("b", b, h)?;
        let subgrids = [
            Subgrid { block: Block::Interior, first: ia, last: ib, wall_below: false, wall_above: false },
            Subgrid { block: Block::ExteriorLeft, first: 1, last: ia, wall_below: true, wall_above: false },
            Subgrid {
                block: Block::ExteriorRight,
                first: ib,
                last: node_count - 1,
                wall_below: false,
                wall_above: true,
            },
        ];
        for sg in &subgrids {
            if ib >= node_count || sg.last < sg.first || sg.len() < MIN_SUBGRID_NODES {
                return Err(Error::Resolution(format!(
                    "subgrid {} needs at least {MIN_SUBGRID_NODES} nodes",
                    sg.block.label()
                )));
            }
        }
        let half = h / T::lit(2.0);
        let weights = subgrids.map(|sg| {
            (sg.first..=sg.last)
                .map(|node| {
                    let at_gamma = node == ia || node == ib;
                    if at_gamma {
                        half
                    } else {
                        h
                    }
                })
                .collect::<Vec<T>>()
        });
        Ok(Decomposition { length, node_count, h, a, b, ia, ib, subgrids, weights })
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    /// Coordinate of global node `i`.
    pub fn x(&self, node: usize) -> T {
        T::from_usize_exact(node) * self.h
    }

    pub fn subgrid(&self, block: Block) -> &Subgrid {
        &self.subgrids[block.index()]
    }

    pub fn weights(&self, block: Block) -> &[T] {
        &self.weights[block.index()]
    }

    /// Sum of all quadrature weights (`L - h`: the wall half-cells are cut).
    pub fn total_weight(&self) -> T {
        self.weights.iter().flatten().copied().sum()
    }

    pub fn gamma_node(&self, p: GammaPoint) -> usize {
        match p {
            GammaPoint::A => self.ia,
            GammaPoint::B => self.ib,
        }
    }

    pub fn gamma_x(&self, p: GammaPoint) -> T {
        self.x(self.gamma_node(p))
    }

    /// Resolves a coordinate to an interface point.
    pub fn gamma_point_at(&self, x: T) -> Result<GammaPoint> {
        let tol = self.h / T::lit(4.0);
        if (x - self.gamma_x(GammaPoint::A)).abs() <= tol {
            Ok(GammaPoint::A)
        } else if (x - self.gamma_x(GammaPoint::B)).abs() <= tol {
            Ok(GammaPoint::B)
        } else {
            Err(Error::NotInterfacePoint(x.to_f64_lossy()))
        }
    }

    /// Outer normal of `Ω₁`: `-1` at `a`, `+1` at `b`.
    pub fn normal(&self, p: GammaPoint) -> T {
        match p {
            GammaPoint::A => -T::one(),
            GammaPoint::B => T::one(),
        }
    }

    /// Outer normal `n_k` of the subdomain on `side` (`n₂ = -n₁`).
    pub fn side_normal(&self, p: GammaPoint, side: Side) -> T {
        match side {
            Side::One => self.normal(p),
            Side::Two => -self.normal(p),
        }
    }

    /// Block that owns the copy of `p` seen from `side`.
    pub fn block_at(&self, p: GammaPoint, side: Side) -> Block {
        match (p, side) {
            (_, Side::One) => Block::Interior,
            (GammaPoint::A, Side::Two) => Block::ExteriorLeft,
            (GammaPoint::B, Side::Two) => Block::ExteriorRight,
        }
    }

    /// Local index of the interface copy and the inward direction (`+1` when
    /// moving into the subdomain increases x).
    pub fn gamma_local(&self, p: GammaPoint, side: Side) -> (usize, isize) {
        let block = self.block_at(p, side);
        let sg = self.subgrid(block);
        let local = self.gamma_node(p) - sg.first;
        let inward = if local == 0 { 1 } else { -1 };
        (local, inward)
    }

    /// Mirror image under `x ↦ L - x`.
    pub fn reflect(&self) -> Result<Self> {
        Decomposition::new(self.length, self.node_count, self.length - self.b, self.length - self.a)
    }

    pub fn dof_count(&self) -> usize {
        self.subgrids.iter().map(Subgrid::len).sum()
    }
}

/// Block vector `(ψ₁, ψ₂ˡᵉᶠᵗ, ψ₂ʳⁱᵍʰᵗ)` of complex node values.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<T: Real> {
    blocks: [Vec<C<T>>; 3],
}

impl<T: Real> WaveFunction<T> {
    pub fn zeros(dec: &Decomposition<T>) -> Self {
        WaveFunction { blocks: Block::ALL.map(|b| vec![czero(); dec.subgrid(b).len()]) }
    }

    /// Samples `f(block, x)` at every owned node.
    pub fn from_fn(dec: &Decomposition<T>, mut f: impl FnMut(Block, T) -> C<T>) -> Self {
        WaveFunction {
            blocks: Block::ALL.map(|b| {
                let sg = dec.subgrid(b);
                (sg.first..=sg.last).map(|node| f(b, dec.x(node))).collect()
            }),
        }
    }

    /// Samples one global function on all blocks; interface copies agree.
    pub fn sample(dec: &Decomposition<T>, mut f: impl FnMut(T) -> C<T>) -> Self {
        Self::from_fn(dec, |_, x| f(x))
    }

    pub fn from_blocks(
        dec: &Decomposition<T>,
        interior: Vec<C<T>>,
        left: Vec<C<T>>,
        right: Vec<C<T>>,
    ) -> Result<Self> {
        let psi = WaveFunction { blocks: [interior, left, right] };
        psi.check(dec)?;
        Ok(psi)
    }

    pub(crate) fn from_blocks_unchecked(interior: Vec<C<T>>, left: Vec<C<T>>, right: Vec<C<T>>) -> Self {
        WaveFunction { blocks: [interior, left, right] }
    }

    /// Verifies block lengths against `dec` and that all entries are finite.
    pub fn check(&self, dec: &Decomposition<T>) -> Result<()> {
        for b in Block::ALL {
            let want = dec.subgrid(b).len();
            let got = self.blocks[b.index()].len();
            if want != got {
                return Err(Error::ShapeMismatch(format!(
                    "block {} has {got} entries, decomposition expects {want}",
                    b.label()
                )));
            }
        }
        if self.blocks.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite entry".into()));
        }
        Ok(())
    }

    pub fn block(&self, b: Block) -> &[C<T>] {
        &self.blocks[b.index()]
    }

    pub fn block_mut(&mut self, b: Block) -> &mut [C<T>] {
        &mut self.blocks[b.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &C<T>> {
        self.blocks.iter().flatten()
    }

    pub fn max_abs(&self) -> T {
        self.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `self + s * other`, blockwise.
    pub fn axpy(&self, s: C<T>, other: &Self) -> Self {
        let mut out = self.clone();
        for (dst, src) in out.blocks.iter_mut().zip(&other.blocks) {
            for (d, x) in dst.iter_mut().zip(src) {
                *d += s * *x;
            }
        }
        out
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        let mut out = self.clone();
        out.blocks.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    /// The same wave function on the reflected decomposition `x ↦ L - x`.
    pub fn reflect(&self) -> Self {
        let rev = |v: &Vec<C<T>>| v.iter().rev().copied().collect::<Vec<_>>();
        WaveFunction { blocks: [rev(&self.blocks[0]), rev(&self.blocks[2]), rev(&self.blocks[1])] }
    }
}

/// `P_k ψ`: keeps the blocks of `region`, zeroes the rest.
pub fn project_omega<T: Real>(psi: &WaveFunction<T>, region: Region) -> WaveFunction<T> {
    let mut out = psi.clone();
    for b in Block::ALL {
        if b.region() != region {
            out.block_mut(b).iter_mut().for_each(|z| *z = czero());
        }
    }
    out
}

/// Weighted inner product `Σ w conj(φ) ψ`, conjugate-linear in `phi`.
pub fn inner_product<T: Real>(
    dec: &Decomposition<T>,
    phi: &WaveFunction<T>,
    psi: &WaveFunction<T>,
) -> Result<C<T>> {
    phi.check(dec)?;
    psi.check(dec)?;
    let mut acc = czero();
    for b in Block::ALL {
        for ((w, x), y) in dec.weights(b).iter().zip(phi.block(b)).zip(psi.block(b)) {
            acc += x.conj() * y * *w;
        }
    }
    Ok(acc)
}

pub fn norm_squared<T: Real>(dec: &Decomposition<T>, psi: &WaveFunction<T>) -> Result<T> {
    Ok(inner_product(dec, psi, psi)?.re)
}

/// `J`: assembles a global node function on `1..=N-1`. At interface nodes the
/// `Ω₁` copy is taken.
pub fn glue<T: Real>(dec: &Decomposition<T>, psi: &WaveFunction<T>) -> Result<Vec<C<T>>> {
    psi.check(dec)?;
    let mut out = vec![czero(); dec.node_count() - 1];
    for b in [Block::ExteriorLeft, Block::ExteriorRight, Block::Interior] {
        let sg = dec.subgrid(b);
        for (k, z) in psi.block(b).iter().enumerate() {
            out[sg.first + k - 1] = *z;
        }
    }
    Ok(out)
}

/// `J⁻¹`: restricts a global node function on `1..=N-1` to every block.
pub fn split<T: Real>(dec: &Decomposition<T>, global: &[C<T>]) -> Result<WaveFunction<T>> {
    if global.len() != dec.node_count() - 1 {
        return Err(Error::ShapeMismatch(format!(
            "global function has {} nodes, expected {}",
            global.len(),
            dec.node_count() - 1
        )));
    }
    let blocks = Block::ALL.map(|b| {
        let sg = dec.subgrid(b);
        global[sg.first - 1..sg.last].to_vec()
    });
    Ok(WaveFunction { blocks })
}
