//! Grid discretization of the correlation-function generator `L^Δ = A + B`
//! and of the multiplication semigroup `Ψ(t)`.
//!
//! `(Ak)(η) = −E(η) k(η)` and
//! `(Bk)(η) = ∫ Σ_{∅≠ζ⊆η} β(x|ζ) k(η∖ζ ∪ x) dx`.
//! Since `|η∖ζ ∪ x| ≤ |η|`, output order `n` reads only input orders `≤ n`;
//! a truncation to orders `0..=N` is therefore closed under both operators.

use rayon::prelude::*;
use thiserror::Error;

use crate::config_space::{LatticeSpace, SiteSet};
use crate::grid::{PeriodicGrid, SiteSpace};
use crate::kernel::{KernelError, KernelSpec, LatticeKernel};

/// Highest supported correlation order.
pub const MAX_ORDER: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("kernel and correlation functions live on different site spaces")]
    SpaceMismatch,
    #[error("translation-invariant storage needs a translation-invariant kernel on a periodic grid")]
    StorageMismatch,
    #[error("maximal order {0} exceeds the supported {MAX_ORDER}")]
    OrderTooLarge(usize),
    #[error("semigroup time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("torus side {length} is shorter than 6 dispersal scales ({scale} each)")]
    TorusTooSmall { length: f64, scale: f64 },
    #[error("kernel dimension {kernel} differs from grid dimension {grid}")]
    DimensionMismatch { kernel: usize, grid: usize },
    #[error("a tabulated lattice kernel needs a lattice site space")]
    LatticeKernelOnGrid,
    #[error("continuum kernels need a periodic grid")]
    ContinuumKernelOnLattice,
    #[error("order {order} has {found} values, expected {expected}")]
    BadLength { order: usize, expected: usize, found: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Storage {
    /// `k⁽ⁿ⁾` on every tuple of sites.
    Full,
    /// `k⁽ⁿ⁾(y₁,…,yₙ) = f(y₂⊖y₁, …, yₙ⊖y₁)`; `k⁽¹⁾` is a single constant.
    TranslationInvariant,
}

/// Correlation functions `k⁽⁰⁾, …, k⁽ᴺ⁾` sampled on a site space.
#[derive(Clone, Debug, PartialEq)]
pub struct GridTruncation {
    space: SiteSpace,
    storage: Storage,
    orders: Vec<Vec<f64>>,
}

fn stored_len(sites: usize, storage: Storage, n: usize) -> usize {
    match storage {
        Storage::Full => sites.pow(n as u32),
        Storage::TranslationInvariant => sites.pow(n.saturating_sub(1) as u32),
    }
}

impl GridTruncation {
    pub fn zeros(space: SiteSpace, storage: Storage, max_order: usize) -> Result<Self, OperatorError> {
        if max_order > MAX_ORDER {
            return Err(OperatorError::OrderTooLarge(max_order));
        }
        if storage == Storage::TranslationInvariant && space.periodic().is_none() {
            return Err(OperatorError::StorageMismatch);
        }
        let m = space.sites();
        let orders = (0..=max_order).map(|n| vec![0.0; stored_len(m, storage, n)]).collect();
        Ok(Self { space, storage, orders })
    }

    /// Fills every stored entry from `f(n, tuple)`.
    pub fn from_fn(
        space: SiteSpace,
        storage: Storage,
        max_order: usize,
        f: impl Fn(usize, &[usize]) -> f64,
    ) -> Result<Self, OperatorError> {
        let mut k = Self::zeros(space, storage, max_order)?;
        for n in 0..=max_order {
            let mut tuple = [0usize; MAX_ORDER + 1];
            for idx in 0..k.orders[n].len() {
                k.representative(n, idx, &mut tuple);
                k.orders[n][idx] = f(n, &tuple[..n]);
            }
        }
        Ok(k)
    }

    /// Assembles a truncation from raw per-order arrays.
    pub fn from_orders(space: SiteSpace, storage: Storage, orders: Vec<Vec<f64>>) -> Result<Self, OperatorError> {
        let max_order = orders.len().saturating_sub(1);
        let mut k = Self::zeros(space, storage, max_order)?;
        for (n, values) in orders.into_iter().enumerate() {
            let expected = k.orders[n].len();
            if values.len() != expected {
                return Err(OperatorError::BadLength { order: n, expected, found: values.len() });
            }
            k.orders[n] = values;
        }
        Ok(k)
    }

    /// Correlation functions of a Poisson state: `k⁽ⁿ⁾ ≡ ρⁿ`.
    pub fn poisson(space: SiteSpace, storage: Storage, max_order: usize, density: f64) -> Result<Self, OperatorError> {
        Self::from_fn(space, storage, max_order, |n, _| density.powi(n as i32))
    }

    pub fn space(&self) -> &SiteSpace {
        &self.space
    }

    pub fn storage(&self) -> Storage {
        self.storage
    }

    pub fn max_order(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn order(&self, n: usize) -> &[f64] {
        &self.orders[n]
    }

    pub fn order_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.orders[n]
    }

    pub fn orders(&self) -> &[Vec<f64>] {
        &self.orders
    }

    /// All stored values, order by order.
    pub fn values(&self) -> impl Iterator<Item = &f64> + '_ {
        self.orders.iter().flatten()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.orders.iter_mut().flatten()
    }

    pub fn total_len(&self) -> usize {
        self.orders.iter().map(Vec::len).sum()
    }

    /// Writes the site tuple represented by stored entry `idx` of order `n`.
    ///
    /// Translation-invariant entries are represented with the first point at site 0.
    pub fn representative(&self, n: usize, idx: usize, tuple: &mut [usize]) {
        let m = self.space.sites();
        match self.storage {
            Storage::Full => {
                let mut rem = idx;
                for slot in tuple[..n].iter_mut().rev() {
                    *slot = rem % m;
                    rem /= m;
                }
            }
            Storage::TranslationInvariant => {
                if n == 0 {
                    return;
                }
                tuple[0] = 0;
                let mut rem = idx;
                for slot in tuple[1..n].iter_mut().rev() {
                    *slot = rem % m;
                    rem /= m;
                }
            }
        }
    }

    fn index_of(&self, tuple: &[usize]) -> usize {
        let m = self.space.sites();
        match self.storage {
            Storage::Full => tuple.iter().fold(0, |acc, &s| acc * m + s),
            Storage::TranslationInvariant => {
                if tuple.len() <= 1 {
                    return 0;
                }
                let grid = self.space.periodic().expect("checked at construction");
                let anchor = tuple[0];
                tuple[1..].iter().fold(0, |acc, &s| acc * m + grid.sub(s, anchor))
            }
        }
    }

    /// `k⁽ⁿ⁾` at a tuple of sites, `n = tuple.len()`.
    #[inline]
    pub fn value(&self, tuple: &[usize]) -> f64 {
        self.orders[tuple.len()][self.index_of(tuple)]
    }

    pub fn set_value(&mut self, tuple: &[usize], v: f64) {
        let idx = self.index_of(tuple);
        self.orders[tuple.len()][idx] = v;
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &GridTruncation) {
        debug_assert_eq!(self.orders.len(), other.orders.len());
        for (x, y) in self.orders.iter_mut().zip(&other.orders) {
            for (u, v) in x.iter_mut().zip(y) {
                *u += a * v;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> GridTruncation {
        let mut out = self.clone();
        out.orders.iter_mut().flatten().for_each(|v| *v *= a);
        out
    }

    /// `self − other`.
    pub fn difference(&self, other: &GridTruncation) -> GridTruncation {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn zeros_like(&self) -> GridTruncation {
        let mut out = self.clone();
        out.orders.iter_mut().flatten().for_each(|v| *v = 0.0);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.orders.iter().flatten().all(|v| v.is_finite())
    }

    /// Largest deviation between entries related by a permutation of points.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut tuple = [0usize; MAX_ORDER + 1];
        for n in 2..=self.max_order() {
            for idx in 0..self.orders[n].len() {
                self.representative(n, idx, &mut tuple);
                let v = self.orders[n][idx];
                for i in 0..n {
                    for j in i + 1..n {
                        let mut swapped = tuple;
                        swapped.swap(i, j);
                        worst = worst.max((self.value(&swapped[..n]) - v).abs());
                    }
                }
            }
        }
        worst
    }

    /// Same site space, storage and number of orders.
    pub fn same_layout(&self, other: &GridTruncation) -> bool {
        self.space == other.space && self.storage == other.storage && self.orders.len() == other.orders.len()
    }
}

/// A kernel discretized on a [`SiteSpace`].
#[derive(Clone, Debug)]
pub enum DiscreteKernel {
    Grid(GridKernel),
    Lattice(LatticeOperatorKernel),
}

/// Translation-invariant kernel sampled on a periodic grid.
///
/// The dispersal profile is periodized and normalized so that its grid mass is
/// exactly one; the Dirac parts of the contact kernel act as exact point
/// evaluations.
#[derive(Clone, Debug)]
pub struct GridKernel {
    grid: PeriodicGrid,
    mortality: f64,
    kind: GridKind,
    beta_empty: f64,
    phi_bar: f64,
}

#[derive(Clone, Debug)]
enum GridKind {
    PureDeath,
    /// `c(x|y₁,y₂) = rate · p(y₁⊖x) p(y₂⊖x)`.
    CellDivision {
        rate: f64,
        profile: Vec<f64>,
        support: Vec<(usize, f64)>,
    },
    /// `c(x|y₁,y₂) = ½(δ(y₁−x) a(y₂⊖x) + δ(y₂−x) a(y₁⊖x))`, `a = mass · p`.
    Contact {
        mass: f64,
        profile: Vec<f64>,
        support: Vec<(usize, f64)>,
    },
}

impl GridKernel {
    pub fn new(spec: &KernelSpec, grid: PeriodicGrid) -> Result<Self, OperatorError> {
        if let Some(d) = spec.dim() {
            if d != grid.dim() {
                return Err(OperatorError::DimensionMismatch { kernel: d, grid: grid.dim() });
            }
        }
        if let Some(disp) = spec.dispersal() {
            if grid.length() < 6.0 * disp.scale() {
                return Err(OperatorError::TorusTooSmall { length: grid.length(), scale: disp.scale() });
            }
        }
        let w = grid.cell_volume();
        let sampled = |disp: &crate::kernel::Dispersal| {
            let raw: Vec<f64> =
                (0..grid.sites()).map(|u| disp.periodized_density(&grid.displacement(u), grid.length())).collect();
            let mass: f64 = raw.iter().sum::<f64>() * w;
            let profile: Vec<f64> = raw.into_iter().map(|v| v / mass).collect();
            let support = profile.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(u, &v)| (u, v)).collect();
            (profile, support)
        };
        let (mortality, kind) = match spec {
            KernelSpec::PureDeath { mortality } => (*mortality, GridKind::PureDeath),
            KernelSpec::CellDivision { mortality, division_rate, offspring } => {
                let (profile, support) = sampled(offspring);
                (*mortality, GridKind::CellDivision { rate: *division_rate, profile, support })
            }
            KernelSpec::Contact { mortality, dispersal_mass, dispersal } => {
                let (profile, support) = sampled(dispersal);
                (*mortality, GridKind::Contact { mass: *dispersal_mass, profile, support })
            }
            KernelSpec::TabulatedLattice(_) => return Err(OperatorError::LatticeKernelOnGrid),
        };
        let beta_empty = match &kind {
            GridKind::PureDeath => mortality,
            GridKind::CellDivision { rate, .. } => mortality + 0.5 * rate,
            GridKind::Contact { mass, .. } => mortality + 0.5 * mass,
        };
        let phi_bar = match &kind {
            GridKind::PureDeath => 0.0,
            GridKind::Contact { mass, profile, .. } => mass * profile.iter().copied().fold(1.0, f64::max),
            GridKind::CellDivision { rate, profile, support } => {
                let mut best: f64 = 1.0;
                for r in 0..grid.sites() {
                    let s: f64 = support.iter().map(|&(u, p)| w * p * profile[grid.add(u, r)]).sum();
                    best = best.max(s);
                }
                rate * best
            }
        };
        Ok(Self { grid, mortality, kind, beta_empty, phi_bar })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn mortality(&self) -> f64 {
        self.mortality
    }

    /// Discretized dispersal profile `p` over difference sites, if any.
    pub fn profile(&self) -> Option<&[f64]> {
        match &self.kind {
            GridKind::PureDeath => None,
            GridKind::CellDivision { profile, .. } | GridKind::Contact { profile, .. } => Some(profile),
        }
    }

    #[inline]
    fn integrate_beta<F: Fn(usize) -> f64>(&self, zeta: &[usize], f: F) -> f64 {
        let g = &self.grid;
        let w = g.cell_volume();
        match (&self.kind, zeta.len()) {
            (GridKind::CellDivision { rate, support, .. }, 1) => {
                let y = zeta[0];
                rate * w * support.iter().map(|&(u, p)| p * f(g.sub(y, u))).sum::<f64>()
            }
            (GridKind::CellDivision { rate, support, profile }, 2) => {
                let (y1, y2) = (zeta[0], zeta[1]);
                let mut s = 0.0;
                for &(u, p) in support {
                    let x = g.sub(y1, u);
                    let q = profile[g.sub(y2, x)];
                    if q != 0.0 {
                        s += p * q * f(x);
                    }
                }
                rate * w * s
            }
            (GridKind::Contact { mass, support, .. }, 1) => {
                let y = zeta[0];
                let smooth: f64 = support.iter().map(|&(u, p)| p * f(g.sub(y, u))).sum();
                0.5 * mass * (f(y) + w * smooth)
            }
            (GridKind::Contact { mass, profile, .. }, 2) => {
                let (y1, y2) = (zeta[0], zeta[1]);
                0.5 * mass * (profile[g.sub(y2, y1)] * f(y1) + profile[g.sub(y1, y2)] * f(y2))
            }
            _ => 0.0,
        }
    }
}

/// Tabulated lattice kernel with `β(x|ζ)` cached for `|ζ| ≤ 2`.
#[derive(Clone, Debug)]
pub struct LatticeOperatorKernel {
    kernel: LatticeKernel,
    beta0: Vec<f64>,
    /// `[x * m + y]`
    beta1: Vec<f64>,
    /// `[(x * m + a) * m + b]`
    beta2: Vec<f64>,
}

impl LatticeOperatorKernel {
    pub fn new(kernel: LatticeKernel) -> Self {
        let m = kernel.space().len();
        let beta0 = (0..m).map(|x| kernel.beta(x, SiteSet::EMPTY)).collect();
        let mut beta1 = vec![0.0; m * m];
        let mut beta2 = vec![0.0; m * m * m];
        for x in 0..m {
            for a in 0..m {
                beta1[x * m + a] = kernel.beta(x, SiteSet::singleton(a));
                for b in 0..m {
                    if a != b {
                        beta2[(x * m + a) * m + b] = kernel.beta(x, SiteSet::from_sites([a, b]));
                    }
                }
            }
        }
        Self { kernel, beta0, beta1, beta2 }
    }

    pub fn kernel(&self) -> &LatticeKernel {
        &self.kernel
    }

    pub fn space(&self) -> &LatticeSpace {
        self.kernel.space()
    }

    fn integrate_beta<F: Fn(usize) -> f64>(&self, zeta: &[usize], f: F) -> f64 {
        let m = self.beta0.len();
        let w = self.space().cell_weight();
        match zeta.len() {
            1 => w * (0..m).map(|x| self.beta1[x * m + zeta[0]] * f(x)).sum::<f64>(),
            2 => w * (0..m).map(|x| self.beta2[(x * m + zeta[0]) * m + zeta[1]] * f(x)).sum::<f64>(),
            _ => 0.0,
        }
    }
}

impl DiscreteKernel {
    pub fn new(spec: &KernelSpec, space: &SiteSpace) -> Result<Self, OperatorError> {
        match (spec, space) {
            (KernelSpec::TabulatedLattice(k), SiteSpace::Lattice(l)) => {
                if k.space() != l {
                    return Err(OperatorError::SpaceMismatch);
                }
                Ok(Self::Lattice(LatticeOperatorKernel::new(k.clone())))
            }
            (KernelSpec::TabulatedLattice(_), SiteSpace::Periodic(_)) => Err(OperatorError::LatticeKernelOnGrid),
            (_, SiteSpace::Periodic(g)) => Ok(Self::Grid(GridKernel::new(spec, *g)?)),
            (_, SiteSpace::Lattice(_)) => Err(OperatorError::ContinuumKernelOnLattice),
        }
    }

    pub fn space(&self) -> SiteSpace {
        match self {
            Self::Grid(g) => SiteSpace::Periodic(g.grid),
            Self::Lattice(l) => SiteSpace::Lattice(l.space().clone()),
        }
    }

    fn matches(&self, space: &SiteSpace) -> bool {
        match (self, space) {
            (Self::Grid(g), SiteSpace::Periodic(p)) => g.grid == *p,
            (Self::Lattice(l), SiteSpace::Lattice(s)) => l.space() == s,
            _ => false,
        }
    }

    pub fn is_translation_invariant(&self) -> bool {
        matches!(self, Self::Grid(_))
    }

    /// `β(x|∅)` at a site.
    #[inline]
    pub fn beta_empty(&self, site: usize) -> f64 {
        match self {
            Self::Grid(g) => g.beta_empty,
            Self::Lattice(l) => l.beta0[site],
        }
    }

    /// `sup_x β(x|∅)` of the discrete kernel.
    pub fn beta_bar(&self) -> f64 {
        match self {
            Self::Grid(g) => g.beta_empty,
            Self::Lattice(l) => l.beta0.iter().copied().fold(0.0, f64::max),
        }
    }

    /// `sup_{ζ≠∅} Σ_x w β(x|ζ)` of the discrete kernel.
    pub fn phi_bar(&self) -> f64 {
        match self {
            Self::Grid(g) => g.phi_bar,
            Self::Lattice(l) => l.kernel.phi_bar(),
        }
    }

    fn max_zeta(&self) -> usize {
        match self {
            Self::Grid(GridKernel { kind: GridKind::PureDeath, .. }) => 0,
            _ => 2,
        }
    }

    /// `Σ_x w β(x|ζ) f(x)`, atoms included.
    #[inline]
    pub fn integrate_beta<F: Fn(usize) -> f64>(&self, zeta: &[usize], f: F) -> f64 {
        match self {
            Self::Grid(g) => g.integrate_beta(zeta, f),
            Self::Lattice(l) => l.integrate_beta(zeta, f),
        }
    }

    /// `E(η)` for a tuple of sites.
    pub fn total_rate(&self, tuple: &[usize]) -> f64 {
        tuple.iter().map(|&s| self.beta_empty(s)).sum()
    }
}

fn check(kernel: &DiscreteKernel, k: &GridTruncation) -> Result<(), OperatorError> {
    if !kernel.matches(&k.space) {
        return Err(OperatorError::SpaceMismatch);
    }
    if k.storage == Storage::TranslationInvariant && !kernel.is_translation_invariant() {
        return Err(OperatorError::StorageMismatch);
    }
    Ok(())
}

/// Fills every entry of `out` from `f(n, tuple)` in parallel.
fn fill_entries(out: &mut GridTruncation, f: impl Fn(usize, &[usize]) -> f64 + Sync) {
    let layout = out.clone_layout();
    for n in 0..out.orders.len() {
        out.orders[n].par_iter_mut().enumerate().with_min_len(64).for_each(|(idx, v)| {
            let mut tuple = [0usize; MAX_ORDER + 1];
            layout.representative(n, idx, &mut tuple);
            *v = f(n, &tuple[..n]);
        });
    }
}

impl GridTruncation {
    // A cheap layout-only copy used to decode indices while `self` is borrowed mutably.
    fn clone_layout(&self) -> GridTruncation {
        GridTruncation { space: self.space.clone(), storage: self.storage, orders: Vec::new() }
    }
}

/// `E(η)` at each stored entry, laid out like `k`.
pub fn total_rates(kernel: &DiscreteKernel, k: &GridTruncation) -> Result<GridTruncation, OperatorError> {
    check(kernel, k)?;
    let mut out = k.zeros_like();
    fill_entries(&mut out, |_, tuple| kernel.total_rate(tuple));
    Ok(out)
}

/// `(Ak)(η) = −E(η) k(η)`.
pub fn apply_a(kernel: &DiscreteKernel, k: &GridTruncation) -> Result<GridTruncation, OperatorError> {
    check(kernel, k)?;
    let mut out = k.zeros_like();
    fill_entries(&mut out, |_, tuple| a_at(kernel, k, tuple));
    Ok(out)
}

fn has_repeat(tuple: &[usize]) -> bool {
    (0..tuple.len()).any(|i| tuple[i + 1..].contains(&tuple[i]))
}

fn a_at(kernel: &DiscreteKernel, k: &GridTruncation, eta: &[usize]) -> f64 {
    if k.space.excludes_coincident() && has_repeat(eta) {
        return 0.0;
    }
    -kernel.total_rate(eta) * k.value(eta)
}

/// `(Bk)(η)` at one tuple.
fn b_at(kernel: &DiscreteKernel, k: &GridTruncation, eta: &[usize]) -> f64 {
    let n = eta.len();
    let exclude = k.space.excludes_coincident();
    if exclude && has_repeat(eta) {
        return 0.0;
    }
    let max_zeta = kernel.max_zeta();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let zlen = mask.count_ones() as usize;
        if zlen > max_zeta {
            continue;
        }
        let mut zeta = [0usize; MAX_ORDER];
        let mut buf = [0usize; MAX_ORDER + 1];
        let (mut zi, mut ri) = (0, 0);
        for (i, &s) in eta.iter().enumerate() {
            if mask >> i & 1 == 1 {
                zeta[zi] = s;
                zi += 1;
            } else {
                buf[ri] = s;
                ri += 1;
            }
        }
        let rest_len = ri;
        total += kernel.integrate_beta(&zeta[..zlen], |x| {
            if exclude && buf[..rest_len].contains(&x) {
                return 0.0;
            }
            let mut t = buf;
            t[rest_len] = x;
            k.value(&t[..rest_len + 1])
        });
    }
    total
}

/// `(Bk)(η) = Σ_{∅≠ζ⊆η} Σ_x w β(x|ζ) k(η∖ζ ∪ x)`.
///
/// On a lattice, configurations are sets: tuples with a repeated site are
/// set to zero and `x` never coincides with a point of `η∖ζ`.
pub fn apply_b(kernel: &DiscreteKernel, k: &GridTruncation) -> Result<GridTruncation, OperatorError> {
    check(kernel, k)?;
    let mut out = k.zeros_like();
    fill_entries(&mut out, |_, tuple| b_at(kernel, k, tuple));
    Ok(out)
}

/// `L^Δ k = Ak + Bk`.
pub fn apply_l_delta(kernel: &DiscreteKernel, k: &GridTruncation) -> Result<GridTruncation, OperatorError> {
    check(kernel, k)?;
    let mut out = k.zeros_like();
    fill_entries(&mut out, |_, tuple| a_at(kernel, k, tuple) + b_at(kernel, k, tuple));
    Ok(out)
}

/// `(Ψ(t)k)(η) = e^{−tE(η)} k(η)`.
pub fn apply_psi(kernel: &DiscreteKernel, t: f64, k: &GridTruncation) -> Result<GridTruncation, OperatorError> {
    if !(t >= 0.0) {
        return Err(OperatorError::NegativeTime(t));
    }
    check(kernel, k)?;
    let mut out = k.zeros_like();
    fill_entries(&mut out, |_, tuple| (-t * kernel.total_rate(tuple)).exp() * k.value(tuple));
    Ok(out)
}

impl DiscreteKernel {
    /// Checks that `k` can be acted on by this kernel.
    pub fn check_compatible(&self, k: &GridTruncation) -> Result<(), OperatorError> {
        check(self, k)
    }
}

impl PartialEq for DiscreteKernel {
    fn eq(&self, other: &Self) -> bool {
        self.space() == other.space() && self.beta_bar() == other.beta_bar() && self.phi_bar() == other.phi_bar()
    }
}
