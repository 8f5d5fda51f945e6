//! Finite configurations and the discrete Lebesgue–Poisson calculus.
//!
//! On a finite site set `S` with cell weight `w`, the space of finite
//! configurations is the powerset of `S`, and the Lebesgue–Poisson measure
//! gives a subset `η` the weight `w^|η|`. Summing over sets rather than ordered
//! tuples absorbs the `1/n!` of the continuum definition, so every identity
//! checked here holds exactly up to floating point rounding.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// Largest site count for which subsets of a lattice are enumerated.
pub const MAX_ORACLE_SITES: usize = 16;
/// Largest configuration size accepted by [`k_transform`].
pub const MAX_TRANSFORM_POINTS: usize = 20;
/// Largest configuration size accepted by [`minlos_check`].
pub const MAX_MINLOS_POINTS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("enumeration over {found} points refused: at most {max} are supported")]
    TooLarge { found: usize, max: usize },
    #[error("configuration contains a repeated point {0:?}")]
    RepeatedPoint(Vec<f64>),
    #[error("point has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cell weight must be positive and finite, got {0}")]
    BadCellWeight(f64),
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("non-finite coordinate in point {0:?}")]
    NonFinite(Vec<f64>),
}

/// A finite set of points in `R^d`, kept in lexicographic order.
#[derive(Clone, PartialEq)]
pub struct FiniteConfiguration {
    dim: usize,
    coords: Vec<f64>,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

impl FiniteConfiguration {
    pub fn empty(dim: usize) -> Self {
        Self { dim, coords: Vec::new() }
    }

    /// Builds a configuration from points, sorting them and rejecting repeats.
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self, ConfigError> {
        if dim == 0 {
            return Err(ConfigError::ZeroDimension);
        }
        for p in &points {
            if p.len() != dim {
                return Err(ConfigError::DimensionMismatch { expected: dim, found: p.len() });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(ConfigError::NonFinite(p.clone()));
            }
        }
        let mut points = points;
        points.sort_by(|a, b| lex_cmp(a, b));
        for w in points.windows(2) {
            if lex_cmp(&w[0], &w[1]) == Ordering::Equal {
                return Err(ConfigError::RepeatedPoint(w[0].clone()));
            }
        }
        Ok(Self { dim, coords: points.into_iter().flatten().collect() })
    }

    /// Builds a configuration from a flat coordinate buffer (`len = n * dim`).
    pub fn from_flat(dim: usize, coords: &[f64]) -> Result<Self, ConfigError> {
        if dim == 0 {
            return Err(ConfigError::ZeroDimension);
        }
        Self::new(dim, coords.chunks(dim).map(<[f64]>::to_vec).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks(self.dim)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.points().any(|q| lex_cmp(p, q) == Ordering::Equal)
    }

    /// The sub-configuration selected by bit `i` of `mask` for point `i`.
    pub fn subset(&self, mask: SiteSet) -> Self {
        let mut coords = Vec::with_capacity(mask.len() * self.dim);
        for i in mask.iter() {
            coords.extend_from_slice(self.point(i));
        }
        Self { dim: self.dim, coords }
    }

    /// Set union; the two configurations may overlap.
    pub fn union(&self, other: &Self) -> Result<Self, ConfigError> {
        if other.dim != self.dim {
            return Err(ConfigError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut pts: Vec<Vec<f64>> = self.points().map(<[f64]>::to_vec).collect();
        for p in other.points() {
            if !self.contains(p) {
                pts.push(p.to_vec());
            }
        }
        Self::new(self.dim, pts)
    }

    pub fn to_points(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }
}

impl fmt::Debug for FiniteConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.points()).finish()
    }
}

/// A subset of a finite site set, one bit per site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SiteSet(pub u32);

impl SiteSet {
    pub const EMPTY: SiteSet = SiteSet(0);

    pub fn singleton(site: usize) -> Self {
        SiteSet(1 << site)
    }

    pub fn from_sites(sites: impl IntoIterator<Item = usize>) -> Self {
        SiteSet(sites.into_iter().fold(0, |m, s| m | (1 << s)))
    }

    /// All sites `0..n`.
    pub fn full(n: usize) -> Self {
        if n >= 32 {
            SiteSet(u32::MAX)
        } else {
            SiteSet((1u32 << n) - 1)
        }
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, site: usize) -> bool {
        self.0 >> site & 1 == 1
    }

    pub fn is_subset_of(self, other: SiteSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: SiteSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn union(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 | other.0)
    }

    pub fn minus(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 & !other.0)
    }

    pub fn insert(self, site: usize) -> SiteSet {
        SiteSet(self.0 | 1 << site)
    }

    pub fn remove(self, site: usize) -> SiteSet {
        SiteSet(self.0 & !(1 << site))
    }

    /// Site indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Every subset of `self`, including the empty set and `self`.
    pub fn subsets(self) -> impl Iterator<Item = SiteSet> {
        // Standard submask walk, descending from `self` to the empty set.
        let full = self.0;
        let mut next = Some(full);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == 0 { None } else { Some((cur - 1) & full) };
            Some(SiteSet(cur))
        })
    }
}

/// Finite site set carrying the discrete image of the Lebesgue–Poisson measure.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpace {
    dim: usize,
    sites: Vec<f64>,
    cell_weight: f64,
}

impl LatticeSpace {
    pub fn new(dim: usize, sites: Vec<Vec<f64>>, cell_weight: f64) -> Result<Self, ConfigError> {
        if !(cell_weight > 0.0 && cell_weight.is_finite()) {
            return Err(ConfigError::BadCellWeight(cell_weight));
        }
        if sites.len() > MAX_ORACLE_SITES {
            return Err(ConfigError::TooLarge { found: sites.len(), max: MAX_ORACLE_SITES });
        }
        // Reuse the configuration checks for distinctness; keep caller order.
        FiniteConfiguration::new(dim, sites.clone())?;
        Ok(Self { dim, sites: sites.into_iter().flatten().collect(), cell_weight })
    }

    /// `n` sites on a line with unit spacing.
    pub fn line(n: usize, cell_weight: f64) -> Result<Self, ConfigError> {
        Self::new(1, (0..n).map(|i| vec![i as f64]).collect(), cell_weight)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn cell_weight(&self) -> f64 {
        self.cell_weight
    }

    pub fn site(&self, i: usize) -> &[f64] {
        &self.sites[i * self.dim..(i + 1) * self.dim]
    }

    pub fn all(&self) -> SiteSet {
        SiteSet::full(self.len())
    }

    /// Lebesgue–Poisson weight of a subset.
    pub fn weight(&self, set: SiteSet) -> f64 {
        self.cell_weight.powi(set.len() as i32)
    }

    pub fn configuration(&self, set: SiteSet) -> FiniteConfiguration {
        let pts = set.iter().map(|i| self.site(i).to_vec()).collect();
        FiniteConfiguration::new(self.dim, pts).expect("lattice sites are distinct")
    }
}

/// `∫ G dλ` over the powerset of `space`: `Σ_η G(η) w^|η|`.
pub fn lp_integral(g: impl Fn(SiteSet) -> f64, space: &LatticeSpace) -> Result<f64, ConfigError> {
    lp_integral_over(g, space.all(), space)
}

/// As [`lp_integral`], restricted to subsets of `within`.
pub fn lp_integral_over(g: impl Fn(SiteSet) -> f64, within: SiteSet, space: &LatticeSpace) -> Result<f64, ConfigError> {
    if space.len() > MAX_ORACLE_SITES {
        return Err(ConfigError::TooLarge { found: space.len(), max: MAX_ORACLE_SITES });
    }
    Ok(within.subsets().map(|eta| g(eta) * space.weight(eta)).sum())
}

/// `Σ_{η ⊆ γ} G(η)` over all sub-configurations of `gamma`.
pub fn k_transform(g: impl Fn(&FiniteConfiguration) -> f64, gamma: &FiniteConfiguration) -> Result<f64, ConfigError> {
    if gamma.len() > MAX_TRANSFORM_POINTS {
        return Err(ConfigError::TooLarge { found: gamma.len(), max: MAX_TRANSFORM_POINTS });
    }
    Ok(SiteSet::full(gamma.len()).subsets().map(|m| g(&gamma.subset(m))).sum())
}

/// Both sides of the Minlos identity for a configuration `eta`.
///
/// The left side sums `M(ζ, η, η∖ζ)` over `ζ ⊆ η`; the right side sums
/// `M(ζ, η'∪ζ, η')` over disjoint pairs `(ζ, η')` covering `η`, enumerated
/// from the `η'` side.
pub fn minlos_check(
    m: impl Fn(&FiniteConfiguration, &FiniteConfiguration, &FiniteConfiguration) -> f64,
    eta: &FiniteConfiguration,
) -> Result<(f64, f64), ConfigError> {
    if eta.len() > MAX_MINLOS_POINTS {
        return Err(ConfigError::TooLarge { found: eta.len(), max: MAX_MINLOS_POINTS });
    }
    let full = SiteSet::full(eta.len());
    let lhs = full.subsets().map(|zeta| m(&eta.subset(zeta), eta, &eta.subset(full.minus(zeta)))).sum();
    let mut rhs = 0.0;
    // Ascending enumeration of η' so the summation order differs from the left side.
    for bits in 0..=full.0 {
        let rest = SiteSet(bits);
        let zeta = full.minus(rest);
        let rest_cfg = eta.subset(rest);
        let zeta_cfg = eta.subset(zeta);
        let joined = rest_cfg.union(&zeta_cfg)?;
        rhs += m(&zeta_cfg, &joined, &rest_cfg);
    }
    Ok((lhs, rhs))
}

/// The Minlos identity integrated over a lattice:
/// `∫ Σ_{ζ⊆η} M(ζ, η, η∖ζ) λ(dη)` against `∫∫ M(ζ, η∪ζ, η) λ(dζ) λ(dη)`,
/// the double integral running over disjoint pairs.
pub fn minlos_lattice(
    m: impl Fn(SiteSet, SiteSet, SiteSet) -> f64,
    space: &LatticeSpace,
) -> Result<(f64, f64), ConfigError> {
    let lhs = lp_integral(|eta| eta.subsets().map(|zeta| m(zeta, eta, eta.minus(zeta))).sum(), space)?;
    let all = space.all();
    let rhs = lp_integral(
        |zeta| {
            lp_integral_over(|eta| m(zeta, eta.union(zeta), eta), all.minus(zeta), space).expect("size already checked")
        },
        space,
    )?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn configuration_is_canonical() {
        let a = FiniteConfiguration::new(1, vec![vec![2.0], vec![0.5], vec![1.0]]).unwrap();
        let b = FiniteConfiguration::new(1, vec![vec![1.0], vec![2.0], vec![0.5]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.point(0), &[0.5]);
        assert!(matches!(FiniteConfiguration::new(1, vec![vec![1.0], vec![1.0]]), Err(ConfigError::RepeatedPoint(_))));
    }

    #[test]
    fn subset_walk_visits_each_subset_once() {
        let s = SiteSet(0b1011);
        let mut seen: Vec<u32> = s.subsets().map(|x| x.0).collect();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3, 8, 9, 10, 11]);
    }

    #[test]
    fn lp_integral_examples() {
        let one = LatticeSpace::line(1, 0.5).unwrap();
        let three = LatticeSpace::line(3, 0.7).unwrap();
        let two = LatticeSpace::line(2, 1.0).unwrap();
        assert_eq!(lp_integral(|e| if e.is_empty() { 1.0 } else { 0.0 }, &three).unwrap(), 1.0);
        assert!((lp_integral(|_| 1.0, &one).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(lp_integral(|e| (e.len() == 1) as u8 as f64, &two).unwrap(), 2.0);
        // Binomial identity.
        let total = lp_integral(|_| 1.0, &three).unwrap();
        assert!((total - 1.7f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn lp_integral_refuses_large_spaces() {
        let err = LatticeSpace::line(17, 1.0).unwrap_err();
        assert_eq!(err, ConfigError::TooLarge { found: 17, max: 16 });
    }

    #[test]
    fn k_transform_examples() {
        let gamma = FiniteConfiguration::new(1, vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(k_transform(|_| 0.0, &gamma).unwrap(), 0.0);
        assert_eq!(k_transform(|e| e.is_empty() as u8 as f64, &gamma).unwrap(), 1.0);
        assert_eq!(k_transform(|_| 1.0, &gamma).unwrap(), 8.0);
        let empty = FiniteConfiguration::empty(1);
        assert_eq!(k_transform(|e| 3.5 + e.len() as f64, &empty).unwrap(), 3.5);
        let big = FiniteConfiguration::new(1, (0..21).map(|i| vec![i as f64]).collect()).unwrap();
        assert!(k_transform(|_| 1.0, &big).is_err());
    }

    #[test]
    fn minlos_examples() {
        for n in 0..6 {
            let eta = FiniteConfiguration::new(1, (0..n).map(|i| vec![i as f64]).collect()).unwrap();
            let (l, r) = minlos_check(|_, _, _| 1.0, &eta).unwrap();
            assert_eq!(l, 2f64.powi(n));
            assert_eq!(r, 2f64.powi(n));
            let (l, r) = minlos_check(|z, _, _| z.is_empty() as u8 as f64, &eta).unwrap();
            assert_eq!((l, r), (1.0, 1.0));
        }
    }

    #[test]
    fn minlos_random_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eta = FiniteConfiguration::new(2, (0..4).map(|_| vec![rng.random(), rng.random()]).collect()).unwrap();
        let table: Vec<f64> = (0..16 * 16 * 16).map(|_| rng.random::<f64>()).collect();
        let code = |c: &FiniteConfiguration| -> usize {
            (0..eta.len()).filter(|&i| c.contains(eta.point(i))).map(|i| 1 << i).sum()
        };
        let (l, r) = minlos_check(|z, e, rest| table[code(z) * 256 + code(e) * 16 + code(rest)], &eta).unwrap();
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn minlos_on_lattice() {
        let space = LatticeSpace::line(5, 0.3).unwrap();
        let (l, r) = minlos_lattice(|z, e, rest| (1 + z.0 * 3 + e.0 * 5 + rest.0 * 7) as f64 % 11.0, &space).unwrap();
        assert!((l - r).abs() < 1e-12 * l.abs().max(1.0));
    }
}
