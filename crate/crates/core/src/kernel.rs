//! Fragmentation kernels `b(x|ξ)` and their derived functionals.
//!
//! A particle at `x` is replaced by a finite cloud `ξ` at rate density
//! `b(x|ξ)` with respect to the Lebesgue–Poisson measure. From `b` we derive
//! `β(x|ζ) = ∫ b(x|ξ∪ζ) λ(dξ)`, the total event rate `E(η) = Σ β(x|∅)` and the
//! mass `φ(ζ) = ∫ β(x|ζ) dx`.
//!
//! Continuum kernels are translation invariant and produce at most two
//! offspring. The contact kernel carries a Dirac component (one offspring sits
//! on the parent); it is kept as an explicit atom in [`Beta`] and is never
//! smeared onto a grid.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config_space::{lp_integral_over, ConfigError, FiniteConfiguration, LatticeSpace, SiteSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("{name} must be a finite non-negative number, got {value}")]
    BadRate { name: &'static str, value: f64 },
    #[error("{name} must be positive and finite, got {value}")]
    BadScale { name: &'static str, value: f64 },
    #[error(
        "φ(∅) = ∫β(x|∅)dx diverges for a translation-invariant kernel with positive rate; B only uses φ(ζ) for ζ ≠ ∅"
    )]
    NotIntegrable,
    #[error("total event rate β(x|∅) is zero: no cloud can be sampled")]
    ZeroRate,
    #[error("point {0:?} is not a site of the lattice")]
    NotASite(Vec<f64>),
    #[error("lattice kernels support clouds of at most 2 points, got {0}")]
    CloudTooLarge(usize),
    #[error("no closed form for {0}")]
    NoClosedForm(String),
    #[error("dimension mismatch: kernel has d = {expected}, argument has d = {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Shape of a normalized dispersal density on `R^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Gaussian { scale: f64 },
    UniformBall { scale: f64 },
    Exponential { scale: f64 },
}

/// A probability density `p` on `R^d`, radially symmetric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dispersal {
    dim: usize,
    profile: Profile,
}

/// `Γ(k/2)` for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    let mut g = if k % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if k % 2 == 0 { 1.0 } else { 0.5 };
    while 2.0 * x < k as f64 - 0.5 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    PI.powf(dim as f64 / 2.0) / gamma_half(dim + 2)
}

impl Dispersal {
    pub fn new(dim: usize, profile: Profile) -> Result<Self, KernelError> {
        if dim == 0 {
            return Err(ConfigError::ZeroDimension.into());
        }
        let s = profile.scale();
        if !(s > 0.0 && s.is_finite()) {
            return Err(KernelError::BadScale { name: "dispersal scale", value: s });
        }
        Ok(Self { dim, profile })
    }

    pub fn gaussian(dim: usize, sigma: f64) -> Result<Self, KernelError> {
        Self::new(dim, Profile::Gaussian { scale: sigma })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn scale(&self) -> f64 {
        self.profile.scale()
    }

    /// Density at radius `r`.
    pub fn density_at_radius(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        match self.profile {
            Profile::Gaussian { scale } => {
                (2.0 * PI * scale * scale).powf(-d / 2.0) * (-r * r / (2.0 * scale * scale)).exp()
            }
            Profile::UniformBall { scale } => {
                if r <= scale {
                    1.0 / (unit_ball_volume(self.dim) * scale.powf(d))
                } else {
                    0.0
                }
            }
            Profile::Exponential { scale } => (-r / scale).exp() / self.exponential_norm(scale),
        }
    }

    // ∫ e^{-|u|/ℓ} du = ℓ^d · |S^{d-1}| · Γ(d)
    fn exponential_norm(&self, scale: f64) -> f64 {
        let d = self.dim;
        let sphere = 2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d);
        let gamma_d: f64 = (1..d).map(|i| i as f64).product();
        scale.powi(d as i32) * sphere * gamma_d
    }

    pub fn density(&self, u: &[f64]) -> f64 {
        self.density_at_radius(u.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    /// `p(0)`, the supremum of the density.
    pub fn peak(&self) -> f64 {
        self.density_at_radius(0.0)
    }

    /// `∫ p(u)² du`, the supremum of the autocorrelation `p ⋆ p`.
    pub fn self_overlap(&self) -> f64 {
        let d = self.dim as f64;
        match self.profile {
            Profile::Gaussian { scale } => (4.0 * PI * scale * scale).powf(-d / 2.0),
            Profile::UniformBall { .. } => self.peak(),
            Profile::Exponential { .. } => self.peak() * 2f64.powf(-d),
        }
    }

    /// Autocorrelation `∫ p(x) p(x + r) dx` at separation `r`.
    pub fn autocorrelation(&self, r: f64) -> Result<f64, KernelError> {
        let d = self.dim as f64;
        match (self.profile, self.dim) {
            (Profile::Gaussian { scale }, _) => {
                Ok((4.0 * PI * scale * scale).powf(-d / 2.0) * (-r * r / (4.0 * scale * scale)).exp())
            }
            (Profile::UniformBall { scale }, 1) => Ok((2.0 * scale - r).max(0.0) / (4.0 * scale * scale)),
            (Profile::Exponential { scale }, 1) => Ok((1.0 + r / scale) * (-r / scale).exp() / (4.0 * scale)),
            (p, dim) => Err(KernelError::NoClosedForm(format!("autocorrelation of {p:?} in d = {dim}"))),
        }
    }

    /// Radius beyond which the density is negligible (or zero).
    pub fn effective_support(&self) -> f64 {
        match self.profile {
            Profile::Gaussian { scale } => 10.0 * scale,
            Profile::UniformBall { scale } => scale,
            Profile::Exponential { scale } => 40.0 * scale,
        }
    }

    /// Density of the displacement wrapped onto a torus of side `length`.
    pub fn periodized_density(&self, u: &[f64], length: f64) -> f64 {
        let k = (self.effective_support() / length).ceil() as i64 + 1;
        let mut total = 0.0;
        let mut image = vec![-k; self.dim];
        let mut shifted = vec![0.0; self.dim];
        loop {
            for (i, s) in shifted.iter_mut().enumerate() {
                *s = u[i] + image[i] as f64 * length;
            }
            total += self.density(&shifted);
            // odometer over the image lattice
            let mut axis = 0;
            loop {
                if axis == self.dim {
                    return total;
                }
                image[axis] += 1;
                if image[axis] <= k {
                    break;
                }
                image[axis] = -k;
                axis += 1;
            }
        }
    }

    /// Draws a displacement from `p`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.profile {
            Profile::Gaussian { scale } => (0..self.dim)
                .map(|_| {
                    scale * {
                        let z: f64 = StandardNormal.sample(rng);
                        z
                    }
                })
                .collect::<Vec<f64>>(),
            Profile::UniformBall { scale } => {
                let u: f64 = rng.random();
                let r = scale * u.powf(1.0 / self.dim as f64);
                self.direction(rng).into_iter().map(|c| c * r).collect()
            }
            Profile::Exponential { scale } => {
                let r: f64 = (0..self.dim).map(|_| -> f64 { Exp1.sample(rng) }).sum::<f64>() * scale;
                self.direction(rng).into_iter().map(|c| c * r).collect()
            }
        }
    }

    fn direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if n > 0.0 {
                return v.into_iter().map(|c| c / n).collect();
            }
        }
    }
}

impl Profile {
    pub fn scale(&self) -> f64 {
        match *self {
            Profile::Gaussian { scale } | Profile::UniformBall { scale } | Profile::Exponential { scale } => scale,
        }
    }
}

/// Tabulated kernel `b(x|ξ)` on a finite lattice, clouds of size ≤ 2.
///
/// Rates are densities with respect to the lattice Lebesgue–Poisson measure,
/// so a cloud `ξ` contributes `w^|ξ| b(x|ξ)` to the total rate of `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeKernel {
    space: LatticeSpace,
    /// Per parent site, the clouds with a non-zero rate.
    entries: Vec<Vec<(SiteSet, f64)>>,
}

impl LatticeKernel {
    pub fn new(space: LatticeSpace) -> Self {
        let n = space.len();
        Self { space, entries: vec![Vec::new(); n] }
    }

    pub fn space(&self) -> &LatticeSpace {
        &self.space
    }

    /// Sets `b(parent|cloud)`, replacing any previous value.
    pub fn set(&mut self, parent: usize, cloud: SiteSet, rate: f64) -> Result<(), KernelError> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(KernelError::BadRate { name: "lattice rate", value: rate });
        }
        if cloud.len() > 2 {
            return Err(KernelError::CloudTooLarge(cloud.len()));
        }
        if parent >= self.space.len() || !cloud.is_subset_of(self.space.all()) {
            return Err(KernelError::NotASite(vec![parent as f64]));
        }
        let row = &mut self.entries[parent];
        row.retain(|(c, _)| *c != cloud);
        if rate > 0.0 {
            row.push((cloud, rate));
            row.sort_by_key(|(c, _)| *c);
        }
        Ok(())
    }

    pub fn rate(&self, parent: usize, cloud: SiteSet) -> f64 {
        self.entries[parent].iter().find(|(c, _)| *c == cloud).map_or(0.0, |(_, r)| *r)
    }

    pub fn clouds(&self, parent: usize) -> &[(SiteSet, f64)] {
        &self.entries[parent]
    }

    /// `β(x|ζ) = Σ_{ξ ∩ ζ = ∅} w^|ξ| b(x|ξ∪ζ)`, summed over the table.
    pub fn beta(&self, parent: usize, zeta: SiteSet) -> f64 {
        let w = self.space.cell_weight();
        self.entries[parent]
            .iter()
            .filter(|(cloud, _)| zeta.is_subset_of(*cloud))
            .map(|(cloud, rate)| w.powi((cloud.len() - zeta.len()) as i32) * rate)
            .sum()
    }

    /// `β(x|ζ)` as a Lebesgue–Poisson integral over clouds disjoint from `ζ`.
    pub fn beta_by_lp_integral(&self, parent: usize, zeta: SiteSet) -> f64 {
        lp_integral_over(|xi| self.rate(parent, xi.union(zeta)), self.space.all().minus(zeta), &self.space)
            .expect("lattice size is bounded at construction")
    }

    /// `φ(ζ) = Σ_x w β(x|ζ)`.
    pub fn phi(&self, zeta: SiteSet) -> f64 {
        let w = self.space.cell_weight();
        (0..self.space.len()).map(|x| w * self.beta(x, zeta)).sum()
    }

    pub fn beta_bar(&self) -> f64 {
        (0..self.space.len()).map(|x| self.beta(x, SiteSet::EMPTY)).fold(0.0, f64::max)
    }

    /// Supremum of `φ(ζ)` over non-empty `ζ` with `|ζ| ≤ 2`.
    pub fn phi_bar(&self) -> f64 {
        let n = self.space.len();
        let mut best: f64 = 0.0;
        for a in 0..n {
            best = best.max(self.phi(SiteSet::singleton(a)));
            for b in a + 1..n {
                best = best.max(self.phi(SiteSet::from_sites([a, b])));
            }
        }
        best
    }

    pub fn sample_cloud<R: Rng + ?Sized>(&self, parent: usize, rng: &mut R) -> Result<SiteSet, KernelError> {
        let w = self.space.cell_weight();
        let total = self.beta(parent, SiteSet::EMPTY);
        if total <= 0.0 {
            return Err(KernelError::ZeroRate);
        }
        let mut u = rng.random::<f64>() * total;
        for (cloud, rate) in &self.entries[parent] {
            u -= w.powi(cloud.len() as i32) * rate;
            if u < 0.0 {
                return Ok(*cloud);
            }
        }
        Ok(self.entries[parent].last().map(|(c, _)| *c).unwrap_or_default())
    }
}

/// Absolutely continuous part and Dirac atoms of `x ↦ β(x|ζ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Beta {
    pub density: f64,
    /// `(position, mass)`: contributes `mass · δ(x − position)`.
    pub atoms: Vec<(Vec<f64>, f64)>,
}

/// The fragmentation kernel.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    /// `b(x|∅) = m`, nothing else.
    PureDeath {
        mortality: f64,
    },
    /// `b(x|∅) = m`, `b(x|{y₁,y₂}) = c(x|y₁,y₂) = rate · p(y₁−x) p(y₂−x)`.
    CellDivision {
        mortality: f64,
        division_rate: f64,
        offspring: Dispersal,
    },
    /// `b(x|∅) = m`, `b(x|{y₁,y₂}) = ½(δ(y₁−x)a(y₂−x) + δ(y₂−x)a(y₁−x))` with
    /// `a = mass · p`.
    Contact {
        mortality: f64,
        dispersal_mass: f64,
        dispersal: Dispersal,
    },
    TabulatedLattice(LatticeKernel),
}

fn check_rate(name: &'static str, value: f64) -> Result<(), KernelError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(KernelError::BadRate { name, value })
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(u: &[f64]) -> f64 {
    u.iter().map(|c| c * c).sum::<f64>().sqrt()
}

impl KernelSpec {
    pub fn pure_death(mortality: f64) -> Result<Self, KernelError> {
        check_rate("mortality", mortality)?;
        Ok(Self::PureDeath { mortality })
    }

    pub fn cell_division(mortality: f64, division_rate: f64, offspring: Dispersal) -> Result<Self, KernelError> {
        check_rate("mortality", mortality)?;
        check_rate("division rate", division_rate)?;
        Ok(Self::CellDivision { mortality, division_rate, offspring })
    }

    pub fn contact(mortality: f64, dispersal_mass: f64, dispersal: Dispersal) -> Result<Self, KernelError> {
        check_rate("mortality", mortality)?;
        check_rate("dispersal mass", dispersal_mass)?;
        Ok(Self::Contact { mortality, dispersal_mass, dispersal })
    }

    /// Spatial dimension, or `None` for a pure-death kernel (any dimension).
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::PureDeath { .. } => None,
            Self::CellDivision { offspring, .. } => Some(offspring.dim()),
            Self::Contact { dispersal, .. } => Some(dispersal.dim()),
            Self::TabulatedLattice(k) => Some(k.space().dim()),
        }
    }

    pub fn dispersal(&self) -> Option<&Dispersal> {
        match self {
            Self::CellDivision { offspring, .. } => Some(offspring),
            Self::Contact { dispersal, .. } => Some(dispersal),
            _ => None,
        }
    }

    pub fn mortality(&self) -> Option<f64> {
        match *self {
            Self::PureDeath { mortality } | Self::CellDivision { mortality, .. } | Self::Contact { mortality, .. } => {
                Some(mortality)
            }
            Self::TabulatedLattice(_) => None,
        }
    }

    fn check_dim(&self, p: &[f64]) -> Result<(), KernelError> {
        match self.dim() {
            Some(d) if d != p.len() => Err(KernelError::DimensionMismatch { expected: d, found: p.len() }),
            _ => Ok(()),
        }
    }

    fn lattice_sites(k: &LatticeKernel, cfg: &FiniteConfiguration) -> Result<SiteSet, KernelError> {
        let space = k.space();
        let mut set = SiteSet::EMPTY;
        for p in cfg.points() {
            let site =
                (0..space.len()).find(|&i| space.site(i) == p).ok_or_else(|| KernelError::NotASite(p.to_vec()))?;
            set = set.insert(site);
        }
        Ok(set)
    }

    fn lattice_site(k: &LatticeKernel, x: &[f64]) -> Result<usize, KernelError> {
        let space = k.space();
        (0..space.len()).find(|&i| space.site(i) == x).ok_or_else(|| KernelError::NotASite(x.to_vec()))
    }

    /// `β(x|∅)`, the total event rate of a particle at `x`.
    pub fn beta_empty(&self, x: &[f64]) -> Result<f64, KernelError> {
        self.check_dim(x)?;
        Ok(match self {
            Self::PureDeath { mortality } => *mortality,
            Self::CellDivision { mortality, division_rate, .. } => mortality + 0.5 * division_rate,
            Self::Contact { mortality, dispersal_mass, .. } => mortality + 0.5 * dispersal_mass,
            Self::TabulatedLattice(k) => k.beta(Self::lattice_site(k, x)?, SiteSet::EMPTY),
        })
    }

    /// `β(x|ζ)` split into density and atoms (in the variable `x`).
    ///
    /// Two-offspring kernels vanish on `|ζ| > 2`; that case returns zero.
    pub fn beta(&self, x: &[f64], zeta: &FiniteConfiguration) -> Result<Beta, KernelError> {
        self.check_dim(x)?;
        let none = |density| Beta { density, atoms: Vec::new() };
        if zeta.is_empty() {
            return Ok(none(self.beta_empty(x)?));
        }
        Ok(match self {
            Self::PureDeath { .. } => none(0.0),
            Self::CellDivision { division_rate, offspring, .. } => match zeta.len() {
                1 => none(division_rate * offspring.density(&diff(zeta.point(0), x))),
                2 => none(
                    division_rate
                        * offspring.density(&diff(zeta.point(0), x))
                        * offspring.density(&diff(zeta.point(1), x)),
                ),
                _ => none(0.0),
            },
            Self::Contact { dispersal_mass, dispersal, .. } => match zeta.len() {
                1 => {
                    let y = zeta.point(0);
                    Beta {
                        density: 0.5 * dispersal_mass * dispersal.density(&diff(y, x)),
                        atoms: vec![(y.to_vec(), 0.5 * dispersal_mass)],
                    }
                }
                2 => {
                    let (y1, y2) = (zeta.point(0), zeta.point(1));
                    let a12 = dispersal_mass * dispersal.density(&diff(y2, y1));
                    Beta { density: 0.0, atoms: vec![(y1.to_vec(), 0.5 * a12), (y2.to_vec(), 0.5 * a12)] }
                }
                _ => none(0.0),
            },
            Self::TabulatedLattice(k) => {
                let site = Self::lattice_site(k, x)?;
                none(k.beta(site, Self::lattice_sites(k, zeta)?))
            }
        })
    }

    /// `E(η) = Σ_{x∈η} β(x|∅)`.
    pub fn total_rate(&self, eta: &FiniteConfiguration) -> Result<f64, KernelError> {
        eta.points().map(|x| self.beta_empty(x)).sum()
    }

    /// `φ(ζ) = ∫ β(x|ζ) dx`, in closed form.
    pub fn phi(&self, zeta: &FiniteConfiguration) -> Result<f64, KernelError> {
        if zeta.is_empty() {
            return match self {
                Self::TabulatedLattice(k) => Ok(k.phi(SiteSet::EMPTY)),
                _ if self.beta_bar() == 0.0 => Ok(0.0),
                _ => Err(KernelError::NotIntegrable),
            };
        }
        if let Some(d) = self.dim() {
            if zeta.dim() != d {
                return Err(KernelError::DimensionMismatch { expected: d, found: zeta.dim() });
            }
        }
        match self {
            Self::PureDeath { .. } => Ok(0.0),
            Self::CellDivision { division_rate, offspring, .. } => match zeta.len() {
                1 => Ok(*division_rate),
                2 => Ok(division_rate * offspring.autocorrelation(norm(&diff(zeta.point(1), zeta.point(0))))?),
                _ => Ok(0.0),
            },
            Self::Contact { dispersal_mass, dispersal, .. } => match zeta.len() {
                1 => Ok(*dispersal_mass),
                2 => Ok(dispersal_mass * dispersal.density(&diff(zeta.point(1), zeta.point(0)))),
                _ => Ok(0.0),
            },
            Self::TabulatedLattice(k) => Ok(k.phi(Self::lattice_sites(k, zeta)?)),
        }
    }

    /// `β̄ = sup_x β(x|∅)`.
    pub fn beta_bar(&self) -> f64 {
        match self {
            Self::PureDeath { mortality } => *mortality,
            Self::CellDivision { mortality, division_rate, .. } => mortality + 0.5 * division_rate,
            Self::Contact { mortality, dispersal_mass, .. } => mortality + 0.5 * dispersal_mass,
            Self::TabulatedLattice(k) => k.beta_bar(),
        }
    }

    /// `φ̄ = sup_{ζ≠∅} φ(ζ)`.
    pub fn phi_bar(&self) -> f64 {
        match self {
            Self::PureDeath { .. } => 0.0,
            Self::CellDivision { division_rate, offspring, .. } => division_rate * offspring.self_overlap().max(1.0),
            Self::Contact { dispersal_mass, dispersal, .. } => dispersal_mass * dispersal.peak().max(1.0),
            Self::TabulatedLattice(k) => k.phi_bar(),
        }
    }

    /// Probability that an event of a particle at `x` leaves an empty cloud.
    pub fn death_fraction(&self, x: &[f64]) -> Result<f64, KernelError> {
        let total = self.beta_empty(x)?;
        if total <= 0.0 {
            return Err(KernelError::ZeroRate);
        }
        Ok(match self {
            Self::TabulatedLattice(k) => k.rate(Self::lattice_site(k, x)?, SiteSet::EMPTY) / total,
            _ => self.mortality().unwrap_or(0.0) / total,
        })
    }

    /// Draws a cloud from `b(x|·)/β(x|∅)`. Offspring positions are not wrapped.
    pub fn sample_cloud<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<FiniteConfiguration, KernelError> {
        let total = self.beta_empty(x)?;
        if total <= 0.0 {
            return Err(KernelError::ZeroRate);
        }
        let dim = x.len();
        let shifted = |z: Vec<f64>| -> Vec<f64> { x.iter().zip(z).map(|(a, b)| a + b).collect() };
        let cloud = match self {
            Self::PureDeath { .. } => FiniteConfiguration::empty(dim),
            Self::CellDivision { mortality, offspring, .. } => {
                if rng.random::<f64>() * total < *mortality {
                    FiniteConfiguration::empty(dim)
                } else {
                    let a = shifted(offspring.sample(rng));
                    let b = shifted(offspring.sample(rng));
                    FiniteConfiguration::new(dim, vec![a, b])?
                }
            }
            Self::Contact { mortality, dispersal, .. } => {
                if rng.random::<f64>() * total < *mortality {
                    FiniteConfiguration::empty(dim)
                } else {
                    let child = shifted(dispersal.sample(rng));
                    FiniteConfiguration::new(dim, vec![x.to_vec(), child])?
                }
            }
            Self::TabulatedLattice(k) => {
                let cloud = k.sample_cloud(Self::lattice_site(k, x)?, rng)?;
                k.space().configuration(cloud)
            }
        };
        Ok(cloud)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(points: &[&[f64]]) -> FiniteConfiguration {
        FiniteConfiguration::new(points[0].len(), points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    /// Composite Simpson rule on [a, b].
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn gamma_half_values() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(2), 1.0);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-14);
        assert_eq!(gamma_half(8), 6.0);
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn dispersal_densities_are_normalized() {
        for profile in
            [Profile::Gaussian { scale: 0.7 }, Profile::UniformBall { scale: 0.7 }, Profile::Exponential { scale: 0.7 }]
        {
            let p = Dispersal::new(1, profile).unwrap();
            let mass = simpson(|u| p.density(&[u]), -40.0, 40.0, 400_000);
            assert!((mass - 1.0).abs() < 1e-4, "{profile:?}: {mass}");
            let overlap = simpson(|u| p.density(&[u]).powi(2), -40.0, 40.0, 400_000);
            assert!((overlap - p.self_overlap()).abs() < 1e-3, "{profile:?}");
            for r in [0.0, 0.3, 1.1] {
                let ac = simpson(|u| p.density(&[u]) * p.density(&[u + r]), -40.0, 40.0, 400_000);
                assert!((ac - p.autocorrelation(r).unwrap()).abs() < 1e-3, "{profile:?} r={r}");
            }
        }
        // 2d: radial integral 2π ∫ r p(r) dr
        for profile in [Profile::Gaussian { scale: 0.5 }, Profile::Exponential { scale: 0.5 }] {
            let p = Dispersal::new(2, profile).unwrap();
            let mass = simpson(|r| 2.0 * PI * r * p.density_at_radius(r), 0.0, 40.0, 200_000);
            assert!((mass - 1.0).abs() < 1e-6, "{profile:?}: {mass}");
        }
    }

    #[test]
    fn periodized_density_keeps_mass() {
        let p = Dispersal::gaussian(1, 1.0).unwrap();
        let l = 6.0;
        let mass = simpson(|u| p.periodized_density(&[u], l), -3.0, 3.0, 6000);
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pure_death_functionals() {
        let k = KernelSpec::pure_death(1.0).unwrap();
        let y = cfg(&[&[0.3]]);
        assert_eq!(k.beta_empty(&[0.0]).unwrap(), 1.0);
        assert_eq!(k.beta(&[0.0], &y).unwrap().density, 0.0);
        assert_eq!(k.phi(&y).unwrap(), 0.0);
        let k2 = KernelSpec::pure_death(2.0).unwrap();
        let eta = FiniteConfiguration::new(1, (0..5).map(|i| vec![i as f64]).collect()).unwrap();
        assert_eq!(k2.total_rate(&eta).unwrap(), 10.0);
        assert_eq!(k2.total_rate(&FiniteConfiguration::empty(1)).unwrap(), 0.0);
        assert!(matches!(k2.phi(&FiniteConfiguration::empty(1)), Err(KernelError::NotIntegrable)));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert!(k2.sample_cloud(&[0.0], &mut rng).unwrap().is_empty());
        }
    }

    #[test]
    fn cell_division_without_division_is_death() {
        let k = KernelSpec::cell_division(0.4, 0.0, Dispersal::gaussian(1, 1.0).unwrap()).unwrap();
        assert_eq!(k.beta_empty(&[1.0]).unwrap(), 0.4);
    }

    #[test]
    fn contact_beta_empty_matches_lebesgue_poisson_quadrature() {
        // β(x|∅) = b(x|∅) + ½∫∫ b(x|{y₁,y₂}) dy₁dy₂, with the δ integrated by hand:
        // ½∫∫ ½(δ(y₁−x)a(y₂−x) + δ(y₂−x)a(y₁−x)) = ½·½·(∫a + ∫a).
        let p = Dispersal::gaussian(1, 0.8).unwrap();
        let k = KernelSpec::contact(0.2, 1.0, p).unwrap();
        let a_mass = simpson(|u| 1.0 * p.density(&[u]), -20.0, 20.0, 20_000);
        let oracle = 0.2 + 0.5 * (0.5 * a_mass + 0.5 * a_mass);
        assert!((oracle - 0.7).abs() < 1e-10);
        assert!((k.beta_empty(&[0.0]).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn contact_phi_matches_quadrature() {
        let p = Dispersal::gaussian(1, 0.8).unwrap();
        let k = KernelSpec::contact(0.2, 1.3, p).unwrap();
        let y = [0.4];
        let zeta = cfg(&[&y]);
        let b = k.beta(&[0.0], &zeta).unwrap();
        assert_eq!(b.atoms.len(), 1);
        let smooth = simpson(|x| k.beta(&[x], &zeta).unwrap().density, -20.0, 20.0, 20_000);
        let oracle = smooth + b.atoms.iter().map(|a| a.1).sum::<f64>();
        assert!((k.phi(&zeta).unwrap() - oracle).abs() < 1e-9);
        assert!((oracle - 1.3).abs() < 1e-9);
        let pair = cfg(&[&[0.0], &[0.5]]);
        let b = k.beta(&[0.0], &pair).unwrap();
        let atom_mass: f64 = b.atoms.iter().map(|a| a.1).sum();
        assert!((k.phi(&pair).unwrap() - atom_mass).abs() < 1e-15);
        assert!(k.phi(&pair).unwrap() <= k.phi_bar());
        assert!(k.phi(&zeta).unwrap() <= k.phi_bar());
    }

    #[test]
    fn cell_division_phi_matches_quadrature() {
        let p = Dispersal::new(1, Profile::Exponential { scale: 0.6 }).unwrap();
        let k = KernelSpec::cell_division(0.3, 2.0, p).unwrap();
        for pts in [vec![vec![0.2]], vec![vec![0.0], vec![0.9]]] {
            let zeta = FiniteConfiguration::new(1, pts).unwrap();
            let q = simpson(|x| k.beta(&[x], &zeta).unwrap().density, -40.0, 40.0, 400_000);
            assert!((q - k.phi(&zeta).unwrap()).abs() < 1e-4, "{zeta:?}");
            assert!(k.phi(&zeta).unwrap() <= k.phi_bar() + 1e-15);
        }
        // Symmetry under y₁ ↔ y₂ (the configuration is a set; compare raw evaluation).
        let (y1, y2) = ([0.3], [-0.8]);
        let c12 = 2.0 * p.density(&diff(&y1, &[0.1])) * p.density(&diff(&y2, &[0.1]));
        let c21 = 2.0 * p.density(&diff(&y2, &[0.1])) * p.density(&diff(&y1, &[0.1]));
        assert_eq!(c12, c21);
        let b = k.beta(&[0.1], &cfg(&[&y1, &y2])).unwrap();
        assert!((b.density - c12).abs() < 1e-15);
    }

    #[test]
    fn contact_without_mortality_keeps_parent() {
        let p = Dispersal::gaussian(2, 0.5).unwrap();
        let k = KernelSpec::contact(0.0, 1.0, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let c = k.sample_cloud(&[0.25, -1.0], &mut rng).unwrap();
            assert_eq!(c.len(), 2);
            assert!(c.contains(&[0.25, -1.0]));
        }
    }

    #[test]
    fn contact_death_frequency_is_binomial() {
        let p = Dispersal::gaussian(1, 0.5).unwrap();
        let k = KernelSpec::contact(1.0, 1.4, p).unwrap();
        let expected = 1.0 / k.beta_empty(&[0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        let deaths = (0..n).filter(|_| k.sample_cloud(&[0.0], &mut rng).unwrap().is_empty()).count();
        let freq = deaths as f64 / n as f64;
        let sd = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((freq - expected).abs() < 3.0 * sd, "{freq} vs {expected}");
    }

    fn random_lattice_kernel(rng: &mut ChaCha8Rng, n: usize) -> LatticeKernel {
        let space = LatticeSpace::line(n, 0.3 + rng.random::<f64>()).unwrap();
        let mut k = LatticeKernel::new(space);
        for x in 0..n {
            for cloud in SiteSet::full(n).subsets().filter(|c| c.len() <= 2) {
                if rng.random::<f64>() < 0.6 {
                    k.set(x, cloud, rng.random()).unwrap();
                }
            }
        }
        k
    }

    #[test]
    fn lattice_beta_two_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let k = random_lattice_kernel(&mut rng, 5);
            for x in 0..5 {
                for zeta in SiteSet::full(5).subsets() {
                    let a = k.beta(x, zeta);
                    let b = k.beta_by_lp_integral(x, zeta);
                    assert!((a - b).abs() < 1e-12, "x={x} ζ={zeta:?}: {a} vs {b}");
                }
            }
            // φ two ways: direct sum vs. lp-integral based.
            let space = k.space().clone();
            for zeta in SiteSet::full(5).subsets().filter(|z| !z.is_empty()) {
                let via_lp: f64 = (0..5).map(|x| space.cell_weight() * k.beta_by_lp_integral(x, zeta)).sum();
                assert!((k.phi(zeta) - via_lp).abs() < 1e-12);
                assert!(k.phi(zeta) <= k.phi_bar() + 1e-15 || zeta.len() > 2);
            }
        }
    }

    #[test]
    fn lattice_cloud_sizes_follow_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let k = random_lattice_kernel(&mut rng, 4);
        let w = k.space().cell_weight();
        let total = k.beta(0, SiteSet::EMPTY);
        let mut expected = [0.0; 3];
        for (c, r) in k.clouds(0) {
            expected[c.len()] += w.powi(c.len() as i32) * r / total;
        }
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[k.sample_cloud(0, &mut rng).unwrap().len()] += 1;
        }
        // chi-square with 2 degrees of freedom; 1% critical value 9.21
        let chi2: f64 = (0..3)
            .filter(|&i| expected[i] > 0.0)
            .map(|i| (counts[i] as f64 - n as f64 * expected[i]).powi(2) / (n as f64 * expected[i]))
            .sum();
        assert!(chi2 < 9.21, "chi2 = {chi2}");
    }

    #[test]
    fn rates_are_validated() {
        assert!(KernelSpec::pure_death(-1.0).is_err());
        assert!(Dispersal::gaussian(1, 0.0).is_err());
        let mut k = LatticeKernel::new(LatticeSpace::line(4, 1.0).unwrap());
        assert_eq!(k.set(0, SiteSet(0b111), 1.0), Err(KernelError::CloudTooLarge(3)));
        assert!(k.set(0, SiteSet(0b1), f64::NAN).is_err());
    }
}
