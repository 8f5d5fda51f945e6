//! Exhaustive finite-lattice oracles: the generator duality
//! `∫ (L F_θ) dμ = ∫ (L^Δ k_μ) e_θ dλ` and random instances for it and for the
//! Minlos identity.
//!
//! On a lattice, configurations are sets, so an offspring landing on an
//! occupied site would merge with it. The continuum identity has no such
//! collisions; the oracle therefore requires that no cloud of a particle in
//! the support of `μ` meets the rest of its configuration, and the dual
//! generator never places `x` on a point of `η∖ζ`.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::config_space::{lp_integral, ConfigError, LatticeSpace, SiteSet, MAX_ORACLE_SITES};
use crate::kernel::{KernelError, KernelSpec, LatticeKernel};

/// Default absolute tolerance for oracle comparisons.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("the duality oracle needs a kernel tabulated on a lattice")]
    NotTabulated,
    #[error("μ must sum to 1, sums to {0}")]
    NotNormalized(f64),
    #[error("μ has a negative weight {0}")]
    NegativeWeight(f64),
    #[error("θ must take values in (-1, 0], got {0} at site {1}")]
    ThetaOutOfRange(f64, usize),
    #[error("θ has {found} values for {expected} sites")]
    ThetaLength { expected: usize, found: usize },
    #[error("μ charges a set outside the lattice")]
    OutsideLattice,
    #[error("an offspring of site {parent} lands on occupied site {site}; sets cannot hold both")]
    Collision { parent: usize, site: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// `F_θ(γ) = Π_{x∈γ} (1 + θ(x))`.
fn f_theta(theta: &[f64], gamma: SiteSet) -> f64 {
    gamma.iter().map(|x| 1.0 + theta[x]).product()
}

/// `e_θ(η) = Π_{x∈η} θ(x)`.
fn e_theta(theta: &[f64], eta: SiteSet) -> f64 {
    eta.iter().map(|x| theta[x]).product()
}

/// `(LF)(γ) = Σ_{x∈γ} Σ_ξ w^|ξ| b(x|ξ) [F(γ∖x ∪ ξ) − F(γ)]`.
pub fn apply_generator(kernel: &LatticeKernel, f: impl Fn(SiteSet) -> f64, gamma: SiteSet) -> f64 {
    let w = kernel.space().cell_weight();
    let base = f(gamma);
    gamma
        .iter()
        .map(|x| {
            kernel
                .clouds(x)
                .iter()
                .map(|&(xi, rate)| w.powi(xi.len() as i32) * rate * (f(gamma.remove(x).union(xi)) - base))
                .sum::<f64>()
        })
        .sum()
}

/// `k_μ(η) = w^{−|η|} Σ_{γ⊇η} μ(γ)` for every subset of the lattice.
pub fn correlation_of(mu: &[(SiteSet, f64)], space: &LatticeSpace) -> Vec<f64> {
    let n = space.len();
    let mut k = vec![0.0; 1 << n];
    for &(gamma, p) in mu {
        for eta in gamma.subsets() {
            k[eta.0 as usize] += p;
        }
    }
    for (bits, v) in k.iter_mut().enumerate() {
        *v /= space.weight(SiteSet(bits as u32));
    }
    k
}

/// `(L^Δ k)(η) = −E(η) k(η) + Σ_{∅≠ζ⊆η} Σ_{x∉η∖ζ} w β(x|ζ) k(η∖ζ ∪ x)`,
/// evaluated by direct enumeration.
pub fn apply_dual_generator(kernel: &LatticeKernel, k: impl Fn(SiteSet) -> f64, eta: SiteSet) -> f64 {
    let space = kernel.space();
    let w = space.cell_weight();
    let energy: f64 = eta.iter().map(|x| kernel.beta(x, SiteSet::EMPTY)).sum();
    let mut total = -energy * k(eta);
    for zeta in eta.subsets().filter(|z| !z.is_empty()) {
        let rest = eta.minus(zeta);
        for x in (0..space.len()).filter(|&x| !rest.contains(x)) {
            let b = kernel.beta(x, zeta);
            if b != 0.0 {
                total += w * b * k(rest.insert(x));
            }
        }
    }
    total
}

/// Both sides of the duality identity for a tabulated kernel, a test
/// function `θ: sites → (−1, 0]` and a probability table `μ` over subsets.
pub fn duality_oracle(kernel: &KernelSpec, theta: &[f64], mu: &[(SiteSet, f64)]) -> Result<(f64, f64), OracleError> {
    let KernelSpec::TabulatedLattice(kernel) = kernel else {
        return Err(OracleError::NotTabulated);
    };
    let space = kernel.space();
    if space.len() > MAX_ORACLE_SITES {
        return Err(ConfigError::TooLarge { found: space.len(), max: MAX_ORACLE_SITES }.into());
    }
    if theta.len() != space.len() {
        return Err(OracleError::ThetaLength { expected: space.len(), found: theta.len() });
    }
    if let Some((i, &t)) = theta.iter().enumerate().find(|(_, &t)| !(t > -1.0 && t <= 0.0)) {
        return Err(OracleError::ThetaOutOfRange(t, i));
    }
    if let Some(&(_, p)) = mu.iter().find(|(_, p)| !(*p >= 0.0)) {
        return Err(OracleError::NegativeWeight(p));
    }
    let total: f64 = mu.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > ORACLE_TOL {
        return Err(OracleError::NotNormalized(total));
    }
    let all = space.all();
    for &(gamma, p) in mu {
        if !gamma.is_subset_of(all) {
            return Err(OracleError::OutsideLattice);
        }
        if p == 0.0 {
            continue;
        }
        for x in gamma.iter() {
            let others = gamma.remove(x);
            for &(xi, rate) in kernel.clouds(x) {
                if rate != 0.0 {
                    if let Some(site) = xi.minus(SiteSet::singleton(x)).iter().find(|&s| others.contains(s)) {
                        return Err(OracleError::Collision { parent: x, site });
                    }
                }
            }
        }
    }

    let lhs: f64 = mu.iter().map(|&(gamma, p)| p * apply_generator(kernel, |g| f_theta(theta, g), gamma)).sum();
    let k = correlation_of(mu, space);
    let rhs = lp_integral(
        |eta| {
            let e = e_theta(theta, eta);
            if e == 0.0 {
                0.0
            } else {
                e * apply_dual_generator(kernel, |s| k[s.0 as usize], eta)
            }
        },
        space,
    )?;
    Ok((lhs, rhs))
}

/// One random collision-free duality instance.
#[derive(Clone, Debug)]
pub struct DualityInstance {
    pub kernel: KernelSpec,
    pub theta: Vec<f64>,
    pub mu: Vec<(SiteSet, f64)>,
}

impl DualityInstance {
    /// Random instance on `sites ≤ 5` sites (at least 2).
    ///
    /// Sites are split into parent sites, which carry `μ`, and offspring
    /// sites. Clouds of parent sites live on the offspring sites plus the
    /// parent itself, so no event can collide with another particle.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, sites: usize) -> Self {
        assert!((2..=5).contains(&sites), "instances use 2..=5 sites");
        let space = LatticeSpace::line(sites, 0.3 + 1.2 * rng.random::<f64>()).expect("small lattice");
        let parents = rng.random_range(1..sites);
        let parent_set = SiteSet::full(parents);
        let offspring_set = space.all().minus(parent_set);
        let mut kernel = LatticeKernel::new(space.clone());
        for x in 0..sites {
            let allowed = if x < parents { offspring_set.insert(x) } else { space.all() };
            for cloud in allowed.subsets().filter(|c| c.len() <= 2) {
                if rng.random::<f64>() < 0.7 {
                    kernel.set(x, cloud, 2.0 * rng.random::<f64>()).expect("clouds have at most two sites");
                }
            }
        }
        let theta = (0..sites).map(|_| -0.95 * rng.random::<f64>()).collect();
        let mut mu = Vec::new();
        for g in parent_set.subsets() {
            if rng.random::<f64>() < 0.8 {
                mu.push((g, rng.random::<f64>()));
            }
        }
        if mu.is_empty() {
            mu.push((parent_set, 1.0));
        }
        let total: f64 = mu.iter().map(|(_, p)| p).sum();
        mu.iter_mut().for_each(|(_, p)| *p /= total);
        Self { kernel: KernelSpec::TabulatedLattice(kernel), theta, mu }
    }

    pub fn evaluate(&self) -> Result<(f64, f64), OracleError> {
        duality_oracle(&self.kernel, &self.theta, &self.mu)
    }
}

/// A random real table `M(ζ, η, rest)` over triples of subsets of a lattice.
#[derive(Clone, Debug)]
pub struct RandomTable {
    values: HashMap<(u32, u32, u32), f64>,
}

impl RandomTable {
    /// Table for every triple used by the Minlos identity on `sites` points.
    pub fn minlos<R: Rng + ?Sized>(rng: &mut R, sites: usize) -> Self {
        let mut values = HashMap::new();
        for eta in SiteSet::full(sites).subsets() {
            for zeta in eta.subsets() {
                values.insert((zeta.0, eta.0, eta.minus(zeta).0), rng.random_range(-1.0..1.0));
            }
        }
        Self { values }
    }

    pub fn get(&self, zeta: SiteSet, eta: SiteSet, rest: SiteSet) -> f64 {
        self.values.get(&(zeta.0, eta.0, rest.0)).copied().unwrap_or(0.0)
    }
}
