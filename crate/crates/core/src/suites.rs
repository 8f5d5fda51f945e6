//! Randomized oracle suites run by `fragmenta validate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config_space::{minlos_check, minlos_lattice, FiniteConfiguration, LatticeSpace, SiteSet};
use crate::grid::{PeriodicGrid, SiteSpace};
use crate::hierarchy::{apply_b, DiscreteKernel, GridTruncation, Storage};
use crate::kernel::{Dispersal, KernelSpec, Profile};
use crate::oracle::{DualityInstance, RandomTable, ORACLE_TOL};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub instances: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteResult {
    fn new(name: &str, errors: impl IntoIterator<Item = f64>, tolerance: f64) -> Self {
        let (mut instances, mut max_error) = (0, 0.0f64);
        let mut all_finite = true;
        for e in errors {
            instances += 1;
            all_finite &= e.is_finite();
            max_error = max_error.max(e);
        }
        Self { name: name.into(), instances, max_error, tolerance, passed: all_finite && max_error <= tolerance }
    }
}

/// Minlos identity for random tables `M` on configurations of up to 6 points.
pub fn minlos_suite(seed: u64, instances: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors: Vec<f64> = (0..instances)
        .map(|i| {
            let n = i % 7;
            let pts: Vec<Vec<f64>> = (0..n).map(|j| vec![j as f64 + rng.random::<f64>() * 0.5]).collect();
            let eta = FiniteConfiguration::new(1, pts).expect("distinct points");
            let table = RandomTable::minlos(&mut rng, n);
            let mask = |c: &FiniteConfiguration| {
                SiteSet::from_sites(c.points().map(|p| (0..n).find(|&j| eta.point(j) == p).expect("sub-configuration")))
            };
            let (lhs, rhs) = minlos_check(|z, e, r| table.get(mask(z), mask(e), mask(r)), &eta).expect("small");
            (lhs - rhs).abs()
        })
        .collect();
    SuiteResult::new("minlos identity (|eta| <= 6)", errors, 1e-12)
}

/// Minlos identity integrated against the Lebesgue–Poisson measure on small lattices.
pub fn minlos_lattice_suite(seed: u64, instances: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors: Vec<f64> = (0..instances)
        .map(|i| {
            let n = 1 + i % 5;
            let space = LatticeSpace::line(n, 0.2 + rng.random::<f64>()).expect("small lattice");
            let table = RandomTable::minlos(&mut rng, n);
            let (lhs, rhs) = minlos_lattice(|z, e, r| table.get(z, e, r), &space).expect("small");
            (lhs - rhs).abs()
        })
        .collect();
    SuiteResult::new("minlos identity, lattice integral form", errors, 1e-12)
}

/// Generator duality on random collision-free lattice instances.
pub fn duality_suite(seed: u64, instances: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors: Vec<f64> = (0..instances)
        .map(|i| {
            let inst = DualityInstance::random(&mut rng, 2 + i % 4);
            match inst.evaluate() {
                Ok((lhs, rhs)) => (lhs - rhs).abs(),
                Err(_) => f64::NAN,
            }
        })
        .collect();
    SuiteResult::new("generator duality (<= 5 sites)", errors, ORACLE_TOL)
}

/// Lattice kernels: `β(x|ζ)` by table lookup against the Lebesgue–Poisson
/// integral over clouds, and `φ` by both routes.
pub fn lattice_kernel_suite(seed: u64, instances: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors: Vec<f64> = (0..instances)
        .map(|i| {
            let inst = DualityInstance::random(&mut rng, 2 + i % 4);
            let KernelSpec::TabulatedLattice(k) = &inst.kernel else { unreachable!() };
            let space = k.space();
            let mut worst = 0.0f64;
            for zeta in space.all().subsets() {
                for x in 0..space.len() {
                    worst = worst.max((k.beta(x, zeta) - k.beta_by_lp_integral(x, zeta)).abs());
                }
                if !zeta.is_empty() {
                    let via_lp: f64 =
                        (0..space.len()).map(|x| space.cell_weight() * k.beta_by_lp_integral(x, zeta)).sum();
                    worst = worst.max((k.phi(zeta) - via_lp).abs());
                }
            }
            worst
        })
        .collect();
    SuiteResult::new("lattice kernel functionals, two routes", errors, 1e-12)
}

/// Continuum kernels on a grid: `B` applied to a constant `k⁽¹⁾ = ρ` must give `ρ φ({y})`.
pub fn grid_kernel_suite() -> SuiteResult {
    let grid = PeriodicGrid::new(1, 40, 10.0).expect("valid grid");
    let space = SiteSpace::Periodic(grid);
    let specs = [
        KernelSpec::contact(0.4, 1.3, Dispersal::gaussian(1, 1.0).expect("valid")).expect("valid"),
        KernelSpec::contact(0.2, 0.7, Dispersal::new(1, Profile::Exponential { scale: 0.6 }).expect("valid"))
            .expect("valid"),
        KernelSpec::cell_division(0.5, 1.1, Dispersal::gaussian(1, 0.8).expect("valid")).expect("valid"),
        KernelSpec::cell_division(0.5, 0.9, Dispersal::new(1, Profile::UniformBall { scale: 1.0 }).expect("valid"))
            .expect("valid"),
    ];
    let rho = 1.7;
    let errors: Vec<f64> = specs
        .iter()
        .map(|spec| {
            let kernel = DiscreteKernel::new(spec, &space).expect("compatible");
            let k = GridTruncation::poisson(space.clone(), Storage::TranslationInvariant, 1, rho).expect("valid");
            let b = apply_b(&kernel, &k).expect("compatible").order(1)[0];
            let y = FiniteConfiguration::new(1, vec![vec![0.0]]).expect("one point");
            (b - rho * spec.phi(&y).expect("integrable")).abs()
        })
        .collect();
    SuiteResult::new("grid operator on constants reproduces phi", errors, 1e-10)
}

/// Every suite, each with `instances` random cases where applicable.
pub fn all_suites(seed: u64, instances: usize) -> Vec<SuiteResult> {
    vec![
        minlos_suite(seed, instances),
        minlos_lattice_suite(seed.wrapping_add(1), instances),
        duality_suite(seed.wrapping_add(2), instances),
        lattice_kernel_suite(seed.wrapping_add(3), instances),
        grid_kernel_suite(),
    ]
}
