//! Solver-side counterparts of the simulator's estimators, and the checks
//! that compare them.

use serde::Serialize;

use crate::grid::SiteSpace;
use crate::hierarchy::{GridTruncation, Storage};
use crate::sim::{BinEstimate, Estimate};

/// Spatial mean of `k⁽¹⁾`.
pub fn density(k: &GridTruncation) -> f64 {
    let v = k.order(1);
    v.iter().sum::<f64>() / v.len() as f64
}

/// `k⁽²⁾` averaged over all pairs with the same torus displacement,
/// indexed by difference site.
fn pair_profile(k: &GridTruncation) -> Vec<f64> {
    let grid = k.space().periodic().expect("periodic grid");
    let m = grid.sites();
    match k.storage() {
        Storage::TranslationInvariant => k.order(2).to_vec(),
        Storage::Full => {
            let mut out = vec![0.0; m];
            for (u, slot) in out.iter_mut().enumerate() {
                *slot = (0..m).map(|i| k.value(&[i, grid.add(i, u)])).sum::<f64>() / m as f64;
            }
            out
        }
    }
}

/// Shell averages of the translation-invariant `k⁽²⁾` over `[edges[i], edges[i+1])`.
///
/// In one dimension the grid profile is interpolated linearly in `r` and
/// integrated exactly; in higher dimensions grid displacements falling in
/// each shell are averaged.
pub fn pair_correlation_bins(k: &GridTruncation, edges: &[f64]) -> Vec<f64> {
    let SiteSpace::Periodic(grid) = k.space() else {
        panic!("pair correlations need a periodic grid");
    };
    let profile = pair_profile(k);
    if grid.dim() == 1 {
        let g = grid.points_per_axis();
        let h = grid.spacing();
        // Radial profile at r_j = j h, symmetrized over ±j.
        let radial: Vec<f64> = (0..=g / 2).map(|j| 0.5 * (profile[j] + profile[(g - j) % g])).collect();
        let at = |r: f64| {
            let x = r / h;
            let j = (x.floor() as usize).min(radial.len() - 1);
            if j + 1 >= radial.len() {
                return radial[j];
            }
            let w = x - j as f64;
            (1.0 - w) * radial[j] + w * radial[j + 1]
        };
        edges
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let mut pts = vec![lo];
                let mut j = (lo / h).floor() as usize + 1;
                while (j as f64) * h < hi {
                    pts.push(j as f64 * h);
                    j += 1;
                }
                pts.push(hi);
                let integral: f64 = pts.windows(2).map(|p| 0.5 * (p[1] - p[0]) * (at(p[0]) + at(p[1]))).sum();
                integral / (hi - lo)
            })
            .collect()
    } else {
        edges
            .windows(2)
            .map(|w| {
                let (mut sum, mut count) = (0.0, 0usize);
                for (u, v) in profile.iter().enumerate() {
                    let r = grid.displacement(u).iter().map(|c| c * c).sum::<f64>().sqrt();
                    if r >= w[0] && r < w[1] {
                        sum += v;
                        count += 1;
                    }
                }
                if count == 0 {
                    f64::NAN
                } else {
                    sum / count as f64
                }
            })
            .collect()
    }
}

/// One simulator-versus-solver comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub time: f64,
    pub bin_lo: Option<f64>,
    pub bin_hi: Option<f64>,
    pub simulation: f64,
    pub stderr: f64,
    pub solver: f64,
    pub grid_estimate: f64,
    /// `3·stderr + grid_estimate`.
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(quantity: &str, time: f64, bin: Option<(f64, f64)>, sim: Estimate, solver: f64, grid_estimate: f64) -> Self {
        let tolerance = 3.0 * sim.stderr + grid_estimate;
        Self {
            quantity: quantity.into(),
            time,
            bin_lo: bin.map(|b| b.0),
            bin_hi: bin.map(|b| b.1),
            simulation: sim.value,
            stderr: sim.stderr,
            solver,
            grid_estimate,
            tolerance,
            passed: (sim.value - solver).abs() <= tolerance,
        }
    }
}

/// Compares simulated `k̂₁`, `k̂₂` against a solver solution.
///
/// `coarse` is the same solve on a grid with twice the spacing; the
/// difference between the two resolutions is the grid-error estimate.
pub fn compare_with_simulation(
    time: f64,
    fine: &GridTruncation,
    coarse: Option<&GridTruncation>,
    k1: Estimate,
    k2: &[BinEstimate],
) -> Vec<Check> {
    let rho = density(fine);
    let rho_grid = coarse.map(|c| (density(c) - rho).abs()).unwrap_or(0.0);
    let mut checks = vec![Check::new("k1", time, None, k1, rho, rho_grid)];
    if fine.max_order() >= 2 && !k2.is_empty() {
        let mut edges: Vec<f64> = k2.iter().map(|b| b.lo).collect();
        edges.push(k2.last().expect("non-empty").hi);
        let fine_bins = pair_correlation_bins(fine, &edges);
        let coarse_bins = coarse.map(|c| pair_correlation_bins(c, &edges));
        for (i, b) in k2.iter().enumerate() {
            let grid_est = coarse_bins.as_ref().map(|c| (c[i] - fine_bins[i]).abs()).unwrap_or(0.0);
            let est = Estimate { value: b.value, stderr: b.stderr };
            checks.push(Check::new("k2", time, Some((b.lo, b.hi)), est, fine_bins[i], grid_est));
        }
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;

    #[test]
    fn bins_of_linear_profiles_are_exact() {
        let grid = PeriodicGrid::new(1, 20, 10.0).unwrap();
        let h = grid.spacing();
        // k⁽²⁾(r) = 1 + r on the grid (|displacement| in index units times h).
        let k = GridTruncation::from_fn(SiteSpace::Periodic(grid), Storage::TranslationInvariant, 2, |n, t| {
            if n < 2 {
                1.0
            } else {
                let u = grid.sub(t[1], t[0]);
                1.0 + u.min(20 - u) as f64 * h
            }
        })
        .unwrap();
        let bins = pair_correlation_bins(&k, &[0.0, 0.3, 1.0, 2.25, 5.0]);
        for (b, (lo, hi)) in bins.iter().zip([(0.0, 0.3), (0.3, 1.0), (1.0, 2.25), (2.25, 5.0)]) {
            assert!((b - (1.0 + 0.5 * (lo + hi))).abs() < 1e-12);
        }
        let full =
            GridTruncation::from_fn(
                SiteSpace::Periodic(grid),
                Storage::Full,
                2,
                |n, t| {
                    if n < 2 {
                        1.0
                    } else {
                        k.value(t)
                    }
                },
            )
            .unwrap();
        assert_eq!(pair_correlation_bins(&full, &[0.0, 1.0]), pair_correlation_bins(&k, &[0.0, 1.0]));
    }
}
