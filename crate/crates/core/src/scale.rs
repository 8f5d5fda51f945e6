//! The scale of weighted sup-norm spaces `𝒦_α`.
//!
//! `‖k‖_α = sup_n e^{αn}/n! · sup|k⁽ⁿ⁾|`. Larger `α` means a stronger norm;
//! the hierarchy operator maps `𝒦_α'` into `𝒦_α` boundedly only for `α < α'`,
//! which is what limits the existence horizon.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::GridTruncation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScaleError {
    #[error("alpha0 ({alpha0}) must exceed alpha_star ({alpha_star})")]
    AlphaOrder { alpha0: f64, alpha_star: f64 },
    #[error("q must exceed 1, got {0}")]
    BadQ(f64),
    #[error("{name} must be finite and non-negative, got {value}")]
    BadBound { name: &'static str, value: f64 },
    #[error("H(α) overflows for α = {0}; the safe domain is α ≤ {max:.4}", max = H_MAX_ALPHA)]
    Overflow(f64),
    #[error("target space index α = {alpha} must lie below the source index α' = {alpha_prime}")]
    WrongDirection { alpha: f64, alpha_prime: f64 },
    #[error("partition needs n ≥ 1")]
    EmptyPartition,
}

/// Largest α for which `exp(exp(α))` is finite in double precision.
pub const H_MAX_ALPHA: f64 = 6.5646;

/// `(α₀, α_*, q, β̄, φ̄)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub alpha0: f64,
    pub alpha_star: f64,
    pub q: f64,
    pub beta_bar: f64,
    pub phi_bar: f64,
}

impl ScaleParams {
    pub fn new(alpha0: f64, alpha_star: f64, q: f64, beta_bar: f64, phi_bar: f64) -> Result<Self, ScaleError> {
        if !(alpha0 > alpha_star) || !alpha0.is_finite() || !alpha_star.is_finite() {
            return Err(ScaleError::AlphaOrder { alpha0, alpha_star });
        }
        if !(q > 1.0 && q.is_finite()) {
            return Err(ScaleError::BadQ(q));
        }
        for (name, value) in [("beta_bar", beta_bar), ("phi_bar", phi_bar)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ScaleError::BadBound { name, value });
            }
        }
        h(alpha0)?;
        Ok(Self { alpha0, alpha_star, q, beta_bar, phi_bar })
    }

    /// `T(α_*)`.
    pub fn horizon(&self) -> f64 {
        horizon_t(self)
    }

    /// Largest time for which the series remainder is certified: `T(α_*)/q`.
    pub fn certified_time(&self) -> f64 {
        self.horizon() / self.q
    }
}

/// `‖k‖_α` over the stored orders.
///
/// The grid maximum stands in for the essential supremum and never exceeds it.
pub fn norm_alpha(k: &GridTruncation, alpha: f64) -> f64 {
    (0..=k.max_order())
        .map(|n| {
            let m = k.order(n).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if m == 0.0 {
                0.0
            } else {
                m * weight(alpha, n)
            }
        })
        .fold(0.0, f64::max)
}

/// `e^{αn}/n!`.
pub fn weight(alpha: f64, n: usize) -> f64 {
    (alpha * n as f64 - ln_factorial(n)).exp()
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `H(α) = (e^{e^α} − 1)/e^α = Σ_{i≥1} e^{(i−1)α}/i!`.
pub fn h(alpha: f64) -> Result<f64, ScaleError> {
    if alpha > H_MAX_ALPHA || alpha.is_nan() {
        return Err(ScaleError::Overflow(alpha));
    }
    let x = alpha.exp();
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(x.exp_m1() / x)
}

/// `T(α_*) = (α₀ − α_*)/(φ̄ H(α₀))`; infinite when `φ̄ = 0`.
pub fn horizon_t(p: &ScaleParams) -> f64 {
    if p.phi_bar == 0.0 {
        return f64::INFINITY;
    }
    (p.alpha0 - p.alpha_star) / (p.phi_bar * h(p.alpha0).expect("validated at construction"))
}

/// Upper bounds on `‖A‖_{αα'}` and `‖B‖_{αα'}`.
pub fn op_norm_bounds(alpha: f64, alpha_prime: f64, p: &ScaleParams) -> Result<(f64, f64), ScaleError> {
    if !(alpha_prime > alpha) {
        return Err(ScaleError::WrongDirection { alpha, alpha_prime });
    }
    let gap = E * (alpha_prime - alpha);
    Ok((p.beta_bar / gap, p.phi_bar * h(alpha_prime)? / gap))
}

/// Both sides of `n e^{−an} ≤ 1/(ea)`.
pub fn size_weight_inequality(a: f64, n: usize) -> (f64, f64) {
    (n as f64 * (-a * n as f64).exp(), 1.0 / (E * a))
}

/// The `2n + 2` indices `α₀ = α_0 > α_1 > … > α_{2n+1} = α_*`.
///
/// Odd-to-even steps have width `(α₀−α_*)/(qn)` (where `B` acts), even-to-odd
/// steps `(q−1)(α₀−α_*)/(q(n+1))` (where the semigroup acts).
pub fn partition_alphas(p: &ScaleParams, n: usize) -> Result<Vec<f64>, ScaleError> {
    if n == 0 {
        return Err(ScaleError::EmptyPartition);
    }
    let gap = p.alpha0 - p.alpha_star;
    let (nf, q) = (n as f64, p.q);
    let semigroup_step = (q - 1.0) * gap / (q * (nf + 1.0));
    let b_step = gap / (q * nf);
    let mut out = Vec::with_capacity(2 * n + 2);
    for i in 0..=n {
        let pf = i as f64;
        out.push(p.alpha0 - pf * semigroup_step - pf * b_step);
        out.push(p.alpha0 - (pf + 1.0) * semigroup_step - pf * b_step);
    }
    Ok(out)
}

/// `(1/n!)(n/e)^n x^n`, the per-term bound of the series in units of `‖k₀‖_{α₀}`.
pub fn series_term_bound(n: usize, ratio: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if ratio == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    (nf * nf.ln() - nf - ln_factorial(n) + nf * ratio.ln()).exp()
}

/// Bound on the tail `Σ_{n>m}` of the series terms, for `ratio < 1`.
///
/// Consecutive terms shrink by at least `ratio` because `(1 + 1/n)^n ≤ e`,
/// so the tail is dominated by a geometric series.
pub fn series_tail_bound(m: usize, ratio: f64) -> f64 {
    if ratio == 0.0 {
        return 0.0;
    }
    series_term_bound(m + 1, ratio) / (1.0 - ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ScaleParams {
        ScaleParams::new(0.0, -1.0, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn h_values() {
        assert!((h(0.0).unwrap() - (E - 1.0)).abs() < 1e-15);
        assert!((h(2f64.ln()).unwrap() - (E * E - 1.0) / 2.0).abs() < 1e-14);
        assert!((h(2f64.ln()).unwrap() - 3.194528049).abs() < 1e-9);
        let tiny = h(-30.0).unwrap();
        assert!((1.0..=1.0 + 1e-12).contains(&tiny));
        assert_eq!(h(-800.0).unwrap(), 1.0);
        assert!(matches!(h(7.0), Err(ScaleError::Overflow(_))));
        assert!(h(H_MAX_ALPHA).unwrap().is_finite());
    }

    #[test]
    fn h_is_increasing() {
        let mut prev = 0.0;
        for i in -400..=130 {
            let v = h(i as f64 * 0.05).unwrap();
            assert!(v >= 1.0);
            assert!(v > prev || i == -400);
            prev = v;
        }
    }

    #[test]
    fn horizon_values() {
        let p = params();
        assert!((horizon_t(&p) - 1.0 / (E - 1.0)).abs() < 1e-15);
        assert!((horizon_t(&p) - 0.581976707).abs() < 1e-9);
        let double = ScaleParams { phi_bar: 2.0, ..p };
        assert!((horizon_t(&double) - horizon_t(&p) / 2.0).abs() < 1e-15);
        let narrow = ScaleParams::new(0.0, -1e-9, 2.0, 1.0, 1.0).unwrap();
        assert!(horizon_t(&narrow) < 1e-9);
        assert_eq!(horizon_t(&ScaleParams { phi_bar: 0.0, ..p }), f64::INFINITY);
    }

    #[test]
    fn params_are_validated() {
        assert!(matches!(ScaleParams::new(0.0, 0.0, 2.0, 1.0, 1.0), Err(ScaleError::AlphaOrder { .. })));
        assert!(matches!(ScaleParams::new(0.0, -1.0, 1.0, 1.0, 1.0), Err(ScaleError::BadQ(_))));
        assert!(ScaleParams::new(0.0, -1.0, 2.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn operator_bounds() {
        let p = params();
        let (a, _) = op_norm_bounds(-1.0, 0.0, &p).unwrap();
        assert!((a - 1.0 / E).abs() < 1e-15);
        let (_, b) = op_norm_bounds(-0.5, 0.0, &p).unwrap();
        assert!((b - (E - 1.0) / (0.5 * E)).abs() < 1e-14);
        assert!((b - 1.264241).abs() < 1e-6);
        assert!(op_norm_bounds(0.0, 0.0, &p).is_err());
        assert!(op_norm_bounds(0.5, 0.0, &p).is_err());
    }

    #[test]
    fn size_weight_inequality_is_tight_at_one() {
        let (best_n, best) =
            (1..=100)
                .map(|n| (n, size_weight_inequality(1.0, n).0))
                .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert_eq!(best_n, 1);
        assert!((best - size_weight_inequality(1.0, 1).1).abs() < 1e-15);
        for a in [0.01, 0.3, 2.0] {
            for n in 0..500 {
                let (l, r) = size_weight_inequality(a, n);
                assert!(l <= r * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn partition_endpoints_and_gaps() {
        let p = params();
        let alphas = partition_alphas(&p, 3).unwrap();
        assert_eq!(alphas.len(), 8);
        assert_eq!(alphas[0], 0.0);
        assert!((alphas[7] - (-1.0)).abs() < 1e-12);
        assert!(alphas.windows(2).all(|w| w[0] > w[1]));
        for pp in 1..=3 {
            let g = alphas[2 * pp - 1] - alphas[2 * pp];
            assert!((g - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_supports_the_b_step_bound() {
        // ‖B‖ from α_{2p−1} to α_{2p} is at most qn/(eT).
        let p = ScaleParams::new(0.4, -1.3, 1.7, 2.0, 0.8).unwrap();
        let t = horizon_t(&p);
        for n in 1..12 {
            let alphas = partition_alphas(&p, n).unwrap();
            for pp in 1..=n {
                let (_, b) = op_norm_bounds(alphas[2 * pp], alphas[2 * pp - 1], &p).unwrap();
                assert!(b <= p.q * n as f64 / (E * t) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn series_bounds_decay() {
        let x = 0.8;
        let terms: Vec<f64> = (1..200).map(|n| series_term_bound(n, x)).collect();
        assert!(terms.windows(2).all(|w| w[1] < w[0]));
        // Stirling: (n/e)^n/n! ≈ 1/√(2πn)
        let n = 150;
        let stirling = x.powi(n as i32) / (2.0 * std::f64::consts::PI * n as f64).sqrt();
        assert!((series_term_bound(n, x) / stirling - 1.0).abs() < 1e-3);
        let direct: f64 = (11..2000).map(|n| series_term_bound(n, x)).sum();
        assert!(series_tail_bound(10, x) >= direct);
        assert_eq!(series_tail_bound(3, 0.0), 0.0);
    }
}
