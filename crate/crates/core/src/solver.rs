//! Two independent solvers for `dk/dt = L^Δ k`: the Duhamel series with a
//! certified remainder, and classical RK4.

use serde::Serialize;
use thiserror::Error;

use crate::hierarchy::{apply_b, apply_l_delta, apply_psi, total_rates, DiscreteKernel, GridTruncation, OperatorError};
use crate::scale::{norm_alpha, partition_alphas, series_tail_bound, series_term_bound, ScaleError, ScaleParams};

/// Deepest series term the solver will compute.
pub const MAX_TERMS: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("time must be non-negative and finite, got {0}")]
    BadTime(f64),
    #[error("need at least one time node")]
    NoNodes,
    #[error("term {0} exceeds the supported depth {MAX_TERMS}")]
    TooDeep(usize),
    #[error(
        "t = {t} is outside the certified range [0, T/q) = [0, {limit}) with T(alpha_star) = {horizon} and q = {q}"
    )]
    BeyondCertified { t: f64, horizon: f64, q: f64, limit: f64 },
    #[error("tolerance {tol} is unreachable within {terms} terms; best certified remainder {best}")]
    ToleranceUnreachable { tol: f64, terms: usize, best: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("step {0} must be positive and finite")]
    BadStep(f64),
    #[error("dt = {dt} times the largest rate {max_rate} is not below 1; use dt < {suggested}")]
    Unstable { dt: f64, max_rate: f64, suggested: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
}

fn check_time(t: f64) -> Result<(), SolverError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(SolverError::BadTime(t))
    }
}

/// `u_0(t), …, u_m(t)` with
/// `u_0(t) = Ψ(t)k₀` and `u_n(t) = ∫₀ᵗ Ψ(t−s) B u_{n−1}(s) ds`,
/// each time integral by the composite trapezoid rule on `nodes` intervals.
///
/// Levels are computed at every node from the previous level's node values.
/// Along the nodes the trapezoid sum obeys `S_i = e^{−ΔE} S_{i−1} + g_i`,
/// so a level costs one application of `B` per node.
pub fn duhamel_terms(
    kernel: &DiscreteKernel,
    k0: &GridTruncation,
    m: usize,
    t: f64,
    nodes: usize,
) -> Result<Vec<GridTruncation>, SolverError> {
    check_time(t)?;
    if nodes == 0 {
        return Err(SolverError::NoNodes);
    }
    if m > MAX_TERMS {
        return Err(SolverError::TooDeep(m));
    }
    kernel.check_compatible(k0)?;
    let dt = t / nodes as f64;
    let rates: Vec<f64> = total_rates(kernel, k0)?.values().copied().collect();
    let decay: Vec<f64> = rates.iter().map(|e| (-dt * e).exp()).collect();

    let mut level: Vec<GridTruncation> =
        (0..=nodes).map(|i| apply_psi(kernel, i as f64 * dt, k0)).collect::<Result<_, _>>()?;
    let mut ends = vec![level[nodes].clone()];
    for _ in 1..=m {
        let g: Vec<GridTruncation> = level.iter().map(|u| apply_b(kernel, u)).collect::<Result<_, _>>()?;
        let g0: Vec<f64> = g[0].values().copied().collect();
        let mut sum = vec![0.0; rates.len()];
        // e^{−t_i E}, advanced alongside the nodes.
        let mut first_decay = vec![1.0; rates.len()];
        let mut next = Vec::with_capacity(nodes + 1);
        for (i, gi) in g.iter().enumerate() {
            let mut u = gi.zeros_like();
            for (j, (v, &gv)) in u.values_mut().zip(gi.values()).enumerate() {
                if i > 0 {
                    first_decay[j] *= decay[j];
                }
                sum[j] = decay[j] * sum[j] + gv;
                if i > 0 {
                    *v = dt * (sum[j] - 0.5 * first_decay[j] * g0[j] - 0.5 * gv);
                }
            }
            next.push(u);
        }
        level = next;
        ends.push(level[nodes].clone());
    }
    Ok(ends)
}

/// The single term `u_n(t)` of the series.
pub fn duhamel_term(
    kernel: &DiscreteKernel,
    k0: &GridTruncation,
    n: usize,
    t: f64,
    time_nodes: usize,
) -> Result<GridTruncation, SolverError> {
    Ok(duhamel_terms(kernel, k0, n, t, time_nodes)?.pop().expect("at least u_0"))
}

/// Partial sum of the series with its certified remainder.
#[derive(Clone, Debug)]
pub struct SeriesSolution {
    pub k_t: GridTruncation,
    pub t: f64,
    /// Index `m` of the last summed term.
    pub terms_used: usize,
    /// Bound on `‖Σ_{n>m} u_n(t)‖_{α_*}`.
    pub certified_remainder: f64,
    /// Estimated time-quadrature error of the returned sum in `‖·‖_{α_*}`.
    pub quadrature_estimate: f64,
    /// Trapezoid intervals of the finer of the two resolutions used.
    pub time_nodes: usize,
    pub scale: ScaleParams,
    /// `‖k₀‖_{α₀}`.
    pub k0_norm: f64,
    /// `q t / T(α_*)`.
    pub ratio: f64,
    /// Measured `‖u_n(t)‖_{α_*}`, `n = 0..=m`.
    pub term_norms: Vec<f64>,
    /// `(1/n!)(n/e)^n (qt/T)^n ‖k₀‖_{α₀}`, `n = 0..=m`.
    pub term_bounds: Vec<f64>,
    /// The intermediate scale indices used by the certification for `m`.
    pub partition: Vec<f64>,
}

impl SeriesSolution {
    /// Terms whose measured norm exceeds its bound, as `(n, measured, bound)`.
    pub fn bound_violations(&self) -> Vec<(usize, f64, f64)> {
        self.term_norms
            .iter()
            .zip(&self.term_bounds)
            .enumerate()
            .filter(|(_, (m, b))| m > b)
            .map(|(n, (&m, &b))| (n, m, b))
            .collect()
    }
}

/// Smallest `m` with `‖k₀‖_{α₀} · Σ_{n>m} bound_n ≤ tol`, and that tail.
pub fn terms_needed(ratio: f64, k0_norm: f64, tol: f64) -> Result<(usize, f64), SolverError> {
    if ratio == 0.0 || k0_norm == 0.0 {
        return Ok((0, 0.0));
    }
    let mut best = f64::INFINITY;
    for m in 0..=MAX_TERMS {
        let tail = k0_norm * series_tail_bound(m, ratio);
        best = best.min(tail);
        if tail <= tol {
            return Ok((m, tail));
        }
    }
    Err(SolverError::ToleranceUnreachable { tol, terms: MAX_TERMS, best })
}

fn extrapolate(coarse: &GridTruncation, fine: &GridTruncation) -> GridTruncation {
    let mut out = fine.scaled(4.0 / 3.0);
    out.axpy(-1.0 / 3.0, coarse);
    out
}

fn sum_terms(terms: &[GridTruncation]) -> GridTruncation {
    let mut total = terms[0].clone();
    for u in &terms[1..] {
        total.axpy(1.0, u);
    }
    total
}

/// Series solution at time `t < T(α_*)/q`.
///
/// The sum is computed with `time_nodes` and `2·time_nodes` trapezoid
/// intervals and Richardson-extrapolated; if the estimated quadrature error
/// exceeds `tol/10` the resolution is doubled once more.
pub fn solve_series(
    kernel: &DiscreteKernel,
    k0: &GridTruncation,
    t: f64,
    scale: &ScaleParams,
    tol: f64,
    time_nodes: usize,
) -> Result<SeriesSolution, SolverError> {
    check_time(t)?;
    if !(tol > 0.0) {
        return Err(SolverError::BadTolerance(tol));
    }
    if time_nodes == 0 {
        return Err(SolverError::NoNodes);
    }
    let horizon = scale.horizon();
    let limit = scale.certified_time();
    if !(t < limit) {
        return Err(SolverError::BeyondCertified { t, horizon, q: scale.q, limit });
    }
    let ratio = if horizon.is_infinite() { 0.0 } else { scale.q * t / horizon };
    let k0_norm = norm_alpha(k0, scale.alpha0);
    let (m, certified_remainder) = terms_needed(ratio, k0_norm, tol)?;
    let partition = if m > 0 { partition_alphas(scale, m)? } else { vec![scale.alpha0, scale.alpha_star] };

    let alpha = scale.alpha_star;
    let mut nodes = time_nodes;
    let mut coarse = duhamel_terms(kernel, k0, m, t, nodes)?;
    let mut fine = duhamel_terms(kernel, k0, m, t, 2 * nodes)?;
    let mut estimate = norm_alpha(&sum_terms(&fine).difference(&sum_terms(&coarse)), alpha) / 3.0;
    if estimate > tol / 10.0 {
        nodes *= 2;
        coarse = fine;
        fine = duhamel_terms(kernel, k0, m, t, 2 * nodes)?;
        estimate = norm_alpha(&sum_terms(&fine).difference(&sum_terms(&coarse)), alpha) / 3.0;
    }
    let terms: Vec<GridTruncation> = coarse.iter().zip(&fine).map(|(c, f)| extrapolate(c, f)).collect();
    let term_norms = terms.iter().map(|u| norm_alpha(u, alpha)).collect();
    let term_bounds = (0..=m).map(|n| series_term_bound(n, ratio) * k0_norm).collect();
    log::debug!("series: t={t} m={m} remainder={certified_remainder:e} quadrature={estimate:e} nodes={}", 2 * nodes);
    Ok(SeriesSolution {
        k_t: sum_terms(&terms),
        t,
        terms_used: m,
        certified_remainder,
        quadrature_estimate: estimate,
        time_nodes: 2 * nodes,
        scale: *scale,
        k0_norm,
        ratio,
        term_norms,
        term_bounds,
        partition,
    })
}

fn max_rate(kernel: &DiscreteKernel, k0: &GridTruncation) -> f64 {
    k0.max_order() as f64 * kernel.beta_bar()
}

fn rk4_steps(
    kernel: &DiscreteKernel,
    k0: &GridTruncation,
    t_end: f64,
    steps: usize,
) -> Result<GridTruncation, SolverError> {
    let mut k = k0.clone();
    if steps == 0 {
        return Ok(k);
    }
    let h = t_end / steps as f64;
    for _ in 0..steps {
        let s1 = apply_l_delta(kernel, &k)?;
        let mut y = k.clone();
        y.axpy(0.5 * h, &s1);
        let s2 = apply_l_delta(kernel, &y)?;
        let mut y = k.clone();
        y.axpy(0.5 * h, &s2);
        let s3 = apply_l_delta(kernel, &y)?;
        let mut y = k.clone();
        y.axpy(h, &s3);
        let s4 = apply_l_delta(kernel, &y)?;
        k.axpy(h / 6.0, &s1);
        k.axpy(h / 3.0, &s2);
        k.axpy(h / 3.0, &s3);
        k.axpy(h / 6.0, &s4);
    }
    Ok(k)
}

fn steps_for(t_end: f64, dt: f64) -> usize {
    let raw = t_end / dt;
    // Tolerate representation noise such as 1.0 / 1e-3 = 999.9999999999999.
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 * raw.max(1.0) {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Classical RK4 for `dk/dt = L^Δ k` with steps no longer than `dt`.
pub fn solve_rk4(
    kernel: &DiscreteKernel,
    k0: &GridTruncation,
    t_end: f64,
    dt: f64,
) -> Result<GridTruncation, SolverError> {
    check_time(t_end)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::BadStep(dt));
    }
    kernel.check_compatible(k0)?;
    let max_rate = max_rate(kernel, k0);
    if dt * max_rate >= 1.0 {
        return Err(SolverError::Unstable { dt, max_rate, suggested: 1.0 / max_rate });
    }
    rk4_steps(kernel, k0, t_end, steps_for(t_end, dt))
}

/// RK4 solution together with a step-doubling estimate of its error in `‖·‖_α`.
pub fn solve_rk4_with_estimate(
    kernel: &DiscreteKernel,
    k0: &GridTruncation,
    t_end: f64,
    dt: f64,
    alpha: f64,
) -> Result<(GridTruncation, f64), SolverError> {
    let k = solve_rk4(kernel, k0, t_end, dt)?;
    let steps = steps_for(t_end, dt);
    if steps == 0 {
        return Ok((k, 0.0));
    }
    let coarse_ok = steps % 2 == 0 && 2.0 * (t_end / steps as f64) * max_rate(kernel, k0) < 1.0;
    let estimate = if coarse_ok {
        let coarse = rk4_steps(kernel, k0, t_end, steps / 2)?;
        norm_alpha(&k.difference(&coarse), alpha) / 15.0
    } else {
        let finer = rk4_steps(kernel, k0, t_end, 2 * steps)?;
        norm_alpha(&finer.difference(&k), alpha) * 16.0 / 15.0
    };
    Ok((k, estimate))
}

/// Outcome of running both solvers at one time.
#[derive(Clone, Debug, Serialize)]
pub struct CrossValidation {
    pub t: f64,
    /// `‖series − rk4‖_{α_*}`.
    pub discrepancy: f64,
    pub certified_remainder: f64,
    pub quadrature_estimate: f64,
    pub rk4_estimate: f64,
    /// Floating-point allowance proportional to the solution size.
    pub rounding_allowance: f64,
    pub allowed: f64,
    pub terms_used: usize,
    pub passed: bool,
}

/// Runs the series and RK4 and compares them in `‖·‖_{α_*}`.
pub fn cross_validate(
    kernel: &DiscreteKernel,
    k0: &GridTruncation,
    t: f64,
    scale: &ScaleParams,
    tol: f64,
    time_nodes: usize,
    dt: f64,
) -> Result<(CrossValidation, SeriesSolution, GridTruncation), SolverError> {
    let series = solve_series(kernel, k0, t, scale, tol, time_nodes)?;
    let (rk4, rk4_estimate) = solve_rk4_with_estimate(kernel, k0, t, dt, scale.alpha_star)?;
    let discrepancy = norm_alpha(&series.k_t.difference(&rk4), scale.alpha_star);
    let rounding_allowance = 64.0 * f64::EPSILON * norm_alpha(&series.k_t, scale.alpha_star).max(series.k0_norm);
    let allowed = series.certified_remainder + series.quadrature_estimate + rk4_estimate + rounding_allowance;
    let report = CrossValidation {
        t,
        discrepancy,
        certified_remainder: series.certified_remainder,
        quadrature_estimate: series.quadrature_estimate,
        rk4_estimate,
        rounding_allowance,
        allowed,
        terms_used: series.terms_used,
        passed: discrepancy <= allowed,
    };
    Ok((report, series, rk4))
}
