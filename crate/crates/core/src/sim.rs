//! Exact event-driven simulation of the fragmentation process on a periodic
//! box, and factorial-moment estimators of `k⁽¹⁾` and `k⁽²⁾`.
//!
//! Each replica owns a ChaCha8 generator seeded from the run seed with the
//! replica id as stream number, so `(seed, replica_id, config)` fixes the
//! trajectory bit for bit on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config_space::{ConfigError, FiniteConfiguration};
use crate::grid::torus_distance;
use crate::kernel::{unit_ball_volume, KernelError, KernelSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("box side must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("end time must be non-negative and finite, got {0}")]
    BadTime(f64),
    #[error("dimension must be between 1 and 3, got {0}")]
    BadDimension(usize),
    #[error("need at least one snapshot")]
    NoSnapshots,
    #[error("need at least one replica")]
    NoReplicas,
    #[error("population cap {cap} is below the initial size {size}")]
    CapBelowInitial { cap: usize, size: usize },
    #[error("the simulator needs a spatially homogeneous continuum kernel")]
    UnsupportedKernel,
    #[error("box side {length} is shorter than 6 dispersal scales ({scale} each)")]
    BoxTooSmall { length: f64, scale: f64 },
    #[error("kernel dimension {kernel} differs from the box dimension {dim}")]
    DimensionMismatch { kernel: usize, dim: usize },
    #[error("initial density must be non-negative and finite, got {0}")]
    BadDensity(f64),
    #[error("initial point {0:?} lies outside the box")]
    OutsideBox(Vec<f64>),
    #[error("bin edges {0:?} must increase strictly within [0, L/2] = [0, {1}]")]
    BadBins(Vec<f64>, f64),
    #[error("estimators need at least 2 replicas, got {0}")]
    TooFewReplicas(usize),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Initial {
    Poisson { density: f64 },
    Points { points: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub length: f64,
    pub dim: usize,
    pub kernel: KernelSpec,
    pub t_end: f64,
    pub n_snapshots: usize,
    pub initial: Initial,
    pub n_cap: usize,
    pub seed: u64,
    pub replicas: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(SimError::BadLength(self.length));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(SimError::BadDimension(self.dim));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(SimError::BadTime(self.t_end));
        }
        if self.n_snapshots == 0 {
            return Err(SimError::NoSnapshots);
        }
        if self.replicas == 0 {
            return Err(SimError::NoReplicas);
        }
        if matches!(self.kernel, KernelSpec::TabulatedLattice(_)) {
            return Err(SimError::UnsupportedKernel);
        }
        if let Some(d) = self.kernel.dim() {
            if d != self.dim {
                return Err(SimError::DimensionMismatch { kernel: d, dim: self.dim });
            }
        }
        if let Some(disp) = self.kernel.dispersal() {
            if self.length < 6.0 * disp.scale() {
                return Err(SimError::BoxTooSmall { length: self.length, scale: disp.scale() });
            }
        }
        match &self.initial {
            Initial::Poisson { density } => {
                if !(*density >= 0.0 && density.is_finite()) {
                    return Err(SimError::BadDensity(*density));
                }
            }
            Initial::Points { points } => {
                FiniteConfiguration::new(self.dim, points.clone())?;
                if let Some(p) = points.iter().find(|p| p.iter().any(|&c| !(0.0..self.length).contains(&c))) {
                    return Err(SimError::OutsideBox(p.clone()));
                }
                if points.len() > self.n_cap {
                    return Err(SimError::CapBelowInitial { cap: self.n_cap, size: points.len() });
                }
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// `t_k = t_end · k/(n−1)`, or just `t_end` for a single snapshot.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let n = self.n_snapshots;
        if n == 1 {
            return vec![self.t_end];
        }
        (0..n).map(|k| self.t_end * k as f64 / (n - 1) as f64).collect()
    }

    /// The generator for one replica.
    pub fn rng(&self, replica_id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replica_id);
        rng
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    pub deaths: u64,
    pub fragmentations: u64,
    pub offspring: u64,
}

/// One replica in flight.
#[derive(Clone, Debug)]
pub struct SimState {
    dim: usize,
    length: f64,
    /// Flat coordinates, `dim` per particle.
    positions: Vec<f64>,
    pub clock: f64,
    pub events: EventCounts,
    /// The population cap stopped the dynamics.
    pub truncated: bool,
    n_cap: usize,
    rng: ChaCha8Rng,
}

/// What a call to [`step`] did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    /// A particle was removed without offspring.
    Death,
    /// A particle was replaced by `offspring` new ones.
    Fragmentation { offspring: usize },
    /// The next event falls after the horizon; the clock moved to the horizon.
    Horizon,
    /// Empty or frozen: nothing can happen, the clock moved to the horizon.
    Absorbed,
}

impl SimState {
    /// Initial state of a replica, including its random initial configuration.
    pub fn initial(config: &SimConfig, replica_id: u64) -> Result<Self, SimError> {
        let mut rng = config.rng(replica_id);
        let (dim, length) = (config.dim, config.length);
        let positions = match &config.initial {
            Initial::Poisson { density } => {
                let mean = density * config.volume();
                let n = if mean > 0.0 {
                    Poisson::new(mean).map_err(|_| SimError::BadDensity(*density))?.sample(&mut rng) as usize
                } else {
                    0
                };
                (0..n * dim).map(|_| rng.random::<f64>() * length).collect()
            }
            Initial::Points { points } => points.iter().flatten().copied().collect(),
        };
        let mut state = Self {
            dim,
            length,
            positions,
            clock: 0.0,
            events: EventCounts::default(),
            truncated: false,
            n_cap: config.n_cap,
            rng,
        };
        if state.len() > state.n_cap {
            log::warn!("replica {replica_id}: initial population {} exceeds the cap {}", state.len(), state.n_cap);
            state.truncated = true;
        }
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn configuration(&self) -> Result<FiniteConfiguration, ConfigError> {
        FiniteConfiguration::from_flat(self.dim, &self.positions)
    }
}

/// Advances one Gillespie step, but never past `horizon`.
///
/// If the drawn waiting time overshoots the horizon, the clock stops there
/// and nothing else changes; by memorylessness the trajectory law is unchanged.
pub fn step(state: &mut SimState, kernel: &KernelSpec, horizon: f64) -> Result<Event, SimError> {
    let n = state.len();
    let origin = vec![0.0; state.dim];
    let rate = kernel.beta_empty(&origin)?;
    if n == 0 || state.truncated || rate == 0.0 {
        state.clock = state.clock.max(horizon);
        return Ok(Event::Absorbed);
    }
    let total = n as f64 * rate;
    let wait = Exp::new(total).expect("positive rate").sample(&mut state.rng);
    if state.clock + wait > horizon {
        state.clock = horizon;
        return Ok(Event::Horizon);
    }
    state.clock += wait;
    // β(x|∅) does not depend on x, so the parent is uniform.
    let i = state.rng.random_range(0..n);
    let parent = state.point(i).to_vec();
    let cloud = kernel.sample_cloud(&parent, &mut state.rng)?;
    if n - 1 + cloud.len() > state.n_cap {
        log::debug!("population cap {} reached at t = {}; freezing", state.n_cap, state.clock);
        state.truncated = true;
        state.clock = horizon;
        return Ok(Event::Absorbed);
    }
    // Remove the parent by moving the last particle into its slot.
    let d = state.dim;
    let last = n - 1;
    if i != last {
        let (head, tail) = state.positions.split_at_mut(last * d);
        head[i * d..(i + 1) * d].copy_from_slice(&tail[..d]);
    }
    state.positions.truncate(last * d);
    let length = state.length;
    for p in cloud.points() {
        state.positions.extend(p.iter().map(|c| c.rem_euclid(length)));
    }
    Ok(if cloud.is_empty() {
        state.events.deaths += 1;
        Event::Death
    } else {
        state.events.fragmentations += 1;
        state.events.offspring += cloud.len() as u64;
        Event::Fragmentation { offspring: cloud.len() }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub dim: usize,
    /// Flat coordinates, `dim` per particle.
    pub positions: Vec<f64>,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaOutput {
    pub replica: u64,
    pub snapshots: Vec<Snapshot>,
    pub events: EventCounts,
    pub truncated: bool,
}

/// Runs one replica and records the configuration at the snapshot times.
pub fn run_replica(config: &SimConfig, replica_id: u64) -> Result<ReplicaOutput, SimError> {
    config.validate()?;
    let mut state = SimState::initial(config, replica_id)?;
    let mut snapshots = Vec::with_capacity(config.n_snapshots);
    for time in config.snapshot_times() {
        while state.clock < time {
            step(&mut state, &config.kernel, time)?;
        }
        snapshots.push(Snapshot { time, dim: state.dim, positions: state.positions.clone() });
    }
    if state.truncated {
        log::warn!("replica {replica_id} hit the population cap {}", config.n_cap);
    }
    Ok(ReplicaOutput { replica: replica_id, snapshots, events: state.events, truncated: state.truncated })
}

/// All replicas, in parallel; the result is ordered by replica id.
pub fn run_replicas(config: &SimConfig) -> Result<Vec<ReplicaOutput>, SimError> {
    config.validate()?;
    (0..config.replicas as u64).into_par_iter().map(|r| run_replica(config, r)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

fn mean_and_stderr(samples: &[f64]) -> Estimate {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate { value: mean, stderr: (var / n).sqrt() }
}

/// Density `ρ̂ = mean |γ| / L^d` with its standard error across replicas.
pub fn estimate_k1(snapshots: &[&Snapshot], length: f64) -> Result<Estimate, SimError> {
    if snapshots.len() < 2 {
        return Err(SimError::TooFewReplicas(snapshots.len()));
    }
    let samples: Vec<f64> = snapshots.iter().map(|s| s.len() as f64 / length.powi(s.dim as i32)).collect();
    Ok(mean_and_stderr(&samples))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinEstimate {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Translation-invariant `k⁽²⁾` averaged over distance shells `[r_lo, r_hi)`.
///
/// Ordered pairs of distinct particles are counted, so the per-replica value
/// `count / (L^d · |shell|)` is unbiased for the shell average of `k⁽²⁾`.
pub fn estimate_k2(snapshots: &[&Snapshot], bin_edges: &[f64], length: f64) -> Result<Vec<BinEstimate>, SimError> {
    let half = 0.5 * length;
    let bad = bin_edges.len() < 2
        || bin_edges[0] < 0.0
        || bin_edges.windows(2).any(|w| !(w[1] > w[0]))
        || *bin_edges.last().expect("len checked") > half;
    if bad {
        return Err(SimError::BadBins(bin_edges.to_vec(), half));
    }
    if snapshots.len() < 2 {
        return Err(SimError::TooFewReplicas(snapshots.len()));
    }
    let dim = snapshots[0].dim;
    let volume = length.powi(dim as i32);
    let shells: Vec<f64> =
        bin_edges.windows(2).map(|w| unit_ball_volume(dim) * (w[1].powi(dim as i32) - w[0].powi(dim as i32))).collect();
    let bins = shells.len();
    let per_replica: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|s| {
            let mut counts = vec![0.0; bins];
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    let r = torus_distance(length, s.point(i), s.point(j));
                    let b = bin_edges.partition_point(|&e| e <= r);
                    if b >= 1 && b <= bins {
                        counts[b - 1] += 2.0;
                    }
                }
            }
            counts.iter().zip(&shells).map(|(c, v)| c / (volume * v)).collect()
        })
        .collect();
    Ok((0..bins)
        .map(|b| {
            let samples: Vec<f64> = per_replica.iter().map(|v| v[b]).collect();
            let e = mean_and_stderr(&samples);
            BinEstimate { lo: bin_edges[b], hi: bin_edges[b + 1], value: e.value, stderr: e.stderr }
        })
        .collect())
}

/// Snapshots with index `k` across all replicas.
pub fn snapshots_at(outputs: &[ReplicaOutput], k: usize) -> Vec<&Snapshot> {
    outputs.iter().map(|o| &o.snapshots[k]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Dispersal;

    fn config(kernel: KernelSpec, initial: Initial, t_end: f64, replicas: usize) -> SimConfig {
        SimConfig { length: 10.0, dim: 1, kernel, t_end, n_snapshots: 3, initial, n_cap: 100_000, seed: 42, replicas }
    }

    fn contact(m: f64) -> KernelSpec {
        KernelSpec::contact(m, 1.0, Dispersal::gaussian(1, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_time_returns_initial_state() {
        let cfg = config(contact(1.0), Initial::Poisson { density: 2.0 }, 0.0, 1);
        let out = run_replica(&cfg, 0).unwrap();
        let init = SimState::initial(&cfg, 0).unwrap();
        assert!(out.snapshots.iter().all(|s| s.positions == init.positions()));
        assert_eq!(out.events, EventCounts::default());
    }

    #[test]
    fn replicas_are_deterministic() {
        let cfg = config(contact(0.5), Initial::Poisson { density: 2.0 }, 1.0, 8);
        let a = run_replicas(&cfg).unwrap();
        let b = run_replicas(&cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].snapshots, a[1].snapshots);
        assert_eq!(run_replica(&cfg, 3).unwrap(), a[3]);
    }

    #[test]
    fn pure_death_never_grows_and_matches_mean() {
        let m = 0.7;
        let (rho, t) = (2.0, 0.8);
        let cfg = config(KernelSpec::pure_death(m).unwrap(), Initial::Poisson { density: rho }, t, 1000);
        let out = run_replicas(&cfg).unwrap();
        for o in &out {
            assert!(o.snapshots.windows(2).all(|w| w[1].len() <= w[0].len()));
        }
        let est = estimate_k1(&snapshots_at(&out, 2), cfg.length).unwrap();
        let want = rho * (-m * t).exp();
        assert!((est.value - want).abs() <= 3.0 * est.stderr, "{est:?} vs {want}");
    }

    #[test]
    fn pure_death_extinction_time() {
        let m = 1.3;
        let points: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let mut cfg = config(KernelSpec::pure_death(m).unwrap(), Initial::Points { points }, f64::MAX, 1);
        cfg.t_end = 1e9;
        let times: Vec<f64> = (0..4000)
            .map(|r| {
                let mut s = SimState::initial(&cfg, r).unwrap();
                while !s.is_empty() {
                    step(&mut s, &cfg.kernel, f64::INFINITY).unwrap();
                }
                s.clock
            })
            .collect();
        let est = mean_and_stderr(&times);
        let want: f64 = (1..=5).map(|i| 1.0 / (m * i as f64)).sum();
        assert!((est.value - want).abs() <= 3.0 * est.stderr, "{est:?} vs {want}");
    }

    #[test]
    fn contact_without_death_adds_one_per_event() {
        let cfg = config(contact(0.0), Initial::Poisson { density: 1.0 }, 1.0, 1);
        let mut s = SimState::initial(&cfg, 0).unwrap();
        for _ in 0..200 {
            let before = s.len();
            match step(&mut s, &cfg.kernel, f64::INFINITY).unwrap() {
                Event::Fragmentation { offspring: 2 } => assert_eq!(s.len(), before + 1),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn event_rates_match_kernel() {
        // Total events against the integrated population: each particle fires at β(x|∅).
        let kernel = contact(0.8);
        let beta0 = kernel.beta_bar();
        let cfg = config(kernel.clone(), Initial::Poisson { density: 3.0 }, 1.0, 1);
        let mut s = SimState::initial(&cfg, 1).unwrap();
        let (mut exposure, mut events, mut deaths) = (0.0, 0u64, 0u64);
        while events < 100_000 {
            let (t0, n) = (s.clock, s.len() as f64);
            let ev = step(&mut s, &kernel, f64::INFINITY).unwrap();
            exposure += n * (s.clock - t0);
            match ev {
                Event::Death => {
                    events += 1;
                    deaths += 1;
                }
                Event::Fragmentation { .. } => events += 1,
                _ => {}
            }
            // Keep the population moderate and away from extinction.
            if s.len() > 400 || s.len() < 10 {
                s = SimState::initial(&cfg, events + 1_000_000).unwrap();
            }
        }
        let rate = events as f64 / exposure;
        let sigma = beta0 / (events as f64).sqrt();
        assert!((rate - beta0).abs() <= 3.0 * sigma, "{rate} vs {beta0}");
        // Event types: death fraction m/β0, chi-square with one degree of freedom (1%: 6.63).
        let n = events as f64;
        let p = 0.8 / beta0;
        let chi2 = (deaths as f64 - n * p).powi(2) / (n * p)
            + ((events - deaths) as f64 - n * (1.0 - p)).powi(2) / (n * (1.0 - p));
        assert!(chi2 < 6.63, "chi2 {chi2}");
    }

    fn poisson_snapshots(rho: f64, replicas: u64, seed: u64) -> Vec<Snapshot> {
        let cfg = SimConfig {
            seed,
            replicas: replicas as usize,
            ..config(KernelSpec::pure_death(0.0).unwrap(), Initial::Poisson { density: rho }, 0.0, 1)
        };
        (0..replicas)
            .map(|r| {
                let s = SimState::initial(&cfg, r).unwrap();
                Snapshot { time: 0.0, dim: 1, positions: s.positions().to_vec() }
            })
            .collect()
    }

    #[test]
    fn estimators_on_poisson_snapshots() {
        let rho = 1.5;
        let snaps = poisson_snapshots(rho, 2000, 9);
        let refs: Vec<&Snapshot> = snaps.iter().collect();
        let k1 = estimate_k1(&refs, 10.0).unwrap();
        assert!((k1.value - rho).abs() <= 3.0 * k1.stderr);
        let edges = [0.0, 0.5, 1.0, 2.0, 3.0, 5.0];
        for b in estimate_k2(&refs, &edges, 10.0).unwrap() {
            assert!((b.value - rho * rho).abs() <= 3.0 * b.stderr, "{b:?}");
        }
        // Standard errors shrink like 1/√R.
        let small = estimate_k1(&refs[..500], 10.0).unwrap().stderr;
        let ratio = small / k1.stderr;
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn estimator_edge_cases() {
        let one = Snapshot { time: 0.0, dim: 1, positions: vec![1.0] };
        let empty = Snapshot { time: 0.0, dim: 1, positions: vec![] };
        let k2 = estimate_k2(&[&one, &one], &[0.0, 1.0, 5.0], 10.0).unwrap();
        assert!(k2.iter().all(|b| b.value == 0.0));
        assert_eq!(estimate_k1(&[&empty, &empty], 10.0).unwrap().value, 0.0);
        assert!(estimate_k2(&[&one, &one], &[0.0, 6.0], 10.0).is_err());
        assert!(estimate_k1(&[&one], 10.0).is_err());
    }

    #[test]
    fn population_cap_freezes_and_flags() {
        let mut cfg = config(contact(0.0), Initial::Poisson { density: 2.0 }, 5.0, 1);
        cfg.n_cap = 40;
        let out = run_replica(&cfg, 0).unwrap();
        assert!(out.truncated);
        assert!(out.snapshots.iter().all(|s| s.len() <= 40));
        cfg.initial = Initial::Points { points: (0..50).map(|i| vec![i as f64 * 0.1]).collect() };
        assert!(matches!(cfg.validate(), Err(SimError::CapBelowInitial { .. })));
    }
}
