//! Spatial carriers for correlation functions: a uniform periodic grid on the
//! torus `[0, L)^d`, or a finite lattice used by the exhaustive oracles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config_space::LatticeSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("grid needs at least one point per dimension")]
    NoPoints,
    #[error("dimension must be between 1 and 3, got {0}")]
    BadDimension(usize),
    #[error("spacing {spacing} does not divide length {length} into a whole number of cells")]
    Indivisible { length: f64, spacing: f64 },
    #[error("grid with {0} sites is too large")]
    TooLarge(usize),
}

/// Uniform periodic grid with `points` nodes per axis, node `i` at `i·h`.
///
/// Site indices run over `0..points^dim`, axis 0 fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    dim: usize,
    points: usize,
    length: f64,
}

impl PeriodicGrid {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self, GridError> {
        if !(1..=3).contains(&dim) {
            return Err(GridError::BadDimension(dim));
        }
        if points == 0 {
            return Err(GridError::NoPoints);
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(GridError::BadLength(length));
        }
        let sites = points.checked_pow(dim as u32).ok_or(GridError::TooLarge(usize::MAX))?;
        if sites > 1 << 20 {
            return Err(GridError::TooLarge(sites));
        }
        Ok(Self { dim, points, length })
    }

    /// Grid from side length and spacing; the spacing must tile the side.
    pub fn with_spacing(dim: usize, length: f64, spacing: f64) -> Result<Self, GridError> {
        let cells = length / spacing;
        let rounded = cells.round();
        if !(spacing > 0.0) || rounded < 1.0 || (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
            return Err(GridError::Indivisible { length, spacing });
        }
        Self::new(dim, rounded as usize, length)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn sites(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// `h^d`, the volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn axis_indices(&self, site: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut s = site;
        for slot in out.iter_mut().take(self.dim) {
            *slot = s % self.points;
            s /= self.points;
        }
        out
    }

    pub fn site_from_axes(&self, axes: &[usize]) -> usize {
        axes.iter().rev().fold(0, |acc, &i| acc * self.points + i % self.points)
    }

    pub fn position(&self, site: usize) -> Vec<f64> {
        let h = self.spacing();
        self.axis_indices(site)[..self.dim].iter().map(|&i| i as f64 * h).collect()
    }

    /// Displacement represented by a difference site, wrapped into `[−L/2, L/2)`.
    pub fn displacement(&self, diff: usize) -> Vec<f64> {
        let h = self.spacing();
        self.axis_indices(diff)[..self.dim]
            .iter()
            .map(|&i| {
                let signed = if 2 * i >= self.points { i as f64 - self.points as f64 } else { i as f64 };
                signed * h
            })
            .collect()
    }

    /// Torus difference `a ⊖ b`.
    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        let g = self.points;
        if self.dim == 1 {
            return (a + g - b) % g;
        }
        let (aa, bb) = (self.axis_indices(a), self.axis_indices(b));
        let mut out = 0;
        for axis in (0..self.dim).rev() {
            out = out * g + (aa[axis] + g - bb[axis]) % g;
        }
        out
    }

    /// Torus sum `a ⊕ b`.
    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        let g = self.points;
        if self.dim == 1 {
            return (a + b) % g;
        }
        let (aa, bb) = (self.axis_indices(a), self.axis_indices(b));
        let mut out = 0;
        for axis in (0..self.dim).rev() {
            out = out * g + (aa[axis] + bb[axis]) % g;
        }
        out
    }

    /// Minimum-image distance between two points of the torus.
    pub fn torus_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        torus_distance(self.length, a, b)
    }
}

/// Minimum-image distance on the torus of side `length`.
pub fn torus_distance(length: f64, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut d = (x - y).rem_euclid(length);
            if d > 0.5 * length {
                d = length - d;
            }
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Site set on which a [`crate::hierarchy::GridTruncation`] lives.
#[derive(Clone, Debug, PartialEq)]
pub enum SiteSpace {
    Periodic(PeriodicGrid),
    /// Configurations are sets: operators skip coincident points.
    Lattice(LatticeSpace),
}

impl SiteSpace {
    pub fn sites(&self) -> usize {
        match self {
            Self::Periodic(g) => g.sites(),
            Self::Lattice(l) => l.len(),
        }
    }

    pub fn cell_weight(&self) -> f64 {
        match self {
            Self::Periodic(g) => g.cell_volume(),
            Self::Lattice(l) => l.cell_weight(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Periodic(g) => g.dim(),
            Self::Lattice(l) => l.dim(),
        }
    }

    pub fn position(&self, site: usize) -> Vec<f64> {
        match self {
            Self::Periodic(g) => g.position(site),
            Self::Lattice(l) => l.site(site).to_vec(),
        }
    }

    pub fn excludes_coincident(&self) -> bool {
        matches!(self, Self::Lattice(_))
    }

    pub fn periodic(&self) -> Option<&PeriodicGrid> {
        match self {
            Self::Periodic(g) => Some(g),
            Self::Lattice(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_arithmetic_round_trips() {
        for dim in 1..=3 {
            let g = PeriodicGrid::new(dim, 5, 2.5).unwrap();
            for a in 0..g.sites() {
                for b in (0..g.sites()).step_by(7) {
                    assert_eq!(g.add(g.sub(a, b), b), a);
                }
            }
        }
    }

    #[test]
    fn spacing_must_tile() {
        assert!(PeriodicGrid::with_spacing(1, 10.0, 0.25).is_ok());
        assert!(PeriodicGrid::with_spacing(1, 10.0, 0.3).is_err());
        assert_eq!(PeriodicGrid::with_spacing(1, 10.0, 0.25).unwrap().points_per_axis(), 40);
    }

    #[test]
    fn displacement_is_minimum_image() {
        let g = PeriodicGrid::new(1, 8, 8.0).unwrap();
        assert_eq!(g.displacement(1), vec![1.0]);
        assert_eq!(g.displacement(7), vec![-1.0]);
        assert_eq!(g.displacement(4), vec![-4.0]);
        assert!((torus_distance(8.0, &[0.5], &[7.5]) - 1.0).abs() < 1e-15);
    }
}
