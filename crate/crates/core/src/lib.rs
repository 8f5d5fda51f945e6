//! Correlation-function hierarchies for spatial birth-and-death processes:
//! configuration-space integrals, kernels, scale-of-spaces bounds, a grid
//! discretization of the hierarchy generator, perturbative and RK4 solvers,
//! and a Gillespie simulator used as an independent check.

pub mod compare;
pub mod config;
pub mod config_space;
pub mod grid;
pub mod hierarchy;
pub mod io;
pub mod kernel;
pub mod oracle;
pub mod run;
pub mod scale;
pub mod sim;
pub mod solver;
pub mod suites;
