//! Configuration-space analysis for two-component continuum particle
//! systems: the K-transform and its inverse, Lebesgue–Poisson integration,
//! the hierarchical generators acting on quasi-observables and correlation
//! functions, a truncated hierarchy integrator and an exact stochastic
//! simulator used as an independent reference.

pub mod cli;
pub mod config;
pub mod error;
pub mod generators;
pub mod gillespie;
pub mod hierarchy;
pub mod ktransform;
pub mod lp_measure;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod sum;
pub mod testfns;
pub mod verify;

pub use config::{ConfigFunction, CorrelationFunction, FiniteConfig, Point, Region, Support, TwoConfig};
pub use error::{Error, Result};
pub use lp_measure::{Estimate, LPIntegrator, Rule};
