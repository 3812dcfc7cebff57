//! Bounds, estimators and solvers for the asymptotic constant of the
//! traveling salesman problem with drone (TSPD).
//!
//! The crate is organised by concern:
//!
//! * [`geometry`] points, truck/drone metrics, seeded instance generation.
//! * [`ring`] rings, closed ring chains, makespan and validation.
//! * [`strip`] Monte Carlo upper bounds from strip constructions.
//! * [`lower`] closed-form lower bounds and nearest-neighbour laws.
//! * [`solvers`] exact and heuristic TSP / TSPD solvers.
//! * [`experiment`] table runners and machine-readable reports.

pub mod error;
pub mod experiment;
pub mod geometry;
pub mod lower;
pub mod ring;
pub mod rng;
pub mod solvers;
pub mod stats;
pub mod strip;

pub use error::{Error, Result};
pub use geometry::{Instance, MetricPair, Point, TruckNorm};
pub use ring::{Ring, TspdSolution};
