//! TSP and TSPD solvers.

mod exact;
mod heuristic;
mod partition;
mod tsp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Instance, TruckNorm};
use crate::ring::TspdSolution;

pub use exact::{tspd_exact, tspd_exact_with, ExactOptions, EXACT_MAX_N as TSPD_EXACT_MAX_N};
pub use heuristic::{tspd_heuristic, HeuristicConfig};
pub use partition::{partition_dp, partition_dp_with};
pub use tsp::{tsp_exact, tsp_heuristic, EXACT_MAX_N as TSP_EXACT_MAX_N};

/// Closed tour; `length` is the truck-norm cycle length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    pub length: f64,
}

impl Tour {
    pub fn new(order: Vec<usize>, inst: &Instance, norm: TruckNorm) -> Result<Self> {
        let n = inst.len();
        let mut seen = vec![false; n];
        for &c in &order {
            if c >= n {
                return Err(Error::Index { index: c, n });
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::param("tour", format!("node {c} repeated")));
            }
        }
        if order.len() != n {
            return Err(Error::param("tour", format!("{} of {n} nodes", order.len())));
        }
        let length = cycle_length(&order, inst, norm);
        Ok(Tour { order, length })
    }
}

pub(crate) fn cycle_length(order: &[usize], inst: &Instance, norm: TruckNorm) -> f64 {
    let n = order.len();
    if n < 2 {
        return 0.0;
    }
    (0..n)
        .map(|i| norm.dist(inst.points[order[i]], inst.points[order[(i + 1) % n]]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: TspdSolution,
    pub makespan: f64,
    pub method: Method,
    pub elapsed: f64,
    pub seed: Option<u64>,
}

/// Makespan per `√n`, the finite-`n` estimate of the constant.
pub fn scaled_makespan(report: &SolveReport, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    Ok(report.makespan / (n as f64).sqrt())
}
