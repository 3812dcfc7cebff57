//! Lower bounds on the TSPD constant and the nearest-neighbour distance laws
//! they rest on.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats::Welford;

/// Named plug-in values for the TSP constant.
pub const PRESETS: [(&str, f64); 4] = [
    ("gaudio", 0.6277),
    ("empirical_l2", 0.71),
    ("nn_l1", 0.78332),
    ("empirical_l1", 0.90),
];

pub fn preset(name: &str) -> Option<f64> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|&(_, b)| b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L2,
    L1,
}

impl NormKind {
    /// Area of the metric ball of radius `r`.
    pub fn ball_area(self, r: f64) -> f64 {
        match self {
            NormKind::L2 => PI * r * r,
            NormKind::L1 => 2.0 * r * r,
        }
    }

    fn dist(self, x: f64, y: f64) -> f64 {
        match self {
            NormKind::L2 => x.hypot(y),
            NormKind::L1 => x.abs() + y.abs(),
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(NormKind::L2),
            "l1" => Ok(NormKind::L1),
            _ => Err(Error::param("norm", format!("expected l1 or l2, got `{s}`"))),
        }
    }
}

fn check(beta: f64, alpha: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::param("beta", format!("must be > 0, got {beta}")));
    }
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::param("alpha", format!("must be >= 1, got {alpha}")));
    }
    Ok(())
}

/// `beta / (1 + alpha)`: the makespan is at least the TSP length over `1 + α`.
pub fn lb_ratio(beta: f64, alpha: f64) -> Result<f64> {
    check(beta, alpha)?;
    Ok(beta / (1.0 + alpha))
}

/// Constant `c` with `E[drone legs] ≥ c · n_D / √n_T`: each drone node is
/// joined to its nearest and second-nearest truck node.
pub fn drone_leg_constant() -> f64 {
    nn_expectation(NormKind::L2, 1, 1.0) + nn_expectation(NormKind::L2, 2, 1.0)
}

/// Truck-node fraction balancing the truck and drone lower bounds.
pub fn rho_star(beta: f64, alpha: f64) -> Result<f64> {
    check(beta, alpha)?;
    let c = drone_leg_constant();
    // beta √ρ = (c/α)(1 - ρ)/√ρ  ⇔  ρ = c / (c + αβ)
    Ok(c / (c + alpha * beta))
}

/// Parametric lower bound `beta · √ρ*`.
pub fn lb_param(beta: f64, alpha: f64) -> Result<f64> {
    Ok(beta * rho_star(beta, alpha)?.sqrt())
}

fn check_nn(order: u8, n: f64) -> Result<()> {
    if !(order == 1 || order == 2) {
        return Err(Error::param("order", format!("must be 1 or 2, got {order}")));
    }
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::param("intensity", format!("must be > 0, got {n}")));
    }
    Ok(())
}

/// Density of the distance from a fixed point to the nearest (`order = 1`)
/// or second-nearest (`order = 2`) point of a planar Poisson process of
/// intensity `n`.
pub fn nn_pdf(norm: NormKind, order: u8, n: f64, r: f64) -> Result<f64> {
    check_nn(order, n)?;
    if r < 0.0 {
        return Ok(0.0);
    }
    Ok(match (norm, order) {
        (NormKind::L2, 1) => 2.0 * PI * n * r * (-PI * n * r * r).exp(),
        (NormKind::L2, _) => 2.0 * PI * PI * n * n * r.powi(3) * (-PI * n * r * r).exp(),
        (NormKind::L1, 1) => 4.0 * n * r * (-2.0 * n * r * r).exp(),
        (NormKind::L1, _) => 8.0 * n * n * r.powi(3) * (-2.0 * n * r * r).exp(),
    })
}

/// Mean of [`nn_pdf`].
pub fn nn_expectation(norm: NormKind, order: u8, n: f64) -> f64 {
    let root = (2.0 * PI).sqrt();
    let c = match (norm, order) {
        (NormKind::L2, 1) => 0.5,
        (NormKind::L2, _) => 0.75,
        (NormKind::L1, 1) => root / 4.0,
        (NormKind::L1, _) => 3.0 * root / 8.0,
    };
    c / n.sqrt()
}

/// Nearest-neighbour TSP lower constant: every point pays half of its
/// nearest plus second-nearest distances.
pub fn tsp_nn_lower_constant(norm: NormKind) -> f64 {
    0.5 * (nn_expectation(norm, 1, 1.0) + nn_expectation(norm, 2, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnSample {
    pub norm: NormKind,
    pub intensity: f64,
    pub trials: u64,
    pub seed: u64,
    pub nearest_mean: f64,
    pub nearest_stderr: f64,
    pub second_mean: f64,
    pub second_stderr: f64,
}

const NN_CHUNK: u64 = 4096;

/// Empirical nearest and second-nearest distances from the origin to a
/// Poisson process of intensity `n`, simulated on `[-5/√n, 5/√n]²`
/// (expected 100 points per window). Trial chunk `c` draws from substream
/// `c` of `seed`; windows with fewer than two points are redrawn.
pub fn sample_nn_distances(norm: NormKind, n: f64, trials: u64, seed: u64) -> Result<NnSample> {
    if trials < 100 {
        return Err(Error::param("trials", format!("need at least 100, got {trials}")));
    }
    check_nn(1, n)?;
    let half = 5.0 / n.sqrt();
    let count = Poisson::new(n * 4.0 * half * half).expect("positive Poisson mean");
    let chunks = trials.div_ceil(NN_CHUNK);
    let parts: Vec<(Welford, Welford)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::substream(seed, c);
            let mut first = Welford::new();
            let mut second = Welford::new();
            for _ in 0..NN_CHUNK.min(trials - c * NN_CHUNK) {
                let (d1, d2) = loop {
                    let m = count.sample(&mut r) as u64;
                    if m < 2 {
                        continue;
                    }
                    let (mut d1, mut d2) = (f64::INFINITY, f64::INFINITY);
                    for _ in 0..m {
                        let x = r.random_range(-half..half);
                        let y = r.random_range(-half..half);
                        let d = norm.dist(x, y);
                        if d < d1 {
                            d2 = d1;
                            d1 = d;
                        } else if d < d2 {
                            d2 = d;
                        }
                    }
                    break (d1, d2);
                };
                first.push(d1);
                second.push(d2);
            }
            (first, second)
        })
        .collect();
    let mut first = Welford::new();
    let mut second = Welford::new();
    for (a, b) in &parts {
        first.merge(a);
        second.merge(b);
    }
    Ok(NnSample {
        norm,
        intensity: n,
        trials,
        seed,
        nearest_mean: first.mean(),
        nearest_stderr: first.std_err(),
        second_mean: second.mean(),
        second_stderr: second.std_err(),
    })
}

/// Truncate (toward zero) to `places` decimals, as lower-bound tables do.
pub fn truncate(x: f64, places: i32) -> f64 {
    let s = 10f64.powi(places);
    // nudge absorbs representation error such as 0.4858 stored as 0.48579999…
    (x * s + 1e-9).trunc() / s
}
