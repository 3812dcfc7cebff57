//! Monte Carlo upper bounds on the TSPD constant from strip constructions.
//!
//! Points inside a horizontal strip of height `h/√n` are chained left to
//! right. After rescaling, a block of `k` consecutive points is described
//! by `k - 1` Exponential(1) horizontal gaps and `k` Uniform[0,1] heights,
//! and the distance between block points `i < j` is
//!
//! ```text
//! L_ij = sqrt((W_j - W_i)^2 + h^4 (U_i - U_j)^2),   W_i = Z_1 + … + Z_i
//! ```
//!
//! A homogeneous pattern of `k`-point rings advances `k - 1` points per ring,
//! so `E[C_k(h, α)] / ((k - 1) h)` bounds the constant for every `h > 0`.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TruckNorm;
use crate::rng::{self, Rng};
use crate::stats::Welford;

/// Largest block the estimators use.
pub const MAX_POINTS: usize = 5;

/// Samples per RNG substream. Part of the reproducibility contract: changing
/// it changes every estimate.
pub const CHUNK: u64 = 1 << 16;

pub const DEFAULT_H_BRACKET: (f64, f64) = (0.5, 4.0);
pub const H_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Straight,
    Triangle,
    Quartet,
    Five,
}

impl PatternKind {
    pub const ALL: [PatternKind; 4] = [
        PatternKind::Straight,
        PatternKind::Triangle,
        PatternKind::Quartet,
        PatternKind::Five,
    ];

    /// Points per block, `k`.
    pub fn points(self) -> usize {
        match self {
            PatternKind::Straight => 2,
            PatternKind::Triangle => 3,
            PatternKind::Quartet => 4,
            PatternKind::Five => 5,
        }
    }

    /// New points consumed per block, `k - 1`.
    pub fn advance(self) -> usize {
        self.points() - 1
    }

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Straight => "straight",
            PatternKind::Triangle => "triangle",
            PatternKind::Quartet => "quartet",
            PatternKind::Five => "five",
        }
    }

    /// Unscaled block cost `C_k(h, α)`.
    pub fn cost(self, b: &StripBlock, h: f64, alpha: f64) -> f64 {
        let l = Lengths::new(b, h);
        match self {
            PatternKind::Straight => l.straight(),
            PatternKind::Triangle => l.triangle(0, 2, 1, alpha),
            PatternKind::Quartet => l.quartet(alpha),
            PatternKind::Five => l.five(alpha),
        }
    }
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PatternKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::param("pattern", format!("unknown pattern `{s}`")))
    }
}

/// `k - 1` horizontal gaps and `k` heights of a block, unscaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripBlock {
    k: usize,
    z: [f64; MAX_POINTS - 1],
    u: [f64; MAX_POINTS],
}

impl StripBlock {
    pub fn new(z: &[f64], u: &[f64]) -> Result<Self> {
        let k = u.len();
        if !(2..=MAX_POINTS).contains(&k) || z.len() + 1 != k {
            return Err(Error::param(
                "block",
                format!(
                    "need 2..={MAX_POINTS} heights and one gap fewer, got {} gaps, {k} heights",
                    z.len()
                ),
            ));
        }
        if z.iter().any(|&g| !(g >= 0.0 && g.is_finite())) || u.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::param("block", "gaps must be finite and >= 0, heights in [0, 1]"));
        }
        let mut b = StripBlock {
            k,
            z: [0.0; MAX_POINTS - 1],
            u: [0.0; MAX_POINTS],
        };
        b.z[..k - 1].copy_from_slice(z);
        b.u[..k].copy_from_slice(u);
        Ok(b)
    }

    pub fn points(&self) -> usize {
        self.k
    }

    pub fn gaps(&self) -> &[f64] {
        &self.z[..self.k - 1]
    }

    pub fn heights(&self) -> &[f64] {
        &self.u[..self.k]
    }

    fn fill(&mut self, k: usize, r: &mut Rng) {
        self.k = k;
        for g in &mut self.z[..k - 1] {
            // inverse transform, 1 - U in (0, 1]
            *g = -(1.0 - r.random::<f64>()).ln();
        }
        for v in &mut self.u[..k] {
            *v = r.random();
        }
    }
}

/// Draw a block: gaps first, then heights, from `r`.
pub fn sample_block(k: usize, r: &mut Rng) -> Result<StripBlock> {
    if !(2..=MAX_POINTS).contains(&k) {
        return Err(Error::param(
            "k",
            format!("block size must be in 2..={MAX_POINTS}, got {k}"),
        ));
    }
    let mut b = StripBlock {
        k,
        z: [0.0; MAX_POINTS - 1],
        u: [0.0; MAX_POINTS],
    };
    b.fill(k, r);
    Ok(b)
}

/// Unscaled distance `L_ij` between block points `i` and `j`.
pub fn pair_length(b: &StripBlock, h: f64, i: usize, j: usize) -> f64 {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    let dx: f64 = b.z[lo..hi].iter().sum();
    let dy = b.u[lo] - b.u[hi];
    let h2 = h * h;
    (dx * dx + h2 * h2 * dy * dy).sqrt()
}

/// All pair lengths of one block at one `h`.
#[derive(Debug, Clone, Copy)]
pub struct Lengths {
    l: [[f64; MAX_POINTS]; MAX_POINTS],
}

impl Lengths {
    pub fn new(b: &StripBlock, h: f64) -> Self {
        let h4 = h * h * h * h;
        let mut w = [0.0; MAX_POINTS];
        for i in 1..b.k {
            w[i] = w[i - 1] + b.z[i - 1];
        }
        let mut l = [[0.0; MAX_POINTS]; MAX_POINTS];
        for i in 0..b.k {
            for j in i + 1..b.k {
                let dx = w[j] - w[i];
                let dy = b.u[i] - b.u[j];
                let d = (dx * dx + h4 * dy * dy).sqrt();
                l[i][j] = d;
                l[j][i] = d;
            }
        }
        Lengths { l }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i][j]
    }

    pub fn straight(&self) -> f64 {
        self.l[0][1]
    }

    /// Truck `i → j`, drone serves `k`.
    #[inline]
    pub fn triangle(&self, i: usize, j: usize, k: usize, alpha: f64) -> f64 {
        self.l[i][j].max((self.l[i][k] + self.l[k][j]) / alpha)
    }

    /// Truck `i → a → b → j`, drone serves `k`.
    #[inline]
    pub fn quintet(&self, i: usize, a: usize, b: usize, j: usize, k: usize, alpha: f64) -> f64 {
        let truck = self.l[i][a] + self.l[a][b] + self.l[b][j];
        truck.max((self.l[i][k] + self.l[k][j]) / alpha)
    }

    /// Quartet with endpoints 0 and 3; whichever of 1, 2 is not flown is driven.
    pub fn quartet(&self, alpha: f64) -> f64 {
        let a = self.l[0][1] + self.l[1][3];
        let b = self.l[0][2] + self.l[2][3];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        lo.max(hi / alpha)
    }

    /// The twelve triangle-pair and quintet configurations of a five-point block.
    pub fn five_terms(&self, alpha: f64) -> [f64; 12] {
        let t = |i, j, k| self.triangle(i, j, k, alpha);
        let q = |i, a, b, j, k| self.quintet(i, a, b, j, k, alpha);
        [
            t(0, 1, 2) + t(1, 4, 3),
            t(0, 1, 3) + t(1, 4, 2),
            t(0, 2, 1) + t(2, 4, 3),
            t(0, 2, 3) + t(2, 4, 1),
            t(0, 3, 1) + t(3, 4, 2),
            t(0, 3, 2) + t(3, 4, 1),
            q(0, 1, 3, 4, 2),
            q(0, 3, 1, 4, 2),
            q(0, 1, 2, 4, 3),
            q(0, 2, 1, 4, 3),
            q(0, 2, 3, 4, 1),
            q(0, 3, 2, 4, 1),
        ]
    }

    pub fn five(&self, alpha: f64) -> f64 {
        self.five_terms(alpha).into_iter().fold(f64::INFINITY, f64::min)
    }
}

pub fn cost_straight(b: &StripBlock, h: f64) -> f64 {
    debug_assert_eq!(b.k, 2);
    PatternKind::Straight.cost(b, h, 1.0)
}

pub fn cost_triangle(b: &StripBlock, h: f64, alpha: f64) -> f64 {
    debug_assert_eq!(b.k, 3);
    PatternKind::Triangle.cost(b, h, alpha)
}

pub fn cost_quartet(b: &StripBlock, h: f64, alpha: f64) -> f64 {
    debug_assert_eq!(b.k, 4);
    PatternKind::Quartet.cost(b, h, alpha)
}

pub fn cost_five(b: &StripBlock, h: f64, alpha: f64) -> f64 {
    debug_assert_eq!(b.k, 5);
    PatternKind::Five.cost(b, h, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub pattern: PatternKind,
    pub alpha: f64,
    pub h: f64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Only the speed-scaled Euclidean model has a strip upper bound here.
pub fn require_euclidean(norm: TruckNorm) -> Result<()> {
    match norm {
        TruckNorm::Euclidean => Ok(()),
        TruckNorm::Rectilinear => Err(Error::Unsupported(
            "strip upper bounds are implemented for the Euclidean truck norm only".into(),
        )),
    }
}

fn check_params(alpha: f64, h: f64, n_samples: u64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::param("alpha", format!("must be finite and >= 1, got {alpha}")));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::param("h", format!("must be finite and > 0, got {h}")));
    }
    if n_samples < 2 {
        return Err(Error::param("samples", "need at least 2 samples"));
    }
    Ok(())
}

/// Per-sample statistic `C_k / ((k - 1) h)` accumulated over `n_samples`
/// blocks. Chunk `c` of `CHUNK` samples draws from substream `c` of `seed`;
/// chunks are merged in index order.
fn accumulate(pattern: PatternKind, alpha: f64, h: f64, n_samples: u64, seed: u64) -> Welford {
    let k = pattern.points();
    let scale = 1.0 / (pattern.advance() as f64 * h);
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Welford> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::substream(seed, c);
            let count = CHUNK.min(n_samples - c * CHUNK);
            let mut b = StripBlock {
                k,
                z: [0.0; MAX_POINTS - 1],
                u: [0.0; MAX_POINTS],
            };
            let mut w = Welford::new();
            for _ in 0..count {
                b.fill(k, &mut r);
                w.push(pattern.cost(&b, h, alpha) * scale);
            }
            w
        })
        .collect();
    let mut total = Welford::new();
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Mean and standard error of `C_k / ((k - 1) h)` over `n_samples` blocks.
pub fn estimate_bound(pattern: PatternKind, alpha: f64, h: f64, n_samples: u64, seed: u64) -> Result<BoundEstimate> {
    check_params(alpha, h, n_samples)?;
    let w = accumulate(pattern, alpha, h, n_samples, seed);
    Ok(BoundEstimate {
        pattern,
        alpha,
        h,
        mean: w.mean(),
        stderr: w.std_err(),
        samples: n_samples,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HOptimum {
    pub estimate: BoundEstimate,
    /// The minimiser sits on the bracket edge: no interior minimum was found.
    pub at_boundary: bool,
    pub evaluations: usize,
}

/// Golden-section minimisation of `h ↦ estimate_bound(...).mean` with common
/// random numbers: every evaluation replays the same blocks (same seed and
/// sample count), so the objective is a deterministic, piecewise smooth
/// function of `h`.
pub fn optimize_h(
    pattern: PatternKind,
    alpha: f64,
    n_samples: u64,
    seed: u64,
    h_lo: f64,
    h_hi: f64,
) -> Result<HOptimum> {
    if !(h_lo > 0.0 && h_lo < h_hi && h_hi.is_finite()) {
        return Err(Error::param(
            "h bracket",
            format!("need 0 < h_lo < h_hi, got [{h_lo}, {h_hi}]"),
        ));
    }
    check_params(alpha, h_lo, n_samples)?;
    let mut evaluations = 0;
    let mut f = |h: f64| {
        evaluations += 1;
        accumulate(pattern, alpha, h, n_samples, seed).mean()
    };
    let (h, _) = golden_section(&mut f, h_lo, h_hi, H_TOLERANCE);
    let at_boundary = h - h_lo < H_TOLERANCE || h_hi - h < H_TOLERANCE;
    let estimate = estimate_bound(pattern, alpha, h, n_samples, seed)?;
    Ok(HOptimum {
        estimate,
        at_boundary,
        evaluations: evaluations + 1,
    })
}

/// Minimise a unimodal `f` on `[a, b]` until the bracket is narrower than `tol`.
/// Returns the best evaluated point, including the two endpoints.
pub fn golden_section(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let (lo, hi) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let (mut best, mut fbest) = if fc <= fd { (c, fc) } else { (d, fd) };
    // an edge minimum is only reported when the edge is actually lower
    if a == lo || b == hi {
        let edge = if a == lo { lo } else { hi };
        let fe = f(edge);
        if fe < fbest {
            best = edge;
            fbest = fe;
        }
    }
    (best, fbest)
}
