//! Points, truck and drone metrics, and seeded instance generation.

use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn l2(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn l1(self, other: Point) -> f64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn translate(self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Norm used for truck travel. Drone travel is always Euclidean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruckNorm {
    Euclidean,
    Rectilinear,
}

impl TruckNorm {
    /// Smallest `c` with `‖p‖_T ≤ c‖p‖₂` for all `p`.
    pub fn l2_equivalence(self) -> f64 {
        match self {
            TruckNorm::Euclidean => 1.0,
            TruckNorm::Rectilinear => std::f64::consts::SQRT_2,
        }
    }

    pub fn dist(self, p: Point, q: Point) -> f64 {
        match self {
            TruckNorm::Euclidean => p.l2(q),
            TruckNorm::Rectilinear => p.l1(q),
        }
    }
}

/// Truck norm plus the drone speed ratio `alpha ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub truck_norm: TruckNorm,
    alpha: f64,
}

impl MetricPair {
    pub fn new(truck_norm: TruckNorm, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 1.0) {
            return Err(Error::param("alpha", format!("must be finite and >= 1, got {alpha}")));
        }
        Ok(Self { truck_norm, alpha })
    }

    pub fn euclidean(alpha: f64) -> Result<Self> {
        Self::new(TruckNorm::Euclidean, alpha)
    }

    pub fn rectilinear(alpha: f64) -> Result<Self> {
        Self::new(TruckNorm::Rectilinear, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn truck_dist(&self, p: Point, q: Point) -> f64 {
        self.truck_norm.dist(p, q)
    }

    /// Drone travel time: Euclidean distance over `alpha`.
    #[inline]
    pub fn drone_dist(&self, p: Point, q: Point) -> f64 {
        p.l2(q) / self.alpha
    }
}

/// A finite point set in the unit square together with its seed provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub points: Vec<Point>,
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    seed: Option<u64>,
    points: Vec<Point>,
}

impl Instance {
    /// Instance from externally supplied points (no seed). Points may lie
    /// outside the unit square; only file loading enforces the box.
    pub fn from_points(points: Vec<Point>) -> Self {
        Self { points, seed: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> Result<Point> {
        self.points.get(i).copied().ok_or(Error::Index {
            index: i,
            n: self.len(),
        })
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                d = d.max(p.l2(*q));
            }
        }
        d
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.len(),
            seed: self.seed,
            points: self.points.clone(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialises")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, String> {
        let file: InstanceFile = serde_json::from_str(s).map_err(|e| e.to_string())?;
        if file.n != file.points.len() {
            return Err(format!("n = {} but {} points listed", file.n, file.points.len()));
        }
        if let Some((i, p)) = file
            .points
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y))
        {
            return Err(format!("point {i} = ({}, {}) outside the unit square", p.x, p.y));
        }
        Ok(Instance {
            points: file.points,
            seed: file.seed,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text).map_err(|reason| Error::Parameter {
            name: "instance",
            reason: format!("{}: {reason}", path.display()),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }
}

/// `n` i.i.d. uniform points in the unit square, x then y per point, drawn
/// from the primary stream of `seed`.
pub fn generate_instance(n: usize, seed: u64) -> Instance {
    let mut r = rng::rng(seed);
    let points = (0..n)
        .map(|_| {
            let x: f64 = r.random();
            let y: f64 = r.random();
            Point::new(x, y)
        })
        .collect();
    Instance {
        points,
        seed: Some(seed),
    }
}

pub fn truck_dist(m: &MetricPair, p: Point, q: Point) -> f64 {
    m.truck_dist(p, q)
}

pub fn drone_dist(m: &MetricPair, p: Point, q: Point) -> f64 {
    m.drone_dist(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const O: Point = Point::new(0.0, 0.0);
    const P34: Point = Point::new(3.0, 4.0);

    #[test]
    fn generate_edge_cases() {
        assert!(generate_instance(0, 7).is_empty());
        let inst = generate_instance(5, 42);
        assert_eq!(inst.len(), 5);
        assert!(inst
            .points
            .iter()
            .all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));
        assert_eq!(inst, generate_instance(5, 42));
        assert_ne!(inst, generate_instance(5, 43));
    }

    #[test]
    fn prefix_stable_in_n() {
        let a = generate_instance(10, 3);
        let b = generate_instance(4, 3);
        assert_eq!(&a.points[..4], &b.points[..]);
    }

    #[test]
    fn distances() {
        let e = MetricPair::euclidean(2.0).unwrap();
        let r = MetricPair::rectilinear(2.0).unwrap();
        assert_eq!(e.truck_dist(O, P34), 5.0);
        assert_eq!(r.truck_dist(O, P34), 7.0);
        assert_eq!(e.drone_dist(O, P34), 2.5);
        assert_eq!(r.drone_dist(O, P34), 2.5);
        assert_eq!(e.truck_dist(P34, P34), 0.0);
        assert_eq!(r.truck_dist(P34, P34), 0.0);
        assert_eq!(e.drone_dist(P34, P34), 0.0);
        let one = MetricPair::euclidean(1.0).unwrap();
        assert_eq!(one.drone_dist(O, P34), one.truck_dist(O, P34));
    }

    #[test]
    fn alpha_below_one_rejected() {
        assert!(MetricPair::euclidean(0.99).is_err());
        assert!(MetricPair::euclidean(f64::NAN).is_err());
        assert!(MetricPair::rectilinear(1.0).is_ok());
    }

    #[test]
    fn json_roundtrip_and_rejects() {
        let inst = generate_instance(7, 11);
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, back);
        let external = r#"{"n": 1, "seed": null, "points": [[0.25, 0.5]]}"#;
        let ext = Instance::from_json(external).unwrap();
        assert_eq!(ext.seed, None);
        assert!(Instance::from_json(r#"{"n": 2, "seed": null, "points": [[0.1, 0.5]]}"#).is_err());
        assert!(Instance::from_json(r#"{"n": 1, "seed": 1, "points": [[1.5, 0.5]]}"#).is_err());
    }

    fn pt() -> impl Strategy<Value = Point> {
        (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y)| Point::new(x, y))
    }

    proptest! {
        #[test]
        fn metric_axioms(p in pt(), q in pt(), s in pt(), alpha in 1.0f64..10.0) {
            for norm in [TruckNorm::Euclidean, TruckNorm::Rectilinear] {
                let m = MetricPair::new(norm, alpha).unwrap();
                prop_assert_eq!(m.truck_dist(p, q), m.truck_dist(q, p));
                prop_assert_eq!(m.drone_dist(p, q), m.drone_dist(q, p));
                prop_assert!(m.truck_dist(p, s) <= m.truck_dist(p, q) + m.truck_dist(q, s) + 1e-12);
                prop_assert!(m.drone_dist(p, s) <= m.drone_dist(p, q) + m.drone_dist(q, s) + 1e-12);
                prop_assert!(m.truck_dist(p, q) <= norm.l2_equivalence() * p.l2(q) + 1e-12);
            }
            let e = MetricPair::euclidean(alpha).unwrap();
            prop_assert!(e.drone_dist(p, q) <= e.truck_dist(p, q));
        }
    }
}
