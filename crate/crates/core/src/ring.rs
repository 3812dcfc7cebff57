//! Rings and closed ring chains.
//!
//! A ring runs from a launch node to a landing node (both served by truck
//! and drone together). In between the truck visits `truck` in order and
//! the drone may serve at most one node on its own. A solution is a closed
//! chain: ring `i` ends where ring `i + 1` starts and the last ring ends
//! where the first starts.
//!
//! A ring normally has `start != end`. The one exception is a solution made
//! of a single ring that closes on itself with a non-empty truck path; this
//! is what straight-ring elimination produces for a pure truck tour.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Instance, MetricPair, TruckNorm};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ring {
    pub start: usize,
    pub truck: Vec<usize>,
    pub drone: Option<usize>,
    pub end: usize,
}

impl Ring {
    pub fn straight(start: usize, end: usize) -> Self {
        Ring {
            start,
            truck: Vec::new(),
            drone: None,
            end,
        }
    }

    pub fn with_drone(start: usize, truck: Vec<usize>, drone: usize, end: usize) -> Self {
        Ring {
            start,
            truck,
            drone: Some(drone),
            end,
        }
    }

    /// Two combined nodes, nothing in between.
    pub fn is_straight(&self) -> bool {
        self.truck.is_empty() && self.drone.is_none() && self.start != self.end
    }

    /// Node count including both endpoints (a closed ring counts its endpoint once).
    pub fn size(&self) -> usize {
        2 + self.truck.len() + usize::from(self.drone.is_some()) - usize::from(self.start == self.end)
    }

    /// Truck path length start → truck… → end under the truck norm.
    pub fn truck_length(&self, inst: &Instance, m: &MetricPair) -> Result<f64> {
        let mut total = 0.0;
        let mut prev = inst.point(self.start)?;
        for &i in self.truck.iter().chain(std::iter::once(&self.end)) {
            let p = inst.point(i)?;
            total += m.truck_dist(prev, p);
            prev = p;
        }
        Ok(total)
    }

    /// Drone sortie time start → drone → end, zero without a drone node.
    pub fn drone_time(&self, inst: &Instance, m: &MetricPair) -> Result<f64> {
        match self.drone {
            None => Ok(0.0),
            Some(k) => {
                let (s, d, e) = (inst.point(self.start)?, inst.point(k)?, inst.point(self.end)?);
                Ok(m.drone_dist(s, d) + m.drone_dist(d, e))
            }
        }
    }
}

/// Makespan contribution of a single ring.
pub fn ring_cost(r: &Ring, inst: &Instance, m: &MetricPair) -> Result<f64> {
    let truck = r.truck_length(inst, m)?;
    Ok(match r.drone {
        Some(_) => truck.max(r.drone_time(inst, m)?),
        None => truck,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TspdSolution {
    pub rings: Vec<Ring>,
    pub instance_n: usize,
}

impl TspdSolution {
    pub fn new(rings: Vec<Ring>, instance_n: usize) -> Self {
        Self { rings, instance_n }
    }

    pub fn empty(instance_n: usize) -> Self {
        Self::new(Vec::new(), instance_n)
    }

    /// All-straight solution following a closed tour.
    pub fn from_tour(order: &[usize]) -> Self {
        let n = order.len();
        if n <= 1 {
            return Self::empty(n);
        }
        let rings = (0..n).map(|i| Ring::straight(order[i], order[(i + 1) % n])).collect();
        Self::new(rings, n)
    }

    pub fn has_straight_ring(&self) -> bool {
        self.rings.iter().any(Ring::is_straight)
    }

    /// (combined, truck-only, drone) node counts.
    pub fn role_counts(&self) -> (usize, usize, usize) {
        let combined = self.rings.len();
        let truck = self.rings.iter().map(|r| r.truck.len()).sum();
        let drone = self.rings.iter().filter(|r| r.drone.is_some()).count();
        (combined, truck, drone)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Node index outside `0..n`.
    IndexOutOfRange { ring: usize, node: usize },
    /// `rings[ring].end != rings[ring + 1].start` (cyclically).
    BrokenChain { ring: usize },
    /// Node never visited.
    Uncovered { node: usize },
    /// Node visited in more than one role or position.
    Duplicate { node: usize },
    /// Drone node also used as an endpoint or truck node of its own ring.
    DroneRoleConflict { ring: usize, node: usize },
    /// `start == end` outside the single closed-ring case.
    DegenerateRing { ring: usize },
    /// Rings present for an instance with fewer than two points, or none for two or more.
    WrongRingCount { rings: usize, n: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexOutOfRange { ring, node } => write!(f, "ring {ring}: node {node} out of range"),
            Violation::BrokenChain { ring } => write!(f, "ring {ring} does not end where the next ring starts"),
            Violation::Uncovered { node } => write!(f, "node {node} not covered"),
            Violation::Duplicate { node } => write!(f, "node {node} visited more than once"),
            Violation::DroneRoleConflict { ring, node } => {
                write!(f, "ring {ring}: drone node {node} also used by the truck")
            }
            Violation::DegenerateRing { ring } => write!(f, "ring {ring} starts and ends at the same node"),
            Violation::WrongRingCount { rings, n } => write!(f, "{rings} rings for an instance of {n} points"),
        }
    }
}

/// Check chaining, coverage, role disjointness and index ranges. Every
/// violation is reported.
pub fn validate(s: &TspdSolution, inst: &Instance) -> std::result::Result<(), Vec<Violation>> {
    let n = inst.len();
    let mut out = Vec::new();
    if s.instance_n != n {
        out.push(Violation::WrongRingCount {
            rings: s.rings.len(),
            n,
        });
    }
    if n <= 1 {
        if !s.rings.is_empty() {
            out.push(Violation::WrongRingCount {
                rings: s.rings.len(),
                n,
            });
        }
        return if out.is_empty() { Ok(()) } else { Err(out) };
    }
    if s.rings.is_empty() {
        out.push(Violation::WrongRingCount { rings: 0, n });
        return Err(out);
    }

    let mut seen = vec![0usize; n];
    let mut visit = |ring: usize, node: usize, out: &mut Vec<Violation>| {
        if node >= n {
            out.push(Violation::IndexOutOfRange { ring, node });
        } else {
            seen[node] += 1;
        }
    };
    let count = s.rings.len();
    for (i, r) in s.rings.iter().enumerate() {
        // each combined node is counted once, as the start of the ring it launches
        visit(i, r.start, &mut out);
        for &t in &r.truck {
            visit(i, t, &mut out);
        }
        if let Some(k) = r.drone {
            visit(i, k, &mut out);
            if k == r.start || k == r.end || r.truck.contains(&k) {
                out.push(Violation::DroneRoleConflict { ring: i, node: k });
            }
        }
        if r.end >= n {
            out.push(Violation::IndexOutOfRange { ring: i, node: r.end });
        }
        if r.end != s.rings[(i + 1) % count].start {
            out.push(Violation::BrokenChain { ring: i });
        }
        if r.start == r.end && !(count == 1 && !r.truck.is_empty()) {
            out.push(Violation::DegenerateRing { ring: i });
        }
    }
    for (node, &c) in seen.iter().enumerate() {
        match c {
            0 => out.push(Violation::Uncovered { node }),
            1 => {}
            _ => out.push(Violation::Duplicate { node }),
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Sum of ring costs of a valid solution.
pub fn makespan(s: &TspdSolution, inst: &Instance, m: &MetricPair) -> Result<f64> {
    validate(s, inst).map_err(Error::InvalidSolution)?;
    s.rings.iter().map(|r| ring_cost(r, inst, m)).sum()
}

/// Merge straight rings into neighbours until none remain.
///
/// A straight ring is folded into its successor when that ring carries a
/// drone, else into its predecessor when that one does, else into the
/// successor as a plain truck extension. Each merge turns the shared
/// combined node into a truck node and never increases the makespan.
/// Instances with two or fewer points are returned unchanged.
pub fn normalize_no_straight(s: &TspdSolution, inst: &Instance, _m: &MetricPair) -> TspdSolution {
    let mut rings = s.rings.clone();
    if inst.len() <= 2 {
        return s.clone();
    }
    while rings.len() >= 2 {
        let Some(i) = rings.iter().position(Ring::is_straight) else {
            break;
        };
        let len = rings.len();
        let next = (i + 1) % len;
        let prev = (i + len - 1) % len;
        let into_prev = rings[next].drone.is_none() && rings[prev].drone.is_some();
        if into_prev {
            let straight = rings.remove(i);
            let p = if i == 0 { rings.len() - 1 } else { i - 1 };
            let pred = &mut rings[p];
            pred.truck.push(pred.end);
            pred.end = straight.end;
        } else {
            let straight = rings.remove(i);
            let nx = if next > i { i } else { 0 };
            let succ = &mut rings[nx];
            succ.truck.insert(0, succ.start);
            succ.start = straight.start;
        }
    }
    TspdSolution::new(rings, s.instance_n)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub n: usize,
    pub alpha: f64,
    pub truck_norm: TruckNorm,
    pub rings: Vec<Ring>,
    pub makespan: f64,
}

impl SolutionFile {
    pub fn new(s: &TspdSolution, m: &MetricPair, makespan: f64) -> Self {
        SolutionFile {
            n: s.instance_n,
            alpha: m.alpha(),
            truck_norm: m.truck_norm,
            rings: s.rings.clone(),
            makespan,
        }
    }

    pub fn solution(&self) -> TspdSolution {
        TspdSolution::new(self.rings.clone(), self.n)
    }
}
