//! Minimum-makespan segmentation of a fixed cyclic order into rings.
//!
//! The order is linearised at position 0, which is forced to be a combined
//! node, and closed by repeating it at position `n`. A ring covers positions
//! `i..=j`; its interior is driven in order except for at most one position
//! served by the drone. `f[j]` is the cheapest chain of rings from 0 to `j`.

use crate::error::{Error, Result};
use crate::geometry::{Instance, MetricPair, Point};
use crate::ring::{Ring, TspdSolution};

use super::Tour;

/// Cost ties closer than this are treated as equal.
pub(crate) const TIE: f64 = 1e-12;

pub(crate) trait Dist {
    fn truck(&self, a: usize, b: usize) -> f64;
    fn drone(&self, a: usize, b: usize) -> f64;
}

pub(crate) struct PointDist<'a> {
    pts: &'a [Point],
    m: MetricPair,
}

impl<'a> PointDist<'a> {
    pub(crate) fn new(inst: &'a Instance, m: &MetricPair) -> Self {
        PointDist {
            pts: &inst.points,
            m: *m,
        }
    }
}

impl Dist for PointDist<'_> {
    #[inline]
    fn truck(&self, a: usize, b: usize) -> f64 {
        self.m.truck_dist(self.pts[a], self.pts[b])
    }

    #[inline]
    fn drone(&self, a: usize, b: usize) -> f64 {
        self.m.drone_dist(self.pts[a], self.pts[b])
    }
}

/// Dense distance tables for small instances.
pub(crate) struct MatrixDist {
    n: usize,
    truck: Vec<f64>,
    drone: Vec<f64>,
}

impl MatrixDist {
    pub(crate) fn new(inst: &Instance, m: &MetricPair) -> Self {
        let n = inst.len();
        let p = &inst.points;
        let mut truck = vec![0.0; n * n];
        let mut drone = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                truck[a * n + b] = m.truck_dist(p[a], p[b]);
                drone[a * n + b] = m.drone_dist(p[a], p[b]);
            }
        }
        MatrixDist { n, truck, drone }
    }
}

impl Dist for MatrixDist {
    #[inline]
    fn truck(&self, a: usize, b: usize) -> f64 {
        self.truck[a * self.n + b]
    }

    #[inline]
    fn drone(&self, a: usize, b: usize) -> f64 {
        self.drone[a * self.n + b]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Rules {
    /// Largest `j - i` of a ring, i.e. points per ring minus one.
    pub max_span: usize,
    pub allow_straight: bool,
}

impl Rules {
    pub(crate) fn new(max_ring: usize, allow_straight: bool) -> Self {
        Rules {
            max_span: max_ring.saturating_sub(1),
            allow_straight,
        }
    }

    /// Whether positions `i..=j` may form a ring in an order of `n` nodes.
    #[inline]
    pub(crate) fn allows(&self, i: usize, j: usize, n: usize) -> bool {
        let span = j - i;
        if span > self.max_span {
            return false;
        }
        if i == 0 && j == n {
            // a ring closing on itself must leave the truck something to drive
            return n >= 3;
        }
        span >= 2 || self.allow_straight || n <= 2
    }
}

/// Truck length saved by flying position `k` instead of driving it.
#[inline]
pub(crate) fn skip_gain<D: Dist>(s: &[usize], k: usize, d: &D) -> f64 {
    d.truck(s[k - 1], s[k]) + d.truck(s[k], s[k + 1]) - d.truck(s[k - 1], s[k + 1])
}

/// Cheapest ring over positions `i..=j` given its full truck length and the
/// skip gains; returns the cost and the drone position, if any. Ties keep
/// the drone-free ring, then the earliest drone position.
#[inline]
pub(crate) fn best_ring<D: Dist>(
    s: &[usize],
    i: usize,
    j: usize,
    truck_len: f64,
    skip: &[f64],
    d: &D,
) -> (f64, Option<usize>) {
    let mut best = (truck_len, None);
    let (a, b) = (s[i], s[j]);
    for k in i + 1..j {
        let c = (truck_len - skip[k]).max(d.drone(a, s[k]) + d.drone(s[k], b));
        if c < best.0 - TIE {
            best = (c, Some(k));
        }
    }
    best
}

/// Reusable DP buffers over a closed sequence `s` (`s[n] == s[0]`).
#[derive(Debug, Default, Clone)]
pub(crate) struct Dp {
    pub f: Vec<f64>,
    count: Vec<u32>,
    pub pred: Vec<usize>,
    drone: Vec<Option<usize>>,
    prefix: Vec<f64>,
    skip: Vec<f64>,
}

impl Dp {
    fn prepare<D: Dist>(&mut self, s: &[usize], d: &D) {
        let len = s.len();
        self.prefix.clear();
        self.prefix.push(0.0);
        for p in 1..len {
            let last = self.prefix[p - 1];
            self.prefix.push(last + d.truck(s[p - 1], s[p]));
        }
        self.skip.clear();
        self.skip.resize(len, 0.0);
        for k in 1..len - 1 {
            self.skip[k] = skip_gain(s, k, d);
        }
    }

    /// Forward pass; returns the optimal makespan or `None` when the rules
    /// admit no partition.
    pub(crate) fn forward<D: Dist>(&mut self, s: &[usize], d: &D, rules: Rules) -> Option<f64> {
        let n = s.len() - 1;
        self.prepare(s, d);
        self.f.clear();
        self.f.resize(n + 1, f64::INFINITY);
        self.count.clear();
        self.count.resize(n + 1, u32::MAX);
        self.pred.clear();
        self.pred.resize(n + 1, usize::MAX);
        self.drone.clear();
        self.drone.resize(n + 1, None);
        self.f[0] = 0.0;
        self.count[0] = 0;
        for j in 1..=n {
            for i in j.saturating_sub(rules.max_span)..j {
                if !self.f[i].is_finite() || !rules.allows(i, j, n) {
                    continue;
                }
                let (c, k) = best_ring(s, i, j, self.prefix[j] - self.prefix[i], &self.skip, d);
                let total = self.f[i] + c;
                let rings = self.count[i] + 1;
                if total < self.f[j] - TIE || (total <= self.f[j] + TIE && rings < self.count[j]) {
                    self.f[j] = total;
                    self.count[j] = rings;
                    self.pred[j] = i;
                    self.drone[j] = k;
                }
            }
        }
        self.f[n].is_finite().then_some(self.f[n])
    }

    /// Rings of the last forward pass, in order.
    pub(crate) fn rings(&self, s: &[usize]) -> Vec<Ring> {
        let n = s.len() - 1;
        let mut out = Vec::new();
        let mut j = n;
        while j > 0 {
            let i = self.pred[j];
            let k = self.drone[j];
            out.push(Ring {
                start: s[i],
                truck: (i + 1..j).filter(|&p| Some(p) != k).map(|p| s[p]).collect(),
                drone: k.map(|p| s[p]),
                end: s[j],
            });
            j = i;
        }
        out.reverse();
        out
    }
}

/// Closed sequence for an open order.
pub(crate) fn closed(order: &[usize]) -> Vec<usize> {
    let mut s = order.to_vec();
    s.push(order[0]);
    s
}

/// Optimal ring partition of `tour` anchored at its first node, with at
/// most `max_ring` points per ring.
pub fn partition_dp(tour: &Tour, inst: &Instance, m: &MetricPair, max_ring: usize) -> Result<TspdSolution> {
    partition_dp_with(&tour.order, inst, m, max_ring, true).map(|(s, _)| s)
}

/// [`partition_dp`] over a raw order, optionally without straight rings.
/// Returns the solution and its makespan.
pub fn partition_dp_with(
    order: &[usize],
    inst: &Instance,
    m: &MetricPair,
    max_ring: usize,
    allow_straight: bool,
) -> Result<(TspdSolution, f64)> {
    let n = inst.len();
    if max_ring < 2 {
        return Err(Error::param("max_ring", format!("must be >= 2, got {max_ring}")));
    }
    if order.len() != n {
        return Err(Error::param("tour", format!("{} of {n} nodes", order.len())));
    }
    if let Some(&c) = order.iter().find(|&&c| c >= n) {
        return Err(Error::Index { index: c, n });
    }
    if n <= 1 {
        return Ok((TspdSolution::empty(n), 0.0));
    }
    let s = closed(order);
    let d = PointDist::new(inst, m);
    let mut dp = Dp::default();
    let cost = dp
        .forward(&s, &d, Rules::new(max_ring, allow_straight))
        .ok_or_else(|| {
            Error::param(
                "max_ring",
                format!("no ring partition with at most {max_ring} points per ring"),
            )
        })?;
    Ok((TspdSolution::new(dp.rings(&s), n), cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_instance, TruckNorm};
    use crate::ring::{makespan, ring_cost, validate};
    use crate::solvers::tsp_heuristic;

    fn inst(pts: &[(f64, f64)]) -> Instance {
        Instance::from_points(pts.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    /// Every segmentation of positions 0..=n with every drone choice.
    fn enumerate(order: &[usize], inst: &Instance, m: &MetricPair) -> f64 {
        fn rec(s: &[usize], from: usize, inst: &Instance, m: &MetricPair, acc: f64, best: &mut f64) {
            let n = s.len() - 1;
            if from == n {
                *best = best.min(acc);
                return;
            }
            for to in from + 1..=n {
                if from == 0 && to == n && n < 3 {
                    continue;
                }
                let inner: Vec<usize> = s[from + 1..to].to_vec();
                let mut options = vec![Ring {
                    start: s[from],
                    truck: inner.clone(),
                    drone: None,
                    end: s[to],
                }];
                for k in 0..inner.len() {
                    let mut truck = inner.clone();
                    let dn = truck.remove(k);
                    options.push(Ring {
                        start: s[from],
                        truck,
                        drone: Some(dn),
                        end: s[to],
                    });
                }
                for r in options {
                    let c = ring_cost(&r, inst, m).unwrap();
                    rec(s, to, inst, m, acc + c, best);
                }
            }
        }
        let s = closed(order);
        let mut best = f64::INFINITY;
        rec(&s, 0, inst, m, 0.0, &mut best);
        best
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        for seed in 0..60u64 {
            let n = 2 + seed as usize % 7;
            let i = generate_instance(n, 500 + seed);
            let order: Vec<usize> = (0..n).collect();
            for norm in [TruckNorm::Euclidean, TruckNorm::Rectilinear] {
                for alpha in [1.0, 2.0, 3.5] {
                    let m = MetricPair::new(norm, alpha).unwrap();
                    let (sol, cost) = partition_dp_with(&order, &i, &m, usize::MAX, true).unwrap();
                    assert_eq!(validate(&sol, &i), Ok(()));
                    assert!((makespan(&sol, &i, &m).unwrap() - cost).abs() < 1e-9);
                    let e = enumerate(&order, &i, &m);
                    assert!((cost - e).abs() < 1e-9, "n {n} seed {seed}: dp {cost} enum {e}");
                }
            }
        }
    }

    #[test]
    fn collinear_four() {
        // (0,0) (0.1,0) (0.5,0) (1,0), anchored as listed, alpha 2. By hand:
        //   closed 0 →[1,2]→ 0, drone 3:  max(0.1+0.4+0.5, 2/2)          = 1.0
        //   0 → 1 straight, 1 →[2]→ 0 drone 3: 0.1 + max(0.9, 1.9/2)      = 1.05
        //   0 →(1)→ 2 then 2 →(3)→ 0: max(0.5, 0.25) + max(0.5, 0.75)    = 1.25
        //   closed 0 →[2,3]→ 0, drone 1 or pure truck                    = 2.0
        // everything else ends with the 1.0 straight ring 3 → 0 and costs >= 2.0
        let i = inst(&[(0.0, 0.0), (0.1, 0.0), (0.5, 0.0), (1.0, 0.0)]);
        let m = MetricPair::euclidean(2.0).unwrap();
        let order = [0, 1, 2, 3];
        let (sol, cost) = partition_dp_with(&order, &i, &m, usize::MAX, true).unwrap();
        assert!((cost - enumerate(&order, &i, &m)).abs() < 1e-12);
        assert!((cost - 1.0).abs() < 1e-12, "{cost} {sol:?}");
        assert_eq!(
            sol.rings,
            vec![Ring {
                start: 0,
                truck: vec![1, 2],
                drone: Some(3),
                end: 0
            }]
        );
    }

    #[test]
    fn ring_cap_two_gives_tour_length() {
        let i = generate_instance(40, 3);
        let t = tsp_heuristic(&i, TruckNorm::Euclidean, 1, 1).unwrap();
        let m = MetricPair::euclidean(2.0).unwrap();
        let s = partition_dp(&t, &i, &m, 2).unwrap();
        assert!((makespan(&s, &i, &m).unwrap() - t.length).abs() < 1e-9);
        assert!(s.rings.iter().all(Ring::is_straight));
    }

    #[test]
    fn alpha_one_never_exceeds_tour() {
        for seed in 0..20 {
            let i = generate_instance(30, seed);
            let t = tsp_heuristic(&i, TruckNorm::Euclidean, seed, 1).unwrap();
            let m = MetricPair::euclidean(1.0).unwrap();
            let s = partition_dp(&t, &i, &m, 8).unwrap();
            assert!(makespan(&s, &i, &m).unwrap() <= t.length + 1e-9);
        }
    }

    #[test]
    fn fixed_tour_cost_non_increasing_in_alpha() {
        for seed in 0..20 {
            let i = generate_instance(60, seed);
            let t = tsp_heuristic(&i, TruckNorm::Euclidean, seed, 1).unwrap();
            let mut prev = f64::INFINITY;
            for alpha in [1.0, 1.5, 2.0, 2.5, 3.0] {
                let m = MetricPair::euclidean(alpha).unwrap();
                let c = makespan(&partition_dp(&t, &i, &m, 8).unwrap(), &i, &m).unwrap();
                assert!(c <= prev + 1e-12);
                prev = c;
            }
        }
    }

    #[test]
    fn without_straight_rings() {
        let i = generate_instance(7, 12);
        let m = MetricPair::euclidean(2.0).unwrap();
        let order: Vec<usize> = (0..7).collect();
        let (sol, _) = partition_dp_with(&order, &i, &m, usize::MAX, false).unwrap();
        assert!(!sol.has_straight_ring());
        assert!(partition_dp_with(&order, &i, &m, 2, false).is_err());
    }

    #[test]
    fn argument_errors() {
        let i = generate_instance(4, 1);
        let m = MetricPair::euclidean(2.0).unwrap();
        assert!(partition_dp_with(&[0, 1, 2, 3], &i, &m, 1, true).is_err());
        assert!(partition_dp_with(&[0, 1, 2], &i, &m, 4, true).is_err());
        assert!(partition_dp_with(&[0, 1, 2, 9], &i, &m, 4, true).is_err());
        let two = generate_instance(2, 1);
        let (s, c) = partition_dp_with(&[0, 1], &two, &m, usize::MAX, true).unwrap();
        assert_eq!(s.rings.len(), 2);
        assert!((c - 2.0 * two.points[0].l2(two.points[1])).abs() < 1e-12);
    }
}
