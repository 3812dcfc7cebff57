//! Exact TSPD for small instances: every node ordering, each partitioned
//! optimally. Any ring chain is the optimal-or-worse partition of the order
//! that lists its rings in sequence, so the enumeration is exhaustive.
//!
//! Orderings are generated depth first and the partition DP is extended one
//! position at a time, so prefixes shared between orderings are solved once.

use std::time::Instant;

use super::partition::{best_ring, skip_gain, Dist, MatrixDist, Rules, TIE};
use super::{Method, SolveReport};
use crate::error::{Error, Result};
use crate::geometry::{Instance, MetricPair};
use crate::ring::{Ring, TspdSolution};

pub const EXACT_MAX_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    /// Admit rings with two combined nodes and nothing else.
    pub allow_straight: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { allow_straight: true }
    }
}

pub fn tspd_exact(inst: &Instance, m: &MetricPair) -> Result<SolveReport> {
    tspd_exact_with(inst, m, ExactOptions::default())
}

pub fn tspd_exact_with(inst: &Instance, m: &MetricPair, opts: ExactOptions) -> Result<SolveReport> {
    let n = inst.len();
    if !(2..=EXACT_MAX_N).contains(&n) {
        return Err(Error::Size {
            n,
            min: 2,
            max: EXACT_MAX_N,
        });
    }
    let started = Instant::now();
    let (solution, makespan) = if n == 2 {
        let s = TspdSolution::from_tour(&[0, 1]);
        (s, 2.0 * m.truck_dist(inst.points[0], inst.points[1]))
    } else {
        let d = MatrixDist::new(inst, m);
        let mut search = Search::new(n, &d, Rules::new(usize::MAX, opts.allow_straight));
        for anchor in 0..n {
            search.s[0] = anchor;
            search.used = 1 << anchor;
            search.extend(1);
        }
        (TspdSolution::new(search.best_rings(), n), search.best)
    };
    Ok(SolveReport {
        solution,
        makespan,
        method: Method::Exact,
        elapsed: started.elapsed().as_secs_f64(),
        seed: None,
    })
}

const SLOTS: usize = EXACT_MAX_N + 1;

struct Search<'a, D> {
    n: usize,
    d: &'a D,
    rules: Rules,
    used: u32,
    s: [usize; SLOTS],
    prefix: [f64; SLOTS],
    skip: [f64; SLOTS],
    f: [f64; SLOTS],
    count: [u32; SLOTS],
    pred: [usize; SLOTS],
    drone: [Option<usize>; SLOTS],
    best: f64,
    best_count: u32,
    best_s: [usize; SLOTS],
    best_pred: [usize; SLOTS],
    best_drone: [Option<usize>; SLOTS],
}

impl<'a, D: Dist> Search<'a, D> {
    fn new(n: usize, d: &'a D, rules: Rules) -> Self {
        Search {
            n,
            d,
            rules,
            used: 0,
            s: [0; SLOTS],
            prefix: [0.0; SLOTS],
            skip: [0.0; SLOTS],
            f: [0.0; SLOTS],
            count: [0; SLOTS],
            pred: [0; SLOTS],
            drone: [None; SLOTS],
            best: f64::INFINITY,
            best_count: u32::MAX,
            best_s: [0; SLOTS],
            best_pred: [0; SLOTS],
            best_drone: [None; SLOTS],
        }
    }

    /// Fill `f[p]` once `s[0..=p]` is fixed.
    fn settle(&mut self, p: usize) {
        let s = &self.s[..=p];
        self.prefix[p] = self.prefix[p - 1] + self.d.truck(s[p - 1], s[p]);
        if p >= 2 {
            self.skip[p - 1] = skip_gain(s, p - 1, self.d);
        }
        let mut best = (f64::INFINITY, u32::MAX, usize::MAX, None);
        for i in p.saturating_sub(self.rules.max_span)..p {
            if !self.f[i].is_finite() || !self.rules.allows(i, p, self.n) {
                continue;
            }
            let (c, k) = best_ring(s, i, p, self.prefix[p] - self.prefix[i], &self.skip, self.d);
            let total = self.f[i] + c;
            let rings = self.count[i] + 1;
            if total < best.0 - TIE || (total <= best.0 + TIE && rings < best.1) {
                best = (total, rings, i, k);
            }
        }
        (self.f[p], self.count[p], self.pred[p], self.drone[p]) = best;
    }

    fn extend(&mut self, depth: usize) {
        let n = self.n;
        if depth == n {
            self.s[n] = self.s[0];
            self.settle(n);
            let (cost, rings) = (self.f[n], self.count[n]);
            if cost < self.best - TIE || (cost <= self.best + TIE && rings < self.best_count) {
                self.best = cost;
                self.best_count = rings;
                self.best_s = self.s;
                self.best_pred = self.pred;
                self.best_drone = self.drone;
            }
            return;
        }
        for v in 0..n {
            if self.used & (1 << v) != 0 {
                continue;
            }
            self.used |= 1 << v;
            self.s[depth] = v;
            self.settle(depth);
            self.extend(depth + 1);
            self.used &= !(1 << v);
        }
    }

    fn best_rings(&self) -> Vec<Ring> {
        let s = &self.best_s;
        let mut out = Vec::new();
        let mut j = self.n;
        while j > 0 {
            let i = self.best_pred[j];
            let k = self.best_drone[j];
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_instance, Point, TruckNorm};
    use crate::ring::{makespan, validate};
    use crate::solvers::partition_dp_with;

    fn inst(pts: &[(f64, f64)]) -> Instance {
        Instance::from_points(pts.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    /// Plain permutation enumeration with a fresh DP per ordering.
    fn slow_exact(inst: &Instance, m: &MetricPair, allow_straight: bool) -> f64 {
        fn perms(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == a.len() {
                out.push(a.clone());
                return;
            }
            for i in k..a.len() {
                a.swap(k, i);
                perms(k + 1, a, out);
                a.swap(k, i);
            }
        }
        let mut all = Vec::new();
        perms(0, &mut (0..inst.len()).collect(), &mut all);
        all.iter()
            .filter_map(|o| partition_dp_with(o, inst, m, usize::MAX, allow_straight).ok())
            .map(|(_, c)| c)
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn two_points_forced() {
        let i = inst(&[(0.1, 0.1), (0.4, 0.5)]);
        let r = tspd_exact(&i, &MetricPair::euclidean(3.0).unwrap()).unwrap();
        assert!((r.makespan - 1.0).abs() < 1e-12);
        assert_eq!(r.solution.rings.len(), 2);
        assert!(r.solution.rings.iter().all(Ring::is_straight));
    }

    #[test]
    fn size_limits() {
        let m = MetricPair::euclidean(2.0).unwrap();
        assert!(matches!(
            tspd_exact(&generate_instance(1, 1), &m),
            Err(Error::Size { .. })
        ));
        assert!(matches!(
            tspd_exact(&generate_instance(9, 1), &m),
            Err(Error::Size { .. })
        ));
    }

    #[test]
    fn collinear_four_large_alpha() {
        // (0,0) (1/3,0) (2/3,0) (1,0) with a very fast drone. Every drone node
        // needs its own ring, so the truck visits at least two points. Two
        // truck points at distance d joined by two rings, each flying one of
        // the others, cost 2d >= 2/3; three truck points cost at least twice
        // their extent, >= 4/3. Optimum: truck 1/3 <-> 2/3, drone to 0 and 1.
        let i = inst(&[(0.0, 0.0), (1.0 / 3.0, 0.0), (2.0 / 3.0, 0.0), (1.0, 0.0)]);
        let m = MetricPair::euclidean(100.0).unwrap();
        let r = tspd_exact(&i, &m).unwrap();
        assert!((r.makespan - 2.0 / 3.0).abs() < 1e-9, "{:?}", r);
        assert_eq!(r.solution.rings.len(), 2);
        assert!((slow_exact(&i, &m, true) - r.makespan).abs() < 1e-12);
    }

    #[test]
    fn matches_slow_enumeration() {
        for seed in 0..25u64 {
            let n = 3 + seed as usize % 5;
            let i = generate_instance(n, 70 + seed);
            for norm in [TruckNorm::Euclidean, TruckNorm::Rectilinear] {
                let m = MetricPair::new(norm, 1.0 + seed as f64 % 3.0).unwrap();
                for allow in [true, false] {
                    let r = tspd_exact_with(&i, &m, ExactOptions { allow_straight: allow }).unwrap();
                    assert_eq!(validate(&r.solution, &i), Ok(()));
                    assert!((makespan(&r.solution, &i, &m).unwrap() - r.makespan).abs() < 1e-9);
                    assert!((slow_exact(&i, &m, allow) - r.makespan).abs() < 1e-9);
                    if !allow {
                        assert!(!r.solution.has_straight_ring());
                    }
                }
            }
        }
    }
}
