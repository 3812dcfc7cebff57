//! Independent oracles shared by the integration tests. They compute ring
//! costs straight from point coordinates and enumerate by brute force, so
//! they share no code with the solvers under test.

#![allow(dead_code)]

use tspd_core::geometry::{Instance, Point, TruckNorm};

pub fn truck(norm: TruckNorm, p: Point, q: Point) -> f64 {
    match norm {
        TruckNorm::Euclidean => ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt(),
        TruckNorm::Rectilinear => (p.x - q.x).abs() + (p.y - q.y).abs(),
    }
}

pub fn euclid(p: Point, q: Point) -> f64 {
    ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()
}

/// Cost of the ring on sequence positions `i..=j` of `s`, the drone flying
/// position `k` (if any) and the truck driving every other position in order.
fn ring_cost(s: &[usize], pts: &[Point], norm: TruckNorm, alpha: f64, i: usize, j: usize, k: Option<usize>) -> f64 {
    let path: Vec<usize> = (i..=j).filter(|&p| Some(p) != k).map(|p| s[p]).collect();
    let truck_len: f64 = path.windows(2).map(|w| truck(norm, pts[w[0]], pts[w[1]])).sum();
    let drone = k.map_or(0.0, |k| {
        (euclid(pts[s[i]], pts[s[k]]) + euclid(pts[s[k]], pts[s[j]])) / alpha
    });
    truck_len.max(drone)
}

/// Cheapest ring chain along a fixed closed order, by trying every set of
/// combined positions and every drone choice per ring.
///
/// A chain with one ring starts and ends at the same node, and its truck
/// must still visit at least one other node.
pub fn enumerate_partitions(
    order: &[usize],
    inst: &Instance,
    norm: TruckNorm,
    alpha: f64,
    allow_straight: bool,
) -> f64 {
    let n = order.len();
    let mut s = order.to_vec();
    s.push(order[0]);
    let pts = &inst.points;
    let mut best = f64::INFINITY;
    // bit p - 1 of `mask` marks position p (1 ≤ p < n) as combined
    for mask in 0u32..(1 << (n - 1)) {
        let mut cuts = vec![0];
        cuts.extend((1..n).filter(|p| mask & (1 << (p - 1)) != 0));
        cuts.push(n);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (i, j) = (w[0], w[1]);
            let mut ring_best = f64::INFINITY;
            if j - i == 1 {
                if allow_straight && !(i == 0 && j == n) {
                    ring_best = ring_cost(&s, pts, norm, alpha, i, j, None);
                }
            } else {
                let sole = i == 0 && j == n;
                if !sole || j - i >= 2 {
                    ring_best = ring_cost(&s, pts, norm, alpha, i, j, None);
                }
                for k in i + 1..j {
                    // the sole ring's truck needs another node besides the drone's
                    if sole && j - i < 3 {
                        continue;
                    }
                    ring_best = ring_best.min(ring_cost(&s, pts, norm, alpha, i, j, Some(k)));
                }
            }
            total += ring_best;
        }
        best = best.min(total);
    }
    best
}

/// Optimal closed TSP tour length by permutation enumeration.
pub fn brute_tsp(inst: &Instance, norm: TruckNorm) -> f64 {
    let n = inst.len();
    if n < 2 {
        return 0.0;
    }
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut rest, 0, &mut |p| {
        let mut len = truck(norm, inst.points[0], inst.points[p[0]]);
        for w in p.windows(2) {
            len += truck(norm, inst.points[w[0]], inst.points[w[1]]);
        }
        len += truck(norm, inst.points[*p.last().unwrap()], inst.points[0]);
        best = best.min(len);
    });
    best
}

pub fn permute(a: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == a.len() {
        f(a);
        return;
    }
    for i in k..a.len() {
        a.swap(k, i);
        permute(a, k + 1, f);
        a.swap(k, i);
    }
}

/// Composite Simpson rule with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut sum = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Points `0..n` of `inst` restricted to those satisfying `keep`.
pub fn subset(inst: &Instance, keep: impl Fn(Point) -> bool) -> Instance {
    Instance::from_points(inst.points.iter().copied().filter(|&p| keep(p)).collect())
}

/// Optimal TSPD makespan: every order, each partitioned by
/// [`enumerate_partitions`]. Zero for fewer than two points.
pub fn brute_tspd(inst: &Instance, norm: TruckNorm, alpha: f64, allow_straight: bool) -> f64 {
    let n = inst.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 2.0 * truck(norm, inst.points[0], inst.points[1]);
    }
    // every rotation too: the first position of an order is always combined
    let mut all: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut all, 0, &mut |order| {
        best = best.min(enumerate_partitions(order, inst, norm, alpha, allow_straight));
    });
    best
}
