//! Closed TSP tours under the truck norm: Held-Karp for small instances and
//! nearest neighbour + 2-opt for everything else.

use rand::Rng as _;

use super::Tour;
use crate::error::{Error, Result};
use crate::geometry::{Instance, TruckNorm};
use crate::rng;

pub const EXACT_MAX_N: usize = 15;

/// Optimal closed tour by dynamic programming over subsets, `2 ≤ n ≤ 15`.
pub fn tsp_exact(inst: &Instance, norm: TruckNorm) -> Result<Tour> {
    let n = inst.len();
    if !(2..=EXACT_MAX_N).contains(&n) {
        return Err(Error::Size {
            n,
            min: 2,
            max: EXACT_MAX_N,
        });
    }
    let d = |a: usize, b: usize| norm.dist(inst.points[a], inst.points[b]);
    // node 0 is the fixed start; subsets range over nodes 1..n, bit i-1 for node i
    let m = n - 1;
    let full = (1usize << m) - 1;
    let mut cost = vec![f64::INFINITY; (1 << m) * m];
    let mut parent = vec![usize::MAX; (1 << m) * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = d(0, j + 1);
    }
    for mask in 1..=full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = cost[mask * m + j];
            if !here.is_finite() {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let c = here + d(j + 1, k + 1);
                if c < cost[next * m + k] {
                    cost[next * m + k] = c;
                    parent[next * m + k] = j;
                }
            }
        }
    }
    let (mut last, mut best) = (0, f64::INFINITY);
    for j in 0..m {
        let c = cost[full * m + j] + d(j + 1, 0);
        if c < best {
            best = c;
            last = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    let mut j = last;
    while j != usize::MAX {
        order.push(j + 1);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        j = p;
    }
    order.push(0);
    order.reverse();
    Tour::new(order, inst, norm)
}

/// Best of `restarts` runs of nearest-neighbour construction from a random
/// start city followed by 2-opt (neighbour lists, don't-look bits).
pub fn tsp_heuristic(inst: &Instance, norm: TruckNorm, seed: u64, restarts: usize) -> Result<Tour> {
    let n = inst.len();
    if n < 2 {
        return Err(Error::Size {
            n,
            min: 2,
            max: usize::MAX,
        });
    }
    if restarts == 0 {
        return Err(Error::param("restarts", "need at least one restart"));
    }
    let neighbours = neighbour_lists(inst, norm, NEIGHBOURS);
    let mut r = rng::rng(seed);
    let mut best: Option<Tour> = None;
    for _ in 0..restarts {
        let start = r.random_range(0..n);
        let mut order = nearest_neighbour(inst, norm, start);
        two_opt(inst, norm, &mut order, &neighbours);
        let tour = Tour::new(order, inst, norm)?;
        if best.as_ref().is_none_or(|b| tour.length < b.length) {
            best = Some(tour);
        }
    }
    Ok(best.expect("at least one restart"))
}

const NEIGHBOURS: usize = 10;

/// The `k` nearest other nodes of each node, closest first.
pub(crate) fn neighbour_lists(inst: &Instance, norm: TruckNorm, k: usize) -> Vec<Vec<usize>> {
    let n = inst.len();
    let k = k.min(n.saturating_sub(1));
    let pts = &inst.points;
    (0..n)
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (norm.dist(pts[i], pts[j]), j))
                .collect();
            if k < cand.len() {
                cand.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                cand.truncate(k);
            }
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

fn nearest_neighbour(inst: &Instance, norm: TruckNorm, start: usize) -> Vec<usize> {
    let n = inst.len();
    let pts = &inst.points;
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, &seen) in visited.iter().enumerate() {
            if !seen {
                let d = norm.dist(pts[cur], pts[j]);
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        cur = best.1;
        visited[cur] = true;
        order.push(cur);
    }
    order
}

/// In-place 2-opt to a local optimum over neighbour-list candidates.
fn two_opt(inst: &Instance, norm: TruckNorm, order: &mut [usize], neighbours: &[Vec<usize>]) {
    let n = order.len();
    if n < 4 {
        return;
    }
    let pts = &inst.points;
    let d = |a: usize, b: usize| norm.dist(pts[a], pts[b]);
    let mut pos = vec![0usize; n];
    for (i, &c) in order.iter().enumerate() {
        pos[c] = i;
    }
    let mut dont_look = vec![false; n];
    let mut queue: std::collections::VecDeque<usize> = order.iter().copied().collect();
    while let Some(a) = queue.pop_front() {
        if dont_look[a] {
            continue;
        }
        let mut improved = false;
        'dirs: for forward in [true, false] {
            let i = pos[a];
            let b = if forward {
                order[(i + 1) % n]
            } else {
                order[(i + n - 1) % n]
            };
            let dab = d(a, b);
            for &c in &neighbours[a] {
                let dac = d(a, c);
                if dac >= dab {
                    break;
                }
                let j = pos[c];
                let e = if forward {
                    order[(j + 1) % n]
                } else {
                    order[(j + n - 1) % n]
                };
                if c == b || e == a {
                    continue;
                }
                let gain = dab + d(c, e) - dac - d(b, e);
                if gain > 1e-12 {
                    if forward {
                        // a b … c e  →  a c … b e
                        reverse(order, &mut pos, (i + 1) % n, j);
                    } else {
                        // e c … b a  →  e b … c a
                        reverse(order, &mut pos, j, (i + n - 1) % n);
                    }
                    for x in [a, b, c, e] {
                        dont_look[x] = false;
                        queue.push_back(x);
                    }
                    improved = true;
                    break 'dirs;
                }
            }
        }
        if !improved {
            dont_look[a] = true;
        } else {
            queue.push_back(a);
        }
    }
}

/// Reverse the cyclic stretch of positions `from..=to`, or equivalently its
/// complement when that is shorter.
pub(crate) fn reverse(order: &mut [usize], pos: &mut [usize], from: usize, to: usize) {
    let n = order.len();
    let len = (to + n - from) % n + 1;
    let (mut i, mut j, len) = if 2 * len > n {
        ((to + 1) % n, (from + n - 1) % n, n - len)
    } else {
        (from, to, len)
    };
    for _ in 0..len / 2 {
        order.swap(i, j);
        pos[order[i]] = i;
        pos[order[j]] = j;
        i = (i + 1) % n;
        j = (j + n - 1) % n;
    }
}
