//! Tour-then-partition TSPD heuristic with local search on the truck order.
//!
//! A TSP tour is split optimally into rings; then segment reversals and
//! Or-opt moves of the order are tried around each node's geometric
//! neighbours. A move is scored by re-solving the ring partition only near
//! the cut points: rings lying wholly inside a moved block are carried over
//! as they are, and only the stretches between them and the combined nodes
//! surrounding the move (one extra ring on either side) are re-solved.
//!
//! Each round rotates the anchor to another combined node, re-partitions the
//! whole order and applies a batch of random local kicks, each kept only if
//! the follow-up local search ends below the pre-kick makespan.

use std::collections::VecDeque;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::partition::{best_ring, closed, Dist, Dp, MatrixDist, PointDist, Rules, TIE};
use super::tsp::{neighbour_lists, tsp_heuristic};
use super::{Method, SolveReport};
use crate::error::{Error, Result};
use crate::geometry::{Instance, MetricPair};
use crate::ring::{makespan, normalize_no_straight, TspdSolution};
use crate::rng::{self, Rng};

/// Improvements smaller than this are ignored.
const EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Independent tour-and-search runs; the best is kept.
    pub restarts: usize,
    /// Rounds without improvement before a run stops.
    pub patience: usize,
    /// Most points per ring in the partition.
    pub max_ring: usize,
    /// Segment lengths moved by Or-opt.
    pub or_opt_lengths: Vec<usize>,
    /// Candidate partners per node.
    pub neighbours: usize,
    /// Random kicks per round, per node of the instance.
    pub kick_rate: f64,
    /// Longest stretch of the order a kick rewrites.
    pub kick_reach: usize,
    /// Hard cap on rounds per run.
    pub max_rounds: usize,
    /// Moves lengthening the truck order by more than this many mean tour
    /// edges are not scored.
    pub slack: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            restarts: 5,
            patience: 20,
            max_ring: 8,
            or_opt_lengths: vec![1, 2, 3],
            neighbours: 6,
            kick_rate: 0.02,
            kick_reach: 40,
            max_rounds: 1000,
            slack: 1.0,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::param("restarts", "need at least one restart"));
        }
        if self.max_ring < 2 {
            return Err(Error::param("max_ring", format!("must be >= 2, got {}", self.max_ring)));
        }
        if self.or_opt_lengths.contains(&0) {
            return Err(Error::param("or_opt_lengths", "segment lengths must be >= 1"));
        }
        if self.neighbours == 0 {
            return Err(Error::param("neighbours", "must be >= 1"));
        }
        if !(self.kick_rate >= 0.0 && self.kick_rate.is_finite()) {
            return Err(Error::param("kick_rate", "must be finite and >= 0"));
        }
        if !(self.slack >= 0.0 && self.slack.is_finite()) {
            return Err(Error::param("slack", "must be finite and >= 0"));
        }
        Ok(())
    }
}

pub fn tspd_heuristic(inst: &Instance, m: &MetricPair, seed: u64, config: &HeuristicConfig) -> Result<SolveReport> {
    config.validate()?;
    let n = inst.len();
    if n < 2 {
        return Err(Error::Size {
            n,
            min: 2,
            max: usize::MAX,
        });
    }
    let started = Instant::now();
    let solution = if n == 2 {
        TspdSolution::from_tour(&[0, 1])
    } else {
        // a ring through every point needs a span of n
        let max_ring = if n <= config.max_ring { n + 1 } else { config.max_ring };
        let rules = Rules::new(max_ring, true);
        let neighbours = neighbour_lists(inst, m.truck_norm, config.neighbours);
        let best = if n <= MATRIX_MAX_N {
            best_order(inst, m, seed, config, rules, &neighbours, &MatrixDist::new(inst, m))?
        } else {
            best_order(inst, m, seed, config, rules, &neighbours, &PointDist::new(inst, m))?
        };
        let s = closed(&best);
        let mut dp = Dp::default();
        dp.forward(&s, &PointDist::new(inst, m), rules)
            .expect("straight rings always partition");
        TspdSolution::new(dp.rings(&s), n)
    };
    let solution = normalize_no_straight(&solution, inst, m);
    let makespan = makespan(&solution, inst, m)?;
    Ok(SolveReport {
        solution,
        makespan,
        method: Method::Heuristic,
        elapsed: started.elapsed().as_secs_f64(),
        seed: Some(seed),
    })
}

/// Pieces longer than this keep their inner rings when moved.
const KEEP_MIN: usize = 12;

/// Largest instance searched with dense distance tables.
const MATRIX_MAX_N: usize = 3000;

/// Best truck order over all restarts.
fn best_order<D: Dist>(
    inst: &Instance,
    m: &MetricPair,
    seed: u64,
    config: &HeuristicConfig,
    rules: Rules,
    neighbours: &[Vec<usize>],
    d: &D,
) -> Result<Vec<usize>> {
    let n = inst.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..config.restarts {
        let tour = tsp_heuristic(inst, m.truck_norm, rng::derive_seed(seed, &[r as u64]), 1)?;
        let mut search = Search::new(&tour.order, d, rules, config, neighbours);
        let mut rng = rng::substream(seed, r as u64);
        search.run(&mut rng, |_| {});
        if best.as_ref().is_none_or(|(c, _)| search.total < c - EPS) {
            best = Some((search.total, search.s[..n].to_vec()));
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// Partition DP over a stretch of the order whose two ends are combined.
#[derive(Debug, Default)]
struct SegDp {
    prefix: Vec<f64>,
    skip: Vec<f64>,
    f: Vec<f64>,
    pred: Vec<usize>,
    cost: Vec<f64>,
}

impl SegDp {
    /// `t` holds global positions `offset..offset + t.len()` of an order of
    /// `n` nodes; returns the cheapest chain of rings from end to end.
    fn solve<D: Dist>(&mut self, t: &[usize], offset: usize, n: usize, rules: Rules, d: &D) -> f64 {
        let len = t.len();
        self.prefix.clear();
        self.prefix.push(0.0);
        for q in 1..len {
            let last = self.prefix[q - 1];
            self.prefix.push(last + d.truck(t[q - 1], t[q]));
        }
        self.skip.clear();
        self.skip.resize(len, 0.0);
        for k in 1..len - 1 {
            self.skip[k] = super::partition::skip_gain(t, k, d);
        }
        self.f.clear();
        self.f.resize(len, f64::INFINITY);
        self.pred.clear();
        self.pred.resize(len, usize::MAX);
        self.cost.clear();
        self.cost.resize(len, 0.0);
        self.f[0] = 0.0;
        for j in 1..len {
            for i in j.saturating_sub(rules.max_span)..j {
                if !self.f[i].is_finite() || !rules.allows(offset + i, offset + j, n) {
                    continue;
                }
                let (c, _) = best_ring(t, i, j, self.prefix[j] - self.prefix[i], &self.skip, d);
                let total = self.f[i] + c;
                if total < self.f[j] - TIE {
                    self.f[j] = total;
                    self.pred[j] = i;
                    self.cost[j] = c;
                }
            }
        }
        self.f[len - 1]
    }
}

/// Saved state of positions `lo..lo + s.len()` before an applied move.
struct Undo {
    lo: usize,
    s: Vec<usize>,
    bp: Vec<bool>,
    rc: Vec<f64>,
    total: f64,
}

/// Old positions `x..=y`, placed forwards or reversed.
#[derive(Debug, Clone, Copy)]
struct Piece {
    x: usize,
    y: usize,
    rev: bool,
}

impl Piece {
    fn fwd(x: usize, y: usize) -> Self {
        Piece { x, y, rev: false }
    }

    fn len(&self) -> usize {
        self.y - self.x + 1
    }

    /// Old position of the `k`-th node placed.
    fn at(&self, k: usize) -> usize {
        if self.rev {
            self.y - k
        } else {
            self.x + k
        }
    }

    /// New position of old position `z` when the piece starts at `offset`.
    fn place(&self, offset: usize, z: usize) -> usize {
        if self.rev {
            offset + (self.y - z)
        } else {
            offset + (z - self.x)
        }
    }
}

/// Rings inside a long piece that survive a move unchanged.
#[derive(Debug, Clone, Copy)]
struct Kept {
    piece: Piece,
    offset: usize,
    /// Combined old positions bounding the kept rings.
    old: (usize, usize),
    /// The same, as new positions in increasing order.
    new: (usize, usize),
}

struct Search<'a, D> {
    n: usize,
    d: &'a D,
    rules: Rules,
    cfg: &'a HeuristicConfig,
    neighbours: &'a [Vec<usize>],
    /// Closed order, `s[n] == s[0]`.
    s: Vec<usize>,
    pos: Vec<usize>,
    /// Combined-node positions of the current partition.
    bp: Vec<bool>,
    /// Cost of the ring ending at each combined position.
    rc: Vec<f64>,
    total: f64,
    /// Absolute truck-length increase allowed before a move is scored.
    slack: f64,
    seg: SegDp,
    dp: Dp,
    /// The move under consideration: positions `a..=b` become these pieces.
    pieces: Vec<Piece>,
    kept: Vec<Kept>,
    /// Stretches of new positions to re-solve, both ends combined.
    regions: Vec<(usize, usize)>,
    t: Vec<usize>,
    journal: Vec<Undo>,
    recording: bool,
    active: Vec<bool>,
}

impl<'a, D: Dist> Search<'a, D> {
    fn new(order: &[usize], d: &'a D, rules: Rules, cfg: &'a HeuristicConfig, neighbours: &'a [Vec<usize>]) -> Self {
        let n = order.len();
        let s = closed(order);
        let tour: f64 = (0..n).map(|p| d.truck(s[p], s[p + 1])).sum();
        let mut search = Search {
            n,
            d,
            rules,
            cfg,
            neighbours,
            s,
            pos: vec![0; n],
            bp: vec![false; n + 1],
            rc: vec![0.0; n + 1],
            total: 0.0,
            slack: cfg.slack * tour / n as f64,
            seg: SegDp::default(),
            dp: Dp::default(),
            pieces: Vec::new(),
            kept: Vec::new(),
            regions: Vec::new(),
            t: Vec::new(),
            journal: Vec::new(),
            recording: false,
            active: vec![false; n],
        };
        search.reindex();
        search.repartition();
        search
    }

    fn reindex(&mut self) {
        for (p, &c) in self.s[..self.n].iter().enumerate() {
            self.pos[c] = p;
        }
    }

    /// Optimal partition of the whole current order.
    fn repartition(&mut self) {
        let n = self.n;
        let total = self
            .dp
            .forward(&self.s, self.d, self.rules)
            .expect("straight rings always partition");
        self.bp.fill(false);
        self.rc.fill(0.0);
        self.bp[0] = true;
        let mut j = n;
        while j > 0 {
            let i = self.dp.pred[j];
            self.bp[j] = true;
            self.rc[j] = self.dp.f[j] - self.dp.f[i];
            j = i;
        }
        self.total = total;
    }

    /// Stretch re-solved around positions `a..=b`: the combined nodes
    /// enclosing them, widened by one ring on each side.
    fn stretch(&self, a: usize, b: usize) -> (usize, usize) {
        let mut lo = a - 1;
        while !self.bp[lo] {
            lo -= 1;
        }
        if lo > 0 {
            lo -= 1;
            while !self.bp[lo] {
                lo -= 1;
            }
        }
        let mut hi = b + 1;
        while !self.bp[hi] {
            hi += 1;
        }
        if hi < self.n {
            hi += 1;
            while !self.bp[hi] {
                hi += 1;
            }
        }
        (lo, hi)
    }

    /// Second combined position from each end of `x..=y`.
    fn inner_combined(&self, x: usize, y: usize) -> Option<(usize, usize)> {
        let mut seen = 0;
        let mut first = None;
        for z in x..=y {
            if self.bp[z] {
                seen += 1;
                if seen == 2 {
                    first = Some(z);
                    break;
                }
            }
        }
        let first = first?;
        seen = 0;
        for z in (x..=y).rev() {
            if self.bp[z] {
                seen += 1;
                if seen == 2 {
                    return (first < z).then_some((first, z));
                }
            }
        }
        None
    }

    /// Node at new position `p` under the pending move on `a..=b`.
    fn node_at(&self, a: usize, b: usize, p: usize) -> usize {
        if p < a || p > b {
            return self.s[p];
        }
        let mut offset = a;
        for pc in &self.pieces {
            if p < offset + pc.len() {
                return self.s[pc.at(p - offset)];
            }
            offset += pc.len();
        }
        unreachable!("pieces cover a..=b")
    }

    /// Truck length added by the pending move; interior edges of pieces
    /// are kept, so only the junctions count.
    fn truck_delta(&self, a: usize, b: usize) -> f64 {
        let d = self.d;
        let s = &self.s;
        let mut delta = -d.truck(s[b], s[b + 1]);
        let mut prev = s[a - 1];
        for pc in &self.pieces {
            delta -= d.truck(s[pc.x - 1], s[pc.x]);
            delta += d.truck(prev, s[pc.at(0)]);
            prev = s[pc.at(pc.len() - 1)];
        }
        delta + d.truck(prev, s[b + 1])
    }

    /// Lay out the pending move: kept ring blocks and regions to re-solve.
    fn plan(&mut self, a: usize, b: usize) -> (usize, usize) {
        let (lo, hi) = self.stretch(a, b);
        self.kept.clear();
        let mut offset = a;
        for i in 0..self.pieces.len() {
            let pc = self.pieces[i];
            if pc.len() > KEEP_MIN {
                if let Some((q1, q2)) = self.inner_combined(pc.x, pc.y) {
                    let (n1, n2) = (pc.place(offset, q1), pc.place(offset, q2));
                    self.kept.push(Kept {
                        piece: pc,
                        offset,
                        old: (q1, q2),
                        new: (n1.min(n2), n1.max(n2)),
                    });
                }
            }
            offset += pc.len();
        }
        self.regions.clear();
        let mut start = lo;
        for k in &self.kept {
            self.regions.push((start, k.new.0));
            start = k.new.1;
        }
        self.regions.push((start, hi));
        (lo, hi)
    }

    /// Current cost of the rings in `lo..=hi` that the planned move rebuilds.
    fn removed_cost(&self, lo: usize, hi: usize) -> f64 {
        let mut skip: Vec<(usize, usize)> = self.kept.iter().map(|k| k.old).collect();
        skip.sort_unstable();
        let mut skip = skip.into_iter().peekable();
        let mut sum = 0.0;
        let mut j = lo + 1;
        while j <= hi {
            if let Some(&(q1, q2)) = skip.peek() {
                if j > q1 {
                    j = q2 + 1;
                    skip.next();
                    continue;
                }
            }
            if self.bp[j] {
                sum += self.rc[j];
            }
            j += 1;
        }
        sum
    }

    /// Cost of the re-solved regions of the planned move.
    fn rebuilt_cost(&mut self, a: usize, b: usize) -> f64 {
        let mut cost = 0.0;
        for r in 0..self.regions.len() {
            let (rs, re) = self.regions[r];
            self.t.clear();
            for p in rs..=re {
                let v = self.node_at(a, b, p);
                self.t.push(v);
            }
            cost += self.seg.solve(&self.t, rs, self.n, self.rules, self.d);
        }
        cost
    }

    /// Score the pending move on `a..=b`; apply it if it improves.
    fn attempt(&mut self, a: usize, b: usize) -> bool {
        if self.truck_delta(a, b) > self.slack {
            return false;
        }
        let (lo, hi) = self.plan(a, b);
        let new = self.rebuilt_cost(a, b);
        if new < self.removed_cost(lo, hi) - EPS {
            self.commit(a, b, lo, hi);
            true
        } else {
            false
        }
    }

    /// Apply the planned move and rebuild the partition of `lo..=hi`.
    fn commit(&mut self, a: usize, b: usize, lo: usize, hi: usize) {
        if self.recording {
            self.journal.push(Undo {
                lo,
                s: self.s[lo..=hi].to_vec(),
                bp: self.bp[lo..=hi].to_vec(),
                rc: self.rc[lo..=hi].to_vec(),
                total: self.total,
            });
        }
        let removed = self.removed_cost(lo, hi);
        // kept rings, re-addressed: (new combined position, cost of the ring ending there)
        let mut marks: Vec<(usize, f64)> = Vec::new();
        for k in &self.kept {
            let (q1, q2) = k.old;
            let mut prev = q1;
            marks.push((k.piece.place(k.offset, q1), f64::NAN));
            for z in q1 + 1..=q2 {
                if !self.bp[z] {
                    continue;
                }
                if k.piece.rev {
                    // the ring prev..z now ends at the new position of prev
                    marks.push((k.piece.place(k.offset, prev), self.rc[z]));
                    marks.push((k.piece.place(k.offset, z), f64::NAN));
                } else {
                    marks.push((k.piece.place(k.offset, z), self.rc[z]));
                }
                prev = z;
            }
        }
        let content: Vec<usize> = (a..=b).map(|p| self.node_at(a, b, p)).collect();
        self.s[a..=b].copy_from_slice(&content);
        for p in a..=b {
            self.pos[self.s[p]] = p;
        }
        self.bp[lo + 1..hi].fill(false);
        for (p, c) in marks {
            self.bp[p] = true;
            if !c.is_nan() {
                self.rc[p] = c;
            }
        }
        let mut rebuilt = 0.0;
        for r in 0..self.regions.len() {
            let (rs, re) = self.regions[r];
            rebuilt += self.seg.solve(&self.s[rs..=re], rs, self.n, self.rules, self.d);
            let mut j = re - rs;
            while j > 0 {
                self.bp[rs + j] = true;
                self.rc[rs + j] = self.seg.cost[j];
                j = self.seg.pred[j];
            }
        }
        self.total += rebuilt - removed;
    }

    /// Apply the pending move unconditionally (a kick).
    fn force(&mut self, a: usize, b: usize) {
        let (lo, hi) = self.plan(a, b);
        self.commit(a, b, lo, hi);
    }

    fn undo_all(&mut self) {
        while let Some(u) = self.journal.pop() {
            let len = u.s.len();
            self.s[u.lo..u.lo + len].copy_from_slice(&u.s);
            self.bp[u.lo..u.lo + len].copy_from_slice(&u.bp);
            self.rc[u.lo..u.lo + len].copy_from_slice(&u.rc);
            for p in u.lo..(u.lo + len).min(self.n) {
                self.pos[self.s[p]] = p;
            }
            self.total = u.total;
        }
    }

    fn try_reversal(&mut self, a: usize, b: usize) -> bool {
        self.pieces.clear();
        self.pieces.push(Piece { x: a, y: b, rev: true });
        self.attempt(a, b)
    }

    /// Try the moves bringing node `u` next to one of its neighbours; apply
    /// the first improving one and return the rewritten positions.
    fn improve_node(&mut self, u: usize) -> Option<(usize, usize)> {
        let n = self.n;
        let p = self.pos[u];
        if p == 0 {
            return None;
        }
        for ci in 0..self.neighbours[u].len() {
            let c = self.neighbours[u][ci];
            let q = self.pos[c];
            // segment reversals making u and c adjacent
            for qq in [Some(q), (q == 0).then_some(n)].into_iter().flatten() {
                let (mn, mx) = (p.min(qq), p.max(qq));
                for (a, b) in [(mn + 1, mx), (mn, mx - 1)] {
                    if a >= 1 && b < n && a < b && self.try_reversal(a, b) {
                        return Some((a, b));
                    }
                }
            }
            // Or-opt: a segment with u at one end moves next to c
            for li in 0..self.cfg.or_opt_lengths.len() {
                let len = self.cfg.or_opt_lengths[li];
                if len + 1 > n {
                    continue;
                }
                let starts = [Some(p), (len > 1 && p + 1 >= len).then(|| p + 1 - len)];
                for st in starts.into_iter().flatten() {
                    let end = st + len - 1;
                    if st < 1 || end >= n || (st..=end).contains(&q) {
                        continue;
                    }
                    for g in [q, if q == 0 { n - 1 } else { q - 1 }] {
                        if g + 1 >= st && g <= end {
                            continue;
                        }
                        for rev in [false, true] {
                            if rev && len == 1 {
                                continue;
                            }
                            let moved = Piece { x: st, y: end, rev };
                            self.pieces.clear();
                            let (a, b) = if g < st {
                                self.pieces.extend([moved, Piece::fwd(g + 1, st - 1)]);
                                (g + 1, end)
                            } else {
                                self.pieces.extend([Piece::fwd(end + 1, g), moved]);
                                (st, g)
                            };
                            if self.attempt(a, b) {
                                return Some((a, b));
                            }
                        }
                    }
                }
            }
        }
        None
    }

    /// First-improvement descent from the queued nodes.
    fn local_search(&mut self, mut queue: VecDeque<usize>) {
        for &u in &queue {
            self.active[u] = true;
        }
        while let Some(u) = queue.pop_front() {
            self.active[u] = false;
            if let Some((a, b)) = self.improve_node(u) {
                let n = self.n;
                let mut touched = vec![u];
                for p in [a - 1, a, b, b + 1] {
                    touched.push(self.s[p]);
                    touched.push(self.s[(p + 1).min(n)]);
                    touched.push(self.s[p.saturating_sub(1)]);
                }
                for x in touched {
                    if !self.active[x] {
                        self.active[x] = true;
                        queue.push_back(x);
                    }
                }
            }
        }
    }

    /// Move the anchor to a random other combined node.
    fn rotate(&mut self, rng: &mut Rng) {
        let n = self.n;
        let cands: Vec<usize> = (1..n).filter(|&p| self.bp[p]).collect();
        if cands.is_empty() {
            return;
        }
        let r = cands[rng.random_range(0..cands.len())];
        self.s.pop();
        self.s.rotate_left(r);
        self.s.push(self.s[0]);
        self.reindex();
    }

    /// Random local perturbation of the order, applied unconditionally;
    /// returns the nodes at the junctions it created.
    fn kick(&mut self, rng: &mut Rng) -> Option<VecDeque<usize>> {
        let n = self.n;
        if n < 4 {
            return None;
        }
        let reach = (n - 1).min(self.cfg.kick_reach.max(2));
        let a = rng.random_range(1..n - 1);
        let b = (a + rng.random_range(1..reach)).min(n - 1);
        self.pieces.clear();
        let mut cuts = vec![a, b + 1];
        if rng.random_bool(0.5) || b - a < 2 {
            self.pieces.push(Piece { x: a, y: b, rev: true });
        } else {
            // swap two adjacent blocks
            let mid = rng.random_range(a..b);
            self.pieces.extend([Piece::fwd(mid + 1, b), Piece::fwd(a, mid)]);
            cuts.push(a + b - mid);
        }
        self.force(a, b);
        let mut queue = VecDeque::new();
        for c in cuts {
            for p in [c - 1, c] {
                if p < n && !queue.contains(&self.s[p]) {
                    queue.push_back(self.s[p]);
                }
            }
        }
        Some(queue)
    }

    /// Full improvement loop; `on_round` sees the makespan after each round.
    fn run(&mut self, rng: &mut Rng, mut on_round: impl FnMut(f64)) {
        let all: VecDeque<usize> = self.s[..self.n].iter().copied().collect();
        self.local_search(all);
        let kicks = (self.cfg.kick_rate * self.n as f64).ceil() as usize;
        let mut stale = 0;
        for _ in 0..self.cfg.max_rounds {
            if stale >= self.cfg.patience {
                break;
            }
            let start = self.total;
            self.rotate(rng);
            self.repartition();
            for _ in 0..kicks {
                let before = self.total;
                self.recording = true;
                let Some(queue) = self.kick(rng) else { break };
                self.local_search(queue);
                self.recording = false;
                if self.total < before - EPS {
                    self.journal.clear();
                } else {
                    self.undo_all();
                }
            }
            debug_assert!(self.total <= start + 1e-9);
            on_round(self.total);
            if self.total < start - EPS {
                stale = 0;
            } else {
                stale += 1;
            }
        }
    }
}
