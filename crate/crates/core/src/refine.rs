//! Hill-climbing refinement of a partition.
//!
//! Every iteration takes a snapshot of the partition, lets each vertex pick
//! its best movement against that snapshot (in parallel), and commits all
//! movements at once. Gains are in sum form: the change of the sum of
//! vertex WCC values, i.e. `|V|` times the change of global WCC.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::metric::{
    community_edge_counts, memberships, membership_by, wcc_global, wcc_term, CommunityStats,
    Membership, VertexCommunityLink,
};
use crate::partition::{CommunityId, Partition};
use crate::stats::{compute_global_stats, for_each_common, GlobalStats, VertexStats};

/// Gains must beat the incumbent by more than this to win.
const GAIN_EPS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Stay,
    /// Leave the current community for a fresh singleton.
    Remove,
    Transfer(CommunityId),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    pub vertex: VertexId,
    pub action: Action,
    /// Predicted change of the summed vertex WCC.
    pub gain: f64,
}

impl Movement {
    pub fn stay(vertex: VertexId) -> Self {
        Movement {
            vertex,
            action: Action::Stay,
            gain: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    /// Exact change of summed WCC.
    Exact,
    /// Estimate from community-level statistics only.
    Heuristic,
}

impl std::str::FromStr for GainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(GainMode::Exact),
            "heuristic" => Ok(GainMode::Heuristic),
            other => Err(Error::Config(format!("unknown gain mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub max_iterations: usize,
    /// Score the partition after every iteration, stop on small relative
    /// improvement and never accept an iteration that lowers the score.
    pub wcc_check: bool,
    pub improvement_threshold: f64,
    pub gain_mode: GainMode,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            max_iterations: 5,
            wcc_check: true,
            improvement_threshold: 1e-3,
            gain_mode: GainMode::Exact,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.improvement_threshold.is_nan() || self.improvement_threshold < 0.0 {
            return Err(Error::Config("improvement_threshold must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Non-stay movements proposed in this iteration.
    pub movements: usize,
    /// Global WCC after the iteration, when computed.
    pub wcc: Option<f64>,
    /// False when the iteration lowered the score and was rolled back.
    pub accepted: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RefineTrace {
    pub initial_wcc: Option<f64>,
    pub iterations: Vec<IterationRecord>,
}

impl RefineTrace {
    pub fn final_wcc(&self) -> Option<f64> {
        self.iterations
            .iter()
            .rev()
            .filter(|r| r.accepted)
            .find_map(|r| r.wcc)
            .or(self.initial_wcc)
    }

    pub fn total_movements(&self) -> usize {
        self.iterations
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.movements)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Exact gain by direct re-evaluation
// ---------------------------------------------------------------------------

/// Exact gain of `action` for `x`, by re-evaluating the WCC of every vertex
/// whose value can change: the members of the source and target
/// communities. Vertices elsewhere keep their community, its size and the
/// outside status of all their triangle neighbors.
pub fn movement_gain_exact(
    x: VertexId,
    action: Action,
    p: &Partition,
    g: &Graph,
    stats: &[VertexStats],
) -> f64 {
    let from = p.community_of(x);
    let target = match action {
        Action::Stay => return 0.0,
        Action::Remove if p.size(from) == 1 => return 0.0,
        Action::Remove => None,
        Action::Transfer(c) if c == from => return 0.0,
        Action::Transfer(c) => Some(c),
    };
    let source: &BTreeSet<VertexId> = p.members(from).expect("source exists");
    let empty = BTreeSet::new();
    let dest: &BTreeSet<VertexId> = target.and_then(|c| p.members(c)).unwrap_or(&empty);

    let score = |w: VertexId, in_c: &dyn Fn(VertexId) -> bool, size: usize| {
        let s = &stats[w as usize];
        let m = membership_by(w, g, in_c);
        wcc_term(m.t_in, s.t, s.vt, size, m.vt_out)
    };

    let mut before = 0.0;
    let mut after = 0.0;
    for &w in source {
        before += score(w, &|v| source.contains(&v), source.len());
        if w != x {
            after += score(w, &|v| v != x && source.contains(&v), source.len() - 1);
        }
    }
    for &w in dest {
        before += score(w, &|v| dest.contains(&v), dest.len());
        after += score(w, &|v| v == x || dest.contains(&v), dest.len() + 1);
    }
    after += score(x, &|v| v == x || dest.contains(&v), dest.len() + 1);
    after - before
}

// ---------------------------------------------------------------------------
// Heuristic gain
// ---------------------------------------------------------------------------

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den <= 0.0 || num <= 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Estimated gain of inserting a vertex with `link` into a community with
/// statistics `cs`, from which the vertex is currently absent.
///
/// The community is modelled as a random graph of density `δ` whose members
/// each have `q = (b - d_in) / r` edges leaving it, and edges outside any
/// community close triangles with probability `ω`. The gain is
/// `d_in·θ1 + (r - d_in)·θ2 + θ3`: the change for each member adjacent to
/// the vertex, for each member that is not, and the vertex's own WCC in the
/// enlarged community.
pub fn insertion_gain(link: VertexCommunityLink, cs: &CommunityStats, omega: f64) -> f64 {
    if cs.r == 0 {
        return 0.0;
    }
    let r = cs.r as f64;
    let delta = cs.delta;
    let d_in = link.d_in as f64;
    let d_out = link.d_out as f64;
    let q = ((cs.b as f64 - d_in) / r).max(0.0);
    let inside = (r - 1.0) * (r - 2.0) * delta.powi(3);

    let theta_adjacent = ratio(
        ((r - 1.0) * delta + 1.0 + q) * (d_in - 1.0) * delta,
        (r + q)
            * (inside
                + (d_in - 1.0) * delta
                + q * (q - 1.0) * delta * omega
                + q * (q - 1.0) * omega
                + d_out * omega),
    );
    let theta_far = -ratio(
        inside * ((r - 1.0) * delta + q),
        (r + q) * (r - 1.0 + q) * (inside + q * (q - 1.0) * omega + q * (r - 1.0) * delta * omega),
    );
    let theta_self = ratio(
        d_in * (d_in - 1.0) * delta * (d_in + d_out),
        (d_in * (d_in - 1.0) * delta + d_out * (d_out - 1.0) * omega + d_out * d_in * omega) * (r + d_out),
    );

    d_in * theta_adjacent + (r - d_in) * theta_far + theta_self
}

/// Estimated gain of taking a vertex out of its community (statistics `cs`,
/// vertex included) into a singleton: minus the gain of inserting it back
/// into the remainder.
pub fn removal_gain(link: VertexCommunityLink, cs: &CommunityStats, omega: f64) -> f64 {
    if cs.r <= 1 {
        return 0.0;
    }
    let rest = CommunityStats::new(
        cs.r - 1,
        cs.internal_edges.saturating_sub(link.d_in),
        (cs.b + link.d_in).saturating_sub(link.d_out),
    );
    -insertion_gain(link, &rest, omega)
}

/// Heuristic gain of `action`. `own` describes the vertex's link to and the
/// statistics of its current community; `target` the same for the
/// destination of a transfer.
pub fn movement_gain_heuristic(
    action: Action,
    own: (VertexCommunityLink, &CommunityStats),
    target: Option<(VertexCommunityLink, &CommunityStats)>,
    global: &GlobalStats,
) -> f64 {
    let omega = global.omega;
    match action {
        Action::Stay => 0.0,
        Action::Remove => removal_gain(own.0, own.1, omega),
        Action::Transfer(_) => {
            let Some((link, cs)) = target else {
                return 0.0;
            };
            removal_gain(own.0, own.1, omega) + insertion_gain(link, cs, omega)
        }
    }
}

// ---------------------------------------------------------------------------
// Snapshot context
// ---------------------------------------------------------------------------

/// Per-community WCC sums at the current size and one smaller/larger.
#[derive(Clone, Copy, Default)]
struct SizeSums {
    current: f64,
    shrunk: f64,
    grown: f64,
}

enum Mode {
    Exact {
        membership: Vec<Membership>,
        sums: Vec<SizeSums>,
    },
    Heuristic {
        community: Vec<CommunityStats>,
        global: GlobalStats,
    },
}

/// Everything `best_movement` needs from one partition snapshot.
pub struct RefineContext<'a> {
    p: &'a Partition,
    g: &'a Graph,
    stats: &'a [VertexStats],
    sizes: Vec<usize>,
    mode: Mode,
}

impl<'a> RefineContext<'a> {
    pub fn new(p: &'a Partition, g: &'a Graph, stats: &'a [VertexStats], gain_mode: GainMode) -> Self {
        let bound = p.id_bound() as usize;
        let mut sizes = vec![0usize; bound];
        for (c, members) in p.communities() {
            sizes[c.0 as usize] = members.len();
        }
        let mode = match gain_mode {
            GainMode::Exact => {
                let membership = memberships(p, g);
                let mut sums = vec![SizeSums::default(); bound];
                // Sequential accumulation in vertex order keeps this deterministic.
                for (w, m) in membership.iter().enumerate() {
                    let s = &stats[w];
                    let c = p.community_of(w as VertexId).0 as usize;
                    let size = sizes[c];
                    let entry = &mut sums[c];
                    entry.current += wcc_term(m.t_in, s.t, s.vt, size, m.vt_out);
                    entry.shrunk += wcc_term(m.t_in, s.t, s.vt, size - 1, m.vt_out);
                    entry.grown += wcc_term(m.t_in, s.t, s.vt, size + 1, m.vt_out);
                }
                Mode::Exact { membership, sums }
            }
            GainMode::Heuristic => {
                let counts = community_edge_counts(p, g);
                let community = (0..bound)
                    .map(|c| CommunityStats::new(sizes[c], counts[c].0, counts[c].1))
                    .collect();
                Mode::Heuristic {
                    community,
                    global: compute_global_stats(stats),
                }
            }
        };
        RefineContext {
            p,
            g,
            stats,
            sizes,
            mode,
        }
    }

    /// Best action for `x`. Ties go to Stay, then Remove, then the transfer
    /// with the lowest community id.
    pub fn best_movement(&self, x: VertexId) -> Movement {
        let from = self.p.community_of(x);
        let neighbors = self.g.neighbors(x);
        let mut candidates: Vec<(CommunityId, usize)> = Vec::with_capacity(neighbors.len());
        for &y in neighbors {
            let c = self.p.community_of(y);
            if c != from {
                candidates.push((c, 0));
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        let mut best = Movement::stay(x);
        let mut consider = |action: Action, gain: f64| {
            if gain > best.gain + GAIN_EPS {
                best = Movement { vertex: x, action, gain };
            }
        };

        match &self.mode {
            Mode::Exact { membership, sums } => {
                let local = LocalTriangles::new(self.g, x);
                let leave = self.exact_leave_delta(x, from, &local, membership, sums);
                if self.sizes[from.0 as usize] > 1 {
                    consider(Action::Remove, leave);
                }
                for &(c, _) in &candidates {
                    let join = self.exact_join_delta(x, c, &local, membership, sums);
                    consider(Action::Transfer(c), leave + join);
                }
            }
            Mode::Heuristic { community, global } => {
                let own_in = neighbors
                    .iter()
                    .filter(|&&y| self.p.community_of(y) == from)
                    .count();
                let own = (
                    VertexCommunityLink {
                        d_in: own_in,
                        d_out: neighbors.len() - own_in,
                    },
                    &community[from.0 as usize],
                );
                consider(
                    Action::Remove,
                    movement_gain_heuristic(Action::Remove, own, None, global),
                );
                for (c, d_in) in candidates.iter_mut() {
                    *d_in = neighbors
                        .iter()
                        .filter(|&&y| self.p.community_of(y) == *c)
                        .count();
                }
                for &(c, d_in) in &candidates {
                    let link = VertexCommunityLink {
                        d_in,
                        d_out: neighbors.len() - d_in,
                    };
                    let gain = movement_gain_heuristic(
                        Action::Transfer(c),
                        own,
                        Some((link, &community[c.0 as usize])),
                        global,
                    );
                    consider(Action::Transfer(c), gain);
                }
            }
        }
        best
    }

    fn term(&self, w: VertexId, t_in: u64, size: usize, vt_out: u32) -> f64 {
        let s = &self.stats[w as usize];
        wcc_term(t_in, s.t, s.vt, size, vt_out)
    }

    /// Change of summed WCC over the source community (x included) when x
    /// leaves it for a singleton.
    fn exact_leave_delta(
        &self,
        x: VertexId,
        from: CommunityId,
        local: &LocalTriangles,
        membership: &[Membership],
        sums: &[SizeSums],
    ) -> f64 {
        let size = self.sizes[from.0 as usize];
        if size == 1 {
            return 0.0;
        }
        let in_from = |v: VertexId| self.p.community_of(v) == from;
        let mx = membership[x as usize];
        let sum = &sums[from.0 as usize];
        // Everyone else at size - 1, then patch x's neighbors in the community.
        let mut after = sum.shrunk - self.term(x, mx.t_in, size - 1, mx.vt_out);
        for (i, &w) in local.neighbors.iter().enumerate() {
            if !in_from(w) {
                continue;
            }
            let mw = membership[w as usize];
            after -= self.term(w, mw.t_in, size - 1, mw.vt_out);
            let lost = local.count_common(i, in_from);
            let closes = u32::from(local.closes(i));
            after += self.term(w, mw.t_in - lost, size - 1, mw.vt_out + closes);
        }
        after - sum.current
    }

    /// Change of summed WCC over `target` plus x's own new value when x
    /// joins it (x's old value is accounted for in the leave delta).
    fn exact_join_delta(
        &self,
        x: VertexId,
        target: CommunityId,
        local: &LocalTriangles,
        membership: &[Membership],
        sums: &[SizeSums],
    ) -> f64 {
        let size = self.sizes[target.0 as usize];
        let in_target = |v: VertexId| self.p.community_of(v) == target;
        let sum = &sums[target.0 as usize];
        let mut after = sum.grown;
        let mut twice_t_x = 0u64;
        let mut vt_out_x = 0u32;
        for (i, &w) in local.neighbors.iter().enumerate() {
            if !in_target(w) {
                vt_out_x += u32::from(local.closes(i));
                continue;
            }
            let mw = membership[w as usize];
            let gained = local.count_common(i, in_target);
            twice_t_x += gained;
            let closes = u32::from(local.closes(i));
            after -= self.term(w, mw.t_in, size + 1, mw.vt_out);
            after += self.term(w, mw.t_in + gained, size + 1, mw.vt_out - closes);
        }
        after += self.term(x, twice_t_x / 2, size + 1, vt_out_x);
        after - sum.current
    }
}

/// Common neighbors of `x` with each of its neighbors.
struct LocalTriangles {
    neighbors: Vec<VertexId>,
    offsets: Vec<usize>,
    common: Vec<VertexId>,
}

impl LocalTriangles {
    fn new(g: &Graph, x: VertexId) -> Self {
        let nx = g.neighbors(x);
        let mut offsets = Vec::with_capacity(nx.len() + 1);
        let mut common = Vec::new();
        offsets.push(0);
        for &y in nx {
            for_each_common(nx, g.neighbors(y), |z| common.push(z));
            offsets.push(common.len());
        }
        LocalTriangles {
            neighbors: nx.to_vec(),
            offsets,
            common,
        }
    }

    fn closes(&self, i: usize) -> bool {
        self.offsets[i + 1] > self.offsets[i]
    }

    fn count_common(&self, i: usize, pred: impl Fn(VertexId) -> bool) -> u64 {
        self.common[self.offsets[i]..self.offsets[i + 1]]
            .iter()
            .filter(|&&z| pred(z))
            .count() as u64
    }
}

/// Best movement of a single vertex. Builds a full snapshot context, so
/// prefer [`RefineContext`] when evaluating many vertices.
pub fn best_movement(
    x: VertexId,
    p: &Partition,
    g: &Graph,
    stats: &[VertexStats],
    gain_mode: GainMode,
) -> Movement {
    RefineContext::new(p, g, stats, gain_mode).best_movement(x)
}

/// Commits movements computed against the snapshot `p`. Removes get fresh
/// singleton ids in ascending vertex order; emptied communities disappear.
pub fn apply_movements(p: &Partition, movements: &[Movement]) -> Result<Partition> {
    let mut seen = vec![false; p.n()];
    let mut ordered: Vec<&Movement> = Vec::with_capacity(movements.len());
    for m in movements {
        let v = m.vertex as usize;
        if v >= p.n() {
            return Err(Error::UnknownVertex(m.vertex));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::contract(format!(
                "vertex {} has more than one movement",
                m.vertex
            )));
        }
        if let Action::Transfer(c) = m.action {
            if !p.contains(c) {
                return Err(Error::contract(format!("transfer target {c} does not exist")));
            }
        }
        ordered.push(m);
    }
    ordered.sort_by_key(|m| m.vertex);

    let mut next = p.clone();
    let mut changes = Vec::with_capacity(ordered.len());
    for m in ordered {
        match m.action {
            Action::Stay => {}
            Action::Remove if p.is_singleton(m.vertex) => {}
            Action::Remove => changes.push((m.vertex, next.fresh_id())),
            Action::Transfer(c) => changes.push((m.vertex, c)),
        }
    }
    next.reassign(&changes);
    Ok(next)
}

/// All non-stay movements for the snapshot `p`.
pub fn compute_movements(
    p: &Partition,
    g: &Graph,
    stats: &[VertexStats],
    gain_mode: GainMode,
) -> Vec<Movement> {
    let ctx = RefineContext::new(p, g, stats, gain_mode);
    (0..g.n() as VertexId)
        .into_par_iter()
        .map(|x| ctx.best_movement(x))
        .filter(|m| m.action != Action::Stay)
        .collect()
}

/// Iterated best-movement sweeps.
///
/// With `wcc_check` the partition is scored after every iteration; an
/// iteration that lowers the score is rolled back and ends the loop, and a
/// relative improvement below the threshold ends it too. Without it the
/// loop runs `max_iterations` sweeps, stopping early only at a fixpoint
/// (an iteration with no movements).
pub fn refine(
    p0: &Partition,
    g: &Graph,
    stats: &[VertexStats],
    cfg: &RefineConfig,
) -> Result<(Partition, RefineTrace)> {
    cfg.validate()?;
    if p0.n() != g.n() || stats.len() != g.n() {
        return Err(Error::contract("partition, graph and stats sizes differ"));
    }
    let mut p = p0.clone();
    let mut trace = RefineTrace::default();
    let mut score = cfg.wcc_check.then(|| wcc_global(&p, g, stats));
    trace.initial_wcc = score;

    for iteration in 1..=cfg.max_iterations {
        let movements = compute_movements(&p, g, stats, cfg.gain_mode);
        if movements.is_empty() {
            trace.iterations.push(IterationRecord {
                iteration,
                movements: 0,
                wcc: score,
                accepted: true,
            });
            break;
        }
        let next = apply_movements(&p, &movements)?;
        match score {
            None => {
                p = next;
                trace.iterations.push(IterationRecord {
                    iteration,
                    movements: movements.len(),
                    wcc: None,
                    accepted: true,
                });
            }
            Some(previous) => {
                let current = wcc_global(&next, g, stats);
                if current < previous {
                    trace.iterations.push(IterationRecord {
                        iteration,
                        movements: movements.len(),
                        wcc: Some(current),
                        accepted: false,
                    });
                    break;
                }
                p = next;
                score = Some(current);
                trace.iterations.push(IterationRecord {
                    iteration,
                    movements: movements.len(),
                    wcc: Some(current),
                    accepted: true,
                });
                let improvement = if previous > 0.0 {
                    (current - previous) / previous
                } else if current > previous {
                    f64::INFINITY
                } else {
                    0.0
                };
                if improvement < cfg.improvement_threshold {
                    break;
                }
            }
        }
    }
    Ok((p, trace))
}
