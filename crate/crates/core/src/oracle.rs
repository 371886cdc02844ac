//! Bounded explicit-state game solving over the infinite configuration
//! graph. Certified verdicts are sound at any budget; everything else is
//! reported as unknown.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::arena::{GameArena, Owner};
use crate::credits::{for_each_credit, CreditSpace};
use crate::monoid::{Letter, MonoidElement, PresentationGraph, Sign};
use crate::reductions::PushdownGame;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub max_configs: usize,
    pub max_depth: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_configs: 20_000, max_depth: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result")]
pub enum OracleVerdict {
    /// The universal player forces a loss within `depth` moves.
    ForallWinsCertified { depth: usize },
    ExistsWinsCertified,
    Unknown { explored: usize, depth_bound: usize },
}

impl OracleVerdict {
    pub fn winner(&self) -> Option<crate::Winner> {
        match self {
            OracleVerdict::ForallWinsCertified { .. } => Some(crate::Winner::Forall),
            OracleVerdict::ExistsWinsCertified => Some(crate::Winner::Exists),
            OracleVerdict::Unknown { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Objective {
    /// Every visited storage must be right-invertible.
    #[serde(rename = "rio")]
    Rio,
    /// Plays move through valid configurations only; getting stuck loses.
    #[serde(rename = "nonterm")]
    NonTermination,
}

/// Result of expanding one node of an explicit game graph.
pub(crate) enum Expansion<K> {
    /// Won by the universal player on arrival.
    Target,
    /// Known to be won by the existential player.
    Safe,
    /// `None` successors are losing for the existential player.
    Moves(Owner, Vec<Option<K>>),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Target,
    Safe,
    Open(Owner),
    Frontier,
}

/// Explores from `init` breadth-first and solves the reachability game to
/// `Target` (for the universal player) and the safety game (for the
/// existential player). `links` gives, for a node, other nodes that are at
/// least as good for the existential player and strictly smaller in a
/// well-founded order.
pub(crate) fn solve_explicit<K: Clone + Eq + Hash>(
    init: K,
    budget: Budget,
    mut expand: impl FnMut(&K) -> Expansion<K>,
    links: impl Fn(&K) -> Vec<K>,
) -> OracleVerdict {
    const SINK: u32 = 0;
    let mut keys: Vec<Option<K>> = vec![None];
    let mut kind = vec![Kind::Target];
    let mut succ: Vec<Vec<u32>> = vec![vec![]];
    let mut depth = vec![0u32];
    let mut index: HashMap<K, u32> = HashMap::new();
    index.insert(init.clone(), 1);
    keys.push(Some(init));
    kind.push(Kind::Frontier);
    succ.push(vec![]);
    depth.push(0);
    let mut queue = VecDeque::from([1u32]);
    while let Some(n) = queue.pop_front() {
        if depth[n as usize] as usize >= budget.max_depth || keys.len() > budget.max_configs {
            continue;
        }
        let key = keys[n as usize].clone().unwrap();
        match expand(&key) {
            Expansion::Target => kind[n as usize] = Kind::Target,
            Expansion::Safe => kind[n as usize] = Kind::Safe,
            Expansion::Moves(owner, next) => {
                kind[n as usize] = Kind::Open(owner);
                let mut out = Vec::with_capacity(next.len());
                for s in next {
                    let id = match s {
                        None => SINK,
                        Some(k) => match index.get(&k) {
                            Some(&id) => id,
                            None => {
                                let id = keys.len() as u32;
                                index.insert(k.clone(), id);
                                keys.push(Some(k));
                                kind.push(Kind::Frontier);
                                succ.push(vec![]);
                                depth.push(depth[n as usize] + 1);
                                queue.push_back(id);
                                id
                            }
                        },
                    };
                    if !out.contains(&id) {
                        out.push(id);
                    }
                }
                succ[n as usize] = out;
            }
        }
    }
    let n = keys.len();
    let mut preds: Vec<Vec<u32>> = vec![vec![]; n];
    for (v, ss) in succ.iter().enumerate() {
        for &s in ss {
            preds[s as usize].push(v as u32);
        }
    }

    // universal attractor, ranks in nondecreasing order
    let mut rank: Vec<Option<u32>> = vec![None; n];
    let mut remaining: Vec<usize> = succ.iter().map(|s| s.len()).collect();
    let mut q = VecDeque::new();
    for v in 0..n {
        if kind[v] == Kind::Target {
            rank[v] = Some(0);
            q.push_back(v as u32);
        }
    }
    while let Some(v) = q.pop_front() {
        let r = rank[v as usize].unwrap();
        for &p in &preds[v as usize] {
            let p = p as usize;
            if rank[p].is_some() {
                continue;
            }
            match kind[p] {
                Kind::Open(Owner::Forall) => {
                    rank[p] = Some(r + 1);
                    q.push_back(p as u32);
                }
                Kind::Open(Owner::Exists) => {
                    remaining[p] -= 1;
                    if remaining[p] == 0 {
                        rank[p] = Some(r + 1);
                        q.push_back(p as u32);
                    }
                }
                _ => {}
            }
        }
    }
    if let Some(r) = rank[1] {
        return OracleVerdict::ForallWinsCertified { depth: r as usize };
    }

    // existential safe set, greatest fixpoint
    let mut link: Vec<Vec<u32>> = vec![vec![]; n];
    let mut link_preds: Vec<Vec<u32>> = vec![vec![]; n];
    for v in 1..n {
        if matches!(kind[v], Kind::Open(_) | Kind::Frontier) {
            for k in links(keys[v].as_ref().unwrap()) {
                if let Some(&id) = index.get(&k) {
                    link[v].push(id);
                    link_preds[id as usize].push(v as u32);
                }
            }
        }
    }
    let mut in_s: Vec<bool> = kind.iter().map(|k| !matches!(k, Kind::Target)).collect();
    let holds = |v: usize, in_s: &[bool]| -> bool {
        if link[v].iter().any(|&l| in_s[l as usize]) {
            return true;
        }
        match kind[v] {
            Kind::Safe => true,
            Kind::Target | Kind::Frontier => false,
            Kind::Open(Owner::Exists) => succ[v].iter().any(|&s| in_s[s as usize]),
            Kind::Open(Owner::Forall) => succ[v].iter().all(|&s| in_s[s as usize]),
        }
    };
    let mut work: VecDeque<u32> = (1..n as u32).collect();
    while let Some(v) = work.pop_front() {
        let v = v as usize;
        if in_s[v] && !holds(v, &in_s) {
            in_s[v] = false;
            work.extend(preds[v].iter().copied());
            work.extend(link_preds[v].iter().copied());
        }
    }
    if in_s[1] {
        return OracleVerdict::ExistsWinsCertified;
    }
    OracleVerdict::Unknown { explored: n - 1, depth_bound: budget.max_depth }
}

fn label_is_right_invertible(g: &PresentationGraph, w: &[Letter]) -> bool {
    g.is_right_invertible(&g.reduce(w))
}

/// Control states from which the existential player survives using only
/// transitions that are valid from every valid configuration.
pub fn safe_core(a: &GameArena, objective: Objective) -> Vec<bool> {
    let g = a.graph();
    let out = a.out_edges();
    let ri: Vec<bool> = a.transitions().iter().map(|t| label_is_right_invertible(g, &t.label)).collect();
    let mut core = vec![true; a.state_count()];
    loop {
        let mut changed = false;
        for q in 0..a.state_count() {
            if !core[q] {
                continue;
            }
            let good = |&t: &usize| ri[t] && core[a.transitions()[t].to];
            let ok = match a.owner(q) {
                Owner::Exists => out[q].iter().any(good),
                Owner::Forall => match objective {
                    Objective::Rio => !out[q].is_empty() && out[q].iter().all(good),
                    Objective::NonTermination => {
                        out[q].iter().any(good) && out[q].iter().all(|&t| core[a.transitions()[t].to])
                    }
                },
            };
            if !ok {
                core[q] = false;
                changed = true;
            }
        }
        if !changed {
            return core;
        }
    }
}

/// Exponent sum of `v` above the last unlooped letter that does not commute
/// with `v`.
fn top_potential(g: &PresentationGraph, x: &MonoidElement, v: usize) -> i64 {
    let t = x.trace();
    let start = t
        .iter()
        .rposition(|l| !g.is_looped(l.v()) && !g.adjacent(l.v(), v))
        .map_or(0, |i| i + 1);
    t[start..]
        .iter()
        .filter(|l| l.v() == v)
        .map(|l| if l.sign == Sign::Pos { 1 } else { -1 })
        .sum()
}

/// Regions where, for the non-termination objective, the sign of the top
/// exponent sum of one looped generator can never return to zero: inside,
/// universal pops are blocked and looped moves never get stuck.
struct PotentialRegion {
    vertex: usize,
    sign: i64,
    states: Vec<bool>,
}

fn potential_regions(a: &GameArena) -> Vec<PotentialRegion> {
    let g = a.graph();
    let out = a.out_edges();
    let mut regions = Vec::new();
    for v in g.looped_vertices() {
        for sign in [1i64, -1] {
            let weight = |w: &[Letter]| -> Option<i64> {
                if w.iter().all(|l| g.is_looped(l.v())) {
                    let s: i64 = w
                        .iter()
                        .filter(|l| l.v() == v)
                        .map(|l| if l.sign == Sign::Pos { 1 } else { -1 })
                        .sum();
                    Some(s * sign)
                } else {
                    None
                }
            };
            let blocked = |w: &[Letter]| {
                w.first().is_some_and(|l| l.is_neg() && !g.is_looped(l.v()) && !g.adjacent(l.v(), v))
            };
            let mut inside = vec![true; a.state_count()];
            loop {
                let mut changed = false;
                for q in 0..a.state_count() {
                    if !inside[q] {
                        continue;
                    }
                    let good = |&t: &usize| {
                        let tr = &a.transitions()[t];
                        weight(&tr.label).is_some_and(|s| s >= 0) && inside[tr.to]
                    };
                    let ok = match a.owner(q) {
                        Owner::Exists => out[q].iter().any(good),
                        Owner::Forall => {
                            out[q].iter().any(good)
                                && out[q].iter().all(|t| good(t) || blocked(&a.transitions()[*t].label))
                        }
                    };
                    if !ok {
                        inside[q] = false;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            if inside.iter().any(|&b| b) {
                regions.push(PotentialRegion { vertex: v, sign, states: inside });
            }
        }
    }
    regions
}

fn solve_arena(a: &GameArena, credit: &[Letter], budget: Budget, objective: Objective) -> OracleVerdict {
    let g = a.graph();
    if a.state_count() == 0 {
        return OracleVerdict::Unknown { explored: 0, depth_bound: budget.max_depth };
    }
    let out = a.out_edges();
    let core = safe_core(a, objective);
    let regions = match objective {
        Objective::NonTermination => potential_regions(a),
        Objective::Rio => Vec::new(),
    };
    let init = (a.initial(), g.reduce(credit));
    if !g.is_right_invertible(&init.1) {
        return OracleVerdict::ForallWinsCertified { depth: 0 };
    }
    let expand = |(q, x): &(usize, MonoidElement)| -> Expansion<(usize, MonoidElement)> {
        let q = *q;
        if out[q].is_empty() {
            return Expansion::Target;
        }
        if core[q] {
            return Expansion::Safe;
        }
        if regions.iter().any(|r| r.states[q] && r.sign * top_potential(g, x, r.vertex) > 0) {
            return Expansion::Safe;
        }
        let mut next = Vec::with_capacity(out[q].len());
        for &t in &out[q] {
            let tr = &a.transitions()[t];
            let y = g.multiply(x, &tr.label);
            if g.is_right_invertible(&y) {
                next.push(Some((tr.to, y)));
            } else if objective == Objective::Rio {
                next.push(None);
            }
        }
        if next.is_empty() {
            return Expansion::Target;
        }
        Expansion::Moves(a.owner(q), next)
    };
    // A right-invertible prefix below the storage never hurts under RIO.
    let links = |(q, x): &(usize, MonoidElement)| -> Vec<(usize, MonoidElement)> {
        match objective {
            Objective::Rio => (1..=x.len()).map(|i| (*q, x.suffix(i))).collect(),
            Objective::NonTermination => Vec::new(),
        }
    };
    solve_explicit(init, budget, expand, links)
}

/// The viability game with a fixed initial credit.
pub fn bounded_solve_rio(a: &GameArena, credit: &[Letter], budget: Budget) -> OracleVerdict {
    solve_arena(a, credit, budget, Objective::Rio)
}

/// The non-termination game with a fixed initial credit.
pub fn bounded_solve_nontermination(a: &GameArena, credit: &[Letter], budget: Budget) -> OracleVerdict {
    solve_arena(a, credit, budget, Objective::NonTermination)
}

pub fn bounded_solve(a: &GameArena, credit: &[Letter], budget: Budget, objective: Objective) -> OracleVerdict {
    solve_arena(a, credit, budget, objective)
}

/// One verdict per credit, solved in parallel on the current rayon pool.
/// The result order follows `credits`.
pub fn bounded_solve_many(
    a: &GameArena,
    credits: &[Vec<Letter>],
    budget: Budget,
    objective: Objective,
) -> Vec<OracleVerdict> {
    use rayon::prelude::*;
    credits.par_iter().map(|w| bounded_solve(a, w, budget, objective)).collect()
}

/// First credit in the space (shortest first) with a certified existential
/// win under RIO.
pub fn enumerate_uv_credits(
    a: &GameArena,
    max_pushes: usize,
    max_group_len: usize,
    budget: Budget,
) -> Option<Vec<Letter>> {
    let space = CreditSpace { max_pushes, max_group_len };
    for_each_credit(a.graph(), space, |w| {
        if bounded_solve_rio(a, w, budget) == OracleVerdict::ExistsWinsCertified {
            ControlFlow::Break(w.to_vec())
        } else {
            ControlFlow::Continue(())
        }
    })
}

/// Unknown-credit verdict by enumeration: existential if some credit in the
/// space is certified, universal if every credit in the space is. The
/// universal answer is only meaningful when the space covers a bound on
/// minimal winning credits.
pub fn decide_uv_by_enumeration(a: &GameArena, space: CreditSpace, budget: Budget) -> OracleVerdict {
    let mut all_forall = true;
    let mut deepest = 0;
    let mut explored = 0;
    let found = for_each_credit(a.graph(), space, |w| {
        explored += 1;
        match bounded_solve_rio(a, w, budget) {
            OracleVerdict::ExistsWinsCertified => return ControlFlow::Break(()),
            OracleVerdict::ForallWinsCertified { depth } => deepest = deepest.max(depth),
            OracleVerdict::Unknown { .. } => all_forall = false,
        }
        ControlFlow::Continue(())
    });
    match (found, all_forall) {
        (Some(()), _) => OracleVerdict::ExistsWinsCertified,
        (None, true) => OracleVerdict::ForallWinsCertified { depth: deepest },
        (None, false) => OracleVerdict::Unknown { explored, depth_bound: budget.max_depth },
    }
}

/// Pushdown (energy) game: stuck at a universal state or on an infinite
/// play the existential player wins; a negative counter or being stuck at
/// an existential state loses for her.
pub fn bounded_solve_pushdown(p: &PushdownGame, budget: Budget) -> OracleVerdict {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); p.states.len()];
    for (i, t) in p.transitions.iter().enumerate() {
        out[t.from].push(i);
    }
    type Node = (usize, Vec<u16>, Vec<i64>);
    let init: Node = (p.initial, p.initial_stack.clone(), vec![0; p.dimension]);
    let expand = |(q, stack, energy): &Node| -> Expansion<Node> {
        let top = stack.last().copied();
        let mut next = Vec::new();
        for &t in &out[*q] {
            let tr = &p.transitions[t];
            if Some(tr.top) != top {
                continue;
            }
            let e: Vec<i64> = energy.iter().zip(&tr.energy).map(|(a, &d)| a + d as i64).collect();
            if e.iter().any(|&v| v < 0) {
                next.push(None);
                continue;
            }
            let mut s = stack.clone();
            s.pop();
            s.extend_from_slice(&tr.push);
            next.push(Some((tr.to, s, e)));
        }
        match (next.is_empty(), p.states[*q].owner) {
            (true, Owner::Exists) => Expansion::Target,
            (true, Owner::Forall) => Expansion::Safe,
            (false, owner) => Expansion::Moves(owner, next),
        }
    };
    solve_explicit(init, budget, expand, |_| Vec::new())
}
