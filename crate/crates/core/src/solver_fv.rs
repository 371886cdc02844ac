//! Fixed initial credit games over pushdown-over-group storages, decided by
//! saturating families of minimal leaf sets of relaxed universal strategy
//! trees, one stack frame at a time.
//!
//! For a frame opened by stack letter `k`, `A_k(q, c)` is the antichain of
//! minimal sets `P` such that from state `q` with top group element `c` the
//! universal player has a finite tree whose leaves are invalid moves or
//! valid pops of the frame into a state of `P`. Pushes inside a frame are
//! summarized through the families of the previous round.

use std::collections::HashMap;

use log::{debug, trace};
use serde::Serialize;

use crate::arena::{
    eliminate_dead_ends, encode_initial_credit, normalize_letters, pushes_to_universal,
    strip_group_factor, to_single_stack_letter, GameArena, Owner,
};
use crate::classify::{classify, ClassLabel};
use crate::error::{Error, Result};
use crate::monoid::{Letter, PresentationGraph, RestrictedCayley, Sign};
use crate::Winner;

/// Bitset over control states.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet(Vec<u64>);

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet(vec![0; n.div_ceil(64).max(1)])
    }

    pub fn singleton(n: usize, q: usize) -> Self {
        let mut s = StateSet::empty(n);
        s.insert(q);
        s
    }

    pub fn insert(&mut self, q: usize) {
        self.0[q / 64] |= 1 << (q % 64);
    }

    pub fn contains(&self, q: usize) -> bool {
        self.0[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        StateSet(self.0.iter().zip(&other.0).map(|(a, b)| a | b).collect())
    }

    pub fn states(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, &w) in self.0.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                out.push(i * 64 + b);
                w &= w - 1;
            }
        }
        out
    }
}

/// Inserts `set` unless dominated; drops entries it dominates.
fn insert_min<T>(family: &mut Vec<(StateSet, T)>, set: StateSet, payload: T) -> bool {
    if family.iter().any(|(s, _)| s.is_subset(&set)) {
        return false;
    }
    family.retain(|(s, _)| !set.is_subset(s));
    family.push((set, payload));
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Frame {
    Letter(usize),
    Root,
}

#[derive(Clone, Copy, Debug)]
enum MoveKind {
    Push(usize),
    Pop(usize),
    Step(Letter),
    Eps,
}

#[derive(Clone, Copy, Debug)]
struct Move {
    trans: usize,
    kind: MoveKind,
    to: usize,
}

/// How one branch of a derivation continues.
#[derive(Clone, Debug)]
enum Why {
    PopValid(usize),
    PopInvalid,
    Child(u32),
    /// Push whose frame can never be popped; the frame's own derivation.
    PushEmpty(u32),
    /// Push summarized by a frame derivation plus one outer derivation per
    /// state the frame may pop into.
    PushVia(u32, Vec<(usize, u32)>),
}

#[derive(Clone, Debug)]
enum Body {
    Forall(usize, Why),
    Exists(Vec<(usize, Why)>),
}

#[derive(Clone, Debug)]
struct Deriv {
    state: usize,
    body: Body,
}

const NO_ID: u32 = u32::MAX;

type Family = Vec<(StateSet, u32)>;

/// How large the group ball around the identity must be.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum RadiusPolicy {
    /// Longest number of group steps a universal attractor strategy can
    /// take within one frame, bounded via the strongly connected components
    /// of the level graph. Never larger than the state count.
    #[default]
    LevelBound,
    /// The number of control states.
    StateCount,
    Fixed(usize),
}

#[derive(Clone, Debug)]
pub struct FvOptions {
    pub radius: RadiusPolicy,
    /// Abort with a resource error when an intermediate antichain grows
    /// beyond this width.
    pub max_antichain: usize,
    /// Encode several stack letters into one before saturating. Frames are
    /// handled natively otherwise.
    pub single_stack_letter: bool,
    /// Record derivations for certificate extraction.
    pub track: bool,
    /// Keep per-round families.
    pub history: bool,
    /// Cap on nodes of an extracted certificate.
    pub max_certificate_nodes: usize,
}

impl Default for FvOptions {
    fn default() -> Self {
        FvOptions {
            radius: RadiusPolicy::default(),
            max_antichain: 1 << 16,
            single_stack_letter: false,
            track: false,
            history: false,
            max_certificate_nodes: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FvVerdict {
    pub winner: Winner,
    pub rounds: usize,
    pub cayley_nodes: usize,
    #[serde(skip)]
    pub radius: usize,
    #[serde(skip)]
    pub states: usize,
}

struct Instance {
    n: usize,
    owners: Vec<Owner>,
    moves: Vec<Vec<Move>>,
    /// Arena vertices of the stack letters.
    letters: Vec<usize>,
    cayley: RestrictedCayley,
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}

impl Instance {
    fn new(a: &GameArena, policy: RadiusPolicy) -> Result<Instance> {
        let g = a.graph();
        let letters = g.unlooped();
        let looped = g.looped_vertices();
        for (i, &x) in letters.iter().enumerate() {
            for &y in &letters[i + 1..] {
                require(!g.adjacent(x, y), || format!("stack letters `{}`, `{}` commute", g.name(x), g.name(y)))?;
            }
            for &y in &looped {
                require(!g.adjacent(x, y), || {
                    format!("stack letter `{}` commutes with `{}`", g.name(x), g.name(y))
                })?;
            }
        }
        let (delta, gmap) = g.induced(&looped);
        let slot: HashMap<usize, usize> = letters.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = a.state_count();
        let mut moves = vec![Vec::new(); n];
        for (i, t) in a.transitions().iter().enumerate() {
            require(t.label.len() <= 1, || format!("label of length {} at `{}`", t.label.len(), a.name(t.from)))?;
            let kind = match t.label.first() {
                None => MoveKind::Eps,
                Some(&l) => match slot.get(&l.v()) {
                    Some(&k) if l.sign == Sign::Pos => {
                        require(a.owner(t.from) == Owner::Forall, || {
                            format!("push at existential state `{}`", a.name(t.from))
                        })?;
                        MoveKind::Push(k)
                    }
                    Some(&k) => MoveKind::Pop(k),
                    None => MoveKind::Step(Letter { vertex: gmap[l.v()].unwrap() as u16, sign: l.sign }),
                },
            };
            moves[t.from].push(Move { trans: i, kind, to: t.to });
        }
        let owners = (0..n).map(|q| a.owner(q)).collect();
        let mut inst = Instance {
            n,
            owners,
            moves,
            letters,
            cayley: RestrictedCayley::build(&PresentationGraph::new(), 0)?,
        };
        let radius = match policy {
            RadiusPolicy::LevelBound => inst.level_bound(),
            RadiusPolicy::StateCount => n,
            RadiusPolicy::Fixed(r) => r,
        };
        inst.cayley = RestrictedCayley::build(&delta, radius)?;
        Ok(inst)
    }

    /// Longest weighted path through the condensation of the level graph,
    /// where a component weighs as many states as it has with a group move.
    fn level_bound(&self) -> usize {
        let n = self.n;
        let mut pop_targets = vec![Vec::new(); self.letters.len()];
        for ms in &self.moves {
            for m in ms {
                if let MoveKind::Pop(k) = m.kind {
                    pop_targets[k].push(m.to);
                }
            }
        }
        let mut edges = vec![Vec::new(); n];
        for (q, ms) in self.moves.iter().enumerate() {
            for m in ms {
                match m.kind {
                    MoveKind::Step(_) | MoveKind::Eps => edges[q].push(m.to),
                    MoveKind::Push(k) => edges[q].extend(&pop_targets[k]),
                    MoveKind::Pop(_) => {}
                }
            }
        }
        let comp = scc(&edges);
        let ncomp = comp.iter().copied().max().map_or(0, |c| c + 1);
        let mut weight = vec![0usize; ncomp];
        for q in 0..n {
            if self.moves[q].iter().any(|m| matches!(m.kind, MoveKind::Step(_))) {
                weight[comp[q]] += 1;
            }
        }
        // components are numbered in reverse topological order
        let mut best = vec![0usize; ncomp];
        let mut members = vec![Vec::new(); ncomp];
        for q in 0..n {
            members[comp[q]].push(q);
        }
        for c in 0..ncomp {
            let mut tail = 0;
            for &q in &members[c] {
                for &r in &edges[q] {
                    if comp[r] != c {
                        tail = tail.max(best[comp[r]]);
                    }
                }
            }
            best[c] = weight[c] + tail;
        }
        best.into_iter().max().unwrap_or(0)
    }

    fn nodes(&self) -> usize {
        self.cayley.node_count()
    }

    fn contributions(
        &self,
        frame: Frame,
        m: &Move,
        c: u32,
        sc: &[Vec<Family>],
        vals: &[Family],
        cap: usize,
    ) -> Result<Vec<(StateSet, Why)>> {
        let nn = self.nodes();
        let from = |to: usize, c: u32| -> Vec<(StateSet, Why)> {
            vals[to * nn + c as usize].iter().map(|(s, id)| (s.clone(), Why::Child(*id))).collect()
        };
        Ok(match m.kind {
            MoveKind::Pop(k) => {
                if frame == Frame::Letter(k) && c == RestrictedCayley::IDENTITY {
                    vec![(StateSet::singleton(self.n, m.to), Why::PopValid(m.to))]
                } else {
                    vec![(StateSet::empty(self.n), Why::PopInvalid)]
                }
            }
            MoveKind::Step(x) => from(m.to, self.cayley.step(c, x)),
            MoveKind::Eps => from(m.to, c),
            MoveKind::Push(k) => {
                let mut out = Vec::new();
                for (r, rid) in &sc[k][m.to] {
                    if r.is_empty() {
                        out.push((StateSet::empty(self.n), Why::PushEmpty(*rid)));
                        continue;
                    }
                    let mut acc: Vec<(StateSet, Vec<(usize, u32)>)> = vec![(StateSet::empty(self.n), vec![])];
                    for rj in r.states() {
                        let child = &vals[rj * nn + c as usize];
                        let mut next = Vec::new();
                        for (s, parts) in &acc {
                            for (cs, cid) in child {
                                let mut p = parts.clone();
                                p.push((rj, *cid));
                                insert_min(&mut next, s.union(cs), p);
                            }
                        }
                        if next.len() > cap {
                            return Err(Error::Resource(format!("antichain wider than {cap}")));
                        }
                        acc = next;
                        if acc.is_empty() {
                            break;
                        }
                    }
                    out.extend(acc.into_iter().map(|(s, p)| (s, Why::PushVia(*rid, p))));
                }
                out
            }
        })
    }

    fn compute(
        &self,
        frame: Frame,
        q: usize,
        c: u32,
        sc: &[Vec<Family>],
        vals: &[Family],
        cap: usize,
    ) -> Result<Vec<(StateSet, Body)>> {
        match self.owners[q] {
            Owner::Forall => {
                let mut out = Vec::new();
                for m in &self.moves[q] {
                    for (s, why) in self.contributions(frame, m, c, sc, vals, cap)? {
                        insert_min(&mut out, s, Body::Forall(m.trans, why));
                    }
                }
                Ok(out)
            }
            Owner::Exists => {
                if self.moves[q].is_empty() {
                    return Ok(Vec::new());
                }
                let mut acc: Vec<(StateSet, Vec<(usize, Why)>)> = vec![(StateSet::empty(self.n), vec![])];
                for m in &self.moves[q] {
                    let contrib = self.contributions(frame, m, c, sc, vals, cap)?;
                    let mut next = Vec::new();
                    for (s, parts) in &acc {
                        for (cs, why) in &contrib {
                            let mut p = parts.clone();
                            p.push((m.trans, why.clone()));
                            insert_min(&mut next, s.union(cs), p);
                        }
                    }
                    if next.len() > cap {
                        return Err(Error::Resource(format!("antichain wider than {cap}")));
                    }
                    acc = next;
                    if acc.is_empty() {
                        break;
                    }
                }
                Ok(acc.into_iter().map(|(s, p)| (s, Body::Exists(p))).collect())
            }
        }
    }

    /// Least fixpoint of one frame's families, continuing from `vals`.
    fn derive(
        &self,
        frame: Frame,
        sc: &[Vec<Family>],
        vals: &mut [Family],
        store: &mut Option<Vec<Deriv>>,
        cap: usize,
    ) -> Result<()> {
        let nn = self.nodes();
        let pairs = self.n * nn;
        let mut rdeps: Vec<Vec<u32>> = vec![Vec::new(); pairs];
        for q in 0..self.n {
            for m in &self.moves[q] {
                for c in 0..nn as u32 {
                    let me = (q * nn + c as usize) as u32;
                    match m.kind {
                        MoveKind::Step(x) => rdeps[m.to * nn + self.cayley.step(c, x) as usize].push(me),
                        MoveKind::Eps => rdeps[m.to * nn + c as usize].push(me),
                        MoveKind::Push(k) => {
                            for (r, _) in &sc[k][m.to] {
                                for rj in r.states() {
                                    rdeps[rj * nn + c as usize].push(me);
                                }
                            }
                        }
                        MoveKind::Pop(_) => {}
                    }
                }
            }
        }
        let mut queued = vec![true; pairs];
        let mut work: std::collections::VecDeque<u32> = (0..pairs as u32).collect();
        while let Some(p) = work.pop_front() {
            queued[p as usize] = false;
            let (q, c) = (p as usize / nn, (p as usize % nn) as u32);
            let cands = self.compute(frame, q, c, sc, vals, cap)?;
            let mut changed = false;
            for (set, body) in cands {
                let fam = &mut vals[p as usize];
                if fam.iter().any(|(s, _)| s.is_subset(&set)) {
                    continue;
                }
                let id = match store {
                    Some(st) => {
                        st.push(Deriv { state: q, body });
                        (st.len() - 1) as u32
                    }
                    None => NO_ID,
                };
                insert_min(fam, set, id);
                changed = true;
            }
            if changed {
                for &d in &rdeps[p as usize] {
                    if !queued[d as usize] {
                        queued[d as usize] = true;
                        work.push_back(d);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Strongly connected components (Tarjan); ids in reverse topological order.
fn scc(edges: &[Vec<usize>]) -> Vec<usize> {
    struct T<'a> {
        edges: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next: usize,
        ncomp: usize,
    }
    fn visit(t: &mut T, v: usize) {
        t.index[v] = Some(t.next);
        t.low[v] = t.next;
        t.next += 1;
        t.stack.push(v);
        t.on[v] = true;
        for i in 0..t.edges[v].len() {
            let w = t.edges[v][i];
            match t.index[w] {
                None => {
                    visit(t, w);
                    t.low[v] = t.low[v].min(t.low[w]);
                }
                Some(iw) if t.on[w] => t.low[v] = t.low[v].min(iw),
                _ => {}
            }
        }
        if Some(t.low[v]) == t.index[v] {
            loop {
                let w = t.stack.pop().unwrap();
                t.on[w] = false;
                t.comp[w] = t.ncomp;
                if w == v {
                    break;
                }
            }
            t.ncomp += 1;
        }
    }
    let n = edges.len();
    let mut t = T {
        edges,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: vec![],
        comp: vec![0; n],
        next: 0,
        ncomp: 0,
    };
    for v in 0..n {
        if t.index[v].is_none() {
            visit(&mut t, v);
        }
    }
    t.comp
}

/// Level bound of a normalized arena: the group ball radius the saturation
/// uses by default.
pub fn level_bound(a: &GameArena) -> Result<usize> {
    Ok(Instance::new(a, RadiusPolicy::Fixed(0))?.level_bound())
}

/// Outcome of saturating a normalized arena.
pub struct SaturationState {
    inst: Instance,
    initial: usize,
    /// `[letter][state]` minimal sets at the identity.
    final_families: Vec<Vec<Family>>,
    root: Vec<Family>,
    store: Option<Vec<Deriv>>,
    history: Vec<Vec<Vec<Vec<StateSet>>>>,
    pub rounds: usize,
}

impl SaturationState {
    pub fn cayley(&self) -> &RestrictedCayley {
        &self.inst.cayley
    }

    pub fn state_count(&self) -> usize {
        self.inst.n
    }

    /// Arena vertices used as stack letters, in family order.
    pub fn stack_letters(&self) -> &[usize] {
        &self.inst.letters
    }

    /// Minimal leaf sets for a frame of stack letter index `k` entered at `q`.
    pub fn family(&self, k: usize, q: usize) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = self.final_families[k][q].iter().map(|(s, _)| s.states()).collect();
        v.sort();
        v
    }

    /// Whether the universal player wins from `(q, ε)`.
    pub fn forall_wins_at_root(&self, q: usize) -> bool {
        !self.root[q * self.inst.nodes() + RestrictedCayley::IDENTITY as usize].is_empty()
    }

    pub fn winner(&self) -> Winner {
        if self.forall_wins_at_root(self.initial) {
            Winner::Forall
        } else {
            Winner::Exists
        }
    }

    /// Per round, per stack letter, per state: the minimal sets.
    pub fn history(&self) -> &[Vec<Vec<Vec<StateSet>>>] {
        &self.history
    }

    /// Every set of round `i` contains some set of round `i + 1`.
    pub fn is_monotone(&self) -> bool {
        self.history.windows(2).all(|w| {
            w[0].iter().zip(&w[1]).all(|(old_k, new_k)| {
                old_k.iter().zip(new_k).all(|(old, new)| {
                    old.iter().all(|o| new.iter().any(|s| s.is_subset(o)))
                })
            })
        })
    }

    /// A universal strategy tree from the initial state, when one exists.
    pub fn extract_forall_certificate(&self, max_nodes: usize) -> Result<StrategyTree> {
        let store = self
            .store
            .as_ref()
            .ok_or_else(|| Error::NotApplicable("saturation ran without derivation tracking".into()))?;
        let fam = &self.root[self.initial * self.inst.nodes() + RestrictedCayley::IDENTITY as usize];
        let (_, id) = fam
            .iter()
            .find(|(s, _)| s.is_empty())
            .ok_or_else(|| Error::NotApplicable("the existential player wins".into()))?;
        let mut budget = max_nodes;
        build_tree(store, *id, &Cont::Root, &mut budget)
    }
}

enum Cont<'a> {
    Root,
    Frame { parts: &'a [(usize, u32)], outer: &'a Cont<'a> },
}

/// A finite universal strategy: one move at universal states, every move at
/// existential states. A move without a child ends in an invalid storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyTree {
    pub state: usize,
    pub moves: Vec<(usize, Option<Box<StrategyTree>>)>,
}

impl StrategyTree {
    pub fn height(&self) -> usize {
        1 + self.moves.iter().filter_map(|(_, c)| c.as_ref().map(|c| c.height())).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.moves.iter().filter_map(|(_, c)| c.as_ref().map(|c| c.size())).sum::<usize>()
    }

    /// Replays the tree from `(state, storage)` and checks every leaf move
    /// produces a storage that is not right-invertible.
    pub fn validate(&self, a: &GameArena, storage: &crate::MonoidElement) -> bool {
        let out = a.out_edges();
        let g = a.graph();
        let ok_moves = match a.owner(self.state) {
            Owner::Forall => self.moves.len() == 1 && out[self.state].contains(&self.moves[0].0),
            Owner::Exists => {
                let mut m: Vec<usize> = self.moves.iter().map(|(t, _)| *t).collect();
                m.sort();
                m == out[self.state]
            }
        };
        ok_moves
            && self.moves.iter().all(|(t, child)| {
                let tr = &a.transitions()[*t];
                let next = g.multiply(storage, &tr.label);
                match child {
                    None => !g.is_right_invertible(&next),
                    Some(c) => c.state == tr.to && g.is_right_invertible(&next) && c.validate(a, &next),
                }
            })
    }

    pub fn to_json(&self, a: &GameArena) -> serde_json::Value {
        let moves: Vec<serde_json::Value> = self
            .moves
            .iter()
            .map(|(t, c)| {
                let tr = &a.transitions()[*t];
                serde_json::json!({
                    "label": a.graph().word_names(&tr.label),
                    "to": a.name(tr.to),
                    "then": c.as_ref().map(|c| c.to_json(a)),
                })
            })
            .collect();
        serde_json::json!({ "state": a.name(self.state), "moves": moves })
    }
}

fn build_tree(store: &[Deriv], id: u32, cont: &Cont, budget: &mut usize) -> Result<StrategyTree> {
    if *budget == 0 {
        return Err(Error::Resource("certificate exceeds the node cap".into()));
    }
    *budget -= 1;
    let d = &store[id as usize];
    let branch = |t: usize, why: &Why, budget: &mut usize| -> Result<(usize, Option<Box<StrategyTree>>)> {
        let child = match why {
            Why::PopInvalid => None,
            Why::PopValid(to) => match cont {
                Cont::Root => return Err(Error::Domain("valid pop at the bottom of the stack".into())),
                Cont::Frame { parts, outer } => {
                    let (_, pid) = parts
                        .iter()
                        .find(|(r, _)| r == to)
                        .ok_or_else(|| Error::Domain("pop target outside the summarized set".into()))?;
                    Some(Box::new(build_tree(store, *pid, outer, budget)?))
                }
            },
            Why::Child(c) => Some(Box::new(build_tree(store, *c, cont, budget)?)),
            Why::PushEmpty(r) => {
                Some(Box::new(build_tree(store, *r, &Cont::Frame { parts: &[], outer: cont }, budget)?))
            }
            Why::PushVia(r, parts) => {
                Some(Box::new(build_tree(store, *r, &Cont::Frame { parts, outer: cont }, budget)?))
            }
        };
        Ok((t, child))
    };
    let moves = match &d.body {
        Body::Forall(t, why) => vec![branch(*t, why, budget)?],
        Body::Exists(parts) => parts.iter().map(|(t, w)| branch(*t, w, budget)).collect::<Result<_>>()?,
    };
    Ok(StrategyTree { state: d.state, moves })
}

/// Saturates a normalized arena: labels of length at most one, pushes only
/// at universal states, unlooped vertices pairwise non-adjacent and not
/// adjacent to looped ones.
pub fn saturate(a: &GameArena, opts: &FvOptions) -> Result<SaturationState> {
    let inst = Instance::new(a, opts.radius)?;
    let nn = inst.nodes();
    let nl = inst.letters.len();
    let mut store = if opts.track { Some(Vec::new()) } else { None };
    let mut vals: Vec<Vec<Family>> = vec![vec![Vec::new(); inst.n * nn]; nl];
    let mut sc: Vec<Vec<Family>> = vec![vec![Vec::new(); inst.n]; nl];
    let has_push = inst.moves.iter().flatten().any(|m| matches!(m.kind, MoveKind::Push(_)));
    let mut history = Vec::new();
    let mut passes = 0;
    let snapshot = |sc: &Vec<Vec<Family>>| -> Vec<Vec<Vec<StateSet>>> {
        sc.iter()
            .map(|per| {
                per.iter()
                    .map(|f| {
                        let mut v: Vec<StateSet> = f.iter().map(|(s, _)| s.clone()).collect();
                        v.sort();
                        v
                    })
                    .collect()
            })
            .collect()
    };
    loop {
        passes += 1;
        for (k, vk) in vals.iter_mut().enumerate() {
            inst.derive(Frame::Letter(k), &sc, vk, &mut store, opts.max_antichain)?;
        }
        let next: Vec<Vec<Family>> = vals
            .iter()
            .map(|vk| (0..inst.n).map(|q| vk[q * nn + RestrictedCayley::IDENTITY as usize].clone()).collect())
            .collect();
        let same = passes > 1 && snapshot(&next) == snapshot(&sc);
        if opts.history && !same {
            history.push(snapshot(&next));
        }
        sc = next;
        debug!("saturation pass {passes}");
        if same || !has_push {
            break;
        }
    }
    let rounds = if has_push { passes - 1 } else { 1 };
    let bound = (inst.n as u128).saturating_mul(1u128.checked_shl(inst.n as u32).unwrap_or(u128::MAX)).max(1);
    debug_assert!((rounds as u128) <= bound.saturating_mul(nl.max(1) as u128));
    let mut root = vec![Vec::new(); inst.n * nn];
    inst.derive(Frame::Root, &sc, &mut root, &mut store, opts.max_antichain)?;
    trace!("cayley nodes {nn}, rounds {rounds}");
    Ok(SaturationState { inst, initial: a.initial(), final_families: sc, root, store, history, rounds })
}

/// Safety game over the control graph: the universal player wins iff he
/// can force a dead end.
pub fn group_game_winner(a: &GameArena) -> Winner {
    let out = a.out_edges();
    let n = a.state_count();
    let mut attr: Vec<bool> = (0..n).map(|q| out[q].is_empty()).collect();
    loop {
        let mut changed = false;
        for q in 0..n {
            if attr[q] {
                continue;
            }
            let to = |t: &usize| attr[a.transitions()[*t].to];
            let hit = match a.owner(q) {
                Owner::Forall => out[q].iter().any(to),
                Owner::Exists => out[q].iter().all(to),
            };
            if hit {
                attr[q] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if attr[a.initial()] {
        Winner::Forall
    } else {
        Winner::Exists
    }
}

/// The arena the saturation runs on, or the group-class arena.
pub enum Prepared {
    Group(GameArena),
    Pushdown(GameArena),
}

pub fn prepare(a: &GameArena, credit: &[Letter], opts: &FvOptions) -> Result<Prepared> {
    a.graph().check_word(credit)?;
    let label = classify(a.graph());
    match &label {
        ClassLabel::Undecidable { .. } | ClassLabel::VassTimesGrp { .. } => {
            Err(Error::RoutedToOracle(format!("{}; no exact procedure", label.describe(a.graph()))))
        }
        ClassLabel::Grp => Ok(Prepared::Group(a.clone())),
        ClassLabel::PdGrpTimesGrp { .. } => {
            let mut b = encode_initial_credit(a, credit);
            b = strip_group_factor(&b, &label)?;
            if opts.single_stack_letter {
                b = to_single_stack_letter(&b)?;
            }
            b = normalize_letters(&b);
            b = pushes_to_universal(&b)?;
            Ok(Prepared::Pushdown(eliminate_dead_ends(&b)))
        }
    }
}

pub fn solve_fv(a: &GameArena, credit: &[Letter]) -> Result<FvVerdict> {
    solve_fv_with(a, credit, &FvOptions::default())
}

pub fn solve_fv_with(a: &GameArena, credit: &[Letter], opts: &FvOptions) -> Result<FvVerdict> {
    match prepare(a, credit, opts)? {
        Prepared::Group(g) => Ok(FvVerdict {
            winner: group_game_winner(&g),
            rounds: 0,
            cayley_nodes: 0,
            radius: 0,
            states: g.state_count(),
        }),
        Prepared::Pushdown(b) => {
            let s = saturate(&b, opts)?;
            Ok(FvVerdict {
                winner: s.winner(),
                rounds: s.rounds,
                cayley_nodes: s.cayley().node_count(),
                radius: s.cayley().radius(),
                states: b.state_count(),
            })
        }
    }
}

/// A universal strategy tree together with the normalized arena it lives in.
pub struct Certificate {
    pub arena: GameArena,
    pub tree: StrategyTree,
}

pub fn solve_fv_with_certificate(
    a: &GameArena,
    credit: &[Letter],
    opts: &FvOptions,
) -> Result<(FvVerdict, Option<Certificate>)> {
    let opts = FvOptions { track: true, ..opts.clone() };
    match prepare(a, credit, &opts)? {
        Prepared::Group(_) => Ok((solve_fv_with(a, credit, &opts)?, None)),
        Prepared::Pushdown(b) => {
            let s = saturate(&b, &opts)?;
            let verdict = FvVerdict {
                winner: s.winner(),
                rounds: s.rounds,
                cayley_nodes: s.cayley().node_count(),
                radius: s.cayley().radius(),
                states: b.state_count(),
            };
            if verdict.winner == Winner::Exists {
                return Ok((verdict, None));
            }
            let tree = s.extract_forall_certificate(opts.max_certificate_nodes)?;
            Ok((verdict, Some(Certificate { arena: b, tree })))
        }
    }
}
