//! Unknown initial credit games over pushdown-over-group storages.
//!
//! The existential player first builds a credit in a guessing arena whose
//! pushes are challenged by the universal player against a family of
//! counting automata bounding the number of stack letters, then plays the
//! original game on top of it. The decision is a single fixed credit solve.

use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

use log::{debug, warn};
use serde::Serialize;

use crate::arena::{
    eliminate_dead_ends, normalize_letters, pushes_to_universal, strip_group_factor,
    to_single_stack_letter, GameArena, Owner,
};
use crate::classify::{classify, ClassLabel};
use crate::credits::{for_each_credit, CreditSpace};
use crate::error::{Error, Result};
use crate::monoid::{Letter, PresentationGraph, Sign};
use crate::solver_fv::{group_game_winner, level_bound, solve_fv_with, FvOptions, FvVerdict};
use crate::Winner;

/// Counter state of one counting automaton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Count {
    Fresh,
    Used,
    Dead,
}

/// Accepts the words over `γ_1..γ_m` with at most one `γ_index` between any
/// two letters of smaller index (word ends count as such letters).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountingDfa {
    pub index: usize,
    pub m: usize,
}

impl CountingDfa {
    /// Letters are numbered from 1.
    pub fn step(&self, s: Count, letter: usize) -> Count {
        use std::cmp::Ordering::*;
        match (letter.cmp(&self.index), s) {
            (_, Count::Dead) => Count::Dead,
            (Less, _) => Count::Fresh,
            (Equal, Count::Fresh) => Count::Used,
            (Equal, _) => Count::Dead,
            (Greater, s) => s,
        }
    }

    pub fn accepts(&self, w: &[usize]) -> bool {
        w.iter().fold(Count::Fresh, |s, &l| self.step(s, l)) != Count::Dead
    }
}

pub fn build_counting_dfas(m: usize) -> Vec<CountingDfa> {
    (1..=m).map(|index| CountingDfa { index, m }).collect()
}

pub fn accepts_all(dfas: &[CountingDfa], w: &[usize]) -> bool {
    dfas.iter().all(|d| d.accepts(w))
}

/// Longest words accepted by every automaton: their length, how many there
/// are, and the lexicographically least one. The live part of the product
/// is acyclic: every letter raises the state vector in a lexicographic order.
pub fn longest_common_words(dfas: &[CountingDfa]) -> (usize, u128, Vec<usize>) {
    let m = dfas.len();
    type Key = Vec<Count>;
    fn go(
        dfas: &[CountingDfa],
        m: usize,
        s: &Key,
        memo: &mut HashMap<Key, (usize, u128, Option<usize>)>,
    ) -> (usize, u128, Option<usize>) {
        if let Some(r) = memo.get(s) {
            return *r;
        }
        let mut best = (0usize, 1u128, None);
        for l in 1..=m {
            let t: Key = dfas.iter().zip(s).map(|(d, &c)| d.step(c, l)).collect();
            if t.contains(&Count::Dead) {
                continue;
            }
            let (len, count, _) = go(dfas, m, &t, memo);
            match (len + 1).cmp(&best.0) {
                std::cmp::Ordering::Greater => best = (len + 1, count, Some(l)),
                std::cmp::Ordering::Equal => best.1 += count,
                std::cmp::Ordering::Less => {}
            }
        }
        memo.insert(s.clone(), best);
        best
    }
    let mut memo = HashMap::new();
    let start: Key = vec![Count::Fresh; m];
    let (len, count, _) = go(dfas, m, &start, &mut memo);
    let mut word = Vec::new();
    let mut s = start;
    while let Some(&(_, _, Some(l))) = memo.get(&s) {
        word.push(l);
        s = dfas.iter().zip(&s).map(|(d, &c)| d.step(c, l)).collect();
    }
    (len, count, word)
}

/// Bound on winning credits from the state count of the normalized arena:
/// fewer than `2^n` stack letters, segments of geodesic length at most `n`.
pub fn credit_bound(a: &GameArena) -> (usize, usize) {
    let n = a.state_count();
    (pow2_minus_one(n), n)
}

fn pow2_minus_one(n: usize) -> usize {
    1usize.checked_shl(n as u32).map_or(usize::MAX, |p| p - 1)
}

/// Shape parameters of the guessing arena: `m` counting automata (so fewer
/// than `2^m` guessed stack letters) and `slack` group letters per segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GuessParams {
    pub m: usize,
    pub slack: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ParamPolicy {
    /// `m` is the number of states entered by pops (at least one), the
    /// slack is the level bound of the normalized arena.
    #[default]
    Refined,
    /// Both are the state count of the normalized arena.
    StateCount,
    Fixed(GuessParams),
}

#[derive(Clone, Debug)]
pub struct UvOptions {
    pub params: ParamPolicy,
    pub fv: FvOptions,
    /// Search for a witness credit when the existential player wins.
    pub witness: bool,
    /// Give up the witness search after this many candidates.
    pub max_witness_candidates: usize,
    /// Encode several stack letters into one before guessing.
    pub single_stack_letter: bool,
}

impl Default for UvOptions {
    fn default() -> Self {
        UvOptions {
            params: ParamPolicy::default(),
            fv: FvOptions::default(),
            witness: true,
            max_witness_candidates: 200_000,
            single_stack_letter: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UvVerdict {
    pub winner: Winner,
    #[serde(skip)]
    pub witness: Option<Vec<Letter>>,
    pub params: Option<GuessParams>,
    pub guess_states: usize,
    pub fv: Option<FvVerdict>,
}

/// Normalizes a pushdown-over-group arena for guessing: outer group letters
/// erased, single-letter labels, pushes at universal states, no dead ends.
pub fn preprocess(a: &GameArena, single_stack_letter: bool) -> Result<GameArena> {
    let label = classify(a.graph());
    let mut b = strip_group_factor(a, &label)?;
    if single_stack_letter {
        b = to_single_stack_letter(&b)?;
    }
    b = normalize_letters(&b);
    b = pushes_to_universal(&b)?;
    Ok(eliminate_dead_ends(&b))
}

pub fn guess_params(b: &GameArena, policy: ParamPolicy) -> Result<GuessParams> {
    Ok(match policy {
        ParamPolicy::Fixed(p) => p,
        ParamPolicy::StateCount => GuessParams { m: b.state_count(), slack: b.state_count() },
        ParamPolicy::Refined => {
            let g = b.graph();
            let mut targets: Vec<usize> = b
                .transitions()
                .iter()
                .filter(|t| t.label.iter().any(|l| l.sign == Sign::Neg && !g.is_looped(l.v())))
                .map(|t| t.to)
                .collect();
            targets.sort();
            targets.dedup();
            GuessParams { m: targets.len().max(1), slack: level_bound(b)? }
        }
    })
}

/// The guessing arena built on top of a preprocessed arena.
pub struct GuessArena {
    pub arena: GameArena,
    pub params: GuessParams,
}

struct Builder {
    a: GameArena,
    pairs: HashSet<(usize, usize)>,
}

impl Builder {
    fn state(&mut self, base: &str, owner: Owner) -> usize {
        self.a.add_fresh_state(base, owner)
    }

    /// Adds a transition, routing it through a fresh state when the pair
    /// is already connected.
    fn link(&mut self, from: usize, label: Vec<Letter>, to: usize) {
        if self.pairs.insert((from, to)) {
            self.a.add_transition(from, label, to);
            return;
        }
        let base = format!("{}~{}", self.a.name(from), self.a.name(to));
        let mid = self.state(&base, self.a.owner(from));
        self.pairs.insert((from, mid));
        self.pairs.insert((mid, to));
        self.a.add_transition(from, label, mid);
        self.a.add_transition(mid, vec![], to);
    }

    /// A chain of `len` existential steps, each applying one group letter or
    /// nothing; returns its first and last state.
    fn slack_chain(&mut self, base: &str, len: usize, group: &[usize]) -> (usize, usize) {
        let first = self.state(base, Owner::Exists);
        let mut cur = first;
        for _ in 0..len {
            let next = self.state(base, Owner::Exists);
            self.link(cur, vec![], next);
            for &v in group {
                self.link(cur, vec![Letter::pos(v)], next);
                self.link(cur, vec![Letter::neg(v)], next);
            }
            cur = next;
        }
        (first, cur)
    }
}

/// Builds the guessing arena. Every stack letter `γ` of `b` becomes `m`
/// copies `γ_1..γ_m`; a fresh bottom letter `γ_0` closes the credit.
pub fn build_guess_arena(b: &GameArena, params: GuessParams) -> Result<GuessArena> {
    let g = b.graph();
    let stack = g.unlooped();
    let group = g.looped_vertices();
    for &x in &stack {
        if let Some(&y) = stack.iter().chain(&group).find(|&&y| y != x && g.adjacent(x, y)) {
            return Err(Error::Domain(format!("stack letter `{}` commutes with `{}`", g.name(x), g.name(y))));
        }
    }
    let m = params.m;
    if m == 0 && !stack.is_empty() {
        return Err(Error::Domain("guessing needs at least one counting automaton".into()));
    }
    // vertices: group part, then bottom, then copies per stack letter
    let mut ng = PresentationGraph::new();
    let mut gmap = HashMap::new();
    for &v in &group {
        gmap.insert(v, ng.add_vertex(g.name(v), true)?);
    }
    for (i, &x) in group.iter().enumerate() {
        for &y in &group[i + 1..] {
            if g.adjacent(x, y) {
                ng.add_edge(gmap[&x], gmap[&y])?;
            }
        }
    }
    let bottom_name = ng.fresh_name("bottom");
    let bottom = ng.add_vertex(&bottom_name, false)?;
    let mut copies: HashMap<usize, Vec<usize>> = HashMap::new();
    for &x in &stack {
        let mut cs = Vec::new();
        for i in 1..=m {
            let name = ng.fresh_name(&format!("{}_{i}", g.name(x)));
            cs.push(ng.add_vertex(&name, false)?);
        }
        copies.insert(x, cs);
    }
    let gv: Vec<usize> = group.iter().map(|v| gmap[v]).collect();
    let mut bl = Builder { a: GameArena::new(ng), pairs: HashSet::new() };

    // the relabeled game keeps the original state names
    for q in 0..b.state_count() {
        bl.a.add_state(b.name(q), b.owner(q))?;
    }
    let s = params.slack;
    let init = bl.state("guess", Owner::Forall);
    let smiley = bl.state("smiley", Owner::Exists);
    bl.link(smiley, vec![], smiley);
    let sadey = bl.state("sadey", Owner::Exists);
    bl.link(sadey, vec![Letter::neg(bottom)], sadey);
    let (p0, ps) = bl.slack_chain("p", s, &gv);
    bl.link(init, vec![Letter::pos(bottom)], p0);
    bl.link(ps, vec![], b.initial());
    if m > 0 {
        let ch = bl.state("ch", Owner::Forall);
        for &x in &stack {
            for &c in &copies[&x] {
                let mid = bl.state("push", Owner::Forall);
                bl.link(ps, vec![], mid);
                bl.link(mid, vec![Letter::pos(c)], ch);
            }
        }
        bl.link(ch, vec![], p0);
        for i in 1..=m {
            // pop-back check against the i-th counting automaton
            let fresh = bl.slack_chain(&format!("d{i}"), s, &gv);
            let used = bl.slack_chain(&format!("d{i}u"), s, &gv);
            bl.link(ch, vec![], fresh.0);
            for (from, is_used) in [(fresh.1, false), (used.1, true)] {
                bl.link(from, vec![Letter::neg(bottom)], smiley);
                for &x in &stack {
                    for (j, &c) in copies[&x].iter().enumerate() {
                        let j = j + 1;
                        let to = match j.cmp(&i) {
                            std::cmp::Ordering::Less => fresh.0,
                            std::cmp::Ordering::Equal if is_used => sadey,
                            std::cmp::Ordering::Equal => used.0,
                            std::cmp::Ordering::Greater if is_used => used.0,
                            std::cmp::Ordering::Greater => fresh.0,
                        };
                        bl.link(from, vec![Letter::neg(c)], to);
                    }
                }
            }
        }
    }
    for t in b.transitions() {
        let (p, r) = (t.from, t.to);
        let l = match t.label.as_slice() {
            [] => {
                bl.link(p, vec![], r);
                continue;
            }
            [l] => *l,
            _ => return Err(Error::Domain("guessing needs single-letter labels".into())),
        };
        if g.is_looped(l.v()) {
            bl.link(p, vec![Letter { vertex: gmap[&l.v()] as u16, sign: l.sign }], r);
            continue;
        }
        let cs = copies[&l.v()].clone();
        match (l.sign, b.owner(p)) {
            (Sign::Pos, _) => {
                for c in cs {
                    bl.link(p, vec![Letter::pos(c)], r);
                }
            }
            (Sign::Neg, Owner::Exists) => {
                for c in cs {
                    bl.link(p, vec![Letter::neg(c)], r);
                }
            }
            (Sign::Neg, Owner::Forall) => {
                let pick = bl.state(&format!("{}'", b.name(p)), Owner::Exists);
                bl.link(p, vec![], pick);
                for c in cs {
                    bl.link(pick, vec![Letter::neg(c)], r);
                }
            }
        }
    }
    bl.a.set_initial(init);
    debug!("guessing arena with {} states, params {:?}", bl.a.state_count(), params);
    Ok(GuessArena { arena: bl.a, params })
}

/// Smallest credit over the original graph (in enumeration order) with
/// which the existential player wins, within the given shape.
pub fn find_witness(a: &GameArena, space: CreditSpace, opts: &UvOptions) -> Result<Option<Vec<Letter>>> {
    let mut tried = 0usize;
    let mut failure = None;
    let found = for_each_credit(a.graph(), space, |w| {
        tried += 1;
        if tried > opts.max_witness_candidates {
            return ControlFlow::Break(None);
        }
        match solve_fv_with(a, w, &opts.fv) {
            Ok(v) if v.winner == Winner::Exists => ControlFlow::Break(Some(w.to_vec())),
            Ok(_) => ControlFlow::Continue(()),
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(None)
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    match found {
        Some(Some(w)) => Ok(Some(w)),
        Some(None) => {
            warn!("witness search stopped after {} candidates", opts.max_witness_candidates);
            Ok(None)
        }
        None => Ok(None),
    }
}

pub fn solve_uv(a: &GameArena) -> Result<UvVerdict> {
    solve_uv_with(a, &UvOptions::default())
}

pub fn solve_uv_with(a: &GameArena, opts: &UvOptions) -> Result<UvVerdict> {
    let label = classify(a.graph());
    match &label {
        ClassLabel::Undecidable { .. } | ClassLabel::VassTimesGrp { .. } => {
            return Err(Error::RoutedToOracle(format!("{}; no exact procedure", label.describe(a.graph()))));
        }
        ClassLabel::Grp => {
            // every storage is valid, so the credit never matters
            let winner = group_game_winner(a);
            let witness = (winner == Winner::Exists).then(Vec::new);
            return Ok(UvVerdict { winner, witness, params: None, guess_states: 0, fv: None });
        }
        ClassLabel::PdGrpTimesGrp { .. } => {}
    }
    let b = preprocess(a, opts.single_stack_letter)?;
    let params = guess_params(&b, opts.params)?;
    let guess = build_guess_arena(&b, params)?;
    let fv = solve_fv_with(&guess.arena, &[], &opts.fv)?;
    let mut witness = None;
    if fv.winner == Winner::Exists && opts.witness {
        let max_pushes = pow2_minus_one(params.m);
        let space = CreditSpace { max_pushes, max_group_len: params.slack };
        witness = find_witness(a, space, opts)?;
        if witness.is_none() {
            warn!(
                "no witness credit with at most {max_pushes} stack letters and segments of length {}",
                params.slack
            );
        }
    }
    Ok(UvVerdict { winner: fv.winner, witness, params: Some(params), guess_states: guess.arena.state_count(), fv: Some(fv) })
}

/// Whether the existential player wins with some credit, by the guessing
/// arena with the given shape parameters and otherwise default options.
pub fn solve_uv_params(a: &GameArena, policy: ParamPolicy) -> Result<Winner> {
    let opts = UvOptions { params: policy, witness: false, ..UvOptions::default() };
    Ok(solve_uv_with(a, &opts)?.winner)
}
