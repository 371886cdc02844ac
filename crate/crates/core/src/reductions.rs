//! Compilers from two-counter machines and pushdown (energy) games into
//! viability games, and back.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::arena::{normalize_letters, GameArena, Owner};
use crate::classify::{find_illegal, Pattern};
use crate::error::{Error, Result};
use crate::monoid::{Letter, PresentationGraph, Sign};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CounterOp {
    Inc,
    Dec,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterTransition {
    pub from: String,
    pub op: CounterOp,
    /// 1 or 2.
    pub counter: u8,
    pub to: String,
}

/// Nondeterministic two-counter machine. Over natural counters a decrement
/// needs a positive counter; a zero test needs a zero counter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterMachine {
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<CounterTransition>,
}

impl CounterMachine {
    pub fn from_json_str(s: &str) -> Result<CounterMachine> {
        let m: CounterMachine = serde_json::from_str(s).map_err(|e| Error::Input(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let known = |s: &str| self.states.iter().any(|x| x == s);
        if !known(&self.initial) {
            return Err(Error::Input(format!("unknown initial state `{}`", self.initial)));
        }
        for t in &self.transitions {
            for s in [&t.from, &t.to] {
                if !known(s) {
                    return Err(Error::Input(format!("unknown state `{s}`")));
                }
            }
            if !(1..=2).contains(&t.counter) {
                return Err(Error::Input(format!("counter {} is not 1 or 2", t.counter)));
            }
        }
        if let Some(s) = self.states.iter().find(|s| !self.transitions.iter().any(|t| &t.from == *s)) {
            return Err(Error::Input(format!("state `{s}` has no transition")));
        }
        Ok(())
    }

    pub fn state_index(&self, s: &str) -> usize {
        self.states.iter().position(|x| x == s).expect("validated state")
    }
}

fn graph(vertices: &[(&str, bool)], edges: &[(&str, &str)]) -> PresentationGraph {
    PresentationGraph::from_parts(vertices, edges).expect("fixed gadget graph")
}

fn word(g: &PresentationGraph, s: &str) -> Vec<Letter> {
    g.parse_word(s).expect("gadget word over the gadget graph")
}

fn describe(t: &CounterTransition) -> String {
    let op = match t.op {
        CounterOp::Inc => "inc",
        CounterOp::Dec => "dec",
        CounterOp::Zero => "zero",
    };
    format!("{op}({}) {} -> {}", t.counter, t.from, t.to)
}

/// Machine states as existential states, a fresh initial state applying
/// `init`, and an existential sink with an empty self-loop.
fn machine_skeleton(m: &CounterMachine, g: PresentationGraph, init: &str) -> Result<(GameArena, Vec<usize>, usize)> {
    m.validate()?;
    let mut a = GameArena::new(g);
    let qs: Vec<usize> = m.states.iter().map(|s| a.add_state(s, Owner::Exists)).collect::<Result<_>>()?;
    let start = a.add_fresh_state("init", Owner::Exists);
    let w = word(a.graph(), init);
    a.add_transition(start, w, qs[m.state_index(&m.initial)]);
    a.set_initial(start);
    let smiley = a.add_fresh_state("smiley", Owner::Exists);
    a.add_transition(smiley, vec![], smiley);
    Ok((a, qs, smiley))
}

/// Universal challenge after `from`: accept and continue to `to`, or send
/// the existential player to a fresh state that must empty the counters
/// with `loops` and then pop `ā b̄` into the sink.
fn challenge(a: &mut GameArena, from: usize, label: &str, to: usize, loops: &[&str], smiley: usize, note: &str) {
    let g = a.graph().clone();
    let base = format!("{}_{}", a.name(from), a.name(to));
    let fa = a.add_fresh_state(&format!("{base}_A"), Owner::Forall);
    let fe = a.add_fresh_state(&format!("{base}_E"), Owner::Exists);
    a.set_note(fa, note);
    a.set_note(fe, note);
    a.add_transition_routed(from, word(&g, label), fa);
    a.add_transition(fa, vec![], to);
    a.add_transition(fa, vec![], fe);
    for l in loops {
        a.add_transition_routed(fe, word(&g, l), fe);
    }
    a.add_transition(fe, word(&g, "a- b-"), smiley);
}

/// Graph (ii): `a` isolated (looped or not), `b-c` unlooped. Counters are
/// the numbers of `b` and `c`; the storage starts as `b a`.
pub fn cm_to_game_ii(m: &CounterMachine, with_loop_on_a: bool) -> Result<GameArena> {
    let g = graph(&[("a", with_loop_on_a), ("b", false), ("c", false)], &[("b", "c")]);
    let (mut a, qs, smiley) = machine_skeleton(m, g, "b a")?;
    for t in &m.transitions {
        let (p, q) = (qs[m.state_index(&t.from)], qs[m.state_index(&t.to)]);
        let letter = if t.counter == 1 { "b" } else { "c" };
        let w = a.graph().parse_word(letter)?;
        match t.op {
            CounterOp::Inc => a.add_transition_routed(p, w, q),
            CounterOp::Dec => a.add_transition_routed(p, vec![w[0].inverse()], q),
            CounterOp::Zero => {
                let depletion = if t.counter == 1 { "c-" } else { "b-" };
                challenge(&mut a, p, "", q, &[depletion], smiley, &describe(t));
            }
        }
    }
    Ok(a)
}

/// Graph (i): `a` isolated and unlooped, `b` unlooped, `c` looped, `b-c`.
/// Counter values `(m1, m2)` are stored as `b a b^(m1+m2) c^m2`.
pub fn cm_to_game_i(m: &CounterMachine) -> Result<GameArena> {
    let g = graph(&[("a", false), ("b", false), ("c", true)], &[("b", "c")]);
    let (mut a, qs, smiley) = machine_skeleton(m, g, "b a")?;
    for t in &m.transitions {
        let (p, q) = (qs[m.state_index(&t.from)], qs[m.state_index(&t.to)]);
        let note = describe(t);
        match (t.op, t.counter) {
            (CounterOp::Inc, 1) => a.add_transition_routed(p, word(a.graph(), "b"), q),
            (CounterOp::Inc, _) => a.add_transition_routed(p, word(a.graph(), "b c"), q),
            (CounterOp::Dec, k) => {
                let label = if k == 1 { "b-" } else { "b- c-" };
                challenge(&mut a, p, label, q, &["b-", "b- c-"], smiley, &note);
            }
            (CounterOp::Zero, k) => {
                let depletion = if k == 1 { "b- c-" } else { "b-" };
                challenge(&mut a, p, "", q, &[depletion], smiley, &note);
            }
        }
    }
    Ok(a)
}

/// Non-termination game over `a` (isolated, unlooped) and the adjacent
/// looped `b0`, `b1`, holding integer counters. Zero tests are challenged
/// by the universal player claiming a positive or a negative counter.
pub fn cm_to_nontermination_pdzvass(m: &CounterMachine) -> Result<GameArena> {
    let g = graph(&[("a", false), ("b0", true), ("b1", true)], &[("b0", "b1")]);
    m.validate()?;
    let mut a = GameArena::new(g);
    let qs: Vec<usize> = m.states.iter().map(|s| a.add_state(s, Owner::Exists)).collect::<Result<_>>()?;
    let start = a.add_fresh_state("init", Owner::Exists);
    let w = word(a.graph(), "a");
    a.add_transition(start, w, qs[m.state_index(&m.initial)]);
    a.set_initial(start);
    let g = a.graph().clone();
    for t in &m.transitions {
        let (p, q) = (qs[m.state_index(&t.from)], qs[m.state_index(&t.to)]);
        let i = t.counter as usize - 1;
        let (bi, bo) = (format!("b{i}"), format!("b{}", 1 - i));
        let gw = |s: &str| word(&g, s);
        match t.op {
            CounterOp::Inc => a.add_transition_routed(p, gw(&bi), q),
            CounterOp::Dec => a.add_transition_routed(p, gw(&format!("{bi}-")), q),
            CounterOp::Zero => {
                let note = describe(t);
                let z = a.add_fresh_state(&format!("z{i}"), Owner::Forall);
                let plus = a.add_fresh_state(&format!("z{i}+"), Owner::Forall);
                let minus = a.add_fresh_state(&format!("z{i}-"), Owner::Forall);
                let d = a.add_fresh_state(&format!("d{i}"), Owner::Forall);
                for s in [z, plus, minus, d] {
                    a.set_note(s, note.clone());
                }
                a.add_transition_routed(p, vec![], z);
                a.add_transition(z, vec![], q);
                a.add_transition(z, gw(&format!("{bi}-")), plus);
                a.add_transition(z, gw(&bi), minus);
                for (s, own) in [(plus, format!("{bi}-")), (minus, bi.clone())] {
                    for l in [own, bo.clone(), format!("{bo}-")] {
                        a.add_transition_routed(s, gw(&l), s);
                    }
                    a.add_transition(s, gw("a-"), d);
                }
                a.add_transition(d, gw("a-"), d);
            }
        }
    }
    Ok(a)
}

/// Graph (iii) path `a-b-c` (all unlooped) to graph (iv) (`c` looped):
/// `c` becomes `c a c` and `c̄` becomes `c̄ ā c̄`.
pub fn relabel_iii_to_iv(a: &GameArena) -> Result<GameArena> {
    let g = a.graph();
    let [va, _, vc] = match find_illegal(g) {
        Some((Pattern::III, t)) if g.len() == 3 => t,
        _ => return Err(Error::Domain("expected the unlooped path on three vertices".into())),
    };
    let mut verts: Vec<(String, bool)> = (0..3).map(|v| (g.name(v).to_string(), g.is_looped(v))).collect();
    verts[vc].1 = true;
    let vs: Vec<(&str, bool)> = verts.iter().map(|(n, l)| (n.as_str(), *l)).collect();
    let mut es = Vec::new();
    for u in 0..3 {
        for v in u + 1..3 {
            if g.adjacent(u, v) {
                es.push((g.name(u), g.name(v)));
            }
        }
    }
    let ng = PresentationGraph::from_parts(&vs, &es)?;
    Ok(a.relabel(ng, |l| {
        if l.v() == vc {
            let x = Letter { vertex: va as u16, sign: l.sign };
            vec![l, x, l]
        } else {
            vec![l]
        }
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdState {
    pub name: String,
    pub owner: Owner,
}

/// `(from, top) → (to, push)`: replaces the top symbol by `push` (last
/// symbol on top) and adds `energy` to the counters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdTransition {
    pub from: usize,
    pub top: u16,
    pub to: usize,
    pub push: Vec<u16>,
    #[serde(default)]
    pub energy: Vec<i8>,
}

/// Pushdown game with `dimension` energy counters starting at zero. Stuck
/// universal states and infinite plays are won by the existential player;
/// stuck existential states and negative energy by the universal player.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushdownGame {
    pub states: Vec<PdState>,
    pub alphabet: Vec<String>,
    pub transitions: Vec<PdTransition>,
    pub initial: usize,
    pub initial_stack: Vec<u16>,
    #[serde(default)]
    pub dimension: usize,
}

/// Pushdown energy games are pushdown games with a positive dimension.
pub type PushdownEnergyGame = PushdownGame;

impl PushdownGame {
    pub fn validate(&self) -> Result<()> {
        let n = self.states.len();
        let k = self.alphabet.len() as u16;
        if self.initial >= n {
            return Err(Error::Input("initial state out of range".into()));
        }
        if self.initial_stack.iter().any(|&s| s >= k) {
            return Err(Error::Input("initial stack symbol out of range".into()));
        }
        for t in &self.transitions {
            if t.from >= n || t.to >= n || t.top >= k || t.push.iter().any(|&s| s >= k) {
                return Err(Error::Input("transition out of range".into()));
            }
            if t.energy.len() != self.dimension || t.energy.iter().any(|e| !(-1..=1).contains(e)) {
                return Err(Error::Input("energy vector must have entries in -1..=1 per dimension".into()));
            }
        }
        Ok(())
    }
}

/// Viability image of a pushdown (energy) game. Stack symbols and a fresh
/// bottom marker are independent unlooped vertices; energy counters are an
/// unlooped clique commuting with them. A universal move is delegated to a
/// fresh existential state that pops the expected symbol, or any other
/// symbol into a winning sink.
pub fn pushdown_game_to_viability(p: &PushdownGame) -> Result<GameArena> {
    p.validate()?;
    let mut g = PresentationGraph::new();
    let mut sym = Vec::new();
    for s in &p.alphabet {
        sym.push(g.add_vertex(s, false)?);
    }
    let bottom_name = g.fresh_name("bottom");
    let bottom = g.add_vertex(&bottom_name, false)?;
    let mut counters = Vec::new();
    for i in 0..p.dimension {
        let name = g.fresh_name(&format!("e{}", i + 1));
        counters.push(g.add_vertex(&name, false)?);
    }
    for (i, &c) in counters.iter().enumerate() {
        for &d in &counters[i + 1..] {
            g.add_edge(c, d)?;
        }
        for &s in sym.iter().chain([&bottom]) {
            g.add_edge(c, s)?;
        }
    }
    let mut a = GameArena::new(g);
    for s in &p.states {
        a.add_state(&s.name, s.owner)?;
    }
    let start = a.add_fresh_state("init", Owner::Exists);
    let mut w = vec![Letter::pos(bottom)];
    w.extend(p.initial_stack.iter().map(|&s| Letter::pos(sym[s as usize])));
    a.add_transition(start, w, p.initial);
    a.set_initial(start);
    let smiley = a.add_fresh_state("smiley", Owner::Exists);
    a.add_transition(smiley, vec![], smiley);
    let label = |t: &PdTransition| -> Vec<Letter> {
        let mut w = vec![Letter::neg(sym[t.top as usize])];
        w.extend(t.push.iter().map(|&s| Letter::pos(sym[s as usize])));
        for (i, &e) in t.energy.iter().enumerate() {
            match e {
                1 => w.push(Letter::pos(counters[i])),
                -1 => w.push(Letter::neg(counters[i])),
                _ => {}
            }
        }
        w
    };
    let mut outgoing = vec![false; p.states.len()];
    for t in &p.transitions {
        outgoing[t.from] = true;
        match p.states[t.from].owner {
            Owner::Exists => a.add_transition_routed(t.from, label(t), t.to),
            Owner::Forall => {
                let pick = a.add_fresh_state(&format!("{}'", p.states[t.from].name), Owner::Exists);
                a.add_transition(t.from, vec![], pick);
                a.add_transition(pick, label(t), t.to);
                let others = sym
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != t.top as usize)
                    .map(|(_, &v)| v)
                    .chain([bottom]);
                for v in others {
                    a.add_transition_routed(pick, vec![Letter::neg(v)], smiley);
                }
            }
        }
    }
    for (q, s) in p.states.iter().enumerate() {
        if outgoing[q] {
            continue;
        }
        match s.owner {
            Owner::Forall => a.add_transition(q, vec![], smiley),
            // a second bottom pop is never valid
            Owner::Exists => a.add_transition(q, vec![Letter::neg(bottom), Letter::neg(bottom)], q),
        }
    }
    Ok(a)
}

pub fn energy_pushdown_to_viability(e: &PushdownEnergyGame) -> Result<GameArena> {
    pushdown_game_to_viability(e)
}

/// Pushdown game of a viability arena over independent unlooped vertices,
/// with a fresh bottom symbol that is never popped. A universal pop is
/// delegated to a fresh existential state, which gets stuck on a wrong top.
pub fn viability_to_pushdown_game(a: &GameArena, credit: &[Letter]) -> Result<PushdownGame> {
    let g = a.graph();
    if let Some(v) = (0..g.len()).find(|&v| g.is_looped(v)) {
        return Err(Error::Domain(format!("looped vertex `{}`", g.name(v))));
    }
    for u in 0..g.len() {
        if let Some(v) = (u + 1..g.len()).find(|&v| g.adjacent(u, v)) {
            return Err(Error::Domain(format!("`{}` and `{}` commute", g.name(u), g.name(v))));
        }
    }
    let b = normalize_letters(a);
    let mut alphabet: Vec<String> = (0..g.len()).map(|v| g.name(v).to_string()).collect();
    let bottom = alphabet.len() as u16;
    alphabet.push(g.fresh_name("bottom"));
    let symbols: Vec<u16> = (0..=bottom).collect();
    // a stuck configuration loses for the existential player, whoever owns it
    let out = b.out_edges();
    let mut states: Vec<PdState> = b
        .states()
        .iter()
        .zip(&out)
        .map(|(s, o)| PdState { name: s.name.clone(), owner: if o.is_empty() { Owner::Exists } else { s.owner } })
        .collect();
    let mut transitions = Vec::new();
    let mut picks: HashMap<usize, usize> = HashMap::new();
    let tr = |from, top, to, push| PdTransition { from, top, to, push, energy: vec![] };
    for t in b.transitions() {
        match t.label.as_slice() {
            [] => transitions.extend(symbols.iter().map(|&x| tr(t.from, x, t.to, vec![x]))),
            [l] if l.sign == Sign::Pos => {
                let s = l.v() as u16;
                transitions.extend(symbols.iter().map(|&x| tr(t.from, x, t.to, vec![x, s])));
            }
            [l] => {
                let s = l.v() as u16;
                let from = match b.owner(t.from) {
                    Owner::Exists => t.from,
                    Owner::Forall => {
                        let pick = states.len();
                        states.push(PdState { name: format!("{}'{}", b.name(t.from), pick), owner: Owner::Exists });
                        picks.insert(pick, t.from);
                        transitions.extend(symbols.iter().map(|&x| tr(t.from, x, pick, vec![x])));
                        pick
                    }
                };
                transitions.push(tr(from, s, t.to, vec![]));
            }
            _ => unreachable!("labels were normalized"),
        }
    }
    let mut initial_stack = vec![bottom];
    let reduced = g.reduce(credit);
    if !g.is_right_invertible(&reduced) {
        return Err(Error::Domain("credit is not right-invertible".into()));
    }
    initial_stack.extend(reduced.trace().iter().map(|l| l.v() as u16));
    Ok(PushdownGame { states, alphabet, transitions, initial: b.initial(), initial_stack, dimension: 0 })
}
