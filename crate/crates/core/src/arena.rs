//! Game arenas over a presentation graph and the winner-preserving
//! normalizations the solvers expect.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::ClassLabel;
use crate::error::{Error, Result};
use crate::monoid::{Letter, MonoidElement, PresentationGraph, Sign};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Owner {
    #[serde(rename = "E")]
    Exists,
    #[serde(rename = "A")]
    Forall,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub name: String,
    pub owner: Owner,
    /// Free-form provenance, e.g. which machine transition produced a gadget.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub label: Vec<Letter>,
    pub to: usize,
}

/// A configuration `(q, x)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: usize,
    pub storage: MonoidElement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    DuplicatePair { from: String, to: String },
    DeadEnd { state: String },
    UnknownVertex { from: String, to: String, index: usize },
    NoStates,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::DuplicatePair { from, to } => write!(f, "more than one transition {from} -> {to}"),
            Diagnostic::DeadEnd { state } => write!(f, "state {state} has no outgoing transition"),
            Diagnostic::UnknownVertex { from, to, index } => {
                write!(f, "transition {from} -> {to} uses unknown vertex #{index}")
            }
            Diagnostic::NoStates => write!(f, "arena has no states"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GameArena {
    graph: PresentationGraph,
    states: Vec<State>,
    names: HashMap<String, usize>,
    transitions: Vec<Transition>,
    initial: usize,
}

impl GameArena {
    pub fn new(graph: PresentationGraph) -> Self {
        GameArena { graph, ..Default::default() }
    }

    pub fn graph(&self) -> &PresentationGraph {
        &self.graph
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn owner(&self, q: usize) -> Owner {
        self.states[q].owner
    }

    pub fn name(&self, q: usize) -> &str {
        &self.states[q].name
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn set_initial(&mut self, q: usize) {
        self.initial = q;
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.names.get(name).copied()
    }

    pub fn add_state(&mut self, name: &str, owner: Owner) -> Result<usize> {
        if self.names.contains_key(name) {
            return Err(Error::Input(format!("duplicate state `{name}`")));
        }
        let id = self.states.len();
        self.names.insert(name.to_string(), id);
        self.states.push(State { name: name.to_string(), owner, note: None });
        Ok(id)
    }

    /// Adds a state named after `base` with the first free `#k` suffix.
    pub fn add_fresh_state(&mut self, base: &str, owner: Owner) -> usize {
        let name = self.fresh_name(base);
        self.add_state(&name, owner).expect("fresh name is unused")
    }

    pub fn fresh_name(&self, base: &str) -> String {
        let root = base.split('#').next().unwrap_or(base);
        (1..).map(|k| format!("{root}#{k}")).find(|n| !self.names.contains_key(n)).unwrap()
    }

    pub fn set_note(&mut self, q: usize, note: impl Into<String>) {
        self.states[q].note = Some(note.into());
    }

    pub fn add_transition(&mut self, from: usize, label: Vec<Letter>, to: usize) {
        self.transitions.push(Transition { from, label, to });
    }

    /// Adds a transition, or routes it through a fresh intermediate state
    /// (owned like `from`) when `from` already has a transition to `to`.
    pub fn add_transition_routed(&mut self, from: usize, label: Vec<Letter>, to: usize) {
        if !self.transitions.iter().any(|t| t.from == from && t.to == to) {
            self.add_transition(from, label, to);
            return;
        }
        let base = self.states[from].name.clone();
        let mid = self.add_fresh_state(&base, self.states[from].owner);
        self.add_transition(from, label, mid);
        self.add_transition(mid, vec![], to);
    }

    pub fn set_owner(&mut self, q: usize, owner: Owner) {
        self.states[q].owner = owner;
    }

    pub fn replace_graph(&mut self, graph: PresentationGraph) {
        self.graph = graph;
    }

    /// Outgoing transition indices per state.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.states.len()];
        for (i, t) in self.transitions.iter().enumerate() {
            out[t.from].push(i);
        }
        out
    }

    pub fn dead_ends(&self) -> Vec<usize> {
        let out = self.out_edges();
        (0..self.states.len()).filter(|&q| out[q].is_empty()).collect()
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Diagnostic>> {
        let mut diags = Vec::new();
        if self.states.is_empty() {
            diags.push(Diagnostic::NoStates);
            return Err(diags);
        }
        let mut seen = HashSet::new();
        for t in &self.transitions {
            let (from, to) = (self.name(t.from).to_string(), self.name(t.to).to_string());
            if !seen.insert((t.from, t.to)) {
                diags.push(Diagnostic::DuplicatePair { from: from.clone(), to: to.clone() });
            }
            if let Some(l) = t.label.iter().find(|l| l.v() >= self.graph.len()) {
                diags.push(Diagnostic::UnknownVertex { from, to, index: l.v() });
            }
        }
        for q in self.dead_ends() {
            diags.push(Diagnostic::DeadEnd { state: self.name(q).to_string() });
        }
        if diags.is_empty() {
            Ok(())
        } else {
            Err(diags)
        }
    }

    /// Same states and transitions over another graph, letters rewritten by `f`.
    pub fn relabel(&self, graph: PresentationGraph, f: impl Fn(Letter) -> Vec<Letter>) -> GameArena {
        let mut out = self.clone();
        out.graph = graph;
        for t in &mut out.transitions {
            t.label = t.label.iter().flat_map(|&l| f(l)).collect();
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ArenaJson::from(self)).expect("arena serializes")
    }

    pub fn from_json_str(s: &str) -> Result<GameArena> {
        let j: ArenaJson = serde_json::from_str(s).map_err(|e| Error::Input(e.to_string()))?;
        GameArena::try_from(j)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct StateJson {
    name: String,
    owner: Owner,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TransitionJson {
    from: String,
    #[serde(default)]
    label: Vec<String>,
    to: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ArenaJson {
    graph: PresentationGraph,
    states: Vec<StateJson>,
    transitions: Vec<TransitionJson>,
    initial: String,
}

impl From<&GameArena> for ArenaJson {
    fn from(a: &GameArena) -> ArenaJson {
        ArenaJson {
            graph: a.graph.clone(),
            states: a
                .states
                .iter()
                .map(|s| StateJson { name: s.name.clone(), owner: s.owner, note: s.note.clone() })
                .collect(),
            transitions: a
                .transitions
                .iter()
                .map(|t| TransitionJson {
                    from: a.name(t.from).to_string(),
                    label: a.graph.word_names(&t.label),
                    to: a.name(t.to).to_string(),
                })
                .collect(),
            initial: a.states.get(a.initial).map(|s| s.name.clone()).unwrap_or_default(),
        }
    }
}

impl TryFrom<ArenaJson> for GameArena {
    type Error = Error;

    fn try_from(j: ArenaJson) -> Result<GameArena> {
        let mut a = GameArena::new(j.graph);
        for s in &j.states {
            let q = a.add_state(&s.name, s.owner)?;
            a.states[q].note = s.note.clone();
        }
        let state = |a: &GameArena, n: &str| {
            a.state_index(n).ok_or_else(|| Error::Input(format!("unknown state `{n}`")))
        };
        for t in &j.transitions {
            let from = state(&a, &t.from)?;
            let to = state(&a, &t.to)?;
            let label = t
                .label
                .iter()
                .filter(|s| s.as_str() != "ε")
                .map(|s| a.graph.parse_letter(s))
                .collect::<Result<Vec<_>>>()?;
            a.add_transition(from, label, to);
        }
        a.initial = state(&a, &j.initial)?;
        Ok(a)
    }
}

impl Serialize for GameArena {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ArenaJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for GameArena {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ArenaJson::deserialize(d)?;
        GameArena::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Gives every dead end an always-eventually-invalid self-loop `ū` on an
/// unlooped vertex `u`. Over an all-looped graph a fresh isolated unlooped
/// vertex is adjoined for this purpose.
pub fn eliminate_dead_ends(a: &GameArena) -> GameArena {
    let dead = a.dead_ends();
    if dead.is_empty() {
        return a.clone();
    }
    let mut out = a.clone();
    let u = match a.graph.unlooped().first() {
        Some(&u) => u,
        None => {
            let mut g = a.graph.clone();
            let name = g.fresh_name("sink");
            let u = g.add_vertex(&name, false).expect("fresh vertex");
            out.graph = g;
            u
        }
    };
    for q in dead {
        out.add_transition(q, vec![Letter::neg(u)], q);
    }
    out
}

/// Splits multi-letter labels into chains through fresh states that share
/// the owner of the source.
pub fn normalize_letters(a: &GameArena) -> GameArena {
    if a.transitions.iter().all(|t| t.label.len() <= 1) {
        return a.clone();
    }
    let mut out = a.clone();
    out.transitions.clear();
    for t in &a.transitions {
        if t.label.len() <= 1 {
            out.transitions.push(t.clone());
            continue;
        }
        let owner = a.owner(t.from);
        let base = a.name(t.from).to_string();
        let mut cur = t.from;
        for (i, &l) in t.label.iter().enumerate() {
            let next = if i + 1 == t.label.len() { t.to } else { out.add_fresh_state(&base, owner) };
            out.add_transition(cur, vec![l], next);
            cur = next;
        }
    }
    out
}

/// Prefixes the arena with a fresh initial state that applies `w`.
pub fn encode_initial_credit(a: &GameArena, w: &[Letter]) -> GameArena {
    if w.is_empty() {
        return a.clone();
    }
    let mut out = a.clone();
    let base = format!("{}_init", a.name(a.initial));
    let s = out.add_fresh_state(&base, Owner::Exists);
    out.add_transition(s, w.to_vec(), a.initial);
    out.initial = s;
    out
}

fn is_push(g: &PresentationGraph, l: Letter) -> bool {
    l.sign == Sign::Pos && !g.is_looped(l.v())
}

/// Moves every push of an existential state behind a fresh universal state.
pub fn pushes_to_universal(a: &GameArena) -> Result<GameArena> {
    let mut out = a.clone();
    out.transitions.clear();
    for t in &a.transitions {
        let pushes = t.label.iter().any(|&l| is_push(&a.graph, l));
        if a.owner(t.from) != Owner::Exists || !pushes {
            out.transitions.push(t.clone());
            continue;
        }
        if t.label.len() != 1 {
            return Err(Error::Domain(format!(
                "push inside multi-letter label at `{}`; normalize letters first",
                a.name(t.from)
            )));
        }
        let r = out.add_fresh_state(a.name(t.from), Owner::Forall);
        out.add_transition(t.from, vec![], r);
        out.add_transition(r, t.label.clone(), t.to);
    }
    Ok(out)
}

fn require_pd_shape(g: &PresentationGraph) -> Result<()> {
    let u = g.unlooped();
    for (i, &x) in u.iter().enumerate() {
        if let Some(&y) = u[i + 1..].iter().find(|&&y| g.adjacent(x, y)) {
            return Err(Error::Domain(format!(
                "unlooped `{}` and `{}` are adjacent",
                g.name(x),
                g.name(y)
            )));
        }
        if let Some(y) = (0..g.len()).find(|&y| g.is_looped(y) && g.adjacent(x, y)) {
            return Err(Error::Domain(format!(
                "unlooped `{}` is adjacent to looped `{}`",
                g.name(x),
                g.name(y)
            )));
        }
    }
    Ok(())
}

/// Encodes the `i`-th stack letter as `γ^i g γ^i` over the first unlooped
/// vertex `γ` and a looped generator `g`; pops use the barred mirror word.
pub fn to_single_stack_letter(a: &GameArena) -> Result<GameArena> {
    let g = &a.graph;
    require_pd_shape(g)?;
    let unlooped = g.unlooped();
    if unlooped.len() <= 1 {
        return Ok(a.clone());
    }
    let looped = g.looped_vertices();
    let mut keep = vec![unlooped[0]];
    keep.extend(&looped);
    let (mut ng, map) = g.induced(&keep);
    let gen = match looped.first() {
        Some(&v) => map[v].unwrap(),
        None => {
            let name = ng.fresh_name("g");
            ng.add_vertex(&name, true)?
        }
    };
    let gamma = map[unlooped[0]].unwrap();
    let rank: HashMap<usize, usize> = unlooped.iter().enumerate().map(|(i, &v)| (v, i + 1)).collect();
    Ok(a.relabel(ng, |l| match rank.get(&l.v()) {
        None => vec![Letter { vertex: map[l.v()].unwrap() as u16, sign: l.sign }],
        Some(&i) => {
            let (c, h) = match l.sign {
                Sign::Pos => (Letter::pos(gamma), Letter::pos(gen)),
                Sign::Neg => (Letter::neg(gamma), Letter::neg(gen)),
            };
            let mut w = vec![c; i];
            w.push(h);
            w.extend(std::iter::repeat_n(c, i));
            w
        }
    }))
}

/// Erases the letters of the outer group factor `X`.
pub fn strip_group_factor(a: &GameArena, label: &ClassLabel) -> Result<GameArena> {
    let x: Vec<usize> = match label {
        ClassLabel::PdGrpTimesGrp { x, .. } => x.clone(),
        ClassLabel::Grp => (0..a.graph.len()).collect(),
        _ => return Err(Error::Domain("no PD(Grp)xGrp decomposition to strip".into())),
    };
    if x.is_empty() {
        return Ok(a.clone());
    }
    let keep: Vec<usize> = (0..a.graph.len()).filter(|v| !x.contains(v)).collect();
    let (ng, map) = a.graph.induced(&keep);
    Ok(a.relabel(ng, |l| match map[l.v()] {
        Some(v) => vec![Letter { vertex: v as u16, sign: l.sign }],
        None => vec![],
    }))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: existential states as circles, universal as boxes.
pub fn to_dot(a: &GameArena) -> String {
    let mut s = String::from("digraph arena {\n  rankdir=LR;\n");
    if !a.states.is_empty() {
        let _ = writeln!(s, "  __start [shape=point];\n  __start -> \"{}\";", dot_escape(a.name(a.initial)));
    }
    for st in &a.states {
        let shape = match st.owner {
            Owner::Exists => "circle",
            Owner::Forall => "box",
        };
        let _ = writeln!(s, "  \"{}\" [shape={shape}];", dot_escape(&st.name));
    }
    for t in &a.transitions {
        let label = if t.label.is_empty() {
            "ε".to_string()
        } else {
            t.label
                .iter()
                .map(|&l| match l.sign {
                    Sign::Pos => a.graph.name(l.v()).to_string(),
                    Sign::Neg => format!("{}\u{0305}", a.graph.name(l.v())),
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(
            s,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            dot_escape(a.name(t.from)),
            dot_escape(a.name(t.to)),
            dot_escape(&label)
        );
    }
    s.push_str("}\n");
    s
}
