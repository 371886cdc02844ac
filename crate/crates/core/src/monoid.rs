//! Graph monoids: letters, reduced canonical traces, right-invertibility and
//! balls in the Cayley graph of the group part.
//!
//! Relations: `x x̄ = ε` for every vertex, `x̄ x = ε` when `x` is looped, and
//! letters on adjacent vertices commute (all sign combinations).

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Neg,
    Pos,
}

/// A generator `v` or its formal right inverse `v̄`.
///
/// Ordered by vertex index, then negative before positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub vertex: u16,
    pub sign: Sign,
}

impl Letter {
    pub fn pos(vertex: usize) -> Letter {
        Letter { vertex: vertex as u16, sign: Sign::Pos }
    }

    pub fn neg(vertex: usize) -> Letter {
        Letter { vertex: vertex as u16, sign: Sign::Neg }
    }

    pub fn v(self) -> usize {
        self.vertex as usize
    }

    pub fn is_neg(self) -> bool {
        self.sign == Sign::Neg
    }

    pub fn inverse(self) -> Letter {
        Letter {
            vertex: self.vertex,
            sign: match self.sign {
                Sign::Neg => Sign::Pos,
                Sign::Pos => Sign::Neg,
            },
        }
    }

    /// Dense index `2v` for `v̄`, `2v + 1` for `v`.
    pub fn index(self) -> usize {
        2 * self.v() + (self.sign == Sign::Pos) as usize
    }

    pub fn from_index(i: usize) -> Letter {
        if i % 2 == 1 {
            Letter::pos(i / 2)
        } else {
            Letter::neg(i / 2)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct VertexJson {
    name: String,
    #[serde(default)]
    looped: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<VertexJson>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

/// Undirected graph with per-vertex loop flags.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct PresentationGraph {
    names: Vec<String>,
    looped: Vec<bool>,
    adj: Vec<Vec<bool>>,
}

impl TryFrom<GraphJson> for PresentationGraph {
    type Error = Error;

    fn try_from(j: GraphJson) -> Result<Self> {
        let mut g = PresentationGraph::new();
        for v in &j.vertices {
            g.add_vertex(&v.name, v.looped)?;
        }
        for (u, v) in &j.edges {
            let ui = g.require(u)?;
            let vi = g.require(v)?;
            g.add_edge(ui, vi)?;
        }
        Ok(g)
    }
}

impl From<PresentationGraph> for GraphJson {
    fn from(g: PresentationGraph) -> GraphJson {
        let vertices = (0..g.len())
            .map(|v| VertexJson { name: g.names[v].clone(), looped: g.looped[v] })
            .collect();
        let mut edges = Vec::new();
        for u in 0..g.len() {
            for v in u + 1..g.len() {
                if g.adj[u][v] {
                    edges.push((g.names[u].clone(), g.names[v].clone()));
                }
            }
        }
        GraphJson { vertices, edges }
    }
}

impl PresentationGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from `(name, looped)` pairs and edges given by name.
    pub fn from_parts(vertices: &[(&str, bool)], edges: &[(&str, &str)]) -> Result<Self> {
        let mut g = PresentationGraph::new();
        for (name, looped) in vertices {
            g.add_vertex(name, *looped)?;
        }
        for (u, v) in edges {
            let ui = g.require(u)?;
            let vi = g.require(v)?;
            g.add_edge(ui, vi)?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self, name: &str, looped: bool) -> Result<usize> {
        if self.index_of(name).is_some() {
            return Err(Error::Input(format!("duplicate vertex `{name}`")));
        }
        if name.is_empty() || name.ends_with('-') || name.contains(char::is_whitespace) {
            return Err(Error::Input(format!("bad vertex name `{name}`")));
        }
        self.names.push(name.to_string());
        self.looped.push(looped);
        for row in &mut self.adj {
            row.push(false);
        }
        self.adj.push(vec![false; self.names.len()]);
        Ok(self.names.len() - 1)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u == v {
            return Err(Error::Input(format!(
                "edge on `{}` to itself; use the looped flag",
                self.names[u]
            )));
        }
        self.adj[u][v] = true;
        self.adj[v][u] = true;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn is_looped(&self, v: usize) -> bool {
        self.looped[v]
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u][v]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name).ok_or_else(|| Error::Input(format!("unknown vertex `{name}`")))
    }

    pub fn unlooped(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| !self.looped[v]).collect()
    }

    pub fn looped_vertices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.looped[v]).collect()
    }

    /// All letters in index order.
    pub fn letters(&self) -> Vec<Letter> {
        (0..2 * self.len()).map(Letter::from_index).collect()
    }

    /// A vertex name derived from `base` that is not yet used.
    pub fn fresh_name(&self, base: &str) -> String {
        if self.index_of(base).is_none() {
            return base.to_string();
        }
        (1..).map(|k| format!("{base}#{k}")).find(|n| self.index_of(n).is_none()).unwrap()
    }

    /// Induced subgraph on `keep` (in that order) and the old-to-new map.
    pub fn induced(&self, keep: &[usize]) -> (PresentationGraph, Vec<Option<usize>>) {
        let mut map = vec![None; self.len()];
        let mut g = PresentationGraph::new();
        for &v in keep {
            map[v] = Some(g.add_vertex(&self.names[v], self.looped[v]).unwrap());
        }
        for &u in keep {
            for &v in keep {
                if u < v && self.adj[u][v] {
                    g.add_edge(map[u].unwrap(), map[v].unwrap()).unwrap();
                }
            }
        }
        (g, map)
    }

    pub fn check_word(&self, w: &[Letter]) -> Result<()> {
        match w.iter().find(|l| l.v() >= self.len()) {
            Some(l) => Err(Error::Input(format!("unknown vertex index {}", l.vertex))),
            None => Ok(()),
        }
    }

    /// Parses `a` or `a-`.
    pub fn parse_letter(&self, s: &str) -> Result<Letter> {
        match s.strip_suffix('-') {
            Some(base) => Ok(Letter::neg(self.require(base)?)),
            None => Ok(Letter::pos(self.require(s)?)),
        }
    }

    /// Parses a whitespace separated word; `ε` and the empty string are empty.
    pub fn parse_word(&self, s: &str) -> Result<Vec<Letter>> {
        s.split_whitespace()
            .filter(|t| *t != "ε")
            .map(|t| self.parse_letter(t))
            .collect()
    }

    pub fn letter_name(&self, l: Letter) -> String {
        match l.sign {
            Sign::Pos => self.names[l.v()].clone(),
            Sign::Neg => format!("{}-", self.names[l.v()]),
        }
    }

    pub fn word_string(&self, w: &[Letter]) -> String {
        if w.is_empty() {
            return "ε".to_string();
        }
        w.iter().map(|&l| self.letter_name(l)).collect::<Vec<_>>().join(" ")
    }

    pub fn word_names(&self, w: &[Letter]) -> Vec<String> {
        w.iter().map(|&l| self.letter_name(l)).collect()
    }

    fn swappable(&self, x: Letter, y: Letter) -> bool {
        x.vertex != y.vertex && self.adj[x.v()][y.v()]
    }

    /// Appends one letter to an already reduced word, cancelling if possible.
    fn push_reduced(&self, out: &mut Vec<Letter>, x: Letter) {
        let mut k = out.len();
        while k > 0 {
            let y = out[k - 1];
            if y.vertex == x.vertex {
                let cancels = match (y.sign, x.sign) {
                    (Sign::Pos, Sign::Neg) => true,
                    (Sign::Neg, Sign::Pos) => self.looped[x.v()],
                    _ => false,
                };
                if cancels {
                    out.remove(k - 1);
                    return;
                }
                break;
            }
            if !self.adj[y.v()][x.v()] {
                break;
            }
            k -= 1;
        }
        out.push(x);
    }

    /// Lexicographically least linearization of a reduced trace.
    fn canonical(&self, w: Vec<Letter>) -> Vec<Letter> {
        let n = w.len();
        if n < 2 {
            return w;
        }
        let mut blockers = vec![0u32; n];
        for j in 0..n {
            for i in 0..j {
                if !self.swappable(w[i], w[j]) {
                    blockers[j] += 1;
                }
            }
        }
        let mut done = vec![false; n];
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut best: Option<usize> = None;
            for j in 0..n {
                if !done[j] && blockers[j] == 0 && best.is_none_or(|b| w[j] < w[b]) {
                    best = Some(j);
                }
            }
            let b = best.expect("a trace always has a minimal letter");
            done[b] = true;
            out.push(w[b]);
            for j in b + 1..n {
                if !done[j] && !self.swappable(w[b], w[j]) {
                    blockers[j] -= 1;
                }
            }
        }
        out
    }

    pub fn reduce(&self, w: &[Letter]) -> MonoidElement {
        self.multiply(&MonoidElement::identity(), w)
    }

    /// `m · w`, reduced and canonical.
    pub fn multiply(&self, m: &MonoidElement, w: &[Letter]) -> MonoidElement {
        if w.is_empty() {
            return m.clone();
        }
        let mut out = m.trace.clone();
        for &x in w {
            self.push_reduced(&mut out, x);
        }
        MonoidElement { trace: self.canonical(out) }
    }

    pub fn mul(&self, a: &MonoidElement, b: &MonoidElement) -> MonoidElement {
        self.multiply(a, &b.trace)
    }

    /// No negative letter on an unlooped vertex survives reduction.
    pub fn is_right_invertible(&self, m: &MonoidElement) -> bool {
        m.trace.iter().all(|l| !l.is_neg() || self.looped[l.v()])
    }

    /// A word `u` with `m u = ε`, if `m` is right-invertible.
    pub fn right_inverse(&self, m: &MonoidElement) -> Option<Vec<Letter>> {
        if !self.is_right_invertible(m) {
            return None;
        }
        Some(m.trace.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn geodesic_length(&self, m: &MonoidElement) -> Result<usize> {
        match m.trace.iter().find(|l| !self.looped[l.v()]) {
            Some(l) => Err(Error::Domain(format!(
                "geodesic length of an element using unlooped `{}`",
                self.names[l.v()]
            ))),
            None => Ok(m.trace.len()),
        }
    }
}

/// A reduced trace in canonical form. Operations go through the graph.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonoidElement {
    trace: Vec<Letter>,
}

impl MonoidElement {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn trace(&self) -> &[Letter] {
        &self.trace
    }

    pub fn len(&self) -> usize {
        self.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.trace.is_empty()
    }

    /// The element whose canonical word is `trace[from..]`. Suffixes of a
    /// canonical word are canonical.
    pub fn suffix(&self, from: usize) -> MonoidElement {
        MonoidElement { trace: self.trace[from..].to_vec() }
    }
}

pub struct Display<'a>(pub &'a PresentationGraph, pub &'a [Letter]);

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.word_string(self.1))
    }
}

/// Ball of a given radius in the Cayley graph of a graph group, plus an
/// absorbing trap node for everything farther away.
#[derive(Clone, Debug)]
pub struct RestrictedCayley {
    graph: PresentationGraph,
    radius: usize,
    nodes: Vec<MonoidElement>,
    index: HashMap<MonoidElement, u32>,
    letters: usize,
    step: Vec<u32>,
}

impl RestrictedCayley {
    pub const IDENTITY: u32 = 0;

    pub fn build(delta: &PresentationGraph, radius: usize) -> Result<Self> {
        if let Some(v) = (0..delta.len()).find(|&v| !delta.is_looped(v)) {
            return Err(Error::Domain(format!(
                "Cayley ball over unlooped vertex `{}`",
                delta.name(v)
            )));
        }
        let letters = 2 * delta.len();
        let mut nodes = vec![MonoidElement::identity()];
        let mut index = HashMap::from([(MonoidElement::identity(), 0u32)]);
        let mut rows: Vec<Vec<Option<u32>>> = vec![vec![None; letters]];
        let mut queue = VecDeque::from([0u32]);
        while let Some(n) = queue.pop_front() {
            for li in 0..letters {
                let next = delta.multiply(&nodes[n as usize], &[Letter::from_index(li)]);
                if next.len() > radius {
                    continue;
                }
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = nodes.len() as u32;
                        index.insert(next.clone(), id);
                        nodes.push(next);
                        rows.push(vec![None; letters]);
                        queue.push_back(id);
                        id
                    }
                };
                rows[n as usize][li] = Some(id);
            }
        }
        let trap = nodes.len() as u32;
        let mut step: Vec<u32> =
            rows.into_iter().flat_map(|r| r.into_iter().map(move |s| s.unwrap_or(trap))).collect();
        step.extend(std::iter::repeat_n(trap, letters));
        Ok(RestrictedCayley { graph: delta.clone(), radius, nodes, index, letters, step })
    }

    pub fn graph(&self) -> &PresentationGraph {
        &self.graph
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn trap(&self) -> u32 {
        self.nodes.len() as u32
    }

    /// Ball nodes plus the trap.
    pub fn node_count(&self) -> usize {
        self.nodes.len() + 1
    }

    pub fn step(&self, node: u32, l: Letter) -> u32 {
        self.step[node as usize * self.letters + l.index()]
    }

    pub fn element(&self, node: u32) -> Option<&MonoidElement> {
        self.nodes.get(node as usize)
    }

    pub fn node_of(&self, m: &MonoidElement) -> Option<u32> {
        self.index.get(m).copied()
    }
}
