//! Decidability classification of presentation graphs.
//!
//! A graph is legal iff it avoids four induced three-vertex patterns; legal
//! graphs decompose as a group, a VASS times a group, or a pushdown over a
//! group times a group.

use serde::Serialize;

use crate::monoid::PresentationGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pattern {
    /// `a` isolated in the triple, edge `b-c`, `b` unlooped, `c` looped.
    I,
    /// `a` isolated in the triple, edge `b-c`, both unlooped.
    II,
    /// Induced path `a-b-c`, all unlooped.
    III,
    /// Induced path `a-b-c`, `a`,`b` unlooped, `c` looped.
    IV,
}

impl Pattern {
    pub fn roman(self) -> &'static str {
        match self {
            Pattern::I => "i",
            Pattern::II => "ii",
            Pattern::III => "iii",
            Pattern::IV => "iv",
        }
    }

    fn matches(self, g: &PresentationGraph, a: usize, b: usize, c: usize) -> bool {
        let l = |v| g.is_looped(v);
        match self {
            Pattern::I | Pattern::II => {
                let base = !g.adjacent(a, b) && !g.adjacent(a, c) && g.adjacent(b, c) && !l(b);
                base && (l(c) == (self == Pattern::I))
            }
            Pattern::III | Pattern::IV => {
                let path = g.adjacent(a, b) && g.adjacent(b, c) && !g.adjacent(a, c);
                path && !l(a) && !l(b) && (l(c) == (self == Pattern::IV))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClassKind {
    Grp,
    VassTimesGrp,
    PdGrpTimesGrp,
    Undecidable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum ClassLabel {
    /// No unlooped vertex.
    Grp,
    /// `u` is an unlooped clique; every looped vertex is adjacent to all of `u`.
    VassTimesGrp { u: Vec<usize>, group: Vec<usize> },
    /// `u` independent unlooped; `y` looped, independent from `u`;
    /// `x` looped and adjacent to every vertex outside `x`.
    PdGrpTimesGrp { u: Vec<usize>, y: Vec<usize>, x: Vec<usize> },
    Undecidable { pattern: Pattern, triple: [usize; 3] },
}

impl ClassLabel {
    pub fn kind(&self) -> ClassKind {
        match self {
            ClassLabel::Grp => ClassKind::Grp,
            ClassLabel::VassTimesGrp { .. } => ClassKind::VassTimesGrp,
            ClassLabel::PdGrpTimesGrp { .. } => ClassKind::PdGrpTimesGrp,
            ClassLabel::Undecidable { .. } => ClassKind::Undecidable,
        }
    }

    pub fn is_legal(&self) -> bool {
        self.kind() != ClassKind::Undecidable
    }

    /// Which procedure handles this class.
    pub fn route(&self) -> &'static str {
        match self.kind() {
            ClassKind::Grp | ClassKind::PdGrpTimesGrp => "solver",
            ClassKind::VassTimesGrp | ClassKind::Undecidable => "oracle",
        }
    }

    pub fn describe(&self, g: &PresentationGraph) -> String {
        let names = |vs: &[usize]| {
            let v: Vec<&str> = vs.iter().map(|&v| g.name(v)).collect();
            format!("{{{}}}", v.join(","))
        };
        match self {
            ClassLabel::Grp => "Grp".to_string(),
            ClassLabel::VassTimesGrp { u, group } => {
                format!("VassTimesGrp U={} group={}", names(u), names(group))
            }
            ClassLabel::PdGrpTimesGrp { u, y, x } => {
                format!("PdGrpTimesGrp U={} Y={} X={}", names(u), names(y), names(x))
            }
            ClassLabel::Undecidable { pattern, triple } => format!(
                "Undecidable pattern ({}) a={} b={} c={}",
                pattern.roman(),
                g.name(triple[0]),
                g.name(triple[1]),
                g.name(triple[2])
            ),
        }
    }
}

const ROLES: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
const PATTERNS: [Pattern; 4] = [Pattern::I, Pattern::II, Pattern::III, Pattern::IV];

/// First illegal pattern, scanning vertex sets `i<j<k` lexicographically,
/// then patterns in order, then role assignments.
pub fn find_illegal(g: &PresentationGraph) -> Option<(Pattern, [usize; 3])> {
    let n = g.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let t = [i, j, k];
                for p in PATTERNS {
                    for r in ROLES {
                        let (a, b, c) = (t[r[0]], t[r[1]], t[r[2]]);
                        if p.matches(g, a, b, c) {
                            return Some((p, [a, b, c]));
                        }
                    }
                }
            }
        }
    }
    None
}

pub fn classify(g: &PresentationGraph) -> ClassLabel {
    if let Some((pattern, triple)) = find_illegal(g) {
        return ClassLabel::Undecidable { pattern, triple };
    }
    let u = g.unlooped();
    let looped = g.looped_vertices();
    if u.is_empty() {
        return ClassLabel::Grp;
    }
    let clique = u.iter().all(|&a| u.iter().all(|&b| a == b || g.adjacent(a, b)));
    if clique && u.len() >= 2 {
        assert!(
            looped.iter().all(|&x| u.iter().all(|&a| g.adjacent(a, x))),
            "legal graph with a looped vertex not adjacent to the unlooped clique"
        );
        return ClassLabel::VassTimesGrp { u, group: looped };
    }
    let (x, y): (Vec<usize>, Vec<usize>) =
        looped.iter().partition(|&&v| u.iter().any(|&a| g.adjacent(a, v)));
    assert!(
        x.iter().all(|&v| (0..g.len()).all(|w| x.contains(&w) || g.adjacent(v, w))),
        "legal graph with an outer group vertex not adjacent to everything"
    );
    assert!(
        u.iter().all(|&a| u.iter().all(|&b| a == b || !g.adjacent(a, b))),
        "legal graph whose unlooped vertices are neither a clique nor independent"
    );
    ClassLabel::PdGrpTimesGrp { u, y, x }
}
