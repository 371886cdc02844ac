#![allow(dead_code)]

pub mod criteria;
pub mod machines;

use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::Rng;
use valence_core::credits::{for_each_credit, CreditSpace};
use valence_core::{classify, ClassKind, GameArena, Letter, Owner, PresentationGraph, Sign};

/// A random legal graph of the pushdown-over-group class: one or two
/// independent stack vertices and up to two group generators, each either
/// commuting with everything or with no stack vertex.
pub fn random_pd_graph(rng: &mut impl Rng) -> PresentationGraph {
    let stacks = rng.gen_range(1..=2);
    let groups = rng.gen_range(0..=2);
    let mut verts: Vec<(String, bool)> = Vec::new();
    for i in 0..stacks {
        verts.push((["a", "b"][i].to_string(), false));
    }
    let mut outer = Vec::new();
    for i in 0..groups {
        verts.push((["g", "h"][i].to_string(), true));
        outer.push(rng.gen_bool(0.3));
    }
    let mut edges: Vec<(String, String)> = Vec::new();
    for i in 0..groups {
        let gi = &verts[stacks + i].0;
        if outer[i] {
            for (v, _) in verts.iter().take(stacks) {
                edges.push((gi.clone(), v.clone()));
            }
        }
        for j in i + 1..groups {
            if outer[i] || outer[j] || rng.gen_bool(0.5) {
                edges.push((gi.clone(), verts[stacks + j].0.clone()));
            }
        }
    }
    let vs: Vec<(&str, bool)> = verts.iter().map(|(n, l)| (n.as_str(), *l)).collect();
    let es: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let g = PresentationGraph::from_parts(&vs, &es).unwrap();
    assert_eq!(classify(&g).kind(), ClassKind::PdGrpTimesGrp);
    g
}

pub fn random_letter(g: &PresentationGraph, rng: &mut impl Rng) -> Letter {
    let v = rng.gen_range(0..g.len());
    Letter { vertex: v as u16, sign: if rng.gen_bool(0.5) { Sign::Pos } else { Sign::Neg } }
}

pub fn random_word(g: &PresentationGraph, rng: &mut impl Rng, max_len: usize) -> Vec<Letter> {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| random_letter(g, rng)).collect()
}

/// A random arena with at most `max_states` states and `max_trans`
/// transitions whose labels have at most two letters.
pub fn random_arena(g: PresentationGraph, rng: &mut impl Rng, max_states: usize, max_trans: usize) -> GameArena {
    let mut a = GameArena::new(g);
    let n = rng.gen_range(1..=max_states);
    for i in 0..n {
        let owner = if rng.gen_bool(0.5) { Owner::Exists } else { Owner::Forall };
        a.add_state(&format!("q{i}"), owner).unwrap();
    }
    let m = rng.gen_range(1..=max_trans);
    for _ in 0..m {
        let from = rng.gen_range(0..n);
        let to = rng.gen_range(0..n);
        let label = random_word(a.graph(), rng, 2);
        a.add_transition(from, label, to);
    }
    a
}

pub fn random_pd_arena(rng: &mut impl Rng) -> GameArena {
    let g = random_pd_graph(rng);
    random_arena(g, rng, 4, 8)
}

/// A random credit: random letters, sometimes made right-invertible by
/// dropping negative stack letters.
pub fn random_credit(g: &PresentationGraph, rng: &mut impl Rng, max_len: usize) -> Vec<Letter> {
    let mut w = random_word(g, rng, max_len);
    if rng.gen_bool(0.7) {
        w.retain(|l| g.is_looped(l.v()) || l.sign == Sign::Pos);
    }
    w.shuffle(rng);
    w
}

/// A random arena over `{a}` or `{a, g}` (g looped) with at most three
/// states, five transitions and single-letter labels.
pub fn tiny_arena(rng: &mut impl Rng) -> GameArena {
    let g = if rng.gen_bool(0.5) {
        PresentationGraph::from_parts(&[("a", false)], &[]).unwrap()
    } else {
        PresentationGraph::from_parts(&[("a", false), ("g", true)], &[]).unwrap()
    };
    let a = random_arena(g, rng, 3, 5);
    let mut b = GameArena::new(a.graph().clone());
    for s in a.states() {
        b.add_state(&s.name, s.owner).unwrap();
    }
    for t in a.transitions() {
        b.add_transition(t.from, t.label.iter().copied().take(1).collect(), t.to);
    }
    b
}

/// Number of credits in the space, counting stops just past `cap`.
pub fn space_size(g: &PresentationGraph, space: CreditSpace, cap: usize) -> usize {
    let mut n = 0;
    for_each_credit(g, space, |_| {
        n += 1;
        if n > cap {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    n
}
