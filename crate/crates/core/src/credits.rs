//! Enumeration of stack-shaped initial credits `w_{r+1} γ w_r … γ w_1`,
//! shortest first.

use std::ops::ControlFlow;

use crate::monoid::{Letter, PresentationGraph, RestrictedCayley};

/// Bounds on the credit shape: at most `max_pushes` stack letters and
/// segments of geodesic length at most `max_group_len`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CreditSpace {
    pub max_pushes: usize,
    pub max_group_len: usize,
}

/// Looped vertices that do not commute with some unlooped vertex. Letters
/// on the other looped vertices never influence validity.
pub fn stacked_group_vertices(g: &PresentationGraph) -> Vec<usize> {
    let u = g.unlooped();
    g.looped_vertices().into_iter().filter(|&v| u.iter().any(|&a| !g.adjacent(a, v))).collect()
}

/// Group elements over `verts`, bucketed by geodesic length, as words over `g`.
fn segments_by_length(g: &PresentationGraph, verts: &[usize], max_len: usize) -> Vec<Vec<Vec<Letter>>> {
    let (delta, _) = g.induced(verts);
    let cay = RestrictedCayley::build(&delta, max_len).expect("looped vertices only");
    let mut buckets = vec![Vec::new(); max_len + 1];
    for n in 0..cay.node_count() as u32 - 1 {
        let e = cay.element(n).unwrap();
        let w: Vec<Letter> =
            e.trace().iter().map(|l| Letter { vertex: verts[l.v()] as u16, sign: l.sign }).collect();
        buckets[w.len()].push(w);
    }
    buckets
}

/// Calls `f` on every credit in the space, in order of total length and,
/// within a length, in a fixed deterministic order.
pub fn for_each_credit<B>(
    g: &PresentationGraph,
    space: CreditSpace,
    mut f: impl FnMut(&[Letter]) -> ControlFlow<B>,
) -> Option<B> {
    let stack = g.unlooped();
    let max_pushes = if stack.is_empty() { 0 } else { space.max_pushes };
    let mut segs = segments_by_length(g, &stacked_group_vertices(g), space.max_group_len);
    while segs.len() > 1 && segs.last().is_some_and(|b| b.is_empty()) {
        segs.pop();
    }
    let max_len = segs.len() - 1;
    let max_total = max_pushes + (max_pushes + 1) * max_len;
    for total in 0..=max_total {
        for r in 0..=max_pushes.min(total) {
            let mut lens = vec![0usize; r + 1];
            let mut word = Vec::new();
            if let ControlFlow::Break(b) =
                compositions(&mut lens, 0, total - r, max_len, &mut |lens| {
                    fill(lens, 0, &segs, &stack, &mut word, &mut f)
                })
            {
                return Some(b);
            }
        }
    }
    None
}

fn compositions<B>(
    lens: &mut Vec<usize>,
    i: usize,
    left: usize,
    cap: usize,
    f: &mut impl FnMut(&[usize]) -> ControlFlow<B>,
) -> ControlFlow<B> {
    if i + 1 == lens.len() {
        if left > cap {
            return ControlFlow::Continue(());
        }
        lens[i] = left;
        return f(lens);
    }
    for l in 0..=left.min(cap) {
        lens[i] = l;
        compositions(lens, i + 1, left - l, cap, f)?;
    }
    ControlFlow::Continue(())
}

fn fill<B>(
    lens: &[usize],
    i: usize,
    segs: &[Vec<Vec<Letter>>],
    stack: &[usize],
    word: &mut Vec<Letter>,
    f: &mut impl FnMut(&[Letter]) -> ControlFlow<B>,
) -> ControlFlow<B> {
    if i == lens.len() {
        return f(word);
    }
    let mark = word.len();
    for seg in &segs[lens[i]] {
        word.truncate(mark);
        word.extend_from_slice(seg);
        if i + 1 == lens.len() {
            f(word)?;
            continue;
        }
        let mark2 = word.len();
        for &s in stack {
            word.truncate(mark2);
            word.push(Letter::pos(s));
            fill(lens, i + 1, segs, stack, word, f)?;
        }
    }
    word.truncate(mark);
    ControlFlow::Continue(())
}
