//! Checks behind the acceptance report. Each returns a one-line summary on
//! success and the first problem otherwise; sizes are parameters so the
//! ordinary test targets can run them at a smaller scale.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use valence_core::credits::{stacked_group_vertices, CreditSpace};
use valence_core::oracle::{
    bounded_solve, bounded_solve_rio, decide_uv_by_enumeration, enumerate_uv_credits, Budget, Objective,
    OracleVerdict,
};
use valence_core::reductions::{cm_to_game_i, cm_to_game_ii, cm_to_nontermination_pdzvass};
use valence_core::solver_fv::{prepare, saturate, solve_fv, FvOptions, Prepared};
use valence_core::solver_uv::{
    build_counting_dfas, credit_bound, longest_common_words, preprocess, solve_uv, solve_uv_params, Count,
    CountingDfa, ParamPolicy,
};
use valence_core::{
    classify, find_illegal, ClassLabel, GameArena, Letter, MonoidElement, PresentationGraph, Sign, Winner,
};

use super::machines::{has_infinite_run, machine, DIVERGING, FAILING};

pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn zz_example() -> GameArena {
    GameArena::from_json_str(include_str!("../data/zz_pushdown.json")).unwrap()
}

pub fn zz_pushdown_example() -> Outcome {
    let a = zz_example();
    let g = a.graph();
    let empty = solve_fv(&a, &[]).map_err(|e| e.to_string())?.winner;
    ensure!(empty == Winner::Forall, "empty credit: {empty}");
    let credit = g.parse_word("a y-").unwrap();
    let with = solve_fv(&a, &credit).map_err(|e| e.to_string())?.winner;
    ensure!(with == Winner::Exists, "credit a y-: {with}");
    let uv = solve_uv(&a).map_err(|e| e.to_string())?;
    ensure!(uv.winner == Winner::Exists, "unknown credit: {}", uv.winner);
    let w = uv.witness.ok_or("no witness")?;
    let last = w.iter().rposition(|l| !g.is_looped(l.v())).ok_or("witness without a stack letter")?;
    let top = g.reduce(&w[last + 1..]);
    ensure!(
        g.word_string(&w[..=last]).ends_with('a') && top == g.reduce(&g.parse_word("y-").unwrap()),
        "witness {} has another top segment",
        g.word_string(&w)
    );
    Ok(format!("empty credit A, credit `a y-` E, witness `{}`", g.word_string(&w)))
}

pub fn fv_oracle_differential(instances: usize, credits: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = Budget { max_configs: 3000, max_depth: 40 };
    let (mut certified, mut exists) = (0, 0);
    for _ in 0..instances {
        let a = super::random_pd_arena(&mut rng);
        for _ in 0..credits {
            let credit = super::random_credit(a.graph(), &mut rng, 4);
            let fv = solve_fv(&a, &credit).map_err(|e| e.to_string())?.winner;
            if let Some(w) = bounded_solve_rio(&a, &credit, budget).winner() {
                certified += 1;
                exists += usize::from(w == Winner::Exists);
                ensure!(
                    w == fv,
                    "solver {fv}, oracle {w} on {} with credit `{}`",
                    a.to_json(),
                    a.graph().word_string(&credit)
                );
            }
        }
    }
    let total = instances * credits;
    ensure!(certified * 10 >= total * 9, "only {certified} of {total} runs certified");
    ensure!(exists * 5 >= certified && exists * 5 <= certified * 4, "unbalanced sample: {exists} E of {certified}");
    Ok(format!("{certified}/{total} certified ({exists} E), 0 disagreements"))
}

fn graph_from_bits(n: usize, loops: u32, edges: u32) -> PresentationGraph {
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let vs: Vec<(&str, bool)> = (0..n).map(|i| (names[i].as_str(), loops >> i & 1 == 1)).collect();
    let mut es = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in i + 1..n {
            if edges >> bit & 1 == 1 {
                es.push((names[i].as_str(), names[j].as_str()));
            }
            bit += 1;
        }
    }
    PresentationGraph::from_parts(&vs, &es).unwrap()
}

fn is_group(g: &PresentationGraph) -> bool {
    (0..g.len()).all(|v| g.is_looped(v))
}

fn is_vass_times_group(g: &PresentationGraph, u: &[usize], looped: &[usize]) -> bool {
    let clique = u.iter().all(|&a| u.iter().all(|&b| a == b || g.adjacent(a, b)));
    !u.is_empty() && clique && looped.iter().all(|&x| u.iter().all(|&a| g.adjacent(a, x)))
}

fn is_pd_times_group(g: &PresentationGraph, u: &[usize], y: &[usize], x: &[usize]) -> bool {
    let n = g.len();
    let independent = u.iter().all(|&a| u.iter().all(|&b| a == b || !g.adjacent(a, b)));
    let y_apart = y.iter().all(|&v| u.iter().all(|&a| !g.adjacent(a, v)));
    let x_joined = x.iter().all(|&v| (0..n).all(|w| x.contains(&w) || g.adjacent(v, w)));
    !u.is_empty() && independent && y_apart && x_joined
}

/// Legality by the structural shapes alone: a group, a VASS times a group,
/// or a pushdown over a group times a group, trying every split of the
/// looped vertices.
fn legal_by_shape(g: &PresentationGraph) -> bool {
    if is_group(g) {
        return true;
    }
    let u = g.unlooped();
    let looped = g.looped_vertices();
    if is_vass_times_group(g, &u, &looped) {
        return true;
    }
    (0u32..1 << looped.len()).any(|mask| {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (i, &v) in looped.iter().enumerate() {
            if mask >> i & 1 == 1 { x.push(v) } else { y.push(v) }
        }
        is_pd_times_group(g, &u, &y, &x)
    })
}

fn label_is_sound(g: &PresentationGraph, label: &ClassLabel) -> bool {
    match label {
        ClassLabel::Grp => is_group(g),
        ClassLabel::VassTimesGrp { u, group } => {
            is_vass_times_group(g, u, group) && u.len() + group.len() == g.len()
        }
        ClassLabel::PdGrpTimesGrp { u, y, x } => {
            is_pd_times_group(g, u, y, x) && u.len() + y.len() + x.len() == g.len()
        }
        ClassLabel::Undecidable { pattern, triple } => find_illegal(g) == Some((*pattern, *triple)),
    }
}

pub fn classification_dichotomy(max_vertices: usize) -> Outcome {
    let mut graphs = 0usize;
    let mut legal = 0usize;
    for n in 0..=max_vertices {
        let pairs = n * n.saturating_sub(1) / 2;
        for loops in 0u32..1 << n {
            for edges in 0u32..1 << pairs {
                let g = graph_from_bits(n, loops, edges);
                let label = classify(&g);
                graphs += 1;
                legal += usize::from(label.is_legal());
                ensure!(
                    label.is_legal() == legal_by_shape(&g),
                    "n={n} loops={loops:b} edges={edges:b}: classify says {}",
                    label.describe(&g)
                );
                ensure!(label_is_sound(&g, &label), "n={n} loops={loops:b} edges={edges:b}: bad decomposition");
                if label.is_legal() && n > 0 {
                    for drop in 0..n {
                        let keep: Vec<usize> = (0..n).filter(|&v| v != drop).collect();
                        let (h, _) = g.induced(&keep);
                        ensure!(classify(&h).is_legal(), "illegal induced subgraph of a legal graph");
                    }
                }
            }
        }
    }
    Ok(format!("{graphs} graphs on at most {max_vertices} vertices, {legal} legal, 0 mismatches"))
}

pub fn saturation_monotone(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = FvOptions { history: true, ..FvOptions::default() };
    let (mut runs, mut max_rounds) = (0, 0);
    for _ in 0..instances {
        let a = super::random_pd_arena(&mut rng);
        let credit = super::random_credit(a.graph(), &mut rng, 3);
        let Prepared::Pushdown(b) = prepare(&a, &credit, &opts).map_err(|e| e.to_string())? else {
            continue;
        };
        let s = saturate(&b, &opts).map_err(|e| e.to_string())?;
        let n = b.state_count() as u32;
        let bound = (n as u128) << n.min(100);
        runs += 1;
        max_rounds = max_rounds.max(s.rounds);
        ensure!(s.is_monotone(), "non-monotone saturation on {}", a.to_json());
        ensure!((s.rounds as u128) <= bound, "{} rounds exceed {bound} on {}", s.rounds, a.to_json());
    }
    Ok(format!("{runs} saturations monotone, at most {max_rounds} rounds"))
}

pub fn credit_bounds(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = Budget { max_configs: 2000, max_depth: 30 };
    let (mut winning, mut outside) = (0, 0);
    for _ in 0..instances {
        let a = super::tiny_arena(&mut rng);
        let b = preprocess(&a, false).map_err(|e| e.to_string())?;
        let (max_pushes, max_group_len) = credit_bound(&b);
        let broad = CreditSpace { max_pushes: 3, max_group_len: max_group_len + 2 };
        if super::space_size(a.graph(), broad, 1500) > 1500 {
            continue;
        }
        let Some(w) = enumerate_uv_credits(&a, broad.max_pushes, broad.max_group_len, budget) else {
            continue;
        };
        winning += 1;
        let pushes = w.iter().filter(|l| !a.graph().is_looped(l.v())).count();
        let within = pushes <= max_pushes && segments(a.graph(), &w).iter().all(|&s| s <= max_group_len);
        if !within {
            outside += 1;
            let bounded =
                enumerate_uv_credits(&a, pushes.min(max_pushes), max_group_len.min(broad.max_group_len), budget);
            ensure!(
                bounded.is_some(),
                "only the credit `{}` wins on {}",
                a.graph().word_string(&w),
                a.to_json()
            );
        }
    }
    ensure!(winning > 0, "no instance with a winning credit");
    Ok(format!("{winning} instances with winning credits, all within the bound ({outside} needed a second search)"))
}

/// Geodesic lengths of the group segments between stack letters.
fn segments(g: &PresentationGraph, w: &[Letter]) -> Vec<usize> {
    w.split(|l| !g.is_looped(l.v())).map(|s| g.reduce(s).len()).collect()
}

pub fn gexp_equivalence(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = Budget { max_configs: 2000, max_depth: 30 };
    let (mut compared, mut exists) = (0, 0);
    for _ in 0..instances {
        let a = super::tiny_arena(&mut rng);
        let b = preprocess(&a, false).map_err(|e| e.to_string())?;
        let (max_pushes, max_group_len) = credit_bound(&b);
        let space = CreditSpace { max_pushes, max_group_len };
        if super::space_size(a.graph(), space, 1500) > 1500 {
            continue;
        }
        let Some(oracle) = decide_uv_by_enumeration(&a, space, budget).winner() else {
            continue;
        };
        compared += 1;
        exists += usize::from(oracle == Winner::Exists);
        for policy in [ParamPolicy::Refined, ParamPolicy::StateCount] {
            let w = solve_uv_params(&a, policy).map_err(|e| e.to_string())?;
            ensure!(w == oracle, "{policy:?}: guessing arena {w}, enumeration {oracle} on {}", a.to_json());
        }
    }
    ensure!(compared * 2 >= instances, "only {compared} of {instances} instances decided");
    Ok(format!("{compared} instances decided ({exists} E), 0 disagreements"))
}

fn live(dfas: &[CountingDfa], s: &[Count]) -> bool {
    !s.contains(&Count::Dead) && dfas.len() == s.len()
}

pub fn counting_dfas(max_m: usize, max_closure_m: usize) -> Outcome {
    for m in 1..=max_m {
        let (len, count, _) = longest_common_words(&build_counting_dfas(m));
        ensure!(len == (1 << m) - 1 && count == 1, "m={m}: {count} longest words of length {len}");
    }
    let mut accepted_total = 0;
    for m in 1..=max_closure_m {
        let dfas = build_counting_dfas(m);
        let limit = 1 << m;
        // every word with a live run, up to one letter past the longest
        let mut stack: Vec<(Vec<usize>, Vec<Count>)> = vec![(Vec::new(), vec![Count::Fresh; m])];
        let mut accepted = HashSet::new();
        while let Some((w, s)) = stack.pop() {
            ensure!(w.len() < limit, "m={m}: accepted word longer than {}", limit - 1);
            accepted.insert(w.clone());
            for l in 1..=m {
                let t: Vec<Count> = dfas.iter().zip(&s).map(|(d, &c)| d.step(c, l)).collect();
                if live(&dfas, &t) {
                    let mut v = w.clone();
                    v.push(l);
                    stack.push((v, t));
                }
            }
        }
        for w in &accepted {
            ensure!(valence_core::solver_uv::accepts_all(&dfas, w), "m={m}: live run not accepted");
            for i in 0..w.len() {
                ensure!(accepted.contains(&w[i..]), "m={m}: suffix of {w:?} rejected");
            }
        }
        accepted_total += accepted.len();
    }
    Ok(format!(
        "unique longest word of length 2^m-1 for m<={max_m}; {accepted_total} accepted words suffix-closed for m<={max_closure_m}"
    ))
}

pub fn big_elements(pairs: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = Budget { max_configs: 20_000, max_depth: 64 };
    let mut checked = 0;
    let mut attempts = 0;
    while checked < pairs {
        attempts += 1;
        ensure!(attempts < pairs * 200, "only {checked} eligible pairs found");
        let a = super::random_pd_arena(&mut rng);
        let Prepared::Pushdown(b) = prepare(&a, &[], &FvOptions::default()).map_err(|e| e.to_string())? else {
            continue;
        };
        let group = stacked_group_vertices(b.graph());
        if group.is_empty() {
            continue;
        }
        let s = saturate(&b, &FvOptions::default()).map_err(|e| e.to_string())?;
        let n = b.state_count();
        for (k, &letter) in s.stack_letters().iter().enumerate() {
            for p in 0..n {
                if s.family(k, p).is_empty() || checked >= pairs {
                    continue;
                }
                let g = big_group_word(b.graph(), &group, n + 1, &mut rng);
                let mut c = b.clone();
                c.set_initial(p);
                let mut credit = vec![Letter::pos(letter)];
                credit.extend(&g);
                let v = bounded_solve_rio(&c, &credit, budget);
                ensure!(
                    matches!(v, OracleVerdict::ForallWinsCertified { .. }),
                    "{v:?} at {} with `{}` on {}",
                    b.name(p),
                    b.graph().word_string(&credit),
                    b.to_json()
                );
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} eligible pairs with geodesic length > |Q| all certified for the universal player"))
}

/// A random group element of geodesic length at least `min_len`.
fn big_group_word(g: &PresentationGraph, verts: &[usize], min_len: usize, rng: &mut impl Rng) -> Vec<Letter> {
    let mut e = MonoidElement::identity();
    while e.len() < min_len {
        let v = verts[rng.gen_range(0..verts.len())];
        let l = if rng.gen_bool(0.5) { Letter::pos(v) } else { Letter::neg(v) };
        e = g.multiply(&e, &[l]);
    }
    e.trace().to_vec()
}

pub fn reduction_fidelity() -> Outcome {
    let budget = Budget::default();
    let mut runs = 0;
    for (json, expect_run) in DIVERGING.iter().map(|m| (m, true)).chain(FAILING.iter().map(|m| (m, false))) {
        let m = machine(json);
        let truth = has_infinite_run(&m, 16).ok_or("simulator bound exceeded")?;
        ensure!(truth == expect_run, "simulator disagrees with the corpus label of {json}");
        let want = if truth { Winner::Exists } else { Winner::Forall };
        for (target, a) in [
            ("i", cm_to_game_i(&m)),
            ("ii", cm_to_game_ii(&m, false)),
            ("ii looped", cm_to_game_ii(&m, true)),
        ] {
            let a = a.map_err(|e| e.to_string())?;
            ensure!(a.validate().is_ok(), "invalid arena for target {target}");
            let got = bounded_solve_rio(&a, &[], budget);
            ensure!(got.winner() == Some(want), "target {target}: {got:?}, expected {want} for {json}");
            runs += 1;
        }
    }
    let a = cm_to_nontermination_pdzvass(&machine(DIVERGING[1])).map_err(|e| e.to_string())?;
    let nt = bounded_solve(&a, &[], budget, Objective::NonTermination).winner();
    let rio = bounded_solve(&a, &[], budget, Objective::Rio).winner();
    ensure!(
        nt == Some(Winner::Exists) && rio == Some(Winner::Forall),
        "integer counter witness: non-termination {nt:?}, viability {rio:?}"
    );
    Ok(format!("{runs} compiled games match run existence; integer counter witness E under non-termination, A under viability"))
}

/// Cancels one pair `x … x̄` (or `x̄ … x` for looped `x`) whose letters in
/// between all commute with `x`, chosen at random.
fn cancel_somewhere(g: &PresentationGraph, w: &mut Vec<Letter>, rng: &mut impl Rng) -> bool {
    let mut pairs = Vec::new();
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            let (x, y) = (w[i], w[j]);
            if x.vertex == y.vertex {
                let cancels = x.sign == Sign::Pos && y.sign == Sign::Neg
                    || x.sign == Sign::Neg && y.sign == Sign::Pos && g.is_looped(x.v());
                if cancels {
                    pairs.push((i, j));
                }
                break;
            }
            if !g.adjacent(x.v(), y.v()) {
                break;
            }
        }
    }
    if pairs.is_empty() {
        return false;
    }
    let (i, j) = pairs[rng.gen_range(0..pairs.len())];
    w.remove(j);
    w.remove(i);
    true
}

fn small_graphs(max_n: usize) -> Vec<PresentationGraph> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let pairs = n * (n - 1) / 2;
        for loops in 0u32..1 << n {
            for edges in 0u32..1 << pairs {
                out.push(graph_from_bits(n, loops, edges));
            }
        }
    }
    out
}

/// Exhaustive search for right inverses, memoized across queries on one
/// graph: for each element, the largest budget known to be insufficient
/// and the smallest budget known to suffice.
#[derive(Default)]
struct InverseSearch {
    fails_within: HashMap<MonoidElement, usize>,
    succeeds_within: HashMap<MonoidElement, usize>,
}

impl InverseSearch {
    /// Whether some word of length at most `budget` takes `m` to the identity.
    fn reaches_identity(&mut self, g: &PresentationGraph, m: &MonoidElement, budget: usize) -> bool {
        if m.is_identity() {
            return true;
        }
        // each letter changes the trace length by exactly one
        if m.len() > budget {
            return false;
        }
        let budget = budget - (budget - m.len()) % 2;
        if self.succeeds_within.get(m).is_some_and(|&b| b <= budget) {
            return true;
        }
        if self.fails_within.get(m).is_some_and(|&b| b >= budget) {
            return false;
        }
        // a shortest inverse only uses vertices of `m`: other letters could
        // only cancel each other, and deleting such a pair keeps the product
        let used: HashSet<usize> = m.trace().iter().map(|l| l.v()).collect();
        for l in g.letters().into_iter().filter(|l| used.contains(&l.v())) {
            let f = g.multiply(m, &[l]);
            if self.reaches_identity(g, &f, budget - 1) {
                self.succeeds_within.insert(m.clone(), budget);
                return true;
            }
        }
        self.fails_within.insert(m.clone(), budget);
        false
    }
}

pub fn monoid_kernel(samples: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let four = small_graphs(4);
    let three = small_graphs(3);
    let mut searches: Vec<InverseSearch> = three.iter().map(|_| InverseSearch::default()).collect();
    let mut checked = HashSet::new();
    let mut invertible = 0;
    for _ in 0..samples {
        let g = &four[rng.gen_range(0..four.len())];
        let w = super::random_word(g, &mut rng, 12);
        let r = g.reduce(&w);
        let mut v = w.clone();
        while cancel_somewhere(g, &mut v, &mut rng) {}
        ensure!(
            v.len() == r.len() && g.reduce(&v) == r,
            "confluence: `{}` reduces to `{}` but deletions reach `{}`",
            g.word_string(&w),
            g.word_string(r.trace()),
            g.word_string(&v)
        );
        let u = super::random_word(g, &mut rng, 12);
        let mut joined = w.clone();
        joined.extend(&u);
        let split = [r.trace(), g.reduce(&u).trace()].concat();
        ensure!(g.reduce(&joined) == g.reduce(&split), "homomorphism fails on `{}`", g.word_string(&joined));
        if g.is_right_invertible(&r) {
            let inv = g.right_inverse(&r).ok_or("right-invertible element without inverse")?;
            ensure!(g.multiply(&r, &inv).is_identity(), "inverse of `{}` does not cancel", g.word_string(r.trace()));
        }
        if is_group(g) {
            ensure!(g.geodesic_length(&r).map_err(|e| e.to_string())? <= w.len(), "geodesic longer than word");
        }
        let gi = rng.gen_range(0..three.len());
        let h = &three[gi];
        let e = h.reduce(&super::random_word(h, &mut rng, 6));
        let brute = searches[gi].reaches_identity(h, &e, 12);
        if checked.insert((gi, e.clone())) {
            invertible += usize::from(brute);
        }
        ensure!(
            h.is_right_invertible(&e) == brute,
            "right-invertibility of `{}`: criterion {}, search {brute}",
            h.word_string(e.trace()),
            h.is_right_invertible(&e)
        );
    }
    Ok(format!("{samples} random words: confluence, homomorphism, inverses; {} elements checked by search ({invertible} invertible)", checked.len()))
}
