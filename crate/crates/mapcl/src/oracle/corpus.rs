use crate::sat::CompleteSpec;
use crate::syntax::*;
use rand::seq::SliceRandom;
use rand::Rng;

/// A spec with one or two vertices and at most `max_slots` edge slots,
/// at most two per ordered vertex pair.
pub fn random_spec(rng: &mut impl Rng, max_slots: usize) -> CompleteSpec {
    let n = rng.gen_range(1..=2);
    let mut spec = CompleteSpec { vertices: (1..=n).map(|i| format!("x{i}")).collect(), ..CompleteSpec::default() };
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    pairs.shuffle(rng);
    let target = rng.gen_range(1..=max_slots);
    for (i, j) in pairs {
        let m = rng.gen_range(0..=2).min(target - spec.slots.len());
        for h in 1..=m {
            spec.slots.push((i, j, format!("s{}{}{h}", i + 1, j + 1)));
        }
    }
    spec
}

struct Scope {
    vertices: Vec<String>,
    segs: Vec<String>,
    slots: Vec<String>,
    reals: Vec<String>,
    fresh: usize,
}

impl Scope {
    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }
}

fn pick<'a>(rng: &mut impl Rng, xs: &'a [String]) -> &'a str {
    &xs[rng.gen_range(0..xs.len())]
}

fn small(rng: &mut impl Rng) -> f64 {
    [1.0, 2.0, 3.0, 4.0][rng.gen_range(0..4)]
}

fn seg_term(rng: &mut impl Rng, sc: &Scope) -> SegTerm {
    match rng.gen_range(0..4) {
        0 if !sc.slots.is_empty() => seg_var(pick(rng, &sc.slots)),
        1 if !sc.segs.is_empty() => seg_var(pick(rng, &sc.segs)),
        2 if !sc.segs.is_empty() && !sc.slots.is_empty() => concat(seg_var(pick(rng, &sc.slots)), seg_var(pick(rng, &sc.segs))),
        _ => interval(num(small(rng))),
    }
}

fn arith_term(rng: &mut impl Rng, sc: &Scope) -> Arith {
    if !sc.reals.is_empty() && rng.gen_bool(0.5) {
        real_var(pick(rng, &sc.reals))
    } else {
        num(small(rng) - 1.0)
    }
}

fn pos_term(rng: &mut impl Rng, sc: &Scope) -> PosTerm {
    let x = Ref::var(pick(rng, &sc.vertices));
    if sc.slots.is_empty() || rng.gen_bool(0.6) {
        PosTerm::Vertex(x)
    } else {
        let s = seg_var(pick(rng, &sc.slots));
        let t = num([0.5, 1.0, 2.0][rng.gen_range(0..3)]);
        if rng.gen_bool(0.5) {
            PosTerm::Fwd(x, s, t)
        } else {
            PosTerm::Bwd(t, s, x)
        }
    }
}

fn atom(rng: &mut impl Rng, sc: &Scope) -> Formula {
    match rng.gen_range(0..9) {
        0 | 1 => edge(pick(rng, &sc.vertices), seg_term(rng, sc), pick(rng, &sc.vertices)),
        2 => Formula::LenEq(seg_term(rng, sc), arith_term(rng, sc)),
        3 => Formula::SegEq(seg_term(rng, sc), seg_term(rng, sc)),
        4 => Formula::Ride(pos_term(rng, sc), seg_term(rng, sc), pos_term(rng, sc)),
        5 => Formula::Dist(pos_term(rng, sc), pos_term(rng, sc), arith_term(rng, sc)),
        6 => Formula::PosEq(pos_term(rng, sc), pos_term(rng, sc)),
        7 if !sc.reals.is_empty() => Formula::Cmp(CmpOp::Le, real_var(pick(rng, &sc.reals)), num(small(rng))),
        _ => {
            if rng.gen_bool(0.5) {
                Formula::True
            } else {
                Formula::False
            }
        }
    }
}

fn formula(rng: &mut impl Rng, sc: &mut Scope, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return atom(rng, sc);
    }
    let d = depth - 1;
    match rng.gen_range(0..10) {
        0 => not(formula(rng, sc, d)),
        1 => and(formula(rng, sc, d), formula(rng, sc, d)),
        2 => or(formula(rng, sc, d), formula(rng, sc, d)),
        3 | 4 => coalesce(formula(rng, sc, d), formula(rng, sc, d)),
        5 => closure(formula(rng, sc, d)),
        6 | 7 => {
            let x = sc.name("v");
            sc.vertices.push(x.clone());
            let body = formula(rng, sc, d);
            sc.vertices.pop();
            if rng.gen_bool(0.7) {
                exists(Sort::Vertex, &x, body)
            } else {
                forall(Sort::Vertex, &x, body)
            }
        }
        8 => {
            let z = sc.name("z");
            sc.segs.push(z.clone());
            let body = formula(rng, sc, d);
            sc.segs.pop();
            exists(Sort::Seg, &z, body)
        }
        _ => {
            let k = sc.name("k");
            sc.reals.push(k.clone());
            let body = formula(rng, sc, d);
            sc.reals.pop();
            exists(Sort::Real, &k, body)
        }
    }
}

/// A random formula of depth at most `depth` whose free variables are the
/// spec's vertices and slots.
pub fn random_mcl(rng: &mut impl Rng, spec: &CompleteSpec, depth: usize) -> Formula {
    let mut sc = Scope {
        vertices: spec.vertices.clone(),
        segs: Vec::new(),
        slots: spec.slots.iter().map(|s| s.2.clone()).collect(),
        reals: Vec::new(),
        fresh: 0,
    };
    formula(rng, &mut sc, depth)
}

fn sl_seg(rng: &mut impl Rng, segs: &[String], depth: usize) -> SegTerm {
    match rng.gen_range(0..4) {
        0 if depth > 0 => concat(sl_seg(rng, segs, depth - 1), sl_seg(rng, segs, depth - 1)),
        1 => interval(num(rng.gen_range(0..=3) as f64)),
        _ => seg_var(pick(rng, segs)),
    }
}

fn sl_arith(rng: &mut impl Rng, reals: &[String]) -> Arith {
    let coeff = rng.gen_range(-2..=2) as f64;
    let term = mul(num(coeff), real_var(pick(rng, reals)));
    match rng.gen_range(0..3) {
        0 => term,
        1 => add(term, num(rng.gen_range(-3..=3) as f64)),
        _ => add(term, mul(num(rng.gen_range(-2..=2) as f64), real_var(pick(rng, reals)))),
    }
}

fn sl_atom(rng: &mut impl Rng, reals: &[String], segs: &[String]) -> Formula {
    let op = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt][rng.gen_range(0..5)];
    match rng.gen_range(0..4) {
        0 | 1 => Formula::Cmp(op, sl_arith(rng, reals), num(rng.gen_range(-4..=4) as f64)),
        2 => Formula::LenEq(sl_seg(rng, segs, 1), sl_arith(rng, reals)),
        _ => Formula::SegEq(sl_seg(rng, segs, 1), sl_seg(rng, segs, 1)),
    }
}

fn sl_formula(rng: &mut impl Rng, reals: &[String], segs: &[String], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return sl_atom(rng, reals, segs);
    }
    match rng.gen_range(0..3) {
        0 => not(sl_formula(rng, reals, segs, depth - 1)),
        1 => and(sl_formula(rng, reals, segs, depth - 1), sl_formula(rng, reals, segs, depth - 1)),
        _ => or(sl_formula(rng, reals, segs, depth - 1), sl_formula(rng, reals, segs, depth - 1)),
    }
}

/// A random quantifier-free segment-logic formula over interval segments,
/// with its real and segment variables (at most six in total).
pub fn random_sl(rng: &mut impl Rng) -> (Formula, Vec<String>, Vec<String>) {
    let nr = rng.gen_range(1..=3);
    let ns = rng.gen_range(1..=3);
    let reals: Vec<String> = (1..=nr).map(|i| format!("k{i}")).collect();
    let segs: Vec<String> = (1..=ns).map(|i| format!("z{i}")).collect();
    let f = sl_formula(rng, &reals, &segs, 3);
    (f, reals, segs)
}
