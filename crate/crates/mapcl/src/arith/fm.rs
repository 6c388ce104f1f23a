use super::{Constraint, Linear, Lra, Rel, SatResult, Q};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Upper bound on the number of atoms produced while deciding one formula.
pub const DEFAULT_ATOM_CAP: usize = 1_000_000;

struct Budget {
    used: usize,
    cap: usize,
}

struct OutOfBudget;

impl Budget {
    fn spend(&mut self, n: usize) -> Result<(), OutOfBudget> {
        self.used += n;
        if self.used > self.cap {
            Err(OutOfBudget)
        } else {
            Ok(())
        }
    }
}

/// Decides satisfiability. Free variables are existential; the witness
/// assigns them and every outermost existential variable.
pub fn solve(f: &Lra) -> SatResult {
    solve_with_cap(f, DEFAULT_ATOM_CAP)
}

pub fn solve_with_cap(f: &Lra, cap: usize) -> SatResult {
    let mut budget = Budget { used: 0, cap };
    match decide(f, &mut budget) {
        Ok(Some(witness)) => SatResult::Sat { witness },
        Ok(None) => SatResult::Unsat,
        Err(OutOfBudget) => SatResult::Unknown { reason: format!("more than {cap} atoms") },
    }
}

fn decide(f: &Lra, budget: &mut Budget) -> Result<Option<BTreeMap<String, Q>>, OutOfBudget> {
    let free = f.free_vars();
    let mut renamer = Renamer { used: free.clone(), scopes: HashMap::new() };
    let n = renamer.nnf(f, false);
    let mut report: BTreeSet<String> = free;
    let qf = lift(&n, &mut report, budget)?;
    let mut pending = vec![&qf];
    let mut found = None;
    dfs(&mut pending, &mut Vec::new(), 0, budget, &mut found)?;
    Ok(found.map(|w: BTreeMap<String, Q>| {
        report.iter().map(|v| (v.clone(), w.get(v).cloned().unwrap_or_else(Q::zero))).collect()
    }))
}

fn negate(c: &Constraint) -> Constraint {
    let minus = || c.lin.scale(&-Q::one());
    match c.rel {
        Rel::Le => Constraint { lin: minus(), rel: Rel::Lt },
        Rel::Lt => Constraint { lin: minus(), rel: Rel::Le },
        Rel::Eq => Constraint { lin: c.lin.clone(), rel: Rel::Ne },
        Rel::Ne => Constraint { lin: c.lin.clone(), rel: Rel::Eq },
    }
}

fn rename_lin(lin: &Linear, map: &HashMap<String, Vec<String>>) -> Linear {
    let mut out = Linear::constant(lin.constant.clone());
    for (v, c) in &lin.coeffs {
        let name = map.get(v).and_then(|s| s.last()).unwrap_or(v);
        out = out.add(&Linear::var(name).scale(c));
    }
    out
}

struct Renamer {
    used: BTreeSet<String>,
    scopes: HashMap<String, Vec<String>>,
}

impl Renamer {
    fn fresh(&mut self, v: &str) -> String {
        let mut name = v.to_string();
        let mut k = 0;
        while self.used.contains(&name) {
            k += 1;
            name = format!("{v}'{k}");
        }
        self.used.insert(name.clone());
        name
    }

    /// Negation normal form with every binder given a distinct name.
    fn nnf(&mut self, f: &Lra, neg: bool) -> Lra {
        match f {
            Lra::True => {
                if neg {
                    Lra::False
                } else {
                    Lra::True
                }
            }
            Lra::False => {
                if neg {
                    Lra::True
                } else {
                    Lra::False
                }
            }
            Lra::Atom(c) => {
                let c = Constraint { lin: rename_lin(&c.lin, &self.scopes), rel: c.rel };
                Lra::Atom(if neg { negate(&c) } else { c })
            }
            Lra::Not(a) => self.nnf(a, !neg),
            Lra::And(xs) | Lra::Or(xs) => {
                let items: Vec<Lra> = xs.iter().map(|x| self.nnf(x, neg)).collect();
                if matches!(f, Lra::And(_)) != neg {
                    Lra::and(items)
                } else {
                    Lra::or(items)
                }
            }
            Lra::Exists(v, b) | Lra::Forall(v, b) => {
                let name = self.fresh(v);
                self.scopes.entry(v.clone()).or_default().push(name.clone());
                let body = self.nnf(b, neg);
                self.scopes.get_mut(v).unwrap().pop();
                if matches!(f, Lra::Exists(..)) != neg {
                    Lra::exists(&name, body)
                } else {
                    Lra::forall(&name, body)
                }
            }
        }
    }
}

/// Keeps outermost existentials as free variables and eliminates every other quantifier.
fn lift(f: &Lra, report: &mut BTreeSet<String>, budget: &mut Budget) -> Result<Lra, OutOfBudget> {
    Ok(match f {
        Lra::Exists(v, b) => {
            report.insert(v.clone());
            lift(b, report, budget)?
        }
        Lra::Forall(..) => eliminate_all(f, budget)?,
        Lra::And(xs) => Lra::and(xs.iter().map(|x| lift(x, report, budget)).collect::<Result<_, _>>()?),
        Lra::Or(xs) => Lra::or(xs.iter().map(|x| lift(x, report, budget)).collect::<Result<_, _>>()?),
        _ => f.clone(),
    })
}

/// Quantifier elimination on a negation normal form.
fn eliminate_all(f: &Lra, budget: &mut Budget) -> Result<Lra, OutOfBudget> {
    Ok(match f {
        Lra::Exists(v, b) => {
            let body = eliminate_all(b, budget)?;
            project(v, &body, budget)?
        }
        Lra::Forall(v, b) => {
            let body = eliminate_all(b, budget)?;
            let neg = Renamer { used: BTreeSet::new(), scopes: HashMap::new() }.nnf(&body, true);
            let projected = project(v, &neg, budget)?;
            Renamer { used: BTreeSet::new(), scopes: HashMap::new() }.nnf(&projected, true)
        }
        Lra::And(xs) => Lra::and(xs.iter().map(|x| eliminate_all(x, budget)).collect::<Result<_, _>>()?),
        Lra::Or(xs) => Lra::or(xs.iter().map(|x| eliminate_all(x, budget)).collect::<Result<_, _>>()?),
        _ => f.clone(),
    })
}

/// `∃v. f` for quantifier-free `f` in negation normal form.
fn project(v: &str, f: &Lra, budget: &mut Budget) -> Result<Lra, OutOfBudget> {
    let mut out = Vec::new();
    for conj in dnf(f, budget)? {
        for branch in split_ne(&conj) {
            if let Some(rest) = eliminate_var(v, branch, budget)? {
                out.push(Lra::and(rest.into_iter().map(Lra::Atom).collect()));
            }
        }
    }
    Ok(Lra::or(out))
}

fn dnf(f: &Lra, budget: &mut Budget) -> Result<Vec<Vec<Constraint>>, OutOfBudget> {
    Ok(match f {
        Lra::True => vec![vec![]],
        Lra::False => vec![],
        Lra::Atom(c) => {
            budget.spend(1)?;
            vec![vec![c.clone()]]
        }
        Lra::Or(xs) => {
            let mut out = Vec::new();
            for x in xs {
                out.extend(dnf(x, budget)?);
            }
            out
        }
        Lra::And(xs) => {
            let mut acc = vec![vec![]];
            for x in xs {
                let d = dnf(x, budget)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &d {
                        budget.spend(a.len() + b.len())?;
                        let mut c: Vec<Constraint> = a.clone();
                        c.extend(b.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
        Lra::Not(_) | Lra::Exists(..) | Lra::Forall(..) => unreachable!("quantifier-free normal form expected"),
    })
}

/// Expands each disequality into a choice of strict inequalities.
fn split_ne(conj: &[Constraint]) -> Vec<Vec<Constraint>> {
    let mut out = vec![vec![]];
    for c in conj {
        if c.rel == Rel::Ne {
            let below = Constraint { lin: c.lin.clone(), rel: Rel::Lt };
            let above = Constraint { lin: c.lin.scale(&-Q::one()), rel: Rel::Lt };
            out = out
                .into_iter()
                .flat_map(|b: Vec<Constraint>| {
                    let mut l = b.clone();
                    l.push(below.clone());
                    let mut r = b;
                    r.push(above.clone());
                    [l, r]
                })
                .collect();
        } else {
            for b in &mut out {
                b.push(c.clone());
            }
        }
    }
    out
}

fn normalize(c: Constraint) -> Constraint {
    match c.rel {
        Rel::Eq => {
            let lin = c.lin.normalized();
            let lin = match lin.coeffs.values().next() {
                Some(k) if k.is_negative() => lin.scale(&-Q::one()),
                _ => lin,
            };
            Constraint { lin, rel: Rel::Eq }
        }
        _ => Constraint { lin: c.lin.normalized(), rel: c.rel },
    }
}

/// Removes constant constraints; `None` when one of them is false.
fn prune(cs: Vec<Constraint>) -> Option<BTreeSet<Constraint>> {
    let mut out = BTreeSet::new();
    for c in cs {
        if c.lin.is_constant() {
            if !c.rel.holds(&c.lin.constant) {
                return None;
            }
        } else {
            out.insert(normalize(c));
        }
    }
    Some(out)
}

/// One elimination step; returns the constraints on the remaining variables
/// and those that mentioned `v`.
fn step(
    v: &str,
    cs: BTreeSet<Constraint>,
    budget: &mut Budget,
) -> Result<(Vec<Constraint>, Vec<Constraint>), OutOfBudget> {
    let (with, without): (Vec<Constraint>, Vec<Constraint>) = cs.into_iter().partition(|c| !c.lin.coeff(v).is_zero());
    let mut rest = without;
    if let Some(i) = with.iter().position(|c| c.rel == Rel::Eq) {
        let e = &with[i];
        let k = e.lin.coeff(v);
        let mut def = e.lin.clone();
        def.coeffs.remove(v);
        let def = def.scale(&(-Q::one() / k));
        for (j, c) in with.iter().enumerate() {
            if j != i {
                budget.spend(1)?;
                rest.push(Constraint { lin: c.lin.substitute(v, &def), rel: c.rel });
            }
        }
        return Ok((rest, vec![e.clone()]));
    }
    let (lower, upper): (Vec<&Constraint>, Vec<&Constraint>) = with.iter().partition(|c| c.lin.coeff(v).is_negative());
    for l in &lower {
        for u in &upper {
            budget.spend(1)?;
            let a = -l.lin.coeff(v);
            let b = u.lin.coeff(v);
            let lin = l.lin.scale(&b).add(&u.lin.scale(&a));
            let rel = if l.rel == Rel::Lt || u.rel == Rel::Lt { Rel::Lt } else { Rel::Le };
            rest.push(Constraint { lin, rel });
        }
    }
    Ok((rest, with))
}

fn eliminate_var(v: &str, cs: Vec<Constraint>, budget: &mut Budget) -> Result<Option<Vec<Constraint>>, OutOfBudget> {
    let Some(cs) = prune(cs) else { return Ok(None) };
    let (rest, _) = step(v, cs, budget)?;
    Ok(prune(rest).map(|s| s.into_iter().collect()))
}

/// Feasibility of a conjunction of non-strict, strict and equality constraints, with a witness.
fn feasible(cs: Vec<Constraint>, budget: &mut Budget) -> Result<Option<BTreeMap<String, Q>>, OutOfBudget> {
    let mut history: Vec<(String, Vec<Constraint>)> = Vec::new();
    let Some(mut cur) = prune(cs) else { return Ok(None) };
    loop {
        let mut counts: BTreeMap<&String, usize> = BTreeMap::new();
        for c in &cur {
            for v in c.lin.coeffs.keys() {
                *counts.entry(v).or_default() += 1;
            }
        }
        let Some((v, _)) = counts.iter().min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0))) else { break };
        let v = (*v).clone();
        let (rest, used) = step(&v, cur, budget)?;
        history.push((v, used));
        match prune(rest) {
            Some(next) => cur = next,
            None => return Ok(None),
        }
    }
    let mut assign: BTreeMap<String, Q> = BTreeMap::new();
    for (v, used) in history.iter().rev() {
        let value = pick(v, used, &assign);
        assign.insert(v.clone(), value);
    }
    Ok(Some(assign))
}

fn pick(v: &str, used: &[Constraint], assign: &BTreeMap<String, Q>) -> Q {
    let mut lo: Option<(Q, bool)> = None;
    let mut hi: Option<(Q, bool)> = None;
    for c in used {
        let k = c.lin.coeff(v);
        let mut rest = c.lin.clone();
        rest.coeffs.remove(v);
        let bound = -rest.eval(assign) / &k;
        let strict = c.rel == Rel::Lt;
        match c.rel {
            Rel::Eq => return bound,
            _ if k.is_positive() => {
                if hi.as_ref().is_none_or(|(h, s)| bound < *h || (bound == *h && strict && !s)) {
                    hi = Some((bound, strict));
                }
            }
            _ => {
                if lo.as_ref().is_none_or(|(l, s)| bound > *l || (bound == *l && strict && !s)) {
                    lo = Some((bound, strict));
                }
            }
        }
    }
    match (lo, hi) {
        (Some((l, _)), Some((h, _))) if l == h => l,
        (Some((l, _)), Some((h, _))) => (l + h) / Q::from_integer(2.into()),
        (Some((l, false)), None) => l,
        (Some((l, true)), None) => l + Q::one(),
        (None, Some((h, false))) => h,
        (None, Some((h, true))) => h - Q::one(),
        (None, None) => Q::zero(),
    }
}

/// Depth-first search over the disjunctive normal form of a quantifier-free formula.
/// Before branching on a disjunction the constraints chosen so far are
/// tested for feasibility whenever they grew since the last test
/// (`checked` constraints) on this path.
fn dfs(
    pending: &mut Vec<&Lra>,
    chosen: &mut Vec<Constraint>,
    checked: usize,
    budget: &mut Budget,
    found: &mut Option<BTreeMap<String, Q>>,
) -> Result<(), OutOfBudget> {
    let Some(top) = pending.pop() else {
        if let Some(w) = feasible(chosen.clone(), budget)? {
            *found = Some(w);
        }
        return Ok(());
    };
    match top {
        Lra::True => dfs(pending, chosen, checked, budget, found)?,
        Lra::False => {}
        Lra::Atom(c) => {
            budget.spend(1)?;
            if c.rel == Rel::Ne {
                for lin in [c.lin.clone(), c.lin.scale(&-Q::one())] {
                    chosen.push(Constraint { lin, rel: Rel::Lt });
                    dfs(pending, chosen, checked, budget, found)?;
                    chosen.pop();
                    if found.is_some() {
                        break;
                    }
                }
            } else {
                chosen.push(c.clone());
                dfs(pending, chosen, checked, budget, found)?;
                chosen.pop();
            }
        }
        Lra::And(xs) => {
            let n = pending.len();
            pending.extend(xs.iter().rev());
            dfs(pending, chosen, checked, budget, found)?;
            pending.truncate(n);
        }
        Lra::Or(xs) => {
            let checked = if chosen.len() > checked {
                if feasible(chosen.clone(), budget)?.is_none() {
                    pending.push(top);
                    return Ok(());
                }
                chosen.len()
            } else {
                checked
            };
            for x in xs {
                pending.push(x);
                dfs(pending, chosen, checked, budget, found)?;
                pending.pop();
                if found.is_some() {
                    break;
                }
            }
        }
        Lra::Not(_) | Lra::Exists(..) | Lra::Forall(..) => unreachable!("quantifier-free normal form expected"),
    }
    pending.push(top);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{q_int, Linear as L, Lra};
    use super::*;

    fn v(n: &str) -> L {
        L::var(n)
    }

    fn c(n: i64) -> L {
        L::constant(q_int(n))
    }

    fn check_witness(f: &Lra) {
        let SatResult::Sat { witness } = solve(f) else { panic!("expected sat for {f}") };
        assert_eq!(f.eval_qf(&witness), Some(true), "{f} under {witness:?}");
    }

    #[test]
    fn single_equality() {
        let f = Lra::eq(&v("k"), &c(5));
        let SatResult::Sat { witness } = solve(&f) else { panic!() };
        assert_eq!(witness["k"], q_int(5));
    }

    #[test]
    fn strict_bounds_and_disequality() {
        check_witness(&Lra::and(vec![Lra::lt(&c(0), &v("x")), Lra::lt(&v("x"), &c(1))]));
        assert_eq!(solve(&Lra::and(vec![Lra::lt(&c(1), &v("x")), Lra::lt(&v("x"), &c(1))])), SatResult::Unsat);
        assert!(solve(&Lra::and(vec![Lra::le(&c(1), &v("x")), Lra::le(&v("x"), &c(1))])).is_sat());
        let pinned = Lra::and(vec![Lra::le(&c(1), &v("x")), Lra::le(&v("x"), &c(1)), Lra::ne(&v("x"), &c(1))]);
        assert_eq!(solve(&pinned), SatResult::Unsat);
        check_witness(&Lra::and(vec![Lra::le(&c(0), &v("x")), Lra::le(&v("x"), &c(1)), Lra::ne(&v("x"), &c(0))]));
    }

    #[test]
    fn quantified_formulas() {
        // every y above x is above 3: forces x >= 3
        let f = Lra::and(vec![
            Lra::forall("y", Lra::or(vec![Lra::le(&v("y"), &v("x")), Lra::gt(&v("y"), &c(3))])),
            Lra::lt(&v("x"), &c(3)),
        ]);
        assert_eq!(solve(&f), SatResult::Unsat);
        let g = Lra::forall("y", Lra::or(vec![Lra::le(&v("y"), &v("x")), Lra::ge(&v("y"), &c(3))]));
        let SatResult::Sat { witness } = solve(&g) else { panic!() };
        assert!(witness["x"] >= q_int(3));
        let h = Lra::exists("y", Lra::and(vec![Lra::lt(&v("x"), &v("y")), Lra::lt(&v("y"), &c(0))]));
        let SatResult::Sat { witness } = solve(&h) else { panic!() };
        assert!(witness["x"] < witness["y"] && witness["y"] < q_int(0));
    }

    #[test]
    fn shadowed_binders_are_separated() {
        let f = Lra::and(vec![
            Lra::eq(&v("x"), &c(1)),
            Lra::exists("x", Lra::eq(&v("x"), &c(2))),
            Lra::forall("x", Lra::or(vec![Lra::lt(&v("x"), &c(0)), Lra::ge(&v("x"), &c(0))])),
        ]);
        let SatResult::Sat { witness } = solve(&f) else { panic!() };
        assert_eq!(witness["x"], q_int(1));
    }

    #[test]
    fn cap_reports_unknown() {
        let f = Lra::and((0..30).map(|i| Lra::or(vec![Lra::eq(&v(&format!("x{i}")), &c(0)), Lra::eq(&v(&format!("x{i}")), &c(1))])).chain([Lra::lt(&c(1), &c(0))]).collect());
        assert_eq!(f, Lra::False);
        let g = Lra::and(
            (0..30)
                .map(|i| Lra::or(vec![Lra::lt(&v(&format!("x{i}")), &c(0)), Lra::gt(&v(&format!("x{i}")), &c(1))]))
                .chain([Lra::lt(&v("x0"), &c(0)), Lra::gt(&v("x0"), &c(1))])
                .collect(),
        );
        assert!(matches!(solve_with_cap(&g, 500), SatResult::Unknown { .. }));
    }

    fn arb_atom() -> impl proptest::strategy::Strategy<Value = Lra> {
        use proptest::prelude::*;
        (-3i64..=3, -3i64..=3, -6i64..=6, 0usize..4).prop_map(|(a, b, k, r)| {
            let lin = v("x").scale(&q_int(a)).add(&v("y").scale(&q_int(b)));
            let rhs = c(k);
            match r {
                0 => Lra::le(&lin, &rhs),
                1 => Lra::lt(&lin, &rhs),
                2 => Lra::eq(&lin, &rhs),
                _ => Lra::ne(&lin, &rhs),
            }
        })
    }

    fn arb_formula() -> impl proptest::strategy::Strategy<Value = Lra> {
        use proptest::prelude::*;
        arb_atom().prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                proptest::collection::vec(inner.clone(), 1..4).prop_map(Lra::and),
                proptest::collection::vec(inner.clone(), 1..4).prop_map(Lra::or),
                inner.prop_map(Lra::not),
            ]
        })
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(300))]

        #[test]
        fn agrees_with_grid_search(f in arb_formula()) {
            let grid_hit = (-40..=40).any(|i| (-40..=40).any(|j| {
                let w = BTreeMap::from([("x".to_string(), q_int(i) / q_int(4)), ("y".to_string(), q_int(j) / q_int(4))]);
                f.eval_qf(&w) == Some(true)
            }));
            match solve(&f) {
                SatResult::Sat { witness } => {
                    let mut w = witness.clone();
                    w.entry("x".into()).or_insert_with(Q::zero);
                    w.entry("y".into()).or_insert_with(Q::zero);
                    proptest::prop_assert_eq!(f.eval_qf(&w), Some(true));
                }
                SatResult::Unsat => proptest::prop_assert!(!grid_hit),
                SatResult::Unknown { .. } => proptest::prop_assert!(false, "budget exhausted"),
            }
        }

        #[test]
        fn projection_matches_grid(f in arb_formula()) {
            // exists y. f, checked at grid values of x
            let g = Lra::exists("y", f.clone());
            for i in -8..=8 {
                let x = q_int(i) / q_int(2);
                let pinned = Lra::and(vec![g.clone(), Lra::eq(&v("x"), &L::constant(x.clone()))]);
                let hit = (-40..=40).any(|j| {
                    let w = BTreeMap::from([("x".to_string(), x.clone()), ("y".to_string(), q_int(j) / q_int(4))]);
                    f.eval_qf(&w) == Some(true)
                });
                let forall_ok = solve(&Lra::and(vec![Lra::not(Lra::forall("y", Lra::not(f.clone()))), Lra::eq(&v("x"), &L::constant(x.clone()))])).is_sat();
                let res = solve(&pinned).is_sat();
                proptest::prop_assert_eq!(res, forall_ok);
                if hit {
                    proptest::prop_assert!(res);
                }
            }
        }
    }
}
