use super::Report;
use crate::check::{CheckError, Checker, Value};
use crate::graph::MetricGraph;
use crate::segment::Segment;
use crate::syntax::*;
use std::collections::BTreeSet;

/// A graph and assignment telling `phi ++ phi` apart from `phi`.
#[derive(Debug, Clone)]
pub struct Witness {
    pub formula: String,
    pub graph: String,
    pub bindings: String,
    pub single: bool,
    pub doubled: bool,
}

type Labeled = (usize, usize, u8);

fn canonical(n: usize, edges: &[Labeled]) -> Vec<Labeled> {
    let perms: Vec<Vec<usize>> = match n {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]],
    };
    perms
        .iter()
        .map(|p| {
            let mut es: Vec<Labeled> = edges.iter().map(|&(s, d, l)| (p[s], p[d], l)).collect();
            es.sort();
            es
        })
        .min()
        .unwrap_or_default()
}

/// Interval graphs with at most `max_vertices` (≤ 3) vertices and
/// `max_edges` edges of the given lengths, one per isomorphism class.
pub fn small_graphs(max_vertices: usize, max_edges: usize, lengths: &[u8]) -> Vec<MetricGraph> {
    let mut out = Vec::new();
    for n in 1..=max_vertices.min(3) {
        let all: Vec<Labeled> =
            (0..n).flat_map(|i| (0..n).flat_map(move |j| lengths.iter().map(move |&l| (i, j, l)))).collect();
        let mut seen = BTreeSet::new();
        let mut pick: Vec<usize> = Vec::new();
        loop {
            let edges: Vec<Labeled> = pick.iter().map(|&i| all[i]).collect();
            if seen.insert(canonical(n, &edges)) {
                let mut g = MetricGraph::new();
                for v in 0..n {
                    g.add_vertex(&((b'a' + v as u8) as char).to_string()).expect("fresh name");
                }
                for &(s, d, l) in &edges {
                    g.add_edge(s, d, Segment::interval(l as f64).expect("positive")).expect("distinct labels");
                }
                out.push(g);
            }
            // next combination of size ≤ max_edges in lexicographic order
            if pick.len() < max_edges && pick.last().map_or(0, |&i| i + 1) < all.len() {
                pick.push(pick.last().map_or(0, |&i| i + 1));
                continue;
            }
            loop {
                match pick.pop() {
                    None => break,
                    Some(i) if i + 1 < all.len() => {
                        pick.push(i + 1);
                        break;
                    }
                    Some(_) => {}
                }
            }
            if pick.is_empty() {
                break;
            }
        }
    }
    out
}

fn describe(g: &MetricGraph) -> String {
    let edges: Vec<String> = g.edges().iter().map(|e| format!("{} -{}-> {}", g.name(e.src), e.seg.len(), g.name(e.dst))).collect();
    format!("[{}] {{{}}}", g.names().join(" "), edges.join(", "))
}

fn show(bindings: &[(String, Value)], g: &MetricGraph) -> String {
    bindings
        .iter()
        .map(|(k, v)| match v {
            Value::Vertex(x) => format!("{k}={}", g.name(*x)),
            Value::Seg(s) => format!("{k}={}", s.len()),
            Value::Real(r) => format!("{k}={r}"),
            Value::Obj(i) => format!("{k}=#{i}"),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Assignments of the free variables `x`, `y`, `w` to vertices and `s` to
/// intervals of length 1 or 2.
fn assignments(g: &MetricGraph, f: &Formula) -> Vec<Vec<(String, Value)>> {
    let free = f.free_vars();
    let mut out = vec![Vec::new()];
    for v in ["x", "y", "w"] {
        if free.contains(v) {
            out = out
                .into_iter()
                .flat_map(|b: Vec<(String, Value)>| {
                    g.vertices().map(move |x| {
                        let mut b = b.clone();
                        b.push((v.to_string(), Value::Vertex(x)));
                        b
                    })
                })
                .collect();
        }
    }
    if free.contains("s") {
        out = out
            .into_iter()
            .flat_map(|b| {
                [1.0, 2.0].map(|l| {
                    let mut b = b.clone();
                    b.push(("s".to_string(), Value::Seg(Segment::interval(l).expect("positive"))));
                    b
                })
            })
            .collect();
    }
    out
}

const SCOPE: [(&str, Sort); 4] = [("x", Sort::Vertex), ("y", Sort::Vertex), ("w", Sort::Vertex), ("s", Sort::Seg)];

fn f(src: &str) -> Formula {
    parse_with(src, &SCOPE).expect("law formulas parse")
}

/// Formulas instantiating the law schemas.
pub fn pool() -> Vec<Formula> {
    [
        "edge(x, s, y)",
        "C(edge(y, interval(2), x))",
        "exists vertex u. exists vertex v. edge(u, interval(1), v)",
        "ride(x, s, y)",
        "!C(edge(x, s, x))",
        "dist(x, y) = 2 || edge(x, interval(1), y)",
        "true",
        "exists vertex u. C(edge(u, s, u)) ++ C(edge(x, interval(2), y))",
    ]
    .iter()
    .map(|s| f(s))
    .collect()
}

#[derive(Clone, Copy)]
enum Kind {
    Equiv,
    Implies,
}

struct Law {
    name: &'static str,
    instances: Vec<(Formula, Formula, Kind)>,
}

fn laws() -> Vec<Law> {
    let p = pool();
    let few = &p[..4];
    let e = f("edge(x, s, y)");
    let mut out = Vec::new();
    let pairs = |k: &dyn Fn(&Formula, &Formula) -> (Formula, Formula, Kind)| -> Vec<(Formula, Formula, Kind)> {
        p.iter().flat_map(|a| p.iter().map(move |b| (a, b))).map(|(a, b)| k(a, b)).collect()
    };
    let singles = |k: &dyn Fn(&Formula) -> (Formula, Formula, Kind)| -> Vec<(Formula, Formula, Kind)> { p.iter().map(k).collect() };
    let triples = |k: &dyn Fn(&Formula, &Formula, &Formula) -> (Formula, Formula, Kind)| -> Vec<(Formula, Formula, Kind)> {
        let mut v = Vec::new();
        for a in few {
            for b in few {
                for c in few {
                    v.push(k(a, b, c));
                }
            }
        }
        v
    };
    let co = |a: &Formula, b: &Formula| coalesce(a.clone(), b.clone());
    let cl = |a: &Formula| closure(a.clone());
    out.push(Law { name: "A.i", instances: triples(&|a, b, c| (co(&co(a, b), c), co(a, &co(b, c)), Kind::Equiv)) });
    out.push(Law { name: "A.ii", instances: pairs(&|a, b| (co(a, b), co(b, a), Kind::Equiv)) });
    out.push(Law { name: "A.iii", instances: singles(&|a| (co(a, &Formula::False), Formula::False, Kind::Equiv)) });
    out.push(Law {
        name: "A.v",
        instances: triples(&|a, b, c| (co(a, &or(b.clone(), c.clone())), or(co(a, b), co(a, c)), Kind::Equiv)),
    });
    out.push(Law { name: "B.i", instances: singles(&|a| (cl(&cl(a)), cl(a), Kind::Equiv)) });
    out.push(Law { name: "B.ii", instances: singles(&|a| (a.clone(), cl(a), Kind::Implies)) });
    out.push(Law { name: "B.iii", instances: pairs(&|a, b| (cl(&or(a.clone(), b.clone())), or(cl(a), cl(b)), Kind::Equiv)) });
    out.push(Law {
        name: "B.iv",
        instances: pairs(&|a, b| (cl(&co(a, b)), co(&cl(a), &cl(b)), Kind::Equiv))
            .into_iter()
            .chain(pairs(&|a, b| (co(&cl(a), &cl(b)), and(cl(a), cl(b)), Kind::Equiv)))
            .collect(),
    });
    let distribute = |a: &Formula, b: &Formula| (and(e.clone(), co(a, b)), co(&and(e.clone(), a.clone()), &and(e.clone(), b.clone())));
    out.push(Law {
        name: "C.i (left to right)",
        instances: pairs(&|a, b| {
            let (l, r) = distribute(a, b);
            (l, r, Kind::Implies)
        }),
    });
    out.push(Law {
        name: "C.i (right to left)",
        instances: pairs(&|a, b| {
            let (l, r) = distribute(a, b);
            (r, l, Kind::Implies)
        }),
    });
    out.push(Law {
        name: "C.ii",
        instances: vec![(Formula::True, or(co(&e, &not(cl(&e))), not(cl(&e))), Kind::Equiv)],
    });
    out.push(Law {
        name: "D.i",
        instances: vec![
            (
                f("forall seg z. forall real t. dist(x, y) = t && ride(x, z, y) => exists real l. len(z) = l && t <= l"),
                Formula::True,
                Kind::Equiv,
            ),
            (
                f("forall seg z. forall real t. dist(fwd(x, s, 0.5), y) = t && ride(fwd(x, s, 0.5), z, y) => exists real l. len(z) = l && t <= l"),
                Formula::True,
                Kind::Equiv,
            ),
        ],
    });
    out.push(Law {
        name: "D.ii",
        instances: vec![
            (
                f("forall real t. forall real t2. dist(x, y) = t && dist(y, w) = t2 => exists real k. dist(x, w) = k && k <= t + t2"),
                Formula::True,
                Kind::Equiv,
            ),
            (
                f("forall real t. forall real t2. dist(x, fwd(y, s, 0.5)) = t && dist(fwd(y, s, 0.5), w) = t2 => exists real k. dist(x, w) = k && k <= t + t2"),
                Formula::True,
                Kind::Equiv,
            ),
        ],
    });
    out
}

fn check_law(graphs: &[MetricGraph], law: &Law) -> Result<Report, CheckError> {
    let mut report = Report::new(law.name);
    for g in graphs {
        let c = Checker::new(g)?;
        for (lhs, rhs, kind) in &law.instances {
            let both = and(lhs.clone(), rhs.clone());
            for b in assignments(g, &both) {
                let (l, r) = (c.check_in(&b, lhs)?, c.check_in(&b, rhs)?);
                let ok = match kind {
                    Kind::Equiv => l == r,
                    Kind::Implies => !l || r,
                };
                report.record(ok, || format!("{lhs}  vs  {rhs}  on {} with {}", describe(g), show(&b, g)));
            }
        }
    }
    Ok(report)
}

/// Checks every law of the theorem table over the given graphs, one report per law.
pub fn table4_suite(graphs: &[MetricGraph]) -> Result<Vec<Report>, CheckError> {
    let laws = laws();
    std::thread::scope(|scope| {
        let handles: Vec<_> = laws.iter().map(|law| scope.spawn(move || check_law(graphs, law))).collect();
        handles.into_iter().map(|h| h.join().expect("law checker panicked")).collect()
    })
}

/// The first pool formula, graph and assignment on which coalescing a
/// formula with itself changes its verdict.
pub fn non_idempotence_witness(graphs: &[MetricGraph]) -> Result<Option<Witness>, CheckError> {
    for phi in pool() {
        let doubled = coalesce(phi.clone(), phi.clone());
        for g in graphs {
            let c = Checker::new(g)?;
            for b in assignments(g, &phi) {
                let (x, y) = (c.check_in(&b, &phi)?, c.check_in(&b, &doubled)?);
                if x != y {
                    return Ok(Some(Witness { formula: phi.to_string(), graph: describe(g), bindings: show(&b, g), single: x, doubled: y }));
                }
            }
        }
    }
    Ok(None)
}
