use crate::syntax::*;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranslateError {
    #[error("not in the translatable fragment: {0}")]
    Unsupported(String),
    #[error("unbound vertex `{0}`")]
    UnboundVertex(String),
    #[error("{0} edges exceed the limit of 64")]
    TooManyEdges(usize),
}

type Result<T> = std::result::Result<T, TranslateError>;

/// An edge whose label is a segment term of known length term.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEdge {
    pub src: usize,
    pub dst: usize,
    pub label: SegTerm,
    pub len: Arith,
}

/// A graph over vertices `0..n` with symbolic edge labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymGraph {
    pub n: usize,
    pub edges: Vec<SymEdge>,
}

pub type Mask = u64;

fn conj(a: Formula, b: Formula) -> Formula {
    match (a, b) {
        (Formula::False, _) | (_, Formula::False) => Formula::False,
        (Formula::True, x) | (x, Formula::True) => x,
        (a, b) => and(a, b),
    }
}

fn disj(a: Formula, b: Formula) -> Formula {
    match (a, b) {
        (Formula::True, _) | (_, Formula::True) => Formula::True,
        (Formula::False, x) | (x, Formula::False) => x,
        (a, b) => or(a, b),
    }
}

fn neg(a: Formula) -> Formula {
    match a {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(x) => *x,
        x => not(x),
    }
}

fn conj_all(fs: impl IntoIterator<Item = Formula>) -> Formula {
    fs.into_iter().fold(Formula::True, conj)
}

fn disj_all(fs: impl IntoIterator<Item = Formula>) -> Formula {
    fs.into_iter().fold(Formula::False, disj)
}

fn quant(univ: bool, sort: Sort, v: &str, body: Formula) -> Formula {
    match body {
        Formula::True | Formula::False => body,
        b if univ => forall(sort, v, b),
        b => exists(sort, v, b),
    }
}

fn le(a: Arith, b: Arith) -> Formula {
    Formula::Cmp(CmpOp::Le, a, b)
}

fn lt(a: Arith, b: Arith) -> Formula {
    Formula::Cmp(CmpOp::Lt, a, b)
}

fn eq(a: Arith, b: Arith) -> Formula {
    Formula::Cmp(CmpOp::Eq, a, b)
}

fn minus(a: Arith, b: Arith) -> Arith {
    match b {
        Arith::Const(c) => add(a, num(-c)),
        b => add(a, mul(num(-1.0), b)),
    }
}

fn seg_eq(a: &SegTerm, b: &SegTerm) -> Formula {
    Formula::SegEq(a.clone(), b.clone())
}

/// A position term with its vertex references resolved.
#[derive(Debug, Clone)]
enum Pv {
    V(usize),
    F(usize, SegTerm, Arith),
    B(Arith, SegTerm, usize),
}

impl SymGraph {
    pub fn mask_all(&self) -> Mask {
        if self.edges.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.edges.len()) - 1
        }
    }

    fn in_mask(&self, m: Mask) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |e| m & (1 << e) != 0)
    }

    /// Non-empty edge-simple paths from `from` to `to` inside `m`.
    fn paths(&self, m: Mask, from: usize, to: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.walk(m, from, to, &mut path, &mut out);
        out
    }

    fn walk(&self, m: Mask, at: usize, to: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !path.is_empty() && at == to {
            out.push(path.clone());
        }
        for e in self.in_mask(m) {
            if self.edges[e].src == at && !path.contains(&e) {
                path.push(e);
                self.walk(m, self.edges[e].dst, to, path, out);
                path.pop();
            }
        }
    }
}

/// Translation of graph formulas over a symbolic graph into segment logic.
pub struct Translator<'a> {
    g: &'a SymGraph,
    /// Vertex constants written `@name`.
    consts: HashMap<String, usize>,
    fresh: usize,
}

impl<'a> Translator<'a> {
    pub fn new(g: &'a SymGraph) -> Result<Translator<'a>> {
        if g.edges.len() > 64 {
            return Err(TranslateError::TooManyEdges(g.edges.len()));
        }
        Ok(Translator { g, consts: HashMap::new(), fresh: 0 })
    }

    pub fn with_constants(mut self, consts: HashMap<String, usize>) -> Translator<'a> {
        self.consts = consts;
        self
    }

    fn fresh(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}'{}", self.fresh)
    }

    fn vertex(&self, mu: &HashMap<String, usize>, r: &Ref) -> Result<usize> {
        match r {
            Ref::Var(v) => mu.get(v).copied().ok_or_else(|| TranslateError::UnboundVertex(v.clone())),
            Ref::Const(c) => self.consts.get(c).copied().ok_or_else(|| TranslateError::UnboundVertex(format!("@{c}"))),
        }
    }

    fn pos(&self, mu: &HashMap<String, usize>, p: &PosTerm) -> Result<Pv> {
        Ok(match p {
            PosTerm::Vertex(x) => Pv::V(self.vertex(mu, x)?),
            PosTerm::Fwd(x, s, t) => Pv::F(self.vertex(mu, x)?, s.clone(), t.clone()),
            PosTerm::Bwd(t, s, x) => Pv::B(t.clone(), s.clone(), self.vertex(mu, x)?),
            PosTerm::ObjPos(_) => return Err(TranslateError::Unsupported(p.to_string())),
        })
    }

    /// Translates `f` for the edges in `m`, with vertex variables bound by `mu`.
    pub fn tr(&mut self, m: Mask, mu: &HashMap<String, usize>, f: &Formula) -> Result<Formula> {
        Ok(match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Cmp(_, a, b) => {
                self.arith_only(a)?;
                self.arith_only(b)?;
                f.clone()
            }
            Formula::SegEq(a, b) => {
                self.seg_only(a)?;
                self.seg_only(b)?;
                f.clone()
            }
            Formula::LenEq(s, t) => {
                self.seg_only(s)?;
                self.arith_only(t)?;
                f.clone()
            }
            Formula::Edge(x, s, y) => {
                let (x, y) = (self.vertex(mu, x)?, self.vertex(mu, y)?);
                match self.g.in_mask(m).collect::<Vec<_>>()[..] {
                    [e] if self.g.edges[e].src == x && self.g.edges[e].dst == y => seg_eq(s, &self.g.edges[e].label),
                    _ => Formula::False,
                }
            }
            Formula::PosEq(p, q) => {
                let (p, q) = (self.pos(mu, p)?, self.pos(mu, q)?);
                self.eq_pos(m, &p, &q)
            }
            Formula::Ride(p, s, q) => {
                let (p, q) = (self.pos(mu, p)?, self.pos(mu, q)?);
                self.acyclic_path(m, &p, s, &q)
            }
            Formula::Dist(p, q, t) => {
                let rewritten = dist_rewrite(p, q, t, &self.fresh("z"), &self.fresh("l"));
                self.tr(m, mu, &rewritten)?
            }
            Formula::Road(..) | Formula::ObjEq(..) | Formula::Color(..) | Formula::Pred(_) => {
                return Err(TranslateError::Unsupported(f.to_string()))
            }
            Formula::Not(a) => neg(self.tr(m, mu, a)?),
            Formula::And(a, b) => {
                let l = self.tr(m, mu, a)?;
                if l == Formula::False {
                    return Ok(l);
                }
                conj(l, self.tr(m, mu, b)?)
            }
            Formula::Or(a, b) => {
                let l = self.tr(m, mu, a)?;
                if l == Formula::True {
                    return Ok(l);
                }
                disj(l, self.tr(m, mu, b)?)
            }
            Formula::Implies(a, b) => {
                let l = self.tr(m, mu, a)?;
                if l == Formula::False {
                    return Ok(Formula::True);
                }
                disj(neg(l), self.tr(m, mu, b)?)
            }
            Formula::Coalesce(a, b) => {
                let mut left: HashMap<Mask, Formula> = HashMap::new();
                let mut right: HashMap<Mask, Formula> = HashMap::new();
                let mut out = Formula::False;
                for m1 in submasks(m) {
                    let l = match left.get(&m1) {
                        Some(x) => x.clone(),
                        None => {
                            let x = self.tr(m1, mu, a)?;
                            left.insert(m1, x.clone());
                            x
                        }
                    };
                    if l == Formula::False {
                        continue;
                    }
                    for s in submasks(m1) {
                        let m2 = (m & !m1) | s;
                        let r = match right.get(&m2) {
                            Some(x) => x.clone(),
                            None => {
                                let x = self.tr(m2, mu, b)?;
                                right.insert(m2, x.clone());
                                x
                            }
                        };
                        out = disj(out, conj(l.clone(), r));
                        if out == Formula::True {
                            return Ok(out);
                        }
                    }
                }
                out
            }
            Formula::Closure(a) => {
                let mut out = Formula::False;
                for m1 in submasks(m) {
                    out = disj(out, self.tr(m1, mu, a)?);
                    if out == Formula::True {
                        break;
                    }
                }
                out
            }
            Formula::Exists(Sort::Vertex, x, b) | Formula::Forall(Sort::Vertex, x, b) => {
                let univ = matches!(f, Formula::Forall(..));
                let mut out = if univ { Formula::True } else { Formula::False };
                for i in 0..self.g.n {
                    let mut inner = mu.clone();
                    inner.insert(x.clone(), i);
                    let t = self.tr(m, &inner, b)?;
                    out = if univ { conj(out, t) } else { disj(out, t) };
                }
                out
            }
            Formula::Exists(sort @ (Sort::Real | Sort::Seg), v, b) | Formula::Forall(sort @ (Sort::Real | Sort::Seg), v, b) => {
                let mut inner = mu.clone();
                inner.remove(v);
                let body = self.tr(m, &inner, b)?;
                quant(matches!(f, Formula::Forall(..)), *sort, v, body)
            }
            Formula::Exists(..) | Formula::Forall(..) => return Err(TranslateError::Unsupported(f.to_string())),
        })
    }

    fn arith_only(&self, a: &Arith) -> Result<()> {
        match a {
            Arith::Attr(..) | Arith::SafeDist(..) => Err(TranslateError::Unsupported(a.to_string())),
            Arith::Add(x, y) | Arith::Mul(x, y) => {
                self.arith_only(x)?;
                self.arith_only(y)
            }
            _ => Ok(()),
        }
    }

    fn seg_only(&self, s: &SegTerm) -> Result<()> {
        match s {
            SegTerm::It(_) => Err(TranslateError::Unsupported(s.to_string())),
            SegTerm::Concat(a, b) => {
                self.seg_only(a)?;
                self.seg_only(b)
            }
            SegTerm::Ctor(_, args) => args.iter().try_for_each(|a| self.arith_only(a)),
            SegTerm::Var(_) => Ok(()),
        }
    }

    fn out_labels(&self, m: Mask, i: usize) -> Vec<usize> {
        self.g.in_mask(m).filter(|&e| self.g.edges[e].src == i).collect()
    }

    fn in_labels(&self, m: Mask, j: usize) -> Vec<usize> {
        self.g.in_mask(m).filter(|&e| self.g.edges[e].dst == j).collect()
    }

    /// `s` equals exactly one edge label of `set`, counted with multiplicity, and `0 < t < ‖s‖`.
    fn unique_within(&self, s: &SegTerm, set: &[usize], t: &Arith) -> Formula {
        let one_of = disj_all(set.iter().map(|&e| {
            let edge = &self.g.edges[e];
            conj_all([seg_eq(s, &edge.label), lt(num(0.0), t.clone()), lt(t.clone(), edge.len.clone())])
        }));
        conj(one_of, neg(self.two_of(s, set)))
    }

    fn two_of(&self, s: &SegTerm, set: &[usize]) -> Formula {
        let mut out = Formula::False;
        for (a, &e) in set.iter().enumerate() {
            for &f in &set[a + 1..] {
                out = disj(out, conj(seg_eq(s, &self.g.edges[e].label), seg_eq(s, &self.g.edges[f].label)));
            }
        }
        out
    }

    /// `s` equals exactly one label of the multiset.
    pub fn unique(&self, s: &SegTerm, set: &[SegTerm]) -> Formula {
        let one_of = disj_all(set.iter().map(|l| seg_eq(s, l)));
        let mut two = Formula::False;
        for (a, l) in set.iter().enumerate() {
            for r in &set[a + 1..] {
                two = disj(two, conj(seg_eq(s, l), seg_eq(s, r)));
            }
        }
        conj(one_of, neg(two))
    }

    fn eq_pos(&self, m: Mask, p: &Pv, q: &Pv) -> Formula {
        match (p, q) {
            (Pv::V(x), Pv::V(y)) => {
                if x == y {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            (Pv::F(x, s, t), Pv::F(y, s2, t2)) if x == y => conj_all([
                seg_eq(s, s2),
                eq(t.clone(), t2.clone()),
                self.unique_within(s, &self.out_labels(m, *x), t),
            ]),
            (Pv::B(t, s, x), Pv::B(t2, s2, y)) if x == y => conj_all([
                seg_eq(s, s2),
                eq(t.clone(), t2.clone()),
                self.unique_within(s, &self.in_labels(m, *x), t),
            ]),
            (Pv::F(x, s, t), Pv::B(t2, s2, y)) | (Pv::B(t2, s2, y), Pv::F(x, s, t)) => {
                let same_edge = disj_all(self.g.in_mask(m).filter(|&e| self.g.edges[e].src == *x && self.g.edges[e].dst == *y).map(|e| {
                    let edge = &self.g.edges[e];
                    conj_all([
                        seg_eq(s, &edge.label),
                        eq(add(t.clone(), t2.clone()), edge.len.clone()),
                        lt(num(0.0), t.clone()),
                        lt(t.clone(), edge.len.clone()),
                    ])
                }));
                if same_edge == Formula::False {
                    return same_edge;
                }
                conj_all([
                    seg_eq(s, s2),
                    same_edge,
                    neg(self.two_of(s, &self.out_labels(m, *x))),
                    self.unique(s2, &self.in_labels(m, *y).iter().map(|&e| self.g.edges[e].label.clone()).collect::<Vec<_>>()),
                ])
            }
            _ => Formula::False,
        }
    }

    /// `p` sits on edge `e` at offset `k`.
    fn at_pos(&self, m: Mask, p: &Pv, e: usize, k: &Arith) -> Formula {
        let edge = &self.g.edges[e];
        let case = match p {
            Pv::V(x) => {
                let mut c = Formula::False;
                if *x == edge.src {
                    c = disj(c, eq(k.clone(), num(0.0)));
                }
                if *x == edge.dst {
                    c = disj(c, eq(k.clone(), edge.len.clone()));
                }
                c
            }
            Pv::F(x, s, t) if *x == edge.src => conj(seg_eq(s, &edge.label), eq(k.clone(), t.clone())),
            Pv::B(t, s, x) if *x == edge.dst => conj(seg_eq(s, &edge.label), eq(add(k.clone(), t.clone()), edge.len.clone())),
            _ => Formula::False,
        };
        if case == Formula::False {
            return case;
        }
        conj(self.eq_pos(m, p, p), case)
    }

    /// `s'` is the piece of `s` between offsets `t1` and `t2`.
    fn subseg(&mut self, s: &SegTerm, len: &Arith, t1: Arith, t2: Arith, piece: SegTerm) -> Formula {
        let z1 = self.fresh("z");
        let z2 = self.fresh("z");
        let body = conj_all([
            Formula::LenEq(seg_var(&z1), t1.clone()),
            Formula::LenEq(seg_var(&z2), minus(len.clone(), t2.clone())),
            Formula::SegEq(s.clone(), concat(concat(seg_var(&z1), piece), seg_var(&z2))),
        ]);
        conj_all([
            le(num(0.0), t1.clone()),
            le(t1, t2.clone()),
            le(t2, len.clone()),
            exists(Sort::Seg, &z1, exists(Sort::Seg, &z2, body)),
        ])
    }

    fn path_label(&self, w: &[usize]) -> SegTerm {
        w.iter().map(|&e| self.g.edges[e].label.clone()).reduce(concat).expect("non-empty path")
    }

    fn acyclic_path(&mut self, m: Mask, p: &Pv, s: &SegTerm, q: &Pv) -> Formula {
        let (k, k2, z, z2) = (self.fresh("k"), self.fresh("k"), self.fresh("z"), self.fresh("z"));
        let (kv, k2v, zv, z2v) = (real_var(&k), real_var(&k2), seg_var(&z), seg_var(&z2));
        let mut out = Formula::False;
        let edges: Vec<usize> = self.g.in_mask(m).collect();
        for &e in &edges {
            let at_p = self.at_pos(m, p, e, &kv);
            if at_p == Formula::False {
                continue;
            }
            let edge = self.g.edges[e].clone();
            let at_q = self.at_pos(m, q, e, &k2v);
            if at_q != Formula::False {
                let same = conj_all([
                    le(num(0.0), kv.clone()),
                    le(kv.clone(), k2v.clone()),
                    le(k2v.clone(), edge.len.clone()),
                    self.subseg(&edge.label, &edge.len, kv.clone(), k2v.clone(), zv.clone()),
                    seg_eq(s, &zv),
                ]);
                out = disj(out, conj_all([at_p.clone(), at_q.clone(), same]));
                let mut around = if edge.dst == edge.src { seg_eq(s, &concat(zv.clone(), z2v.clone())) } else { Formula::False };
                for w in self.g.paths(m & !(1 << e), edge.dst, edge.src) {
                    around = disj(around, seg_eq(s, &concat(concat(zv.clone(), self.path_label(&w)), z2v.clone())));
                }
                if around != Formula::False {
                    let wrap = conj_all([
                        le(num(0.0), k2v.clone()),
                        le(k2v.clone(), kv.clone()),
                        le(kv.clone(), edge.len.clone()),
                        self.subseg(&edge.label, &edge.len, kv.clone(), edge.len.clone(), zv.clone()),
                        self.subseg(&edge.label, &edge.len, num(0.0), k2v.clone(), z2v.clone()),
                        around,
                    ]);
                    out = disj(out, conj_all([at_p.clone(), at_q, wrap]));
                }
            }
            for &f in &edges {
                if f == e {
                    continue;
                }
                let at_q = self.at_pos(m, q, f, &k2v);
                if at_q == Formula::False {
                    continue;
                }
                let next = self.g.edges[f].clone();
                let mut link = if edge.dst == next.src { seg_eq(s, &concat(zv.clone(), z2v.clone())) } else { Formula::False };
                for w in self.g.paths(m & !(1 << e) & !(1 << f), edge.dst, next.src) {
                    link = disj(link, seg_eq(s, &concat(concat(zv.clone(), self.path_label(&w)), z2v.clone())));
                }
                if link == Formula::False {
                    continue;
                }
                let across = conj_all([
                    le(num(0.0), kv.clone()),
                    le(kv.clone(), edge.len.clone()),
                    le(num(0.0), k2v.clone()),
                    le(k2v.clone(), next.len.clone()),
                    self.subseg(&edge.label, &edge.len, kv.clone(), edge.len.clone(), zv.clone()),
                    self.subseg(&next.label, &next.len, num(0.0), k2v.clone(), z2v.clone()),
                    link,
                ]);
                out = disj(out, conj_all([at_p.clone(), at_q, across]));
            }
        }
        [(Sort::Seg, z2), (Sort::Seg, z), (Sort::Real, k2), (Sort::Real, k)]
            .into_iter()
            .fold(out, |f, (sort, v)| quant(false, sort, &v, f))
    }
}

/// Distance as the least ride length, or zero between equal positions.
fn dist_rewrite(p: &PosTerm, q: &PosTerm, t: &Arith, z: &str, l: &str) -> Formula {
    let ride = Formula::Ride(p.clone(), seg_var(z), q.clone());
    let some = exists(Sort::Seg, z, and(ride.clone(), Formula::LenEq(seg_var(z), t.clone())));
    let shortest = forall(
        Sort::Seg,
        z,
        implies(ride, exists(Sort::Real, l, and(Formula::LenEq(seg_var(z), real_var(l)), le(t.clone(), real_var(l))))),
    );
    or(and(Formula::PosEq(p.clone(), q.clone()), eq(t.clone(), num(0.0))), and(some, shortest))
}

/// Every submask of `m`, including zero.
pub fn submasks(m: Mask) -> impl Iterator<Item = Mask> {
    let mut next = Some(m);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & m) };
        Some(cur)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot_graph(edges: &[(usize, usize, &str)], n: usize) -> SymGraph {
        SymGraph {
            n,
            edges: edges
                .iter()
                .map(|&(src, dst, s)| SymEdge { src, dst, label: seg_var(s), len: real_var(&format!("{s}'len")) })
                .collect(),
        }
    }

    fn mu(pairs: &[(&str, usize)]) -> HashMap<String, usize> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn edge_atom_needs_singleton() {
        let g = slot_graph(&[(0, 1, "s1"), (1, 0, "s2")], 2);
        let mut t = Translator::new(&g).unwrap();
        let f = edge("x", seg_var("z"), "y");
        let env = mu(&[("x", 0), ("y", 1)]);
        assert_eq!(t.tr(0b01, &env, &f).unwrap(), Formula::SegEq(seg_var("z"), seg_var("s1")));
        assert_eq!(t.tr(0b11, &env, &f).unwrap(), Formula::False);
    }

    #[test]
    fn vertex_quantifier_expands_to_disjunction() {
        let g = slot_graph(&[(0, 1, "s1")], 2);
        let mut t = Translator::new(&g).unwrap();
        let f = exists(Sort::Vertex, "x", Formula::PosEq(PosTerm::Vertex(Ref::var("x")), PosTerm::Vertex(Ref::var("y"))));
        assert_eq!(t.tr(1, &mu(&[("y", 1)]), &f).unwrap(), Formula::True);
        let g = exists(Sort::Vertex, "x", edge("x", seg_var("z"), "y"));
        let out = t.tr(1, &mu(&[("y", 1)]), &g).unwrap();
        assert_eq!(out, Formula::SegEq(seg_var("z"), seg_var("s1")));
    }

    #[test]
    fn unique_of_singleton_is_equality() {
        let g = SymGraph::default();
        let t = Translator::new(&g).unwrap();
        assert_eq!(t.unique(&seg_var("s"), &[seg_var("s1")]), Formula::SegEq(seg_var("s"), seg_var("s1")));
    }

    #[test]
    fn coalescing_splits_edges() {
        let g = slot_graph(&[(0, 1, "s1"), (1, 0, "s2")], 2);
        let mut t = Translator::new(&g).unwrap();
        let f = coalesce(edge("x", seg_var("a"), "y"), edge("y", seg_var("b"), "x"));
        let out = t.tr(0b11, &mu(&[("x", 0), ("y", 1)]), &f).unwrap();
        assert_eq!(out, and(Formula::SegEq(seg_var("a"), seg_var("s1")), Formula::SegEq(seg_var("b"), seg_var("s2"))));
    }

    #[test]
    fn submasks_cover_all() {
        let all: Vec<Mask> = submasks(0b101).collect();
        assert_eq!(all, vec![0b101, 0b100, 0b001, 0]);
    }
}
