use std::collections::BTreeSet;

/// A vertex or object name: a bound variable, or a constant written `@name`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ref {
    Var(String),
    Const(String),
}

impl Ref {
    pub fn var(name: &str) -> Ref {
        Ref::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Ref {
        Ref::Const(name.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumAttr {
    Sp,
    Wt,
    Ln,
    Weight,
}

impl NumAttr {
    pub fn name(self) -> &'static str {
        match self {
            NumAttr::Sp => "sp",
            NumAttr::Wt => "wt",
            NumAttr::Ln => "ln",
            NumAttr::Weight => "weight",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arith {
    Const(f64),
    Var(String),
    Add(Box<Arith>, Box<Arith>),
    Mul(Box<Arith>, Box<Arith>),
    Attr(Ref, NumAttr),
    /// Braking distance of the first object relative to the second plus its reaction distance.
    SafeDist(Ref, Ref),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ctor {
    Interval,
    Line,
    Arc,
}

impl Ctor {
    pub fn arity(self) -> usize {
        match self {
            Ctor::Interval => 1,
            Ctor::Line => 2,
            Ctor::Arc => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Ctor::Interval => "interval",
            Ctor::Line => "line",
            Ctor::Arc => "arc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegTerm {
    Ctor(Ctor, Vec<Arith>),
    Var(String),
    Concat(Box<SegTerm>, Box<SegTerm>),
    /// The itinerary of an object.
    It(Ref),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PosTerm {
    Vertex(Ref),
    /// The point at distance `t` after vertex `x` along the edge labeled `s`.
    Fwd(Ref, SegTerm, Arith),
    /// The point at distance `t` before vertex `x` along the edge labeled `s`.
    Bwd(Arith, SegTerm, Ref),
    ObjPos(Ref),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjKind {
    Vehicle,
    Light,
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sort {
    Real,
    Seg,
    Vertex,
    /// Objects, optionally restricted to one kind.
    Obj(Option<ObjKind>),
}

impl Sort {
    pub fn keyword(self) -> &'static str {
        match self {
            Sort::Real => "real",
            Sort::Seg => "seg",
            Sort::Vertex => "vertex",
            Sort::Obj(None) => "obj",
            Sort::Obj(Some(ObjKind::Vehicle)) => "vehicle",
            Sort::Obj(Some(ObjKind::Light)) => "light",
            Sort::Obj(Some(ObjKind::Sign)) => "sign",
        }
    }

    pub fn is_obj(self) -> bool {
        matches!(self, Sort::Obj(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds(self, x: f64, y: f64) -> bool {
        let eq = crate::segment::approx(x, y);
        match self {
            CmpOp::Le => x <= y || eq,
            CmpOp::Lt => x < y && !eq,
            CmpOp::Eq => eq,
            CmpOp::Ge => x >= y || eq,
            CmpOp::Gt => x > y && !eq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Color {
    Red,
    Green,
}

/// Predicates over objects and junction vertices, each an abbreviation of an
/// MCL formula and evaluated directly.
#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    /// A ride of length `d` from the first object to the second, along the first one's itinerary.
    Meets(Ref, Arith, Ref),
    /// The object is at a vertex of the set or on an edge between two of them, optionally in a lane.
    Inside(Ref, Vec<Ref>, Option<Arith>),
    /// The object is strictly inside an edge between two vertices of the set.
    OnEdges(Ref, Vec<Ref>),
    RightOf(Ref, Ref, Vec<Ref>),
    Opposite(Ref, Ref, Vec<Ref>),
    GoStraight(Ref, Vec<Ref>),
    TurnRight(Ref, Vec<Ref>),
    TurnLeft(Ref, Vec<Ref>),
    /// The object's itinerary starts with an arc of radius `r`.
    ArcAhead(Ref, Arith),
    /// The object's itinerary leads through the vertex.
    Passes(Ref, Ref),
}

impl Pred {
    pub fn name(&self) -> &'static str {
        match self {
            Pred::Meets(..) => "meets",
            Pred::Inside(..) => "inside",
            Pred::OnEdges(..) => "on_edges",
            Pred::RightOf(..) => "right_of",
            Pred::Opposite(..) => "opposite",
            Pred::GoStraight(..) => "go_straight",
            Pred::TurnRight(..) => "turn_right",
            Pred::TurnLeft(..) => "turn_left",
            Pred::ArcAhead(..) => "arc_ahead",
            Pred::Passes(..) => "passes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Cmp(CmpOp, Arith, Arith),
    SegEq(SegTerm, SegTerm),
    LenEq(SegTerm, Arith),
    Edge(Ref, SegTerm, Ref),
    /// An edge that the map records as a road, optionally with its lane count.
    Road(Ref, SegTerm, Ref, Option<Arith>),
    PosEq(PosTerm, PosTerm),
    Ride(PosTerm, SegTerm, PosTerm),
    Dist(PosTerm, PosTerm, Arith),
    ObjEq(Ref, Ref),
    Color(Ref, Color),
    Pred(Pred),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Coalesce(Box<Formula>, Box<Formula>),
    Closure(Box<Formula>),
    Exists(Sort, String, Box<Formula>),
    Forall(Sort, String, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemporalFormula {
    State(Formula),
    Next(Box<TemporalFormula>),
    Until(Box<TemporalFormula>, Box<TemporalFormula>),
    Always(Box<TemporalFormula>),
    Eventually(Box<TemporalFormula>),
    Not(Box<TemporalFormula>),
    And(Box<TemporalFormula>, Box<TemporalFormula>),
    Or(Box<TemporalFormula>, Box<TemporalFormula>),
    Implies(Box<TemporalFormula>, Box<TemporalFormula>),
    Exists(Option<ObjKind>, String, Box<TemporalFormula>),
    Forall(Option<ObjKind>, String, Box<TemporalFormula>),
}

pub fn and(a: Formula, b: Formula) -> Formula {
    Formula::And(Box::new(a), Box::new(b))
}

pub fn or(a: Formula, b: Formula) -> Formula {
    Formula::Or(Box::new(a), Box::new(b))
}

pub fn not(a: Formula) -> Formula {
    Formula::Not(Box::new(a))
}

pub fn implies(a: Formula, b: Formula) -> Formula {
    Formula::Implies(Box::new(a), Box::new(b))
}

pub fn coalesce(a: Formula, b: Formula) -> Formula {
    Formula::Coalesce(Box::new(a), Box::new(b))
}

pub fn closure(a: Formula) -> Formula {
    Formula::Closure(Box::new(a))
}

pub fn exists(sort: Sort, v: &str, body: Formula) -> Formula {
    Formula::Exists(sort, v.to_string(), Box::new(body))
}

pub fn forall(sort: Sort, v: &str, body: Formula) -> Formula {
    Formula::Forall(sort, v.to_string(), Box::new(body))
}

/// Left-nested conjunction; `true` when empty.
pub fn and_all(fs: impl IntoIterator<Item = Formula>) -> Formula {
    fs.into_iter().reduce(and).unwrap_or(Formula::True)
}

/// Left-nested disjunction; `false` when empty.
pub fn or_all(fs: impl IntoIterator<Item = Formula>) -> Formula {
    fs.into_iter().reduce(or).unwrap_or(Formula::False)
}

/// Left-nested coalescing.
pub fn coalesce_all(fs: impl IntoIterator<Item = Formula>) -> Option<Formula> {
    fs.into_iter().reduce(coalesce)
}

pub fn edge(x: &str, s: SegTerm, y: &str) -> Formula {
    Formula::Edge(Ref::var(x), s, Ref::var(y))
}

pub fn seg_var(z: &str) -> SegTerm {
    SegTerm::Var(z.to_string())
}

pub fn num(c: f64) -> Arith {
    Arith::Const(c)
}

pub fn real_var(k: &str) -> Arith {
    Arith::Var(k.to_string())
}

pub fn add(a: Arith, b: Arith) -> Arith {
    Arith::Add(Box::new(a), Box::new(b))
}

pub fn mul(a: Arith, b: Arith) -> Arith {
    Arith::Mul(Box::new(a), Box::new(b))
}

pub fn concat(a: SegTerm, b: SegTerm) -> SegTerm {
    SegTerm::Concat(Box::new(a), Box::new(b))
}

pub fn line(a: Arith, phi: Arith) -> SegTerm {
    SegTerm::Ctor(Ctor::Line, vec![a, phi])
}

pub fn arc(r: Arith, phi: Arith, theta: Arith) -> SegTerm {
    SegTerm::Ctor(Ctor::Arc, vec![r, phi, theta])
}

pub fn interval(a: Arith) -> SegTerm {
    SegTerm::Ctor(Ctor::Interval, vec![a])
}

impl Arith {
    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Arith::Var(v) => {
                out.insert(v.clone());
            }
            Arith::Add(a, b) | Arith::Mul(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Arith::Attr(r, _) => r.vars(out),
            Arith::SafeDist(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Arith::Const(_) => {}
        }
    }

    pub fn mentions(&self, v: &str) -> bool {
        let mut s = BTreeSet::new();
        self.vars(&mut s);
        s.contains(v)
    }
}

impl Ref {
    pub fn vars(&self, out: &mut BTreeSet<String>) {
        if let Ref::Var(v) = self {
            out.insert(v.clone());
        }
    }
}

impl SegTerm {
    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            SegTerm::Ctor(_, args) => args.iter().for_each(|a| a.vars(out)),
            SegTerm::Var(v) => {
                out.insert(v.clone());
            }
            SegTerm::Concat(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            SegTerm::It(r) => r.vars(out),
        }
    }

    pub fn mentions(&self, v: &str) -> bool {
        let mut s = BTreeSet::new();
        self.vars(&mut s);
        s.contains(v)
    }
}

impl PosTerm {
    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            PosTerm::Vertex(r) | PosTerm::ObjPos(r) => r.vars(out),
            PosTerm::Fwd(x, s, t) | PosTerm::Bwd(t, s, x) => {
                x.vars(out);
                s.vars(out);
                t.vars(out);
            }
        }
    }
}

impl Pred {
    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Pred::Meets(a, d, b) => {
                a.vars(out);
                d.vars(out);
                b.vars(out);
            }
            Pred::Inside(o, xs, l) => {
                o.vars(out);
                xs.iter().for_each(|x| x.vars(out));
                if let Some(l) = l {
                    l.vars(out);
                }
            }
            Pred::OnEdges(o, xs) | Pred::GoStraight(o, xs) | Pred::TurnRight(o, xs) | Pred::TurnLeft(o, xs) => {
                o.vars(out);
                xs.iter().for_each(|x| x.vars(out));
            }
            Pred::RightOf(a, b, xs) | Pred::Opposite(a, b, xs) => {
                a.vars(out);
                b.vars(out);
                xs.iter().for_each(|x| x.vars(out));
            }
            Pred::ArcAhead(o, r) => {
                o.vars(out);
                r.vars(out);
            }
            Pred::Passes(o, x) => {
                o.vars(out);
                x.vars(out);
            }
        }
    }
}

impl Formula {
    /// Free variables.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Formula::SegEq(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Formula::LenEq(s, t) => {
                s.vars(out);
                t.vars(out);
            }
            Formula::Edge(x, s, y) => {
                x.vars(out);
                s.vars(out);
                y.vars(out);
            }
            Formula::Road(x, s, y, l) => {
                x.vars(out);
                s.vars(out);
                y.vars(out);
                if let Some(l) = l {
                    l.vars(out);
                }
            }
            Formula::PosEq(p, q) => {
                p.vars(out);
                q.vars(out);
            }
            Formula::Ride(p, s, q) => {
                p.vars(out);
                s.vars(out);
                q.vars(out);
            }
            Formula::Dist(p, q, t) => {
                p.vars(out);
                q.vars(out);
                t.vars(out);
            }
            Formula::ObjEq(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Formula::Color(a, _) => a.vars(out),
            Formula::Pred(p) => p.vars(out),
            Formula::Not(a) | Formula::Closure(a) => a.collect_free(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Coalesce(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Formula::Exists(_, v, body) | Formula::Forall(_, v, body) => {
                let mut inner = BTreeSet::new();
                body.collect_free(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Not(a) | Formula::Closure(a) | Formula::Exists(_, _, a) | Formula::Forall(_, _, a) => 1 + a.size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Coalesce(a, b) => {
                1 + a.size() + b.size()
            }
            _ => 1,
        }
    }
}

impl TemporalFormula {
    /// Whether the formula contains no temporal operator.
    pub fn as_state(&self) -> Option<&Formula> {
        match self {
            TemporalFormula::State(f) => Some(f),
            _ => None,
        }
    }
}
