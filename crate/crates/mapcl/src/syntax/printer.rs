use super::ast::*;
use std::fmt;

const QUANT: u8 = 0;
const IMPLIES: u8 = 1;
const UNTIL: u8 = 2;
const OR: u8 = 3;
const COALESCE: u8 = 4;
const AND: u8 = 5;
const UNARY: u8 = 6;
const ATOM: u8 = 7;

fn paren(s: String, prec: u8, min: u8) -> String {
    if prec < min {
        format!("({s})")
    } else {
        s
    }
}

fn num(c: f64) -> String {
    if c == std::f64::consts::PI {
        "pi".into()
    } else {
        format!("{c}")
    }
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Var(v) => write!(f, "{v}"),
            Ref::Const(c) => write!(f, "@{c}"),
        }
    }
}

fn arith(a: &Arith) -> (String, u8) {
    match a {
        Arith::Const(c) if *c < 0.0 => (num(*c), 2),
        Arith::Const(c) => (num(*c), 3),
        Arith::Var(v) => (v.clone(), 3),
        Arith::Attr(r, attr) => (format!("{r}.{}", attr.name()), 3),
        Arith::SafeDist(a, b) => (format!("safe_dist({a}, {b})"), 3),
        Arith::Add(a, b) => {
            let (l, lp) = arith(a);
            let (r, rp) = arith(b);
            (format!("{} + {}", paren(l, lp, 1), paren(r, rp, 2)), 1)
        }
        Arith::Mul(a, b) => {
            let (l, lp) = arith(a);
            let (r, rp) = arith(b);
            (format!("{} * {}", paren(l, lp, 2), paren(r, rp, 3)), 2)
        }
    }
}

impl fmt::Display for Arith {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&arith(self).0)
    }
}

fn seg(s: &SegTerm) -> (String, u8) {
    match s {
        SegTerm::Ctor(c, args) => {
            let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            (format!("{}({})", c.name(), args.join(", ")), 2)
        }
        SegTerm::Var(v) => (v.clone(), 2),
        SegTerm::It(r) => (format!("{r}.it"), 2),
        SegTerm::Concat(a, b) => {
            let (l, lp) = seg(a);
            let (r, rp) = seg(b);
            (format!("{} ^ {}", paren(l, lp, 1), paren(r, rp, 2)), 1)
        }
    }
}

impl fmt::Display for SegTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&seg(self).0)
    }
}

impl fmt::Display for PosTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosTerm::Vertex(r) => write!(f, "{r}"),
            PosTerm::Fwd(x, s, t) => write!(f, "fwd({x}, {s}, {t})"),
            PosTerm::Bwd(t, s, x) => write!(f, "bwd({t}, {s}, {x})"),
            PosTerm::ObjPos(r) => write!(f, "{r}.pos"),
        }
    }
}

fn set(xs: &[Ref]) -> String {
    let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.name();
        match self {
            Pred::Meets(a, d, b) => write!(f, "{name}({a}, {d}, {b})"),
            Pred::Inside(o, xs, None) => write!(f, "{name}({o}, {})", set(xs)),
            Pred::Inside(o, xs, Some(l)) => write!(f, "{name}({o}, {}, {l})", set(xs)),
            Pred::OnEdges(o, xs) | Pred::GoStraight(o, xs) | Pred::TurnRight(o, xs) | Pred::TurnLeft(o, xs) => {
                write!(f, "{name}({o}, {})", set(xs))
            }
            Pred::RightOf(a, b, xs) | Pred::Opposite(a, b, xs) => write!(f, "{name}({a}, {b}, {})", set(xs)),
            Pred::ArcAhead(o, r) => write!(f, "{name}({o}, {r})"),
            Pred::Passes(o, x) => write!(f, "{name}({o}, {x})"),
        }
    }
}

fn formula(phi: &Formula) -> (String, u8) {
    use Formula::*;
    match phi {
        True => ("true".into(), ATOM),
        False => ("false".into(), ATOM),
        Cmp(op, a, b) => (format!("{a} {} {b}", op.symbol()), ATOM),
        SegEq(a, b) => (format!("{a} = {b}"), ATOM),
        LenEq(s, t) => (format!("len({s}) = {t}"), ATOM),
        Edge(x, s, y) => (format!("edge({x}, {s}, {y})"), ATOM),
        Road(x, s, y, None) => (format!("road({x}, {s}, {y})"), ATOM),
        Road(x, s, y, Some(l)) => (format!("road({x}, {s}, {y}, {l})"), ATOM),
        PosEq(p, q) => (format!("{p} = {q}"), ATOM),
        Ride(p, s, q) => (format!("ride({p}, {s}, {q})"), ATOM),
        Dist(p, q, t) => (format!("dist({p}, {q}) = {t}"), ATOM),
        ObjEq(a, b) => (format!("{a} = {b}"), ATOM),
        Color(r, c) => (format!("{r}.cl = {}", if *c == super::ast::Color::Red { "red" } else { "green" }), ATOM),
        Pred(p) => (p.to_string(), ATOM),
        Closure(a) => (format!("C({})", formula(a).0), ATOM),
        Not(a) => {
            let (s, p) = formula(a);
            (format!("!{}", paren(s, p, UNARY)), UNARY)
        }
        And(a, b) => left_assoc(formula(a), formula(b), "&&", AND),
        Coalesce(a, b) => left_assoc(formula(a), formula(b), "++", COALESCE),
        Or(a, b) => left_assoc(formula(a), formula(b), "||", OR),
        Implies(a, b) => right_assoc(formula(a), formula(b), "=>", IMPLIES),
        Exists(sort, v, body) => (format!("exists {} {v}. {}", sort.keyword(), formula(body).0), QUANT),
        Forall(sort, v, body) => (format!("forall {} {v}. {}", sort.keyword(), formula(body).0), QUANT),
    }
}

fn left_assoc(l: (String, u8), r: (String, u8), op: &str, prec: u8) -> (String, u8) {
    (format!("{} {op} {}", paren(l.0, l.1, prec), paren(r.0, r.1, prec + 1)), prec)
}

fn right_assoc(l: (String, u8), r: (String, u8), op: &str, prec: u8) -> (String, u8) {
    (format!("{} {op} {}", paren(l.0, l.1, prec + 1), paren(r.0, r.1, prec.max(1))), prec)
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&formula(self).0)
    }
}

fn temporal(phi: &TemporalFormula) -> (String, u8) {
    use TemporalFormula::*;
    let unary = |kw: &str, a: &TemporalFormula| {
        let (s, p) = temporal(a);
        (format!("{kw}{}", paren(s, p, UNARY)), UNARY)
    };
    let kind = |k: &Option<ObjKind>| Sort::Obj(*k).keyword();
    match phi {
        State(f) => formula(f),
        Next(a) => unary("next ", a),
        Always(a) => unary("always ", a),
        Eventually(a) => unary("eventually ", a),
        Not(a) => unary("!", a),
        And(a, b) => left_assoc(temporal(a), temporal(b), "&&", AND),
        Or(a, b) => left_assoc(temporal(a), temporal(b), "||", OR),
        Until(a, b) => right_assoc(temporal(a), temporal(b), "until", UNTIL),
        Implies(a, b) => right_assoc(temporal(a), temporal(b), "=>", IMPLIES),
        Exists(k, v, body) => (format!("exists {} {v}. {}", kind(k), temporal(body).0), QUANT),
        Forall(k, v, body) => (format!("forall {} {v}. {}", kind(k), temporal(body).0), QUANT),
    }
}

impl fmt::Display for TemporalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&temporal(self).0)
    }
}
