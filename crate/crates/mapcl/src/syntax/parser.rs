use super::ast::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unbound variable `{name}`")]
    Unbound { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `{name}` is not a {expected} variable")]
    Sort { line: usize, col: usize, name: String, expected: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    At(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 21] = [
    "++", "&&", "||", "=>", "<=", ">=", "!=", "(", ")", "{", "}", ",", ".", "^", "+", "-", "*", "!", "<", ">", "=",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        let tok = if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let text: String = chars[i..j].iter().collect();
            let v = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                line,
                col,
                msg: format!("bad number `{text}`"),
            })?;
            col += j - i;
            i = j;
            Tok::Num(v)
        } else if c.is_alphabetic() || c == '_' || c == '@' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            col += j - i;
            i = j;
            if let Some(name) = text.strip_prefix('@') {
                if name.is_empty() {
                    return Err(ParseError::Syntax { line: start.0, col: start.1, msg: "empty constant name".into() });
                }
                Tok::At(name.to_string())
            } else {
                Tok::Ident(text)
            }
        } else {
            let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let sym = SYMBOLS.iter().find(|s| rest.starts_with(**s)).ok_or_else(|| ParseError::Syntax {
                line,
                col,
                msg: format!("unexpected character `{c}`"),
            })?;
            i += sym.len();
            col += sym.len();
            Tok::Sym(sym)
        };
        out.push(Token { tok, line: start.0, col: start.1 });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: [&str; 43] = [
    "exists", "forall", "real", "seg", "vertex", "obj", "vehicle", "light", "sign", "edge", "road", "ride", "dist",
    "len", "fwd", "bwd", "C", "true", "false", "next", "always", "eventually", "until", "line", "arc", "interval",
    "pi", "red", "green", "safe_dist", "meets", "inside", "on_edges", "right_of", "opposite", "go_straight",
    "turn_right", "turn_left", "arc_ahead", "passes", "it", "pos", "cl",
];

const PREDICATES: [&str; 10] = [
    "meets", "inside", "on_edges", "right_of", "opposite", "go_straight", "turn_right", "turn_left", "arc_ahead",
    "passes",
];

const ATTRIBUTES: [&str; 7] = ["it", "pos", "sp", "wt", "ln", "cl", "weight"];

/// Whether `name` can be used as a variable.
pub fn is_identifier(name: &str) -> bool {
    let mut cs = name.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_')
        && cs.all(|c| c.is_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
}

/// Untyped term, classified once its context is known.
#[derive(Debug, Clone)]
enum Term {
    Num(f64),
    Ident(String),
    Const(String),
    Attr(Box<Term>, String),
    Call(String, Vec<Term>),
    Set(Vec<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    Concat(Box<Term>, Box<Term>),
}

#[derive(Debug, Clone)]
struct Located {
    term: Term,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Real,
    Seg,
    Pos,
    Obj,
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    scope: Vec<(String, Sort)>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        self.peek_at(0)
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.at.min(self.toks.len() - 1)];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.peek().clone();
        self.at += 1;
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError::Syntax { line, col, msg: msg.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn lookup(&self, name: &str) -> Option<Sort> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    // Temporal layer.

    fn implication(&mut self) -> PResult<TemporalFormula> {
        let lhs = self.until()?;
        if self.eat_sym("=>") {
            let rhs = self.implication()?;
            return Ok(t_implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn until(&mut self) -> PResult<TemporalFormula> {
        let lhs = self.disjunction()?;
        if self.eat_kw("until") {
            let rhs = self.until()?;
            return Ok(TemporalFormula::Until(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<TemporalFormula> {
        let mut lhs = self.coalescing()?;
        while self.eat_sym("||") {
            let rhs = self.coalescing()?;
            lhs = t_or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn coalescing(&mut self) -> PResult<TemporalFormula> {
        let mut lhs = self.conjunction()?;
        loop {
            let pos = self.here();
            if !self.eat_sym("++") {
                return Ok(lhs);
            }
            let rhs = self.conjunction()?;
            match (lhs, rhs) {
                (TemporalFormula::State(a), TemporalFormula::State(b)) => lhs = TemporalFormula::State(coalesce(a, b)),
                _ => {
                    return Err(ParseError::Syntax {
                        line: pos.0,
                        col: pos.1,
                        msg: "coalescing requires non-temporal operands".into(),
                    })
                }
            }
        }
    }

    fn conjunction(&mut self) -> PResult<TemporalFormula> {
        let mut lhs = self.unary()?;
        while self.eat_sym("&&") {
            let rhs = self.unary()?;
            lhs = t_and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<TemporalFormula> {
        if self.eat_sym("!") {
            return Ok(t_not(self.unary()?));
        }
        if self.eat_kw("next") {
            return Ok(TemporalFormula::Next(Box::new(self.unary()?)));
        }
        if self.eat_kw("always") {
            return Ok(TemporalFormula::Always(Box::new(self.unary()?)));
        }
        if self.eat_kw("eventually") {
            return Ok(TemporalFormula::Eventually(Box::new(self.unary()?)));
        }
        if self.is_kw("exists") || self.is_kw("forall") {
            return self.quantifier();
        }
        self.atom()
    }

    fn quantifier(&mut self) -> PResult<TemporalFormula> {
        let universal = self.is_kw("forall");
        self.bump();
        let sort = match self.bump() {
            Tok::Ident(s) => match s.as_str() {
                "real" => Sort::Real,
                "seg" => Sort::Seg,
                "vertex" => Sort::Vertex,
                "obj" => Sort::Obj(None),
                "vehicle" => Sort::Obj(Some(ObjKind::Vehicle)),
                "light" => Sort::Obj(Some(ObjKind::Light)),
                "sign" => Sort::Obj(Some(ObjKind::Sign)),
                _ => {
                    self.at -= 1;
                    return self.error(format!("expected a sort, found `{s}`"));
                }
            },
            t => {
                self.at -= 1;
                return self.error(format!("expected a sort, found {}", describe(&t)));
            }
        };
        let name = match self.peek().clone() {
            Tok::Ident(n) if is_identifier(&n) => {
                self.bump();
                n
            }
            t => return self.error(format!("expected a variable name, found {}", describe(&t))),
        };
        self.expect_sym(".")?;
        let qpos = self.here();
        self.scope.push((name.clone(), sort));
        let body = self.implication();
        self.scope.pop();
        let body = body?;
        match body {
            TemporalFormula::State(f) => Ok(TemporalFormula::State(if universal {
                forall(sort, &name, f)
            } else {
                exists(sort, &name, f)
            })),
            body => match sort {
                Sort::Obj(kind) => Ok(if universal {
                    TemporalFormula::Forall(kind, name, Box::new(body))
                } else {
                    TemporalFormula::Exists(kind, name, Box::new(body))
                }),
                _ => Err(ParseError::Syntax {
                    line: qpos.0,
                    col: qpos.1,
                    msg: "temporal operators may only occur under object quantifiers".into(),
                }),
            },
        }
    }

    fn atom(&mut self) -> PResult<TemporalFormula> {
        self.state_atom().map(TemporalFormula::State).or_else(|e| match e {
            ParenTemporal(t) => Ok(t),
            Failed(e) => Err(e),
        })
    }

    fn state_atom(&mut self) -> Result<Formula, AtomError> {
        if self.eat_kw("true") {
            return Ok(Formula::True);
        }
        if self.eat_kw("false") {
            return Ok(Formula::False);
        }
        if self.is_kw("C") && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.bump();
            self.bump();
            let pos = self.here();
            let inner = self.implication()?;
            self.expect_sym(")")?;
            return match inner {
                TemporalFormula::State(f) => Ok(closure(f)),
                _ => Err(Failed(ParseError::Syntax {
                    line: pos.0,
                    col: pos.1,
                    msg: "closure requires a non-temporal operand".into(),
                })),
            };
        }
        let mut first = None;
        if self.is_sym("(") {
            let save = self.at;
            self.bump();
            match self.implication() {
                Ok(inner) => {
                    if self.eat_sym(")") && !self.continues_term() {
                        return match inner {
                            TemporalFormula::State(f) => Ok(f),
                            t => Err(ParenTemporal(t)),
                        };
                    }
                }
                Err(e) => first = Some(e),
            }
            self.at = save;
        }
        if let Tok::Ident(name) = self.peek().clone() {
            if matches!(self.peek_at(1), Tok::Sym("(")) {
                match name.as_str() {
                    "edge" | "road" | "ride" => return Ok(self.graph_atom(&name)?),
                    n if PREDICATES.contains(&n) => return Ok(self.predicate(&name)?),
                    _ => {}
                }
            }
        }
        self.relation().map_err(|e| Failed(first.unwrap_or(e)))
    }

    fn continues_term(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Sym("+" | "-" | "*" | "^" | "." | "=" | "!=" | "<" | "<=" | ">" | ">=")
        )
    }

    fn graph_atom(&mut self, name: &str) -> PResult<Formula> {
        self.bump();
        let args = self.call_args()?;
        let n = args.len();
        match (name, n) {
            ("edge", 3) => {
                let mut it = args.into_iter();
                let x = self.vertex_ref(it.next().unwrap())?;
                let s = self.seg(it.next().unwrap())?;
                let y = self.vertex_ref(it.next().unwrap())?;
                Ok(Formula::Edge(x, s, y))
            }
            ("road", 3 | 4) => {
                let mut it = args.into_iter();
                let x = self.vertex_ref(it.next().unwrap())?;
                let s = self.seg(it.next().unwrap())?;
                let y = self.vertex_ref(it.next().unwrap())?;
                let l = it.next().map(|t| self.arith(t)).transpose()?;
                Ok(Formula::Road(x, s, y, l))
            }
            ("ride", 3) => {
                let mut it = args.into_iter();
                let p = self.pos(it.next().unwrap())?;
                let s = self.seg(it.next().unwrap())?;
                let q = self.pos(it.next().unwrap())?;
                Ok(Formula::Ride(p, s, q))
            }
            _ => self.error(format!("`{name}` does not take {n} arguments")),
        }
    }

    fn predicate(&mut self, name: &str) -> PResult<Formula> {
        let (line, col) = self.here();
        self.bump();
        let args = self.call_args()?;
        let arity_error = || ParseError::Syntax { line, col, msg: format!("wrong number of arguments to `{name}`") };
        let mut it = args.into_iter();
        let mut next = || it.next().ok_or_else(arity_error);
        let pred = match name {
            "meets" => {
                let (a, d, b) = (next()?, next()?, next()?);
                Pred::Meets(self.obj_ref(a)?, self.arith(d)?, self.obj_ref(b)?)
            }
            "inside" => {
                let (o, xs) = (next()?, next()?);
                let lane = next().ok();
                Pred::Inside(
                    self.obj_ref(o)?,
                    self.vertex_set(xs)?,
                    lane.map(|l| self.arith(l)).transpose()?,
                )
            }
            "on_edges" | "go_straight" | "turn_right" | "turn_left" => {
                let (o, xs) = (next()?, next()?);
                let (o, xs) = (self.obj_ref(o)?, self.vertex_set(xs)?);
                match name {
                    "on_edges" => Pred::OnEdges(o, xs),
                    "go_straight" => Pred::GoStraight(o, xs),
                    "turn_right" => Pred::TurnRight(o, xs),
                    _ => Pred::TurnLeft(o, xs),
                }
            }
            "right_of" | "opposite" => {
                let (a, b, xs) = (next()?, next()?, next()?);
                let (a, b, xs) = (self.obj_ref(a)?, self.obj_ref(b)?, self.vertex_set(xs)?);
                if name == "right_of" {
                    Pred::RightOf(a, b, xs)
                } else {
                    Pred::Opposite(a, b, xs)
                }
            }
            "arc_ahead" => {
                let (o, r) = (next()?, next()?);
                Pred::ArcAhead(self.obj_ref(o)?, self.arith(r)?)
            }
            _ => {
                let (o, x) = (next()?, next()?);
                Pred::Passes(self.obj_ref(o)?, self.vertex_ref(x)?)
            }
        };
        if next().is_ok() {
            return Err(arity_error());
        }
        Ok(Formula::Pred(pred))
    }

    fn vertex_set(&self, t: Located) -> PResult<Vec<Ref>> {
        match t.term {
            Term::Set(items) => items
                .into_iter()
                .map(|x| self.vertex_ref(Located { term: x, line: t.line, col: t.col }))
                .collect(),
            _ => Err(ParseError::Syntax { line: t.line, col: t.col, msg: "expected a vertex set `{...}`".into() }),
        }
    }

    fn relation(&mut self) -> PResult<Formula> {
        let lhs = self.term()?;
        let (line, col) = self.here();
        let op = match self.peek() {
            Tok::Sym(s @ ("=" | "!=" | "<" | "<=" | ">" | ">=")) => *s,
            t => return self.error(format!("expected a formula, found {}", describe(t))),
        };
        self.bump();
        let rhs = self.term()?;
        let negate = op == "!=";
        let mk = |f: Formula| if negate { not(f) } else { f };
        let cmp = match op {
            "<" => Some(CmpOp::Lt),
            "<=" => Some(CmpOp::Le),
            ">" => Some(CmpOp::Gt),
            ">=" => Some(CmpOp::Ge),
            _ => None,
        };
        if let Some(cmp) = cmp {
            return Ok(Formula::Cmp(cmp, self.arith(lhs)?, self.arith(rhs)?));
        }
        if let Term::Call(name, args) = &lhs.term {
            match (name.as_str(), args.len()) {
                ("len", 1) => {
                    let s = self.seg(Located { term: args[0].clone(), line: lhs.line, col: lhs.col })?;
                    return Ok(mk(Formula::LenEq(s, self.arith(rhs)?)));
                }
                ("dist", 2) => {
                    let p = self.pos(Located { term: args[0].clone(), line: lhs.line, col: lhs.col })?;
                    let q = self.pos(Located { term: args[1].clone(), line: lhs.line, col: lhs.col })?;
                    return Ok(mk(Formula::Dist(p, q, self.arith(rhs)?)));
                }
                ("len" | "dist", _) => {
                    return Err(ParseError::Syntax { line, col, msg: format!("wrong number of arguments to `{name}`") })
                }
                _ => {}
            }
        }
        if let Term::Attr(obj, attr) = &lhs.term {
            if attr == "cl" {
                let o = self.obj_ref(Located { term: (**obj).clone(), line: lhs.line, col: lhs.col })?;
                let c = match &rhs.term {
                    Term::Ident(c) if c == "red" => Color::Red,
                    Term::Ident(c) if c == "green" => Color::Green,
                    _ => {
                        return Err(ParseError::Syntax { line: rhs.line, col: rhs.col, msg: "expected `red` or `green`".into() })
                    }
                };
                return Ok(mk(Formula::Color(o, c)));
            }
        }
        let kind = match (self.kind(&lhs)?, self.kind(&rhs)?) {
            (Some(a), Some(b)) if a != b => {
                return Err(ParseError::Syntax { line, col, msg: "operands of `=` have different sorts".into() })
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => Kind::Pos,
        };
        let f = match kind {
            Kind::Real => Formula::Cmp(CmpOp::Eq, self.arith(lhs)?, self.arith(rhs)?),
            Kind::Seg => Formula::SegEq(self.seg(lhs)?, self.seg(rhs)?),
            Kind::Pos => Formula::PosEq(self.pos(lhs)?, self.pos(rhs)?),
            Kind::Obj => Formula::ObjEq(self.obj_ref(lhs)?, self.obj_ref(rhs)?),
        };
        Ok(mk(f))
    }

    fn kind(&self, t: &Located) -> PResult<Option<Kind>> {
        Ok(match &t.term {
            Term::Num(_) | Term::Add(..) | Term::Sub(..) | Term::Mul(..) | Term::Neg(_) => Some(Kind::Real),
            Term::Ident(n) if n == "pi" => Some(Kind::Real),
            Term::Ident(n) => match self.lookup(n) {
                Some(Sort::Real) => Some(Kind::Real),
                Some(Sort::Seg) => Some(Kind::Seg),
                Some(Sort::Vertex) => Some(Kind::Pos),
                Some(Sort::Obj(_)) => Some(Kind::Obj),
                None => return Err(ParseError::Unbound { line: t.line, col: t.col, name: n.clone() }),
            },
            Term::Const(_) => None,
            Term::Attr(_, a) => match a.as_str() {
                "it" => Some(Kind::Seg),
                "pos" => Some(Kind::Pos),
                _ => Some(Kind::Real),
            },
            Term::Call(n, _) => match n.as_str() {
                "line" | "arc" | "interval" => Some(Kind::Seg),
                "fwd" | "bwd" => Some(Kind::Pos),
                "safe_dist" => Some(Kind::Real),
                _ => return Err(ParseError::Syntax { line: t.line, col: t.col, msg: format!("`{n}` is not a term") }),
            },
            Term::Concat(..) => Some(Kind::Seg),
            Term::Set(_) => {
                return Err(ParseError::Syntax { line: t.line, col: t.col, msg: "unexpected vertex set".into() })
            }
        })
    }

    // Terms.

    fn call_args(&mut self) -> PResult<Vec<Located>> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if self.eat_sym(")") {
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            if self.eat_sym(")") {
                return Ok(args);
            }
            self.expect_sym(",")?;
        }
    }

    fn term(&mut self) -> PResult<Located> {
        let mut lhs = self.sum()?;
        while self.eat_sym("^") {
            let rhs = self.sum()?;
            lhs = Located { term: Term::Concat(Box::new(lhs.term), Box::new(rhs.term)), ..lhs };
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> PResult<Located> {
        let mut lhs = self.product()?;
        loop {
            if self.eat_sym("+") {
                let rhs = self.product()?;
                lhs = Located { term: Term::Add(Box::new(lhs.term), Box::new(rhs.term)), ..lhs };
            } else if self.eat_sym("-") {
                let rhs = self.product()?;
                lhs = Located { term: Term::Sub(Box::new(lhs.term), Box::new(rhs.term)), ..lhs };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> PResult<Located> {
        let mut lhs = self.factor()?;
        while self.eat_sym("*") {
            let rhs = self.factor()?;
            lhs = Located { term: Term::Mul(Box::new(lhs.term), Box::new(rhs.term)), ..lhs };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> PResult<Located> {
        let (line, col) = self.here();
        if self.eat_sym("-") {
            let inner = self.factor()?;
            let term = match inner.term {
                Term::Num(v) => Term::Num(-v),
                t => Term::Neg(Box::new(t)),
            };
            return Ok(Located { term, line, col });
        }
        let mut base = match self.bump() {
            Tok::Num(v) => Term::Num(v),
            Tok::At(n) => Term::Const(n),
            Tok::Ident(n) => {
                if self.is_sym("(") {
                    if !matches!(
                        n.as_str(),
                        "line" | "arc" | "interval" | "fwd" | "bwd" | "len" | "dist" | "safe_dist"
                    ) {
                        self.at -= 1;
                        return self.error(format!("unknown function `{n}`"));
                    }
                    Term::Call(n, self.call_args()?.into_iter().map(|a| a.term).collect())
                } else {
                    Term::Ident(n)
                }
            }
            Tok::Sym("(") => {
                let inner = self.term()?;
                self.expect_sym(")")?;
                inner.term
            }
            Tok::Sym("{") => {
                let mut items = Vec::new();
                if !self.eat_sym("}") {
                    loop {
                        items.push(self.term()?.term);
                        if self.eat_sym("}") {
                            break;
                        }
                        self.expect_sym(",")?;
                    }
                }
                Term::Set(items)
            }
            t => {
                self.at -= 1;
                return self.error(format!("expected a term, found {}", describe(&t)));
            }
        };
        while self.is_sym(".") {
            self.bump();
            match self.bump() {
                Tok::Ident(a) if ATTRIBUTES.contains(&a.as_str()) => base = Term::Attr(Box::new(base), a),
                t => {
                    self.at -= 1;
                    return self.error(format!("unknown attribute {}", describe(&t)));
                }
            }
        }
        Ok(Located { term: base, line, col })
    }

    // Classification.

    fn at(&self, t: &Located, term: Term) -> Located {
        Located { term, line: t.line, col: t.col }
    }

    fn var_of(&self, t: &Located, name: &str, expected: Sort) -> PResult<String> {
        match self.lookup(name) {
            None => Err(ParseError::Unbound { line: t.line, col: t.col, name: name.to_string() }),
            Some(s) if s == expected || (s.is_obj() && expected.is_obj()) => Ok(name.to_string()),
            Some(_) => Err(ParseError::Sort {
                line: t.line,
                col: t.col,
                name: name.to_string(),
                expected: if expected.is_obj() { "object" } else { expected.keyword() },
            }),
        }
    }

    fn syntax<T>(&self, t: &Located, msg: &str) -> PResult<T> {
        Err(ParseError::Syntax { line: t.line, col: t.col, msg: msg.to_string() })
    }

    fn arith(&self, t: Located) -> PResult<Arith> {
        Ok(match &t.term {
            Term::Num(v) => Arith::Const(*v),
            Term::Ident(n) if n == "pi" => Arith::Const(std::f64::consts::PI),
            Term::Ident(n) => Arith::Var(self.var_of(&t, n, Sort::Real)?),
            Term::Add(a, b) => add(self.arith(self.at(&t, (**a).clone()))?, self.arith(self.at(&t, (**b).clone()))?),
            Term::Sub(a, b) => add(self.arith(self.at(&t, (**a).clone()))?, negate(self.arith(self.at(&t, (**b).clone()))?)),
            Term::Mul(a, b) => mul(self.arith(self.at(&t, (**a).clone()))?, self.arith(self.at(&t, (**b).clone()))?),
            Term::Neg(a) => negate(self.arith(self.at(&t, (**a).clone()))?),
            Term::Attr(o, a) => {
                let attr = match a.as_str() {
                    "sp" => NumAttr::Sp,
                    "wt" => NumAttr::Wt,
                    "ln" => NumAttr::Ln,
                    "weight" => NumAttr::Weight,
                    _ => return self.syntax(&t, &format!("attribute `{a}` is not numeric")),
                };
                Arith::Attr(self.obj_ref(self.at(&t, (**o).clone()))?, attr)
            }
            Term::Call(n, args) if n == "safe_dist" && args.len() == 2 => Arith::SafeDist(
                self.obj_ref(self.at(&t, args[0].clone()))?,
                self.obj_ref(self.at(&t, args[1].clone()))?,
            ),
            _ => return self.syntax(&t, "expected an arithmetic term"),
        })
    }

    fn seg(&self, t: Located) -> PResult<SegTerm> {
        Ok(match &t.term {
            Term::Ident(n) => SegTerm::Var(self.var_of(&t, n, Sort::Seg)?),
            Term::Concat(a, b) => concat(self.seg(self.at(&t, (**a).clone()))?, self.seg(self.at(&t, (**b).clone()))?),
            Term::Attr(o, a) if a == "it" => SegTerm::It(self.obj_ref(self.at(&t, (**o).clone()))?),
            Term::Call(n, args) if matches!(n.as_str(), "line" | "arc" | "interval") => {
                let ctor = match n.as_str() {
                    "line" => Ctor::Line,
                    "arc" => Ctor::Arc,
                    _ => Ctor::Interval,
                };
                if args.len() != ctor.arity() {
                    return self.syntax(&t, &format!("`{n}` takes {} arguments", ctor.arity()));
                }
                let args = args.iter().map(|a| self.arith(self.at(&t, a.clone()))).collect::<PResult<_>>()?;
                SegTerm::Ctor(ctor, args)
            }
            _ => return self.syntax(&t, "expected a segment term"),
        })
    }

    fn pos(&self, t: Located) -> PResult<PosTerm> {
        Ok(match &t.term {
            Term::Ident(_) | Term::Const(_) => PosTerm::Vertex(self.vertex_ref(t)?),
            Term::Attr(o, a) if a == "pos" => PosTerm::ObjPos(self.obj_ref(self.at(&t, (**o).clone()))?),
            Term::Call(n, args) if n == "fwd" && args.len() == 3 => PosTerm::Fwd(
                self.vertex_ref(self.at(&t, args[0].clone()))?,
                self.seg(self.at(&t, args[1].clone()))?,
                self.arith(self.at(&t, args[2].clone()))?,
            ),
            Term::Call(n, args) if n == "bwd" && args.len() == 3 => PosTerm::Bwd(
                self.arith(self.at(&t, args[0].clone()))?,
                self.seg(self.at(&t, args[1].clone()))?,
                self.vertex_ref(self.at(&t, args[2].clone()))?,
            ),
            _ => return self.syntax(&t, "expected a position term"),
        })
    }

    fn vertex_ref(&self, t: Located) -> PResult<Ref> {
        match &t.term {
            Term::Const(c) => Ok(Ref::Const(c.clone())),
            Term::Ident(n) => Ok(Ref::Var(self.var_of(&t, n, Sort::Vertex)?)),
            _ => self.syntax(&t, "expected a vertex"),
        }
    }

    fn obj_ref(&self, t: Located) -> PResult<Ref> {
        match &t.term {
            Term::Const(c) => Ok(Ref::Const(c.clone())),
            Term::Ident(n) => Ok(Ref::Var(self.var_of(&t, n, Sort::Obj(None))?)),
            _ => self.syntax(&t, "expected an object"),
        }
    }
}

enum AtomError {
    ParenTemporal(TemporalFormula),
    Failed(ParseError),
}

use AtomError::{Failed, ParenTemporal};

impl From<ParseError> for AtomError {
    fn from(e: ParseError) -> Self {
        Failed(e)
    }
}

fn negate(a: Arith) -> Arith {
    match a {
        Arith::Const(c) => Arith::Const(-c),
        a => mul(Arith::Const(-1.0), a),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number `{v}`"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::At(s) => format!("`@{s}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Conjunction that stays non-temporal when both sides are.
pub fn t_and(a: TemporalFormula, b: TemporalFormula) -> TemporalFormula {
    match (a, b) {
        (TemporalFormula::State(a), TemporalFormula::State(b)) => TemporalFormula::State(and(a, b)),
        (a, b) => TemporalFormula::And(Box::new(a), Box::new(b)),
    }
}

pub fn t_or(a: TemporalFormula, b: TemporalFormula) -> TemporalFormula {
    match (a, b) {
        (TemporalFormula::State(a), TemporalFormula::State(b)) => TemporalFormula::State(or(a, b)),
        (a, b) => TemporalFormula::Or(Box::new(a), Box::new(b)),
    }
}

pub fn t_implies(a: TemporalFormula, b: TemporalFormula) -> TemporalFormula {
    match (a, b) {
        (TemporalFormula::State(a), TemporalFormula::State(b)) => TemporalFormula::State(implies(a, b)),
        (a, b) => TemporalFormula::Implies(Box::new(a), Box::new(b)),
    }
}

pub fn t_not(a: TemporalFormula) -> TemporalFormula {
    match a {
        TemporalFormula::State(a) => TemporalFormula::State(not(a)),
        a => TemporalFormula::Not(Box::new(a)),
    }
}

/// Parses a temporal formula whose free variables are drawn from `scope`.
pub fn parse_temporal_with(src: &str, scope: &[(&str, Sort)]) -> Result<TemporalFormula, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, at: 0, scope: scope.iter().map(|(n, s)| (n.to_string(), *s)).collect() };
    let f = p.implication()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {}", describe(p.peek())));
    }
    Ok(f)
}

pub fn parse_temporal(src: &str) -> Result<TemporalFormula, ParseError> {
    parse_temporal_with(src, &[])
}

/// Parses a non-temporal formula whose free variables are drawn from `scope`.
pub fn parse_with(src: &str, scope: &[(&str, Sort)]) -> Result<Formula, ParseError> {
    match parse_temporal_with(src, scope)? {
        TemporalFormula::State(f) => Ok(f),
        _ => Err(ParseError::Syntax { line: 1, col: 1, msg: "unexpected temporal operator".into() }),
    }
}

pub fn parse(src: &str) -> Result<Formula, ParseError> {
    parse_with(src, &[])
}
