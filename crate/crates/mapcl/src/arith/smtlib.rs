use super::{Constraint, Linear, Lra, Rel, Q};
use num_traits::{One, Signed, Zero};

fn symbol(v: &str) -> String {
    let simple = v.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if simple {
        v.to_string()
    } else {
        format!("|{v}|")
    }
}

fn rational(x: &Q) -> String {
    let mag = x.abs();
    let body = if mag.is_integer() {
        format!("{}.0", mag.numer())
    } else {
        format!("(/ {}.0 {}.0)", mag.numer(), mag.denom())
    };
    if x.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

fn linear(l: &Linear) -> String {
    let mut parts: Vec<String> = l
        .coeffs
        .iter()
        .map(|(v, c)| if c.is_one() { symbol(v) } else { format!("(* {} {})", rational(c), symbol(v)) })
        .collect();
    if !l.constant.is_zero() || parts.is_empty() {
        parts.push(rational(&l.constant));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn constraint(c: &Constraint) -> String {
    let lhs = linear(&c.lin);
    match c.rel {
        Rel::Le => format!("(<= {lhs} 0.0)"),
        Rel::Lt => format!("(< {lhs} 0.0)"),
        Rel::Eq => format!("(= {lhs} 0.0)"),
        Rel::Ne => format!("(not (= {lhs} 0.0))"),
    }
}

fn term(f: &Lra) -> String {
    match f {
        Lra::True => "true".into(),
        Lra::False => "false".into(),
        Lra::Atom(c) => constraint(c),
        Lra::Not(a) => format!("(not {})", term(a)),
        Lra::And(xs) => format!("(and {})", xs.iter().map(term).collect::<Vec<_>>().join(" ")),
        Lra::Or(xs) => format!("(or {})", xs.iter().map(term).collect::<Vec<_>>().join(" ")),
        Lra::Exists(v, b) => format!("(exists (({} Real)) {})", symbol(v), term(b)),
        Lra::Forall(v, b) => format!("(forall (({} Real)) {})", symbol(v), term(b)),
    }
}

/// A complete SMT-LIB script asserting the formula, with one real constant per free variable.
pub fn export_smtlib(f: &Lra) -> String {
    let mut out = String::from("(set-logic LRA)\n");
    for v in f.free_vars() {
        out.push_str(&format!("(declare-const {} Real)\n", symbol(&v)));
    }
    out.push_str(&format!("(assert {})\n", term(f)));
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{q, q_int};
    use super::*;

    #[test]
    fn equality_script() {
        let s = export_smtlib(&Lra::eq(&Linear::var("k"), &Linear::constant(q_int(5))));
        assert_eq!(s, "(set-logic LRA)\n(declare-const k Real)\n(assert (= (+ k (- 5.0)) 0.0))\n(check-sat)\n(get-model)\n");
    }

    #[test]
    fn empty_conjunction_asserts_true() {
        assert!(export_smtlib(&Lra::and(vec![])).contains("(assert true)"));
    }

    #[test]
    fn quoting_and_fractions() {
        let f = Lra::exists("k'1", Lra::le(&Linear::var("k'1"), &Linear::var("x").scale(&q(0.5))));
        let s = export_smtlib(&f);
        assert!(s.contains("(exists ((|k'1| Real))"), "{s}");
        assert!(s.contains("(* (- (/ 1.0 2.0)) x)"), "{s}");
        assert!(s.contains("(declare-const x Real)"));
    }
}
