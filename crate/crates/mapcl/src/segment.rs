//! Road segments and their partial algebra.
//!
//! A segment is one of three shapes: a bare interval `[0, a]`, a planar curve
//! built from straight lines and circular arcs, or a region obtained by
//! thickening a curve. Curves start at the origin; a primitive's heading is
//! measured counterclockwise from the x axis.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

/// Tolerance for points, lengths and headings.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegError {
    #[error("concatenation undefined: {0}")]
    Undefined(String),
    #[error("segments of different kinds cannot be combined")]
    KindMismatch,
    #[error("split bounds {a1}..{a2} outside [0, {len}]")]
    OutOfRange { a1: f64, a2: f64, len: f64 },
    #[error("invalid segment: {0}")]
    Invalid(String),
    #[error("the empty curve has no slope")]
    EmptyCurve,
}

pub type Result<T> = std::result::Result<T, SegError>;

/// `|x - y|` within [`TOL`], scaled for large magnitudes.
pub fn approx(x: f64, y: f64) -> bool {
    (x - y).abs() <= TOL * 1f64.max(x.abs()).max(y.abs())
}

/// Normalizes an angle into `(-pi, pi]`.
pub fn norm_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Equality of headings modulo `2 pi`.
pub fn angle_eq(x: f64, y: f64) -> bool {
    let d = (x - y).rem_euclid(2.0 * PI);
    d <= TOL * 1f64.max(x.abs()).max(y.abs()) || 2.0 * PI - d <= TOL * 1f64.max(x.abs()).max(y.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prim {
    /// `Line(a, phi)`: length `a`, heading `phi`.
    Line(f64, f64),
    /// `Arc(r, phi, theta)`: radius `r`, initial heading `phi`, signed sweep `theta`.
    Arc(f64, f64, f64),
}

impl Prim {
    pub fn line(a: f64, phi: f64) -> Result<Prim> {
        if !(a > 0.0) || !a.is_finite() || !phi.is_finite() {
            return Err(SegError::Invalid(format!("line({a}, {phi})")));
        }
        Ok(Prim::Line(a, phi))
    }

    pub fn arc(r: f64, phi: f64, theta: f64) -> Result<Prim> {
        if !(r > 0.0) || theta == 0.0 || !r.is_finite() || !phi.is_finite() || !theta.is_finite() {
            return Err(SegError::Invalid(format!("arc({r}, {phi}, {theta})")));
        }
        Ok(Prim::Arc(r, phi, theta))
    }

    pub fn len(&self) -> f64 {
        match *self {
            Prim::Line(a, _) => a,
            Prim::Arc(r, _, th) => r * th.abs(),
        }
    }

    pub fn start_slope(&self) -> f64 {
        match *self {
            Prim::Line(_, phi) | Prim::Arc(_, phi, _) => phi,
        }
    }

    pub fn end_slope(&self) -> f64 {
        match *self {
            Prim::Line(_, phi) => phi,
            Prim::Arc(_, phi, th) => phi + th,
        }
    }

    /// Displacement after the fraction `t` of the primitive.
    pub fn displacement(&self, t: f64) -> (f64, f64) {
        match *self {
            Prim::Line(a, phi) => (t * a * phi.cos(), t * a * phi.sin()),
            Prim::Arc(r, phi, th) => {
                let s = th.signum() * r;
                (s * ((phi + t * th).sin() - phi.sin()), s * (phi.cos() - (phi + t * th).cos()))
            }
        }
    }

    /// The piece between arc lengths `lo` and `hi` (`0 <= lo < hi <= len`).
    fn piece(&self, lo: f64, hi: f64) -> Prim {
        match *self {
            Prim::Line(_, phi) => Prim::Line(hi - lo, phi),
            Prim::Arc(r, phi, th) => {
                let l = self.len();
                Prim::Arc(r, phi + th * lo / l, th * (hi - lo) / l)
            }
        }
    }

    fn equiv(&self, other: &Prim) -> bool {
        match (*self, *other) {
            (Prim::Line(a, p), Prim::Line(b, q)) => approx(a, b) && angle_eq(p, q),
            (Prim::Arc(r, p, t), Prim::Arc(s, q, u)) => approx(r, s) && angle_eq(p, q) && approx(t, u),
            _ => false,
        }
    }

    /// Merges `next` into `self` when the two form a single primitive.
    fn merge(&self, next: &Prim) -> Option<Prim> {
        match (*self, *next) {
            (Prim::Line(a, p), Prim::Line(b, q)) if angle_eq(p, q) => Some(Prim::Line(a + b, p)),
            (Prim::Arc(r, p, t), Prim::Arc(s, q, u))
                if approx(r, s) && t.signum() == u.signum() && angle_eq(p + t, q) =>
            {
                Some(Prim::Arc(r, p, t + u))
            }
            _ => None,
        }
    }
}

/// A chain of primitives; the empty chain is the empty curve.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Curve {
    pub prims: Vec<Prim>,
}

impl Curve {
    pub fn empty() -> Curve {
        Curve { prims: Vec::new() }
    }

    pub fn new(prims: Vec<Prim>) -> Result<Curve> {
        let mut c = Curve::empty();
        for p in prims {
            c = c.concat(&Curve { prims: vec![p] })?;
        }
        Ok(c)
    }

    pub fn is_empty(&self) -> bool {
        self.prims.is_empty()
    }

    pub fn len(&self) -> f64 {
        self.prims.iter().map(Prim::len).sum()
    }

    pub fn concat(&self, other: &Curve) -> Result<Curve> {
        let (Some(last), Some(first)) = (self.prims.last(), other.prims.first()) else {
            let mut prims = self.prims.clone();
            prims.extend_from_slice(&other.prims);
            return Ok(Curve { prims });
        };
        if !angle_eq(last.end_slope(), first.start_slope()) {
            return Err(SegError::Undefined(format!(
                "end slope {} differs from start slope {}",
                last.end_slope(),
                first.start_slope()
            )));
        }
        let mut prims = self.prims.clone();
        for p in &other.prims {
            match prims.last().and_then(|q| q.merge(p)) {
                Some(m) => *prims.last_mut().unwrap() = m,
                None => prims.push(*p),
            }
        }
        Ok(Curve { prims })
    }

    pub fn split(&self, a1: f64, a2: f64) -> Result<Curve> {
        let len = self.len();
        let (a1, a2) = check_range(a1, a2, len)?;
        let mut out = Vec::new();
        let mut start = 0.0;
        for p in &self.prims {
            let l = p.len();
            let lo = a1.max(start) - start;
            let hi = a2.min(start + l) - start;
            if hi - lo > TOL * 1f64.max(l) {
                out.push(p.piece(lo, hi));
            }
            start += l;
        }
        Ok(Curve { prims: out })
    }

    /// Point reached after the fraction `t` of the arc length.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let target = t.clamp(0.0, 1.0) * self.len();
        let (mut x, mut y) = (0.0, 0.0);
        let mut start = 0.0;
        for p in &self.prims {
            let l = p.len();
            if target < start + l {
                let (dx, dy) = p.displacement((target - start) / l);
                return (x + dx, y + dy);
            }
            let (dx, dy) = p.displacement(1.0);
            x += dx;
            y += dy;
            start += l;
        }
        (x, y)
    }

    pub fn endpoint(&self) -> (f64, f64) {
        self.prims.iter().fold((0.0, 0.0), |(x, y), p| {
            let (dx, dy) = p.displacement(1.0);
            (x + dx, y + dy)
        })
    }

    /// Heading at the fraction `t`, normalized into `(-pi, pi]`.
    pub fn slope_at(&self, t: f64) -> Result<f64> {
        if self.prims.is_empty() {
            return Err(SegError::EmptyCurve);
        }
        let target = t.clamp(0.0, 1.0) * self.len();
        let mut start = 0.0;
        for p in &self.prims {
            let l = p.len();
            if target < start + l {
                return Ok(norm_angle(match *p {
                    Prim::Line(_, phi) => phi,
                    Prim::Arc(_, phi, th) => phi + th * (target - start) / l,
                }));
            }
            start += l;
        }
        Ok(norm_angle(self.prims.last().unwrap().end_slope()))
    }

    pub fn equiv(&self, other: &Curve) -> bool {
        self.prims.len() == other.prims.len()
            && self.prims.iter().zip(&other.prims).all(|(p, q)| p.equiv(q))
    }
}

fn check_range(a1: f64, a2: f64, len: f64) -> Result<(f64, f64)> {
    let slack = TOL * 1f64.max(len);
    if a1 < -slack || a2 > len + slack || a1 > a2 + slack {
        return Err(SegError::OutOfRange { a1, a2, len });
    }
    let a1 = a1.clamp(0.0, len);
    Ok((a1, a2.clamp(a1, len)))
}

/// A curve thickened to the given width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub center: Curve,
    pub width: f64,
}

impl Region {
    /// Whether `q` lies within half the width of the center line, using the
    /// rectangle around each line and the ring sector around each arc.
    pub fn contains(&self, q: (f64, f64)) -> bool {
        let half = self.width / 2.0;
        let (mut x, mut y) = (0.0, 0.0);
        for p in &self.center.prims {
            let (rx, ry) = (q.0 - x, q.1 - y);
            let hit = match *p {
                Prim::Line(a, phi) => {
                    let along = rx * phi.cos() + ry * phi.sin();
                    let across = -rx * phi.sin() + ry * phi.cos();
                    along >= -TOL && along <= a + TOL && across.abs() <= half + TOL
                }
                Prim::Arc(r, phi, th) => {
                    let sg = th.signum();
                    let (cx, cy) = (-sg * r * phi.sin(), sg * r * phi.cos());
                    let (dx, dy) = (rx - cx, ry - cy);
                    let dist = dx.hypot(dy);
                    let psi0 = phi - sg * PI / 2.0;
                    let ang = dy.atan2(dx);
                    let delta = if th > 0.0 {
                        (ang - psi0).rem_euclid(2.0 * PI)
                    } else {
                        (psi0 - ang).rem_euclid(2.0 * PI)
                    };
                    let in_sweep = th.abs() >= 2.0 * PI || delta <= th.abs() + TOL || 2.0 * PI - delta <= TOL;
                    in_sweep && dist >= (r - half).max(0.0) - TOL && dist <= r + half + TOL
                }
            };
            if hit {
                return true;
            }
            let (dx, dy) = p.displacement(1.0);
            x += dx;
            y += dy;
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Segment {
    Interval { len: f64 },
    Curve(Curve),
    Region(Region),
}

impl Segment {
    pub fn interval(len: f64) -> Result<Segment> {
        if !(len >= 0.0) || !len.is_finite() {
            return Err(SegError::Invalid(format!("interval({len})")));
        }
        Ok(Segment::Interval { len })
    }

    pub fn line(a: f64, phi: f64) -> Result<Segment> {
        Ok(Segment::Curve(Curve { prims: vec![Prim::line(a, phi)?] }))
    }

    pub fn arc(r: f64, phi: f64, theta: f64) -> Result<Segment> {
        Ok(Segment::Curve(Curve { prims: vec![Prim::arc(r, phi, theta)?] }))
    }

    pub fn len(&self) -> f64 {
        match self {
            Segment::Interval { len } => *len,
            Segment::Curve(c) => c.len(),
            Segment::Region(r) => r.center.len(),
        }
    }

    pub fn kind(&self) -> SegKind {
        match self {
            Segment::Interval { .. } => SegKind::Interval,
            Segment::Curve(_) => SegKind::Curve,
            Segment::Region(_) => SegKind::Region,
        }
    }

    /// The zero-length segment of the same kind.
    pub fn zero_like(&self) -> Segment {
        match self {
            Segment::Interval { .. } => Segment::Interval { len: 0.0 },
            Segment::Curve(_) => Segment::Curve(Curve::empty()),
            Segment::Region(r) => Segment::Region(Region { center: Curve::empty(), width: r.width }),
        }
    }

    pub fn concat(&self, other: &Segment) -> Result<Segment> {
        match (self, other) {
            (Segment::Interval { len: a }, Segment::Interval { len: b }) => Ok(Segment::Interval { len: a + b }),
            (Segment::Curve(c), Segment::Curve(d)) => Ok(Segment::Curve(c.concat(d)?)),
            (Segment::Region(r), Segment::Region(q)) => {
                if !approx(r.width, q.width) {
                    return Err(SegError::Undefined(format!("width {} differs from {}", r.width, q.width)));
                }
                Ok(Segment::Region(Region { center: r.center.concat(&q.center)?, width: r.width }))
            }
            _ => Err(SegError::KindMismatch),
        }
    }

    /// The sub-segment between arc lengths `a1` and `a2`.
    pub fn split(&self, a1: f64, a2: f64) -> Result<Segment> {
        match self {
            Segment::Interval { len } => {
                let (a1, a2) = check_range(a1, a2, *len)?;
                Ok(Segment::Interval { len: a2 - a1 })
            }
            Segment::Curve(c) => Ok(Segment::Curve(c.split(a1, a2)?)),
            Segment::Region(r) => Ok(Segment::Region(Region { center: r.center.split(a1, a2)?, width: r.width })),
        }
    }

    /// Semantic equality: equal as functions, up to [`TOL`].
    pub fn equiv(&self, other: &Segment) -> bool {
        match (self, other) {
            (Segment::Interval { len: a }, Segment::Interval { len: b }) => approx(*a, *b),
            (Segment::Curve(c), Segment::Curve(d)) => c.equiv(d),
            (Segment::Region(r), Segment::Region(q)) => approx(r.width, q.width) && r.center.equiv(&q.center),
            _ => false,
        }
    }

    /// Whether `prefix` is an initial piece of `self`.
    pub fn has_prefix(&self, prefix: &Segment) -> bool {
        let l = prefix.len();
        if l > self.len() + TOL * 1f64.max(l) {
            return false;
        }
        match self.split(0.0, l.min(self.len())) {
            Ok(head) => head.equiv(prefix),
            Err(_) => false,
        }
    }

    pub fn curve(&self) -> Option<&Curve> {
        match self {
            Segment::Curve(c) => Some(c),
            Segment::Region(r) => Some(&r.center),
            Segment::Interval { .. } => None,
        }
    }

    /// End point of a curve or of a region's center line.
    pub fn endpoint(&self) -> Option<(f64, f64)> {
        self.curve().map(Curve::endpoint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegKind {
    Interval,
    Curve,
    Region,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::Interval { len } => write!(f, "[0, {len}]"),
            Segment::Curve(c) => write_curve(f, c),
            Segment::Region(r) => {
                write_curve(f, &r.center)?;
                write!(f, " wide {}", r.width)
            }
        }
    }
}

fn write_curve(f: &mut fmt::Formatter<'_>, c: &Curve) -> fmt::Result {
    if c.prims.is_empty() {
        return write!(f, "eps");
    }
    for (i, p) in c.prims.iter().enumerate() {
        if i > 0 {
            write!(f, " . ")?;
        }
        match p {
            Prim::Line(a, phi) => write!(f, "line[{a}, {phi}]")?,
            Prim::Arc(r, phi, th) => write!(f, "arc[{r}, {phi}, {th}]")?,
        }
    }
    Ok(())
}

/// Curve-to-interval abstraction: keep only the length.
pub fn abstract_ci(c: &Curve) -> Segment {
    Segment::Interval { len: c.len() }
}

/// Region-to-curve abstraction: keep the center line.
pub fn abstract_rc(r: &Region) -> Curve {
    r.center.clone()
}

/// A single primitive of length `a` starting at heading `phi` and turning by `theta`.
pub fn concretize_ic(a: f64, phi: f64, theta: f64) -> Curve {
    if a == 0.0 {
        return Curve::empty();
    }
    let p = if theta == 0.0 { Prim::Line(a, phi) } else { Prim::Arc(a / theta.abs(), phi, theta) };
    Curve { prims: vec![p] }
}

pub fn concretize_cr(c: &Curve, w: f64) -> Region {
    Region { center: c.clone(), width: w }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(p: (f64, f64), q: (f64, f64)) -> bool {
        (p.0 - q.0).abs() < 1e-9 && (p.1 - q.1).abs() < 1e-9
    }

    // Midpoint-rule integration of the unit tangent, used as an independent
    // check of the closed-form arc displacement.
    fn integrate(p: &Prim) -> (f64, f64) {
        let n = 20000;
        let l = p.len();
        let (mut x, mut y) = (0.0, 0.0);
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            let h = match *p {
                Prim::Line(_, phi) => phi,
                Prim::Arc(_, phi, th) => phi + t * th,
            };
            x += h.cos() * l / n as f64;
            y += h.sin() * l / n as f64;
        }
        (x, y)
    }

    #[test]
    fn interval_concat_adds() {
        let s = Segment::interval(2.0).unwrap().concat(&Segment::interval(3.0).unwrap()).unwrap();
        assert_eq!(s.len(), 5.0);
    }

    #[test]
    fn line_concat_merges() {
        let a = Segment::line(1.0, 0.0).unwrap();
        let b = Segment::line(2.0, 0.0).unwrap();
        assert!(a.concat(&b).unwrap().equiv(&Segment::line(3.0, 0.0).unwrap()));
    }

    #[test]
    fn kink_is_undefined() {
        let a = Segment::line(1.0, 0.0).unwrap();
        let b = Segment::line(1.0, PI / 2.0).unwrap();
        assert!(matches!(a.concat(&b), Err(SegError::Undefined(_))));
    }

    #[test]
    fn region_width_mismatch_is_undefined() {
        let c = Curve::new(vec![Prim::Line(1.0, 0.0)]).unwrap();
        let a = Segment::Region(concretize_cr(&c, 1.0));
        let b = Segment::Region(concretize_cr(&c, 2.0));
        assert!(a.concat(&b).is_err());
    }

    #[test]
    fn arc_displacement_matches_integration() {
        for p in [
            Prim::Arc(1.0, 0.0, PI / 2.0),
            Prim::Arc(1.0, 0.0, -PI / 2.0),
            Prim::Arc(2.5, 1.0, -2.0),
            Prim::Arc(0.7, -2.0, 4.0),
        ] {
            let (x, y) = integrate(&p);
            let (dx, dy) = p.displacement(1.0);
            assert!((x - dx).abs() < 1e-6 && (y - dy).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn quarter_arcs_end_where_expected() {
        let left = Segment::arc(1.0, 0.0, PI / 2.0).unwrap();
        assert!(close(left.endpoint().unwrap(), (1.0, 1.0)));
        let right = Segment::arc(1.0, 0.0, -PI / 2.0).unwrap();
        assert!(close(right.endpoint().unwrap(), (1.0, -1.0)));
    }

    #[test]
    fn split_arc_by_length() {
        let s = Segment::arc(2.0, 0.0, PI).unwrap();
        let half = s.split(0.0, PI).unwrap();
        assert!(half.equiv(&Segment::arc(2.0, 0.0, PI / 2.0).unwrap()));
        let rest = s.split(PI, 2.0 * PI).unwrap();
        assert!(rest.equiv(&Segment::arc(2.0, PI / 2.0, PI / 2.0).unwrap()));
        assert!(half.concat(&rest).unwrap().equiv(&s));
    }

    #[test]
    fn split_out_of_range() {
        let s = Segment::interval(1.0).unwrap();
        assert!(s.split(0.5, 2.0).is_err());
        assert!(s.split(0.7, 0.2).is_err());
    }

    #[test]
    fn slope_of_empty_curve_fails() {
        assert_eq!(Curve::empty().slope_at(0.5), Err(SegError::EmptyCurve));
    }

    #[test]
    fn slope_is_normalized() {
        let c = Curve::new(vec![Prim::Arc(1.0, 0.0, 3.0 * PI / 2.0)]).unwrap();
        assert!(approx(c.slope_at(1.0).unwrap(), -PI / 2.0));
    }

    #[test]
    fn concretize_and_abstract() {
        let c = concretize_ic(PI, 0.0, PI / 2.0);
        assert_eq!(c.prims, vec![Prim::Arc(2.0, 0.0, PI / 2.0)]);
        assert!(concretize_ic(0.0, 1.0, 1.0).is_empty());
        assert_eq!(concretize_ic(3.0, 1.0, 0.0).prims, vec![Prim::Line(3.0, 1.0)]);
        assert!(approx(abstract_ci(&c).len(), PI));
        let r = concretize_cr(&c, 0.5);
        assert_eq!(abstract_rc(&r), c);
    }

    #[test]
    fn region_membership() {
        let r = Region { center: Curve::new(vec![Prim::Line(4.0, 0.0)]).unwrap(), width: 2.0 };
        assert!(r.contains((2.0, 0.9)));
        assert!(!r.contains((2.0, 1.1)));
        assert!(!r.contains((4.5, 0.0)));
        let ring = Region { center: Curve::new(vec![Prim::Arc(2.0, 0.0, PI / 2.0)]).unwrap(), width: 1.0 };
        // the arc is centred at (0, 2); the sweep runs from angle -pi/2 to 0
        assert!(ring.contains((2.0f64.sqrt(), 2.0 - 2.0f64.sqrt())));
        assert!(ring.contains((2.4, 2.0)));
        assert!(!ring.contains((-1.5, 2.0)));
        assert!(!ring.contains((0.0, 2.0)));
    }

    #[test]
    fn json_shapes() {
        let s = Segment::Curve(Curve::new(vec![Prim::Line(1.0, 0.0), Prim::Arc(1.0, 0.0, 1.0)]).unwrap());
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"kind":"curve","prims":[{"line":[1.0,0.0]},{"arc":[1.0,0.0,1.0]}]}"#);
        let i = serde_json::to_string(&Segment::interval(2.0).unwrap()).unwrap();
        assert_eq!(i, r#"{"kind":"interval","len":2.0}"#);
        let back: Segment = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }

    fn arb_prim(start: f64) -> impl Strategy<Value = Prim> {
        prop_oneof![
            (0.1f64..5.0).prop_map(move |a| Prim::Line(a, start)),
            (0.1f64..5.0, prop_oneof![-3.0f64..-0.1, 0.1f64..3.0]).prop_map(move |(r, th)| Prim::Arc(r, start, th)),
        ]
    }

    fn arb_curve() -> impl Strategy<Value = Curve> {
        (-3.0f64..3.0, 1usize..4).prop_flat_map(|(phi, n)| {
            arb_prim(phi).prop_flat_map(move |first| {
                let mut strat: BoxedStrategy<Vec<Prim>> = Just(vec![first]).boxed();
                for _ in 1..n {
                    strat = strat
                        .prop_flat_map(|v: Vec<Prim>| {
                            let end = v.last().unwrap().end_slope();
                            arb_prim(end).prop_map(move |p| {
                                let mut w = v.clone();
                                w.push(p);
                                w
                            })
                        })
                        .boxed();
                }
                strat
            })
        })
        .prop_map(|prims| Curve::new(prims).unwrap())
    }

    proptest! {
        #[test]
        fn split_then_concat_restores(c in arb_curve(), f in 0.0f64..1.0) {
            let s = Segment::Curve(c);
            let a = f * s.len();
            let joined = s.split(0.0, a).unwrap().concat(&s.split(a, s.len()).unwrap()).unwrap();
            prop_assert!(joined.equiv(&s));
        }

        #[test]
        fn concat_is_associative(c in arb_curve(), f in 0.05f64..0.45, g in 0.55f64..0.95) {
            let s = Segment::Curve(c);
            let (a, b) = (f * s.len(), g * s.len());
            let x = s.split(0.0, a).unwrap();
            let y = s.split(a, b).unwrap();
            let z = s.split(b, s.len()).unwrap();
            let l = x.concat(&y).unwrap().concat(&z).unwrap();
            let r = x.concat(&y.concat(&z).unwrap()).unwrap();
            prop_assert!(l.equiv(&r));
        }

        #[test]
        fn lengths_add(c in arb_curve(), f in 0.0f64..1.0) {
            let s = Segment::Curve(c);
            let a = f * s.len();
            let (x, y) = (s.split(0.0, a).unwrap(), s.split(a, s.len()).unwrap());
            prop_assert!(approx(x.len() + y.len(), s.len()));
        }

        #[test]
        fn epsilon_is_identity(c in arb_curve()) {
            let e = Curve::empty();
            prop_assert!(c.concat(&e).unwrap().equiv(&c));
            prop_assert!(e.concat(&c).unwrap().equiv(&c));
        }

        #[test]
        fn endpoints_add_under_concat(c in arb_curve(), f in 0.0f64..1.0) {
            let a = f * c.len();
            let (x, y) = (c.split(0.0, a).unwrap(), c.split(a, c.len()).unwrap());
            let (p, q) = (x.endpoint(), y.endpoint());
            let e = c.endpoint();
            prop_assert!((p.0 + q.0 - e.0).abs() < 1e-7 && (p.1 + q.1 - e.1).abs() < 1e-7);
        }

        #[test]
        fn abstraction_preserves_length(c in arb_curve()) {
            prop_assert!(approx(abstract_ci(&c).len(), c.len()));
        }
    }
}
