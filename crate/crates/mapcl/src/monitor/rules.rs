use crate::graph::JunctionMeta;
use crate::syntax::{parse_temporal, t_and, TemporalFormula};

/// Constants shared by the rules.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleConsts {
    /// Distance to a sign or light below which a vehicle counts as approaching it.
    pub d_min: f64,
    /// Reach of circulating traffic a vehicle entering a roundabout yields to.
    pub d_left: f64,
    /// Bound on weight times squared speed over radius.
    pub c_max: f64,
}

impl Default for RuleConsts {
    fn default() -> RuleConsts {
        RuleConsts { d_min: 30.0, d_left: 50.0, c_max: 1.0e6 }
    }
}

#[derive(Debug, Clone)]
pub struct RuleSpec {
    pub name: &'static str,
    pub summary: &'static str,
    /// Junction and constant values the formula was built with.
    pub params: Vec<(String, String)>,
    pub formula: TemporalFormula,
}

fn set(vs: &[String]) -> String {
    let items: Vec<String> = vs.iter().map(|v| format!("@{v}")).collect();
    format!("{{{}}}", items.join(", "))
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn all(parts: Vec<String>) -> TemporalFormula {
    parts
        .iter()
        .map(|src| parse_temporal(src).unwrap_or_else(|e| panic!("rule template `{src}`: {e}")))
        .reduce(t_and)
        .unwrap_or(TemporalFormula::State(crate::syntax::Formula::True))
}

/// Ordered pairs of distinct entrances.
fn pairs(en: &[String]) -> Vec<(&String, &String)> {
    en.iter().flat_map(|a| en.iter().filter(move |b| *b != a).map(move |b| (a, b))).collect()
}

/// The twelve rules, instantiated for junction `j` and constants `k`.
/// Rules quantified over entrances are conjunctions with one instance per
/// entrance or ordered pair of entrances. "Inside the junction" means
/// strictly on one of its edges; a vehicle waiting at an entrance vertex is
/// not inside.
pub fn rule_library(j: &JunctionMeta, k: &RuleConsts) -> Vec<RuleSpec> {
    let jv = set(&j.all_vertices());
    let en_set = set(&j.entrances);
    let en = &j.entrances;
    let (dmin, dleft, cmax) = (num(k.d_min), num(k.d_left), num(k.c_max));
    let others_inside = format!("(exists vehicle o. o != c && on_edges(o, {jv}))");
    let traffic = format!("(exists vehicle o. exists real d. (on_edges(o, {jv}) && meets(o, d, c) && d <= {dleft}))");
    let nobody_right = |a: &str, b: &str| {
        let alts: Vec<String> = en
            .iter()
            .map(|e| format!("(inside(o, {{@{e}}}) && (right_of(@{e}, @{a}, {jv}) || right_of(@{e}, @{b}, {jv})))"))
            .collect();
        if alts.is_empty() {
            "true".to_string()
        } else {
            format!("!(exists vehicle o. {})", alts.join(" || "))
        }
    };
    let arrive_together = |a: &str, b: &str| {
        format!("inside(c, {{@{a}}}) && inside(c2, {{@{b}}}) && c.wt = c2.wt && c.wt = 0 && opposite(@{a}, @{b}, {jv})")
    };
    let specs: Vec<(&'static str, &'static str, Vec<String>)> = vec![
        (
            "safe-distance",
            "a vehicle following another in the same lane keeps at least the safe braking distance",
            vec![format!(
                "forall vehicle c. forall vehicle c2. always (forall real d. (meets(c, d, c2) && c != c2 && c.ln - c2.ln < 1 && c2.ln - c.ln < 1) => d >= safe_dist(c, c2))"
            )],
        ),
        (
            "stop-sign-distance",
            "a vehicle approaching a stop sign keeps at least the safe braking distance to it",
            vec!["forall vehicle c. forall sign st. always (forall real d. meets(c, d, st) => d >= safe_dist(c, st))".to_string()],
        ),
        (
            "centrifugal",
            "on an arc of radius r, weight times squared speed stays below C times r",
            vec![format!("forall vehicle c. always (forall real r. arc_ahead(c, r) => c.weight * c.sp * c.sp <= {cmax} * r)")],
        ),
        (
            "all-way-stop-proceed",
            "a vehicle at a stop-sign entrance with no other vehicle inside the junction eventually enters",
            en.iter()
                .map(|e| {
                    format!(
                        "forall vehicle c. forall sign st. always ((inside(st, {{@{e}}}) && inside(c, {{@{e}}}) && !{others_inside}) => eventually on_edges(c, {jv}))"
                    )
                })
                .collect(),
        ),
        (
            "all-way-stop-yield",
            "a vehicle approaching a stop-sign entrance stays out of the junction until no other vehicle is inside",
            en.iter()
                .map(|e| {
                    format!(
                        "forall vehicle c. forall sign st. always ((inside(st, {{@{e}}}) && (exists real d. (meets(c, d, st) && d <= {dmin}))) => !on_edges(c, {jv}) until !{others_inside})"
                    )
                })
                .collect(),
        ),
        (
            "right-of-way",
            "of two vehicles arriving together, the one on the right enters first",
            pairs(en)
                .into_iter()
                .map(|(a, b)| {
                    format!(
                        "forall vehicle c. forall vehicle c2. always ((inside(c, {{@{a}}}) && inside(c2, {{@{b}}}) && c.wt = c2.wt && right_of(@{a}, @{b}, {jv})) => inside(c2, {{@{b}}}) until on_edges(c, {jv}))"
                    )
                })
                .collect(),
        ),
        (
            "opposite-straight",
            "opposite vehicles arriving together with nobody on their right: both straight proceed together, otherwise the straight one proceeds",
            pairs(en)
                .into_iter()
                .flat_map(|(a, b)| {
                    let common = format!("{} && {}", arrive_together(a, b), nobody_right(a, b));
                    [
                        format!(
                            "forall vehicle c. forall vehicle c2. always (({common} && go_straight(c, {jv}) && go_straight(c2, {jv})) => eventually (on_edges(c, {jv}) && on_edges(c2, {jv})))"
                        ),
                        format!(
                            "forall vehicle c. forall vehicle c2. always (({common} && go_straight(c, {jv}) && !go_straight(c2, {jv})) => eventually on_edges(c, {jv}))"
                        ),
                    ]
                })
                .collect(),
        ),
        (
            "opposite-turn",
            "of opposite vehicles arriving together, the one turning right proceeds before the one turning left",
            pairs(en)
                .into_iter()
                .map(|(a, b)| {
                    format!(
                        "forall vehicle c. forall vehicle c2. always (({} && turn_right(c, {jv}) && turn_left(c2, {jv})) => eventually on_edges(c, {jv}))",
                        arrive_together(a, b)
                    )
                })
                .collect(),
        ),
        (
            "roundabout-yield",
            "a vehicle at a roundabout entrance waits there until no circulating vehicle is about to reach it",
            en.iter()
                .map(|e| format!("forall vehicle c. always (inside(c, {{@{e}}}) => inside(c, {{@{e}}}) until !{traffic})"))
                .collect(),
        ),
        (
            "roundabout-enter",
            "a vehicle at a roundabout entrance with a gap in the circulating traffic eventually enters",
            en.iter()
                .map(|e| format!("forall vehicle c. always ((inside(c, {{@{e}}}) && !{traffic}) => eventually on_edges(c, {jv}))"))
                .collect(),
        ),
        (
            "light-distance",
            "a vehicle close to a traffic light keeps at least the safe braking distance to it",
            vec![format!(
                "forall vehicle c. forall light lt. always (forall real d. (meets(c, d, lt) && d <= {dmin}) => d >= safe_dist(c, lt))"
            )],
        ),
        (
            "green-light-entry",
            "a vehicle close to a green light at a junction entrance eventually enters the junction",
            vec![format!(
                "forall vehicle c. forall light lt. always (((exists real d. (meets(c, d, lt) && d <= {dmin})) && inside(lt, {en_set}) && lt.cl = green) => eventually on_edges(c, {jv}))"
            )],
        ),
    ];
    let params = vec![
        ("entrances".to_string(), j.entrances.join(",")),
        ("junction".to_string(), j.all_vertices().join(",")),
        ("d_min".to_string(), num(k.d_min)),
        ("d_left".to_string(), num(k.d_left)),
        ("C".to_string(), num(k.c_max)),
    ];
    specs
        .into_iter()
        .map(|(name, summary, parts)| RuleSpec { name, summary, params: params.clone(), formula: all(parts) })
        .collect()
}
