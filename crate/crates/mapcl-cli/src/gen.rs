use clap::ValueEnum;
use mapcl::graph::{
    build_fork, build_merger, build_ring, build_roundabout, example_intersection, intersection_with_roads, roundabout_with_roads, MetricGraph,
};
use mapcl::segment::Segment;
use mapcl::syntax::{bottom_up, to_top_down, to_weak_top_down};
use serde_json::json;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Pattern {
    Roundabout,
    Intersection,
    Merger,
    Fork,
    Ring,
}

/// Parameter names with their defaults.
fn defaults(p: Pattern) -> &'static [(&'static str, f64)] {
    match p {
        Pattern::Intersection => &[("r", 1.0), ("d", 0.5), ("len", 0.0)],
        Pattern::Roundabout => &[("n", 4.0), ("radius", 10.0), ("len", 0.0)],
        Pattern::Merger | Pattern::Fork => &[("n", 2.0), ("len", 10.0)],
        Pattern::Ring => &[("a", 10.0), ("r", 2.0), ("phi", 0.0)],
    }
}

fn parse_params(p: Pattern, text: &str) -> Result<BTreeMap<&'static str, f64>, String> {
    let mut out: BTreeMap<&'static str, f64> = defaults(p).iter().copied().collect();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| format!("parameter `{item}` is not key=value"))?;
        let (k, v) = (k.trim(), v.trim());
        let key = *out.keys().find(|&&name| name == k).ok_or_else(|| {
            let known: Vec<&str> = defaults(p).iter().map(|(n, _)| *n).collect();
            format!("unknown parameter `{k}`; known: {}", known.join(", "))
        })?;
        let x: f64 = v.parse().map_err(|_| format!("parameter `{k}`: `{v}` is not a number"))?;
        if !x.is_finite() {
            return Err(format!("parameter `{k}` must be finite"));
        }
        out.insert(key, x);
    }
    Ok(out)
}

fn count(params: &BTreeMap<&str, f64>) -> Result<usize, String> {
    let n = params["n"];
    if n.fract() != 0.0 || !(1.0..=64.0).contains(&n) {
        return Err(format!("n must be an integer in 1..=64, got {n}"));
    }
    Ok(n as usize)
}

/// Headings spread symmetrically around east, a quarter turn apart at most.
fn spread(n: usize) -> Vec<f64> {
    (0..n).map(|k| if n == 1 { 0.0 } else { (k as f64 / (n - 1) as f64 - 0.5) * PI / 2.0 }).collect()
}

fn lines(n: usize, len: f64) -> Result<Vec<Segment>, String> {
    spread(n).into_iter().map(|phi| Segment::line(len, phi).map_err(|e| e.to_string())).collect()
}

pub fn build(p: Pattern, params: &BTreeMap<&str, f64>) -> Result<MetricGraph, String> {
    let positive = |k: &str| {
        if params[k] > 0.0 {
            Ok(params[k])
        } else {
            Err(format!("parameter `{k}` must be positive"))
        }
    };
    let err = |e: mapcl::graph::GraphError| e.to_string();
    match p {
        Pattern::Intersection => {
            let (r, d) = (positive("r")?, positive("d")?);
            Ok(if params["len"] > 0.0 { intersection_with_roads(r, d, params["len"]) } else { example_intersection(r, d) })
        }
        Pattern::Roundabout => {
            let (n, radius) = (count(params)?, positive("radius")?);
            if params["len"] > 0.0 {
                roundabout_with_roads(n, radius, params["len"]).map_err(err)
            } else {
                build_roundabout(n, radius).map_err(err)
            }
        }
        Pattern::Merger => {
            let n = count(params)?;
            let names: Vec<String> = (1..=n).map(|k| format!("e{k}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            build_merger(&refs, "m", &lines(n, positive("len")?)?).map_err(err)
        }
        Pattern::Fork => {
            let n = count(params)?;
            let names: Vec<String> = (1..=n).map(|k| format!("o{k}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            build_fork("f", &refs, &lines(n, positive("len")?)?).map_err(err)
        }
        Pattern::Ring => Ok(build_ring(positive("a")?, positive("r")?, params["phi"])),
    }
}

/// The generated files: name and contents.
pub fn files(p: Pattern, params: &str) -> Result<Vec<(&'static str, String)>, String> {
    let g = build(p, &parse_params(p, params)?)?;
    let zeta = bottom_up(&g).map_err(|e| e.to_string())?;
    let top = to_top_down(&zeta).map_err(|e| e.to_string())?;
    let weak = to_weak_top_down(&zeta).map_err(|e| e.to_string())?;
    Ok(vec![
        ("map.json", serde_json::to_string_pretty(&g.to_json()).expect("json")),
        ("bottom_up.mcl", format!("{zeta}\n")),
        ("top_down.mcl", format!("{top}\n")),
        ("weak_top_down.mcl", format!("{weak}\n")),
    ])
}

pub fn run(p: Pattern, params: &str, out_dir: Option<&Path>) -> Result<u8, String> {
    let files = files(p, params)?;
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            for (name, text) in &files {
                let path = dir.join(name);
                std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            let written: Vec<String> = files.iter().map(|(n, _)| dir.join(n).display().to_string()).collect();
            println!("{}", serde_json::to_string_pretty(&json!({"files": written})).expect("json"));
        }
        None => {
            let mut out = serde_json::Map::new();
            for (name, text) in files {
                let v = if name.ends_with(".json") { serde_json::from_str(&text).expect("own output") } else { json!(text.trim_end()) };
                out.insert(name.to_string(), v);
            }
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
        }
    }
    Ok(0)
}
