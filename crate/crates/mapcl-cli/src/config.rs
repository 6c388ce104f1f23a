use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tolerances: Tolerances,
    pub sim: Sim,
    pub rules: Rules,
    pub caps: Caps,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Largest circuit residual, in metres, still reported as consistent.
    pub point: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim {
    pub dt: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rules {
    pub b_max: f64,
    pub t_react: f64,
    pub d_min: f64,
    pub d_left: f64,
    pub c_max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub coalesce_edges: usize,
    pub fm_atoms: usize,
}

impl Default for Tolerances {
    fn default() -> Tolerances {
        Tolerances { point: 1e-9 }
    }
}

impl Default for Sim {
    fn default() -> Sim {
        let d = mapcl::world::SimConfig::default();
        Sim { dt: d.dt, accel: d.accel }
    }
}

impl Default for Rules {
    fn default() -> Rules {
        let c = mapcl::check::CheckOptions::default();
        let k = mapcl::monitor::RuleConsts::default();
        Rules { b_max: c.brake, t_react: c.reaction, d_min: k.d_min, d_left: k.d_left, c_max: k.c_max }
    }
}

impl Default for Caps {
    fn default() -> Caps {
        let c = mapcl::check::CheckOptions::default();
        Caps { coalesce_edges: c.coalesce_cap, fm_atoms: c.atom_cap }
    }
}

impl Config {
    /// Reads `path` if given, then applies `key=value` overrides with dotted keys.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config, String> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
            None => String::new(),
        };
        let mut table: toml::Table = text.parse().map_err(|e| format!("config: {e}"))?;
        for o in overrides {
            let (key, value) = o.split_once('=').ok_or_else(|| format!("override `{o}` is not key=value"))?;
            let value: toml::Value = format!("v = {value}")
                .parse::<toml::Table>()
                .map_err(|e| format!("override `{o}`: {e}"))?
                .remove("v")
                .expect("parsed key");
            let mut parts: Vec<&str> = key.trim().split('.').collect();
            let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| format!("empty key in `{o}`"))?;
            let mut t = &mut table;
            for p in parts {
                t = t
                    .entry(p)
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| format!("`{p}` is not a section"))?;
            }
            t.insert(last.to_string(), value);
        }
        let cfg: Config = toml::Value::Table(table).try_into().map_err(|e| format!("config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        let reals = [
            ("tolerances.point", self.tolerances.point),
            ("sim.dt", self.sim.dt),
            ("sim.accel", self.sim.accel),
            ("rules.b_max", self.rules.b_max),
            ("rules.t_react", self.rules.t_react),
            ("rules.d_min", self.rules.d_min),
            ("rules.d_left", self.rules.d_left),
            ("rules.c_max", self.rules.c_max),
        ];
        for (k, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{k} must be positive, got {v}"));
            }
        }
        if self.caps.coalesce_edges == 0 || self.caps.fm_atoms == 0 {
            return Err("caps must be positive".into());
        }
        Ok(())
    }

    pub fn check(&self) -> mapcl::check::CheckOptions {
        mapcl::check::CheckOptions {
            coalesce_cap: self.caps.coalesce_edges,
            atom_cap: self.caps.fm_atoms,
            brake: self.rules.b_max,
            reaction: self.rules.t_react,
            ..Default::default()
        }
    }

    pub fn sim(&self) -> mapcl::world::SimConfig {
        mapcl::world::SimConfig { dt: self.sim.dt, accel: self.sim.accel, brake: self.rules.b_max, check: self.check() }
    }

    pub fn rule_consts(&self) -> mapcl::monitor::RuleConsts {
        mapcl::monitor::RuleConsts { d_min: self.rules.d_min, d_left: self.rules.d_left, c_max: self.rules.c_max }
    }
}
