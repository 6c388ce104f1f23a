//! World states over a map, their time evolution, and the guarded-command
//! scenario engine.

mod sim;
mod state;

pub use sim::{advance, run_scenario, step, Action, Event, EventKind, Result, Rule, Run, Scenario, SimConfig, SimError};
pub use state::{Light, Object, Sign, Vehicle, WorldState};
