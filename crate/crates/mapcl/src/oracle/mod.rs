//! Independent oracles for the checker, the satisfiability pipeline and the
//! graph transformations: brute-force model search, grid search over
//! arithmetic, exhaustive law checking and randomized property suites.

mod brute;
mod corpus;
mod laws;
mod props;

pub use brute::{brute_force_sat, grid_search, real_grid, seg_grid, sl_eval, spec_models, split_witness};
pub use corpus::{random_mcl, random_sl, random_spec};
pub use laws::{non_idempotence_witness, pool, small_graphs, table4_suite, Witness};
pub use props::{abstraction_cases, random_graph, refine_round_trips};

/// Outcome of one property over many cases.
#[derive(Debug, Clone)]
pub struct Report {
    pub name: String,
    pub checks: usize,
    pub failures: usize,
    pub counterexamples: Vec<String>,
}

impl Report {
    pub fn new(name: &str) -> Report {
        Report { name: name.to_string(), checks: 0, failures: 0, counterexamples: Vec::new() }
    }

    /// Counts one case, keeping the first few failure descriptions.
    pub fn record(&mut self, ok: bool, why: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.counterexamples.len() < 5 {
                self.counterexamples.push(why());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}
