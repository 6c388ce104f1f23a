//! Map configuration logic over metric graphs of road segments.

pub mod arith;
pub mod check;
pub mod graph;
pub mod monitor;
pub mod oracle;
pub mod sat;
pub mod segment;
pub mod syntax;
pub mod world;
