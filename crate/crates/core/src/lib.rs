//! Δ-coloring via a constant number of (deg+1)-list-coloring instances,
//! executed on a round-synchronous message-passing simulator.

pub mod acd;
pub mod classify;
pub mod coloring;
pub mod experiment;
pub mod generators;
pub mod graph;
pub mod listcolor;
pub mod oracle;
pub mod phases;
pub mod slackgen;
pub mod sim;

pub use coloring::PartialColoring;
pub use graph::{Color, Graph, GraphError, NodeId, Rational};
