//! Finite-state dynamics on graphs, one-round local certification of
//! bounded-time convergence, decoder circuits, lower-bound gadget instances,
//! and two-party protocol simulations.

pub mod bits;
pub mod circuit;
pub mod corpus;
pub mod dot;
pub mod dynamics;
pub mod error;
pub mod gadgets;
pub mod graph;
pub mod harness;
pub mod instance;
pub mod oracle;
pub mod pls;
pub mod rules;
pub mod scheme;

pub use dynamics::{Configuration, Dynamics, LocalFunction, StateAlphabet};
pub use error::{FsdError, Result};
pub use graph::{Edge, Graph, NodeId};
