//! Reachability analysis of closed-loop ReLU recurrent networks with hybrid
//! zonotopes.
//!
//! The crate is layered bottom-up:
//!
//! - [`opt`]: bounded simplex and ±1 branch-and-bound;
//! - [`hz`]: the hybrid zonotope type, its algebra and MILP-backed queries;
//! - [`relu_graph`]: exact and relaxed encodings of ReLU graphs over boxes;
//! - [`model`]: the closed-loop network and its simulator;
//! - [`bounds`]: interval enclosures of pre-activations;
//! - [`reach`]: state-pair sets, forward and backward reachable sets;
//! - [`verify`]: safety verdicts and unsafe sequences;
//! - [`plot`]: exact 2-D projections, SVG and CSV output.

pub mod bounds;
pub mod error;
pub mod hz;
pub mod interval;
pub mod model;
pub mod opt;
pub mod par;
pub mod plot;
pub mod reach;
pub mod relu_graph;
pub mod verify;

pub use error::{Error, Result};
pub use hz::{ComplexityRecord, FactorPoint, HullMode, HybridZonotope};
pub use interval::IntervalVector;
