//! Self-excited synchronous generator simulation in per unit.
//!
//! The machine is a salient-pole synchronous generator described by its
//! standard test parameters. Flux linkages of the stator d/q windings, the
//! field and three damper windings form the state; d-axis saturation follows
//! a Froelich fit of the open-circuit characteristic, and the field can be
//! fed either from a separate source or through a rectifier from the
//! machine's own terminals.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod excitation;
pub mod integrator;
pub mod model;
pub mod output;
pub mod perunit;
pub mod reference;
pub mod saturation;
pub mod scenarios;
pub mod simulation;
pub mod trace;

pub use config::{load_config, RunConfig};
pub use error::SimError;
pub use model::FluxState;
pub use simulation::Simulation;
pub use trace::TimeSeries;
