//! Berry phases and Hannay angles of parameterized quantum, classical and
//! quantum-classical hybrid systems.
//!
//! Phases are computed as holonomies of one-forms on parameter space: discrete
//! Wilson loops for finite-level Hamiltonians, and action derivatives of
//! sampled one-forms for the hybrid oscillator models. Independent
//! time-domain propagators in [`dynamics_oracle`] cross-check both routes.

pub mod cli;
pub mod dynamics_oracle;
pub mod error;
pub mod hybrid_pipeline;
pub mod manifold;
pub mod models;
pub mod quantum_geometry;

pub use error::{HolonomyError, Result};
pub use manifold::{closed_line_integral, CovectorField, LoopSpec, QuadratureResult, StandardLoopParams};
