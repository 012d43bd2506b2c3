//! Simulation and analytics for universal rewinding of a two-level system
//! with the quantum SWITCH.
//!
//! * [`mat2`]: 2×2 complex algebra and checks of the commutator identities.
//! * [`qgate`]: amplitude-level Q gate, port sampling and free evolution.
//! * [`walk`]: the classical walk that tracks the operator word, exact DP
//!   oracles and trajectory sampling.
//! * [`analytics`]: closed-form first-passage and return distributions,
//!   generating function, success curves and budget planning.
//! * [`engine`]: full protocol Monte Carlo with fidelity certification.
//! * [`io`]: CSV / JSON / SVG formats.

pub mod analytics;
pub mod engine;
pub mod error;
pub mod io;
pub mod mat2;
pub mod prob;
pub mod qgate;
pub mod streams;
pub mod walk;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use num_rational::BigRational;
pub use mat2::Mat2;
pub use prob::Probability;
pub use qgate::PureState;
