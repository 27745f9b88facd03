//! Rectangular Herz-type norms and Hardy-type average operators.
//!
//! The crate evaluates the rectangular norm `𝔅^p`, its dyadic equivalent, the central
//! oscillation norm `CMO^p` (two forms), the ball-based `B^p` norm and the classical Herz
//! norms `K^α_{p,q}` on a corpus of closed-form test functions, together with discrete,
//! grid-discrete and continuous Hardy averages. Outer suprema are reported as lower bounds
//! over explicit candidate sets; integrals are exact where a closed form exists and carry an
//! error estimate otherwise.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod field;
pub mod funcs;
pub mod norms;
pub mod numeric;
pub mod operators;
pub mod oracle;
pub mod quad;
pub mod tolerances;

pub use error::{Error, Result};
pub use field::Field;
pub use funcs::{FunctionSpec, Integral, Rect};
