//! Discrete, grid-discrete and continuous Hardy-type average operators.
//!
//! Pointwise application reports an error bound with every value: the mass of the truncated
//! tail times a bound for `|f|` on the contracted segment, or the quadrature estimate.

mod continuous;
mod discrete;
mod image;
mod planar;
pub mod weights;

use serde::{Deserialize, Serialize};

pub use continuous::{apply_continuous, continuous_image, hardy_classic, transform_1d, ContinuousFactor};
pub use discrete::{apply_discrete, apply_grid_discrete, discrete_image, grid_image};
pub use image::{Image, TensorField, TensorSum};
pub(crate) use planar::planar_abs_dev_p;
pub use weights::{ContinuousWeight, DiscreteWeight, GridEntry, GridWeight, Monomial, PolyPiece, Series, Tail};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Applied {
    pub value: f64,
    pub error_bound: f64,
    /// Terms summed, for the discrete operators.
    pub terms: usize,
}
