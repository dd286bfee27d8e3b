//! Numerical evaluation of the Nijenhuis tensor of an almost-complex
//! structure and of its squares, in coordinate charts, together with a
//! harness that checks their algebraic and integral identities by sampling.

pub mod chart;
pub mod diff;
pub mod error;
pub mod harness;
pub mod nijenhuis;
pub mod octonion;
pub mod sampling;
pub mod zoo;

pub use chart::{evaluate_pairing, gram_determinant, BoxDomain, ChartPoint, MetricField, TensorField11, VectorField};
pub use diff::{lie_bracket_at, partial_derivative, DerivativeMode, DerivativeStrategy};
pub use error::{Error, Result};
pub use nijenhuis::{
    big_l, ell, n_squared, nijenhuis_at, nijenhuis_bracket_oracle, nijenhuis_components,
    plane_invariant, polarize_l, weak_t, NijenhuisComponents, SquareContext,
};
