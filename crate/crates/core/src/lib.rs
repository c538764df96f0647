//! Verification and construction toolkit for functions that are both
//! semiconvex and semiconcave with a general modulus of continuity.
//!
//! The crate is organised bottom-up:
//!
//! - [`modulus`]: moduli of continuity, including the integral construction
//!   used to build unbounded concave moduli from a sublinear profile.
//! - [`geometry`]: open convex bodies in ℝⁿ, recession cones, eccentricity,
//!   the bounded / cone-containing / degenerate trichotomy and linear maps.
//! - [`fields`]: scalar fields given by a small expression language with
//!   forward-mode gradients, and their restrictions to lines.
//! - [`regularity`]: sampled margin checks of the defining inequalities and
//!   of the quantitative derivative bounds.
//! - [`witness`]: explicit counterexample packages on degenerate unbounded
//!   bodies together with a numerical refutation along a ray.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod modulus;
pub mod norm;
pub mod plot;
pub mod regularity;
pub mod report;
pub mod sampler;
pub mod witness;

pub use fields::{Expr, LineRestriction, ScalarField};
pub use geometry::{Classification, Cone, ConvexBody, LinearMap};
pub use modulus::{Eta, Modulus};
pub use norm::Norm;
pub use report::MarginReport;
pub use sampler::Sampler;
pub use witness::{RefutationReport, Witness};

/// Crate-wide error, used where operations from several modules meet.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Modulus(#[from] modulus::ModulusError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Field(#[from] fields::FieldError),
    #[error(transparent)]
    Check(#[from] regularity::CheckError),
    #[error(transparent)]
    Witness(#[from] witness::WitnessError),
}
