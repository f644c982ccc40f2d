//! Small numerical toolbox shared by the estimators: derivative-free
//! minimization, one-dimensional search, quadrature, sample statistics and
//! a few dense linear-algebra helpers on top of `nalgebra`.

pub mod linalg;
pub mod optim;
pub mod quad;
pub mod stats;

pub use optim::{golden_section_min, nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use quad::{integrate, integrate_to_infinity};
