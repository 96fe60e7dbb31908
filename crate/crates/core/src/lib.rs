//! Numerical analysis of corank-one sub-Riemannian structures given in a
//! single coordinate patch.
//!
//! A structure is a one-form `theta` whose kernel is the distribution `D`, a
//! frame of `D` and the Gram matrix of the metric in that frame. From it the
//! crate computes the bracket flag, the Levi form, the skew operator `J`
//! representing `d theta` on `D`, the type (sorted, normalized eigenvalue
//! magnitudes of `J`), the stratum and isotropy group, and in dimension five
//! the secondary type and the groupoid case decision.
//!
//! Per-point computations are pure and are batched through [`batch`], which
//! runs on rayon when the `parallel` feature is enabled.

pub mod batch;
pub mod classify;
pub mod expr;
pub mod linalg;
pub mod sampling;
pub mod skewlin;
pub mod structure;
pub mod typemap;

mod tolerances;

pub use tolerances::Tolerances;

pub(crate) fn fmt_point(point: &[f64]) -> String {
    let parts: Vec<String> = point.iter().map(|v| format!("{}", v)).collect();
    format!("({})", parts.join(", "))
}
