//! Numerical toolkit for canonical systems generated by truncated Hankel
//! operators `K(x + y)` on `[-t, t]`.
//!
//! Everything is generic over the scalar type (`f32` or `f64`) through
//! [`scalar::Real`]; the aliases below fix it to `f64`.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod error;
pub mod fields;
pub mod fredholm;
pub mod gauss;
pub mod kernels;
pub mod modelspace;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
pub use fredholm::Sign;
pub use quadrature::Resolution;

pub type Complex64 = num_complex::Complex<f64>;
pub type Kernel = kernels::KernelSpec<f64>;
pub type Grid = quadrature::QuadratureGrid<f64>;
pub type Nystrom = quadrature::NystromMatrix<f64>;
pub type Operator = fredholm::FredholmOperator<f64>;
pub type Hamiltonian = fredholm::HamiltonianSample<f64>;
pub type Spectrum = fredholm::SpectrumReport<f64>;
pub type Fields = fields::FieldSet<f64>;
pub type Field = fields::FieldSolution<f64>;
pub type Ratio = canonical::RatioPoint<f64>;
pub type Projection = modelspace::ProjectionSolution<f64>;
pub type JValue = modelspace::KernelValue<f64>;
