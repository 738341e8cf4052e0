//! Numerical laboratory for spirallike domains in ℂⁿ.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod domains;
pub mod error;
pub mod expr;
pub mod hull;
pub mod linalg;
pub mod loewner;
pub mod operators;
pub mod point;
pub mod sampling;
pub mod spirallike;
pub mod vectorfield;

pub use error::{Error, Result};
pub use expr::{MapExpr, ScalarExpr};
pub use point::PointCn;
pub use vectorfield::VectorField;
