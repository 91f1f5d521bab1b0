// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bunching;
pub mod distributions;
pub mod error;
pub mod fitting;
pub mod income;
pub mod numerics;
pub mod specfun;
pub use error::{Error, Result};
