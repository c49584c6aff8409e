#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod cli;
pub mod dist;
pub mod elicit_check;
pub mod estimate;
pub mod error;
mod special;

pub use dist::{mix, Distribution, Integrand};
pub use error::{Error, Result};
pub use special::{norm_cdf, norm_inv, norm_pdf};
pub mod functionals;
pub mod ident;
pub mod scoring;

pub use functionals::FunctionalSpec;
pub use scoring::{ConvexSpec, ScoreSpec, Transform};
