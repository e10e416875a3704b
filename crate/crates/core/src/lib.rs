//! Estimation of the exponent governing the extent of cross-sectional dependence
//! in large N x T panels, from lag autocovariances of partial cross-sectional means.

pub mod cli;
pub mod dgp;
pub mod empirical;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod io;
pub mod moments;
pub mod montecarlo;
pub mod panel;

pub use error::{Error, Result};
pub use panel::{bracket_pow, v_nt, BracketPower, BracketValue, EstimateResult, Method, Panel};
