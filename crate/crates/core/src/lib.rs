//! Structural balance of weighted signed stock networks.
//!
//! The pipeline turns daily prices into log returns, estimates kernel-smoothed
//! time-varying Kendall correlations, thresholds them into signed networks and
//! scores each network with the spectral equilibrium constant
//! `K = tr exp(beta A) / tr exp(beta |A|)`.

pub mod balance;
pub mod dependence;
pub mod ensembles;
pub mod error;
pub mod formats;
pub mod market_data;
pub mod pipeline;
pub mod svg;
pub mod synthetic;
pub mod transition;
pub mod tvregress;
pub mod wssn;

pub use error::{Error, ErrorKind, Result};
