//! Sequential Monte Carlo smoothing with online parameter learning for
//! scalar state-space models whose parameters admit conjugate sufficient
//! statistics.
//!
//! The pieces:
//!
//! * [`model`]: the AR(1), nonlinear growth, chaotic Poisson and stochastic
//!   volatility models, with their conjugate priors.
//! * [`filters`]: bootstrap, Storvik (sufficient statistics) and Liu-West
//!   particle filters, plus a Kalman filter.
//! * [`smoothers`]: backward simulation (Godsill), particle learning smoothers
//!   with and without the Gaussian adjustment, and refiltering.
//! * [`mcmc`]: reference posteriors by block Gibbs or single-site
//!   Metropolis-Hastings.
//! * [`evidence`]: marginal likelihood estimates.
//!
//! ```
//! use smcsmooth::{filters::{storvik_filter, FilterOptions}, model::{simulate, Ar1, StateSpaceModel}, smoothers::pls_smooth, Seed};
//!
//! let model = Ar1::default();
//! let data = simulate(&model, &model.generating_params(), 50, 0.0, Seed(1)).unwrap();
//! let history = storvik_filter(&model, &data.observations, 200, &FilterOptions::default(), Seed(2)).unwrap();
//! let draws = pls_smooth(&model, &history, 100, Seed(3)).unwrap();
//! assert_eq!(draws.len(), 100);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evidence;
pub mod filters;
pub mod io;
pub mod mcmc;
pub mod model;
mod parallel;
pub mod rng;
pub mod smoothers;
pub mod stats;

pub use error::{Error, Result};
pub use rng::Seed;
