//! Photon statistics of light scattered by a chain of independent, weakly
//! driven two-level emitters (trapped ions).
//!
//! The crate computes the spatially resolved interference intensity and the
//! second-order correlation function g²(0)/g²(τ) of the far field, both from
//! closed-form expressions for identical emitters and from the full per-atom
//! expansion, together with Monte-Carlo ensembles over thermal position
//! jitter and dark (non-fluorescing) ions.
//!
//! Module map:
//! - [`geometry`]: Coulomb-chain equilibria, jitter and dark-ion sampling
//! - [`emitter`]: single-atom steady state and Bloch propagation
//! - [`correlations`]: equal-time observables, closed forms and limits
//! - [`temporal`]: g²(τ) by quantum regression
//! - [`montecarlo`]: seeded ensembles and parameter sweeps
//! - [`config`], [`output`], [`presets`], [`app`]: batch CLI front end

pub mod app;
pub mod config;
pub mod constants;
pub mod correlations;
pub mod emitter;
mod error;
pub mod geometry;
pub mod montecarlo;
pub mod output;
pub mod presets;
pub mod temporal;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
