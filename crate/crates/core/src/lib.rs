//! Equilibrium in a commodity spot and forward market with storage.
//!
//! Producers choose how much of today's production to store and how much of
//! tomorrow's to sell forward; speculators take the other side of the forward
//! contract. Both have exponential utility, and the uncertainty in demand and
//! in the speculators' outside investment is driven by a two-dimensional Lévy
//! process with finitely many jump sizes.
//!
//! ```
//! use forward_equilibrium::{equilibrium, BrownianFactors, LevyModel, MarketParams, ModelKind};
//!
//! let market = MarketParams::new(200.0, 1.0, 100.0, 100.0, 0.05, 0.01, 0.1, 0.1)?;
//! let model = LevyModel::brownian(BrownianFactors {
//!     sigma1: 0.2,
//!     sigma2: 10.0,
//!     rho: 0.5,
//!     mpr: 0.3,
//!     horizon: 0.25,
//! })?;
//! let eq = equilibrium::solve(&market, &model, ModelKind::Brownian)?;
//! assert!(eq.alpha >= 0.0 && eq.alpha <= 100.0);
//! assert!(eq.forward < eq.e_pt);
//! # Ok::<(), forward_equilibrium::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
pub mod error;
pub mod investor;
pub mod levy;
pub mod market;
pub mod oracle;
pub mod producer;
mod roots;

pub use equilibrium::{Equilibrium, ModelKind, NoForwardEquilibrium};
pub use error::{Error, Result};
pub use levy::{
    BrownianFactors, GaussianSummary, JumpAtom, JumpDiffusionFactors, LevyModel, UniAtom,
    UniTriplet, Vec2,
};
pub use market::{LegacyHedge, MarketParams, PriceMoments};
