//! Coordinated downlink beamforming for multi-cell MISO networks.
//!
//! Every base station (BS) serves the users of its own cell, and all cells
//! share one frequency channel. The non-convex sum rate is bounded from below
//! by one concave-in-its-variables bound per BS. The bounds are built by
//! linearizing the other users' rates, with each user's "taxation" term as the
//! linearization coefficient. The BSs take turns maximizing their own bound:
//!
//! * [`ssca`] handles one user per cell. Each turn solves the bound maximization
//!   exactly with a rank-1 answer ([`lbm`]), so the sum rate is monotone and
//!   ends at a KKT point.
//! * [`sbf`] handles several users per cell. Each turn applies a closed-form
//!   fixed-point beam update, accepted only if it raises the bound.
//!
//! [`rrp`] and [`relaxed`] are independent routes to the rank-1 optimum and
//! are used to cross-check [`lbm`]. [`simenv`], [`baselines`] and [`harness`]
//! reproduce the Monte Carlo simulation study.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod lbm;
pub mod linalg;
pub mod model;
pub mod rates;
pub mod relaxed;
pub mod rrp;
pub mod sbf;
pub mod simenv;
pub mod ssca;
pub mod trace;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use model::{BeamSet, ChannelSet, CovSet, NetworkConfig, UserId};
pub use trace::{IterationRecord, RunTrace};
