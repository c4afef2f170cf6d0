//! Outage analysis for a time-switching SWIPT two-way decode-and-forward relay
//! operating under time-division broadcast (TDBC).
//!
//! Two terminals `A` and `B` exchange messages through an energy-harvesting
//! relay `R` that also overhears a direct `A`-`B` link. The crate evaluates the
//! system outage probability two ways:
//!
//! - [`analytic`]: closed-form CDFs and a Gauss-Chebyshev quadrature
//!   approximation of the outage probability, its high-SNR asymptote and the
//!   resulting diversity slope.
//! - [`montecarlo`]: a deterministic, chunked Monte Carlo estimator that acts as
//!   ground truth for the analytic pipeline.
//!
//! [`sweep`] drives both engines over one-dimensional parameter sweeps and
//! writes CSV tables.

pub mod analytic;
pub mod link;
pub mod montecarlo;
pub mod params;
pub mod special;
pub mod sweep;

pub use analytic::{AnalyticError, AnalyticTerms, IntegrationBounds, XiQuadrature};
pub use link::{ChannelDraw, CombiningScheme, LinkGains, LinkModel, LinkSnrs};
pub use montecarlo::{OutageEstimate, SimulationPlan};
pub use params::{dbm_to_watts, watts_to_dbm, DerivedConstants, ParamError, SystemParams};
