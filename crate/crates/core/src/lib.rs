//! Simulator and bound toolkit for position-authenticated quantum key
//! exchange: loss-tolerant BB84 QPV in a 1-D spacetime, message
//! authentication through QPV runs, and QKD closed by hashing and QPV.

pub mod auth;
pub mod bits;
pub mod bounds;
pub mod kex;
pub mod msgauth;
pub mod qpv;
pub mod quantum;
pub mod spacetime;
pub mod trials;

pub use auth::{AuthError, CodecParams, HashFamilyParams};
pub use bits::BitString;
pub use bounds::{Bound, BoundsError, DeltaTildeTable, SecurityParams, Thm1Variant};
pub use kex::{ChannelAdversary, ChannelAttack, ExchangeOutcome, ExchangeSettings, KexError};
pub use msgauth::{MsgAdversary, MsgAuthConfig, MsgAuthError, MsgAuthSettings};
pub use qpv::{run_qpv, ProverStrategy, QpvConfig, QpvError, RunOptions};
pub use trials::{run_trials, RateEstimate};
