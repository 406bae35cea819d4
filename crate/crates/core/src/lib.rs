//! Coded caching for systems where only `K′` of `K` users show up at delivery.
//!
//! The crate builds the placement and delivery schemes over prime fields,
//! verifies them symbol by symbol over every active set and demand vector, and
//! evaluates their exact memory-load tradeoffs against converse bounds.

pub mod bounds;
pub mod cli;
pub mod combinat;
pub mod error;
pub mod field;
pub mod model;
pub mod rational;
pub mod schemes;
pub mod verifier;

pub use bounds::{TradeoffCurve, TradeoffPoint};
pub use error::{Error, Result};
pub use field::{FieldMatrix, PrimeField};
pub use model::{CachePlan, DemandScenario, SystemParams};
pub use rational::Rational;
pub use schemes::{Scheme, SchemeKind};
pub use verifier::VerificationReport;
