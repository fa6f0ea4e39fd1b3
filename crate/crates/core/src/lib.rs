//! Simulation workbench for additive causal bandits with unknown graphs.
//!
//! The crate covers discrete structural causal models ([`scm`]), their random
//! generation ([`gen`]), the one-hot linear-bandit machinery ([`design`]), the
//! marginal optimal design elimination algorithm ([`modl`]), comparison
//! baselines ([`baselines`]) and a reproducible experiment harness
//! ([`harness`]).

pub mod baselines;
pub mod cli;
pub mod design;
pub mod env;
pub mod error;
pub mod gen;
pub mod harness;
pub mod modl;
pub mod scm;

pub use error::{Error, Result};
