//! Numerical laboratory for the emergence of the giant component in sparse
//! random graphs.
//!
//! The crate simulates two coupled probabilistic objects: the binomial
//! branching process with offspring distribution Bi(n, p), and the random
//! graph G(n, p) explored one vertex neighbourhood at a time. Around them it
//! provides exact small-case enumerations, survival-probability solving,
//! coupled explorations that certify stochastic-ordering relations sample by
//! sample, and batch experiments with confidence intervals and pass/fail
//! verdicts.
//!
//! Everything random is driven by counter-based streams addressed by
//! (master seed, replicate index, stream label), so any experiment replays
//! bit for bit regardless of thread count or execution order.

#![forbid(unsafe_code)]

pub mod bp;
pub mod config;
pub mod coupling;
pub mod error;
pub mod experiments;
pub mod gnp;
pub mod oracle;
pub mod pool;
pub mod report;
pub mod rng;
pub mod stats;
pub mod union_find;

pub use error::{Error, Result};
