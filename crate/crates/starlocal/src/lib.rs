//! Star-network n-locality toolkit.
//!
//! A star network couples `n` independent sources to one central party and
//! `n` edge parties; with `m` central inputs and `2^(m-1)` inputs per edge
//! party, the network obeys the n-local bound `2^(m-1)` while quantum
//! sources reach `2^(m-1) * sqrt(m)`. The crate builds the combinatorial
//! encoding of such a scenario, the quantum realization attaining the
//! optimum, brute-force classical bounds, full joint distributions at desk
//! scale, and the certificate battery that self-tests the optimum.

pub mod algebra;
pub mod classical;
pub mod correlations;
pub mod encoding;
pub mod error;
pub mod operator;
pub mod verification;

pub use algebra::{build_realization, build_realization_with_cap, QuantumRealization};
pub use classical::{enumerate_valid_strategies, eta_max, DeterministicStrategy};
pub use correlations::{delta_value, werner_delta, ScenarioValue};
pub use encoding::EncodingTable;
pub use error::{Error, Result};
pub use verification::{self_test_report, VerificationReport};
