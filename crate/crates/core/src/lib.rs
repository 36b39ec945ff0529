//! Asymptotic period and recurrence classification of discrete-time
//! birth-death chains.
//!
//! A birth-death chain on `{0, 1, 2, ...}` moves from state `i` to `i - 1`,
//! `i` or `i + 1` with probabilities `q_i`, `r_i`, `p_i`. Its asymptotic
//! period is always 1, 2 or infinite:
//!
//! * infinite iff `prod p_i > 0`,
//! * 1 iff `sum_j (1/(p_j pi_j)) sum_{k<=j} r_k pi_k` diverges,
//! * 2 otherwise.
//!
//! [`period::asymptotic_period`] evaluates these criteria with closed-form
//! tail rules where available, [`qpoly`] cross-checks the aperiodicity
//! criterion through the birth-death polynomials at `x = -1`, and [`sim`]
//! checks the predicted long-run cyclic structure on seeded sample paths.

pub mod chain;
pub mod error;
pub mod numerics;
pub mod qpoly;
pub mod report;
pub mod period;
pub mod series;
pub mod sim;

pub use chain::{ChainDocument, ChainSpec, Row, TailFamily};
pub use error::{BdError, Result};
pub use period::{asymptotic_period, Period, PeriodReport};
pub use series::{Convergence, ProbePolicy, Verdict};
