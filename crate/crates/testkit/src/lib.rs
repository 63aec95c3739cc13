//! Reference oracles used only by tests. Nothing here shares code with the
//! implementation it checks.

pub mod calendar;
pub mod dense;
pub mod finite_diff;
pub mod precise;
