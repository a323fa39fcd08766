//! Scores, reports, state export and plots.

mod nse;
pub mod plot;
mod report;
mod states;

pub use nse::{nse, pooled_nse, runoff_ratio, windowed_nse, WindowedNse};
pub use report::{mean, median, summarize, Aggregate, BasinEval, EvalReport};
pub use states::{export_states, state_rows, StateRow};

#[cfg(test)]
mod tests;
