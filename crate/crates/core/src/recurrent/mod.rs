//! Recurrent and feed-forward building blocks with analytic backward passes.

mod bilstm;
mod lstm;
mod mlp;

pub use bilstm::{bilstm_backward, bilstm_embed, BiLstmLayer, BiLstmOutput};
pub use lstm::{
    lstm_cell_backward, lstm_cell_forward, lstm_sequence, lstm_sequence_backward, CellCache, CellGrads, LstmGrads,
    LstmLayer, LstmParams, LstmState, SequenceCache, SequenceGrads,
};
pub use mlp::{mlp_backward, mlp_forward, LinearLayer, MlpCache, MlpGrads, MlpLayer, MlpParams};

#[cfg(test)]
mod tests;
