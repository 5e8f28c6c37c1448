use serde::{Deserialize, Serialize};

/// What a training run reports back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub family: String,
    pub epochs: usize,
    /// Final training objective, when the family optimizes one.
    pub objective: Option<f64>,
    /// Mistakes made during the last training epoch (perceptron).
    pub last_epoch_errors: Option<usize>,
}
