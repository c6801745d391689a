use crate::measures::OnticSpace;

/// Errors raised by the ontolab core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must live on the same ontic state space do not.
    #[error("ontic space mismatch: {left} vs {right}")]
    SpaceMismatch { left: OnticSpace, right: OnticSpace },

    /// The model failed to reproduce the Born rule for some preparation and measurement.
    #[error(
        "not a model of quantum theory: psi = {psi}, axis = {axis}, outcome {outcome}: \
         model gives {model_probability}, quantum theory gives {born_probability}"
    )]
    NotQuantum {
        psi: String,
        axis: String,
        outcome: usize,
        model_probability: f64,
        born_probability: f64,
    },

    /// An argument's hypothesis does not hold for the model, so the argument is refused.
    #[error("refused: {0}")]
    HypothesisRefused(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
