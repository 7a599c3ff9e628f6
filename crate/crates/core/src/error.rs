use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("classical trajectory diverged at grid index {index} (t = {time})")]
    Diverged { index: usize, time: f64 },

    #[error("flow Jacobian is not symplectic: |det J - 1| = {deviation:e}")]
    Symplecticity { deviation: f64 },

    #[error("non-finite PDE coefficient at grid index {index}")]
    Assembly { index: usize },

    #[error("exponential action did not converge within {terms} Taylor terms; reduce the time step")]
    StepTooLarge { terms: usize },

    #[error("Wigner field became non-finite at step {step}")]
    Instability { step: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("state has zero norm")]
    DegenerateState,

    #[error("position marginal shows fewer than two interference peaks")]
    NoInterference,

    #[error("insufficient resolution: spectral tail mass {0:e}")]
    Resolution(f64),

    #[error("malformed file at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("at step {step} (Ωt = {time}): {source}")]
    AtStep {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
