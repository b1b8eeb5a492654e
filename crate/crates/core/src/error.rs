use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Domain(String),

    #[error("degenerate root configuration: roots {first} and {second} coincide")]
    DegenerateRoots { first: usize, second: usize },

    #[error("branch n = {branch} sends the root to infinity for L = {length}")]
    RootAtInfinity { length: usize, branch: i64 },

    #[error("{stage} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("singular Jacobian in the Bethe solver; try another initial guess")]
    SingularJacobian,

    #[error("q = {q} is below the regular regime (q_min = {q_min})")]
    SingularRegime { q: f64, q_min: f64 },

    #[error("linear system is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("no Fermi point found for q in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("memory budget exceeded: need about {required_bytes} bytes, budget {budget_bytes}")]
    MemoryBudget { required_bytes: u64, budget_bytes: u64 },

    #[error("boson cutoff n_max = {n_max} leaves no physical two-site sector")]
    CutoffTooSmall { n_max: usize },

    #[error("time step underflow at t = {t} (dt = {dt:e})")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("no plateau with |dS/dt| < {eps:e} before t = {end}; extend the time span or raise the tolerance")]
    NoPlateau { eps: f64, end: f64 },

    #[error("no candidate quantum-number configuration converged ({} tried)", attempted.len())]
    NoConvergentConfiguration { attempted: Vec<Vec<f64>> },

    #[error("at L = {length}: {source}")]
    AtLength {
        length: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error under any stage or length wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::AtLength { source, .. } => source.root(),
            e => e,
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }
}
