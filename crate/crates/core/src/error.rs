use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("log magnitude {log_mag} overflows a plain complex value")]
    Overflow { log_mag: f64 },

    #[error("precision envelope exceeded: {0}")]
    Precision(String),

    #[error("photon-number constraint infeasible: nbar {nbar} < sinh^2(x) = {floor}")]
    Infeasible { nbar: f64, floor: f64 },

    #[error("degenerate post-selection: squared norm {norm:e} below the double-precision floor")]
    DegeneratePostSelection { norm: f64 },

    #[error("truncation insufficient: tail mass {tail:e} at cutoff {cutoff}")]
    Truncation { cutoff: usize, tail: f64 },

    #[error("oracle refuses input: {0}")]
    OracleRange(String),

    #[error("squeezed-state construction paths disagree by {diff:e}")]
    PathDisagreement { diff: f64 },

    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),

    #[error("optimizer did not converge after {evaluations} evaluations")]
    NotConverged { evaluations: usize },

    #[error("target {target} outside achievable range [{low}, {high}]")]
    Range { target: f64, low: f64, high: f64 },

    #[error("fidelity not monotone in transmissivity: F({t_mid}) = {f_mid} outside [{f_low}, {f_high}]")]
    NonMonotone {
        t_mid: f64,
        f_mid: f64,
        f_low: f64,
        f_high: f64,
    },

    #[error("refusing to classify an unconverged estimate")]
    Unconverged,
}

pub type Result<T> = std::result::Result<T, Error>;
