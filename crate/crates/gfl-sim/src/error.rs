//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter, gain, or constraint violates its invariant. The message
    /// names the first violated invariant.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The DC-link voltage reached a non-physical value; the energy-balance
    /// equation divides by `V_dc`, so integration cannot continue.
    #[error("singular state: V_dc = {v_dc} V (DC link collapsed)")]
    SingularState { v_dc: f64 },

    /// No gain satisfies all bounds; `binding` names the constraint that
    /// closes the interval.
    #[error("infeasible design: binding constraint {binding}: {detail}")]
    Infeasible { binding: String, detail: String },

    /// The modulation margin is non-positive: the DC link cannot even match
    /// the grid voltage, so no feedback headroom exists.
    #[error("infeasible hardware: modulation margin H_min = {h_min:.3} V <= 0")]
    NoHeadroom { h_min: f64 },

    /// Malformed or inconsistent run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Scenario preconditions violated (step size, horizon, trace mismatch).
    #[error("scenario error: {0}")]
    Scenario(String),

    /// An exponential fit did not describe the data well enough to report.
    #[error("fit quality too low: R^2 = {r_squared:.6}")]
    FitQuality { r_squared: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
