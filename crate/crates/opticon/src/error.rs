//! Error type shared across the crate.

use thiserror::Error;

use crate::fock::ModeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Normalization of a state with (numerically) zero norm. Signals an
    /// impossible post-selection branch.
    #[error("cannot normalize a state with zero norm")]
    ZeroState,

    /// A beam-splitter output mode already carries photons.
    #[error("output mode `{0}` is already occupied")]
    ModeCollision(ModeId),

    /// A mode label contains characters reserved by the text formats.
    #[error("invalid mode label `{0}`: labels are non-empty ASCII alphanumerics, `_` or `'`")]
    InvalidModeLabel(String),

    /// An element or circuit is structurally malformed.
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    /// An element maps a basis vector outside the provided basis.
    #[error("element action leaves the provided basis (missing term `{0}`)")]
    BasisNotClosed(String),

    /// A measured mode does not hold exactly one photon in every term.
    /// Usually means the caller skipped photon-number post-selection.
    #[error("mode `{0}` does not hold exactly one photon in every term")]
    NotSinglePhoton(ModeId),

    /// A bipartition does not describe single-photon polarization qubits.
    #[error("qubit condition violated: {0}")]
    QubitCondition(String),

    /// Schmidt eigenvalues drifted too far from unit sum; upstream bug.
    #[error("schmidt spectrum sum drifted from 1 by {0:e}")]
    SpectrumDrift(f64),

    /// Wrong number of modes for a canonical target state.
    #[error("canonical `{kind}` state needs {expected} modes, got {got}")]
    ArityMismatch {
        kind: &'static str,
        expected: &'static str,
        got: usize,
    },

    /// Protocol is defined for 2 or 3 parties only.
    #[error("unsupported party count {0} (expected 2 or 3)")]
    UnsupportedPartyCount(u32),

    /// Invalid protocol configuration.
    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),

    /// State text format parse failure.
    #[error("state parse error at line {line}: {msg}")]
    ParseState { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
