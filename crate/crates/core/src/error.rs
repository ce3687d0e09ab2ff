use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Index fields are 0-based; messages print them 1-based, matching the CSV
/// output and edge lists.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular jet in {op}: {detail}")]
    SingularJet { op: &'static str, detail: String },

    #[error("jet order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("jet orders differ ({left} vs {right})")]
    OrderMismatch { left: usize, right: usize },

    #[error("cannot differentiate an order-0 jet")]
    ZeroOrderShift,

    #[error("ordering ambiguity: vehicles {} and {} share altitude {altitude}", .first + 1, .second + 1)]
    OrderingAmbiguity { first: usize, second: usize, altitude: f64 },

    #[error("acyclic ordering violated: edge {}->{} carries a next-level dependency against index order", .from + 1, .to + 1)]
    OrderingViolation { from: usize, to: usize },

    #[error("downwash domain error: vertical separation {delta_y} must be strictly positive")]
    SeparationDomain { delta_y: f64 },

    #[error("thrust domain error: subsystem {} has thrust {thrust} (must be > 0)", .subsystem + 1)]
    ThrustDomain { subsystem: usize, thrust: f64 },

    #[error("singular inverse map h_{level} for subsystem {}: {detail}", .subsystem + 1)]
    SingularInverse {
        subsystem: usize,
        level: usize,
        detail: String,
    },

    #[error("information contract violated: subsystem {} needs data from {}, which was not gathered", .subsystem + 1, .missing + 1)]
    InformationContract { subsystem: usize, missing: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("controller synthesis failed: {0}")]
    Synthesis(String),

    #[error("non-finite state derivative at t = {t}")]
    NonFinite { t: f64 },

    #[error("simulation aborted at t = {t} (step {step}): {source}")]
    Simulation {
        t: f64,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
