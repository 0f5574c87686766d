use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("parameter {t} outside domain [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("segment index {index} out of range (curve has {len} segments)")]
    SegmentIndex { index: usize, len: usize },

    #[error("curves do not join: {0}")]
    Junction(String),

    #[error("chord between parameters {s} and {t} has zero length")]
    DegenerateChord { s: f64, t: f64 },

    #[error("input is not {lip}-Lipschitz on [{s}, {t}]: chord speed {speed}")]
    NotLipschitz { s: f64, t: f64, lip: f64, speed: f64 },

    #[error("derivative is ambiguous at corner parameter {0}")]
    AmbiguousDerivative(f64),

    #[error("bad-set construction did not terminate after {0} intervals")]
    Pathological(usize),

    #[error("window around {x} too small: measure {measure} < required {required}")]
    WindowTooSmall { x: f64, measure: f64, required: f64 },

    #[error("cannot straighten: {0}")]
    CannotStraighten(String),

    #[error("reparametrization would expand: speed {speed} exceeds {lip}")]
    WouldExpand { speed: f64, lip: f64 },

    #[error("shortening did not converge after {0} accepted steps")]
    NonConvergence(usize),

    #[error("budget violation: {0}")]
    Budget(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("domain accounting: {0}")]
    Accounting(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("chart too long: {0} >= 2*pi")]
    ChartTooLong(f64),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("curve generation failed after {0} rejections")]
    Generation(usize),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("arc {index}: {source}")]
    Arc {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
