use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("amplitude {amplitude:.3e} at the {edge} edge exceeds spill threshold {threshold:.3e}")]
    Spill {
        edge: Edge,
        amplitude: f64,
        threshold: f64,
    },

    #[error("grid or timestamp mismatch: {0}")]
    GridMismatch(String),

    #[error("time step {dt} does not divide the interval {interval}")]
    Step { dt: f64, interval: f64 },

    #[error("propagator requested at non-positive time {0}")]
    ZeroTime(f64),

    #[error("scattering amplitude requested at zero momentum")]
    ZeroMomentum,

    #[error("positive-momentum weight {weight:.3e} exceeds tolerance {tolerance:.3e}")]
    PositiveMomentum { weight: f64, tolerance: f64 },

    #[error("{what}: discrepancy {value:.3e} exceeds tolerance {tolerance:.3e}")]
    Consistency {
        what: String,
        value: f64,
        tolerance: f64,
    },

    #[error("outside the regime of validity: {0}")]
    Regime(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Edge::Left => write!(f, "left"),
            Edge::Right => write!(f, "right"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
