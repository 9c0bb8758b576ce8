use std::path::PathBuf;

/// Errors produced by the spectral, kernel and imaging routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// `c0^2 rho kappa1 >= 1` leaves no positive relaxed time.
    #[error("unphysical medium: c0^2*rho*kappa1 = {product} must be < 1 (no finite wavefront speed)")]
    UnphysicalMedium { product: f64 },

    /// Cardano's intermediate `C` is complex at this wavenumber.
    #[error("Cardano coefficient C is complex at k = {k} (imaging requires the real-C regime)")]
    ComplexRegime { k: f64 },

    #[error("roots are degenerate at k = {k}: min separation {separation:e} relative to max |lambda|")]
    DegenerateRoots { k: f64, separation: f64 },

    #[error("singular moment system at k = {k}")]
    SingularSystem { k: f64 },

    #[error("value with log-scale {log_scale:e} is not representable as f64")]
    Overflow { log_scale: f64 },

    #[error("multiplier at k = {k} has imaginary part {imag:e} against magnitude {magnitude:e}")]
    NonRealMultiplier { k: f64, imag: f64, magnitude: f64 },

    #[error("mode {mode} decays backwards in time at k = {k} (Re lambda = {re})")]
    GrowingMode { k: f64, mode: usize, re: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("gaussian with sigma = {sigma:e} m needs 6*sigma <= extent/2 = {half_extent:e} m")]
    SupportOverflow { sigma: f64, half_extent: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("field shape mismatch: {0}")]
    Shape(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
