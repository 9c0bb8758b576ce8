//! Physical parameters of a single-relaxation medium and the constants
//! derived from them.
//!
//! A medium is specified by the relaxation time `tau1`, the compressibility
//! `kappa1`, the density `rho` and one of the two sound speeds: the
//! high-frequency speed `c_inf` or the low-frequency speed `c0`. The relaxed
//! time `tau0` and the remaining speed follow from
//!
//! ```text
//! tau0 = (1 - c0^2 rho kappa1) tau1 = tau1 / (1 + c_inf^2 rho kappa1)
//! c_inf = sqrt(tau1 / tau0) c0
//! ```
//!
//! All quantities are SI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which speed of sound a [`RawParams`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedKind {
    CInfinity,
    CZero,
}

impl std::str::FromStr for SpeedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c_infinity" => Ok(SpeedKind::CInfinity),
            "c_zero" => Ok(SpeedKind::CZero),
            other => Err(Error::Config(format!(
                "speed_kind must be c_infinity or c_zero, got `{other}`"
            ))),
        }
    }
}

/// User-facing medium parameters, as read from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    #[serde(rename = "tau1_s")]
    pub tau1: f64,
    #[serde(rename = "kappa1_m2_per_N")]
    pub kappa1: f64,
    #[serde(rename = "rho_kg_per_m3")]
    pub rho: f64,
    #[serde(rename = "speed_m_per_s")]
    pub speed: f64,
    pub speed_kind: SpeedKind,
}

impl RawParams {
    /// Water-like soft tissue at normal temperature.
    pub const WATER: RawParams = RawParams {
        tau1: 1e-9,
        kappa1: 5e-10,
        rho: 1e3,
        speed: 1500.0,
        speed_kind: SpeedKind::CInfinity,
    };

    pub fn with_kappa1(self, kappa1: f64) -> Self {
        RawParams { kappa1, ..self }
    }

    fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, value: f64) -> Result<()> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and > 0",
                })
            }
        }
        positive("tau1_s", self.tau1)?;
        positive("rho_kg_per_m3", self.rho)?;
        positive("speed_m_per_s", self.speed)?;
        if !(self.kappa1.is_finite() && self.kappa1 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "kappa1_m2_per_N",
                value: self.kappa1,
                reason: "must be finite and >= 0",
            });
        }
        Ok(())
    }
}

/// A validated medium with all derived constants.
///
/// Immutable once built; construct through [`derive_medium`] or
/// [`Medium::nondimensional`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    tau1: f64,
    tau0: f64,
    c0: f64,
    c_inf: f64,
    kappa1: f64,
    rho: f64,
    k_c: f64,
}

/// Validate `raw` and derive `tau0`, both speeds and the critical wavenumber.
pub fn derive_medium(raw: &RawParams) -> Result<Medium> {
    raw.validate()?;
    let RawParams {
        tau1,
        kappa1,
        rho,
        speed,
        speed_kind,
    } = *raw;

    let (tau0, c0, c_inf) = match speed_kind {
        SpeedKind::CInfinity => {
            let c_inf = speed;
            let tau0 = tau1 / (1.0 + c_inf * c_inf * rho * kappa1);
            (tau0, c_inf * (tau0 / tau1).sqrt(), c_inf)
        }
        SpeedKind::CZero => {
            let c0 = speed;
            let product = c0 * c0 * rho * kappa1;
            if product >= 1.0 {
                return Err(Error::UnphysicalMedium { product });
            }
            let tau0 = (1.0 - product) * tau1;
            (tau0, c0, (tau1 / tau0).sqrt() * c0)
        }
    };
    if !(tau0 > 0.0) {
        return Err(Error::UnphysicalMedium {
            product: 1.0 - tau0 / tau1,
        });
    }

    Ok(Medium {
        tau1,
        tau0,
        c0,
        c_inf,
        kappa1,
        rho,
        k_c: 2.0 / (c0 * tau1),
    })
}

impl Medium {
    /// Medium in units where `tau1 = 1`, `c0 = 1` and `rho = 1`, with the
    /// requested relaxed-to-relaxation time ratio `tau0 / tau1` in `(0, 1]`.
    ///
    /// Exponents such as `Re(lambda0 - lambda1) T` stay of order `T`, so the
    /// full image multiplier is representable for moderate `T`.
    pub fn nondimensional(tau_ratio: f64) -> Result<Medium> {
        if !(tau_ratio > 0.0 && tau_ratio <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "tau0/tau1",
                value: tau_ratio,
                reason: "must lie in (0, 1]",
            });
        }
        derive_medium(&RawParams {
            tau1: 1.0,
            kappa1: 1.0 - tau_ratio,
            rho: 1.0,
            speed: 1.0,
            speed_kind: SpeedKind::CZero,
        })
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c_inf(&self) -> f64 {
        self.c_inf
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Threshold `2 / (c0 tau1)` between small and large wavenumbers.
    pub fn k_c(&self) -> f64 {
        self.k_c
    }

    /// `tau1 / tau0`, which is `1 + c_inf^2 rho kappa1`.
    pub fn tau_ratio_inv(&self) -> f64 {
        self.tau1 / self.tau0
    }

    pub fn is_dissipation_free(&self) -> bool {
        self.kappa1 == 0.0
    }

    /// The same medium expressed with `c0` as the supplied speed.
    pub fn raw_c_zero(&self) -> RawParams {
        RawParams {
            tau1: self.tau1,
            kappa1: self.kappa1,
            rho: self.rho,
            speed: self.c0,
            speed_kind: SpeedKind::CZero,
        }
    }
}
