//! Rain, fog and atmospheric attenuation for radar and lidar.
//!
//! Every attenuation returned here is in the same "model-dB" unit that the
//! link-budget factor `10^(-γΓ/1000)` consumes; no conversion happens between
//! the two stages. Tuning coefficients scale the physical terms linearly, so
//! a coefficient of one leaves the physical model untouched.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// Which sensor family a formula or measurement belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Radar,
    Lidar,
}

impl SensorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SensorKind::Radar => "radar",
            SensorKind::Lidar => "lidar",
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "radar" => Ok(SensorKind::Radar),
            "lidar" => Ok(SensorKind::Lidar),
            other => Err(Error::Invalid(format!("unknown sensor kind `{other}`"))),
        }
    }
}

/// Rain rate and fog visual range.
///
/// A fog visual range of `f64::INFINITY` means no fog; it is written `inf`
/// in every text format.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeatherCondition {
    rain_rate: f64,
    fog_visual_range: f64,
}

impl WeatherCondition {
    pub const CLEAR: WeatherCondition = WeatherCondition {
        rain_rate: 0.0,
        fog_visual_range: f64::INFINITY,
    };

    /// `rain_rate` in mm/h, `fog_visual_range` in metres (or infinity).
    pub fn new(rain_rate: f64, fog_visual_range: f64) -> Result<Self> {
        ensure_non_negative("rain rate", rain_rate)?;
        if fog_visual_range.is_nan() || fog_visual_range <= 0.0 {
            return Err(Error::domain("fog visual range", "> 0 or inf", fog_visual_range));
        }
        Ok(WeatherCondition {
            rain_rate,
            fog_visual_range,
        })
    }

    pub fn rain(rain_rate: f64) -> Result<Self> {
        Self::new(rain_rate, f64::INFINITY)
    }

    pub fn fog(visual_range: f64) -> Result<Self> {
        Self::new(0.0, visual_range)
    }

    pub fn rain_rate(&self) -> f64 {
        self.rain_rate
    }

    pub fn fog_visual_range(&self) -> f64 {
        self.fog_visual_range
    }

    pub fn is_fog_clear(&self) -> bool {
        self.fog_visual_range.is_infinite()
    }

    pub fn is_clear(&self) -> bool {
        self.rain_rate == 0.0 && self.is_fog_clear()
    }
}

impl fmt::Display for WeatherCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rain={} mm/h, fog={}",
            self.rain_rate,
            fmt_visibility(self.fog_visual_range)
        )
    }
}

/// Formats a visual range with `inf` for clear air.
pub fn fmt_visibility(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        v.to_string()
    }
}

/// Physical constants of the rain and fog models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttenuationParams {
    /// Radar rain coefficient k_R.
    pub k_radar: f64,
    /// Radar rain exponent α_R.
    pub alpha_radar: f64,
    /// Radar fog coefficient b_R.
    pub b_radar: f64,
    pub k_lidar: f64,
    pub alpha_lidar: f64,
    /// Absorption coefficient q of the lidar fog model.
    pub q_absorption: f64,
    /// Reference wavelength λ_0 of the lidar fog model.
    pub lambda0_m: f64,
    /// Fog-type parameter c_f.
    pub c_fog: f64,
    pub gamma_a_radar_db: f64,
    pub gamma_a_lidar_db: f64,
}

impl Default for AttenuationParams {
    fn default() -> Self {
        AttenuationParams {
            k_radar: 1.1319,
            alpha_radar: 0.7174,
            b_radar: 3.1733,
            k_lidar: 1.076,
            alpha_lidar: 0.67,
            q_absorption: 3.45e-2,
            lambda0_m: 550e-9,
            c_fog: 0.034,
            gamma_a_radar_db: 0.6,
            gamma_a_lidar_db: 0.03,
        }
    }
}

impl AttenuationParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("k_radar", self.k_radar)?;
        ensure_positive("k_lidar", self.k_lidar)?;
        ensure_positive("b_radar", self.b_radar)?;
        ensure_positive("c_fog", self.c_fog)?;
        ensure_positive("lambda0_m", self.lambda0_m)?;
        for (name, v) in [
            ("alpha_radar", self.alpha_radar),
            ("alpha_lidar", self.alpha_lidar),
            ("q_absorption", self.q_absorption),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(name, "finite", v));
            }
        }
        ensure_non_negative("gamma_a_radar_db", self.gamma_a_radar_db)?;
        ensure_non_negative("gamma_a_lidar_db", self.gamma_a_lidar_db)?;
        Ok(())
    }

    pub fn atmospheric(&self, kind: SensorKind) -> f64 {
        match kind {
            SensorKind::Radar => self.gamma_a_radar_db,
            SensorKind::Lidar => self.gamma_a_lidar_db,
        }
    }
}

/// Empirical tuning coefficients of one sensor.
///
/// `xi` is the radar offset calibration and is ignored for lidar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningCoefficients {
    pub eta_rain: f64,
    pub eta_fog: f64,
    pub xi: f64,
}

impl TuningCoefficients {
    /// All ones: the purely physical model.
    pub const BASELINE: TuningCoefficients = TuningCoefficients {
        eta_rain: 1.0,
        eta_fog: 1.0,
        xi: 1.0,
    };

    pub fn new(eta_rain: f64, eta_fog: f64, xi: f64) -> Result<Self> {
        let c = TuningCoefficients { eta_rain, eta_fog, xi };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("eta_rain", self.eta_rain)?;
        ensure_positive("eta_fog", self.eta_fog)?;
        ensure_positive("xi", self.xi)?;
        Ok(())
    }
}

impl Default for TuningCoefficients {
    fn default() -> Self {
        Self::BASELINE
    }
}

/// Fog density `M = (c_f / v)^(3/2)`.
pub fn fog_density(visual_range: f64, c_fog: f64) -> Result<f64> {
    ensure_positive("fog visual range", visual_range)?;
    ensure_positive("fog-type parameter", c_fog)?;
    Ok((c_fog / visual_range).powf(1.5))
}

/// Rain attenuation `η · k · r^α` with `(k, α)` chosen by sensor kind.
pub fn rain_attenuation(kind: SensorKind, rain_rate: f64, params: &AttenuationParams, eta_rain: f64) -> Result<f64> {
    ensure_non_negative("rain rate", rain_rate)?;
    if rain_rate == 0.0 {
        return Ok(0.0);
    }
    let (k, alpha) = match kind {
        SensorKind::Radar => (params.k_radar, params.alpha_radar),
        SensorKind::Lidar => (params.k_lidar, params.alpha_lidar),
    };
    Ok(eta_rain * k * rain_rate.powf(alpha))
}

/// Fog attenuation. Radar: `η · b_R · M(v)`. Lidar: `η · (17 / v) · (λ_L / λ_0)^(-q)`.
///
/// An infinite visual range yields exactly zero. `lidar_wavelength` is only
/// read for lidar.
pub fn fog_attenuation(
    kind: SensorKind,
    visual_range: f64,
    params: &AttenuationParams,
    lidar_wavelength: f64,
    eta_fog: f64,
) -> Result<f64> {
    if visual_range == f64::INFINITY {
        return Ok(0.0);
    }
    ensure_positive("fog visual range", visual_range)?;
    match kind {
        SensorKind::Radar => Ok(eta_fog * params.b_radar * fog_density(visual_range, params.c_fog)?),
        SensorKind::Lidar => {
            ensure_positive("lidar wavelength", lidar_wavelength)?;
            let spectral = (lidar_wavelength / params.lambda0_m).powf(-params.q_absorption);
            Ok(eta_fog * (17.0 / visual_range) * spectral)
        }
    }
}

/// `γ = γ_r + γ_f + γ_a`.
pub fn total_attenuation(rain: f64, fog: f64, atmospheric: f64) -> Result<f64> {
    ensure_non_negative("rain attenuation", rain)?;
    ensure_non_negative("fog attenuation", fog)?;
    ensure_non_negative("atmospheric attenuation", atmospheric)?;
    Ok(rain + fog + atmospheric)
}

/// The three components of one attenuation evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Attenuation {
    pub rain: f64,
    pub fog: f64,
    pub atmospheric: f64,
}

impl Attenuation {
    pub fn total(&self) -> f64 {
        self.rain + self.fog + self.atmospheric
    }
}

/// Evaluates all three components for one sensor under one condition.
pub fn attenuation(
    kind: SensorKind,
    condition: &WeatherCondition,
    params: &AttenuationParams,
    lidar_wavelength: f64,
    coeffs: &TuningCoefficients,
) -> Result<Attenuation> {
    Ok(Attenuation {
        rain: rain_attenuation(kind, condition.rain_rate(), params, coeffs.eta_rain)?,
        fog: fog_attenuation(
            kind,
            condition.fog_visual_range(),
            params,
            lidar_wavelength,
            coeffs.eta_fog,
        )?,
        atmospheric: params.atmospheric(kind),
    })
}
