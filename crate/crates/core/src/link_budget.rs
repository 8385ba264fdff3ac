//! Received-power models for radar and lidar and the maximum-range solver.
//!
//! Both power laws share the attenuation factor `10^(-γΓ/1000)` and a `Γ⁻⁴`
//! spreading term. The maximum range is the largest distance on a fixed grid
//! where the received power still reaches the detection threshold, refined by
//! bisection inside the crossing cell.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::attenuation::{
    attenuation, Attenuation, AttenuationParams, SensorKind, TuningCoefficients, WeatherCondition,
};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Half-width of the radar azimuth field of view, degrees.
pub const RADAR_FOV_HALF_DEG: f64 = 65.0;

/// One row of an azimuth gain profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainPoint {
    pub psi_deg: f64,
    pub gain_db: f64,
}

/// Relative antenna gain over azimuth, linearly interpolated in degrees.
///
/// The gain at boresight is 0 dB; evaluation outside the covered span yields
/// `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GainPoint>", into = "Vec<GainPoint>")]
pub struct GainProfile {
    points: Vec<GainPoint>,
}

impl GainProfile {
    pub fn new(points: Vec<GainPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invalid("gain profile needs at least two rows".into()));
        }
        for p in &points {
            if !p.psi_deg.is_finite() || !p.gain_db.is_finite() {
                return Err(Error::Invalid("gain profile values must be finite".into()));
            }
            if p.psi_deg.abs() > RADAR_FOV_HALF_DEG {
                return Err(Error::domain("gain profile psi_deg", "within [-65, 65]", p.psi_deg));
            }
        }
        if points.windows(2).any(|w| w[1].psi_deg <= w[0].psi_deg) {
            return Err(Error::Invalid(
                "gain profile psi_deg must be strictly increasing".into(),
            ));
        }
        let profile = GainProfile { points };
        match profile.relative_gain_db_at_deg(0.0) {
            Some(g) if g.abs() <= 1e-9 => Ok(profile),
            Some(g) => Err(Error::domain("gain profile value at 0 deg", "0 dB", g)),
            None => Err(Error::Invalid("gain profile must cover 0 deg".into())),
        }
    }

    /// A constant 0 dB profile over the whole field of view.
    pub fn flat() -> Self {
        GainProfile {
            points: vec![
                GainPoint {
                    psi_deg: -RADAR_FOV_HALF_DEG,
                    gain_db: 0.0,
                },
                GainPoint {
                    psi_deg: RADAR_FOV_HALF_DEG,
                    gain_db: 0.0,
                },
            ],
        }
    }

    /// Reads `psi_deg,gain_db` rows.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let points = rdr.deserialize().collect::<std::result::Result<Vec<GainPoint>, _>>()?;
        Self::new(points)
    }

    pub fn points(&self) -> &[GainPoint] {
        &self.points
    }

    pub fn span_deg(&self) -> (f64, f64) {
        (self.points[0].psi_deg, self.points[self.points.len() - 1].psi_deg)
    }

    pub fn relative_gain_db_at_deg(&self, psi_deg: f64) -> Option<f64> {
        let (lo, hi) = self.span_deg();
        if !(lo..=hi).contains(&psi_deg) {
            return None;
        }
        let idx = self.points.partition_point(|p| p.psi_deg <= psi_deg);
        if idx == self.points.len() {
            return Some(self.points[idx - 1].gain_db);
        }
        let (a, b) = (self.points[idx - 1], self.points[idx]);
        let t = (psi_deg - a.psi_deg) / (b.psi_deg - a.psi_deg);
        Some(a.gain_db + t * (b.gain_db - a.gain_db))
    }

    pub fn relative_gain_db(&self, psi_rad: f64) -> Option<f64> {
        self.relative_gain_db_at_deg(psi_rad.to_degrees())
    }
}

impl TryFrom<Vec<GainPoint>> for GainProfile {
    type Error = Error;

    fn try_from(points: Vec<GainPoint>) -> Result<Self> {
        GainProfile::new(points)
    }
}

impl From<GainProfile> for Vec<GainPoint> {
    fn from(profile: GainProfile) -> Self {
        profile.points
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarSpec {
    pub p_t_w: f64,
    pub gain_dbi: f64,
    /// Detection threshold P_n.
    pub p_n_w: f64,
    pub freq_hz: f64,
    /// Offset calibration used when the power law is evaluated directly.
    /// Range predictions take the value from [`TuningCoefficients::xi`].
    pub xi: f64,
    pub min_points: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_profile: Option<GainProfile>,
}

impl RadarSpec {
    /// 77 GHz automotive radar with the hardware values of the reference campaign.
    pub fn paper_2024() -> Self {
        RadarSpec {
            p_t_w: 1e-2,
            gain_dbi: 16.0,
            p_n_w: 5e-12,
            freq_hz: 77e9,
            xi: 1.875,
            min_points: 1,
            gain_profile: None,
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.freq_hz
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("radar p_t_w", self.p_t_w)?;
        ensure_positive("radar p_n_w", self.p_n_w)?;
        ensure_positive("radar freq_hz", self.freq_hz)?;
        ensure_positive("radar xi", self.xi)?;
        if !self.gain_dbi.is_finite() {
            return Err(Error::domain("radar gain_dbi", "finite", self.gain_dbi));
        }
        if self.min_points < 1 {
            return Err(Error::domain("radar min_points", ">= 1", 0.0));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarSpec {
    pub p_t_w: f64,
    pub aperture_m2: f64,
    pub p_n_w: f64,
    pub transmission: f64,
    pub div_h_rad: f64,
    pub div_v_rad: f64,
    pub wavelength_m: f64,
    pub mount_height_m: f64,
    pub min_points: u32,
}

impl LidarSpec {
    pub fn paper_2024() -> Self {
        LidarSpec {
            p_t_w: 22e-2,
            aperture_m2: 4.4e-2,
            p_n_w: 1e-8,
            transmission: 0.9,
            div_h_rad: 18.27e-3,
            div_v_rad: 4.57e-3,
            wavelength_m: 905e-9,
            mount_height_m: 0.5,
            min_points: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("lidar p_t_w", self.p_t_w)?;
        ensure_positive("lidar aperture_m2", self.aperture_m2)?;
        ensure_positive("lidar p_n_w", self.p_n_w)?;
        ensure_positive("lidar div_h_rad", self.div_h_rad)?;
        ensure_positive("lidar div_v_rad", self.div_v_rad)?;
        ensure_positive("lidar wavelength_m", self.wavelength_m)?;
        if !(self.transmission > 0.0 && self.transmission <= 1.0) {
            return Err(Error::domain("lidar transmission", "in (0, 1]", self.transmission));
        }
        if !self.mount_height_m.is_finite() {
            return Err(Error::domain("lidar mount_height_m", "finite", self.mount_height_m));
        }
        if self.min_points < 1 {
            return Err(Error::domain("lidar min_points", ">= 1", 0.0));
        }
        Ok(())
    }
}

/// Pedestrian geometry and reflectivity.
///
/// Only `rcs_m2`, `reflectance`, `width_m` and `reflection_angle_rad` enter
/// the power laws; the remaining fields describe the target volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub rcs_m2: f64,
    pub reflectance: f64,
    pub width_m: f64,
    pub length_m: f64,
    pub height_m: f64,
    pub surface_m2: f64,
    pub rotation_rad: f64,
    pub reflection_angle_rad: f64,
    pub env_temp_c: f64,
}

impl TargetSpec {
    pub fn pedestrian() -> Self {
        TargetSpec {
            rcs_m2: 10.08,
            reflectance: 0.5,
            width_m: 0.4,
            length_m: 0.3,
            height_m: 1.8,
            surface_m2: 0.72,
            rotation_rad: 0.5 * PI,
            reflection_angle_rad: 0.5 * PI,
            env_temp_c: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("target rcs_m2", self.rcs_m2)?;
        if !(0.0..=1.0).contains(&self.reflectance) {
            return Err(Error::domain("target reflectance", "in [0, 1]", self.reflectance));
        }
        ensure_positive("target width_m", self.width_m)?;
        ensure_positive("target length_m", self.length_m)?;
        ensure_positive("target height_m", self.height_m)?;
        ensure_non_negative("target surface_m2", self.surface_m2)?;
        if !(self.reflection_angle_rad > 0.0 && self.reflection_angle_rad < PI) {
            return Err(Error::domain(
                "target reflection_angle_rad",
                "in (0, pi)",
                self.reflection_angle_rad,
            ));
        }
        for (name, v) in [
            ("target rotation_rad", self.rotation_rad),
            ("target env_temp_c", self.env_temp_c),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(name, "finite", v));
            }
        }
        Ok(())
    }
}

/// A radar or a lidar.
#[derive(Clone, Debug, PartialEq)]
pub enum SensorSpec {
    Radar(RadarSpec),
    Lidar(LidarSpec),
}

impl SensorSpec {
    pub fn kind(&self) -> SensorKind {
        match self {
            SensorSpec::Radar(_) => SensorKind::Radar,
            SensorSpec::Lidar(_) => SensorKind::Lidar,
        }
    }

    pub fn min_points(&self) -> u32 {
        match self {
            SensorSpec::Radar(r) => r.min_points,
            SensorSpec::Lidar(l) => l.min_points,
        }
    }

    pub fn threshold_w(&self) -> f64 {
        match self {
            SensorSpec::Radar(r) => r.p_n_w,
            SensorSpec::Lidar(l) => l.p_n_w,
        }
    }

    /// Wavelength used by the lidar fog model; NaN for radar.
    pub(crate) fn lidar_wavelength(&self) -> f64 {
        match self {
            SensorSpec::Radar(_) => f64::NAN,
            SensorSpec::Lidar(l) => l.wavelength_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SensorSpec::Radar(r) => r.validate(),
            SensorSpec::Lidar(l) => l.validate(),
        }
    }
}

impl From<RadarSpec> for SensorSpec {
    fn from(r: RadarSpec) -> Self {
        SensorSpec::Radar(r)
    }
}

impl From<LidarSpec> for SensorSpec {
    fn from(l: LidarSpec) -> Self {
        SensorSpec::Lidar(l)
    }
}

#[inline]
fn attenuation_factor(gamma: f64, range: f64) -> f64 {
    10f64.powf(-gamma * range / 1000.0)
}

fn radar_power(spec: &RadarSpec, xi: f64, target: &TargetSpec, gamma: f64, range: f64, rel_gain_db: f64) -> f64 {
    let gain = 10f64.powf((spec.gain_dbi + rel_gain_db) / 10.0);
    let lambda = spec.wavelength_m();
    let numerator = spec.p_t_w * xi * gain * gain * target.rcs_m2 * lambda * lambda;
    attenuation_factor(gamma, range) * numerator / (4.0 * PI.powi(3) * range.powi(4))
}

fn lidar_power(spec: &LidarSpec, target: &TargetSpec, gamma: f64, range: f64) -> f64 {
    let numerator = target.reflectance * spec.aperture_m2 * target.width_m * spec.transmission.powi(2) * spec.p_t_w;
    let half_angle = target.reflection_angle_rad / 2.0;
    let denominator = PI * PI * range.powi(4) * (spec.div_v_rad * spec.div_h_rad / 4.0) * half_angle * half_angle;
    attenuation_factor(gamma, range) * numerator / denominator
}

/// Radar received power in watts at range `range` and azimuth `psi` (radians).
///
/// Returns zero when `psi` lies outside the gain profile.
pub fn radar_received_power(spec: &RadarSpec, target: &TargetSpec, gamma: f64, range: f64, psi: f64) -> Result<f64> {
    ensure_positive("range", range)?;
    let rel = match &spec.gain_profile {
        Some(profile) => match profile.relative_gain_db(psi) {
            Some(g) => g,
            None => return Ok(0.0),
        },
        None => 0.0,
    };
    Ok(radar_power(spec, spec.xi, target, gamma, range, rel))
}

/// Lidar received power in watts at range `range`.
pub fn lidar_received_power(spec: &LidarSpec, target: &TargetSpec, gamma: f64, range: f64) -> Result<f64> {
    ensure_positive("range", range)?;
    Ok(lidar_power(spec, target, gamma, range))
}

/// Range grid and refinement settings of the maximum-range solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverGrid {
    pub min_m: f64,
    pub max_m: f64,
    pub step_m: f64,
    /// Bisection stops once the bracket is narrower than this; zero bisects
    /// to floating-point resolution.
    pub tolerance_m: f64,
    /// Scan the whole grid and reject power functions that increase. When
    /// off, the crossing cell is located by binary search.
    pub check_monotone: bool,
}

impl Default for SolverGrid {
    fn default() -> Self {
        SolverGrid {
            min_m: 0.1,
            max_m: 300.0,
            step_m: 0.01,
            tolerance_m: 1e-4,
            check_monotone: true,
        }
    }
}

impl SolverGrid {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("solver min_m", self.min_m)?;
        ensure_positive("solver step_m", self.step_m)?;
        ensure_non_negative("solver tolerance_m", self.tolerance_m)?;
        if !(self.max_m.is_finite() && self.max_m > self.min_m) {
            return Err(Error::domain("solver max_m", "> min_m", self.max_m));
        }
        Ok(())
    }

    fn last_index(&self) -> usize {
        ((self.max_m - self.min_m) / self.step_m + 1e-9).floor() as usize
    }

    fn point(&self, i: usize) -> f64 {
        self.min_m + i as f64 * self.step_m
    }

    /// Largest grid point (the grid may stop short of `max_m`).
    pub fn upper(&self) -> f64 {
        self.point(self.last_index())
    }
}

fn checked_power(power: f64, range: f64) -> Result<f64> {
    if power.is_nan() {
        Err(Error::Invalid(format!("received power is NaN at {range} m")))
    } else {
        Ok(power)
    }
}

/// Largest range on `grid` at which `power_fn(range) >= threshold`, refined
/// by bisection towards the next grid point. `None` if even the first grid
/// point fails.
pub fn solve_max_range<F>(power_fn: F, threshold: f64, grid: &SolverGrid) -> Result<Option<f64>>
where
    F: Fn(f64) -> f64,
{
    grid.validate()?;
    ensure_positive("detection threshold", threshold)?;
    let n = grid.last_index();
    let eval = |i: usize| -> Result<f64> {
        let r = grid.point(i);
        checked_power(power_fn(r), r)
    };

    // index of the first grid point that fails the threshold, n + 1 if none
    let first_fail = if grid.check_monotone {
        let mut prev = eval(0)?;
        let mut first_fail = if prev >= threshold { None } else { Some(0) };
        for i in 1..=n {
            let p = eval(i)?;
            if p > prev + 1e-12 * prev.abs() {
                return Err(Error::NonMonotone {
                    at: grid.point(i - 1),
                    next: grid.point(i),
                });
            }
            if first_fail.is_none() && p < threshold {
                first_fail = Some(i);
            }
            prev = p;
        }
        first_fail.unwrap_or(n + 1)
    } else {
        let (mut lo, mut hi) = (0usize, n + 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if eval(mid)? >= threshold {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    };

    if first_fail == 0 {
        return Ok(None);
    }
    let mut lo = grid.point(first_fail - 1);
    if first_fail > n {
        return Ok(Some(lo));
    }
    let mut hi = grid.point(first_fail);
    while hi - lo > grid.tolerance_m {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if checked_power(power_fn(mid), mid)? >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Attenuation and resulting maximum range of one prediction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub attenuation: Attenuation,
    pub range_m: Option<f64>,
}

/// Maximum detection range of `sensor` under `condition`.
///
/// With [`TuningCoefficients::BASELINE`] this is the physical model alone;
/// the radar offset calibration comes from `coeffs.xi`, not `RadarSpec::xi`.
pub fn predict(
    sensor: &SensorSpec,
    target: &TargetSpec,
    condition: &WeatherCondition,
    params: &AttenuationParams,
    coeffs: &TuningCoefficients,
    grid: &SolverGrid,
) -> Result<Prediction> {
    let att = attenuation(sensor.kind(), condition, params, sensor.lidar_wavelength(), coeffs)?;
    let range_m = range_for_attenuation(sensor, target, att.total(), coeffs.xi, 0.0, grid)?;
    Ok(Prediction {
        attenuation: att,
        range_m,
    })
}

pub fn predict_range(
    sensor: &SensorSpec,
    target: &TargetSpec,
    condition: &WeatherCondition,
    params: &AttenuationParams,
    coeffs: &TuningCoefficients,
    grid: &SolverGrid,
) -> Result<Option<f64>> {
    Ok(predict(sensor, target, condition, params, coeffs, grid)?.range_m)
}

fn range_for_attenuation(
    sensor: &SensorSpec,
    target: &TargetSpec,
    gamma: f64,
    xi: f64,
    rel_gain_db: f64,
    grid: &SolverGrid,
) -> Result<Option<f64>> {
    match sensor {
        SensorSpec::Radar(spec) => solve_max_range(
            |r| radar_power(spec, xi, target, gamma, r, rel_gain_db),
            spec.p_n_w,
            grid,
        ),
        SensorSpec::Lidar(spec) => solve_max_range(|r| lidar_power(spec, target, gamma, r), spec.p_n_w, grid),
    }
}

/// Maximum range at one azimuth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FovEntry {
    pub psi_rad: f64,
    pub range_m: Option<f64>,
}

/// Radar maximum range over azimuth.
///
/// The angular term is the same for every weather condition. Angles outside
/// ±65° or outside the gain profile map to `None`.
pub fn fov_map(
    spec: &RadarSpec,
    target: &TargetSpec,
    condition: &WeatherCondition,
    params: &AttenuationParams,
    coeffs: &TuningCoefficients,
    psi_grid: &[f64],
    grid: &SolverGrid,
) -> Result<Vec<FovEntry>> {
    let att = attenuation(SensorKind::Radar, condition, params, f64::NAN, coeffs)?;
    let sensor = SensorSpec::Radar(spec.clone());
    psi_grid
        .iter()
        .map(|&psi| {
            let in_fov = psi.to_degrees().abs() <= RADAR_FOV_HALF_DEG + 1e-9;
            let rel = match &spec.gain_profile {
                Some(profile) => profile.relative_gain_db(psi),
                None => Some(0.0),
            };
            let range_m = match rel {
                Some(rel) if in_fov => range_for_attenuation(&sensor, target, att.total(), coeffs.xi, rel, grid)?,
                _ => None,
            };
            Ok(FovEntry { psi_rad: psi, range_m })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn radar() -> RadarSpec {
        RadarSpec::paper_2024()
    }

    #[test]
    fn radar_power_at_ten_metres() {
        let p = radar_received_power(&radar(), &TargetSpec::pedestrian(), 0.0, 10.0, 0.0).unwrap();
        assert_relative_eq!(p, 3.6613e-9, max_relative = 1e-4);
    }

    #[test]
    fn radar_power_scaling() {
        let t = TargetSpec::pedestrian();
        let p10 = radar_received_power(&radar(), &t, 0.0, 10.0, 0.0).unwrap();
        let p20 = radar_received_power(&radar(), &t, 0.0, 20.0, 0.0).unwrap();
        assert_relative_eq!(p20 / p10, 1.0 / 16.0, max_relative = 1e-12);
        let tenth = radar_received_power(&radar(), &t, 1000.0 / 10.0, 10.0, 0.0).unwrap();
        assert_relative_eq!(tenth / p10, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn lidar_power_values() {
        let spec = LidarSpec::paper_2024();
        let mut t = TargetSpec::pedestrian();
        let p = lidar_received_power(&spec, &t, 0.0, 100.0).unwrap();
        assert_relative_eq!(p, 1.2340e-7, max_relative = 1e-4);
        let p2 = lidar_received_power(&spec, &t, 0.0, 200.0).unwrap();
        assert_relative_eq!(p2 / p, 1.0 / 16.0, max_relative = 1e-12);
        t.reflectance = 0.0;
        assert_eq!(lidar_received_power(&spec, &t, 0.0, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn non_positive_range_is_rejected() {
        let t = TargetSpec::pedestrian();
        assert!(radar_received_power(&radar(), &t, 0.0, 0.0, 0.0).is_err());
        assert!(lidar_received_power(&LidarSpec::paper_2024(), &t, 0.0, -1.0).is_err());
    }

    #[test]
    fn power_outside_profile_is_zero() {
        let mut spec = radar();
        spec.gain_profile = Some(
            GainProfile::new(vec![
                GainPoint {
                    psi_deg: -30.0,
                    gain_db: -2.0,
                },
                GainPoint {
                    psi_deg: 0.0,
                    gain_db: 0.0,
                },
                GainPoint {
                    psi_deg: 30.0,
                    gain_db: -2.0,
                },
            ])
            .unwrap(),
        );
        let t = TargetSpec::pedestrian();
        assert_eq!(
            radar_received_power(&spec, &t, 0.0, 10.0, 40f64.to_radians()).unwrap(),
            0.0
        );
        assert!(radar_received_power(&spec, &t, 0.0, 10.0, 15f64.to_radians()).unwrap() > 0.0);
    }

    #[test]
    fn gain_profile_interpolates() {
        let profile = GainProfile::new(vec![
            GainPoint {
                psi_deg: -40.0,
                gain_db: -4.0,
            },
            GainPoint {
                psi_deg: 0.0,
                gain_db: 0.0,
            },
            GainPoint {
                psi_deg: 40.0,
                gain_db: -3.0,
            },
        ])
        .unwrap();
        assert_relative_eq!(profile.relative_gain_db_at_deg(20.0).unwrap(), -1.5);
        assert_relative_eq!(profile.relative_gain_db_at_deg(-10.0).unwrap(), -1.0);
        assert_relative_eq!(profile.relative_gain_db_at_deg(40.0).unwrap(), -3.0);
        assert_eq!(profile.relative_gain_db_at_deg(41.0), None);
    }

    #[test]
    fn gain_profile_rejects_bad_tables() {
        let p = |psi_deg, gain_db| GainPoint { psi_deg, gain_db };
        assert!(GainProfile::new(vec![p(0.0, 0.0)]).is_err());
        assert!(GainProfile::new(vec![p(-10.0, 0.0), p(-10.0, 0.0), p(10.0, 0.0)]).is_err());
        assert!(GainProfile::new(vec![p(-10.0, 1.0), p(10.0, 1.0)]).is_err());
        assert!(GainProfile::new(vec![p(5.0, 0.0), p(10.0, 0.0)]).is_err());
        assert!(GainProfile::new(vec![p(-70.0, -9.0), p(0.0, 0.0)]).is_err());
    }

    #[test]
    fn gain_profile_csv() {
        let csv = "psi_deg,gain_db\n-65,-6\n0,0\n65,-6\n";
        let profile = GainProfile::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(profile.points().len(), 3);
        assert_relative_eq!(profile.relative_gain_db_at_deg(32.5).unwrap(), -3.0);
    }

    #[test]
    fn solver_finds_fourth_root() {
        let numerator = 2.5e-3;
        let threshold = 1e-9;
        let grid = SolverGrid::default();
        let r = solve_max_range(|g| numerator / g.powi(4), threshold, &grid)
            .unwrap()
            .unwrap();
        let exact = (numerator / threshold).powf(0.25);
        assert!(r <= exact && exact - r <= grid.tolerance_m, "{r} vs {exact}");
    }

    #[test]
    fn solver_binary_search_matches_scan() {
        let f = |g: f64| 0.3 / g.powi(4) * 10f64.powf(-2.0 * g / 1000.0);
        let scan = SolverGrid::default();
        let fast = SolverGrid {
            check_monotone: false,
            ..SolverGrid::default()
        };
        let a = solve_max_range(f, 1e-6, &scan).unwrap().unwrap();
        let b = solve_max_range(f, 1e-6, &fast).unwrap().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn solver_none_and_saturation() {
        let grid = SolverGrid::default();
        assert_eq!(solve_max_range(|_| 0.0, 1e-12, &grid).unwrap(), None);
        let top = solve_max_range(|_| 1.0, 1e-12, &grid).unwrap().unwrap();
        assert_relative_eq!(top, 300.0, epsilon = 1e-9);
    }

    #[test]
    fn solver_flags_non_monotone_power() {
        let grid = SolverGrid::default();
        let err = solve_max_range(|g| if g > 100.0 { 1.0 } else { 1.0 / g }, 0.5, &grid).unwrap_err();
        assert!(matches!(err, Error::NonMonotone { .. }));
    }

    #[test]
    fn solver_zero_tolerance_bisects_to_resolution() {
        let grid = SolverGrid {
            tolerance_m: 0.0,
            ..SolverGrid::default()
        };
        let r = solve_max_range(|g| 1.0 / g, 1.0 / 12.345_678_9, &grid)
            .unwrap()
            .unwrap();
        assert_relative_eq!(r, 12.345_678_9, max_relative = 1e-14);
    }

    #[test]
    fn solver_rejects_bad_grid() {
        let bad = SolverGrid {
            step_m: 0.0,
            ..SolverGrid::default()
        };
        assert!(solve_max_range(|_| 1.0, 1.0, &bad).is_err());
        let bad = SolverGrid {
            min_m: 0.0,
            ..SolverGrid::default()
        };
        assert!(solve_max_range(|_| 1.0, 1.0, &bad).is_err());
    }

    #[test]
    fn radar_clear_weather_prediction() {
        let sensor = SensorSpec::Radar(radar());
        let coeffs = TuningCoefficients {
            xi: 1.875,
            ..TuningCoefficients::BASELINE
        };
        let r = predict_range(
            &sensor,
            &TargetSpec::pedestrian(),
            &WeatherCondition::CLEAR,
            &AttenuationParams::default(),
            &coeffs,
            &SolverGrid::default(),
        )
        .unwrap()
        .unwrap();
        assert!((r - 51.1).abs() < 0.05, "{r}");
    }

    #[test]
    fn black_lidar_target_is_invisible() {
        let mut t = TargetSpec::pedestrian();
        t.reflectance = 0.0;
        let r = predict_range(
            &SensorSpec::Lidar(LidarSpec::paper_2024()),
            &t,
            &WeatherCondition::CLEAR,
            &AttenuationParams::default(),
            &TuningCoefficients::BASELINE,
            &SolverGrid::default(),
        )
        .unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn fov_outside_is_none() {
        let map = fov_map(
            &radar(),
            &TargetSpec::pedestrian(),
            &WeatherCondition::CLEAR,
            &AttenuationParams::default(),
            &TuningCoefficients::BASELINE,
            &[0.0, 70f64.to_radians(), -70f64.to_radians()],
            &SolverGrid::default(),
        )
        .unwrap();
        assert!(map[0].range_m.is_some());
        assert_eq!(map[1].range_m, None);
        assert_eq!(map[2].range_m, None);
    }

    #[test]
    fn spec_validation() {
        let mut r = radar();
        assert!(r.validate().is_ok());
        r.p_n_w = 0.0;
        assert!(r.validate().is_err());
        let mut l = LidarSpec::paper_2024();
        l.transmission = 1.2;
        assert!(l.validate().is_err());
        let mut t = TargetSpec::pedestrian();
        t.reflection_angle_rad = PI;
        assert!(t.validate().is_err());
    }
}
