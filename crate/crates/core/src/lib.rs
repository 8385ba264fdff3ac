//! Rain and fog degradation of radar and lidar pedestrian detection range.
//!
//! The crate chains three stages:
//!
//! * [`attenuation`]: rain, fog and atmospheric attenuation per sensor kind,
//!   each scaled by an empirical tuning coefficient,
//! * [`link_budget`]: received power for radar and lidar and the grid solver
//!   for the maximum detection range,
//! * [`calibration`]: fitting the tuning coefficients so predicted ranges
//!   match measured furthest-detection distances.
//!
//! [`detection`] turns recorded frame streams into the per-position
//! summaries that calibration consumes, and [`synthetic`] produces such
//! streams with known ground truth. [`config`] and [`sweep`] back the
//! `weather-filter` command-line tool.
//!
//! With every coefficient set to one the prediction is the purely physical
//! baseline; with calibrated coefficients it is the weather filter.
//!
//! ```
//! use weather_filter::{Config, SensorKind, WeatherCondition, predict_range};
//!
//! let cfg = Config::paper_2024();
//! let rain = WeatherCondition::rain(16.0).unwrap();
//! let range = predict_range(
//!     &cfg.sensor(SensorKind::Lidar),
//!     &cfg.target,
//!     &rain,
//!     &cfg.attenuation,
//!     &cfg.tuning.lidar,
//!     &cfg.solver,
//! )
//! .unwrap();
//! assert!(range.unwrap() > 44.0);
//! ```

pub mod attenuation;
pub mod calibration;
pub mod config;
pub mod detection;
mod error;
pub mod link_budget;
pub mod sweep;
pub mod synthetic;

pub use attenuation::{
    fog_attenuation, fog_density, rain_attenuation, total_attenuation, AttenuationParams, SensorKind,
    TuningCoefficients, WeatherCondition,
};
pub use calibration::{calibrate, objective, CalibrationProblem, CalibrationResult, Coefficient, Observation};
pub use config::Config;
pub use detection::{
    backscatter_compensate, count_in_box, filter_recurring, is_detected, max_detected_distance, summarize,
    DetectionInterval, Frame, MeasurementSummary, TargetBox,
};
pub use error::{Error, Result};
pub use link_budget::{
    fov_map, lidar_received_power, predict_range, radar_received_power, solve_max_range, LidarSpec, RadarSpec,
    SensorSpec, SolverGrid, TargetSpec,
};
