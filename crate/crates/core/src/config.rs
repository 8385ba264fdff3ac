//! JSON configuration and the shipped `paper-2024` preset.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attenuation::{AttenuationParams, SensorKind, TuningCoefficients};
use crate::error::{Error, Result};
use crate::link_budget::{LidarSpec, RadarSpec, SensorSpec, SolverGrid, TargetSpec};

pub const PAPER_PRESET: &str = "paper-2024";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tuning {
    pub radar: TuningCoefficients,
    pub lidar: TuningCoefficients,
}

impl Tuning {
    pub fn get(&self, kind: SensorKind) -> &TuningCoefficients {
        match kind {
            SensorKind::Radar => &self.radar,
            SensorKind::Lidar => &self.lidar,
        }
    }

    pub fn get_mut(&mut self, kind: SensorKind) -> &mut TuningCoefficients {
        match kind {
            SensorKind::Radar => &mut self.radar,
            SensorKind::Lidar => &mut self.lidar,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub radar: RadarSpec,
    pub lidar: LidarSpec,
    pub target: TargetSpec,
    pub attenuation: AttenuationParams,
    pub tuning: Tuning,
    pub solver: SolverGrid,
}

impl Config {
    /// Sensors, pedestrian and calibrated coefficients of the reference campaign.
    pub fn paper_2024() -> Self {
        Config {
            radar: RadarSpec::paper_2024(),
            lidar: LidarSpec::paper_2024(),
            target: TargetSpec::pedestrian(),
            attenuation: AttenuationParams::default(),
            tuning: Tuning {
                radar: TuningCoefficients {
                    eta_rain: 1.163,
                    eta_fog: 0.0199,
                    xi: 1.875,
                },
                lidar: TuningCoefficients {
                    eta_rain: 1.163,
                    eta_fog: 0.199,
                    xi: 1.0,
                },
            },
            solver: SolverGrid::default(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            PAPER_PRESET => Ok(Self::paper_2024()),
            other => Err(Error::Config {
                path: "<preset>".into(),
                message: format!("unknown preset `{other}` (available: {PAPER_PRESET})"),
            }),
        }
    }

    pub fn sensor(&self, kind: SensorKind) -> SensorSpec {
        match kind {
            SensorKind::Radar => SensorSpec::Radar(self.radar.clone()),
            SensorKind::Lidar => SensorSpec::Lidar(self.lidar.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let at = |path: &str| {
            let path = path.to_string();
            move |e: Error| Error::Config {
                path: path.clone(),
                message: e.to_string(),
            }
        };
        self.radar.validate().map_err(at("radar"))?;
        self.lidar.validate().map_err(at("lidar"))?;
        self.target.validate().map_err(at("target"))?;
        self.attenuation.validate().map_err(at("attenuation"))?;
        self.tuning.radar.validate().map_err(at("tuning.radar"))?;
        self.tuning.lidar.validate().map_err(at("tuning.lidar"))?;
        self.solver.validate().map_err(at("solver"))?;
        Ok(())
    }

    /// Parses and validates. Unknown keys are rejected with their path.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let config: Config = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                path,
                message: e.into_inner().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json_string()?;
        text.push('\n');
        fs::write(path, text).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl Default for Config {
    fn default() -> Self {
        Self::paper_2024()
    }
}
