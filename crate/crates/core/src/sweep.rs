//! Range-versus-weather and range-versus-azimuth tables.

use std::io::Write;
use std::str::FromStr;

use crate::attenuation::{SensorKind, TuningCoefficients, WeatherCondition};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::link_budget::{fov_map, predict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVariable {
    Rain,
    Fog,
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rain" => Ok(SweepVariable::Rain),
            "fog" => Ok(SweepVariable::Fog),
            other => Err(Error::Invalid(format!("unknown sweep variable `{other}`"))),
        }
    }
}

/// Which models a table reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    Baseline,
    Wf,
    Both,
}

impl SweepMode {
    pub fn baseline(self) -> bool {
        matches!(self, SweepMode::Baseline | SweepMode::Both)
    }

    pub fn wf(self) -> bool {
        matches!(self, SweepMode::Wf | SweepMode::Both)
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(SweepMode::Baseline),
            "wf" => Ok(SweepMode::Wf),
            "both" => Ok(SweepMode::Both),
            other => Err(Error::Invalid(format!("unknown sweep mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRequest {
    pub sensor: SensorKind,
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub mode: SweepMode,
    /// Rain rate held during a fog sweep.
    pub fixed_rain: f64,
    /// Visual range held during a rain sweep.
    pub fixed_fog: f64,
}

impl SweepRequest {
    pub fn new(sensor: SensorKind, variable: SweepVariable, start: f64, stop: f64, step: f64, mode: SweepMode) -> Self {
        SweepRequest {
            sensor,
            variable,
            start,
            stop,
            step,
            mode,
            fixed_rain: 0.0,
            fixed_fog: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::domain("sweep step", "> 0", self.step));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(Error::Invalid(format!(
                "sweep needs start < stop (got {} .. {})",
                self.start, self.stop
            )));
        }
        match self.variable {
            SweepVariable::Rain if self.start < 0.0 => Err(Error::domain("rain sweep start", ">= 0", self.start)),
            SweepVariable::Fog if self.start <= 0.0 => Err(Error::domain("fog sweep start", "> 0", self.start)),
            _ => Ok(()),
        }
    }

    /// Grid values `start + i * step` up to `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn condition(&self, x: f64) -> Result<WeatherCondition> {
        match self.variable {
            SweepVariable::Rain => WeatherCondition::new(x, self.fixed_fog),
            SweepVariable::Fog => WeatherCondition::new(self.fixed_rain, x),
        }
    }
}

/// One table row. Each range is `None` when that model was not requested,
/// `Some(None)` when nothing is detectable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub gamma: f64,
    pub baseline: Option<Option<f64>>,
    pub wf: Option<Option<f64>>,
}

fn check_order(
    rows: &[SweepRow],
    variable: SweepVariable,
    pick: impl Fn(&SweepRow) -> Option<Option<f64>>,
) -> Result<()> {
    for w in rows.windows(2) {
        let (Some(a), Some(b)) = (pick(&w[0]), pick(&w[1])) else {
            continue;
        };
        let (a, b) = (a.unwrap_or(0.0), b.unwrap_or(0.0));
        let ok = match variable {
            SweepVariable::Rain => b <= a,
            SweepVariable::Fog => b >= a,
        };
        if !ok {
            return Err(Error::SweepMonotonicity { at: w[1].x });
        }
    }
    Ok(())
}

/// Computes the table and verifies that ranges shrink with rain and grow
/// with visual range.
pub fn sweep(config: &Config, request: &SweepRequest) -> Result<Vec<SweepRow>> {
    request.validate()?;
    let sensor = config.sensor(request.sensor);
    let wf_coeffs = *config.tuning.get(request.sensor);
    let rows = request
        .values()
        .into_iter()
        .map(|x| {
            let condition = request.condition(x)?;
            let run = |coeffs: &TuningCoefficients| {
                predict(
                    &sensor,
                    &config.target,
                    &condition,
                    &config.attenuation,
                    coeffs,
                    &config.solver,
                )
            };
            let baseline = if request.mode.baseline() {
                Some(run(&TuningCoefficients::BASELINE)?)
            } else {
                None
            };
            let wf = if request.mode.wf() {
                Some(run(&wf_coeffs)?)
            } else {
                None
            };
            let gamma = baseline.or(wf).map(|p| p.attenuation.total()).unwrap_or(f64::NAN);
            Ok(SweepRow {
                x,
                gamma,
                baseline: baseline.map(|p| p.range_m),
                wf: wf.map(|p| p.range_m),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    check_order(&rows, request.variable, |r| r.baseline)?;
    check_order(&rows, request.variable, |r| r.wf)?;
    Ok(rows)
}

pub fn fmt_range(r: Option<f64>) -> String {
    match r {
        Some(v) => format!("{v:.4}"),
        None => "none".to_string(),
    }
}

/// Writes `x,gamma,range_baseline,range_wf`; a column is omitted when its
/// model was not requested.
pub fn write_sweep_csv<W: Write>(writer: W, mode: SweepMode, rows: &[SweepRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["x", "gamma"];
    if mode.baseline() {
        header.push("range_baseline");
    }
    if mode.wf() {
        header.push("range_wf");
    }
    wtr.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.x.to_string(), format!("{:.6}", r.gamma)];
        if let Some(b) = r.baseline {
            rec.push(fmt_range(b));
        }
        if let Some(w) = r.wf {
            rec.push(fmt_range(w));
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FovRow {
    pub psi_deg: f64,
    pub baseline: Option<Option<f64>>,
    pub wf: Option<Option<f64>>,
}

/// Radar range over azimuth for one condition; angles in degrees.
pub fn fov_table(
    config: &Config,
    condition: &WeatherCondition,
    psi_deg: &[f64],
    mode: SweepMode,
) -> Result<Vec<FovRow>> {
    let psi: Vec<f64> = psi_deg.iter().map(|d| d.to_radians()).collect();
    let run = |coeffs: &TuningCoefficients| {
        fov_map(
            &config.radar,
            &config.target,
            condition,
            &config.attenuation,
            coeffs,
            &psi,
            &config.solver,
        )
    };
    let baseline = if mode.baseline() {
        Some(run(&TuningCoefficients::BASELINE)?)
    } else {
        None
    };
    let wf = if mode.wf() {
        Some(run(&config.tuning.radar)?)
    } else {
        None
    };
    Ok(psi_deg
        .iter()
        .enumerate()
        .map(|(i, &d)| FovRow {
            psi_deg: d,
            baseline: baseline.as_ref().map(|m| m[i].range_m),
            wf: wf.as_ref().map(|m| m[i].range_m),
        })
        .collect())
}

pub fn write_fov_csv<W: Write>(writer: W, mode: SweepMode, rows: &[FovRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["psi_deg"];
    if mode.baseline() {
        header.push("range_baseline");
    }
    if mode.wf() {
        header.push("range_wf");
    }
    wtr.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.psi_deg.to_string()];
        if let Some(b) = r.baseline {
            rec.push(fmt_range(b));
        }
        if let Some(w) = r.wf {
            rec.push(fmt_range(w));
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
