//! Fitting the tuning coefficients to measured detection ranges.
//!
//! The objective is the sum of squared differences between predicted maximum
//! ranges and the furthest measured detection distances. Coefficients are
//! searched in log space with a bounded Nelder-Mead simplex from several
//! starting points; the best start wins, ties going to the lowest index.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attenuation::{fmt_visibility, AttenuationParams, SensorKind, TuningCoefficients, WeatherCondition};
use crate::detection::{max_detected_distance, DetectionInterval, MeasurementSummary};
use crate::error::{Error, Result};
use crate::link_budget::{predict_range, SensorSpec, SolverGrid, TargetSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coefficient {
    EtaRain,
    EtaFog,
    Xi,
}

impl Coefficient {
    pub const ALL: [Coefficient; 3] = [Coefficient::EtaRain, Coefficient::EtaFog, Coefficient::Xi];

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::EtaRain => "eta_rain",
            Coefficient::EtaFog => "eta_fog",
            Coefficient::Xi => "xi",
        }
    }

    pub fn get(self, c: &TuningCoefficients) -> f64 {
        match self {
            Coefficient::EtaRain => c.eta_rain,
            Coefficient::EtaFog => c.eta_fog,
            Coefficient::Xi => c.xi,
        }
    }

    pub fn set(self, c: &mut TuningCoefficients, value: f64) {
        match self {
            Coefficient::EtaRain => c.eta_rain = value,
            Coefficient::EtaFog => c.eta_fog = value,
            Coefficient::Xi => c.xi = value,
        }
    }
}

impl FromStr for Coefficient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "eta_rain" => Ok(Coefficient::EtaRain),
            "eta_fog" => Ok(Coefficient::EtaFog),
            "xi" => Ok(Coefficient::Xi),
            other => Err(Error::Invalid(format!(
                "unknown coefficient `{other}` (expected eta_rain, eta_fog or xi)"
            ))),
        }
    }
}

/// Which weather conditions an exclusion applies to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConditionMatch {
    Exact(WeatherCondition),
    /// Every condition with a non-zero rain rate.
    AnyRain,
}

/// A (condition, position) pair left out of the fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exclusion {
    pub condition: ConditionMatch,
    pub distance_m: f64,
}

impl Exclusion {
    pub fn matches(&self, condition: &WeatherCondition, distance_m: f64) -> bool {
        let cond_ok = match &self.condition {
            ConditionMatch::Exact(c) => c == condition,
            ConditionMatch::AnyRain => condition.rain_rate() > 0.0,
        };
        cond_ok && (distance_m - self.distance_m).abs() < 1e-9
    }
}

/// Named exclusion sets. `paper-rain-15m` drops the irregular-rainfall
/// outlier at 15 m from every rain condition.
pub fn exclusion_preset(name: &str) -> Result<Vec<Exclusion>> {
    match name {
        "paper-rain-15m" => Ok(vec![Exclusion {
            condition: ConditionMatch::AnyRain,
            distance_m: 15.0,
        }]),
        "none" => Ok(Vec::new()),
        other => Err(Error::Invalid(format!("unknown exclusion preset `{other}`"))),
    }
}

fn is_excluded(exclusions: &[Exclusion], condition: &WeatherCondition, distance_m: f64) -> bool {
    exclusions.iter().any(|e| e.matches(condition, distance_m))
}

/// A measured detection interval under one condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub condition: WeatherCondition,
    pub interval: DetectionInterval,
}

impl Observation {
    /// An observation whose furthest detected position is `distance_m`.
    pub fn at(condition: WeatherCondition, distance_m: f64) -> Self {
        Observation {
            condition,
            interval: DetectionInterval {
                lower: distance_m,
                upper: None,
            },
        }
    }
}

/// Which point of a measured interval the fit aims at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FitTarget {
    /// The furthest detected position.
    #[default]
    Lower,
    /// Halfway to the first undetected position (the lower bound when unbounded).
    Midpoint,
}

impl FitTarget {
    fn value(self, interval: &DetectionInterval) -> f64 {
        match self {
            FitTarget::Lower => interval.lower,
            FitTarget::Midpoint => interval.midpoint(),
        }
    }
}

/// Turns summaries into fit observations.
///
/// Exclusions mark summary rows before the detection interval is taken;
/// conditions without any detected position carry no range information and
/// are skipped.
pub fn observations_from_summaries(
    summaries: &[MeasurementSummary],
    sensor: SensorKind,
    min_points: u32,
    exclusions: &[Exclusion],
) -> Vec<Observation> {
    summaries
        .iter()
        .filter(|s| s.sensor == sensor)
        .filter_map(|s| {
            let mut s = s.clone();
            for row in &mut s.rows {
                if is_excluded(exclusions, &s.condition, row.distance_m) {
                    row.excluded = true;
                }
            }
            max_detected_distance(&s, min_points).map(|interval| Observation {
                condition: s.condition,
                interval,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Number of simplex starts; the first starts from all ones.
    pub starts: usize,
    pub seed: u64,
    /// Convergence when the objective spread over the simplex drops below this (m²).
    pub ftol: f64,
    /// Objective evaluations allowed per start.
    pub max_evals: usize,
    /// Initial simplex edge in log space.
    pub initial_step: f64,
    pub target: FitTarget,
    /// Radar only: fit `xi` on clear-weather observations first, then the
    /// remaining coefficients with `xi` held.
    pub two_stage: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            starts: 6,
            seed: 0,
            ftol: 1e-8,
            max_evals: 10_000,
            initial_step: 1.0,
            target: FitTarget::Lower,
            two_stage: false,
        }
    }
}

/// Solver grid used inside the fit: binary search with tight refinement so
/// that the residuals vary smoothly with the coefficients.
pub fn calibration_grid(base: &SolverGrid) -> SolverGrid {
    SolverGrid {
        tolerance_m: 1e-9,
        check_monotone: false,
        ..base.clone()
    }
}

#[derive(Clone, Debug)]
pub struct CalibrationProblem {
    pub sensor: SensorSpec,
    pub target: TargetSpec,
    pub params: AttenuationParams,
    pub observations: Vec<Observation>,
    pub free: Vec<Coefficient>,
    /// Values of the coefficients that are not free.
    pub fixed: TuningCoefficients,
    /// Per-coefficient (lo, hi), indexed like [`Coefficient::ALL`].
    pub bounds: [(f64, f64); 3],
    pub exclusions: Vec<Exclusion>,
    pub grid: SolverGrid,
    pub options: FitOptions,
}

impl CalibrationProblem {
    pub const DEFAULT_BOUNDS: (f64, f64) = (1e-4, 1e4);

    pub fn new(
        sensor: SensorSpec,
        target: TargetSpec,
        params: AttenuationParams,
        observations: Vec<Observation>,
        free: Vec<Coefficient>,
    ) -> Self {
        CalibrationProblem {
            sensor,
            target,
            params,
            observations,
            free,
            fixed: TuningCoefficients::BASELINE,
            bounds: [Self::DEFAULT_BOUNDS; 3],
            exclusions: Vec::new(),
            grid: calibration_grid(&SolverGrid::default()),
            options: FitOptions::default(),
        }
    }

    pub fn bounds_of(&self, c: Coefficient) -> (f64, f64) {
        self.bounds[c as usize]
    }

    fn active(&self) -> impl Iterator<Item = &Observation> {
        self.observations.iter().filter(move |o| {
            let d = self.options.target.value(&o.interval);
            !is_excluded(&self.exclusions, &o.condition, d)
                && !is_excluded(&self.exclusions, &o.condition, o.interval.lower)
        })
    }

    fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        self.target.validate()?;
        self.params.validate()?;
        self.grid.validate()?;
        self.fixed.validate()?;
        if self.free.is_empty() {
            return Err(Error::Calibration("no free coefficients".into()));
        }
        let mut seen = self.free.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.free.len() {
            return Err(Error::Calibration("duplicate free coefficient".into()));
        }
        if self.sensor.kind() == SensorKind::Lidar && self.free.contains(&Coefficient::Xi) {
            return Err(Error::Calibration("xi only applies to radar".into()));
        }
        for &c in &self.free {
            let (lo, hi) = self.bounds_of(c);
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::Calibration(format!(
                    "bounds of {} must satisfy 0 < lo < hi",
                    c.name()
                )));
            }
        }
        if self.options.starts == 0 || self.options.max_evals == 0 {
            return Err(Error::Calibration("need at least one start and one evaluation".into()));
        }
        if self.observations.is_empty() {
            return Err(Error::Calibration("no observations".into()));
        }
        let active = self.active().count();
        if active == 0 {
            return Err(Error::Calibration("all observations are excluded".into()));
        }
        if active < self.free.len() {
            return Err(Error::Calibration(format!(
                "{active} observation(s) for {} free coefficient(s)",
                self.free.len()
            )));
        }
        Ok(())
    }
}

/// Per-observation outcome at one coefficient set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    pub condition: WeatherCondition,
    pub measured_m: f64,
    pub predicted_m: Option<f64>,
    /// Predicted minus measured; a missing prediction counts as the top of the grid.
    pub residual_m: f64,
}

pub fn residuals(coeffs: &TuningCoefficients, problem: &CalibrationProblem) -> Result<Vec<Residual>> {
    let saturation = problem.grid.upper();
    problem
        .active()
        .map(|o| {
            let measured_m = problem.options.target.value(&o.interval);
            let predicted_m = predict_range(
                &problem.sensor,
                &problem.target,
                &o.condition,
                &problem.params,
                coeffs,
                &problem.grid,
            )?;
            Ok(Residual {
                condition: o.condition,
                measured_m,
                predicted_m,
                residual_m: predicted_m.unwrap_or(saturation) - measured_m,
            })
        })
        .collect()
}

/// Sum of squared range residuals over non-excluded observations, m².
pub fn objective(coeffs: &TuningCoefficients, problem: &CalibrationProblem) -> Result<f64> {
    let res = residuals(coeffs, problem)?;
    if res.is_empty() {
        return Err(Error::Calibration("no active observations".into()));
    }
    Ok(res.iter().map(|r| r.residual_m * r.residual_m).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationResult {
    pub coefficients: TuningCoefficients,
    pub objective: f64,
    pub residuals: Vec<Residual>,
    /// Objective evaluations spent by the winning start.
    pub iterations: usize,
    pub converged: bool,
    /// Objective of every start's initial point, in start order.
    pub start_objectives: Vec<f64>,
}

impl CalibrationResult {
    /// Plain-text residual table.
    pub fn report(&self, sensor: SensorKind) -> String {
        let mut out = String::new();
        let c = &self.coefficients;
        let _ = writeln!(out, "sensor: {sensor}");
        let _ = writeln!(out, "eta_rain = {:.6}", c.eta_rain);
        let _ = writeln!(out, "eta_fog  = {:.6}", c.eta_fog);
        if sensor == SensorKind::Radar {
            let _ = writeln!(out, "xi       = {:.6}", c.xi);
        }
        let _ = writeln!(
            out,
            "objective = {:.6e} m^2, evaluations = {}, converged = {}",
            self.objective, self.iterations, self.converged
        );
        let _ = writeln!(
            out,
            "{:>10} {:>10} {:>12} {:>12} {:>12}",
            "rain_mmh", "fog_vis_m", "measured_m", "predicted_m", "residual_m"
        );
        for r in &self.residuals {
            let pred = r.predicted_m.map_or_else(|| "none".to_string(), |p| format!("{p:.4}"));
            let _ = writeln!(
                out,
                "{:>10} {:>10} {:>12.4} {:>12} {:>12.4}",
                r.condition.rain_rate(),
                fmt_visibility(r.condition.fog_visual_range()),
                r.measured_m,
                pred,
                r.residual_m
            );
        }
        out
    }
}

struct Minimum {
    x: Vec<f64>,
    f: f64,
    evals: usize,
    converged: bool,
}

/// Nelder-Mead over a box, with restarts from the incumbent until a restart
/// stops improving.
fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    step: f64,
    ftol: f64,
    max_evals: usize,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        f(x)
    };

    let mut best_x = x0.to_vec();
    clamp(&mut best_x);
    let mut best_f = eval(&best_x, &mut evals)?;
    let mut converged = false;

    for _restart in 0..8 {
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_x.clone(), best_f)];
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] = if x[i] + step <= hi[i] { x[i] + step } else { x[i] - step };
            clamp(&mut x);
            let fx = eval(&x, &mut evals)?;
            simplex.push((x, fx));
        }
        let start_f = best_f;
        converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            if spread < ftol {
                converged = true;
                break;
            }
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if diameter < 1e-13 {
                break;
            }
            if evals >= max_evals {
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                let mut x: Vec<f64> = (0..n)
                    .map(|j| centroid[j] + t * (simplex[n].0[j] - centroid[j]))
                    .collect();
                clamp(&mut x);
                x
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals)?;
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals)?;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = along(-0.5);
                    let fc = eval(&xc, &mut evals)?;
                    (xc, fc)
                } else {
                    let xc = along(0.5);
                    let fc = eval(&xc, &mut evals)?;
                    (xc, fc)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for (x, fx) in simplex.iter_mut().skip(1) {
                        for j in 0..n {
                            x[j] = x_best[j] + 0.5 * (x[j] - x_best[j]);
                        }
                        *fx = eval(x, &mut evals)?;
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_f {
            best_x = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        if evals >= max_evals || start_f - best_f <= ftol {
            break;
        }
    }
    Ok(Minimum {
        x: best_x,
        f: best_f,
        evals,
        converged,
    })
}

fn fit_subset(problem: &CalibrationProblem, fixed: TuningCoefficients) -> Result<CalibrationResult> {
    let free = &problem.free;
    let lo: Vec<f64> = free.iter().map(|&c| problem.bounds_of(c).0.ln()).collect();
    let hi: Vec<f64> = free.iter().map(|&c| problem.bounds_of(c).1.ln()).collect();
    let to_coeffs = |x: &[f64]| {
        let mut c = fixed;
        for (k, &coef) in free.iter().enumerate() {
            coef.set(&mut c, x[k].exp());
        }
        c
    };

    let mut rng = ChaCha8Rng::seed_from_u64(problem.options.seed);
    let starts: Vec<Vec<f64>> = (0..problem.options.starts)
        .map(|s| {
            (0..free.len())
                .map(|k| {
                    if s == 0 {
                        0f64.clamp(lo[k], hi[k])
                    } else {
                        rng.gen_range(lo[k]..=hi[k])
                    }
                })
                .collect()
        })
        .collect();

    let mut best: Option<(Minimum, usize)> = None;
    let mut start_objectives = Vec::with_capacity(starts.len());
    for (idx, x0) in starts.iter().enumerate() {
        start_objectives.push(objective(&to_coeffs(x0), problem)?);
        let m = nelder_mead(
            |x| objective(&to_coeffs(x), problem),
            x0,
            &lo,
            &hi,
            problem.options.initial_step,
            problem.options.ftol,
            problem.options.max_evals,
        )?;
        let better = match &best {
            None => true,
            Some((b, _)) => m.f < b.f,
        };
        if better {
            best = Some((m, idx));
        }
    }
    let (m, _) = best.expect("at least one start");
    let coefficients = to_coeffs(&m.x);
    Ok(CalibrationResult {
        coefficients,
        objective: m.f,
        residuals: residuals(&coefficients, problem)?,
        iterations: m.evals,
        converged: m.converged,
        start_objectives,
    })
}

/// Fits the free coefficients of `problem`.
///
/// A result is returned even when the evaluation budget runs out; check
/// `converged`.
pub fn calibrate(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    problem.validate()?;
    let two_stage = problem.options.two_stage
        && problem.sensor.kind() == SensorKind::Radar
        && problem.free.contains(&Coefficient::Xi)
        && problem.free.len() > 1;
    if !two_stage {
        return fit_subset(problem, problem.fixed);
    }

    let mut stage1 = problem.clone();
    stage1.free = vec![Coefficient::Xi];
    stage1.observations.retain(|o| o.condition.is_clear());
    if stage1.active().count() == 0 {
        return Err(Error::Calibration(
            "two-stage fit needs clear-weather observations".into(),
        ));
    }
    let first = fit_subset(&stage1, problem.fixed)?;

    let mut stage2 = problem.clone();
    stage2.free.retain(|&c| c != Coefficient::Xi);
    let mut fixed = problem.fixed;
    fixed.xi = first.coefficients.xi;
    let mut second = fit_subset(&stage2, fixed)?;
    second.iterations += first.iterations;
    second.converged &= first.converged;
    Ok(second)
}
