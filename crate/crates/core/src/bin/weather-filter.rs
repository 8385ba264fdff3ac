use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use weather_filter::calibration::{
    calibrate, calibration_grid, exclusion_preset, observations_from_summaries, CalibrationProblem, Coefficient,
    FitTarget,
};
use weather_filter::config::{Config, PAPER_PRESET};
use weather_filter::detection::{ingest, read_summaries, write_summaries, Frame, IngestOptions};
use weather_filter::link_budget::{fov_map, GainProfile};
use weather_filter::sweep::{fov_table, sweep, write_fov_csv, write_sweep_csv, SweepMode, SweepRequest, SweepVariable};
use weather_filter::synthetic::{
    generate_synthetic, read_frames_file, read_position_runs, write_campaign, SyntheticOptions, FREESPACE_FILE,
};
use weather_filter::{predict_range, Error, SensorKind, TuningCoefficients, WeatherCondition};

#[derive(Parser)]
#[command(
    name = "weather-filter",
    version,
    about = "Radar and lidar pedestrian detection range under rain and fog"
)]
struct Cli {
    /// JSON config file (overrides --preset).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long, global = true, default_value = PAPER_PRESET)]
    preset: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Weather {
    /// Rain rate, mm/h.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rain: f64,
    /// Fog visual range in metres, `inf` for no fog.
    #[arg(long, default_value_t = f64::INFINITY, allow_negative_numbers = true)]
    fog: f64,
}

impl Weather {
    fn condition(&self) -> Result<WeatherCondition, Error> {
        WeatherCondition::new(self.rain, self.fog)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print baseline and weather-filter maximum ranges.
    Predict {
        #[arg(long)]
        sensor: SensorKind,
        #[command(flatten)]
        weather: Weather,
        /// Radar azimuth, degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        psi: f64,
    },
    /// Range over a rain-rate or visual-range grid as CSV.
    Sweep {
        #[arg(long)]
        sensor: SensorKind,
        #[arg(long)]
        variable: SweepVariable,
        #[arg(long, allow_negative_numbers = true)]
        start: f64,
        #[arg(long, allow_negative_numbers = true)]
        stop: f64,
        #[arg(long, allow_negative_numbers = true)]
        step: f64,
        #[arg(long, default_value = "both")]
        mode: SweepMode,
        /// Condition held fixed for the other variable.
        #[command(flatten)]
        weather: Weather,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Radar range over azimuth as CSV.
    Fov {
        #[command(flatten)]
        weather: Weather,
        #[arg(long, default_value_t = -65.0, allow_negative_numbers = true)]
        psi_start: f64,
        #[arg(long, default_value_t = 65.0, allow_negative_numbers = true)]
        psi_stop: f64,
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        psi_step: f64,
        /// CSV with `psi_deg,gain_db` rows.
        #[arg(long)]
        gain_profile: Option<PathBuf>,
        #[arg(long, default_value = "both")]
        mode: SweepMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn frame CSVs into a summary CSV.
    Ingest {
        #[arg(long)]
        sensor: SensorKind,
        #[command(flatten)]
        weather: Weather,
        /// Directory of `frames_d<distance>.csv` files.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// `DISTANCE=PATH` frame file for one position (repeatable).
        #[arg(long = "frames", value_parser = parse_position_file)]
        frames: Vec<(f64, PathBuf)>,
        /// Free-space run for lidar backscatter compensation.
        #[arg(long)]
        freespace: Option<PathBuf>,
        #[arg(long, default_value_t = weather_filter::detection::DEFAULT_EPSILON_M)]
        epsilon: f64,
        #[arg(long, default_value_t = weather_filter::detection::DEFAULT_MARGIN_M)]
        margin: f64,
        /// Exclusion preset used to flag rows.
        #[arg(long)]
        exclude: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit tuning coefficients to summary CSVs.
    Calibrate {
        #[arg(long, required = true)]
        summary: Vec<PathBuf>,
        #[arg(long)]
        sensor: SensorKind,
        /// Comma-separated subset of eta_rain, eta_fog, xi.
        #[arg(long, value_delimiter = ',', required = true)]
        free: Vec<Coefficient>,
        #[arg(long)]
        exclude: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        starts: usize,
        /// Fit interval midpoints instead of the furthest detected position.
        #[arg(long)]
        midpoint: bool,
        /// Radar: fit xi on clear-weather data first.
        #[arg(long)]
        two_stage: bool,
        /// Write the config with fitted coefficients here.
        #[arg(long)]
        config_out: Option<PathBuf>,
        /// Write the residual table here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic measurement campaign.
    Generate {
        #[arg(long)]
        sensor: SensorKind,
        #[command(flatten)]
        weather: Weather,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        dropout: f64,
        /// Background points per frame.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 25)]
        cluster: usize,
        #[arg(long, default_value_t = 50)]
        frames: usize,
        /// Decide detectable positions with the baseline instead of the weather filter.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the active configuration as JSON.
    Config,
}

fn parse_position_file(s: &str) -> Result<(f64, PathBuf), String> {
    let (d, p) = s.split_once('=').ok_or("expected DISTANCE=PATH")?;
    let d: f64 = d.trim().parse().map_err(|e| format!("bad distance: {e}"))?;
    Ok((d, PathBuf::from(p)))
}

enum Failure {
    Error(Error),
    NotConverged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(Error::Io(e))
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    match path {
        Some(p) => {
            let f = fs::File::create(p).map_err(|source| Error::File {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn fmt_range(r: Option<f64>) -> String {
    r.map_or_else(|| "none".to_string(), |v| format!("{v:.2}"))
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    match &cli.config {
        Some(path) => Config::load(path),
        None => Config::preset(&cli.preset),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Predict { sensor, weather, psi } => {
            let condition = weather.condition()?;
            let wf = *config.tuning.get(sensor);
            let mut out = io::stdout().lock();
            for (label, coeffs) in [("baseline", TuningCoefficients::BASELINE), ("wf", wf)] {
                let range = if sensor == SensorKind::Radar && psi != 0.0 {
                    let map = fov_map(
                        &config.radar,
                        &config.target,
                        &condition,
                        &config.attenuation,
                        &coeffs,
                        &[psi.to_radians()],
                        &config.solver,
                    )?;
                    map[0].range_m
                } else {
                    predict_range(
                        &config.sensor(sensor),
                        &config.target,
                        &condition,
                        &config.attenuation,
                        &coeffs,
                        &config.solver,
                    )?
                };
                writeln!(out, "{label} {}", fmt_range(range))?;
            }
        }
        Command::Sweep {
            sensor,
            variable,
            start,
            stop,
            step,
            mode,
            weather,
            out,
        } => {
            let mut request = SweepRequest::new(sensor, variable, start, stop, step, mode);
            request.fixed_rain = weather.rain;
            request.fixed_fog = weather.fog;
            weather.condition()?;
            let rows = sweep(&config, &request)?;
            write_sweep_csv(output(out.as_deref())?, mode, &rows)?;
        }
        Command::Fov {
            weather,
            psi_start,
            psi_stop,
            psi_step,
            gain_profile,
            mode,
            out,
        } => {
            let condition = weather.condition()?;
            if !(psi_step > 0.0 && psi_start <= psi_stop) {
                return Err(Error::Invalid("fov needs psi-start <= psi-stop and psi-step > 0".into()).into());
            }
            if let Some(path) = gain_profile {
                let file = fs::File::open(&path).map_err(|source| Error::File { path, source })?;
                config.radar.gain_profile = Some(GainProfile::from_csv(file)?);
            }
            let n = ((psi_stop - psi_start) / psi_step + 1e-9).floor() as usize;
            let psi: Vec<f64> = (0..=n).map(|i| psi_start + i as f64 * psi_step).collect();
            let rows = fov_table(&config, &condition, &psi, mode)?;
            write_fov_csv(output(out.as_deref())?, mode, &rows)?;
        }
        Command::Ingest {
            sensor,
            weather,
            dir,
            frames,
            freespace,
            epsilon,
            margin,
            exclude,
            out,
        } => {
            let condition = weather.condition()?;
            let mut runs: Vec<(f64, Vec<Frame>)> = Vec::new();
            if let Some(dir) = &dir {
                runs.extend(read_position_runs(dir)?);
            }
            for (d, path) in &frames {
                runs.push((*d, read_frames_file(path)?));
            }
            if runs.is_empty() {
                return Err(Error::Invalid("give --dir or at least one --frames DISTANCE=PATH".into()).into());
            }
            let freespace_path = freespace.or_else(|| {
                dir.as_ref()
                    .map(|d| d.join(FREESPACE_FILE))
                    .filter(|p| p.exists() && sensor == SensorKind::Lidar)
            });
            let freespace_frames = match &freespace_path {
                Some(p) => Some(read_frames_file(p)?),
                None => None,
            };
            let opts = IngestOptions {
                epsilon_m: epsilon,
                margin_m: margin,
            };
            let mut summary = ingest(
                sensor,
                condition,
                &config.target,
                &runs,
                freespace_frames.as_deref(),
                &opts,
            )?;
            if let Some(name) = exclude {
                let ex = exclusion_preset(&name)?;
                for row in &mut summary.rows {
                    row.excluded = ex.iter().any(|e| e.matches(&condition, row.distance_m));
                }
            }
            write_summaries(output(out.as_deref())?, &[summary])?;
        }
        Command::Calibrate {
            summary,
            sensor,
            free,
            exclude,
            seed,
            starts,
            midpoint,
            two_stage,
            config_out,
            report,
        } => {
            let mut summaries = Vec::new();
            for path in &summary {
                let file = fs::File::open(path).map_err(|source| Error::File {
                    path: path.clone(),
                    source,
                })?;
                summaries.extend(read_summaries(file)?);
            }
            let exclusions = match &exclude {
                Some(name) => exclusion_preset(name)?,
                None => Vec::new(),
            };
            let spec = config.sensor(sensor);
            let observations = observations_from_summaries(&summaries, sensor, spec.min_points(), &exclusions);
            let mut problem = CalibrationProblem::new(
                spec,
                config.target.clone(),
                config.attenuation.clone(),
                observations,
                free,
            );
            problem.fixed = *config.tuning.get(sensor);
            problem.exclusions = exclusions;
            problem.grid = calibration_grid(&config.solver);
            problem.options.seed = seed;
            problem.options.starts = starts;
            problem.options.two_stage = two_stage;
            if midpoint {
                problem.options.target = FitTarget::Midpoint;
            }
            let result = calibrate(&problem)?;
            *config.tuning.get_mut(sensor) = result.coefficients;
            if let Some(path) = &config_out {
                config.save(path)?;
            }
            let mut w = output(report.as_deref())?;
            w.write_all(result.report(sensor).as_bytes())?;
            w.flush()?;
            if !result.converged {
                return Err(Failure::NotConverged);
            }
        }
        Command::Generate {
            sensor,
            weather,
            seed,
            dropout,
            noise,
            cluster,
            frames,
            baseline,
            out,
        } => {
            let condition = weather.condition()?;
            let coeffs = if baseline {
                TuningCoefficients::BASELINE
            } else {
                *config.tuning.get(sensor)
            };
            let opts = SyntheticOptions {
                seed,
                dropout,
                noise_rate: noise,
                cluster_points: cluster,
                frames,
                ..SyntheticOptions::default()
            };
            let campaign = generate_synthetic(
                &config.sensor(sensor),
                &config.target,
                &condition,
                &config.attenuation,
                &coeffs,
                &config.solver,
                &opts,
            )?;
            write_campaign(&out, &campaign)?;
        }
        Command::Config => {
            let mut out = io::stdout().lock();
            writeln!(out, "{}", config.to_json_string()?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged) => {
            eprintln!("error: calibration did not converge within the evaluation budget");
            ExitCode::from(4)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else if e.is_io() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
