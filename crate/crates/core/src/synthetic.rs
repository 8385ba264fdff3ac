//! Synthetic measurement campaigns with known ground truth.
//!
//! A static cluster of points stands in for the pedestrian at each position.
//! Positions within the model's predicted range get the full cluster; farther
//! ones get `m - 1` points, just short of the detection threshold. Every
//! cluster point drops out independently per frame, and Poisson background
//! noise is scattered outside the target box.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::attenuation::{AttenuationParams, SensorKind, TuningCoefficients, WeatherCondition};
use crate::detection::{read_frames, write_frames, Frame, Point3, TargetBox, DEFAULT_MARGIN_M, PAPER_POSITIONS};
use crate::error::{Error, Result};
use crate::link_budget::{predict_range, SensorSpec, SolverGrid, TargetSpec};

/// Minimum spacing of planted points; larger than the default recurring tolerance.
const LATTICE_SPACING_M: f64 = 0.15;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticOptions {
    pub seed: u64,
    /// Per-point, per-frame dropout probability.
    pub dropout: f64,
    /// Mean number of background points per frame.
    pub noise_rate: f64,
    pub cluster_points: usize,
    pub frames: usize,
    pub frame_period_s: f64,
    pub positions: Vec<f64>,
    pub jitter_m: f64,
    pub margin_m: f64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            seed: 0,
            dropout: 0.0,
            noise_rate: 0.0,
            cluster_points: 25,
            frames: 50,
            frame_period_s: 0.1,
            positions: PAPER_POSITIONS.to_vec(),
            jitter_m: 0.005,
            margin_m: DEFAULT_MARGIN_M,
        }
    }
}

impl SyntheticOptions {
    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::domain("dropout", "in [0, 1)", self.dropout));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(Error::domain("noise rate", ">= 0", self.noise_rate));
        }
        if self.frames < 2 {
            return Err(Error::Invalid("need at least 2 frames".into()));
        }
        if self.positions.iter().any(|&d| d.is_nan() || d <= 0.0) {
            return Err(Error::Invalid("positions must be > 0".into()));
        }
        if !(0.0..0.02).contains(&self.jitter_m) {
            return Err(Error::domain("jitter", "in [0, 0.02) m", self.jitter_m));
        }
        Ok(())
    }
}

/// Ground truth of one position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub d_p: f64,
    pub planted: usize,
    /// `planted · (1 - p)²`: survival in two consecutive frames.
    pub expected_n_bar: f64,
    /// Realised mean of planted points present in a frame and its predecessor.
    pub n_bar_true: f64,
    pub detectable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCampaign {
    pub sensor: SensorKind,
    pub condition: WeatherCondition,
    pub predicted_range_m: Option<f64>,
    pub runs: Vec<(f64, Vec<Frame>)>,
    /// The same noise process without a target.
    pub freespace: Vec<Frame>,
    pub truth: Vec<TruthRow>,
}

impl SyntheticCampaign {
    /// Furthest position whose realised truth meets the threshold.
    pub fn max_detectable(&self) -> Option<f64> {
        self.truth
            .iter()
            .filter(|t| t.detectable)
            .map(|t| t.d_p)
            .fold(None, |a, d| Some(a.map_or(d, |a: f64| a.max(d))))
    }
}

/// Lattice sites inside the un-margined target box, spread over its height.
fn cluster_sites(target: &TargetSpec, distance: f64, count: usize) -> Result<Vec<Point3>> {
    let axis = |extent: f64| {
        let n = ((extent / LATTICE_SPACING_M).floor() as usize).max(1);
        let first = -(n as f64 - 1.0) / 2.0 * LATTICE_SPACING_M;
        (0..n)
            .map(move |i| first + i as f64 * LATTICE_SPACING_M)
            .collect::<Vec<_>>()
    };
    let xs = axis(target.length_m);
    let ys = axis(target.width_m);
    let zs: Vec<f64> = axis(target.height_m)
        .iter()
        .map(|z| z + target.height_m / 2.0)
        .collect();
    let mut sites = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &z in &zs {
        for &y in &ys {
            for &x in &xs {
                sites.push([distance + x, y, z]);
            }
        }
    }
    if count > sites.len() {
        return Err(Error::Invalid(format!(
            "target box holds at most {} planted points, {count} requested",
            sites.len()
        )));
    }
    let cap = sites.len();
    Ok((0..count).map(|j| sites[j * cap / count.max(1)]).collect())
}

fn noise_frame(rng: &mut ChaCha8Rng, poisson: Option<&Poisson<f64>>, bx: Option<&TargetBox>) -> Vec<Point3> {
    let Some(poisson) = poisson else {
        return Vec::new();
    };
    let n = poisson.sample(rng) as usize;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = [
            rng.gen_range(0.0..50.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(0.0..3.0),
        ];
        if bx.is_none_or(|b| !b.contains(&p)) {
            out.push(p);
        }
    }
    out
}

/// Generates a deterministic campaign for `sensor` under `condition`.
#[allow(clippy::too_many_arguments)]
pub fn generate_synthetic(
    sensor: &SensorSpec,
    target: &TargetSpec,
    condition: &WeatherCondition,
    params: &AttenuationParams,
    coeffs: &TuningCoefficients,
    grid: &SolverGrid,
    opts: &SyntheticOptions,
) -> Result<SyntheticCampaign> {
    opts.validate()?;
    let predicted = predict_range(sensor, target, condition, params, coeffs, grid)?;
    let m = sensor.min_points() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let poisson = if opts.noise_rate > 0.0 {
        Some(Poisson::new(opts.noise_rate).map_err(|e| Error::Invalid(e.to_string()))?)
    } else {
        None
    };
    let keep = 1.0 - opts.dropout;

    let mut runs = Vec::with_capacity(opts.positions.len());
    let mut truth = Vec::with_capacity(opts.positions.len());
    for &d in &opts.positions {
        let in_range = predicted.is_some_and(|r| d <= r);
        let planted = if in_range {
            opts.cluster_points
        } else {
            (m - 1).min(opts.cluster_points)
        };
        let sites = cluster_sites(target, d, planted)?;
        let bx = TargetBox::for_target(target, d, opts.margin_m)?;
        let mut prev_present = vec![false; planted];
        let mut recurring_total = 0usize;
        let mut frames = Vec::with_capacity(opts.frames);
        for i in 0..opts.frames {
            let mut points = Vec::with_capacity(planted);
            for (k, site) in sites.iter().enumerate() {
                let present = rng.gen_bool(keep);
                if present {
                    if i > 0 && prev_present[k] {
                        recurring_total += 1;
                    }
                    let j = opts.jitter_m;
                    let mut p = *site;
                    if j > 0.0 {
                        for c in &mut p {
                            *c += rng.gen_range(-j..=j);
                        }
                    }
                    points.push(p);
                }
                prev_present[k] = present;
            }
            points.extend(noise_frame(&mut rng, poisson.as_ref(), Some(&bx)));
            frames.push(Frame {
                index: i as u64,
                timestamp: i as f64 * opts.frame_period_s,
                points,
            });
        }
        let n_bar_true = recurring_total as f64 / (opts.frames - 1) as f64;
        truth.push(TruthRow {
            d_p: d,
            planted,
            expected_n_bar: planted as f64 * keep * keep,
            n_bar_true,
            detectable: n_bar_true >= m as f64,
        });
        runs.push((d, frames));
    }

    // free-space noise avoids every target box so compensation is exact
    let boxes: Vec<TargetBox> = opts
        .positions
        .iter()
        .map(|&d| TargetBox::for_target(target, d, opts.margin_m))
        .collect::<Result<_>>()?;
    let freespace = (0..opts.frames)
        .map(|i| {
            let mut pts = noise_frame(&mut rng, poisson.as_ref(), None);
            pts.retain(|p| !boxes.iter().any(|b| b.contains(p)));
            Frame {
                index: i as u64,
                timestamp: i as f64 * opts.frame_period_s,
                points: pts,
            }
        })
        .collect();

    Ok(SyntheticCampaign {
        sensor: sensor.kind(),
        condition: *condition,
        predicted_range_m: predicted,
        runs,
        freespace,
        truth,
    })
}

pub const TRUTH_FILE: &str = "truth.csv";
pub const FREESPACE_FILE: &str = "freespace.csv";

pub fn frames_file_name(distance_m: f64) -> String {
    format!("frames_d{distance_m}.csv")
}

fn parse_frames_file_name(name: &str) -> Option<f64> {
    name.strip_prefix("frames_d")?.strip_suffix(".csv")?.parse().ok()
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes one frame CSV per position, `freespace.csv` and the `truth.csv` sidecar.
pub fn write_campaign(dir: &Path, campaign: &SyntheticCampaign) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for (d, frames) in &campaign.runs {
        let path = dir.join(frames_file_name(*d));
        write_frames(create(&path)?, frames)?;
        written.push(path);
    }
    let path = dir.join(FREESPACE_FILE);
    write_frames(create(&path)?, &campaign.freespace)?;
    written.push(path);
    let path = dir.join(TRUTH_FILE);
    let mut wtr = csv::Writer::from_writer(create(&path)?);
    for row in &campaign.truth {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    written.push(path);
    Ok(written)
}

pub fn read_frames_file(path: &Path) -> Result<Vec<Frame>> {
    read_frames(open(path)?)
}

/// Loads every `frames_d<distance>.csv` in `dir`, sorted by distance.
pub fn read_position_runs(dir: &Path) -> Result<Vec<(f64, Vec<Frame>)>> {
    let entries = fs::read_dir(dir).map_err(|source| Error::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut runs = Vec::new();
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name();
        if let Some(d) = name.to_str().and_then(parse_frames_file_name) {
            runs.push((d, read_frames_file(&entry.path())?));
        }
    }
    if runs.is_empty() {
        return Err(Error::Invalid(format!(
            "no frames_d<distance>.csv files in {}",
            dir.display()
        )));
    }
    runs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(runs)
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRow>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link_budget::LidarSpec;

    fn campaign(opts: &SyntheticOptions) -> SyntheticCampaign {
        generate_synthetic(
            &SensorSpec::Lidar(LidarSpec::paper_2024()),
            &TargetSpec::pedestrian(),
            &WeatherCondition::CLEAR,
            &AttenuationParams::default(),
            &TuningCoefficients::BASELINE,
            &SolverGrid::default(),
            opts,
        )
        .unwrap()
    }

    #[test]
    fn lossless_without_dropout() {
        let c = campaign(&SyntheticOptions::default());
        for t in &c.truth {
            assert_eq!(t.planted, 25);
            assert_eq!(t.n_bar_true, 25.0);
        }
        for (_, frames) in &c.runs {
            assert!(frames.iter().all(|f| f.points.len() == 25));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let opts = SyntheticOptions {
            seed: 7,
            dropout: 0.3,
            noise_rate: 20.0,
            ..SyntheticOptions::default()
        };
        assert_eq!(campaign(&opts), campaign(&opts));
        let other = SyntheticOptions {
            seed: 8,
            ..opts.clone()
        };
        assert_ne!(campaign(&opts), campaign(&other));
    }

    #[test]
    fn sites_are_separated_and_inside() {
        let t = TargetSpec::pedestrian();
        let sites = cluster_sites(&t, 9.0, 25).unwrap();
        let bx = TargetBox::for_target(&t, 9.0, 0.0).unwrap();
        assert!(sites.iter().all(|p| bx.contains(p)));
        for (i, a) in sites.iter().enumerate() {
            for b in &sites[i + 1..] {
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
                assert!(d >= LATTICE_SPACING_M - 1e-12);
            }
        }
        assert!(cluster_sites(&t, 9.0, 1000).is_err());
    }

    #[test]
    fn options_validation() {
        let bad = SyntheticOptions {
            dropout: 1.0,
            ..SyntheticOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = SyntheticOptions {
            frames: 1,
            ..SyntheticOptions::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn file_names_round_trip() {
        assert_eq!(frames_file_name(9.0), "frames_d9.csv");
        assert_eq!(parse_frames_file_name("frames_d9.csv"), Some(9.0));
        assert_eq!(parse_frames_file_name("frames_d12.5.csv"), Some(12.5));
        assert_eq!(parse_frames_file_name("truth.csv"), None);
    }
}
