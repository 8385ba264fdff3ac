//! Frame ingestion and the recurring-point detection criterion.
//!
//! A target counts as detected at a position when the mean number of
//! recurring points inside its box, over all frames, reaches the sensor's
//! minimum point count.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::attenuation::{fmt_visibility, SensorKind, WeatherCondition};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::link_budget::TargetSpec;

/// Measurement positions of the reference campaign, metres from the sensor.
pub const PAPER_POSITIONS: [f64; 8] = [3.0, 9.0, 15.0, 21.0, 27.0, 33.0, 39.0, 44.0];

pub const DEFAULT_EPSILON_M: f64 = 0.1;
pub const DEFAULT_MARGIN_M: f64 = 0.2;

pub type Point3 = [f64; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub index: u64,
    pub timestamp: f64,
    pub points: Vec<Point3>,
}

#[derive(Debug, Deserialize, Serialize)]
struct FrameRow {
    frame: u64,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// Reads a `frame,t,x,y,z` stream.
///
/// Rows must be grouped by strictly increasing frame index. Indices skipped
/// between two present frames become empty frames.
pub fn read_frames<R: Read>(reader: R) -> Result<Vec<Frame>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut frames: Vec<Frame> = Vec::new();
    for row in rdr.deserialize() {
        let row: FrameRow = row?;
        match frames.last_mut() {
            Some(last) if last.index == row.frame => {
                last.points.push([row.x, row.y, row.z]);
            }
            Some(last) if row.frame < last.index => {
                return Err(Error::Invalid(format!(
                    "frame {} appears after frame {}",
                    row.frame, last.index
                )));
            }
            Some(last) if row.t < last.timestamp => {
                return Err(Error::Invalid(format!("timestamp decreases at frame {}", row.frame)));
            }
            Some(last) => {
                let (from, ts) = (last.index, last.timestamp);
                for gap in from + 1..row.frame {
                    frames.push(Frame {
                        index: gap,
                        timestamp: ts,
                        points: Vec::new(),
                    });
                }
                frames.push(Frame {
                    index: row.frame,
                    timestamp: row.t,
                    points: vec![[row.x, row.y, row.z]],
                });
            }
            None => frames.push(Frame {
                index: row.frame,
                timestamp: row.t,
                points: vec![[row.x, row.y, row.z]],
            }),
        }
    }
    Ok(frames)
}

pub fn write_frames<W: Write>(writer: W, frames: &[Frame]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for f in frames {
        for p in &f.points {
            wtr.serialize(FrameRow {
                frame: f.index,
                t: f.timestamp,
                x: p[0],
                y: p[1],
                z: p[2],
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

type Cell = (i64, i64, i64);

fn cell_of(p: &Point3, size: f64) -> Cell {
    (
        (p[0] / size).floor() as i64,
        (p[1] / size).floor() as i64,
        (p[2] / size).floor() as i64,
    )
}

/// Uniform hash grid over one frame's points for radius queries.
struct PointIndex<'a> {
    points: &'a [Point3],
    cells: HashMap<Cell, Vec<usize>>,
    size: f64,
}

impl<'a> PointIndex<'a> {
    fn new(points: &'a [Point3], size: f64) -> Self {
        let mut cells: HashMap<Cell, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(cell_of(p, size)).or_default().push(i);
        }
        PointIndex { points, cells, size }
    }

    fn any_within(&self, q: &Point3, radius: f64) -> bool {
        let (cx, cy, cz) = cell_of(q, self.size);
        let r2 = radius * radius;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(idx) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &i in idx {
                        let p = &self.points[i];
                        let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                        if d2 <= r2 {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

/// Keeps the points of frame `i` that have a neighbour within `epsilon` in
/// frame `i - 1`. The first frame has no predecessor and is dropped.
pub fn filter_recurring(frames: &[Frame], epsilon: f64) -> Result<Vec<Frame>> {
    ensure_positive("recurring tolerance", epsilon)?;
    if frames.len() < 2 {
        return Err(Error::Invalid(format!(
            "recurring filter needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    Ok(frames
        .windows(2)
        .map(|w| {
            let index = PointIndex::new(&w[0].points, epsilon);
            Frame {
                index: w[1].index,
                timestamp: w[1].timestamp,
                points: w[1]
                    .points
                    .iter()
                    .filter(|p| index.any_within(p, epsilon))
                    .copied()
                    .collect(),
            }
        })
        .collect())
}

/// Axis-aligned analysis volume around a target standing on boresight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetBox {
    pub distance_m: f64,
    pub width_m: f64,
    pub length_m: f64,
    pub height_m: f64,
    pub margin_m: f64,
}

impl TargetBox {
    pub fn new(distance_m: f64, width_m: f64, length_m: f64, height_m: f64, margin_m: f64) -> Result<Self> {
        ensure_positive("box distance", distance_m)?;
        ensure_positive("box width", width_m)?;
        ensure_positive("box length", length_m)?;
        ensure_positive("box height", height_m)?;
        ensure_non_negative("box margin", margin_m)?;
        Ok(TargetBox {
            distance_m,
            width_m,
            length_m,
            height_m,
            margin_m,
        })
    }

    pub fn for_target(target: &TargetSpec, distance_m: f64, margin_m: f64) -> Result<Self> {
        Self::new(distance_m, target.width_m, target.length_m, target.height_m, margin_m)
    }

    pub fn contains(&self, p: &Point3) -> bool {
        let half_x = self.length_m / 2.0 + self.margin_m;
        let half_y = self.width_m / 2.0 + self.margin_m;
        (p[0] - self.distance_m).abs() <= half_x
            && p[1].abs() <= half_y
            && p[2] >= 0.0
            && p[2] <= self.height_m + self.margin_m
    }
}

/// Per-frame number of points inside `bx`.
pub fn count_in_box(frames: &[Frame], bx: &TargetBox) -> Vec<usize> {
    frames
        .iter()
        .map(|f| f.points.iter().filter(|p| bx.contains(p)).count())
        .collect()
}

/// Mean and population standard deviation of per-frame counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountStats {
    pub n_bar: f64,
    pub sigma: f64,
}

pub fn summarize(counts: &[f64]) -> Result<CountStats> {
    if counts.is_empty() {
        return Err(Error::Invalid("cannot summarize an empty count list".into()));
    }
    let n = counts.len() as f64;
    let n_bar = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - n_bar).powi(2)).sum::<f64>() / n;
    Ok(CountStats {
        n_bar,
        sigma: var.sqrt(),
    })
}

pub fn summarize_counts(counts: &[usize]) -> Result<CountStats> {
    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    summarize(&as_f64)
}

/// Removes the free-space (no target) count from the target count, clamped at zero.
pub fn backscatter_compensate(n_bar_target: f64, n_bar_freespace: f64) -> f64 {
    (n_bar_target - n_bar_freespace).max(0.0)
}

pub fn is_detected(n_bar: f64, min_points: u32) -> bool {
    n_bar >= f64::from(min_points)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryRow {
    pub distance_m: f64,
    pub n_bar: f64,
    pub sigma: f64,
    pub excluded: bool,
}

/// Per-position statistics of one sensor under one weather condition.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSummary {
    pub sensor: SensorKind,
    pub condition: WeatherCondition,
    pub rows: Vec<SummaryRow>,
}

impl MeasurementSummary {
    pub fn new(sensor: SensorKind, condition: WeatherCondition, mut rows: Vec<SummaryRow>) -> Result<Self> {
        for r in &rows {
            ensure_positive("d_p", r.distance_m)?;
            ensure_non_negative("n_bar", r.n_bar)?;
            ensure_non_negative("sigma", r.sigma)?;
        }
        rows.sort_by(|a, b| a.distance_m.total_cmp(&b.distance_m));
        if rows.windows(2).any(|w| w[0].distance_m == w[1].distance_m) {
            return Err(Error::Invalid(format!(
                "duplicate d_p in {sensor} summary for {condition}"
            )));
        }
        Ok(MeasurementSummary {
            sensor,
            condition,
            rows,
        })
    }
}

/// Furthest detected position and the next measured position beyond it.
///
/// `upper == None` means the target was still detected at the last position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionInterval {
    pub lower: f64,
    pub upper: Option<f64>,
}

impl DetectionInterval {
    pub fn midpoint(&self) -> f64 {
        match self.upper {
            Some(u) => 0.5 * (self.lower + u),
            None => self.lower,
        }
    }
}

/// `None` when no non-excluded position meets the threshold.
pub fn max_detected_distance(summary: &MeasurementSummary, min_points: u32) -> Option<DetectionInterval> {
    let rows: Vec<&SummaryRow> = summary.rows.iter().filter(|r| !r.excluded).collect();
    let last = rows.iter().rposition(|r| is_detected(r.n_bar, min_points))?;
    Some(DetectionInterval {
        lower: rows[last].distance_m,
        upper: rows.get(last + 1).map(|r| r.distance_m),
    })
}

#[derive(Debug, Deserialize, Serialize)]
struct SummaryRecord {
    sensor: SensorKind,
    rain_mmh: f64,
    #[serde(with = "visibility")]
    fog_vis_m: f64,
    d_p: f64,
    n_bar: f64,
    sigma: f64,
    excluded: bool,
}

mod visibility {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt_visibility(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let raw = String::deserialize(d)?;
        raw.trim().parse::<f64>().map_err(serde::de::Error::custom)
    }
}

/// Reads the summary CSV, grouping rows by sensor and condition in file order.
pub fn read_summaries<R: Read>(reader: R) -> Result<Vec<MeasurementSummary>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut groups: Vec<(SensorKind, WeatherCondition, Vec<SummaryRow>)> = Vec::new();
    for rec in rdr.deserialize() {
        let rec: SummaryRecord = rec?;
        let condition = WeatherCondition::new(rec.rain_mmh, rec.fog_vis_m)?;
        let row = SummaryRow {
            distance_m: rec.d_p,
            n_bar: rec.n_bar,
            sigma: rec.sigma,
            excluded: rec.excluded,
        };
        match groups.iter_mut().find(|(s, c, _)| *s == rec.sensor && *c == condition) {
            Some((_, _, rows)) => rows.push(row),
            None => groups.push((rec.sensor, condition, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|(s, c, rows)| MeasurementSummary::new(s, c, rows))
        .collect()
}

pub fn write_summaries<W: Write>(writer: W, summaries: &[MeasurementSummary]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in summaries {
        for r in &s.rows {
            wtr.serialize(SummaryRecord {
                sensor: s.sensor,
                rain_mmh: s.condition.rain_rate(),
                fog_vis_m: s.condition.fog_visual_range(),
                d_p: r.distance_m,
                n_bar: r.n_bar,
                sigma: r.sigma,
                excluded: r.excluded,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Settings of the frames-to-summary pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IngestOptions {
    pub epsilon_m: f64,
    pub margin_m: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            epsilon_m: DEFAULT_EPSILON_M,
            margin_m: DEFAULT_MARGIN_M,
        }
    }
}

/// Recurring filter, box count and statistics for one measured position.
pub fn position_stats(
    frames: &[Frame],
    target: &TargetSpec,
    distance_m: f64,
    opts: &IngestOptions,
) -> Result<CountStats> {
    let recurring = filter_recurring(frames, opts.epsilon_m)?;
    let bx = TargetBox::for_target(target, distance_m, opts.margin_m)?;
    summarize_counts(&count_in_box(&recurring, &bx))
}

/// Builds a summary from one frame stream per position.
///
/// For lidar, `freespace` (a run without the target under the same weather)
/// is counted in the same box and subtracted from each position's mean.
pub fn ingest(
    sensor: SensorKind,
    condition: WeatherCondition,
    target: &TargetSpec,
    runs: &[(f64, Vec<Frame>)],
    freespace: Option<&[Frame]>,
    opts: &IngestOptions,
) -> Result<MeasurementSummary> {
    let freespace = match sensor {
        SensorKind::Lidar => freespace,
        SensorKind::Radar => None,
    };
    let rows = runs
        .iter()
        .map(|(d, frames)| {
            let stats = position_stats(frames, target, *d, opts)?;
            let n_bar = match freespace {
                Some(fs) => backscatter_compensate(stats.n_bar, position_stats(fs, target, *d, opts)?.n_bar),
                None => stats.n_bar,
            };
            Ok(SummaryRow {
                distance_m: *d,
                n_bar,
                sigma: stats.sigma,
                excluded: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementSummary::new(sensor, condition, rows)
}
