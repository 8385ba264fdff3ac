//! Range against rain rate and against visual range, written as CSV to stdout.
//!
//!     cargo run --example rain_fog_sweep > sweep.csv

use std::io;

use weather_filter::config::Config;
use weather_filter::sweep::{sweep, write_sweep_csv, SweepMode, SweepRequest, SweepVariable};
use weather_filter::SensorKind;

fn main() -> weather_filter::Result<()> {
    let cfg = Config::paper_2024();
    for kind in [SensorKind::Radar, SensorKind::Lidar] {
        let rain = SweepRequest::new(kind, SweepVariable::Rain, 0.0, 100.0, 10.0, SweepMode::Both);
        eprintln!("# {kind}, rain 0..100 mm/h");
        write_sweep_csv(io::stdout(), rain.mode, &sweep(&cfg, &rain)?)?;

        let fog = SweepRequest::new(kind, SweepVariable::Fog, 10.0, 200.0, 10.0, SweepMode::Both);
        eprintln!("# {kind}, visual range 10..200 m");
        write_sweep_csv(io::stdout(), fog.mode, &sweep(&cfg, &fog)?)?;
    }
    Ok(())
}
