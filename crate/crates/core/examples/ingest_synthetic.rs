//! Generates a noisy lidar campaign, runs it through the point-cloud
//! pipeline and compares the measured detection limit with the planted one.
//!
//!     cargo run --example ingest_synthetic -- 16

use weather_filter::config::Config;
use weather_filter::detection::{ingest, max_detected_distance, IngestOptions};
use weather_filter::link_budget::SensorSpec;
use weather_filter::synthetic::{generate_synthetic, SyntheticOptions};
use weather_filter::{SensorKind, WeatherCondition};

fn main() -> weather_filter::Result<()> {
    let rain = std::env::args().nth(1).map_or(16.0, |a| a.parse().expect("rain rate"));
    let condition = WeatherCondition::rain(rain)?;
    let mut cfg = Config::paper_2024();
    // weaker receiver so the limit lands inside the 3..44 m positions
    cfg.lidar.p_n_w = 1e-5;
    let sensor = SensorSpec::Lidar(cfg.lidar.clone());

    let opts = SyntheticOptions {
        seed: 3,
        dropout: 0.2,
        noise_rate: 40.0,
        ..SyntheticOptions::default()
    };
    let campaign = generate_synthetic(
        &sensor,
        &cfg.target,
        &condition,
        &cfg.attenuation,
        &cfg.tuning.lidar,
        &cfg.solver,
        &opts,
    )?;
    println!("predicted range {:.2} m", campaign.predicted_range_m.unwrap_or(0.0));

    let summary = ingest(
        SensorKind::Lidar,
        condition,
        &cfg.target,
        &campaign.runs,
        Some(&campaign.freespace),
        &IngestOptions::default(),
    )?;
    println!("{:>5} {:>8} {:>8} {:>8}", "d_p", "n_bar", "sigma", "truth");
    for (row, truth) in summary.rows.iter().zip(&campaign.truth) {
        println!(
            "{:>5} {:>8.2} {:>8.2} {:>8.2}",
            row.distance_m, row.n_bar, row.sigma, truth.n_bar_true
        );
    }

    let interval = max_detected_distance(&summary, cfg.lidar.min_points);
    println!("measured: {interval:?}");
    println!("planted:  {:?}", campaign.max_detectable());
    Ok(())
}
