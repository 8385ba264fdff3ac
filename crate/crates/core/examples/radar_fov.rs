//! Radar range across the field of view with a measured antenna pattern.
//!
//!     cargo run --example radar_fov

use weather_filter::config::Config;
use weather_filter::link_budget::GainProfile;
use weather_filter::sweep::{fov_table, SweepMode};
use weather_filter::WeatherCondition;

// Relative gain in dB; a broad main lobe falling to -6 dB at the edges.
const PATTERN: &str = "psi_deg,gain_db
-65,-6
-45,-3.5
-20,-1
0,0
20,-1
45,-3.5
65,-6
";

fn main() -> weather_filter::Result<()> {
    let mut cfg = Config::paper_2024();
    cfg.radar.gain_profile = Some(GainProfile::from_csv(PATTERN.as_bytes())?);
    let psi: Vec<f64> = (-13..=13).map(|i| i as f64 * 5.0).collect();

    for condition in [WeatherCondition::CLEAR, WeatherCondition::rain(50.0)?] {
        println!("rain {} mm/h", condition.rain_rate());
        for row in fov_table(&cfg, &condition, &psi, SweepMode::Wf)? {
            let r = row.wf.flatten().unwrap_or(0.0);
            let bar = "#".repeat((r / 2.0).round() as usize);
            println!("{:>5.0}° {:>6.2} m {bar}", row.psi_deg, r);
        }
    }
    Ok(())
}
