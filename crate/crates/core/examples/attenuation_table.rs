//! Rain and fog attenuation for both sensors, baseline and tuned.
//!
//!     cargo run --example attenuation_table

use weather_filter::attenuation::attenuation;
use weather_filter::config::Config;
use weather_filter::{SensorKind, TuningCoefficients, WeatherCondition};

fn main() -> weather_filter::Result<()> {
    let cfg = Config::paper_2024();
    let wl = cfg.lidar.wavelength_m;
    let conditions = [
        WeatherCondition::CLEAR,
        WeatherCondition::rain(5.0)?,
        WeatherCondition::rain(16.0)?,
        WeatherCondition::rain(98.0)?,
        WeatherCondition::fog(200.0)?,
        WeatherCondition::fog(20.0)?,
        WeatherCondition::fog(6.0)?,
    ];

    println!(
        "{:<6} {:>8} {:>8} {:>12} {:>12}",
        "sensor", "rain", "fog", "gamma base", "gamma wf"
    );
    for kind in [SensorKind::Radar, SensorKind::Lidar] {
        for c in &conditions {
            let base = attenuation(kind, c, &cfg.attenuation, wl, &TuningCoefficients::BASELINE)?;
            let wf = attenuation(kind, c, &cfg.attenuation, wl, cfg.tuning.get(kind))?;
            println!(
                "{:<6} {:>8} {:>8} {:>12.5} {:>12.5}",
                kind.to_string(),
                c.rain_rate(),
                c.fog_visual_range(),
                base.total(),
                wf.total()
            );
        }
    }
    Ok(())
}
