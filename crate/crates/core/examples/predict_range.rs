//! Maximum detection range for one condition, plus the raw link budget.
//!
//!     cargo run --example predict_range -- 16 20
//!
//! Arguments are rain rate (mm/h) and visual range (m); both optional.

use weather_filter::config::Config;
use weather_filter::link_budget::{lidar_received_power, predict, radar_received_power};
use weather_filter::{SensorKind, TuningCoefficients, WeatherCondition};

fn main() -> weather_filter::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<f64>().expect("numeric argument"));
    let rain = args.next().unwrap_or(0.0);
    let fog = args.next().unwrap_or(f64::INFINITY);
    let condition = WeatherCondition::new(rain, fog)?;
    let cfg = Config::paper_2024();

    println!("condition: rain {rain} mm/h, visual range {fog} m");
    for kind in [SensorKind::Radar, SensorKind::Lidar] {
        let sensor = cfg.sensor(kind);
        for (label, coeffs) in [
            ("baseline", TuningCoefficients::BASELINE),
            ("wf", *cfg.tuning.get(kind)),
        ] {
            let p = predict(&sensor, &cfg.target, &condition, &cfg.attenuation, &coeffs, &cfg.solver)?;
            let range = p.range_m.map_or("none".to_string(), |r| format!("{r:.2} m"));
            println!(
                "{kind:<6} {label:<9} gamma {:>9.5}  range {range}",
                p.attenuation.total()
            );
        }
    }

    // received power against distance, clear air
    println!("\n{:>6} {:>14} {:>14}", "r (m)", "radar P (W)", "lidar P (W)");
    for r in [5.0, 10.0, 25.0, 50.0, 100.0, 200.0] {
        let pr = radar_received_power(&cfg.radar, &cfg.target, 0.0, r, 0.0)?;
        let pl = lidar_received_power(&cfg.lidar, &cfg.target, 0.0, r)?;
        println!("{r:>6} {pr:>14.4e} {pl:>14.4e}");
    }
    Ok(())
}
