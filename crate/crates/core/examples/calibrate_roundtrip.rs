//! Recovers known tuning coefficients from ranges they produced.
//!
//!     cargo run --release --example calibrate_roundtrip

use weather_filter::calibration::{calibrate, CalibrationProblem, Coefficient, Observation};
use weather_filter::config::Config;
use weather_filter::link_budget::predict_range;
use weather_filter::{SensorKind, TuningCoefficients, WeatherCondition};

fn main() -> weather_filter::Result<()> {
    let cfg = Config::paper_2024();
    let truth = TuningCoefficients {
        eta_rain: 2.7,
        eta_fog: 1.0,
        xi: 0.8,
    };
    let sensor = cfg.sensor(SensorKind::Radar);
    let free = vec![Coefficient::EtaRain, Coefficient::Xi];
    let mut problem = CalibrationProblem::new(
        sensor.clone(),
        cfg.target.clone(),
        cfg.attenuation.clone(),
        Vec::new(),
        free,
    );

    for r in [0.0, 5.0, 16.0, 50.0, 98.0] {
        let c = WeatherCondition::rain(r)?;
        let d = predict_range(&sensor, &cfg.target, &c, &cfg.attenuation, &truth, &problem.grid)?.expect("in range");
        problem.observations.push(Observation::at(c, d));
    }

    let fit = calibrate(&problem)?;
    print!("{}", fit.report(SensorKind::Radar));
    println!("true: eta_rain = {}, xi = {}", truth.eta_rain, truth.xi);
    Ok(())
}
