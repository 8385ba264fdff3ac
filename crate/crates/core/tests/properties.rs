use approx::assert_relative_eq;
use proptest::prelude::*;

use weather_filter::attenuation::{fog_attenuation, rain_attenuation};
use weather_filter::config::Config;
use weather_filter::detection::{
    filter_recurring, is_detected, max_detected_distance, summarize, Frame, MeasurementSummary, SummaryRow,
};
use weather_filter::link_budget::{predict_range, SensorSpec, SolverGrid};
use weather_filter::{AttenuationParams, SensorKind, TuningCoefficients, WeatherCondition};

fn kind() -> impl Strategy<Value = SensorKind> {
    prop_oneof![Just(SensorKind::Radar), Just(SensorKind::Lidar)]
}

fn positive(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn config() -> impl Strategy<Value = Config> {
    (
        positive(1e-3, 1.0),
        positive(1e-13, 1e-10),
        positive(1e-10, 1e-6),
        positive(0.01, 1.0),
        positive(0.5, 3.0),
        (1u32..20, 1u32..20),
        (positive(0.01, 10.0), positive(0.001, 1.0), positive(0.1, 10.0)),
        (0.0f64..1.0, 0.0f64..0.1),
    )
        .prop_map(|(pt, pnr, pnl, refl, xi, (mr, ml), (er, ef, er2), (gar, gal))| {
            let mut c = Config::paper_2024();
            c.radar.p_t_w = pt;
            c.radar.p_n_w = pnr;
            c.radar.min_points = mr;
            c.lidar.p_n_w = pnl;
            c.lidar.min_points = ml;
            c.target.reflectance = refl;
            c.tuning.radar = TuningCoefficients {
                eta_rain: er,
                eta_fog: ef,
                xi,
            };
            c.tuning.lidar = TuningCoefficients {
                eta_rain: er2,
                eta_fog: ef,
                xi: 1.0,
            };
            c.attenuation.gamma_a_radar_db = gar;
            c.attenuation.gamma_a_lidar_db = gal;
            c
        })
}

fn range(cfg: &Config, kind: SensorKind, c: WeatherCondition, coeffs: &TuningCoefficients) -> f64 {
    predict_range(
        &cfg.sensor(kind),
        &cfg.target,
        &c,
        &cfg.attenuation,
        coeffs,
        &cfg.solver,
    )
    .unwrap()
    .unwrap_or(0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn config_json_round_trip(cfg in config()) {
        let text = cfg.to_json_string().unwrap();
        prop_assert_eq!(Config::from_json_str(&text).unwrap(), cfg);
    }

    #[test]
    fn attenuation_linear_in_eta(kind in kind(), r in 0.0f64..150.0, v in 0.5f64..500.0, eta in 0.0f64..50.0) {
        let p = AttenuationParams::default();
        let wl = 905e-9;
        assert_relative_eq!(
            rain_attenuation(kind, r, &p, eta).unwrap(),
            eta * rain_attenuation(kind, r, &p, 1.0).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            fog_attenuation(kind, v, &p, wl, eta).unwrap(),
            eta * fog_attenuation(kind, v, &p, wl, 1.0).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn range_falls_with_rain_and_rises_with_visibility(
        kind in kind(),
        r in 0.0f64..100.0,
        dr in 0.0f64..20.0,
        v in 1.0f64..200.0,
        dv in 0.0f64..50.0,
    ) {
        let cfg = Config::paper_2024();
        let coeffs = *cfg.tuning.get(kind);
        let a = range(&cfg, kind, WeatherCondition::new(r, v).unwrap(), &coeffs);
        let b = range(&cfg, kind, WeatherCondition::new(r + dr, v).unwrap(), &coeffs);
        let c = range(&cfg, kind, WeatherCondition::new(r, v + dv).unwrap(), &coeffs);
        prop_assert!(b <= a);
        prop_assert!(c >= a);
    }

    #[test]
    fn xi_scales_clear_range_by_fourth_root(xi in 0.1f64..10.0) {
        let mut cfg = Config::paper_2024();
        cfg.attenuation.gamma_a_radar_db = 0.0;
        let one = TuningCoefficients::BASELINE;
        let scaled = TuningCoefficients { xi, ..one };
        let a = range(&cfg, SensorKind::Radar, WeatherCondition::CLEAR, &one);
        let b = range(&cfg, SensorKind::Radar, WeatherCondition::CLEAR, &scaled);
        assert_relative_eq!(b / a, xi.powf(0.25), max_relative = 1e-5);
    }

    #[test]
    fn wf_beats_baseline_when_fog_weight_below_one(v in 1.0f64..300.0, eta_fog in 0.0f64..1.0) {
        let cfg = Config::paper_2024();
        let c = WeatherCondition::fog(v).unwrap();
        let wf = TuningCoefficients { eta_fog, ..TuningCoefficients::BASELINE };
        prop_assert!(range(&cfg, SensorKind::Lidar, c, &wf) >= range(&cfg, SensorKind::Lidar, c, &TuningCoefficients::BASELINE));
    }

    #[test]
    fn summarize_is_shift_and_scale_equivariant(
        xs in prop::collection::vec(0.0f64..100.0, 1..40),
        a in -50.0f64..50.0,
        b in 0.1f64..10.0,
    ) {
        let base = summarize(&xs).unwrap();
        let moved: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
        let s = summarize(&moved).unwrap();
        assert_relative_eq!(s.n_bar, a + b * base.n_bar, epsilon = 1e-9, max_relative = 1e-9);
        assert_relative_eq!(s.sigma, b * base.sigma, epsilon = 1e-9, max_relative = 1e-9);
    }

    #[test]
    fn recurring_filter_is_idempotent_for_static_scenes(
        pts in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0, 0.0f64..3.0), 0..30),
        frames in 3usize..7,
    ) {
        let scene: Vec<[f64; 3]> = pts.iter().map(|&(x, y, z)| [x, y, z]).collect();
        let input: Vec<Frame> = (0..frames)
            .map(|i| Frame { index: i as u64, timestamp: i as f64 * 0.1, points: scene.clone() })
            .collect();
        let once = filter_recurring(&input, 0.1).unwrap();
        let twice = filter_recurring(&once, 0.1).unwrap();
        // each pass drops the frame without a predecessor
        prop_assert_eq!(&once[1..], &twice[..]);
        prop_assert!(once.iter().all(|f| f.points == scene));
    }

    #[test]
    fn detection_shrinks_as_threshold_grows(
        n in prop::collection::vec(0.0f64..30.0, 8),
        m in 1u32..20,
    ) {
        let positions = [3.0, 9.0, 15.0, 21.0, 27.0, 33.0, 39.0, 44.0];
        let rows = positions
            .iter()
            .zip(&n)
            .map(|(&d, &n_bar)| SummaryRow { distance_m: d, n_bar, sigma: 0.0, excluded: false })
            .collect();
        let summary = MeasurementSummary::new(SensorKind::Lidar, WeatherCondition::CLEAR, rows).unwrap();
        let lo = max_detected_distance(&summary, m).map(|i| i.lower);
        let hi = max_detected_distance(&summary, m + 1).map(|i| i.lower);
        match (lo, hi) {
            (None, Some(_)) => prop_assert!(false, "raising m created a detection"),
            (Some(a), Some(b)) => prop_assert!(b <= a),
            _ => {}
        }
        for &x in &n {
            if is_detected(x, m + 1) {
                prop_assert!(is_detected(x, m));
            }
        }
    }
}

#[test]
fn solver_grid_bounds_are_respected() {
    let cfg = Config::paper_2024();
    let grid = SolverGrid {
        max_m: 40.0,
        ..SolverGrid::default()
    };
    let sensor = SensorSpec::Lidar(cfg.lidar.clone());
    let r = predict_range(
        &sensor,
        &cfg.target,
        &WeatherCondition::CLEAR,
        &cfg.attenuation,
        &TuningCoefficients::BASELINE,
        &grid,
    )
    .unwrap()
    .unwrap();
    assert!(r <= 40.0);
}
