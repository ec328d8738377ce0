use proptest::prelude::*;

use polyspectra::analytic::SpectraModel;
use polyspectra::estimator::cumulants::{real_k2, real_k3, real_k4};
use polyspectra::estimator::{thin, ClickRecord};
use polyspectra::io::{read_clicks, write_clicks, ClickFormat};
use polyspectra::model::{build_emitter_liouvillian, steady_state};
use polyspectra::EmitterParams;

fn rate() -> impl Strategy<Value = f64> {
    (-2.0f64..3.0).prop_map(|e| 10f64.powf(e))
}

fn sorted_times(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..10.0, 0..max_len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn steady_state_is_normalised_and_stationary(gin in rate(), gout in rate(), gph in rate(), gdet in rate()) {
        let p = EmitterParams::new(gin, gout, gph, gdet, 1.0).unwrap();
        let l = build_emitter_liouvillian(&p).unwrap().liouvillian();
        let rho = steady_state(&l).unwrap();
        let scale = l.matrix().iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        prop_assert!(l.apply_vec(&rho.vectorized()).camax() < 1e-10 * scale);
        prop_assert!((rho.entries().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.probabilities().iter().all(|&x| x >= -1e-14));
    }

    #[test]
    fn s4_cut_has_the_grid_symmetries(gin in 0.1f64..3.0, gout in 0.1f64..3.0, w1 in -10.0f64..10.0, w2 in -10.0f64..10.0) {
        let m = SpectraModel::emitter(&EmitterParams { gamma_in: gin, gamma_out: gout, ..EmitterParams::REFERENCE }).unwrap();
        let s = m.s4_cut_at(w1, w2);
        let tol = 1e-9 * s.abs().max(m.s4_cut_at(0.0, 0.0).abs());
        prop_assert!((m.s4_cut_at(w2, w1) - s).abs() < tol);
        prop_assert!((m.s4_cut_at(-w1, -w2) - s).abs() < tol);
        prop_assert!((m.s4_cut_at(w1, -w2) - s).abs() < tol);
    }

    #[test]
    fn k_statistics_are_homogeneous(v in proptest::collection::vec(-5.0f64..5.0, 6..25), c in -4.0f64..4.0) {
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        prop_assert!(close(real_k2(&scaled).unwrap(), c.powi(2) * real_k2(&v).unwrap()));
        prop_assert!(close(real_k3(&scaled).unwrap(), c.powi(3) * real_k3(&v).unwrap()));
        prop_assert!(close(real_k4(&scaled).unwrap(), c.powi(4) * real_k4(&v).unwrap()));
    }

    #[test]
    fn thinning_keeps_a_sorted_subset(times in sorted_times(300), alpha in 0.0f64..=1.0, seed in any::<u64>()) {
        let record = ClickRecord::new(times, 10.0).unwrap();
        let kept = thin(&record, alpha, seed).unwrap();
        prop_assert_eq!(kept.duration(), record.duration());
        prop_assert!(kept.timestamps().windows(2).all(|w| w[0] <= w[1]));
        let mut it = record.timestamps().iter();
        prop_assert!(kept.timestamps().iter().all(|t| it.any(|s| s == t)));
        let again = thin(&record, alpha, seed).unwrap();
        prop_assert_eq!(again.timestamps(), kept.timestamps());
    }

    #[test]
    fn click_files_round_trip_exactly(times in sorted_times(200), binary in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c");
        let record = ClickRecord::new(times, 10.0).unwrap();
        let format = if binary { ClickFormat::Binary } else { ClickFormat::Text };
        write_clicks(&path, &record, format, serde_json::Value::Null).unwrap();
        let back = read_clicks(&path).unwrap();
        prop_assert_eq!(back.timestamps(), record.timestamps());
        prop_assert_eq!(back.duration(), record.duration());
    }
}
