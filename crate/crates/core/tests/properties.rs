//! Randomized checks of the structural guarantees of each module.

use proptest::prelude::*;
use scour_core::baseline::{evaluate_baseline, BaselineId, BaselineOptions};
use scour_core::data::{self, derive_features, RawScourRecord, Scale, ScaleInput};
use scour_core::metrics::{compute_metrics_from, Units};
use scour_core::model::{FeatureId, ModelSpec, PowerLawModel};
use scour_core::swarm::{optimize, SearchBounds, SwarmConfig, SwarmState};
use scour_core::workbench::{run_sensitivity, Dataset, WorkbenchConfig};

fn lab_record() -> impl Strategy<Value = RawScourRecord> {
    (
        0.016..0.9f64,
        0.15..2.1f64,
        0.23..1.27f64,
        0.02..1.9f64,
        0.00022..0.0078f64,
        1.0..5.5f64,
        0.0..1.4f64,
    )
        .prop_map(|(d, v, vc, y, d50, sigma, s)| RawScourRecord {
            pier_width: d,
            mean_velocity: v,
            flow_depth: y,
            median_grain_size: d50,
            sediment_gradation: sigma,
            scour_depth: s,
            scale_input: ScaleInput::Laboratory {
                critical_velocity: vc,
            },
        })
}

fn field_record() -> impl Strategy<Value = RawScourRecord> {
    (
        0.3..28.7f64,
        0.09..4.0f64,
        0.98..38.0f64,
        0.16..22.0f64,
        0.00001..0.1f64,
        1.2..20.0f64,
        0.0..10.0f64,
    )
        .prop_map(|(d, v, l, y, d50, sigma, s)| RawScourRecord {
            pier_width: d,
            mean_velocity: v,
            flow_depth: y,
            median_grain_size: d50,
            sediment_gradation: sigma,
            scour_depth: s,
            scale_input: ScaleInput::Field { pier_length: l },
        })
}

fn any_record() -> impl Strategy<Value = RawScourRecord> {
    prop_oneof![lab_record(), field_record()]
}

/// A few shifted quadratics and a multimodal surface.
fn objective(kind: u8, shift: f64) -> impl Fn(&[f64]) -> f64 + Sync {
    move |x: &[f64]| match kind % 3 {
        0 => x.iter().map(|v| (v - shift).powi(2)).sum(),
        1 => x.iter().map(|v| (v - shift).abs()).sum(),
        _ => x
            .iter()
            .map(|v| v * v - 3.0 * (2.0 * std::f64::consts::PI * v).cos() + 3.0)
            .sum(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn swarm_trace_containment_and_personal_bests(
        seed in any::<u64>(),
        kind in any::<u8>(),
        shift in -2.0..2.0f64,
        dim in 1usize..5,
    ) {
        let f = objective(kind, shift);
        let bounds = SearchBounds::uniform(dim, -4.0, 3.0).unwrap();
        let cfg = SwarmConfig { particle_count: 12, iteration_count: 1, ..SwarmConfig::default().with_seed(seed) };
        let mut state = SwarmState::initialize(&bounds, &cfg, &f).unwrap();
        let mut lowest_seen: Vec<f64> = state.particles().iter().map(|p| p.value).collect();
        for _ in 0..100 {
            state.step(&f).unwrap();
            for (p, seen) in state.particles().iter().zip(lowest_seen.iter_mut()) {
                prop_assert!(bounds.contains(&p.position));
                *seen = seen.min(p.value);
                prop_assert!(p.best_value <= *seen);
                prop_assert!((f(&p.best_position) - p.best_value).abs() <= 1e-12 * p.best_value.abs().max(1.0));
            }
        }
        let trace = state.trace();
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*trace.last().unwrap(), state.best_value());
    }

    #[test]
    fn swarm_null_update_is_a_fixed_point(seed in any::<u64>(), dim in 1usize..6) {
        let f = objective(0, 0.5);
        let bounds = SearchBounds::uniform(dim, -1.0, 1.0).unwrap();
        let cfg = SwarmConfig {
            particle_count: 8,
            iteration_count: 1,
            inertia_weight: 0.0,
            cognitive_coeff: 0.0,
            social_coeff: 0.0,
            ..SwarmConfig::default().with_seed(seed)
        };
        let mut state = SwarmState::initialize(&bounds, &cfg, &f).unwrap();
        state.step(&f).unwrap();
        let settled: Vec<Vec<f64>> = state.particles().iter().map(|p| p.position.clone()).collect();
        for _ in 0..5 {
            state.step(&f).unwrap();
        }
        let after: Vec<Vec<f64>> = state.particles().iter().map(|p| p.position.clone()).collect();
        prop_assert_eq!(settled, after);
    }

    #[test]
    fn swarm_result_ignores_thread_count(seed in any::<u64>(), kind in any::<u8>()) {
        let f = objective(kind, 0.3);
        let bounds = SearchBounds::uniform(3, -2.0, 2.0).unwrap();
        let cfg = SwarmConfig { particle_count: 16, iteration_count: 40, ..SwarmConfig::default().with_seed(seed) };
        let wide = optimize(&f, &bounds, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let narrow = pool.install(|| optimize(&f, &bounds, &cfg)).unwrap();
        prop_assert_eq!(wide, narrow);
    }

    #[test]
    fn features_are_positive_and_finite(rec in any_record()) {
        let f = derive_features(&rec).unwrap();
        for v in [f.sigma, f.froude, f.d_over_y, f.d50_over_y, f.fifth_feature] {
            prop_assert!(v.is_finite() && v > 0.0);
        }
        prop_assert!(f.s_over_y >= 0.0 && f.s_over_y.is_finite());
    }

    #[test]
    fn velocity_ratio_is_scale_free(rec in lab_record(), k in 0.1..10.0f64) {
        let mut scaled = rec;
        scaled.mean_velocity *= k;
        if let ScaleInput::Laboratory { critical_velocity } = &mut scaled.scale_input {
            *critical_velocity *= k;
        }
        let a = derive_features(&rec).unwrap().fifth_feature;
        let b = derive_features(&scaled).unwrap().fifth_feature;
        prop_assert!((a - b).abs() <= 1e-14 * a);
    }

    #[test]
    fn csv_round_trip_is_exact(lab in prop::collection::vec(lab_record(), 1..20), field in prop::collection::vec(field_record(), 1..20)) {
        for (scale, recs) in [(Scale::Laboratory, lab), (Scale::Field, field)] {
            let mut buf = Vec::new();
            data::write_csv(&mut buf, scale, &recs).unwrap();
            let back = data::read_csv(buf.as_slice(), scale, true).unwrap();
            prop_assert_eq!(back.records, recs);
        }
    }

    #[test]
    fn split_partitions_and_mirrors(n in 2usize..400, ratio in 0.01..0.99f64, seed in any::<u64>()) {
        let items: Vec<usize> = (0..n).collect();
        let s = data::split(&items, ratio, seed).unwrap();
        prop_assert_eq!(s.training.len(), data::training_size(n, ratio));
        let mut all: Vec<usize> = s.training.iter().chain(&s.testing).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, items.clone());
        let m = data::split(&items, 1.0 - ratio, seed).unwrap();
        prop_assert_eq!(s.training.len(), m.testing.len());
        prop_assert_eq!(s.testing.len(), m.training.len());
    }

    #[test]
    fn prediction_is_positive_and_monotone(
        rec in any_record(),
        a in 1e-6..10.0f64,
        k in prop::collection::vec(-3.0..3.0f64, 5),
        which in 0usize..5,
        bump in 1.01..3.0f64,
    ) {
        let f = derive_features(&rec).unwrap();
        let spec = ModelSpec::new("p", f.scale, FeatureId::full_set(f.scale).to_vec()).unwrap();
        let model = PowerLawModel::new(spec, a, k.clone()).unwrap();
        let base = model.predict(&f).unwrap();
        prop_assert!(base > 0.0);
        let mut g = f;
        match which {
            0 => g.sigma *= bump,
            1 => g.froude *= bump,
            2 => g.d_over_y *= bump,
            3 => g.d50_over_y *= bump,
            _ => g.fifth_feature *= bump,
        }
        let moved = model.predict(&g).unwrap();
        if k[which] > 1e-9 {
            prop_assert!(moved > base);
        } else if k[which] < -1e-9 {
            prop_assert!(moved < base);
        }
    }

    #[test]
    fn baselines_depend_only_on_dimensionless_groups(rec in field_record(), k in 0.2..5.0f64) {
        // Scaling every length by k and velocities by sqrt(k) keeps every group fixed.
        let mut scaled = rec;
        scaled.pier_width *= k;
        scaled.flow_depth *= k;
        scaled.median_grain_size *= k;
        scaled.mean_velocity *= k.sqrt();
        if let ScaleInput::Field { pier_length } = &mut scaled.scale_input {
            *pier_length *= k;
        }
        for id in BaselineId::ALL.into_iter().filter(|b| b.applicable(Scale::Field)) {
            let a = evaluate_baseline(id, &rec, BaselineOptions::default()).unwrap().s_over_y;
            let b = evaluate_baseline(id, &scaled, BaselineOptions::default()).unwrap().s_over_y;
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{}: {} vs {}", id.name(), a, b);
        }
    }

    #[test]
    fn baselines_positive_in_range(rec in any_record()) {
        let scale = rec.scale();
        for id in BaselineId::ALL.into_iter().filter(|b| b.applicable(scale)) {
            let p = evaluate_baseline(id, &rec, BaselineOptions::default()).unwrap();
            let live_bed = rec.critical_velocity().is_none_or(|vc| 2.0 * rec.mean_velocity / vc > 1.0);
            if id != BaselineId::Hancu1971 || live_bed {
                prop_assert!(p.s_over_y > 0.0, "{}", id.name());
            } else {
                prop_assert!(p.clamped && p.s_over_y == 0.0);
            }
        }
    }

    #[test]
    fn metric_sign_and_band(measured in prop::collection::vec(0.0..5.0f64, 2..60), over in 0.001..2.0f64) {
        let estimated: Vec<f64> = measured.iter().map(|m| m + over).collect();
        let r = compute_metrics_from(&measured, &estimated, Units::Meters).unwrap();
        prop_assert!(r.bias > 0.0);
        prop_assert_eq!(r.band_width, r.se.map(|s| 1.96 * s));
    }
}

fn sensitivity_records(seed: u64) -> Vec<RawScourRecord> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..40)
        .map(|_| {
            let mut r = RawScourRecord {
                pier_width: rng.gen_range(0.02..0.5),
                mean_velocity: rng.gen_range(0.2..1.2),
                flow_depth: rng.gen_range(0.1..0.8),
                median_grain_size: rng.gen_range(0.0003..0.005),
                sediment_gradation: rng.gen_range(1.1..4.0),
                scour_depth: 0.0,
                scale_input: ScaleInput::Laboratory {
                    critical_velocity: rng.gen_range(0.25..1.0),
                },
            };
            let f = derive_features(&r).unwrap();
            r.scour_depth = 1.1 * f.d_over_y.powf(0.8) * f.froude.powf(0.3) * r.flow_depth;
            r
        })
        .collect()
}

#[test]
fn sensitivity_ranking_is_a_stable_permutation() {
    let dataset = Dataset::from_raw(Scale::Laboratory, &sensitivity_records(3)).unwrap();
    let specs = ModelSpec::builtin_for(Scale::Laboratory);
    let cfg = WorkbenchConfig {
        swarm: SwarmConfig {
            iteration_count: 80,
            ..SwarmConfig::default().with_seed(9)
        },
        split_seed: 9,
        ..WorkbenchConfig::default()
    };
    let first = run_sensitivity(&dataset, &specs, &cfg).unwrap();
    let second = run_sensitivity(&dataset, &specs, &cfg).unwrap();
    assert_eq!(first.ranking, second.ranking);
    let mut ranked = first.ranking.clone();
    ranked.sort();
    let mut ids = first.spec_ids.clone();
    ids.sort();
    assert_eq!(ranked, ids);
    let test_ids: Vec<Vec<usize>> = first
        .reports
        .iter()
        .map(|r| r.test_points.iter().map(|p| p.record_id).collect())
        .collect();
    assert!(test_ids.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(test_ids[0], first.split.testing_ids);
}
