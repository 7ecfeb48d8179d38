use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tunekit::{
    parse_value, preset_hadoop, preset_spark, random_value, render_value, sample_values, ParameterSpec, Value,
};

fn ints(values: &[Value]) -> Vec<i64> {
    values
        .iter()
        .map(|v| match v {
            Value::Int(i) => *i,
            other => panic!("expected int, got {other:?}"),
        })
        .collect()
}

proptest! {
    #[test]
    fn int_samples_cover_range(a in -1000i64..1000, width in 0i64..2000, step in 1i64..300) {
        let b = a + width;
        let spec = ParameterSpec::int("p", a, a, b, step);
        let s = ints(&sample_values(&spec));
        prop_assert_eq!(s[0], a);
        prop_assert_eq!(*s.last().unwrap(), b);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.iter().all(|&v| a <= v && v <= b));
        let expected = (width / step + 1) as usize + usize::from(width % step != 0);
        prop_assert_eq!(s.len(), expected);
    }

    #[test]
    fn float_samples_cover_range(a in -10.0f64..10.0, width in 0.001f64..50.0, frac in 0.01f64..1.0) {
        let b = a + width;
        let step = width * frac;
        let spec = ParameterSpec::float("p", a, a, b, step);
        let s: Vec<f64> = sample_values(&spec).iter().map(|v| v.as_f64().unwrap()).collect();
        prop_assert!((s[0] - a).abs() <= 1e-9 * (1.0 + a.abs()));
        prop_assert_eq!(*s.last().unwrap(), b);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.iter().all(|&v| v >= a - 1e-9 && v <= b));
    }

    #[test]
    fn random_draws_stay_inside(lo in 256i64..3072, span in 0i64..3000, seed in any::<u64>()) {
        let hi = (lo + span).min(3072);
        let spec = ParameterSpec::int("m", 1024, 256, 3072, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let Value::Int(v) = random_value(&spec, &Value::Int(lo), &Value::Int(hi), &mut rng).unwrap() else {
                unreachable!()
            };
            prop_assert!(lo <= v && v <= hi);
        }
    }

    #[test]
    fn random_float_draws_are_reproducible(seed in any::<u64>()) {
        let spec = ParameterSpec::float("f", 0.5, 0.25, 0.9, 0.1);
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| random_value(&spec, &Value::Float(0.3), &Value::Float(0.8), &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        let a = draw();
        prop_assert_eq!(&a, &draw());
        prop_assert!(a.iter().all(|v| (0.3..=0.8).contains(&v.as_f64().unwrap())));
    }

    #[test]
    fn render_then_parse_is_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for space in [preset_hadoop(), preset_spark()] {
            for spec in space.params() {
                let (lo, hi) = match (spec.min_value(), spec.max_value()) {
                    (Some(lo), Some(hi)) => (lo, hi),
                    _ => (spec.default.clone(), spec.default.clone()),
                };
                let v = random_value(spec, &lo, &hi, &mut rng).unwrap();
                let text = render_value(spec, &v).unwrap();
                prop_assert_eq!(parse_value(spec, &text).unwrap(), v);
            }
        }
    }
}

#[test]
fn grid_points_round_trip_through_render() {
    for space in [preset_hadoop(), preset_spark()] {
        for spec in space.params() {
            for v in sample_values(spec) {
                let text = render_value(spec, &v).unwrap();
                assert_eq!(parse_value(spec, &text).unwrap(), v, "{}", spec.name);
            }
        }
    }
}

#[test]
fn presets_validate_their_defaults() {
    for space in [preset_hadoop(), preset_spark()] {
        assert!(space.validate(&space.defaults()).is_ok());
    }
}
