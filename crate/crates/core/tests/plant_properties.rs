use lorawan_etc::plant::{apply_valve, water, LinearMode, Mode, Valve, ZohStep};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = DVector<f64>> {
    prop::array::uniform3(-1.0f64..1.0).prop_map(|a| DVector::from_row_slice(&a))
}

fn mat3(scale: f64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::array::uniform9(-scale..scale).prop_map(|a| DMatrix::from_row_slice(3, 3, &a))
}

proptest! {
    #[test]
    fn zoh_one_long_step_equals_many_short(a in mat3(0.5), b in mat3(1.0), xi in vec3(), u in vec3(), w in vec3(), n in 1usize..20) {
        let mode = LinearMode::new(Mode::Weak, a, b, DMatrix::zeros(3, 3)).unwrap();
        let dt = 0.05;
        let short = ZohStep::new(&mode, dt);
        let mut x = xi.clone();
        for _ in 0..n {
            x = short.apply(&x, &u, &w);
        }
        let long = ZohStep::new(&mode, dt * n as f64).apply(&xi, &u, &w);
        prop_assert!((x - long).amax() < 1e-9);
    }

    #[test]
    fn zero_input_keeps_levels(xi in vec3(), dt in 1e-4f64..10.0) {
        for mode in [water::weak_mode(), water::powerful_mode()] {
            let z = DVector::zeros(3);
            prop_assert_eq!(ZohStep::new(&mode, dt).apply(&xi, &z, &z), xi.clone());
        }
    }

    #[test]
    fn valve_output_is_quantised_and_saturated(raw in prop::array::uniform3(-1e4f64..1e4)) {
        let valve = Valve::default();
        let out = apply_valve(&DVector::from_row_slice(&raw), &valve);
        for (&o, &r) in out.iter().zip(raw.iter()) {
            prop_assert!((0.0..=180.0).contains(&o));
            prop_assert_eq!(o % 10.0, 0.0);
            prop_assert!((o - r.clamp(0.0, 180.0)).abs() <= 5.0);
        }
    }
}
