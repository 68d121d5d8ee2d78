//! Configuration document round trips and joint expansion properties.

use cablearm::arm::load_config;
use cablearm::{expand_joints, ArmConfig, ConstraintMatrix, JointState};
use proptest::prelude::*;

#[test]
fn shipped_documents_round_trip_exactly() {
    for config in [ArmConfig::d3_arm(), ArmConfig::naive_routing()] {
        let text = config.to_json_string();
        let back = load_config(&text).unwrap();
        assert_eq!(back, config);
        assert_eq!(back.to_json_string(), text);
    }
}

#[test]
fn expansion_matches_the_matrix_product() {
    let u = ConstraintMatrix::d3_arm();
    let q = [0.1, -0.2, 0.3, -0.4, 0.5, -0.6];
    let by_matrix = u.to_matrix().transpose() * nalgebra::DVector::from_column_slice(&q);
    assert_eq!(expand_joints(&q, &u), by_matrix.as_slice());
}

proptest! {
    #[test]
    fn perturbed_configs_round_trip(
        twist in -3.1f64..3.1,
        length in 0.0f64..2.0,
        offset in 0.0f64..2.0,
        lower in -3.0f64..-0.01,
        upper in 0.01f64..3.0,
        wrap in 0.001f64..0.1,
        free in 0.01f64..5.0,
    ) {
        let mut config = ArmConfig::naive_routing();
        config.dh_rows[2].link_twist = twist;
        config.dh_rows[2].link_length = length;
        config.dh_rows[4].link_offset = offset;
        config.limits.lower[1] = lower;
        config.limits.upper[1] = upper;
        config.cables[5].free_length = free;
        if let Some(pass) = config.cables[7].pass_through.first_mut() {
            pass.kind = cablearm::PassKind::NaiveWrap { wrap_radius: wrap };
        }
        let back = load_config(&config.to_json_string()).unwrap();
        prop_assert_eq!(back, config);
    }

    #[test]
    fn expansion_round_trips(q in proptest::collection::vec(-10.0f64..10.0, 6)) {
        let u = ConstraintMatrix::d3_arm();
        let expanded = expand_joints(&q, &u);
        prop_assert_eq!(u.project(&expanded), q.clone());
        prop_assert_eq!(u.deviation(&q, &expanded), 0.0);
        let state = JointState::new(&q, &u);
        prop_assert!(state.check(&u).is_ok());
        // every equivalent angle is ±one independent angle or zero
        for (c, v) in expanded.iter().enumerate() {
            match u.driver(c) {
                Some((k, s)) => prop_assert_eq!(*v, f64::from(s) * q[k]),
                None => prop_assert_eq!(*v, 0.0),
            }
        }
    }
}
