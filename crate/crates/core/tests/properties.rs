//! Property tests for the structural invariants of the model.

use std::f64::consts::PI;

use nalgebra::{Vector3, Vector6};
use proptest::prelude::*;

use stokeswim::controllability::{parameter_scan, BracketConvention, BracketEngine, ScanRanges};
use stokeswim::lie::commutator;
use stokeswim::{DragCoefficients, LinkChain, Pose, ShapeState, Swimmer};

fn drag() -> impl Strategy<Value = DragCoefficients> {
    (0.2..1.5f64, 0.1..2.0f64, 0.05..2.0f64)
        .prop_map(|(c_par, gap, c_tau)| DragCoefficients::new(c_par, c_par + gap, c_tau).unwrap())
}

fn twist(scale: f64) -> impl Strategy<Value = Vector6<f64>> {
    proptest::array::uniform6(-scale..scale).prop_map(Vector6::from)
}

fn chain_and_shape() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.2..2.0f64, n),
            proptest::collection::vec(-PI..PI, 2 * (n - 1)),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_log_round_trip(xi in twist(1.0)) {
        // angles stay below π so the logarithm is unique
        let back = Pose::exp(&xi).log();
        prop_assert!((back - xi).norm() < 1e-10);
    }

    #[test]
    fn exp_is_a_one_parameter_group(xi in twist(1.0), s in -1.0..1.0f64, t in -1.0..1.0f64) {
        let lhs = Pose::exp(&(xi * s)).compose(&Pose::exp(&(xi * t)));
        let rhs = Pose::exp(&(xi * (s + t)));
        prop_assert!((lhs.to_homogeneous() - rhs.to_homogeneous()).norm() < 1e-12);
    }

    #[test]
    fn commutator_satisfies_jacobi(a in twist(2.0), b in twist(2.0), c in twist(2.0)) {
        let sum = commutator(&a, &commutator(&b, &c))
            + commutator(&b, &commutator(&c, &a))
            + commutator(&c, &commutator(&a, &b));
        prop_assert!(sum.norm() < 1e-12);
    }

    #[test]
    fn body_velocity_is_linear_in_rates(
        (lengths, angles) in chain_and_shape(),
        d in drag(),
        a in -2.0..2.0f64,
        seed in 0u64..1000,
    ) {
        let sw = Swimmer::new(LinkChain::new(lengths).unwrap(), d);
        let shape = ShapeState::from_control_vector(&angles);
        let m = angles.len();
        let r1: Vec<f64> = (0..m).map(|k| ((seed + k as u64) as f64 * 0.37).sin()).collect();
        let r2: Vec<f64> = (0..m).map(|k| ((seed * 3 + k as u64) as f64 * 0.71).cos()).collect();
        let combo: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + y).collect();
        let v1 = sw.body_velocity(&shape, &r1).unwrap().to_vector();
        let v2 = sw.body_velocity(&shape, &r2).unwrap().to_vector();
        let vc = sw.body_velocity(&shape, &combo).unwrap().to_vector();
        let expect = v1 * a + v2;
        prop_assert!((vc - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
    }

    #[test]
    fn resistance_is_symmetric_positive_definite((lengths, angles) in chain_and_shape(), d in drag()) {
        let sw = Swimmer::new(LinkChain::new(lengths).unwrap(), d);
        let m = sw.resistance(&ShapeState::from_control_vector(&angles)).unwrap();
        prop_assert!(m.symmetry_defect() <= 1e-12);
        prop_assert!(m.min_eigenvalue() > 0.0);
    }

    #[test]
    fn flipped_parametrization_describes_the_same_body(
        d in drag(), l in 0.5..2.0f64, theta in -PI..PI, phi in 0.05..3.0f64,
    ) {
        // (θ + π, −φ) is the same link direction; φ̇ flips sign, θ̇ does not
        let sw = Swimmer::two_link(l, d).unwrap();
        let a = sw.control_fields(&ShapeState::two_link(theta, phi)).unwrap();
        let b = sw.control_fields(&ShapeState::two_link(theta + PI, -phi)).unwrap();
        let (a1, a2) = (a[0].twist.to_vector(), a[1].twist.to_vector());
        let (b1, b2) = (b[0].twist.to_vector(), b[1].twist.to_vector());
        prop_assert!((a1 + b1).norm() <= 1e-10 * (1.0 + a1.norm()));
        prop_assert!((a2 - b2).norm() <= 1e-10 * (1.0 + a2.norm()));
    }

    #[test]
    fn field_brackets_are_antisymmetric_and_satisfy_jacobi(
        d in drag(),
        a1 in -PI..PI, a2 in 0.3..2.8f64, a3 in -PI..PI, a4 in 0.3..2.8f64,
    ) {
        let sw = Swimmer::new(LinkChain::new(vec![1.0, 0.8, 1.2]).unwrap(), d);
        let shape = ShapeState::from_control_vector(&[a1, a2, a3, a4]);
        let eng = BracketEngine::new(&sw, &shape, 3, BracketConvention::Geometric).unwrap();
        let (x, y, z) = (eng.generator(0), eng.generator(1), eng.generator(2));

        let xy = eng.bracket(x, y).unwrap().twist_value();
        let yx = eng.bracket(y, x).unwrap().twist_value();
        prop_assert!((xy + yx).norm() <= 1e-12 * (1.0 + xy.norm()));

        let term = |p, q, r| {
            let inner = eng.bracket(q, r).unwrap();
            eng.bracket(p, &inner).unwrap().twist_value()
        };
        let parts = [term(x, y, z), term(y, z, x), term(z, x, y)];
        let scale: f64 = parts.iter().map(|v| v.norm()).sum();
        let sum: Vector6<f64> = parts.iter().sum();
        prop_assert!(sum.norm() <= 1e-9 * (1.0 + scale), "jacobi defect {} of {}", sum.norm(), scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn parameter_scan_is_deterministic(seed in 0u64..10_000) {
        let ranges = ScanRanges::default();
        let a = parameter_scan(&ranges, 6, seed).unwrap();
        let b = parameter_scan(&ranges, 6, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn rotation_angle_matches_axis_angle() {
    let axis = Vector3::new(1.0, -2.0, 0.5).normalize();
    for angle in [0.0, 1e-9, 0.3, 2.0, PI - 1e-6] {
        let r = stokeswim::RotationMatrix::from_axis_angle(&axis, angle);
        assert!((r.angle() - angle).abs() < 1e-8, "{angle}");
    }
}

#[test]
fn certificate_needs_brackets_of_four_generators() {
    use stokeswim::controllability::{certificate_shape, lie_rank, DEFAULT_RANK_TOL};
    // depth counts generators; [V1, [V2, [V1, V2]]] is the first bracket completing rank 6
    for (c_par, c_perp, c_tau, l) in [(1.0, 2.0, 1.0, 1.0), (0.4, 1.7, 0.3, 1.6), (1.2, 1.5, 2.0, 0.7)] {
        let sw = Swimmer::two_link(l, DragCoefficients::new(c_par, c_perp, c_tau).unwrap()).unwrap();
        let rank = |depth| {
            lie_rank(&sw, &certificate_shape(2), depth, DEFAULT_RANK_TOL, BracketConvention::Geometric)
                .unwrap()
                .rank
        };
        assert!(rank(1) <= 2);
        assert_eq!(rank(3), 5, "({c_par}, {c_perp}, {c_tau}, {l})");
        assert_eq!(rank(4), 6, "({c_par}, {c_perp}, {c_tau}, {l})");
    }
}
