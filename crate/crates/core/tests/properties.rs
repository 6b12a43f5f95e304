use proptest::prelude::*;
use vaa_observer::analysis::{gram_lambda2, PEConfig};
use vaa_observer::lie_groups::{compose, exp_so3, inverse, nearest_rotation, GroupElement, Matrix3, Vector3};
use vaa_observer::observer::ObserverState;
use vaa_observer::simulator::{run, Integrator, Scenario};
use vaa_observer::trajectory::TrajectoryRecord;

fn vec3(r: f64) -> impl Strategy<Value = Vector3> {
    prop::array::uniform3(-r..r).prop_map(Vector3::from)
}

fn group() -> impl Strategy<Value = GroupElement> {
    (vec3(3.0), vec3(10.0)).prop_map(|(w, v)| GroupElement::new(exp_so3(&w), v))
}

fn close(a: &Matrix3, b: &Matrix3, tol: f64) -> bool {
    (a - b).amax() <= tol
}

proptest! {
    #[test]
    fn exp_is_a_rotation(w in vec3(10.0)) {
        let r = exp_so3(&w);
        prop_assert!(r.orthogonality_defect() < 1e-12);
        prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exp_of_negated_vector_inverts(w in vec3(10.0)) {
        let p = exp_so3(&w) * exp_so3(&-w);
        prop_assert!(close(p.matrix(), &Matrix3::identity(), 1e-12));
    }

    #[test]
    fn compose_is_associative(a in group(), b in group(), c in group()) {
        let l = compose(&compose(&a, &b), &c).to_homogeneous();
        let r = compose(&a, &compose(&b, &c)).to_homogeneous();
        prop_assert!((l - r).amax() < 1e-11);
    }

    #[test]
    fn inverse_cancels(a in group()) {
        let e = compose(&a, &inverse(&a)).to_homogeneous();
        prop_assert!((e - GroupElement::identity().to_homogeneous()).amax() < 1e-12);
    }

    #[test]
    fn projection_fixes_rotations_and_lands_on_so3(w in vec3(3.0), noise in prop::array::uniform9(-1e-3..1e-3f64)) {
        let r = exp_so3(&w);
        let fixed = nearest_rotation(r.matrix()).unwrap();
        prop_assert!(close(fixed.matrix(), r.matrix(), 1e-13));
        let perturbed = r.matrix() + Matrix3::from_row_slice(&noise);
        let p = nearest_rotation(&perturbed).unwrap();
        prop_assert!(p.orthogonality_defect() < 1e-13);
    }

    #[test]
    fn gram_lambda2_rotation_invariant(w in vec3(3.0), freqs in prop::array::uniform3(0.2..3.0f64)) {
        let dt = 0.01;
        let x: Vec<Vector3> = (0..600)
            .map(|i| {
                let t = i as f64 * dt;
                Vector3::new((freqs[0] * t).sin(), (freqs[1] * t).cos(), (freqs[2] * t).sin() + 0.3)
            })
            .collect();
        let q = exp_so3(&w);
        let qx: Vec<Vector3> = x.iter().map(|v| q * *v).collect();
        let cfg = PEConfig::new(2.0, dt).unwrap();
        let a = gram_lambda2(&x, &cfg).unwrap();
        let b = gram_lambda2(&qx, &cfg).unwrap();
        for (p, r) in a.per_window.iter().zip(&b.per_window) {
            prop_assert!((p.lambda2 - r.lambda2).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trajectory_csv_round_trips_exactly(w in vec3(3.0), v in vec3(3.0), z in vec3(3.0), geometric in any::<bool>()) {
        let integrator = if geometric { Integrator::GeometricEuler } else { Integrator::Euler };
        let base = Scenario::paper2022();
        let s = Scenario {
            observer0: ObserverState::new(exp_so3(&w), v, z),
            horizon: 1.0,
            integrator,
            ..base
        };
        // Large corrections at dt = 0.1 can abort the run; those cases have
        // nothing to round-trip.
        let rec = run(&s);
        prop_assume!(rec.is_ok());
        let rec = rec.unwrap();
        let back = TrajectoryRecord::from_csv_str(&rec.to_csv_string()).unwrap();
        prop_assert_eq!(back.len(), rec.len());
        for (a, b) in rec.rows.iter().zip(&back.rows) {
            prop_assert_eq!(a, b);
        }
    }
}
