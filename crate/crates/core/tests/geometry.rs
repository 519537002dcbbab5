use lidar_deploy::geometry::{beam_direction, deploy_rays, elevation_of, tilt_matrix, Deployment, LidarModel};
use proptest::prelude::*;

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn directions_are_unit(alpha in 0.0f64..std::f64::consts::TAU, beta in -HALF_PI..HALF_PI) {
        let d = beam_direction(alpha, beta);
        prop_assert!((d.norm() - 1.0).abs() <= 1e-12);
        prop_assert!((elevation_of(&d) - beta).abs() < 1e-12);
    }

    #[test]
    fn tilts_are_rotations(tx in -HALF_PI..HALF_PI, ty in -HALF_PI..HALF_PI) {
        let (gram, det) = tilt_matrix(tx, ty).orthonormality_error();
        prop_assert!(gram <= 1e-12 && det <= 1e-12);
    }

    #[test]
    fn tilts_preserve_angles(
        tx in -1.0f64..1.0, ty in -1.0f64..1.0,
        a1 in 0.0..std::f64::consts::TAU, b1 in -1.4f64..1.4, a2 in 0.0..std::f64::consts::TAU, b2 in -1.4f64..1.4,
    ) {
        let r = tilt_matrix(tx, ty);
        let (u, v) = (beam_direction(a1, b1), beam_direction(a2, b2));
        prop_assert!((r.apply(&u).dot(&r.apply(&v)) - u.dot(&v)).abs() < 1e-12);
        prop_assert!((r.apply_inverse(&r.apply(&u)) - u).amax() < 1e-12);
    }

    /// An X tilt lowers every beam pointing along -Y by the tilt angle.
    #[test]
    fn x_tilt_lowers_beams_towards_minus_y(tilt_deg in 0.0f64..25.0, beam in 0usize..16) {
        let model = LidarModel::rs16();
        let rays = deploy_rays(&model, &Deployment::from_degrees(0.0, 0.0, 2.0, tilt_deg, 0.0).unwrap());
        let back = model.azimuth_count() / 2;
        let d = rays.direction(beam, back);
        let expected = model.vertical_angles()[beam] - tilt_deg;
        prop_assert!((elevation_of(&d).to_degrees() - expected).abs() < 1e-9);
    }
}
