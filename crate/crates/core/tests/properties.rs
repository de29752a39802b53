use proptest::prelude::*;

use fivebar::actuation::MotorCalibration;
use fivebar::analysis::{self, AngleSample, AngleSeries, ImuLog, ImuSample};
use fivebar::io;
use fivebar::mechanism::{self, ElbowConfig, JointState, MechanismParams, PlanarPath, Point};

fn params() -> MechanismParams {
    MechanismParams::prototype()
}

fn series(angles: &[f64]) -> AngleSeries {
    AngleSeries::new(
        angles
            .iter()
            .enumerate()
            .map(|(k, &angle)| AngleSample {
                t: k as f64 * 0.01,
                angle,
            })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn ik_inverts_fk(t1 in 92.37_f64..153.55, t2 in 40.44_f64..83.07) {
        let p = params();
        let j = JointState::from_degrees(t1, t2);
        prop_assume!(p.elbow_distance(j) < 2.0 * p.l2() - 1e-6);
        let c = mechanism::forward_kinematics(&p, j).unwrap();
        let back = mechanism::inverse_kinematics(&p, c, ElbowConfig::UP).unwrap();
        prop_assert!(mechanism::wrap_angle(back.theta1 - j.theta1).abs() < 1e-9);
        prop_assert!(mechanism::wrap_angle(back.theta2 - j.theta2).abs() < 1e-9);
    }

    #[test]
    fn mirror_poses_sit_on_the_midline(t1 in 92.37_f64..125.0) {
        let p = params();
        let t1 = t1.to_radians();
        let c = mechanism::forward_kinematics(&p, JointState::new(t1, std::f64::consts::PI - t1)).unwrap();
        prop_assert!((c.x - p.l0() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn fk_output_is_equidistant_from_elbows(t1 in 92.37_f64..153.55, t2 in 40.44_f64..83.07) {
        let p = params();
        let j = JointState::from_degrees(t1, t2);
        prop_assume!(p.elbow_distance(j) < 2.0 * p.l2());
        let c = mechanism::forward_kinematics(&p, j).unwrap();
        let (b, f) = p.elbows(j);
        prop_assert!((c.distance(b) - p.l2()).abs() < 1e-9);
        prop_assert!((c.distance(f) - p.l2()).abs() < 1e-9);
    }

    #[test]
    fn align_is_idempotent(angles in prop::collection::vec(-180.0_f64..180.0, 1..60)) {
        let once = analysis::align_offset(&series(&angles)).unwrap();
        let twice = analysis::align_offset(&once).unwrap();
        prop_assert_eq!(once.samples()[0].angle, 0.0);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn cycle_error_of_identical_series_is_zero(angles in prop::collection::vec(-90.0_f64..90.0, 2..60)) {
        let s = series(&angles);
        let e = analysis::cycle_error(&s, &s).unwrap();
        prop_assert_eq!(e.rms, 0.0);
        prop_assert_eq!(e.max_abs, 0.0);
    }

    #[test]
    fn quantization_is_within_half_a_count(angle in 0.0_f64..180.0) {
        for cal in [MotorCalibration::prototype_m1(), MotorCalibration::prototype_m2()] {
            let counts = cal.degrees_to_counts(angle);
            let back = cal.counts_to_degrees(counts);
            prop_assert!(((back - angle) * cal.counts_per_degree).abs() <= 0.5 + 1e-9);
            prop_assert_eq!(cal.degrees_to_counts(back), counts);
        }
    }

    #[test]
    fn path_csv_round_trips(raw in prop::collection::vec((-500.0_f64..500.0, -500.0_f64..500.0), 2..40)) {
        let path = PlanarPath::new(raw.iter().map(|&(x, z)| Point::new(x, z)).collect()).unwrap();
        let name = std::path::Path::new("mem.csv");
        let bytes = io::write_path_csv(Vec::new(), name, &path, &["round trip"]).unwrap();
        let back = io::parse_path_csv(bytes.as_slice(), name).unwrap();
        prop_assert_eq!(back.len(), path.len());
        for (a, b) in back.points().iter().zip(path.points()) {
            prop_assert!(a.distance(*b) < 1e-8);
        }
    }

    #[test]
    fn split_cycles_partitions_the_log(n in 10_usize..400, per in 3_usize..50) {
        let dt = 0.01;
        let log = ImuLog::new(
            (0..n)
                .map(|k| ImuSample { t: k as f64 * dt, zeta_x: k as f64, zeta_y: 0.0, zeta_z: 0.0 })
                .collect(),
        )
        .unwrap();
        let cycles = analysis::split_cycles(&log, per as f64 * dt).unwrap();
        let joined: Vec<f64> = cycles.iter().flat_map(|c| c.samples().iter().map(|s| s.zeta_x)).collect();
        let expected: Vec<f64> = (0..joined.len()).map(|k| k as f64).collect();
        prop_assert_eq!(&joined, &expected);
        prop_assert!(n - joined.len() < per);
        prop_assert!(cycles.iter().all(|c| c.len() == per));
    }
}
