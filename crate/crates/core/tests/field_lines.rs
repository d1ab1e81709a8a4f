//! Traced field lines feeding the linking machinery.

use std::f64::consts::PI;

use curlwave::fields::{haar_point, SphereField};
use curlwave::linking::{close_curve, gauss_linking, hopf_fiber, trace_field_line, LinkingMatrix, TraceOptions};
use curlwave::mc::{stream_rng, with_workers};
use curlwave::quaternion::Quaternion;
use curlwave::scaling::{scaling_scan, McParams};
use curlwave::yang_mills::{build_frame, Side};

#[test]
fn traced_lines_of_the_curl_link_like_fibers() {
    let b = build_frame(Side::Left).fields[0].scale(-2.0);
    let mut rng = stream_rng(21, 0);
    let lines: Vec<_> = (0..4)
        .map(|_| {
            let x0 = haar_point(&mut rng);
            let line = trace_field_line(&b, &x0, PI, 1e-2, TraceOptions::default()).unwrap();
            close_curve(&line).unwrap()
        })
        .collect();
    let m = LinkingMatrix::from_curves(&lines).unwrap();
    assert!(m.is_symmetric());
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert_eq!(m.lk[i][j], -1, "({i}, {j})");
            }
        }
    }
    // The traced line through a point and the exact left fiber through it
    // are the same curve, so a second fiber links both equally.
    let x0 = Quaternion::new(0.5, 0.5, 0.5, 0.5);
    let traced = close_curve(&trace_field_line(&b, &x0.to_vector(), PI, 1e-2, TraceOptions::default()).unwrap()).unwrap();
    let other = hopf_fiber(Quaternion::new(0.0, 0.0, 1.0, 0.0), Quaternion::I, true, 400);
    let exact = hopf_fiber(x0, Quaternion::I, true, 400);
    let (g1, g2) = (gauss_linking(&traced, &other).unwrap(), gauss_linking(&exact, &other).unwrap());
    assert!((g1 - g2).abs() < 1e-3, "{g1} vs {g2}");
    assert!(b.at(&x0.to_vector()).norm() > 1.0);
}

#[test]
fn small_scan_is_worker_independent() {
    let params = McParams {
        lambdas: vec![1.0, 2.0, 4.0, 8.0, 16.0],
        n_chords: 10_000,
        ..McParams::default()
    };
    let serial = with_workers(1, || scaling_scan(&params).unwrap());
    let parallel = with_workers(3, || scaling_scan(&params).unwrap());
    assert_eq!(serial, parallel);
    assert!(serial.parallelism_fit.within(-1.0 / 3.0, 0.05));
}
