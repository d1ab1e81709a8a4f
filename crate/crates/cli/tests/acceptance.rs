//! Acceptance suite: one line per criterion.
//!
//! Criteria 4 and 6 cannot hold together with 1 and 3 (see the README); they
//! are evaluated as written and reported as failing. The process exits
//! non-zero when the set of failing criteria differs from that known set —
//! a regression elsewhere, or either of them unexpectedly passing.
//!
//! Run alone with `cargo test -p curlwave-cli --test acceptance`.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use curlwave::benchmarks::{benchmark_pairs, hopf_quintuple, mixed_quintuple, PairKind};
use curlwave::curvature_oracle::{fd_frame_curvatures, SphereChart, UnitTangentChart, FD_STEP};
use curlwave::fields::{haar_point, unit_sphere_volume, Domain};
use curlwave::fit::ScalingFit;
use curlwave::hyperbolic::{build_lambda_frame, cs_density_at, cs_density_lambda, rescale_check, sectional_profile};
use curlwave::lie_frame::{curl_eigenvalue, milnor_curvatures, FrameFieldIndex};
use curlwave::linking::{asymptotic_hopf, crossing_linking, gauss_linking, helicity_integral};
use curlwave::mc::stream_rng;
use curlwave::scaling::{m5_quintuple_estimate, scaling_scan, McParams};
use curlwave::yang_mills::{build_frame, cs_density, ym_residual, Side};
use nalgebra::Vector3;

/// Criteria that contradict 1 and 3 and are expected to fail.
const KNOWN_UNATTAINABLE: [&str; 2] = ["4", "6"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn within_budget(elapsed: Duration, budget: Duration) -> bool {
    elapsed <= budget
}

fn c1_curl_eigenrelations() -> Outcome {
    let start = Instant::now();
    let mut err: f64 = 0.0;
    for (side, target) in [(Side::Left, -2.0), (Side::Right, 2.0)] {
        let frame = build_frame(side);
        for idx in FrameFieldIndex::ALL {
            err = err.max((curl_eigenvalue(&frame.spec, idx).unwrap() - target).abs());
        }
    }
    for lambda in [0.25, 1.0, 4.0] {
        let mu = build_lambda_frame(lambda, true).unwrap().curl_eigenvalues().unwrap();
        err = err.max(max_abs(mu.map(|m| m + 2.0 / lambda)));
    }
    let t = start.elapsed();
    outcome(err < 1e-12 && within_budget(t, Duration::from_secs(1)), format!("max error {err:e} (< 1e-12), {t:.2?} (< 1 s)"))
}

fn c2_yang_mills() -> Outcome {
    let start = Instant::now();
    let left = ym_residual(&build_frame(Side::Left), 1000, 1);
    let right = ym_residual(&build_frame(Side::Right), 1000, 1);
    let t = start.elapsed();
    outcome(
        left < 1e-8 && right > 0.1 && within_budget(t, Duration::from_secs(10)),
        format!("left {left:e} (< 1e-8), right {right} (> 0.1), {t:.2?} (< 10 s)"),
    )
}

fn c3_helicity() -> Outcome {
    let frame = build_frame(Side::Left);
    let mut rng = stream_rng(3, 0);
    let mut err: f64 = 0.0;
    for _ in 0..1000 {
        let x = haar_point(&mut rng);
        err = err.max(max_abs(cs_density(&frame, &x).helicity.map(|h| h + 2.0)));
    }
    for lambda in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let f = build_lambda_frame(lambda, true).unwrap();
        let (h, _) = cs_density_lambda(&f).unwrap();
        let (direct, _) = cs_density_at(&f, &f.reference_point());
        err = err.max((h + 2.0).abs()).max(max_abs(direct.map(|v| v + 2.0)));
    }
    outcome(err <= 1e-12, format!("max |h + 2| = {err:e} over S^3 points and lambda in {{0.5,1,2,4,8}}"))
}

fn c4_triple_term() -> Outcome {
    let products: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&l| cs_density_lambda(&build_lambda_frame(l, true).unwrap()).unwrap().1 * l)
        .collect();
    let mean = products.iter().sum::<f64>() / products.len() as f64;
    let spread = max_abs(products.iter().map(|p| (p - mean) / mean));
    outcome(spread <= 1e-10, format!("t*lambda = {products:?}, relative spread {spread:e} (<= 1e-10)"))
}

fn c5_rescale() -> Outcome {
    let frame = build_lambda_frame(1.0, true).unwrap();
    let mut err: f64 = 0.0;
    for l in [0.5, 2.0, 3.0] {
        let r = rescale_check(&frame, l).unwrap();
        err = err.max(((r.volume_ratio - l * l * l) / (l * l * l)).abs()).max((r.term2_density_ratio - 1.0).abs());
    }
    outcome(err <= 1e-12, format!("max relative error {err:e} (<= 1e-12) for l in {{0.5,2,3}}"))
}

fn c6_sectional() -> Outcome {
    let unit = sectional_profile(1.0).unwrap();
    let unit_err = max_abs([unit.horizontal + 1.0, unit.vertical1 + 1.0, unit.vertical2 + 1.0]);
    let grid = [1.0, 2.0, 4.0, 8.0, 16.0];
    let horizontal: Vec<f64> = grid.iter().map(|&l| sectional_profile(l).unwrap().horizontal.abs()).collect();
    let slope = ScalingFit::fit(&grid, &horizontal).unwrap().slope;
    let u = Vector3::new(0.1, 0.9, 0.4);
    let mut gap: f64 = 0.0;
    for &l in &grid {
        let frame = build_lambda_frame(l, true).unwrap();
        let chart = SphereChart { scales: [1.0, 1.0 / l, 1.0 / l] };
        let pairs = [
            (milnor_curvatures(&frame.spec).unwrap(), fd_frame_curvatures(&chart, &frame.spec.g, &u, FD_STEP)),
            {
                let flow = frame.geodesic_flow_spec();
                (milnor_curvatures(&flow).unwrap(), fd_frame_curvatures(&UnitTangentChart, &flow.g, &u, FD_STEP))
            },
        ];
        for (exact, fd) in pairs {
            gap = gap.max(max_abs((0..3).map(|p| (fd[p] - exact[p]) / exact[p].abs().max(1.0))));
        }
    }
    let (a, b, c) = (unit_err <= 1e-10, (slope + 2.0 / 3.0).abs() <= 0.01, gap <= 1e-6);
    let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
    outcome(
        a && b && c,
        format!(
            "(a) lambda=1 curvatures ({}, {}, {}) vs -1: {} | (b) horizontal slope {slope} vs -2/3 +- 0.01: {} | (c) oracle gap {gap:e} (<= 1e-6): {}",
            unit.vertical1,
            unit.vertical2,
            unit.horizontal,
            mark(a),
            mark(b),
            mark(c)
        ),
    )
}

fn c7_linking() -> Outcome {
    let start = Instant::now();
    let pairs = benchmark_pairs(50, 400, 7);
    let (mut int_err, mut mismatches, mut wrong) = (0.0f64, 0, 0);
    for p in &pairs {
        let g = gauss_linking(&p.curves.0, &p.curves.1).unwrap();
        let x = crossing_linking(&p.curves.0, &p.curves.1, &mut stream_rng(7, 1 + p.index as u64)).unwrap();
        int_err = int_err.max((g - g.round()).abs());
        mismatches += usize::from(g.round() as i64 != x);
        wrong += usize::from(x != p.expected);
    }
    let hopf_ok = pairs.iter().any(|p| p.kind == PairKind::HopfRight && p.expected == 1);
    let crossing_ok = pairs.iter().any(|p| p.kind == PairKind::ProjectionCrossing && p.expected == -1);
    let t = start.elapsed();
    outcome(
        int_err < 1e-3 && mismatches == 0 && wrong == 0 && hopf_ok && crossing_ok && within_budget(t, Duration::from_secs(30)),
        format!(
            "50 pairs: max integer error {int_err:e}, oracle mismatches {mismatches}, wrong values {wrong}, hopf->1 and crossing->-1 present: {}, {t:.2?} (< 30 s)",
            hopf_ok && crossing_ok
        ),
    )
}

fn c8_asymptotic_hopf() -> Outcome {
    let start = Instant::now();
    let a = build_frame(Side::Left).fields[0].clone();
    let b = a.scale(-2.0);
    let vol = unit_sphere_volume();
    let hel = helicity_integral(&a, &b, &Domain::Sphere { radius: 1.0 }, 20_000, 8, true).unwrap();
    let hopf = asymptotic_hopf(&b, 500, 4.0 * PI, 1e-2, 8).unwrap();
    let target = hel.value / (vol * vol);
    let stderr = (hopf.stderr.powi(2) + (hel.stderr / (vol * vol)).powi(2)).sqrt();
    // The estimate can be exact with zero spread; a rounding-level floor
    // keeps the comparison meaningful.
    let tol = (2.0 * stderr).max(1e-9);
    let t = start.elapsed();
    outcome(
        (hopf.estimate - target).abs() <= tol && within_budget(t, Duration::from_secs(300)),
        format!(
            "estimate {} +- {:e} vs helicity/vol^2 {} (tolerance {tol:e}), closure failures {}, {t:.2?} (< 5 min)",
            hopf.estimate, hopf.stderr, target, hopf.closure_failures
        ),
    )
}

fn c9_scaling() -> Outcome {
    let start = Instant::now();
    let r = scaling_scan(&McParams::default()).unwrap();
    let t = start.elapsed();
    let checks = [
        ("triangle", r.triangle_fit.slope, -1.0, 0.15),
        ("extrapolate", r.extrapolate_fit.slope, -1.0 / 3.0, 0.1),
        ("square", r.square_fit.slope, -2.0 / 3.0, 0.15),
        ("pair", r.pair_fit.slope, 0.0, 0.1),
        ("parallelism", r.parallelism_fit.slope, -1.0 / 3.0, 0.05),
    ];
    let pass = checks.iter().all(|&(_, s, target, tol)| (s - target).abs() <= tol);
    let detail: Vec<String> =
        checks.iter().map(|&(name, s, target, tol)| format!("{name} {s:.4} ({target:.4} +- {tol})")).collect();
    outcome(pass && within_budget(t, Duration::from_secs(600)), format!("{}, {t:.2?} (< 10 min)", detail.join(", ")))
}

fn c10_m5() -> Outcome {
    let dir = Vector3::new(0.31, -0.52, 0.79);
    let (mut hopf_bad, mut mixed_bad) = (0, 0);
    for seed in 0..10 {
        hopf_bad += usize::from(m5_quintuple_estimate(&hopf_quintuple(seed, 300), &dir).unwrap().estimate != 10.0);
        mixed_bad += usize::from(m5_quintuple_estimate(&mixed_quintuple(seed, 300), &dir).unwrap().estimate != 0.0);
    }
    outcome(
        hopf_bad == 0 && mixed_bad == 0,
        format!("10 Hopf quintuples not giving 10: {hopf_bad}; 10 quintuples with an unlinked pair not giving 0: {mixed_bad}"),
    )
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c11_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.toml");
    std::fs::write(&config, "n_pairs = 100\nn_chords = 10000\nn_quintuples = 3\nt = 3.141592653589793\nn_quad = 4096\n")
        .unwrap();
    let verbs = ["verify-s3", "verify-hyperbolic", "linking", "hopf-asymptotic", "triangle-scan", "alpha-scaling", "m5-estimate"];
    let mut differing = Vec::new();
    let mut csvs = 0;
    for verb in verbs {
        let mut outputs = Vec::new();
        for workers in ["1", "8"] {
            let out = tmp.path().join(format!("{verb}-{workers}"));
            let status = Command::new(env!("CARGO_BIN_EXE_curlwave"))
                .args([verb, "--config", config.to_str().unwrap(), "--seed", "11", "--workers", workers, "--out"])
                .arg(&out)
                .output()
                .unwrap()
                .status;
            assert!(matches!(status.code(), Some(0 | 2)), "{verb} exited with {status}");
            outputs.push(csv_files(&out));
        }
        csvs += outputs[0].len();
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(verb);
        }
    }
    outcome(differing.is_empty(), format!("{csvs} CSV files over 7 verbs, byte-identical at --workers 1 and 8; differing verbs: {differing:?}"))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 11] = [
        ("1", "curl eigenrelations", c1_curl_eigenrelations),
        ("2", "Yang-Mills residual", c2_yang_mills),
        ("3", "helicity density", c3_helicity),
        ("4", "triple-term density times lambda constant", c4_triple_term),
        ("5", "rescale invariance", c5_rescale),
        ("6", "sectional curvatures", c6_sectional),
        ("7", "Gauss linking vs crossing oracle", c7_linking),
        ("8", "asymptotic Hopf invariant vs helicity", c8_asymptotic_hopf),
        ("9", "scaling exponents", c9_scaling),
        ("10", "quintuple estimator", c10_m5),
        ("11", "worker-count determinism", c11_determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        let o = check();
        println!("[{}] criterion {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(id);
        }
    }
    println!("acceptance: {}/{} criteria pass; failing: {failed:?}", criteria.len() - failed.len(), criteria.len());
    if failed != KNOWN_UNATTAINABLE {
        println!("acceptance: failing set differs from the known unattainable set {KNOWN_UNATTAINABLE:?}");
        std::process::exit(1);
    }
    println!("acceptance: failing criteria are exactly the known unattainable ones {KNOWN_UNATTAINABLE:?}");
}
