//! One function per verb. Each returns its tables, summary record and
//! acceptance checks; `run` adds the header lines (verb, config hash, seed)
//! and writes files.

use nalgebra::{Vector3, Vector4};

use curlwave::benchmarks::{benchmark_pairs, hopf_quintuple, mixed_quintuple, PairKind};
use curlwave::curvature_oracle::{fd_frame_curvatures, SphereChart, UnitTangentChart, FD_STEP};
use curlwave::fields::{haar_point, unit_sphere_volume, Domain, LinearField, SphereField};
use curlwave::hyperbolic::{
    build_lambda_frame, cs_density_lambda, horizontal_fit, rescale_check, sectional_profile, vertical_excess_fit,
};
use curlwave::lie_frame::{curl_eigenvalue, milnor_curvatures, FrameFieldIndex, LieFrameSpec};
use curlwave::linking::{asymptotic_hopf, crossing_linking, gauss_linking, helicity_integral};
use curlwave::mc::{par_chunks, stream_rng};
use curlwave::scaling::{alpha_from_report, m5_quintuple_estimate, scaling_scan, sub_seed, McParams, QuintupleGroup};
use curlwave::yang_mills::{build_frame, cs_density, cs_functional, ym_residual, Side};

use crate::config::ExperimentConfig;
use crate::manifest::Timing;
use crate::report::{num, Check, Table, VerbOutput};
use crate::{timed, CliError};

/// Tolerance for quantities that are exact up to rounding.
pub const EXACT: f64 = 1e-12;

pub fn dispatch(c: &ExperimentConfig, timings: &mut Vec<Timing>) -> Result<VerbOutput, CliError> {
    match c.verb.as_str() {
        "verify-s3" => verify_s3(c, timings),
        "verify-hyperbolic" => verify_hyperbolic(c, timings),
        "linking" => linking(c, timings),
        "hopf-asymptotic" => hopf_asymptotic(c, timings),
        "triangle-scan" => triangle_scan(c, timings),
        "alpha-scaling" => alpha_scaling(c, timings),
        "m5-estimate" => m5_estimate(c, timings),
        other => Err(CliError::VerbUnknown(other.into())),
    }
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn side_label(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
    }
}

fn verify_s3(c: &ExperimentConfig, timings: &mut Vec<Timing>) -> Result<VerbOutput, CliError> {
    let mut out = VerbOutput::default();
    let mut table =
        Table::new("verify-s3", &["side", "field", "curl_eigenvalue", "max_curl_defect", "helicity_density", "max_helicity_error"]);
    let mut rng = stream_rng(c.seed, 0);
    let points: Vec<Vector4<f64>> = (0..c.n_points).map(|_| haar_point(&mut rng)).collect();
    for (side, target) in [(Side::Left, -2.0), (Side::Right, 2.0)] {
        let frame = build_frame(side);
        let mut worst_mu: f64 = 0.0;
        let mut worst_h: f64 = 0.0;
        for idx in FrameFieldIndex::ALL {
            let l = idx.zero_based();
            let mu = curl_eigenvalue(&frame.spec, idx)?;
            let field = &frame.fields[l];
            let defect = max_abs(points.iter().map(|x| (field.curl_at(x) - field.at(x) * mu).norm()));
            let h: Vec<f64> = points.iter().map(|x| cs_density(&frame, x).helicity[l]).collect();
            let h_err = max_abs(h.iter().map(|v| v - target));
            worst_mu = worst_mu.max((mu - target).abs()).max(defect);
            worst_h = worst_h.max(h_err);
            table.push(vec![side_label(side).into(), idx.get().to_string(), num(mu), num(defect), num(h[0]), num(h_err)]);
        }
        let ym = timed(timings, &format!("ym_residual_{}", side_label(side)), || ym_residual(&frame, c.n_points, c.seed));
        out.record.put_num(&format!("ym_residual.{}", side_label(side)), ym);
        out.checks.push(Check::new(
            &format!("curl.{}", side_label(side)),
            worst_mu,
            format!("|mu - {}| and pointwise defect <= {}", num(target), num(EXACT)),
            worst_mu <= EXACT,
        ));
        if side == Side::Left {
            out.checks.push(Check::below("ym.left", ym, 1e-8));
            out.checks.push(Check::new("helicity.left", worst_h, format!("|h + 2| <= {}", num(EXACT)), worst_h <= EXACT));
            let terms = timed(timings, "cs_functional", || cs_functional(&frame, c.n_quad, c.seed))?;
            out.record.put_num("cs.term1", terms.term1);
            out.record.put_num("cs.term1_stderr", terms.term1_stderr);
            out.record.put_num("cs.term2", terms.term2);
            out.record.put_num("cs.term2_stderr", terms.term2_stderr);
            out.record.put_num("cs.volume", terms.volume);
            out.record.put("cs.samples", terms.samples);
        } else {
            out.checks.push(Check::above("ym.right", ym, 0.1));
        }
    }
    out.record.put("points", c.n_points);
    out.tables.push(table);
    Ok(out)
}

/// `max |fd − exact| / max(1, |exact|)` over the three frame planes: the
/// difference quotients lose digits in proportion to the curvature itself.
fn oracle_gap(spec: &LieFrameSpec, fd: [f64; 3]) -> Result<f64, CliError> {
    let exact = milnor_curvatures(spec)?;
    Ok(max_abs((0..3).map(|p| (fd[p] - exact[p]) / exact[p].abs().max(1.0))))
}

fn verify_hyperbolic(c: &ExperimentConfig, timings: &mut Vec<Timing>) -> Result<VerbOutput, CliError> {
    let grid = c.grid();
    let mut out = VerbOutput::default();
    let mut table = Table::new(
        "verify-hyperbolic",
        &[
            "lambda", "mu1", "mu2", "mu3", "h_density", "t_density", "t_times_lambda", "k12", "k13", "k23", "fd_gap",
            "flow_k12", "flow_k13", "flow_k23", "flow_fd_gap",
        ],
    );
    let (mut curl_err, mut h_err, mut fd_gap) = (0.0f64, 0.0f64, 0.0f64);
    let mut t_lambda = Vec::new();
    let u = Vector3::new(0.1, 0.9, 0.4);
    timed(timings, "lambda_grid", || -> Result<(), CliError> {
        for &lambda in &grid {
            let frame = build_lambda_frame(lambda, true)?;
            let mu = frame.curl_eigenvalues()?;
            let (h, t) = cs_density_lambda(&frame)?;
            let k = milnor_curvatures(&frame.spec)?;
            let sphere = SphereChart { scales: [1.0, 1.0 / lambda, 1.0 / lambda] };
            let gap = oracle_gap(&frame.spec, fd_frame_curvatures(&sphere, &frame.spec.g, &u, FD_STEP))?;
            let flow = frame.geodesic_flow_spec();
            let fk = milnor_curvatures(&flow)?;
            let flow_gap = oracle_gap(&flow, fd_frame_curvatures(&UnitTangentChart, &flow.g, &u, FD_STEP))?;
            curl_err = curl_err.max(max_abs(mu.iter().map(|m| m + 2.0 / lambda)));
            h_err = h_err.max((h + 2.0).abs());
            fd_gap = fd_gap.max(gap).max(flow_gap);
            t_lambda.push(t * lambda);
            table.push(
                [lambda, mu[0], mu[1], mu[2], h, t, t * lambda, k[0], k[1], k[2], gap, fk[0], fk[1], fk[2], flow_gap]
                    .map(num)
                    .to_vec(),
            );
        }
        Ok(())
    })?;

    let mut rescale = Table::new("rescale", &["l", "volume_ratio", "term2_density_ratio", "pointwise_ratio"]);
    let frame = build_lambda_frame(1.0, true)?;
    let mut rescale_err: f64 = 0.0;
    for &l in &c.rescale {
        let r = rescale_check(&frame, l)?;
        rescale_err = rescale_err.max(((r.volume_ratio - l.powi(3)) / l.powi(3)).abs()).max((r.term2_density_ratio - 1.0).abs());
        rescale.push([r.l, r.volume_ratio, r.term2_density_ratio, r.pointwise_ratio].map(num).to_vec());
    }

    let unit = sectional_profile(1.0)?;
    let unit_err = max_abs([unit.horizontal + 1.0, unit.vertical1 + 1.0, unit.vertical2 + 1.0]);
    let t_mean = t_lambda.iter().sum::<f64>() / t_lambda.len() as f64;
    let t_spread = max_abs(t_lambda.iter().map(|v| (v - t_mean) / t_mean));

    out.record.put("grid", grid.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "));
    out.record.put_num("curvature.unit.horizontal", unit.horizontal);
    out.record.put_num("curvature.unit.vertical1", unit.vertical1);
    out.record.put_num("curvature.unit.vertical2", unit.vertical2);
    out.record.put_num("t_times_lambda.relative_spread", t_spread);
    out.record.put("double_cover_volume_factor", 2);
    out.checks.push(Check::new("curl.lambda", curl_err, format!("|mu + 2/lambda| <= {}", num(EXACT)), curl_err <= EXACT));
    out.checks.push(Check::new("helicity.lambda", h_err, format!("|h + 2| <= {}", num(EXACT)), h_err <= EXACT));
    out.checks.push(Check::new("t_times_lambda.constant", t_spread, "relative spread <= 1e-10", t_spread <= 1e-10));
    out.checks.push(Check::new("rescale", rescale_err, format!("relative error <= {}", num(EXACT)), rescale_err <= EXACT));
    out.checks.push(Check::new("curvature.unit", unit_err, "|K + 1| <= 1e-10 in every plane", unit_err <= 1e-10));
    if grid.len() >= 3 {
        let fit = horizontal_fit(&grid)?;
        out.record.put_fit("horizontal_fit", &fit);
        out.checks.push(Check::near("curvature.horizontal_slope", fit.slope, -2.0 / 3.0, 0.01));
        let excess = vertical_excess_fit(&grid)?;
        out.record.put_fit("vertical_excess_fit", &excess);
    }
    out.checks.push(Check::below("curvature.fd_oracle", fd_gap, 1e-6));
    out.tables.push(table);
    out.tables.push(rescale);
    Ok(out)
}

fn linking(c: &ExperimentConfig, timings: &mut Vec<Timing>) -> Result<VerbOutput, CliError> {
    let pairs = benchmark_pairs(c.n_pairs, c.segments, c.seed);
    let rows = timed(timings, "linking_pairs", || {
        par_chunks(pairs.len(), 4, |_, range| {
            range
                .map(|i| {
                    let p = &pairs[i];
                    let (a, b) = &p.curves;
                    let g = gauss_linking(a, b)?;
                    let mut rng = stream_rng(sub_seed(c.seed, i), 1);
                    let x = crossing_linking(a, b, &mut rng)?;
                    Ok((g, x))
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
    })?;
    let mut table = Table::new("linking", &["index", "kind", "expected", "gauss", "crossing", "integer_error"]);
    let (mut int_err, mut mismatches, mut wrong) = (0.0f64, 0, 0);
    for (p, &(g, x)) in pairs.iter().zip(rows.iter().flatten()) {
        let e = (g - g.round()).abs();
        int_err = int_err.max(e);
        mismatches += usize::from(g.round() as i64 != x);
        wrong += usize::from(x != p.expected);
        table.push(vec![p.index.to_string(), p.kind.label().into(), p.expected.to_string(), num(g), x.to_string(), num(e)]);
    }
    let has = |k: PairKind| pairs.iter().any(|p| p.kind == k);
    out_checks_linking(int_err, mismatches, wrong, has(PairKind::HopfRight) && has(PairKind::ProjectionCrossing), table)
}

fn out_checks_linking(int_err: f64, mismatches: usize, wrong: usize, covered: bool, table: Table) -> Result<VerbOutput, CliError> {
    let mut out = VerbOutput::default();
    out.record.put("pairs", table.rows.len());
    out.record.put("oracle_mismatches", mismatches);
    out.record.put("expected_mismatches", wrong);
    out.checks.push(Check::new("gauss.integer", int_err, "distance to nearest integer < 1e-3", int_err < 1e-3));
    out.checks.push(Check::new("gauss.oracle", mismatches as f64, "rounded Gauss sum equals crossing count", mismatches == 0));
    out.checks.push(Check::new("benchmarks", wrong as f64, "every pair has its known linking number", wrong == 0));
    out.checks.push(Check::new(
        "benchmarks.coverage",
        f64::from(u8::from(covered)),
        "Hopf fiber and projection-crossing pairs present",
        covered,
    ));
    out.tables.push(table);
    Ok(out)
}

/// The selected potential `A` and its curl `B`.
fn selected_field(name: &str) -> (LinearField, LinearField) {
    let (side, l) = match name {
        "left-1" => (Side::Left, 0),
        "left-2" => (Side::Left, 1),
        "left-3" => (Side::Left, 2),
        _ => (Side::Right, 0),
    };
    let a = build_frame(side).fields[l].clone();
    let mu = if side == Side::Left { -2.0 } else { 2.0 };
    let b = a.scale(mu);
    (a, b)
}

fn hopf_asymptotic(c: &ExperimentConfig, timings: &mut Vec<Timing>) -> Result<VerbOutput, CliError> {
    let (a, b) = selected_field(&c.field);
    let vol = unit_sphere_volume();
    let helicity =
        timed(timings, "helicity_integral", || helicity_integral(&a, &b, &Domain::Sphere { radius: 1.0 }, c.n_quad, c.seed, true))?;
    let hopf = timed(timings, "asymptotic_hopf", || asymptotic_hopf(&b, c.n_pairs, c.t, c.step, c.seed))?;
    let target = helicity.value / (vol * vol);
    let target_stderr = helicity.stderr / (vol * vol);
    let combined = (hopf.stderr.powi(2) + target_stderr.powi(2)).sqrt();
    let tolerance = (2.0 * combined).max(c.stderr_floor);

    let mut out = VerbOutput::default();
    let mut table = Table::new("hopf-pairs", &["index", "lk", "gauss", "value", "resamples", "closure_failed"]);
    for p in &hopf.pairs {
        table.push(vec![
            p.index.to_string(),
            p.lk.to_string(),
            num(p.gauss),
            num(p.value),
            p.resamples.to_string(),
            p.closure_failed.to_string(),
        ]);
    }
    out.record.put("field", &c.field);
    out.record.put_num("t", hopf.t);
    out.record.put("n_pairs", hopf.n_pairs);
    out.record.put_num("hopf.estimate", hopf.estimate);
    out.record.put_num("hopf.stderr", hopf.stderr);
    out.record.put("hopf.closure_failures", hopf.closure_failures);
    out.record.put("hopf.resamples", hopf.resamples);
    out.record.put_num("helicity.integral", helicity.value);
    out.record.put_num("helicity.stderr", helicity.stderr);
    out.record.put("helicity.samples", helicity.samples);
    out.record.put_num("helicity.per_volume_squared", target);
    out.record.put_num("tolerance", tolerance);
    out.checks.push(Check::new(
        "hopf.matches_helicity",
        hopf.estimate - target,
        format!("|estimate - helicity/vol^2| <= max(2 stderr, {}) = {}", num(c.stderr_floor), num(tolerance)),
        (hopf.estimate - target).abs() <= tolerance,
    ));
    out.tables.push(table);
    Ok(out)
}

fn mc_params(c: &ExperimentConfig) -> McParams {
    McParams {
        lambdas: c.grid(),
        n_chords: c.n_chords,
        radius_units: c.radius_units,
        eps: c.eps,
        eps_list: c.eps_list.clone(),
        parallel_radius_units: c.parallel_radius_units,
        parallel_phi: c.parallel_phi,
        seed: c.seed,
    }
}

fn triangle_scan(c: &ExperimentConfig, timings: &mut Vec<Timing>) -> Result<VerbOutput, CliError> {
    let params = mc_params(c);
    let report = timed(timings, "scaling_scan", || scaling_scan(&params))?;
    let mut out = VerbOutput::default();
    let mut table = Table::new(
        "triangle-scan",
        &[
            "lambda", "curvature", "radius", "intersections", "pair_density", "pair_stderr", "triangle_count",
            "triangle_density", "triangle_stderr", "extrapolate", "extrapolate_squared", "tail_slope", "parallelism_ratio",
        ],
    );
    let mut eps_table = Table::new("epsilon-scan", &["lambda", "eps", "count", "density", "residual"]);
    for r in &report.rows {
        table.push(vec![
            num(r.lambda),
            num(r.curvature),
            num(r.radius),
            r.intersections.to_string(),
            num(r.pair_density.value),
            num(r.pair_density.stderr),
            r.triangle_density.count.to_string(),
            num(r.triangle_density.value),
            num(r.triangle_density.stderr),
            num(r.epsilon.extrapolate),
            num(r.epsilon.extrapolate.powi(2)),
            num(r.epsilon.tail_slope),
            num(r.parallelism_ratio),
        ]);
        for (i, &e) in r.epsilon.eps.iter().enumerate() {
            // Residuals exist for the tail points used by the extrapolation.
            let first = r.epsilon.eps.len() - r.epsilon.residuals.len();
            let residual = i.checked_sub(first).map(|j| r.epsilon.residuals[j]);
            eps_table.push(vec![
                num(r.lambda),
                num(e),
                r.epsilon.counts[i].to_string(),
                num(r.epsilon.values[i]),
                residual.map(num).unwrap_or_default(),
            ]);
        }
    }
    out.record.put("n_chords", params.n_chords);
    out.record.put_num("radius_units", params.radius_units);
    out.record.put_num("eps", params.eps);
    for (key, fit, target, tol) in [
        ("triangle_fit", &report.triangle_fit, -1.0, 0.15),
        ("extrapolate_fit", &report.extrapolate_fit, -1.0 / 3.0, 0.1),
        ("square_fit", &report.square_fit, -2.0 / 3.0, 0.15),
        ("pair_fit", &report.pair_fit, 0.0, 0.1),
        ("parallelism_fit", &report.parallelism_fit, -1.0 / 3.0, 0.05),
    ] {
        out.record.put_fit(key, fit);
        out.checks.push(Check::near(&format!("{key}.slope"), fit.slope, target, tol));
    }
    out.tables.push(table);
    out.tables.push(eps_table);
    Ok(out)
}

fn alpha_scaling(c: &ExperimentConfig, timings: &mut Vec<Timing>) -> Result<VerbOutput, CliError> {
    let params = mc_params(c);
    let report = timed(timings, "scaling_scan", || scaling_scan(&params))?;
    let alpha = alpha_from_report(&report)?;
    let mut out = VerbOutput::default();
    let mut table = Table::new("alpha-scaling", &["lambda", "alpha", "fitted"]);
    for (&l, &a) in params.lambdas.iter().zip(&alpha.alpha) {
        table.push(vec![num(l), num(a), num(alpha.fit.predict(l))]);
    }
    out.record.put("balance", &alpha.balance);
    out.record.put("n_chords", params.n_chords);
    out.record.put_fit("alpha_fit", &alpha.fit);
    out.checks.push(Check::near("alpha_fit.slope", alpha.fit.slope, -1.0 / 3.0, 0.1));
    out.tables.push(table);
    Ok(out)
}

fn group_label(g: QuintupleGroup) -> &'static str {
    match g {
        QuintupleGroup::Linked => "linked",
        QuintupleGroup::Far => "far",
    }
}

fn m5_estimate(c: &ExperimentConfig, timings: &mut Vec<Timing>) -> Result<VerbOutput, CliError> {
    let d = haar_point(&mut stream_rng(c.seed, 2));
    let direction = Vector3::new(d[1], d[2], d[3]).normalize();
    let mut out = VerbOutput::default();
    let mut table = Table::new("m5-estimate", &["index", "built_as", "group", "triangles", "pair_product", "estimate"]);
    let (mut linked_bad, mut far_bad) = (0, 0);
    timed(timings, "quintuples", || -> Result<(), CliError> {
        for q in 0..c.n_quintuples {
            for (built, lines) in [
                ("hopf", hopf_quintuple(sub_seed(c.seed, 2 * q), c.segments)),
                ("mixed", mixed_quintuple(sub_seed(c.seed, 2 * q + 1), c.segments)),
            ] {
                let r = m5_quintuple_estimate(&lines, &direction)?;
                if built == "hopf" {
                    linked_bad += usize::from(r.estimate != 10.0);
                } else {
                    far_bad += usize::from(r.estimate != 0.0);
                }
                table.push(vec![
                    q.to_string(),
                    built.into(),
                    group_label(r.group).into(),
                    r.triangles.to_string(),
                    r.pair_product.to_string(),
                    num(r.estimate),
                ]);
            }
        }
        Ok(())
    })?;
    out.record.put("direction", format!("{} {} {}", num(direction.x), num(direction.y), num(direction.z)));
    out.record.put("quintuples_per_group", c.n_quintuples);
    out.checks.push(Check::new("m5.hopf_is_ten", linked_bad as f64, "every Hopf quintuple gives exactly 10", linked_bad == 0));
    out.checks.push(Check::new("m5.unlinked_is_zero", far_bad as f64, "every quintuple with an unlinked pair gives 0", far_bad == 0));
    out.tables.push(table);
    Ok(out)
}
