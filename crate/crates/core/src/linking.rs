//! Field-line tracing on round spheres, closure, Gauss linking numbers of
//! polylines with a signed-crossing oracle, helicity quadrature, and the
//! asymptotic Hopf estimate.

use std::f64::consts::PI;

use nalgebra::{Vector3, Vector4};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{chart_curl, haar_point, Chart, Domain, SphereField};
use crate::mc::{par_chunks, stream_rng, Moments};
use crate::quaternion::Quaternion;
use crate::yang_mills::{QuadratureError, MIN_QUADRATURE_SAMPLES};

/// Largest accepted integration step.
pub const MAX_STEP: f64 = 1e-2;
/// Distance at which a traced line counts as having returned to its start.
pub const CLOSURE_TOLERANCE: f64 = 1e-6;
/// Curves closer than this (in chart coordinates) are rejected.
pub const MIN_CURVE_DISTANCE: f64 = 1e-4;
/// Largest endpoint gap that [`close_curve`] bridges, as a fraction of the
/// curve's diameter.
pub const MAX_GAP_FRACTION: f64 = 0.1;
/// Random projection directions tried before giving up.
pub const PROJECTION_RETRIES: usize = 10;
/// Largest accepted distance of a Gauss integral from the nearest integer.
pub const INTEGER_TOLERANCE: f64 = 1e-3;
pub const MIN_PAIRS: usize = 100;
/// Largest accepted fraction of failed closures in [`asymptotic_hopf`].
pub const MAX_CLOSURE_FAILURE_RATE: f64 = 0.05;
/// Pairs per parallel work unit.
pub const PAIR_CHUNK: usize = 4;
/// Resampling attempts for a pair whose lines come too close.
const PAIR_RESAMPLES: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkingError {
    #[error("step {0} exceeds the bound {MAX_STEP}")]
    StepTooLarge(f64),
    #[error("trace time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("trace left both charts at step {0}")]
    ChartEscape(usize),
    #[error("closure gap {gap:e} exceeds 10% of the curve diameter {diameter:e}")]
    GapTooLarge { gap: f64, diameter: f64 },
    #[error("curves come within {0:e} of each other")]
    CurvesTooClose(f64),
    #[error("no generic projection direction found after {PROJECTION_RETRIES} tries")]
    DegenerateProjection,
    #[error("linking needs closed curves")]
    NotClosed,
    #[error("curves live in different spaces")]
    MixedSpaces,
    #[error("Gauss integral {0} is not within 1e-3 of an integer")]
    NonIntegerLinking(f64),
    #[error("{got} pairs requested, at least {min} needed")]
    TooFewPairs { got: usize, min: usize },
    #[error("{failures} of {samples} closures failed (limit 5%)")]
    ClosureFailures { failures: usize, samples: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Where a curve lives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Space {
    Euclidean,
    Sphere { radius: f64 },
}

/// A point in one of the charts of [`Chart`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: Chart,
    pub u: Vector3<f64>,
}

/// An oriented polyline, open or closed. A closed line repeats its first
/// point at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldLine {
    pub space: Space,
    pub points: Vec<ChartPoint>,
    pub closed: bool,
    /// Trace time, or the detected period for a closed trace.
    pub period_or_t: f64,
    /// Steps at which the radius drifted and was projected back.
    pub renormalizations: usize,
}

impl FieldLine {
    pub fn euclidean(points: Vec<Vector3<f64>>, closed: bool) -> Self {
        let mut points: Vec<ChartPoint> = points.into_iter().map(|u| ChartPoint { chart: Chart::Euclidean, u }).collect();
        if closed && points.len() > 1 && points.first() != points.last() {
            points.push(points[0]);
        }
        Self { space: Space::Euclidean, points, closed, period_or_t: 0.0, renormalizations: 0 }
    }

    /// Points on the sphere of radius `radius` given in `R⁴`.
    pub fn on_sphere(points: &[Vector4<f64>], radius: f64, closed: bool) -> Self {
        let mut pts: Vec<ChartPoint> = points.iter().map(|x| sphere_point(x, radius)).collect();
        if closed && pts.len() > 1 && pts.first() != pts.last() {
            pts.push(pts[0]);
        }
        Self { space: Space::Sphere { radius }, points: pts, closed, period_or_t: 0.0, renormalizations: 0 }
    }

    /// Points in the ambient space (`R³` or `R⁴`, the former padded with a
    /// leading zero).
    pub fn ambient(&self) -> Vec<Vector4<f64>> {
        self.points.iter().map(|p| ambient_point(p, self.space)).collect()
    }

    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.points.reverse();
        out
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Polyline length in the ambient space.
    pub fn arc_length(&self) -> f64 {
        self.ambient().windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

fn sphere_point(x: &Vector4<f64>, radius: f64) -> ChartPoint {
    let unit = x / radius;
    let chart = Chart::for_point(&unit);
    ChartPoint { chart, u: chart.project(&unit) }
}

fn ambient_point(p: &ChartPoint, space: Space) -> Vector4<f64> {
    match space {
        Space::Euclidean => Vector4::new(0.0, p.u[0], p.u[1], p.u[2]),
        Space::Sphere { radius } => p.chart.lift(&p.u) * radius,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Stop at the first return to the start point and mark the line closed.
    pub detect_period: bool,
}

fn rk4<F: SphereField + ?Sized>(field: &F, x: &Vector4<f64>, h: f64) -> Vector4<f64> {
    let k1 = field.at(x);
    let k2 = field.at(&(x + k1 * (h / 2.0)));
    let k3 = field.at(&(x + k2 * (h / 2.0)));
    let k4 = field.at(&(x + k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Fixed-step fourth-order Runge-Kutta on the sphere through `x0`, with
/// the radius restored after every step.
pub fn trace_field_line<F: SphereField + ?Sized>(
    field: &F,
    x0: &Vector4<f64>,
    t: f64,
    h: f64,
    options: TraceOptions,
) -> Result<FieldLine, LinkingError> {
    if !(h > 0.0 && h <= MAX_STEP) {
        return Err(LinkingError::StepTooLarge(h));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(LinkingError::NonPositiveTime(t));
    }
    let radius = x0.norm();
    let space = Space::Sphere { radius };
    if field.at(x0).norm() == 0.0 {
        return Ok(FieldLine { space, points: vec![sphere_point(x0, radius)], closed: false, period_or_t: t, renormalizations: 0 });
    }
    let n = (t / h).ceil() as usize;
    let step = t / n as f64;
    let step_length = step * field.at(x0).norm();
    let mut xs = Vec::with_capacity(n + 1);
    xs.push(*x0);
    let mut renormalizations = 0;
    let mut left_start = false;
    let mut prev_d = 0.0;
    for k in 1..=n {
        let raw = rk4(field, &xs[k - 1], step);
        if !raw.iter().all(|v| v.is_finite()) {
            return Err(LinkingError::ChartEscape(k));
        }
        let r = raw.norm();
        let x = if r != radius {
            renormalizations += 1;
            raw * (radius / r)
        } else {
            raw
        };
        let d = (x - x0).norm();
        if options.detect_period {
            left_start |= d > 4.0 * step_length;
            if left_start && d > prev_d && prev_d < 1.5 * step_length && k >= 2 {
                // The return happened within the last two steps.
                let (tau, x_star) = refine_return(field, &xs[k - 2], x0, 2.0 * step, radius);
                if (x_star - x0).norm() < CLOSURE_TOLERANCE {
                    xs.truncate(k - 1);
                    xs.push(*x0);
                    let period = (k - 2) as f64 * step + tau;
                    let points = xs.iter().map(|x| sphere_point(x, radius)).collect();
                    return Ok(FieldLine { space, points, closed: true, period_or_t: period, renormalizations });
                }
            }
        }
        prev_d = d;
        xs.push(x);
    }
    let points = xs.iter().map(|x| sphere_point(x, radius)).collect();
    Ok(FieldLine { space, points, closed: false, period_or_t: t, renormalizations })
}

/// Golden-section search for the single-step time in `[0, span]` that lands
/// closest to `target`.
fn refine_return<F: SphereField + ?Sized>(
    field: &F,
    from: &Vector4<f64>,
    target: &Vector4<f64>,
    span: f64,
    radius: f64,
) -> (f64, Vector4<f64>) {
    let land = |tau: f64| {
        let x = rk4(field, from, tau);
        x * (radius / x.norm())
    };
    let gap = |tau: f64| (land(tau) - target).norm();
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, span);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if gap(c) < gap(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let tau = 0.5 * (a + b);
    (tau, land(tau))
}

/// Diameter estimate by a double sweep from the first point.
fn diameter(points: &[Vector4<f64>]) -> f64 {
    let far = |from: &Vector4<f64>| {
        points
            .iter()
            .map(|p| (p - from).norm())
            .enumerate()
            .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best })
    };
    let (i, _) = far(&points[0]);
    far(&points[i]).1
}

/// Closes an open line with a straight chord (projected back onto the
/// sphere for sphere curves), subdivided so no segment exceeds [`MAX_STEP`].
pub fn close_curve(line: &FieldLine) -> Result<FieldLine, LinkingError> {
    if line.closed {
        return Ok(line.clone());
    }
    let mut out = line.clone();
    out.closed = true;
    if line.points.len() < 2 {
        return Ok(out);
    }
    let pts = line.ambient();
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    let gap = (last - first).norm();
    let diam = diameter(&pts);
    if gap > MAX_GAP_FRACTION * diam {
        return Err(LinkingError::GapTooLarge { gap, diameter: diam });
    }
    let pieces = (gap / MAX_STEP).ceil().max(1.0) as usize;
    for s in 1..pieces {
        let p = last + (first - last) * (s as f64 / pieces as f64);
        out.points.push(match line.space {
            Space::Euclidean => ChartPoint { chart: Chart::Euclidean, u: Vector3::new(p[1], p[2], p[3]) },
            Space::Sphere { radius } => sphere_point(&(p * (radius / p.norm())), radius),
        });
    }
    out.points.push(line.points[0]);
    Ok(out)
}

/// Both curves in a common copy of `R³`, and the sign relating its standard
/// orientation to that of the curves' space.
fn project_pair(c1: &FieldLine, c2: &FieldLine) -> Result<(Vec<Vector3<f64>>, Vec<Vector3<f64>>, f64), LinkingError> {
    match (c1.space, c2.space) {
        (Space::Euclidean, Space::Euclidean) => {
            let strip = |c: &FieldLine| c.points.iter().map(|p| p.u).collect();
            Ok((strip(c1), strip(c2), 1.0))
        }
        (Space::Sphere { .. }, Space::Sphere { .. }) => {
            let a: Vec<_> = c1.ambient().iter().map(|x| x.normalize()).collect();
            let b: Vec<_> = c2.ambient().iter().map(|x| x.normalize()).collect();
            // Project from the coordinate pole farthest from both curves.
            let pole = (0..8)
                .map(|i| {
                    let mut p = Vector4::zeros();
                    p[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                    p
                })
                .max_by(|p, q| {
                    let clearance = |p: &Vector4<f64>| a.iter().chain(&b).map(|x| (x - p).norm()).fold(f64::INFINITY, f64::min);
                    clearance(p).total_cmp(&clearance(q))
                })
                .expect("eight candidates");
            // Left multiplication by −p̄ is orientation preserving and sends p to −1.
            let rot = (-Quaternion::from_vector(&pole).conj()).left_mul_matrix();
            let proj = |xs: &[Vector4<f64>]| xs.iter().map(|x| Chart::South.project(&(rot * x))).collect();
            Ok((proj(&a), proj(&b), Chart::South.orientation()))
        }
        _ => Err(LinkingError::MixedSpaces),
    }
}

/// Solid angle subtended by segment pair `(p1→p2, p3→p4)`; the sum over
/// all pairs of two closed polylines is `4π` times their linking number.
fn solid_angle(p1: &Vector3<f64>, p2: &Vector3<f64>, p3: &Vector3<f64>, p4: &Vector3<f64>) -> f64 {
    let r13 = p3 - p1;
    let r14 = p4 - p1;
    let r23 = p3 - p2;
    let r24 = p4 - p2;
    let unit = |v: Vector3<f64>| {
        let n = v.norm();
        if n > 0.0 {
            Some(v / n)
        } else {
            None
        }
    };
    let (Some(n1), Some(n2), Some(n3), Some(n4)) =
        (unit(r13.cross(&r14)), unit(r14.cross(&r24)), unit(r24.cross(&r23)), unit(r23.cross(&r13)))
    else {
        return 0.0;
    };
    let asin = |v: f64| v.clamp(-1.0, 1.0).asin();
    let omega = asin(n1.dot(&n2)) + asin(n2.dot(&n3)) + asin(n3.dot(&n4)) + asin(n4.dot(&n1));
    let orient = (p4 - p3).cross(&(p2 - p1)).dot(&r13);
    omega * orient.signum()
}

/// Closest distance between segments `p0→p1` and `q0→q1`.
fn segment_distance(p0: &Vector3<f64>, p1: &Vector3<f64>, q0: &Vector3<f64>, q1: &Vector3<f64>) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let (a, e, f) = (d1.norm_squared(), d2.norm_squared(), d2.dot(&r));
    let (s, t) = if a <= f64::EPSILON && e <= f64::EPSILON {
        (0.0, 0.0)
    } else if a <= f64::EPSILON {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// Gauss linking integral of two closed polylines, summed exactly segment
/// pair by segment pair.
pub fn gauss_linking(c1: &FieldLine, c2: &FieldLine) -> Result<f64, LinkingError> {
    if !c1.closed || !c2.closed {
        return Err(LinkingError::NotClosed);
    }
    let (a, b, sign) = project_pair(c1, c2)?;
    let mut total = 0.0;
    let mut closest = f64::INFINITY;
    for s in a.windows(2) {
        for t in b.windows(2) {
            closest = closest.min(segment_distance(&s[0], &s[1], &t[0], &t[1]));
            total += solid_angle(&s[0], &s[1], &t[0], &t[1]);
        }
    }
    if closest < MIN_CURVE_DISTANCE {
        return Err(LinkingError::CurvesTooClose(closest));
    }
    Ok(sign * total / (4.0 * PI))
}

/// Crossings between two projected curves: twice the signed sum, and the
/// unsigned count.
fn crossings(c1: &FieldLine, c2: &FieldLine, direction: &Vector3<f64>) -> Result<(i64, usize), LinkingError> {
    if !c1.closed || !c2.closed {
        return Err(LinkingError::NotClosed);
    }
    let (a, b, sign) = project_pair(c1, c2)?;
    let d = direction.normalize();
    let helper = if d.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = d.cross(&helper).normalize();
    let e2 = d.cross(&e1);
    let flat = |v: &Vector3<f64>| (v.dot(&e1), v.dot(&e2));
    const MARGIN: f64 = 1e-9;
    let mut twice = 0i64;
    let mut count = 0;
    for s in a.windows(2) {
        let (p0, p1) = (flat(&s[0]), flat(&s[1]));
        for t in b.windows(2) {
            let (q0, q1) = (flat(&t[0]), flat(&t[1]));
            let r = (p1.0 - p0.0, p1.1 - p0.1);
            let w = (q1.0 - q0.0, q1.1 - q0.1);
            let denom = r.0 * w.1 - r.1 * w.0;
            let qp = (q0.0 - p0.0, q0.1 - p0.1);
            let u = (qp.0 * w.1 - qp.1 * w.0) / denom;
            let v = (qp.0 * r.1 - qp.1 * r.0) / denom;
            if !(-MARGIN..=1.0 + MARGIN).contains(&u) || !(-MARGIN..=1.0 + MARGIN).contains(&v) {
                continue;
            }
            if denom.abs() < 1e-14 || u.abs() < MARGIN || (1.0 - u).abs() < MARGIN || v.abs() < MARGIN || (1.0 - v).abs() < MARGIN {
                return Err(LinkingError::DegenerateProjection);
            }
            let ta = s[1] - s[0];
            let tb = t[1] - t[0];
            let ha = d.dot(&(s[0] + ta * u));
            let hb = d.dot(&(t[0] + tb * v));
            let (over, under) = if ha > hb { (ta, tb) } else { (tb, ta) };
            twice += if d.dot(&over.cross(&under)) > 0.0 { 1 } else { -1 };
            count += 1;
        }
    }
    Ok((sign as i64 * twice, count))
}

/// Half the signed count of crossings between the two curves seen along
/// `direction`.
pub fn crossing_linking_oracle(c1: &FieldLine, c2: &FieldLine, direction: &Vector3<f64>) -> Result<i64, LinkingError> {
    Ok(crossings(c1, c2, direction)?.0 / 2)
}

/// Number of crossings between the two curves seen along `direction`.
pub fn crossing_count(c1: &FieldLine, c2: &FieldLine, direction: &Vector3<f64>) -> Result<usize, LinkingError> {
    Ok(crossings(c1, c2, direction)?.1)
}

/// [`crossing_linking_oracle`] along random directions, retrying degenerate
/// projections.
pub fn crossing_linking<R: Rng + ?Sized>(c1: &FieldLine, c2: &FieldLine, rng: &mut R) -> Result<i64, LinkingError> {
    for _ in 0..PROJECTION_RETRIES {
        let d = haar_point(rng);
        match crossing_linking_oracle(c1, c2, &Vector3::new(d[1], d[2], d[3])) {
            Err(LinkingError::DegenerateProjection) => continue,
            other => return other,
        }
    }
    Err(LinkingError::DegenerateProjection)
}

/// Pairwise linking numbers of a tuple of closed curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingMatrix {
    pub n: usize,
    pub lk: Vec<Vec<i64>>,
    /// Gauss integrals before rounding.
    pub raw: Vec<Vec<f64>>,
}

impl LinkingMatrix {
    pub fn from_curves(curves: &[FieldLine]) -> Result<Self, LinkingError> {
        let n = curves.len();
        let mut lk = vec![vec![0; n]; n];
        let mut raw = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in a + 1..n {
                let v = gauss_linking(&curves[a], &curves[b])?;
                if (v - v.round()).abs() > INTEGER_TOLERANCE {
                    return Err(LinkingError::NonIntegerLinking(v));
                }
                lk[a][b] = v.round() as i64;
                lk[b][a] = lk[a][b];
                raw[a][b] = v;
                raw[b][a] = v;
            }
        }
        Ok(Self { n, lk, raw })
    }

    /// Product over all unordered pairs.
    pub fn pair_product(&self) -> i64 {
        (0..self.n).flat_map(|a| (a + 1..self.n).map(move |b| (a, b))).map(|(a, b)| self.lk[a][b]).product()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|a| self.lk[a][a] == 0 && (0..self.n).all(|b| self.lk[a][b] == self.lk[b][a]))
    }
}

/// A Monte Carlo integral with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// `∫ (A, B)` over `domain`. With `verify_curl`, `B = rot A` is spot-checked
/// at a few sample points first.
pub fn helicity_integral<A: SphereField + ?Sized, B: SphereField + ?Sized>(
    a: &A,
    b: &B,
    domain: &Domain,
    n_quad: usize,
    seed: u64,
    verify_curl: bool,
) -> Result<Estimate, LinkingError> {
    if n_quad < MIN_QUADRATURE_SAMPLES {
        return Err(QuadratureError::QuadratureUnderflow { got: n_quad, min: MIN_QUADRATURE_SAMPLES }.into());
    }
    if verify_curl {
        let mut rng = stream_rng(seed, u64::MAX);
        for _ in 0..5 {
            let (y, _) = domain.sample(&mut rng);
            let expected = b.at(&y);
            let defect = (chart_curl(a, &y, 1e-4) - expected).norm();
            if defect > 1e-5 * expected.norm().max(1.0) {
                return Err(QuadratureError::CurlMismatch(defect).into());
            }
        }
    }
    let parts = par_chunks(n_quad, crate::mc::CHUNK, |c, range| {
        let mut rng = stream_rng(seed, c as u64);
        range
            .map(|_| {
                let (y, w) = domain.sample(&mut rng);
                w * a.at(&y).dot(&b.at(&y))
            })
            .collect::<Moments>()
    });
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);
    Ok(Estimate { value: m.mean, stderr: m.stderr(), samples: n_quad })
}

/// One sampled pair of the asymptotic Hopf estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub index: usize,
    pub lk: i64,
    pub gauss: f64,
    /// `lk / T²`.
    pub value: f64,
    pub resamples: usize,
    pub closure_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub t: f64,
    pub n_pairs: usize,
    pub closure_failures: usize,
    pub resamples: usize,
    pub pairs: Vec<PairRecord>,
}

/// Mean of `lk(close(γ_x), close(γ_y)) / T²` over Haar-random start pairs on
/// the unit sphere, `γ_x` being the trajectory of `field` from `x` for time
/// `T`. Trajectories are measured in the field's own time, so no extra flux
/// normalization enters; the limit is `∫(A, B) / vol²` for `B = rot A`.
pub fn asymptotic_hopf<F: SphereField + ?Sized>(
    field: &F,
    n_pairs: usize,
    t: f64,
    h: f64,
    seed: u64,
) -> Result<HopfEstimate, LinkingError> {
    if n_pairs < MIN_PAIRS {
        return Err(LinkingError::TooFewPairs { got: n_pairs, min: MIN_PAIRS });
    }
    let chunks = par_chunks(n_pairs, PAIR_CHUNK, |_, range| {
        range.map(|index| sample_pair(field, index, t, h, seed)).collect::<Result<Vec<_>, _>>()
    });
    let mut pairs = Vec::with_capacity(n_pairs);
    for chunk in chunks {
        pairs.extend(chunk?);
    }
    let failures = pairs.iter().filter(|p| p.closure_failed).count();
    if failures as f64 > MAX_CLOSURE_FAILURE_RATE * n_pairs as f64 {
        return Err(LinkingError::ClosureFailures { failures, samples: n_pairs });
    }
    let m: Moments = pairs.iter().filter(|p| !p.closure_failed).map(|p| p.value).collect();
    Ok(HopfEstimate {
        estimate: m.mean,
        stderr: m.stderr(),
        t,
        n_pairs,
        closure_failures: failures,
        resamples: pairs.iter().map(|p| p.resamples).sum(),
        pairs,
    })
}

fn sample_pair<F: SphereField + ?Sized>(field: &F, index: usize, t: f64, h: f64, seed: u64) -> Result<PairRecord, LinkingError> {
    let mut rng = stream_rng(seed, index as u64);
    let mut resamples = 0;
    loop {
        let (x, y) = (haar_point(&mut rng), haar_point(&mut rng));
        let trace = |p: &Vector4<f64>| trace_field_line(field, p, t, h, TraceOptions::default());
        let (lx, ly) = (trace(&x)?, trace(&y)?);
        let closed = match (close_curve(&lx), close_curve(&ly)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(LinkingError::GapTooLarge { .. }), _) | (_, Err(LinkingError::GapTooLarge { .. })) => {
                return Ok(PairRecord { index, lk: 0, gauss: f64::NAN, value: 0.0, resamples, closure_failed: true });
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        match gauss_linking(&closed.0, &closed.1) {
            Ok(g) => {
                let lk = g.round() as i64;
                return Ok(PairRecord { index, lk, gauss: g, value: lk as f64 / (t * t), resamples, closure_failed: false });
            }
            Err(LinkingError::CurvesTooClose(_)) if resamples < PAIR_RESAMPLES => {
                resamples += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// The closed orbit `s ↦ exp(s·unit) ∘ x0` (left) or `x0 ∘ exp(s·unit)`
/// (right) through a point of the unit sphere, with `n` segments.
pub fn hopf_fiber(x0: Quaternion, unit: Quaternion, left: bool, n: usize) -> FieldLine {
    let pts: Vec<Vector4<f64>> = (0..n)
        .map(|k| {
            let e = unit.scale(2.0 * PI * k as f64 / n as f64).exp_imaginary();
            (if left { e * x0 } else { x0 * e }).to_vector()
        })
        .collect();
    let mut line = FieldLine::on_sphere(&pts, 1.0, true);
    line.period_or_t = 2.0 * PI;
    line
}
