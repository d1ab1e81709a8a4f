//! Random geodesics in a disk of the hyperbolic plane of curvature
//! `K = −λ^{−2/3}`: pair intersections, ε-cutoff triangles, the parallelism
//! angle, the quintuple estimator, and the λ-exponents built from them.
//!
//! Geometry is done on the hyperboloid model of the unit-curvature plane and
//! rescaled by the curvature radius `ρ = 1/√|K|`; the sampling disk has a fixed
//! radius in curvature units (`R = R̂ ρ`). Chords are drawn from the kinematic
//! measure `cosh p dp dθ`, whose total mass over the lines meeting the disk is
//! its perimeter `L = 2πρ sinh R̂`.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{FitError, ScalingFit};
use crate::linking::{crossing_count, FieldLine, LinkingError, LinkingMatrix};
use crate::mc::{par_chunks, stream_rng, Moments, CHUNK};

/// Smallest chord count for the density estimators.
pub const MIN_CHORDS: usize = 10_000;
/// Minimum angles at or above this admit no hyperbolic triangle.
pub const MAX_EPSILON: f64 = PI / 3.0;
/// Smallest `R₁ / ρ` for the parallelism ratio.
pub const MIN_PARALLELISM_RADIUS: f64 = 5.0;
/// Smallest number of ε values for the ε→0 extrapolation.
pub const MIN_EPSILONS: usize = 4;
/// Kolmogorov exponents carried as metadata of the α fit.
pub const KOLMOGOROV_FIELD: f64 = -5.0 / 3.0;
pub const KOLMOGOROV_FLOW: f64 = -7.0 / 6.0;
/// Rows of the pair enumeration per work unit.
const ROW_CHUNK: usize = 64;
/// Rows of the triangle tally per work unit (each unit holds per-chord
/// counters, so units are kept few).
const TALLY_CHUNK: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("curvature must be negative, got {0}")]
    NonNegativeCurvature(f64),
    #[error("disk radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("{got} chords requested, at least {min} needed")]
    TooFewChords { got: usize, min: usize },
    #[error("angle cutoff {0} outside (0, π/3)")]
    EpsilonTooLarge(f64),
    #[error("ε extrapolation unstable: {0}")]
    ExtrapolationUnstable(String),
    #[error("radius {radius} is below {MIN_PARALLELISM_RADIUS} curvature radii ({rho})")]
    RadiusTooSmall { radius: f64, rho: f64 },
    #[error("λ grid needs at least 5 values spanning a decade, got {0:?}")]
    GridTooSmall(Vec<f64>),
    #[error("a quintuple needs exactly 5 curves, got {0}")]
    NotAQuintuple(usize),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Linking(#[from] LinkingError),
}

/// `K = −λ^{−2/3}`.
pub fn lambda_to_curvature(lambda: f64) -> Result<f64, ScalingError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ScalingError::NonPositiveLambda(lambda));
    }
    Ok(-lambda.powf(-2.0 / 3.0))
}

/// `ρ = 1/√|K|`.
pub fn curvature_radius(k: f64) -> Result<f64, ScalingError> {
    if !(k < 0.0) {
        return Err(ScalingError::NonNegativeCurvature(k));
    }
    Ok(1.0 / (-k).sqrt())
}

/// Minkowski form `−x₀y₀ + x₁y₁ + x₂y₂`.
pub fn minkowski(x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
    -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

/// The vector `c` with `⟨c, z⟩ = det[x, y, z]`.
fn minkowski_cross(x: &Vector3<f64>, y: &Vector3<f64>) -> Vector3<f64> {
    let c = x.cross(y);
    Vector3::new(-c[0], c[1], c[2])
}

/// Geodesic of the curvature-`K` plane meeting the disk of radius `R` about
/// the origin. `p` is its distance from the origin and `theta` the direction
/// of the foot of the perpendicular; `endpoints` are the ideal endpoints as
/// angles on the boundary of the Poincaré disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicChord {
    pub curvature: f64,
    pub radius: f64,
    pub p: f64,
    pub theta: f64,
    pub endpoints: [f64; 2],
}

/// A geodesic of the upper half-plane: a half-circle centred on the real
/// axis, or a vertical line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UhpGeodesic {
    Circle { center: f64, radius: f64 },
    Vertical { x: f64 },
}

/// Cayley map from the Poincaré disk to the upper half-plane.
pub fn cayley(w: Vector2<f64>) -> Vector2<f64> {
    // z = i (1 + w) / (1 − w)
    let (a, b) = (1.0 + w.x, w.y);
    let (c, d) = (1.0 - w.x, -w.y);
    let den = c * c + d * d;
    let (re, im) = ((a * c + b * d) / den, (b * c - a * d) / den);
    Vector2::new(-im, re)
}

impl GeodesicChord {
    pub fn new(curvature: f64, radius: f64, p: f64, theta: f64) -> Self {
        let rho = 1.0 / (-curvature).sqrt();
        let alpha = (p / rho).tanh().acos();
        Self { curvature, radius, p, theta, endpoints: [theta - alpha, theta + alpha] }
    }

    pub fn rho(&self) -> f64 {
        1.0 / (-self.curvature).sqrt()
    }

    /// Unit spacelike normal on the unit-curvature hyperboloid.
    pub fn normal(&self) -> Vector3<f64> {
        let ph = self.p / self.rho();
        Vector3::new(ph.sinh(), ph.cosh() * self.theta.cos(), ph.cosh() * self.theta.sin())
    }

    /// Hyperboloid point at signed arc length `s` (in units of `ρ`) from the
    /// foot of the perpendicular.
    pub fn point(&self, s: f64) -> Vector3<f64> {
        let ph = self.p / self.rho();
        let foot = Vector3::new(ph.cosh(), ph.sinh() * self.theta.cos(), ph.sinh() * self.theta.sin());
        let tangent = Vector3::new(0.0, -self.theta.sin(), self.theta.cos());
        foot * s.cosh() + tangent * s.sinh()
    }

    /// Half-length of the clipped chord in units of `ρ`.
    pub fn half_length(&self) -> f64 {
        let rho = self.rho();
        ((self.radius / rho).cosh() / (self.p / rho).cosh()).max(1.0).acosh()
    }

    pub fn uhp(&self) -> UhpGeodesic {
        // e^{iα} ↦ −cot(α/2) on the real axis.
        let xs = self.endpoints.map(|a| -1.0 / (a / 2.0).tan());
        if xs.iter().any(|x| !x.is_finite() || x.abs() > 1e15) {
            let finite = if xs[0].abs() < xs[1].abs() { xs[0] } else { xs[1] };
            UhpGeodesic::Vertical { x: finite }
        } else {
            UhpGeodesic::Circle { center: 0.5 * (xs[0] + xs[1]), radius: 0.5 * (xs[0] - xs[1]).abs() }
        }
    }

    /// Largest relative violation of the half-plane geodesic equation at
    /// points along the clipped chord.
    pub fn geodesic_residual(&self) -> f64 {
        let geo = self.uhp();
        let s_max = self.half_length();
        (0..=16)
            .map(|i| {
                let x = self.point(-s_max + 2.0 * s_max * i as f64 / 16.0);
                let z = cayley(poincare(&x));
                match geo {
                    UhpGeodesic::Circle { center, radius } => {
                        ((z.x - center).powi(2) + z.y * z.y - radius * radius).abs() / (radius * radius + center * center)
                    }
                    UhpGeodesic::Vertical { x } => (z.x - x).abs() / (1.0 + x.abs()),
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Hyperboloid point to Poincaré disk.
pub fn poincare(x: &Vector3<f64>) -> Vector2<f64> {
    Vector2::new(x[1], x[2]) / (1.0 + x[0])
}

/// A chord from the kinematic measure on geodesics meeting the disk.
pub fn sample_geodesic<R: Rng + ?Sized>(k: f64, r: f64, rng: &mut R) -> Result<GeodesicChord, ScalingError> {
    let rho = curvature_radius(k)?;
    if !(r > 0.0) {
        return Err(ScalingError::NonPositiveRadius(r));
    }
    let u: f64 = rng.random();
    let p = rho * (u * (r / rho).sinh()).asinh();
    let theta = rng.random_range(0.0..2.0 * PI);
    Ok(GeodesicChord::new(k, r, p, theta))
}

/// `N` chords, drawn chunk by chunk from the sub-streams of `seed`.
pub fn sample_chords(k: f64, r: f64, n: usize, seed: u64) -> Result<Vec<GeodesicChord>, ScalingError> {
    curvature_radius(k)?;
    if !(r > 0.0) {
        return Err(ScalingError::NonPositiveRadius(r));
    }
    let chunks = par_chunks(n, CHUNK, |c, range| {
        let mut rng = stream_rng(seed, c as u64);
        range.map(|_| sample_geodesic(k, r, &mut rng).expect("checked above")).collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Intersection point of two chords inside the disk of unit-curvature
/// radius `r_hat`, on the hyperboloid.
pub fn chord_intersection(n1: &Vector3<f64>, n2: &Vector3<f64>, cosh_r: f64) -> Option<Vector3<f64>> {
    let c = minkowski_cross(n1, n2);
    let q = minkowski(&c, &c);
    if !(q < 0.0) {
        return None;
    }
    let x = c * (c[0].signum() / (-q).sqrt());
    (x[0] <= cosh_r).then_some(x)
}

/// Interior angle at `p` of the geodesic triangle `p, q, s` on the
/// hyperboloid.
pub fn interior_angle(p: &Vector3<f64>, q: &Vector3<f64>, s: &Vector3<f64>) -> f64 {
    let tangent = |q: &Vector3<f64>| q + p * minkowski(p, q);
    let (u, v) = (tangent(q), tangent(s));
    let c = minkowski(&u, &v) / (minkowski(&u, &u) * minkowski(&v, &v)).sqrt();
    c.clamp(-1.0, 1.0).acos()
}

/// Chords in a disk and the graph of their interior intersections.
#[derive(Debug, Clone)]
pub struct ChordArrangement {
    pub curvature: f64,
    pub radius: f64,
    pub chords: Vec<GeodesicChord>,
    /// `neighbors[i]`: chords `j > i` meeting chord `i` inside the disk, with
    /// the meeting point (unit-curvature hyperboloid), in increasing `j`.
    pub neighbors: Vec<Vec<(u32, Vector3<f64>)>>,
}

impl ChordArrangement {
    pub fn build(chords: Vec<GeodesicChord>) -> Self {
        let (curvature, radius) = chords.first().map_or((-1.0, 1.0), |c| (c.curvature, c.radius));
        let rho = 1.0 / (-curvature).sqrt();
        let cosh_r = (radius / rho).cosh();
        let normals: Vec<Vector3<f64>> = chords.iter().map(|c| c.normal()).collect();
        let rows = par_chunks(chords.len(), ROW_CHUNK, |_, range| {
            range
                .map(|i| {
                    (i + 1..normals.len())
                        .filter_map(|j| chord_intersection(&normals[i], &normals[j], cosh_r).map(|x| (j as u32, x)))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        });
        Self { curvature, radius, chords, neighbors: rows.into_iter().flatten().collect() }
    }

    pub fn n(&self) -> usize {
        self.chords.len()
    }

    pub fn rho(&self) -> f64 {
        1.0 / (-self.curvature).sqrt()
    }

    /// Disk area `2πρ²(cosh R̂ − 1)`.
    pub fn area(&self) -> f64 {
        let rho = self.rho();
        2.0 * PI * rho * rho * ((self.radius / rho).cosh() - 1.0)
    }

    /// Kinematic measure of the chords meeting the disk (its perimeter).
    pub fn perimeter(&self) -> f64 {
        let rho = self.rho();
        2.0 * PI * rho * (self.radius / rho).sinh()
    }

    pub fn intersection_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// Calls `f(chords, min_angle)` for every triangle whose smallest chord
    /// index lies in `rows`, in the order `i < j < k`.
    fn for_each_triangle(&self, rows: std::ops::Range<usize>, mut f: impl FnMut([u32; 3], f64)) {
        for i in rows {
            let ni = &self.neighbors[i];
            for (a, &(j, p_ij)) in ni.iter().enumerate() {
                let nj = &self.neighbors[j as usize];
                // Common forward neighbours k > j of i and j.
                let (mut x, mut y) = (a + 1, 0);
                while x < ni.len() && y < nj.len() {
                    match ni[x].0.cmp(&nj[y].0) {
                        std::cmp::Ordering::Less => x += 1,
                        std::cmp::Ordering::Greater => y += 1,
                        std::cmp::Ordering::Equal => {
                            let (p_ik, p_jk) = (ni[x].1, nj[y].1);
                            f([i as u32, j, ni[x].0], triangle_min_angle(&p_ij, &p_ik, &p_jk));
                            x += 1;
                            y += 1;
                        }
                    }
                }
            }
        }
    }

    /// Every triangle formed by three chords, in the order `i < j < k`.
    pub fn triangles(&self) -> Vec<Triangle> {
        let chunks = par_chunks(self.n(), ROW_CHUNK, |_, range| {
            let mut out = Vec::new();
            self.for_each_triangle(range, |chords, min_angle| out.push(Triangle { chords, min_angle }));
            out
        });
        chunks.into_iter().flatten().collect()
    }

    /// Triangle counts and per-chord participation at each cutoff, without
    /// storing the triangles.
    pub fn triangle_tally(&self, cutoffs: &[f64]) -> TriangleTally {
        let n = self.n();
        let parts = par_chunks(n, TALLY_CHUNK, |_, range| {
            let mut counts = vec![0usize; cutoffs.len()];
            let mut part = vec![vec![0u32; n]; cutoffs.len()];
            self.for_each_triangle(range, |chords, min_angle| {
                for (e, &cut) in cutoffs.iter().enumerate() {
                    if min_angle >= cut {
                        counts[e] += 1;
                        for c in chords {
                            part[e][c as usize] += 1;
                        }
                    }
                }
            });
            (counts, part)
        });
        let mut counts = vec![0usize; cutoffs.len()];
        let mut participation = vec![vec![0usize; n]; cutoffs.len()];
        for (c, p) in parts {
            for e in 0..cutoffs.len() {
                counts[e] += c[e];
                for (slot, v) in participation[e].iter_mut().zip(&p[e]) {
                    *slot += *v as usize;
                }
            }
        }
        TriangleTally { cutoffs: cutoffs.to_vec(), counts, participation }
    }

    pub fn triangle_min_angles(&self) -> Vec<f64> {
        self.triangles().iter().map(|t| t.min_angle).collect()
    }

    /// Number of chords meeting each chord inside the disk.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n()];
        for (i, row) in self.neighbors.iter().enumerate() {
            deg[i] += row.len();
            for &(j, _) in row {
                deg[j as usize] += 1;
            }
        }
        deg
    }

    /// Triangle events for the first `limit` triangles in enumeration order.
    pub fn triangle_events(&self, limit: usize) -> Vec<TriangleEvent> {
        let mut out = Vec::new();
        'outer: for i in 0..self.n() {
            let ni = &self.neighbors[i];
            for (a, &(j, p_ij)) in ni.iter().enumerate() {
                for &(k, p_ik) in &ni[a + 1..] {
                    if let Some(&(_, p_jk)) = self.neighbors[j as usize].iter().find(|(m, _)| *m == k) {
                        let pts = [p_ij, p_ik, p_jk];
                        let angles = [
                            interior_angle(&p_ij, &p_ik, &p_jk),
                            interior_angle(&p_ik, &p_ij, &p_jk),
                            interior_angle(&p_jk, &p_ij, &p_ik),
                        ];
                        out.push(TriangleEvent { chords: [i as u32, j, k], points: pts, angles });
                        if out.len() >= limit {
                            break 'outer;
                        }
                    }
                }
            }
        }
        out
    }
}

fn triangle_min_angle(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    interior_angle(a, b, c).min(interior_angle(b, a, c)).min(interior_angle(c, a, b))
}

/// Triangle counts with all angles at or above each cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleTally {
    pub cutoffs: Vec<f64>,
    pub counts: Vec<usize>,
    /// `participation[e][i]`: counted triangles at cutoff `e` containing chord `i`.
    pub participation: Vec<Vec<usize>>,
}

impl TriangleTally {
    fn index(&self, eps: f64) -> Option<usize> {
        self.cutoffs.iter().position(|&c| c == eps)
    }
}

/// Chord ids of a triangle and its smallest interior angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub chords: [u32; 3],
    pub min_angle: f64,
}

/// Three chords with pairwise interior intersections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleEvent {
    pub chords: [u32; 3],
    /// Meeting points of chords (0,1), (0,2), (1,2) on the unit-curvature
    /// hyperboloid.
    pub points: [Vector3<f64>; 3],
    pub angles: [f64; 3],
}

impl TriangleEvent {
    pub fn min_angle(&self) -> f64 {
        self.angles.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A count of chord pairs or triples, normalized by `scale`.
///
/// The count is a U-statistic over the chords, so its fluctuations are
/// dominated by how unevenly chords take part (long chords meet many
/// others): `stderr ≈ √N · sd(participation)`, with `participation[i]` the
/// number of counted pairs or triples containing chord `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub value: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Density {
    pub fn from_participation(count: usize, participation: &[usize], scale: f64) -> Self {
        let m: Moments = participation.iter().map(|&c| c as f64).collect();
        let n = participation.len() as f64;
        Self { value: count as f64 / scale, stderr: n.sqrt() * m.variance().sqrt() / scale, count }
    }
}

fn check_counts(n: usize) -> Result<(), ScalingError> {
    if n < MIN_CHORDS {
        return Err(ScalingError::TooFewChords { got: n, min: MIN_CHORDS });
    }
    Ok(())
}

fn check_epsilon(eps: f64) -> Result<(), ScalingError> {
    if !(eps > 0.0 && eps < MAX_EPSILON) {
        return Err(ScalingError::EpsilonTooLarge(eps));
    }
    Ok(())
}

/// Intersections per unit area per squared chord density `τ = N / L`;
/// the kinematic formula puts its mean at `π (1 − 1/N)` for every curvature.
pub fn pair_density_of(arr: &ChordArrangement) -> Density {
    let tau = arr.n() as f64 / arr.perimeter();
    Density::from_participation(arr.intersection_count(), &arr.degrees(), arr.area() * tau * tau)
}

pub fn pair_intersection_density(k: f64, r: f64, n: usize, seed: u64) -> Result<Density, ScalingError> {
    check_counts(n)?;
    Ok(pair_density_of(&ChordArrangement::build(sample_chords(k, r, n, seed)?)))
}

/// Triangles with all angles `≥ eps` per unit kinematic measure of chord
/// triples (`L³`).
pub fn triangle_density_of(arr: &ChordArrangement, tally: &TriangleTally, eps: f64) -> Result<Density, ScalingError> {
    check_epsilon(eps)?;
    let e = tally.index(eps).ok_or_else(|| ScalingError::ExtrapolationUnstable(format!("cutoff {eps} was not tallied")))?;
    Ok(Density::from_participation(tally.counts[e], &tally.participation[e], arr.perimeter().powi(3)))
}

pub fn triangle_density(k: f64, r: f64, n: usize, eps: f64, seed: u64) -> Result<Density, ScalingError> {
    check_counts(n)?;
    check_epsilon(eps)?;
    let arr = ChordArrangement::build(sample_chords(k, r, n, seed)?);
    triangle_density_of(&arr, &arr.triangle_tally(&[eps]), eps)
}

/// `D(ε) = √(T(ε)/F)` over a decreasing ε list and its linear extrapolation
/// to `ε = 0` from the last three values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonScan {
    pub eps: Vec<f64>,
    pub counts: Vec<usize>,
    pub values: Vec<f64>,
    pub extrapolate: f64,
    pub tail_slope: f64,
    pub residuals: Vec<f64>,
}

pub fn epsilon_scan_of(arr: &ChordArrangement, tally: &TriangleTally, eps_list: &[f64]) -> Result<EpsilonScan, ScalingError> {
    if eps_list.len() < MIN_EPSILONS {
        return Err(ScalingError::ExtrapolationUnstable(format!(
            "{} ε values, at least {MIN_EPSILONS} needed",
            eps_list.len()
        )));
    }
    for &e in eps_list {
        check_epsilon(e)?;
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ScalingError::ExtrapolationUnstable("ε list is not strictly decreasing".into()));
    }
    let area = arr.area();
    let counts: Vec<usize> = eps_list
        .iter()
        .map(|&e| tally.index(e).map(|i| tally.counts[i]))
        .collect::<Option<_>>()
        .ok_or_else(|| ScalingError::ExtrapolationUnstable("cutoff list was not tallied".into()))?;
    let values: Vec<f64> = counts.iter().map(|&c| (c as f64 / area).sqrt()).collect();
    let tail = values.len() - 3;
    if values[tail..].windows(2).any(|w| w[1] < w[0]) || values[tail..].iter().all(|&v| v == 0.0) {
        return Err(ScalingError::ExtrapolationUnstable(format!("tail {:?} is not increasing as ε → 0", &values[tail..])));
    }
    let (xs, ys) = (&eps_list[tail..], &values[tail..]);
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let b = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let a = my - b * mx;
    let residuals = xs.iter().zip(ys).map(|(x, y)| y - a - b * x).collect();
    Ok(EpsilonScan { eps: eps_list.to_vec(), counts, values, extrapolate: a, tail_slope: b, residuals })
}

pub fn epsilon_extrapolate(k: f64, r: f64, n: usize, eps_list: &[f64], seed: u64) -> Result<EpsilonScan, ScalingError> {
    check_counts(n)?;
    let arr = ChordArrangement::build(sample_chords(k, r, n, seed)?);
    epsilon_scan_of(&arr, &arr.triangle_tally(eps_list), eps_list)
}

/// Parallelism angle at distance `d` from a line in curvature `K`:
/// `tan(Π/2) = e^{−d/ρ}`.
pub fn parallelism_angle(k: f64, d: f64) -> Result<f64, ScalingError> {
    let rho = curvature_radius(k)?;
    Ok(2.0 * (-d / rho).exp().atan())
}

/// Distance from the point at radius `R₁` and polar angle `φ` to the line
/// through the centre perpendicular to `φ = 0`: `sinh(d/ρ) = sinh(R₁/ρ)|cos φ|`.
pub fn distance_to_line(k: f64, r1: f64, phi: f64) -> Result<f64, ScalingError> {
    let rho = curvature_radius(k)?;
    Ok(rho * ((r1 / rho).sinh() * phi.cos().abs()).asinh())
}

/// Parallelism angle from `x₁ = (R₁, φ)` to the line `l₂`, over the
/// perimeter of the circle of radius `R₁`.
pub fn parallelism_ratio(k: f64, r1: f64, phi: f64) -> Result<f64, ScalingError> {
    let rho = curvature_radius(k)?;
    if r1 < MIN_PARALLELISM_RADIUS * rho {
        return Err(ScalingError::RadiusTooSmall { radius: r1, rho });
    }
    let d = distance_to_line(k, r1, phi)?;
    Ok(parallelism_angle(k, d)? / (2.0 * PI * rho * (r1 / rho).sinh()))
}

/// Parallelism angle at unit-curvature distance `d_hat` by shooting: unit
/// speed geodesics of the upper half-plane (`ẋ = y cos ω`, `ẏ = y sin ω`,
/// `ω̇ = −cos ω`) leave the point at distance `d_hat` from the imaginary axis,
/// and bisection finds the critical angle (from the perpendicular) beyond
/// which they no longer reach the axis.
pub fn shooting_parallelism_angle(d_hat: f64, horizon: f64, h: f64) -> f64 {
    // Foot of the perpendicular at i; the perpendicular is the unit circle.
    let start = Vector2::new(d_hat.tanh(), 1.0 / d_hat.cosh());
    // Direction of the perpendicular towards the axis, as an angle.
    let toward = {
        let tangent = Vector2::new(-start.y, start.x);
        tangent.y.atan2(tangent.x)
    };
    let hits = |angle: f64| -> bool {
        let rhs = |s: &Vector3<f64>| Vector3::new(s[1] * s[2].cos(), s[1] * s[2].sin(), -s[2].cos());
        let mut s = Vector3::new(start.x, start.y, toward + angle);
        let steps = (horizon / h).ceil() as usize;
        for _ in 0..steps {
            let k1 = rhs(&s);
            let k2 = rhs(&(s + k1 * (h / 2.0)));
            let k3 = rhs(&(s + k2 * (h / 2.0)));
            let k4 = rhs(&(s + k3 * h));
            s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if s[0] <= 0.0 {
                return true;
            }
        }
        false
    };
    let (mut lo, mut hi) = (0.0, PI / 2.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if hits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Which of the two groups of the quintuple estimator a quintuple falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuintupleGroup {
    /// All ten pairs linked.
    Linked,
    /// Some pair unlinked ("pairwise far" lines); the product vanishes.
    Far,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M5Report {
    pub linking: LinkingMatrix,
    /// Triples (of the 10) whose projections pairwise cross.
    pub triangles: usize,
    pub pair_product: i64,
    pub estimate: f64,
    pub group: QuintupleGroup,
}

/// Triangle-weighted linking of five closed curves seen along `direction`.
pub fn m5_quintuple_estimate(lines: &[FieldLine], direction: &Vector3<f64>) -> Result<M5Report, ScalingError> {
    if lines.len() != 5 {
        return Err(ScalingError::NotAQuintuple(lines.len()));
    }
    let linking = LinkingMatrix::from_curves(lines)?;
    let mut crosses = [[false; 5]; 5];
    for a in 0..5 {
        for b in a + 1..5 {
            let c = crossing_count(&lines[a], &lines[b], direction)? > 0;
            crosses[a][b] = c;
            crosses[b][a] = c;
        }
    }
    let mut triangles = 0;
    for a in 0..5 {
        for b in a + 1..5 {
            for c in b + 1..5 {
                if crosses[a][b] && crosses[a][c] && crosses[b][c] {
                    triangles += 1;
                }
            }
        }
    }
    let pair_product = linking.pair_product();
    let group = if pair_product == 0 { QuintupleGroup::Far } else { QuintupleGroup::Linked };
    Ok(M5Report { linking, triangles, pair_product, estimate: triangles as f64 * pair_product as f64, group })
}

/// Inputs shared by the λ scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub lambdas: Vec<f64>,
    pub n_chords: usize,
    /// Disk radius in curvature radii.
    pub radius_units: f64,
    /// Fixed cutoff for the triangle density.
    pub eps: f64,
    /// Decreasing cutoffs for the ε → 0 extrapolation.
    pub eps_list: Vec<f64>,
    /// `R₁` (in curvature radii) and polar angle of `x₁` for the parallelism ratio.
    pub parallel_radius_units: f64,
    pub parallel_phi: f64,
    pub seed: u64,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            lambdas: vec![1.0, 1.778_279_410_038_923, 3.162_277_660_168_379_5, 5.623_413_251_903_491, 10.0],
            n_chords: 20_000,
            radius_units: 6.0,
            eps: 0.1,
            eps_list: vec![0.2, 0.1, 0.05, 0.025, 0.0125],
            parallel_radius_units: 8.0,
            parallel_phi: 1.2,
            seed: 1,
        }
    }
}

/// Independent seed for grid point `index`.
pub fn sub_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-λ results of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    pub curvature: f64,
    pub radius: f64,
    pub area: f64,
    pub perimeter: f64,
    pub intersections: usize,
    pub pair_density: Density,
    pub triangle_density: Density,
    pub epsilon: EpsilonScan,
    pub parallelism_ratio: f64,
}

/// All fits of the scaling claims over a λ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub params: McParams,
    pub rows: Vec<LambdaRow>,
    pub pair_fit: ScalingFit,
    pub triangle_fit: ScalingFit,
    pub extrapolate_fit: ScalingFit,
    pub square_fit: ScalingFit,
    pub parallelism_fit: ScalingFit,
}

fn check_grid(lambdas: &[f64]) -> Result<(), ScalingError> {
    let min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let max = lambdas.iter().copied().fold(0.0, f64::max);
    if lambdas.len() < 5 || !(max >= 10.0 * min * (1.0 - 1e-12)) {
        return Err(ScalingError::GridTooSmall(lambdas.to_vec()));
    }
    for &l in lambdas {
        lambda_to_curvature(l)?;
    }
    Ok(())
}

pub fn lambda_row(params: &McParams, index: usize) -> Result<LambdaRow, ScalingError> {
    let lambda = params.lambdas[index];
    let k = lambda_to_curvature(lambda)?;
    let rho = curvature_radius(k)?;
    let r = params.radius_units * rho;
    let arr = ChordArrangement::build(sample_chords(k, r, params.n_chords, sub_seed(params.seed, index))?);
    let mut cutoffs = params.eps_list.clone();
    cutoffs.push(params.eps);
    let tally = arr.triangle_tally(&cutoffs);
    Ok(LambdaRow {
        lambda,
        curvature: k,
        radius: r,
        area: arr.area(),
        perimeter: arr.perimeter(),
        intersections: arr.intersection_count(),
        pair_density: pair_density_of(&arr),
        triangle_density: triangle_density_of(&arr, &tally, params.eps)?,
        epsilon: epsilon_scan_of(&arr, &tally, &params.eps_list)?,
        parallelism_ratio: parallelism_ratio(k, params.parallel_radius_units * rho, params.parallel_phi)?,
    })
}

pub fn scaling_scan(params: &McParams) -> Result<ScalingReport, ScalingError> {
    check_grid(&params.lambdas)?;
    check_counts(params.n_chords)?;
    let rows = (0..params.lambdas.len()).map(|i| lambda_row(params, i)).collect::<Result<Vec<_>, _>>()?;
    let x = &params.lambdas;
    let col = |f: &dyn Fn(&LambdaRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    Ok(ScalingReport {
        pair_fit: ScalingFit::fit(x, &col(&|r| r.pair_density.value))?.with_reference("pair", 0.0),
        triangle_fit: ScalingFit::fit(x, &col(&|r| r.triangle_density.value))?.with_reference("triangle", -1.0),
        extrapolate_fit: ScalingFit::fit(x, &col(&|r| r.epsilon.extrapolate))?.with_reference("extrapolate", -1.0 / 3.0),
        square_fit: ScalingFit::fit(x, &col(&|r| r.epsilon.extrapolate.powi(2)))?.with_reference("square", -2.0 / 3.0),
        parallelism_fit: ScalingFit::fit(x, &col(&|r| r.parallelism_ratio))?.with_reference("parallelism", -1.0 / 3.0),
        rows,
        params: params.clone(),
    })
}

/// α(λ) proxy under the balance assumption: the α- and β-terms balance, so
/// α is taken directly proportional to the ε → 0 triangle extrapolate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub balance: String,
    pub alpha: Vec<f64>,
    pub fit: ScalingFit,
}

pub const BALANCE_ASSUMPTION: &str = "alpha proportional to the eps->0 triangle extrapolate (alpha/beta balance, unit constant)";

pub fn alpha_from_report(report: &ScalingReport) -> Result<AlphaReport, ScalingError> {
    let alpha: Vec<f64> = report.rows.iter().map(|r| r.epsilon.extrapolate).collect();
    let fit = ScalingFit::fit(&report.params.lambdas, &alpha)?
        .with_reference("alpha", -1.0 / 3.0)
        .with_reference("kolmogorov field", KOLMOGOROV_FIELD)
        .with_reference("kolmogorov flow", KOLMOGOROV_FLOW);
    Ok(AlphaReport { balance: BALANCE_ASSUMPTION.into(), alpha, fit })
}

pub fn alpha_scaling(params: &McParams) -> Result<AlphaReport, ScalingError> {
    alpha_from_report(&scaling_scan(params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linking::hopf_fiber;
    use crate::mc::with_workers;
    use crate::quaternion::Quaternion;
    use nalgebra::Vector4;

    #[test]
    fn curvature_of_lambda() {
        assert_eq!(lambda_to_curvature(1.0).unwrap(), -1.0);
        assert!((lambda_to_curvature(8.0).unwrap() + 0.25).abs() < 1e-15);
        assert!(lambda_to_curvature(1e12).unwrap().abs() < 1e-7);
        assert_eq!(lambda_to_curvature(0.0), Err(ScalingError::NonPositiveLambda(0.0)));
    }

    #[test]
    fn sampled_chords_are_geodesics() {
        let mut rng = stream_rng(1, 0);
        for k in [-1.0, -0.25] {
            for _ in 0..500 {
                let c = sample_geodesic(k, 3.0, &mut rng).unwrap();
                assert!(c.geodesic_residual() < 1e-10, "{c:?}: {}", c.geodesic_residual());
                assert!(c.p <= 3.0);
            }
        }
    }

    #[test]
    fn kinematic_measure_of_half_disk() {
        let r = 4.0;
        let chords = sample_chords(-1.0, r, 10_000, 2).unwrap();
        let hit = chords.iter().filter(|c| c.p <= r / 2.0).count() as f64 / 1e4;
        let expected = (r / 2.0).sinh() / r.sinh();
        let sigma = (expected * (1.0 - expected) / 1e4).sqrt();
        assert!((hit - expected).abs() < 3.0 * sigma, "{hit} vs {expected}");
        let other = sample_chords(-1.0, r, 10_000, 3).unwrap();
        let hit2 = other.iter().filter(|c| c.p <= r / 2.0).count() as f64 / 1e4;
        assert!((hit - hit2).abs() < 3.0 * 2f64.sqrt() * sigma);
    }

    #[test]
    fn ultraparallel_chords_do_not_meet() {
        let a = GeodesicChord::new(-1.0, 5.0, 1.0, 0.3);
        let b = GeodesicChord::new(-1.0, 5.0, 2.0, 0.3);
        assert!(chord_intersection(&a.normal(), &b.normal(), 5f64.cosh()).is_none());
        let c = GeodesicChord::new(-1.0, 5.0, 0.5, 2.0);
        let x = chord_intersection(&a.normal(), &c.normal(), 5f64.cosh()).unwrap();
        assert!((minkowski(&x, &x) + 1.0).abs() < 1e-12);
        assert!(minkowski(&x, &a.normal()).abs() < 1e-12 && minkowski(&x, &c.normal()).abs() < 1e-12);
    }

    #[test]
    fn pair_density_is_pi() {
        let d = pair_intersection_density(-1.0, 3.0, 10_000, 4).unwrap();
        assert!((d.value - PI).abs() < 3.0 * d.stderr, "{d:?}");
        assert!(d.stderr < 0.05 * PI);
        // Same in another curvature and on a disk twice as large.
        let e = pair_intersection_density(-0.3, 6.0 / 0.3f64.sqrt(), 10_000, 5).unwrap();
        assert!((d.value - e.value).abs() < 2.0 * (d.stderr.powi(2) + e.stderr.powi(2)).sqrt(), "{d:?} {e:?}");
        assert_eq!(pair_intersection_density(-1.0, 3.0, 100, 4), Err(ScalingError::TooFewChords { got: 100, min: MIN_CHORDS }));
    }

    /// Geodesics of the Poincaré disk as circles orthogonal to the unit circle.
    struct DiskGeodesic {
        center: Vector2<f64>,
        radius: f64,
    }

    fn disk_geodesic(c: &GeodesicChord) -> DiskGeodesic {
        let alpha = 0.5 * (c.endpoints[1] - c.endpoints[0]);
        let dir = Vector2::new(c.theta.cos(), c.theta.sin());
        DiskGeodesic { center: dir / alpha.cos(), radius: alpha.tan() }
    }

    fn disk_meet(a: &DiskGeodesic, b: &DiskGeodesic, limit: f64) -> Option<Vector2<f64>> {
        let d = (b.center - a.center).norm();
        if d >= a.radius + b.radius || d <= (a.radius - b.radius).abs() {
            return None;
        }
        let x = (d * d + a.radius * a.radius - b.radius * b.radius) / (2.0 * d);
        let h = (a.radius * a.radius - x * x).sqrt();
        let u = (b.center - a.center) / d;
        let base = a.center + u * x;
        let perp = Vector2::new(-u.y, u.x);
        [base + perp * h, base - perp * h].into_iter().find(|p| p.norm() < limit)
    }

    fn disk_angle(at: &Vector2<f64>, g1: &DiskGeodesic, to1: &Vector2<f64>, g2: &DiskGeodesic, to2: &Vector2<f64>) -> f64 {
        let tangent = |g: &DiskGeodesic, to: &Vector2<f64>| {
            let r = at - g.center;
            let t = Vector2::new(-r.y, r.x).normalize();
            if t.dot(&(to - at)) >= 0.0 {
                t
            } else {
                -t
            }
        };
        tangent(g1, to1).dot(&tangent(g2, to2)).clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn streaming_counts_match_exhaustive_disk_oracle() {
        let r_hat = 2.0;
        let chords = sample_chords(-1.0, r_hat, 1000, 6).unwrap();
        let arr = ChordArrangement::build(chords.clone());
        let limit = (r_hat / 2.0).tanh();
        let disk: Vec<_> = chords.iter().map(disk_geodesic).collect();
        let n = disk.len();
        let mut meet = vec![vec![None; n]; n];
        let mut pairs = 0;
        for i in 0..n {
            for j in i + 1..n {
                if let Some(p) = disk_meet(&disk[i], &disk[j], limit) {
                    meet[i][j] = Some(p);
                    meet[j][i] = Some(p);
                    pairs += 1;
                }
            }
        }
        assert_eq!(pairs, arr.intersection_count());
        let eps_grid = [0.0, 0.05, 0.2, 0.5];
        let mut oracle = [0usize; 4];
        for i in 0..n {
            for j in i + 1..n {
                let Some(pij) = meet[i][j] else { continue };
                for k in j + 1..n {
                    let (Some(pik), Some(pjk)) = (meet[i][k], meet[j][k]) else { continue };
                    let a = disk_angle(&pij, &disk[i], &pik, &disk[j], &pjk);
                    let b = disk_angle(&pik, &disk[i], &pij, &disk[k], &pjk);
                    let c = disk_angle(&pjk, &disk[j], &pij, &disk[k], &pik);
                    let m = a.min(b).min(c);
                    for (slot, &e) in oracle.iter_mut().zip(&eps_grid) {
                        if m >= e {
                            *slot += 1;
                        }
                    }
                }
            }
        }
        let mins = arr.triangle_min_angles();
        let tally = arr.triangle_tally(&eps_grid);
        for ((count, &e), &tallied) in oracle.iter().zip(&eps_grid).zip(&tally.counts) {
            assert_eq!(*count, mins.iter().filter(|&&m| m >= e).count(), "eps {e}");
            assert_eq!(*count, tallied);
        }
        for e in 0..eps_grid.len() {
            assert_eq!(tally.participation[e].iter().sum::<usize>(), 3 * tally.counts[e]);
        }
        assert!(oracle[0] > 100);
        let events = arr.triangle_events(20);
        assert_eq!(events.len(), 20);
        for ev in events {
            assert!(ev.angles.iter().sum::<f64>() < PI);
        }
    }

    #[test]
    fn triangle_density_cutoffs() {
        let arr = ChordArrangement::build(sample_chords(-1.0, 6.0, 10_000, 7).unwrap());
        let eps = [0.01, 0.1, 0.3, 0.5, 0.9, 1.04];
        let mins = arr.triangle_tally(&eps);
        let d: Vec<f64> = eps.iter().map(|&e| triangle_density_of(&arr, &mins, e).unwrap().value).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0]));
        // Only near-equilateral (hence tiny, nearly flat) triangles survive
        // a cutoff close to π/3.
        assert!(d[5] < 1e-3 * d[0], "{d:?}");
        assert!(d[0] > 0.0);
        assert_eq!(triangle_density_of(&arr, &mins, 1.1), Err(ScalingError::EpsilonTooLarge(1.1)));
        assert_eq!(triangle_density_of(&arr, &mins, 0.0), Err(ScalingError::EpsilonTooLarge(0.0)));
    }

    #[test]
    fn epsilon_extrapolation() {
        let arr = ChordArrangement::build(sample_chords(-1.0, 6.0, 10_000, 8).unwrap());
        let mins = arr.triangle_tally(&[0.2, 0.1, 0.05, 0.025, 0.01]);
        let scan = epsilon_scan_of(&arr, &mins, &[0.2, 0.1, 0.05, 0.025]).unwrap();
        assert!(scan.values.windows(2).all(|w| w[1] >= w[0]));
        assert!(scan.extrapolate >= scan.values[3]);
        assert!(matches!(epsilon_scan_of(&arr, &mins, &[0.1]), Err(ScalingError::ExtrapolationUnstable(_))));
        assert!(matches!(
            epsilon_scan_of(&arr, &mins, &[0.1, 0.2, 0.05, 0.01]),
            Err(ScalingError::ExtrapolationUnstable(_))
        ));
    }

    #[test]
    fn parallelism_closed_form_matches_shooting() {
        for d in [0.3, 1.0, 2.5] {
            let exact = parallelism_angle(-1.0, d).unwrap();
            let shot = shooting_parallelism_angle(d, 40.0, 1e-3);
            assert!((exact - shot).abs() < 1e-6, "{d}: {exact} vs {shot}");
        }
        // Curvature −1/4 at distance 2 is curvature −1 at distance 1.
        assert!((parallelism_angle(-0.25, 2.0).unwrap() - parallelism_angle(-1.0, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn parallelism_ratio_behaviour() {
        let angles: Vec<f64> = [5.0, 7.0, 10.0, 15.0]
            .iter()
            .map(|&r| parallelism_angle(-1.0, distance_to_line(-1.0, r, 0.7).unwrap()).unwrap())
            .collect();
        assert!(angles.windows(2).all(|w| w[1] < w[0]));
        assert!(angles[3] < 1e-5);
        assert!(matches!(parallelism_ratio(-1.0, 4.0, 0.7), Err(ScalingError::RadiusTooSmall { .. })));
        let grid = [1.0, 2.0, 4.0, 8.0, 16.0];
        let ratios: Vec<f64> = grid
            .iter()
            .map(|&l| {
                let k = lambda_to_curvature(l).unwrap();
                parallelism_ratio(k, 8.0 * curvature_radius(k).unwrap(), 1.2).unwrap()
            })
            .collect();
        let fit = ScalingFit::fit(&grid, &ratios).unwrap();
        assert!((fit.slope + 1.0 / 3.0).abs() < 1e-10);
    }

    fn small_circle(center: Vector4<f64>, radius: f64) -> FieldLine {
        let basis = crate::fields::tangent_basis(&center);
        let pts: Vec<_> = (0..120)
            .map(|k| {
                let s = 2.0 * PI * k as f64 / 120.0;
                center * radius.cos() + (basis[0] * s.cos() + basis[1] * s.sin()) * radius.sin()
            })
            .collect();
        FieldLine::on_sphere(&pts, 1.0, true)
    }

    #[test]
    fn m5_estimates() {
        let mut rng = stream_rng(9, 0);
        let fibers: Vec<FieldLine> = (0..5)
            .map(|_| hopf_fiber(Quaternion::from_vector(&crate::fields::haar_point(&mut rng)), Quaternion::I, false, 300))
            .collect();
        let dir = Vector3::new(0.31, -0.52, 0.79);
        let r = m5_quintuple_estimate(&fibers, &dir).unwrap();
        assert_eq!((r.triangles, r.pair_product, r.estimate), (10, 1, 10.0));
        assert_eq!(r.group, QuintupleGroup::Linked);

        let mut mixed = fibers.clone();
        mixed[4] = small_circle(Vector4::new(0.5, 0.5, 0.5, 0.5), 0.01);
        let r = m5_quintuple_estimate(&mixed, &dir).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.group, QuintupleGroup::Far);

        let far: Vec<FieldLine> = [
            Vector4::new(1.0, 0.0, 0.0, 0.0),
            Vector4::new(0.0, 1.0, 0.0, 0.0),
            Vector4::new(0.0, 0.0, 1.0, 0.0),
            Vector4::new(0.0, 0.0, 0.0, 1.0),
            Vector4::new(0.5, 0.5, -0.5, -0.5),
        ]
        .iter()
        .map(|c| small_circle(*c, 0.05))
        .collect();
        assert_eq!(m5_quintuple_estimate(&far, &dir).unwrap().estimate, 0.0);
        assert_eq!(m5_quintuple_estimate(&far[..4], &dir), Err(ScalingError::NotAQuintuple(4)));
    }

    #[test]
    fn arrangement_is_worker_independent() {
        let run = || {
            let arr = ChordArrangement::build(sample_chords(-1.0, 4.0, 3000, 10).unwrap());
            (arr.intersection_count(), arr.triangle_min_angles(), arr.triangle_tally(&[0.1, 0.01]))
        };
        assert_eq!(with_workers(1, run), with_workers(4, run));
    }

    #[test]
    fn grid_checks() {
        let params = McParams { lambdas: vec![1.0], ..McParams::default() };
        assert!(matches!(scaling_scan(&params), Err(ScalingError::GridTooSmall(_))));
        assert!(matches!(alpha_scaling(&params), Err(ScalingError::GridTooSmall(_))));
        assert_ne!(sub_seed(1, 0), sub_seed(1, 1));
    }
}
