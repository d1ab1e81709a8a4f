//! Quaternion-translated frames on the unit three-sphere, their Yang-Mills
//! residual (see `ym_residual_at`), and the two Chern-Simons terms.

use nalgebra::{Matrix3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{chart_curl, haar_point, unit_sphere_volume, volume_form, LinearField, SphereField};
use crate::lie_frame::{LieFrameSpec, BRACKET_NORMALIZATION};
use crate::mc::{par_chunks, stream_rng, Moments, CHUNK};
use crate::quaternion::Quaternion;

/// Smallest accepted quadrature sample count.
pub const MIN_QUADRATURE_SAMPLES: usize = 1000;

/// Trace normalization on the imaginary quaternions: `κ · tr(τ_a τ_b) = δ_ab`
/// for `τ_a` the su(2) generators with `[τ_a, τ_b] = τ_c`. With it the
/// quadratic term has density `Σ_l (A_l, rot A_l)` and the cubic term
/// `tr(A∧A∧A)` has density [`CUBIC_TERM_FACTOR`]` · vol(A_1, A_2, A_3)`.
pub const TRACE_NORMALIZATION: f64 = -2.0;

/// `κ · Σ_abc ε_abc tr(τ_a τ_b τ_c) = (−2) · 6 · (−1/4)`.
pub const CUBIC_TERM_FACTOR: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("{got} quadrature samples requested, at least {min} needed for 1% relative error")]
    QuadratureUnderflow { got: usize, min: usize },
    #[error("B is not rot A at a spot check (defect {0:e})")]
    CurlMismatch(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Three frame fields on the unit sphere together with their algebraic spec.
#[derive(Debug, Clone)]
pub struct S3Frame {
    pub side: Side,
    pub fields: [LinearField; 3],
    pub spec: LieFrameSpec,
}

/// Left frame `A_l(x) = l̄ ∘ x` (equal to `(ī, j̄, k̄)` at `+1`) or right frame
/// `A_l(x) = x ∘ l` (equal to `(i, j, k)` at `+1`).
pub fn build_frame(side: Side) -> S3Frame {
    let field = |l: usize| {
        let unit = Quaternion::imaginary_unit(l);
        match side {
            Side::Left => LinearField(unit.conj().left_mul_matrix()),
            Side::Right => LinearField(unit.right_mul_matrix()),
        }
    };
    let spec = match side {
        Side::Left => LieFrameSpec::su2_left(),
        Side::Right => LieFrameSpec::su2_right(),
    };
    S3Frame { side, fields: [field(0), field(1), field(2)], spec }
}

impl S3Frame {
    /// The same frame with field `l` (zero based) replaced by its negative.
    pub fn with_negated(&self, l: usize) -> S3Frame {
        let mut out = self.clone();
        out.fields[l] = out.fields[l].scale(-1.0);
        out
    }

    pub fn field_at(&self, l: usize, x: &Vector4<f64>) -> Vector4<f64> {
        self.fields[l].at(x)
    }

    pub fn gram(&self, x: &Vector4<f64>) -> Matrix3<f64> {
        let v: Vec<_> = (0..3).map(|l| self.field_at(l, x)).collect();
        Matrix3::from_fn(|i, j| v[i].dot(&v[j]))
    }

    /// Largest deviation of the chart brackets from the spec's table at `x`.
    pub fn bracket_defect(&self, x: &Vector4<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let chart = self.fields[i].lie_bracket(&self.fields[j]).at(x);
                let algebraic: Vector4<f64> =
                    (0..3).map(|k| self.field_at(k, x) * self.spec.c[i][j][k]).sum();
                worst = worst.max((chart - algebraic).norm());
            }
        }
        worst
    }

    /// `[A_a, A_b]` in the Lie-algebra normalization.
    pub fn bracket(&self, a: usize, b: usize) -> LinearField {
        self.fields[a].lie_bracket(&self.fields[b]).scale(BRACKET_NORMALIZATION)
    }
}

fn bracket_fields(a: &LinearField, b: &LinearField) -> LinearField {
    a.lie_bracket(b).scale(BRACKET_NORMALIZATION)
}

/// `F_l = rot A_l + [A_{l+1}, A_{l+2}]` as a vector field.
pub fn curvature_field(frame: &S3Frame, l: usize, x: &Vector4<f64>) -> Vector4<f64> {
    let (l1, l2) = ((l + 1) % 3, (l + 2) % 3);
    frame.fields[l].curl_at(x) + frame.bracket(l1, l2).at(x)
}

/// Norm of `rot[A_{l+1}, A_{l+2}] + [A_{l+1}, [A_l, A_{l+1}]] + [A_{l+2}, [A_l, A_{l+2}]]`
/// maximized over `l` and the given points.
pub fn ym_residual_at(frame: &S3Frame, points: &[Vector4<f64>]) -> f64 {
    let a = &frame.fields;
    let mut terms = Vec::with_capacity(3);
    for l in 0..3 {
        let (l1, l2) = ((l + 1) % 3, (l + 2) % 3);
        let top = bracket_fields(&a[l1], &a[l2]);
        let second = bracket_fields(&a[l1], &bracket_fields(&a[l], &a[l1]));
        let third = bracket_fields(&a[l2], &bracket_fields(&a[l], &a[l2]));
        terms.push((top, LinearField(second.0 + third.0)));
    }
    points
        .iter()
        .flat_map(|x| terms.iter().map(move |(top, rest)| (top.curl_at(x) + rest.at(x)).norm()))
        .fold(0.0, f64::max)
}

/// [`ym_residual_at`] over `n` Haar-random points drawn from `seed`.
pub fn ym_residual(frame: &S3Frame, n: usize, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, 0);
    let points: Vec<_> = (0..n).map(|_| haar_point(&mut rng)).collect();
    ym_residual_at(frame, &points)
}

/// Pointwise `(A, B)`.
pub fn helicity_density<A: SphereField + ?Sized, B: SphereField + ?Sized>(
    a: &A,
    b: &B,
    x: &Vector4<f64>,
) -> f64 {
    a.at(x).dot(&b.at(x))
}

/// Densities of both Chern-Simons terms at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsDensity {
    /// `(A_l, rot A_l)` for each component.
    pub helicity: [f64; 3],
    /// Density of the quadratic term (sum of the three helicities).
    pub term1: f64,
    /// Density of the cubic term.
    pub term2: f64,
}

pub fn cs_density(frame: &S3Frame, x: &Vector4<f64>) -> CsDensity {
    let helicity = [0, 1, 2].map(|l| frame.fields[l].at(x).dot(&frame.fields[l].curl_at(x)));
    let v = [0, 1, 2].map(|l| frame.field_at(l, x));
    CsDensity {
        helicity,
        term1: helicity.iter().sum(),
        term2: CUBIC_TERM_FACTOR * volume_form(x, &v[0], &v[1], &v[2]),
    }
}

/// Quadrature of the Chern-Simons terms over the unit sphere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsTerms {
    pub term1: f64,
    pub term1_stderr: f64,
    pub term2: f64,
    pub term2_stderr: f64,
    /// Mean per-component helicity density.
    pub helicity_density: [f64; 3],
    pub term2_density: f64,
    pub samples: usize,
    pub seed: u64,
    pub volume: f64,
}

/// Monte Carlo quadrature with Haar samples. `rotation`, when given, left
/// multiplies every sample point; the result must not depend on it.
pub fn cs_functional_rotated(
    frame: &S3Frame,
    n_quad: usize,
    seed: u64,
    rotation: Option<Quaternion>,
) -> Result<CsTerms, QuadratureError> {
    if n_quad < MIN_QUADRATURE_SAMPLES {
        return Err(QuadratureError::QuadratureUnderflow { got: n_quad, min: MIN_QUADRATURE_SAMPLES });
    }
    let rot = rotation.map(|q| q.scale(1.0 / q.norm()).left_mul_matrix());
    let partials = par_chunks(n_quad, CHUNK, |c, range| {
        let mut rng = stream_rng(seed, c as u64);
        let mut acc = [Moments::default(); 5];
        for _ in range {
            let mut x = haar_point(&mut rng);
            if let Some(r) = &rot {
                x = r * x;
            }
            let d = cs_density(frame, &x);
            for (slot, v) in acc.iter_mut().zip([d.term1, d.term2, d.helicity[0], d.helicity[1], d.helicity[2]]) {
                slot.push(v);
            }
        }
        acc
    });
    let acc = partials.into_iter().fold([Moments::default(); 5], |mut tot, part| {
        for (t, p) in tot.iter_mut().zip(part) {
            *t = t.merge(p);
        }
        tot
    });
    let vol = unit_sphere_volume();
    Ok(CsTerms {
        term1: acc[0].mean * vol,
        term1_stderr: acc[0].stderr() * vol,
        term2: acc[1].mean * vol,
        term2_stderr: acc[1].stderr() * vol,
        helicity_density: [acc[2].mean, acc[3].mean, acc[4].mean],
        term2_density: acc[1].mean,
        samples: n_quad,
        seed,
        volume: vol,
    })
}

pub fn cs_functional(frame: &S3Frame, n_quad: usize, seed: u64) -> Result<CsTerms, QuadratureError> {
    cs_functional_rotated(frame, n_quad, seed, None)
}

/// `B_l = rot A_l` for each frame field.
#[derive(Debug, Clone)]
pub struct MagneticTriple {
    pub fields: [LinearField; 3],
}

impl MagneticTriple {
    /// Curl of each frame field. Left- and right-translations are curl
    /// eigenfields, so the result is again linear: `B_l = μ_l A_l` with `μ_l`
    /// read off at a reference point.
    pub fn from_frame(frame: &S3Frame) -> Self {
        let x = Vector4::new(1.0, 0.0, 0.0, 0.0);
        let fields = [0, 1, 2].map(|l| {
            let a = frame.field_at(l, &x);
            let mu = frame.fields[l].curl_at(&x).dot(&a) / a.norm_squared();
            frame.fields[l].scale(mu)
        });
        Self { fields }
    }

    /// Largest `|B_l − rot A_l|` with the curl taken by chart differences.
    pub fn curl_defect(&self, frame: &S3Frame, points: &[Vector4<f64>], h: f64) -> f64 {
        points
            .iter()
            .flat_map(|x| (0..3).map(move |l| (self.fields[l].at(x) - chart_curl(&frame.fields[l], x, h)).norm()))
            .fold(0.0, f64::max)
    }
}
