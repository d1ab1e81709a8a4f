//! The λ-family of Beltrami frames: curl eigenvalue `−2/λ` for every field,
//! unit helicity density after normalization, the λ-scaling of both
//! Chern-Simons densities, and the `x ↦ l x` rescaling check.
//!
//! The frame is realized as `(f, e, ẽ)` with `(f, f) = λ²`, `(e, e) = (ẽ, ẽ) = 1`
//! and brackets `[e, ẽ] = (2/λ²) f`, `[ẽ, f] = 2 e`, `[f, e] = 2 ẽ`. This is the
//! left-invariant frame of the round sphere of radius `λ`, which is where
//! all three fields share the eigenvalue `−2/λ`. The honest unit tangent
//! bundle of the curvature −1 plane is kept alongside for reporting
//! ([`LieFrameSpec::geodesic_flow`]); its curl spectrum is `(λ, −1/λ, −1/λ)`.

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{volume_form, Domain, LinearField, SphereField};
use crate::fit::{FitError, ScalingFit};
use crate::lie_frame::{curl_eigenvalue, milnor_curvatures, FrameError, FrameFieldIndex, LieFrameSpec};
use crate::quaternion::Quaternion;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperbolicError {
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("rescaling factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Spec of the λ-frame in the basis `(f, e, ẽ)`.
pub fn lambda_spec(lambda: f64) -> LieFrameSpec {
    LieFrameSpec::diagonal(
        &format!("lambda-frame(lambda={lambda:?})"),
        [2.0 / (lambda * lambda), 2.0, 2.0],
        [lambda * lambda, 1.0, 1.0],
        1,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaFrame {
    pub lambda: f64,
    pub spec: LieFrameSpec,
    pub normalized: bool,
    /// `A_l = factors[l] · E_l`. Normalization makes every `A_l` of length
    /// `√λ`, which puts the helicity density at exactly `−2`.
    pub factors: [f64; 3],
}

pub fn build_lambda_frame(lambda: f64, normalized: bool) -> Result<LambdaFrame, HyperbolicError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(HyperbolicError::NonPositiveLambda(lambda));
    }
    let spec = lambda_spec(lambda);
    let factors = if normalized { spec.g.map(|g| (lambda / g).sqrt()) } else { [1.0; 3] };
    Ok(LambdaFrame { lambda, spec, normalized, factors })
}

impl LambdaFrame {
    /// Curl eigenvalues of `A_1, A_2, A_3` (scaling a field keeps its eigenvalue).
    pub fn curl_eigenvalues(&self) -> Result<[f64; 3], FrameError> {
        let mut out = [0.0; 3];
        for l in FrameFieldIndex::ALL {
            out[l.zero_based()] = curl_eigenvalue(&self.spec, l)?;
        }
        Ok(out)
    }

    /// Pointwise lengths of `A_l`.
    pub fn lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|l| self.factors[l] * self.spec.g[l].sqrt())
    }

    /// `A_l` as linear fields on the sphere of radius `λ` in `R⁴`.
    pub fn ambient_fields(&self) -> [LinearField; 3] {
        [0, 1, 2].map(|l| {
            let m = Quaternion::imaginary_unit(l).conj().left_mul_matrix();
            LinearField(m * (self.factors[l] * self.spec.g[l].sqrt() / self.lambda))
        })
    }

    pub fn reference_point(&self) -> Vector4<f64> {
        Vector4::new(self.lambda, 0.0, 0.0, 0.0)
    }

    /// Oriented volume of the un-normalized triple `(e, ẽ, f)`.
    pub fn right_triple_volume(&self) -> f64 {
        let raw = build_lambda_frame(self.lambda, false).expect("lambda already validated");
        let [f, e, et] = raw.ambient_fields();
        let y = raw.reference_point();
        volume_form(&y, &e.at(&y), &et.at(&y), &f.at(&y))
    }

    /// Unit tangent bundle spec with the same fiber stretch.
    pub fn geodesic_flow_spec(&self) -> LieFrameSpec {
        LieFrameSpec::geodesic_flow(self.lambda)
    }
}

/// `(h_density, t_density)`: helicity density `(A_l, rot A_l)` (the same for
/// every `l`) and the triple-term density `3 · μ(A_1, A_2, A_3)`, both
/// computed from the spec alone. The frame is homogeneous, so one point
/// suffices.
pub fn cs_density_lambda(frame: &LambdaFrame) -> Result<(f64, f64), HyperbolicError> {
    let mu = frame.curl_eigenvalues()?;
    let len = frame.lengths();
    let h = len[0] * len[0] * mu[0];
    let t = 3.0 * f64::from(frame.spec.orientation) * len.iter().product::<f64>();
    Ok((h, t))
}

/// The same two densities evaluated directly on the ambient fields at
/// `y`: curl by the exterior derivative and the triple term by the volume
/// form.
pub fn cs_density_at(frame: &LambdaFrame, y: &Vector4<f64>) -> ([f64; 3], f64) {
    let a = frame.ambient_fields();
    let h = [0, 1, 2].map(|l| a[l].at(y).dot(&a[l].curl_at(y)));
    let t = 3.0 * volume_form(y, &a[0].at(y), &a[1].at(y), &a[2].at(y));
    (h, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleReport {
    pub l: f64,
    /// Volume of the rescaled manifold over the original.
    pub volume_ratio: f64,
    /// Integrated triple term of the rescaled potentials over the original.
    pub term2_density_ratio: f64,
    /// Pointwise ratio of the triple-term densities (`l⁻³`).
    pub pointwise_ratio: f64,
}

/// Dilates the sphere of radius `λ` by `l` and shrinks each potential by
/// `l⁻¹`: `A'(y') = l⁻¹ A(y'/l)`.
pub fn rescale_check(frame: &LambdaFrame, l: f64) -> Result<RescaleReport, HyperbolicError> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(HyperbolicError::NonPositiveScale(l));
    }
    let before = Domain::Sphere { radius: frame.lambda };
    let after = Domain::Sphere { radius: frame.lambda * l };
    let volume_ratio = after.volume() / before.volume();
    let a = frame.ambient_fields();
    let y = frame.reference_point();
    let y_scaled = y * l;
    let density = |y: &Vector4<f64>, s: f64| {
        let v = [0, 1, 2].map(|i| a[i].at(&(y / s)) / s);
        3.0 * volume_form(y, &v[0], &v[1], &v[2])
    };
    let pointwise_ratio = density(&y_scaled, l) / density(&y, 1.0);
    Ok(RescaleReport { l, volume_ratio, term2_density_ratio: pointwise_ratio * volume_ratio, pointwise_ratio })
}

/// Sectional curvatures of the frame planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionalProfile {
    pub lambda: f64,
    /// Plane `(e, ẽ)`.
    pub horizontal: f64,
    /// Plane `(f, e)`.
    pub vertical1: f64,
    /// Plane `(f, ẽ)`.
    pub vertical2: f64,
}

pub fn sectional_profile(lambda: f64) -> Result<SectionalProfile, HyperbolicError> {
    let frame = build_lambda_frame(lambda, true)?;
    let [k12, k13, k23] = milnor_curvatures(&frame.spec)?;
    Ok(SectionalProfile { lambda, horizontal: k23, vertical1: k12, vertical2: k13 })
}

/// Log-log fit of `|horizontal|` against `λ`.
pub fn horizontal_fit(grid: &[f64]) -> Result<ScalingFit, HyperbolicError> {
    let profiles = grid.iter().map(|&l| sectional_profile(l)).collect::<Result<Vec<_>, _>>()?;
    let y: Vec<f64> = profiles.iter().map(|p| p.horizontal.abs()).collect();
    Ok(ScalingFit::fit(grid, &y)?.with_reference("horizontal", -2.0 / 3.0))
}

/// Fit of `|vertical1 − c λ^{−2/3}|` against `λ`, with `c` the least-squares
/// coefficient of `λ^{−2/3}` in the vertical curvature over the grid. The
/// remainder is where a `λ^{−5/3}` term would show.
pub fn vertical_excess_fit(grid: &[f64]) -> Result<ScalingFit, HyperbolicError> {
    let profiles = grid.iter().map(|&l| sectional_profile(l)).collect::<Result<Vec<_>, _>>()?;
    let basis: Vec<f64> = grid.iter().map(|l| l.powf(-2.0 / 3.0)).collect();
    let c = profiles.iter().zip(&basis).map(|(p, b)| p.vertical1 * b).sum::<f64>()
        / basis.iter().map(|b| b * b).sum::<f64>();
    let excess: Vec<f64> = profiles.iter().zip(&basis).map(|(p, b)| (p.vertical1 - c * b).abs()).collect();
    Ok(ScalingFit::fit(grid, &excess)?.with_reference("vertical excess", -5.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{chart_curl, haar_point};
    use crate::lie_frame::commutator;
    use crate::mc::stream_rng;

    #[test]
    fn rejects_non_positive_lambda() {
        assert_eq!(build_lambda_frame(0.0, true), Err(HyperbolicError::NonPositiveLambda(0.0)));
        assert_eq!(build_lambda_frame(-1.0, false), Err(HyperbolicError::NonPositiveLambda(-1.0)));
        assert!(matches!(sectional_profile(-2.0), Err(HyperbolicError::NonPositiveLambda(_))));
    }

    #[test]
    fn curl_is_minus_two_over_lambda() {
        for lambda in [0.25, 1.0, 2.0, 4.0] {
            let f = build_lambda_frame(lambda, true).unwrap();
            for mu in f.curl_eigenvalues().unwrap() {
                assert!((mu + 2.0 / lambda).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ambient_fields_realize_spec() {
        let lambda = 2.5;
        let f = build_lambda_frame(lambda, false).unwrap();
        let a = f.ambient_fields();
        let mut rng = stream_rng(3, 0);
        for _ in 0..10 {
            let y = haar_point(&mut rng) * lambda;
            for i in 0..3 {
                assert!((a[i].at(&y).norm_squared() - f.spec.g[i]).abs() < 1e-12);
                let fd = chart_curl(&a[i], &y, 1e-4);
                assert!((fd + a[i].at(&y) * (2.0 / lambda)).norm() < 1e-6);
                for j in 0..3 {
                    let br = a[i].lie_bracket(&a[j]).at(&y);
                    let alg: Vector4<f64> = (0..3).map(|k| a[k].at(&y) * f.spec.c[i][j][k]).sum();
                    assert!((br - alg).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn right_triple_volume_is_lambda() {
        for lambda in [0.5, 1.0, 3.0] {
            let f = build_lambda_frame(lambda, true).unwrap();
            assert!((f.right_triple_volume() - lambda).abs() < 1e-12);
        }
    }

    #[test]
    fn helicity_density_is_exactly_minus_two() {
        for lambda in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let f = build_lambda_frame(lambda, true).unwrap();
            let (h, t) = cs_density_lambda(&f).unwrap();
            assert!((h + 2.0).abs() < 1e-12, "{lambda}: {h}");
            let (direct_h, direct_t) = cs_density_at(&f, &f.reference_point());
            for v in direct_h {
                assert!((v + 2.0).abs() < 1e-12);
            }
            assert!((direct_t - t).abs() < 1e-12 * t.abs().max(1.0));
        }
    }

    #[test]
    fn triple_term_grows_as_three_halves() {
        // |A|² = λ is forced by helicity −2 and curl −2/λ, so the triple
        // term is 3 λ^{3/2} rather than a multiple of λ^{−1}.
        for lambda in [1.0, 2.0, 4.0, 8.0] {
            let (_, t) = cs_density_lambda(&build_lambda_frame(lambda, true).unwrap()).unwrap();
            assert!((t - 3.0 * lambda.powf(1.5)).abs() < 1e-12 * t);
        }
    }

    #[test]
    fn rescaling() {
        let f = build_lambda_frame(2.0, true).unwrap();
        for l in [0.5, 1.0, 2.0, 3.0] {
            let r = rescale_check(&f, l).unwrap();
            assert!((r.volume_ratio - l * l * l).abs() < 1e-12 * l * l * l);
            assert!((r.term2_density_ratio - 1.0).abs() < 1e-12);
        }
        let id = rescale_check(&f, 1.0).unwrap();
        assert_eq!((id.volume_ratio, id.term2_density_ratio), (1.0, 1.0));
        assert_eq!(rescale_check(&f, 0.0), Err(HyperbolicError::NonPositiveScale(0.0)));
    }

    #[test]
    fn round_profile_and_flat_limit() {
        let p = sectional_profile(1.0).unwrap();
        for k in [p.horizontal, p.vertical1, p.vertical2] {
            assert!((k - 1.0).abs() < 1e-12);
        }
        let far = sectional_profile(1e6).unwrap();
        assert!(far.horizontal.abs().max(far.vertical1.abs()).max(far.vertical2.abs()) < 1e-3);
        let fit = horizontal_fit(&[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-10);
    }

    #[test]
    fn commutator_scales_with_lambda() {
        let f = build_lambda_frame(2.0, false).unwrap();
        let e = |i| FrameFieldIndex::new(i).unwrap();
        assert_eq!(commutator(&f.spec, e(2), e(3)).unwrap(), [0.25, 0.0, 0.0]);
        assert_eq!(commutator(&f.spec, e(3), e(1)).unwrap(), [0.0, 1.0, 0.0]);
    }
}
