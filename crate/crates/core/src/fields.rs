//! Tangent vector fields on round three-spheres embedded in `R⁴`, the two
//! stereographic charts used to read them, and quadrature domains.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Orientation of `S³`: a tangent basis `(v1, v2, v3)` at `x` is positive when
/// `S3_ORIENTATION · det[x, v1, v2, v3] > 0`. The sign is chosen so that the
/// left-translated frame `l̄ ∘ x` is positively oriented.
pub const S3_ORIENTATION: f64 = -1.0;

/// Chart coordinates beyond this norm switch to the opposite chart.
pub const CHART_SWITCH_RADIUS: f64 = 2.0;

pub fn unit_sphere_volume() -> f64 {
    2.0 * PI * PI
}

/// A tangent vector field on a round sphere centred at the origin of `R⁴`.
pub trait SphereField: Sync {
    fn at(&self, y: &Vector4<f64>) -> Vector4<f64>;
}

impl<F: Fn(&Vector4<f64>) -> Vector4<f64> + Sync> SphereField for F {
    fn at(&self, y: &Vector4<f64>) -> Vector4<f64> {
        self(y)
    }
}

/// `y ↦ M y`. Left and right quaternion translations are of this form, and
/// so are their brackets.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearField(pub Matrix4<f64>);

impl LinearField {
    pub fn zero() -> Self {
        Self(Matrix4::zeros())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0 * s)
    }

    /// Vector-field commutator `[V, W] = DW·V − DV·W`.
    pub fn lie_bracket(&self, other: &LinearField) -> LinearField {
        LinearField(other.0 * self.0 - self.0 * other.0)
    }

    /// Curl on the sphere through `y` (radius `|y|`), from the exterior
    /// derivative of `α = (M y)·dy`: `dα(u, v) = vᵀ M u − uᵀ M v`.
    pub fn curl_at(&self, y: &Vector4<f64>) -> Vector4<f64> {
        let e = tangent_basis(y);
        let d = |u: &Vector4<f64>, v: &Vector4<f64>| v.dot(&(self.0 * u)) - u.dot(&(self.0 * v));
        e[0] * d(&e[1], &e[2]) + e[1] * d(&e[2], &e[0]) + e[2] * d(&e[0], &e[1])
    }
}

impl SphereField for LinearField {
    fn at(&self, y: &Vector4<f64>) -> Vector4<f64> {
        self.0 * y
    }
}

/// `rot V` of a linear field, as a field in its own right.
#[derive(Debug, Clone)]
pub struct CurlOf<'a>(pub &'a LinearField);

impl SphereField for CurlOf<'_> {
    fn at(&self, y: &Vector4<f64>) -> Vector4<f64> {
        self.0.curl_at(y)
    }
}

fn det4(cols: [&Vector4<f64>; 4]) -> f64 {
    Matrix4::from_columns(&[*cols[0], *cols[1], *cols[2], *cols[3]]).determinant()
}

/// Oriented volume of three tangent vectors at `y`.
pub fn volume_form(y: &Vector4<f64>, a: &Vector4<f64>, b: &Vector4<f64>, c: &Vector4<f64>) -> f64 {
    S3_ORIENTATION * det4([&y.normalize(), a, b, c])
}

/// Positively oriented orthonormal basis of `T_y S³`.
pub fn tangent_basis(y: &Vector4<f64>) -> [Vector4<f64>; 3] {
    let n = y.normalize();
    let mut basis: Vec<Vector4<f64>> = Vec::with_capacity(3);
    // Start from the coordinate axes least aligned with n.
    let mut axes: Vec<usize> = (0..4).collect();
    axes.sort_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs()));
    for &ax in &axes {
        if basis.len() == 3 {
            break;
        }
        let mut v = Vector4::zeros();
        v[ax] = 1.0;
        v -= n * n.dot(&v);
        for b in &basis {
            v -= b * b.dot(&v);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
    }
    let mut out = [basis[0], basis[1], basis[2]];
    if volume_form(y, &out[0], &out[1], &out[2]) < 0.0 {
        out.swap(1, 2);
    }
    out
}

/// Haar-uniform point on the unit sphere.
pub fn haar_point<R: Rng + ?Sized>(rng: &mut R) -> Vector4<f64> {
    loop {
        let v = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Stereographic charts of the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    /// Plain `R³`, for curves that never lived on a sphere.
    Euclidean,
    /// Projection from `−1`: `u = x_im / (1 + x_0)`.
    South,
    /// Projection from `+1`: `u = x_im / (1 − x_0)`.
    North,
}

impl Chart {
    /// The chart to use at `x`: south unless that coordinate exceeds the
    /// switch radius.
    pub fn for_point(x: &Vector4<f64>) -> Chart {
        let south = Chart::South.project(x);
        if south.norm() > CHART_SWITCH_RADIUS {
            Chart::North
        } else {
            Chart::South
        }
    }

    fn pole_sign(self) -> f64 {
        match self {
            Chart::South => 1.0,
            Chart::North => -1.0,
            Chart::Euclidean => panic!("Euclidean chart has no sphere"),
        }
    }

    pub fn project(self, x: &Vector4<f64>) -> Vector3<f64> {
        let d = 1.0 + self.pole_sign() * x[0];
        Vector3::new(x[1] / d, x[2] / d, x[3] / d)
    }

    pub fn lift(self, u: &Vector3<f64>) -> Vector4<f64> {
        let s = u.norm_squared();
        let d = 1.0 + s;
        Vector4::new(self.pole_sign() * (1.0 - s) / d, 2.0 * u[0] / d, 2.0 * u[1] / d, 2.0 * u[2] / d)
    }

    /// `∂x/∂u` as a 4×3 matrix, returned column by column.
    pub fn lift_jacobian(self, u: &Vector3<f64>) -> [Vector4<f64>; 3] {
        let s = u.norm_squared();
        let d = 1.0 + s;
        let mut cols = [Vector4::zeros(); 3];
        for (j, col) in cols.iter_mut().enumerate() {
            col[0] = -self.pole_sign() * 4.0 * u[j] / (d * d);
            for i in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                col[i + 1] = 2.0 * delta / d - 4.0 * u[i] * u[j] / (d * d);
            }
        }
        cols
    }

    pub fn pushforward(self, x: &Vector4<f64>, v: &Vector4<f64>) -> Vector3<f64> {
        let p = self.pole_sign();
        let d = 1.0 + p * x[0];
        Vector3::new(
            v[1] / d - p * x[1] * v[0] / (d * d),
            v[2] / d - p * x[2] * v[0] / (d * d),
            v[3] / d - p * x[3] * v[0] / (d * d),
        )
    }

    /// `+1` when the chart's coordinate order agrees with [`S3_ORIENTATION`].
    pub fn orientation(self) -> f64 {
        let u = Vector3::new(0.1, 0.2, 0.3);
        let x = self.lift(&u);
        let j = self.lift_jacobian(&u);
        volume_form(&x, &j[0], &j[1], &j[2]).signum()
    }

    /// Conformal factor `φ` of the round metric `φ² |du|²` on the unit sphere.
    pub fn conformal_factor(u: &Vector3<f64>) -> f64 {
        2.0 / (1.0 + u.norm_squared())
    }
}

/// Curl of an arbitrary tangent field by central differences in a
/// stereographic chart of the sphere of radius `|y|`.
pub fn chart_curl<F: SphereField + ?Sized>(field: &F, y: &Vector4<f64>, h: f64) -> Vector4<f64> {
    let radius = y.norm();
    let x = y / radius;
    let chart = Chart::for_point(&x);
    let u0 = chart.project(&x);
    // Lowered chart components w_k = g_kk v^k with g = (r φ)² δ.
    let lowered = |u: &Vector3<f64>| -> Vector3<f64> {
        let xu = chart.lift(u);
        let v = field.at(&(xu * radius));
        let vu = chart.pushforward(&xu, &(v / radius));
        let phi = radius * Chart::conformal_factor(u);
        vu * (phi * phi)
    };
    let mut grad = Matrix3::zeros(); // grad[(k, j)] = ∂_j w_k
    for j in 0..3 {
        let mut e = Vector3::zeros();
        e[j] = h;
        let d = (lowered(&(u0 + e)) - lowered(&(u0 - e))) / (2.0 * h);
        grad.set_column(j, &d);
    }
    let phi = radius * Chart::conformal_factor(&u0);
    let sqrt_det = phi * phi * phi;
    let curl_u = Vector3::new(
        grad[(2, 1)] - grad[(1, 2)],
        grad[(0, 2)] - grad[(2, 0)],
        grad[(1, 0)] - grad[(0, 1)],
    ) * (chart.orientation() / sqrt_det);
    let jac = chart.lift_jacobian(&u0);
    (jac[0] * curl_u[0] + jac[1] * curl_u[1] + jac[2] * curl_u[2]) * radius
}

/// Region of a round sphere over which fields are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// The whole sphere of the given radius, sampled by Haar measure.
    Sphere { radius: f64 },
    /// Points whose south-chart coordinates lie in `[−b, b]³`.
    ChartBox { radius: f64, half_width: f64 },
}

impl Domain {
    /// A sample point and its importance weight (mean of `weight · f`
    /// estimates `∫ f`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vector4<f64>, f64) {
        match *self {
            Domain::Sphere { radius } => (haar_point(rng) * radius, unit_sphere_volume() * radius.powi(3)),
            Domain::ChartBox { radius, half_width } => {
                let u = Vector3::from_fn(|_, _| rng.random_range(-half_width..half_width));
                let phi = radius * Chart::conformal_factor(&u);
                let side = 2.0 * half_width;
                (Chart::South.lift(&u) * radius, side * side * side * phi * phi * phi)
            }
        }
    }

    /// Riemannian volume. The chart box uses a composite Simpson rule on
    /// the conformal factor.
    pub fn volume(&self) -> f64 {
        match *self {
            Domain::Sphere { radius } => unit_sphere_volume() * radius.powi(3),
            Domain::ChartBox { radius, half_width } => {
                const N: usize = 120;
                let h = 2.0 * half_width / N as f64;
                let w = |i: usize| match i {
                    0 | N => 1.0,
                    i if i % 2 == 1 => 4.0,
                    _ => 2.0,
                };
                let mut total = 0.0;
                for i in 0..=N {
                    for j in 0..=N {
                        for k in 0..=N {
                            let u = Vector3::new(
                                -half_width + i as f64 * h,
                                -half_width + j as f64 * h,
                                -half_width + k as f64 * h,
                            );
                            total += w(i) * w(j) * w(k) * Chart::conformal_factor(&u).powi(3);
                        }
                    }
                }
                total * (h / 3.0).powi(3) * radius.powi(3)
            }
        }
    }
}
