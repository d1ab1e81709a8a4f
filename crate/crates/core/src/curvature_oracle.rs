//! Chart-based finite-difference curvature, used as an independent check on
//! [`crate::lie_frame::milnor_curvatures`].
//!
//! A [`ChartRealization`] gives the frame fields as explicit vector fields in a
//! coordinate chart. The metric is rebuilt from the coframe and the spec's
//! `g`, differentiated twice numerically, and contracted into sectional
//! curvatures. Nothing here touches structure constants.

use nalgebra::{Matrix3, Vector3, Vector4};

use crate::quaternion::Quaternion;

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-4;

pub trait ChartRealization {
    /// Columns are the frame fields `E_1, E_2, E_3` at chart point `u`.
    fn frame(&self, u: &Vector3<f64>) -> Matrix3<f64>;
}

/// Left-translated fields `E_l(x) = s_l · (l̄ ∘ x)` on the unit three-sphere,
/// read in the stereographic chart from `−1`.
///
/// With unit scales the brackets are `[E_i, E_j] = 2 E_k`; scales `(1, 1/λ, 1/λ)`
/// give `[E_2, E_3] = (2/λ²) E_1`, `[E_3, E_1] = 2 E_2`, `[E_1, E_2] = 2 E_3`.
#[derive(Debug, Clone)]
pub struct SphereChart {
    pub scales: [f64; 3],
}

/// Inverse stereographic projection from `−1` onto the unit sphere.
pub fn sphere_from_chart(u: &Vector3<f64>) -> Vector4<f64> {
    let r2 = u.norm_squared();
    let d = 1.0 + r2;
    Vector4::new((1.0 - r2) / d, 2.0 * u[0] / d, 2.0 * u[1] / d, 2.0 * u[2] / d)
}

/// Differential of the stereographic projection `x ↦ x_im / (1 + x_0)`.
pub fn chart_pushforward(x: &Vector4<f64>, v: &Vector4<f64>) -> Vector3<f64> {
    let d = 1.0 + x[0];
    Vector3::new(
        v[1] / d - x[1] * v[0] / (d * d),
        v[2] / d - x[2] * v[0] / (d * d),
        v[3] / d - x[3] * v[0] / (d * d),
    )
}

impl ChartRealization for SphereChart {
    fn frame(&self, u: &Vector3<f64>) -> Matrix3<f64> {
        let x = sphere_from_chart(u);
        let xq = Quaternion::from_vector(&x);
        let mut m = Matrix3::zeros();
        for l in 0..3 {
            let field = (Quaternion::imaginary_unit(l).conj() * xq).scale(self.scales[l]);
            m.set_column(l, &chart_pushforward(&x, &field.to_vector()));
        }
        m
    }
}

/// Unit tangent bundle of the upper half-plane, coordinates `(x, y, φ)` with
/// `φ` the Euclidean angle of the unit vector. Columns: fiber rotation,
/// geodesic flow, conjugate geodesic flow.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitTangentChart;

impl ChartRealization for UnitTangentChart {
    fn frame(&self, u: &Vector3<f64>) -> Matrix3<f64> {
        let (y, phi) = (u[1], u[2]);
        let (s, c) = phi.sin_cos();
        Matrix3::new(
            0.0, y * c, -y * s, //
            0.0, y * s, y * c, //
            1.0, -c, s,
        )
    }
}

fn metric<R: ChartRealization>(chart: &R, g: &[f64; 3], u: &Vector3<f64>) -> Matrix3<f64> {
    let coframe = chart.frame(u).try_inverse().expect("frame must be invertible");
    coframe.transpose() * Matrix3::from_diagonal(&Vector3::new(g[0], g[1], g[2])) * coframe
}

fn unit(i: usize) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    v[i] = 1.0;
    v
}

/// `Γ[k][i][j] = Γ^k_{ij}` by central differences of the metric.
fn christoffel<R: ChartRealization>(
    chart: &R,
    g: &[f64; 3],
    u: &Vector3<f64>,
    h: f64,
) -> [[[f64; 3]; 3]; 3] {
    let mut dg = [Matrix3::zeros(); 3];
    for (i, slot) in dg.iter_mut().enumerate() {
        let e = unit(i) * h;
        *slot = (metric(chart, g, &(u + e)) - metric(chart, g, &(u - e))) / (2.0 * h);
    }
    let ginv = metric(chart, g, u).try_inverse().expect("metric must be invertible");
    let mut out = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                out[k][i][j] = 0.5 * s;
            }
        }
    }
    out
}

/// Sectional curvatures of the frame planes `(1,2)`, `(1,3)`, `(2,3)` at `u`.
pub fn fd_frame_curvatures<R: ChartRealization>(
    chart: &R,
    g: &[f64; 3],
    u: &Vector3<f64>,
    h: f64,
) -> [f64; 3] {
    let gamma = christoffel(chart, g, u, h);
    let mut dgamma = [[[[0.0; 3]; 3]; 3]; 3]; // dgamma[m][k][i][j] = ∂_m Γ^k_ij
    for m in 0..3 {
        let e = unit(m) * h;
        let plus = christoffel(chart, g, &(u + e), h);
        let minus = christoffel(chart, g, &(u - e), h);
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    dgamma[m][k][i][j] = (plus[k][i][j] - minus[k][i][j]) / (2.0 * h);
                }
            }
        }
    }
    // R^l_{ijk} with R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l.
    let riemann = |l: usize, i: usize, j: usize, k: usize| -> f64 {
        let mut r = dgamma[i][l][j][k] - dgamma[j][l][i][k];
        for m in 0..3 {
            r += gamma[l][i][m] * gamma[m][j][k] - gamma[l][j][m] * gamma[m][i][k];
        }
        r
    };
    let gm = metric(chart, g, u);
    let frame = chart.frame(u);
    let sectional = |a: usize, b: usize| -> f64 {
        let x = frame.column(a);
        let y = frame.column(b);
        let mut num = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let r = riemann(l, i, j, k);
                        if r == 0.0 {
                            continue;
                        }
                        // ⟨R(X, Y) Y, X⟩
                        let lowered: f64 = (0..3).map(|m| gm[(l, m)] * x[m]).sum();
                        num += r * x[i] * y[j] * y[k] * lowered;
                    }
                }
            }
        }
        let xx = (x.transpose() * gm * x)[0];
        let yy = (y.transpose() * gm * y)[0];
        let xy = (x.transpose() * gm * y)[0];
        num / (xx * yy - xy * xy)
    };
    [sectional(0, 1), sectional(0, 2), sectional(1, 2)]
}

/// Commutator of two chart frame fields by central differences.
pub fn fd_bracket<R: ChartRealization>(
    chart: &R,
    a: usize,
    b: usize,
    u: &Vector3<f64>,
    h: f64,
) -> Vector3<f64> {
    let f = chart.frame(u);
    let (va, vb) = (f.column(a).into_owned(), f.column(b).into_owned());
    let mut out = Vector3::zeros();
    for i in 0..3 {
        let e = unit(i) * h;
        let dp = chart.frame(&(u + e));
        let dm = chart.frame(&(u - e));
        let d_a = (dp.column(a) - dm.column(a)) / (2.0 * h);
        let d_b = (dp.column(b) - dm.column(b)) / (2.0 * h);
        out += d_b * va[i] - d_a * vb[i];
    }
    out
}
