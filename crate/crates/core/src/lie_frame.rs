//! Left-invariant frames on three-dimensional Lie groups.
//!
//! A [`LieFrameSpec`] stores the structure constants of a frame
//! `(E_1, E_2, E_3)`, the squared lengths of the frame fields and the
//! orientation of the frame relative to the manifold. Everything else in this
//! module (curl eigenvalues, brackets, sectional curvatures) is pure algebra
//! on those 27 + 3 + 1 numbers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Off-diagonal curl components above this are not an eigenfield.
pub const EIGENFIELD_TOLERANCE: f64 = 1e-10;

/// Frame brackets are reported in the Lie-algebra normalization where the
/// imaginary quaternions satisfy `[i, j] = k`, i.e. half of the vector-field
/// commutator (`x∘i` and `x∘j` commute to `2 x∘k`).
pub const BRACKET_NORMALIZATION: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("frame field {index} is not a curl eigenfield (off-diagonal component {residual:e})")]
    NotEigenfield { index: usize, residual: f64 },
    #[error("commutator of frame field {0} with itself")]
    IndexClash(usize),
    #[error("metric coefficient g[{index}] = {value} is not positive")]
    DegenerateMetric { index: usize, value: f64 },
    #[error("frame index {0} outside 1..=3")]
    BadIndex(usize),
    #[error("malformed spec record: {0}")]
    Parse(String),
}

/// One of the three frame fields, numbered `1..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameFieldIndex(u8);

impl FrameFieldIndex {
    pub const ALL: [FrameFieldIndex; 3] = [FrameFieldIndex(1), FrameFieldIndex(2), FrameFieldIndex(3)];

    pub fn new(idx: usize) -> Result<Self, FrameError> {
        match idx {
            1..=3 => Ok(Self(idx as u8)),
            _ => Err(FrameError::BadIndex(idx)),
        }
    }

    /// Zero-based position.
    pub fn zero_based(self) -> usize {
        usize::from(self.0) - 1
    }

    pub fn get(self) -> usize {
        usize::from(self.0)
    }

    /// `l ↦ l + 1 (mod 3)`.
    pub fn succ(self) -> Self {
        Self(self.0 % 3 + 1)
    }
}

/// Structure constants, diagonal metric and orientation of a frame.
///
/// `c[i][j][k]` is the coefficient of `E_k` in the vector-field commutator
/// `[E_i, E_j]`; `g[i] = (E_i, E_i)`; `orientation = +1` when `(E_1, E_2, E_3)`
/// is positively oriented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieFrameSpec {
    pub name: String,
    pub c: [[[f64; 3]; 3]; 3],
    pub g: [f64; 3],
    pub orientation: i8,
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

impl LieFrameSpec {
    /// Builds a spec from the three cyclic brackets
    /// `[E_2,E_3] = a_1 E_1`, `[E_3,E_1] = a_2 E_2`, `[E_1,E_2] = a_3 E_3`.
    pub fn diagonal(name: &str, brackets: [f64; 3], g: [f64; 3], orientation: i8) -> Self {
        let mut c = [[[0.0; 3]; 3]; 3];
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            c[i][j][k] = brackets[k];
            c[j][i][k] = -brackets[k];
        }
        Self { name: name.to_string(), c, g, orientation }
    }

    /// Left-invariant frame of the unit three-sphere (`[E_i, E_j] = 2 E_k`).
    pub fn su2_left() -> Self {
        Self::diagonal("su2-left", [2.0; 3], [1.0; 3], 1)
    }

    /// Right-translated frame of the unit three-sphere. Same bracket table,
    /// opposite handedness relative to the manifold.
    pub fn su2_right() -> Self {
        Self::diagonal("su2-right", [2.0; 3], [1.0; 3], -1)
    }

    /// Unit tangent bundle of the curvature −1 plane with the fiber field
    /// stretched to length `lambda`: basis `(f, e, ẽ)` = (fiber rotation,
    /// geodesic flow, conjugate geodesic flow) with
    /// `[f, e] = ẽ`, `[ẽ, f] = e`, `[e, ẽ] = −f`.
    pub fn geodesic_flow(lambda: f64) -> Self {
        Self::diagonal(
            &format!("geodesic-flow(lambda={lambda:?})"),
            [-1.0, 1.0, 1.0],
            [lambda * lambda, 1.0, 1.0],
            1,
        )
    }

    /// Largest violation of the Jacobi identity over all index triples.
    pub fn jacobi_residual(&self) -> f64 {
        let c = &self.c;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for m in 0..3 {
                        let mut s = 0.0;
                        for l in 0..3 {
                            s += c[i][j][l] * c[l][k][m]
                                + c[j][k][l] * c[l][i][m]
                                + c[k][i][l] * c[l][j][m];
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst = worst.max((self.c[i][j][k] + self.c[j][i][k]).abs());
                }
            }
        }
        worst
    }

    pub fn check_metric(&self) -> Result<(), FrameError> {
        for (index, &value) in self.g.iter().enumerate() {
            if !(value > 0.0) {
                return Err(FrameError::DegenerateMetric { index, value });
            }
        }
        Ok(())
    }

    /// Structure constants of the orthonormal frame `u_i = E_i / |E_i|`.
    pub fn orthonormal_constants(&self) -> [[[f64; 3]; 3]; 3] {
        let len = self.g.map(f64::sqrt);
        let mut out = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[i][j][k] = self.c[i][j][k] * len[k] / (len[i] * len[j]);
                }
            }
        }
        out
    }

    /// Multiply every metric coefficient by `s²`.
    pub fn scaled_metric(&self, s: f64) -> Self {
        Self { g: self.g.map(|v| v * s * s), ..self.clone() }
    }

    /// Curl of `E_l` expressed in the frame basis.
    pub fn curl_components(&self, l: FrameFieldIndex) -> Result<[f64; 3], FrameError> {
        self.check_metric()?;
        let cn = self.orthonormal_constants();
        let l = l.zero_based();
        let sign = f64::from(self.orientation);
        // d(u_l♭)(u_a, u_b) = −⟨u_l, [u_a, u_b]⟩ for left-invariant fields; the
        // Hodge star sends the (a, b) component to the cyclic complement m.
        let mut on_unit = [0.0; 3];
        for (m, slot) in on_unit.iter_mut().enumerate() {
            let (a, b) = ((m + 1) % 3, (m + 2) % 3);
            *slot = -sign * cn[a][b][l];
        }
        // curl E_l = |E_l| curl u_l; convert u_m back to E_m.
        let len = self.g.map(f64::sqrt);
        let mut out = [0.0; 3];
        for m in 0..3 {
            out[m] = len[l] * on_unit[m] / len[m];
        }
        Ok(out)
    }
}

/// Eigenvalue `μ` with `rot E_l = μ E_l`.
pub fn curl_eigenvalue(spec: &LieFrameSpec, l: FrameFieldIndex) -> Result<f64, FrameError> {
    let comps = spec.curl_components(l)?;
    let li = l.zero_based();
    let len = spec.g.map(f64::sqrt);
    for m in 0..3 {
        if m == li {
            continue;
        }
        // Compare in unit-length terms so the tolerance is scale free.
        let residual = (comps[m] * len[m] / len[li]).abs();
        if residual > EIGENFIELD_TOLERANCE {
            return Err(FrameError::NotEigenfield { index: l.get(), residual });
        }
    }
    Ok(comps[li])
}

/// Coefficients of `[E_i, E_j]` in the frame basis, in the Lie-algebra
/// normalization (see [`BRACKET_NORMALIZATION`]).
pub fn commutator(
    spec: &LieFrameSpec,
    i: FrameFieldIndex,
    j: FrameFieldIndex,
) -> Result<[f64; 3], FrameError> {
    if i == j {
        return Err(FrameError::IndexClash(i.get()));
    }
    Ok(spec.c[i.zero_based()][j.zero_based()].map(|v| BRACKET_NORMALIZATION * v))
}

/// Curvature tensor `R[a][b][c][d] = ⟨R(u_a, u_b) u_c, u_d⟩` of the
/// left-invariant metric in the orthonormal frame.
pub fn riemann_orthonormal(spec: &LieFrameSpec) -> Result<[[[[f64; 3]; 3]; 3]; 3], FrameError> {
    spec.check_metric()?;
    let cn = spec.orthonormal_constants();
    // Koszul: ∇_{u_a} u_b = Σ_k Γ[a][b][k] u_k.
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for k in 0..3 {
                gamma[a][b][k] = 0.5 * (cn[a][b][k] - cn[b][k][a] + cn[k][a][b]);
            }
        }
    }
    // ∇_{u_a} ∇_{u_b} u_c, coefficients on u_d.
    let nabla2 = |a: usize, b: usize, c: usize, d: usize| -> f64 {
        (0..3).map(|m| gamma[b][c][m] * gamma[a][m][d]).sum::<f64>()
    };
    let mut r = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let bracket: f64 = (0..3).map(|m| cn[a][b][m] * gamma[m][c][d]).sum();
                    r[a][b][c][d] = nabla2(a, b, c, d) - nabla2(b, a, c, d) - bracket;
                }
            }
        }
    }
    Ok(r)
}

/// Sectional curvatures of the frame planes `(1,2)`, `(1,3)`, `(2,3)`.
pub fn milnor_curvatures(spec: &LieFrameSpec) -> Result<[f64; 3], FrameError> {
    let r = riemann_orthonormal(spec)?;
    let k = |a: usize, b: usize| r[a][b][b][a];
    Ok([k(0, 1), k(0, 2), k(1, 2)])
}

impl fmt::Display for LieFrameSpec {
    /// Line-oriented record; floats use the shortest representation that
    /// parses back to the same bits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name = {}", self.name)?;
        let c: Vec<String> =
            self.c.iter().flatten().flatten().map(|v| format!("{v:?}")).collect();
        writeln!(f, "c = {}", c.join(" "))?;
        let g: Vec<String> = self.g.iter().map(|v| format!("{v:?}")).collect();
        writeln!(f, "g = {}", g.join(" "))?;
        writeln!(f, "orientation = {}", self.orientation)
    }
}

fn parse_floats(field: &str, raw: &str, n: usize) -> Result<Vec<f64>, FrameError> {
    let values: Vec<f64> = raw
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| FrameError::Parse(format!("{field}: {t}: {e}"))))
        .collect::<Result<_, _>>()?;
    if values.len() != n {
        return Err(FrameError::Parse(format!("{field}: expected {n} values, got {}", values.len())));
    }
    Ok(values)
}

impl FromStr for LieFrameSpec {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (mut name, mut c, mut g, mut orientation) = (None, None, None, None);
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| FrameError::Parse(format!("missing '=' in {line:?}")))?;
            let value = value.trim();
            match key.trim() {
                "name" => name = Some(value.to_string()),
                "c" => c = Some(parse_floats("c", value, 27)?),
                "g" => g = Some(parse_floats("g", value, 3)?),
                "orientation" => {
                    orientation = Some(match value {
                        "1" | "+1" => 1,
                        "-1" => -1,
                        other => return Err(FrameError::Parse(format!("orientation {other}"))),
                    })
                }
                other => return Err(FrameError::Parse(format!("unknown key {other}"))),
            }
        }
        let missing = |k: &str| FrameError::Parse(format!("missing {k}"));
        let flat = c.ok_or_else(|| missing("c"))?;
        let mut cc = [[[0.0; 3]; 3]; 3];
        for (n, v) in flat.into_iter().enumerate() {
            cc[n / 9][(n / 3) % 3][n % 3] = v;
        }
        let g = g.ok_or_else(|| missing("g"))?;
        Ok(Self {
            name: name.ok_or_else(|| missing("name"))?,
            c: cc,
            g: [g[0], g[1], g[2]],
            orientation: orientation.ok_or_else(|| missing("orientation"))?,
        })
    }
}

/// Totally antisymmetric symbol on zero-based indices.
pub fn epsilon(i: usize, j: usize, k: usize) -> f64 {
    levi_civita(i, j, k)
}
