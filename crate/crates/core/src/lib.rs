//! Beltrami frames on the three-sphere and on the unit tangent bundle of the
//! hyperbolic plane, Chern-Simons densities, linking numbers of field lines,
//! and Monte Carlo scaling laws for geodesic triangles.

pub mod benchmarks;
pub mod curvature_oracle;
pub mod fields;
pub mod fit;
pub mod hyperbolic;
pub mod lie_frame;
pub mod linking;
pub mod mc;
pub mod quaternion;
pub mod scaling;
pub mod yang_mills;
