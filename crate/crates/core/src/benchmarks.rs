//! Closed test curves with known linking numbers.

use std::f64::consts::PI;

use nalgebra::{UnitQuaternion, Vector3, Vector4};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fields::{haar_point, tangent_basis};
use crate::linking::{hopf_fiber, FieldLine};
use crate::mc::stream_rng;
use crate::quaternion::Quaternion;

/// `center + a cos s + b sin s` in R³, `n` segments.
pub fn planar_circle(center: Vector3<f64>, a: Vector3<f64>, b: Vector3<f64>, n: usize) -> FieldLine {
    let pts = (0..n)
        .map(|k| {
            let s = 2.0 * PI * k as f64 / n as f64;
            center + a * s.cos() + b * s.sin()
        })
        .collect();
    FieldLine::euclidean(pts, true)
}

/// Geodesic circle of angular radius `radius` about `center` on the unit sphere.
pub fn small_circle(center: Vector4<f64>, radius: f64, n: usize) -> FieldLine {
    let basis = tangent_basis(&center);
    let pts: Vec<_> = (0..n)
        .map(|k| {
            let s = 2.0 * PI * k as f64 / n as f64;
            center * radius.cos() + (basis[0] * s.cos() + basis[1] * s.sin()) * radius.sin()
        })
        .collect();
    FieldLine::on_sphere(&pts, 1.0, true)
}

/// Curve on the torus about the circle of radius 2 in the xy-plane, going
/// once around the long way and twice around the short way.
pub fn torus_curve(n: usize) -> FieldLine {
    let pts = (0..n)
        .map(|k| {
            let s = 2.0 * PI * k as f64 / n as f64;
            let w = 2.0 + (2.0 * s).cos();
            Vector3::new(w * s.cos(), w * s.sin(), (2.0 * s).sin())
        })
        .collect();
    FieldLine::euclidean(pts, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairKind {
    /// Two fibers of `x ↦ x ∘ exp(s i)`.
    HopfRight,
    /// Two fibers of `x ↦ exp(s i) ∘ x`.
    HopfLeft,
    /// Two round circles, each piercing the other's disk once; a single
    /// crossing in the z-projection.
    ProjectionCrossing,
    /// Two round circles far apart.
    FarCircles,
    /// The torus curve and the core circle of its torus.
    TorusCore,
}

impl PairKind {
    pub const ALL: [PairKind; 5] =
        [PairKind::HopfRight, PairKind::HopfLeft, PairKind::ProjectionCrossing, PairKind::FarCircles, PairKind::TorusCore];

    pub fn expected(self) -> i64 {
        match self {
            PairKind::HopfRight => 1,
            PairKind::HopfLeft => -1,
            PairKind::ProjectionCrossing => -1,
            PairKind::FarCircles => 0,
            PairKind::TorusCore => -2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PairKind::HopfRight => "hopf-right",
            PairKind::HopfLeft => "hopf-left",
            PairKind::ProjectionCrossing => "projection-crossing",
            PairKind::FarCircles => "far-circles",
            PairKind::TorusCore => "torus-core",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPair {
    pub index: usize,
    pub kind: PairKind,
    pub curves: (FieldLine, FieldLine),
    pub expected: i64,
}

fn rotate(line: &FieldLine, rot: &UnitQuaternion<f64>, shift: &Vector3<f64>) -> FieldLine {
    let mut out = line.clone();
    for p in &mut out.points {
        p.u = rot * p.u + shift;
    }
    out
}

/// The unrotated pair of `kind`, with `segments` segments per curve.
pub fn canonical_pair(kind: PairKind, segments: usize) -> (FieldLine, FieldLine) {
    let (x, y, z) = (Vector3::x(), Vector3::y(), Vector3::z());
    match kind {
        PairKind::HopfRight | PairKind::HopfLeft => {
            let left = kind == PairKind::HopfLeft;
            (
                hopf_fiber(Quaternion::new(1.0, 0.0, 0.0, 0.0), Quaternion::I, left, segments),
                hopf_fiber(Quaternion::new(0.0, 0.0, 1.0, 0.0), Quaternion::I, left, segments),
            )
        }
        PairKind::ProjectionCrossing => {
            (planar_circle(Vector3::zeros(), x, y, segments), planar_circle(x, x, z, segments))
        }
        PairKind::FarCircles => {
            (planar_circle(Vector3::zeros(), x, y, segments), planar_circle(x * 5.0, x, z, segments))
        }
        PairKind::TorusCore => (torus_curve(2 * segments), planar_circle(Vector3::zeros(), x * 2.0, y * 2.0, segments)),
    }
}

/// `n` pairs cycling through every kind. Sphere pairs use Haar-random fiber
/// base points; Euclidean pairs get a random rigid motion.
pub fn benchmark_pairs(n: usize, segments: usize, seed: u64) -> Vec<BenchmarkPair> {
    (0..n)
        .map(|index| {
            let mut rng = stream_rng(seed, index as u64);
            let kind = PairKind::ALL[index % PairKind::ALL.len()];
            let curves = match kind {
                PairKind::HopfRight | PairKind::HopfLeft => {
                    let left = kind == PairKind::HopfLeft;
                    let p = Quaternion::from_vector(&haar_point(&mut rng));
                    let q = Quaternion::from_vector(&haar_point(&mut rng));
                    (hopf_fiber(p, Quaternion::I, left, segments), hopf_fiber(q, Quaternion::I, left, segments))
                }
                _ => {
                    let h = haar_point(&mut rng);
                    let rot = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(h[0], h[1], h[2], h[3]));
                    let shift = Vector3::from_fn(|_, _| rng.random_range(-3.0..3.0));
                    let (a, b) = canonical_pair(kind, segments);
                    (rotate(&a, &rot, &shift), rotate(&b, &rot, &shift))
                }
            };
            BenchmarkPair { index, kind, curves, expected: kind.expected() }
        })
        .collect()
}

/// Five right Hopf fibers through Haar-random points (every pair links once).
pub fn hopf_quintuple(seed: u64, segments: usize) -> Vec<FieldLine> {
    let mut rng = stream_rng(seed, 0);
    (0..5)
        .map(|_| hopf_fiber(Quaternion::from_vector(&haar_point(&mut rng)), Quaternion::I, false, segments))
        .collect()
}

/// Four right Hopf fibers and one small circle, unlinked from all of them.
pub fn mixed_quintuple(seed: u64, segments: usize) -> Vec<FieldLine> {
    let mut lines = hopf_quintuple(seed, segments);
    let mut rng = stream_rng(seed, 1);
    // Keep the circle well away from the fibers.
    let center = loop {
        let c = haar_point(&mut rng);
        let clear = lines[..4].iter().all(|l| l.ambient().iter().all(|p| (p - c).norm() > 0.1));
        if clear {
            break c;
        }
    };
    lines[4] = small_circle(center, 0.02, segments.min(120));
    lines
}
