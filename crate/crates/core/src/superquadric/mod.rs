//! Superquadrics: an 11-DoF shape family (three scales, two exponents and a
//! rigid pose) spanning boxes, cylinders and ellipsoids.
//!
//! In the canonical frame the inside-outside function is
//!
//! ```text
//! F(x) = ((|x|/a₁)^(2/ε₂) + (|y|/a₂)^(2/ε₂))^(ε₂/ε₁) + (|z|/a₃)^(2/ε₁)
//! ```
//!
//! with `F < 1` inside, `F = 1` on the surface and `F > 1` outside.

mod fit;

use std::f64::consts::PI;

use nalgebra::{Isometry3, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fit::{
    fit_superquadric, fit_superquadric_starts, FitConfig, FitRecord, FitResult, PARAMETER_COUNT,
    SCALE_MAX, SCALE_MIN,
};

pub const EXPONENT_MIN: f64 = 0.1;
pub const EXPONENT_MAX: f64 = 1.9;
const QUATERNION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SqError {
    #[error("scales must be positive and finite, got {0:?}")]
    InvalidScale([f64; 3]),
    #[error("exponents must lie in [{EXPONENT_MIN}, {EXPONENT_MAX}], got {0:?}")]
    InvalidExponents([f64; 2]),
    #[error("position must be finite")]
    InvalidPosition,
    #[error("quaternion norm {0} is not 1")]
    NonUnitQuaternion(f64),
    #[error("radial distance is undefined at the superquadric center")]
    CenterPoint,
    #[error("fitting needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("input point {0} is not finite")]
    NonFinitePoint(usize),
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("regularization weight {0} needs a signed distance grid")]
    MissingGrid(f64),
    #[error("start {start} ended with a non-finite loss")]
    NonFiniteLoss { start: usize },
}

/// A posed superquadric. Construction validates every invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SuperquadricParams", into = "SuperquadricParams")]
pub struct Superquadric {
    scale: Vector3<f64>,
    exponents: [f64; 2],
    position: Point3<f64>,
    orientation: UnitQuaternion<f64>,
}

/// Flat parameter layout used for files and observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperquadricParams {
    pub scale: [f64; 3],
    pub exponents: [f64; 2],
    pub position: [f64; 3],
    pub quaternion_wxyz: [f64; 4],
}

impl Superquadric {
    pub fn new(
        scale: Vector3<f64>,
        exponents: [f64; 2],
        position: Point3<f64>,
        orientation: UnitQuaternion<f64>,
    ) -> Result<Self, SqError> {
        if scale.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(SqError::InvalidScale(scale.into()));
        }
        if exponents
            .iter()
            .any(|e| !(EXPONENT_MIN..=EXPONENT_MAX).contains(e))
        {
            return Err(SqError::InvalidExponents(exponents));
        }
        if position.iter().any(|c| !c.is_finite()) {
            return Err(SqError::InvalidPosition);
        }
        let norm = orientation.quaternion().norm();
        if !norm.is_finite() || (norm - 1.0).abs() > QUATERNION_TOLERANCE {
            return Err(SqError::NonUnitQuaternion(norm));
        }
        Ok(Self {
            scale,
            exponents,
            position,
            orientation,
        })
    }

    /// Axis-aligned superquadric at `position`.
    pub fn axis_aligned(
        scale: Vector3<f64>,
        exponents: [f64; 2],
        position: Point3<f64>,
    ) -> Result<Self, SqError> {
        Self::new(scale, exponents, position, UnitQuaternion::identity())
    }

    pub fn sphere(radius: f64, center: Point3<f64>) -> Result<Self, SqError> {
        Self::axis_aligned(Vector3::repeat(radius), [1.0, 1.0], center)
    }

    pub fn scale(&self) -> Vector3<f64> {
        self.scale
    }

    /// `[ε₁, ε₂]`: ε₁ shapes the profile along z, ε₂ the cross-section in xy.
    pub fn exponents(&self) -> [f64; 2] {
        self.exponents
    }

    pub fn position(&self) -> Point3<f64> {
        self.position
    }

    pub fn orientation(&self) -> UnitQuaternion<f64> {
        self.orientation
    }

    pub fn pose(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position.coords), self.orientation)
    }

    /// The same shape moved by `transform`.
    pub fn transformed(&self, transform: &Isometry3<f64>) -> Self {
        let pose = transform * self.pose();
        Self {
            position: Point3::from(pose.translation.vector),
            orientation: pose.rotation,
            ..*self
        }
    }

    /// Coordinates of a world point in the canonical frame.
    pub fn to_local(&self, point: &Point3<f64>) -> Vector3<f64> {
        self.orientation
            .inverse_transform_vector(&(point - self.position))
    }

    pub fn implicit_value(&self, point: &Point3<f64>) -> f64 {
        inside_outside(&self.scale, self.exponents, &self.to_local(point))
    }

    /// Radial approximation of the Euclidean distance to the surface: the
    /// distance from `point` to where the ray from the center through it
    /// crosses the surface.
    pub fn radial_distance(&self, point: &Point3<f64>) -> Result<f64, SqError> {
        let x = self.to_local(point);
        if x.norm() == 0.0 {
            return Err(SqError::CenterPoint);
        }
        Ok(radial_residual(&self.scale, self.exponents, &x).abs())
    }

    /// Surface point at latitude `eta ∈ [−π/2, π/2]` and longitude `omega ∈ [−π, π]`.
    pub fn surface_point(&self, eta: f64, omega: f64) -> Point3<f64> {
        self.position
            + self.orientation * canonical_surface_point(&self.scale, self.exponents, eta, omega)
    }

    pub fn sample_surface(&self, n: usize, seed: u64) -> Vec<Point3<f64>> {
        self.sample_surface_with(SurfaceSampling::Parametric, n, seed)
    }

    pub fn sample_surface_with(
        &self,
        sampling: SurfaceSampling,
        n: usize,
        seed: u64,
    ) -> Vec<Point3<f64>> {
        surface_coords(sampling, &self.scale, n, seed)
            .iter()
            .map(|c| {
                self.position + self.orientation * c.canonical_point(&self.scale, self.exponents)
            })
            .collect()
    }

    pub fn params(&self) -> SuperquadricParams {
        let q = self.orientation.quaternion();
        SuperquadricParams {
            scale: self.scale.into(),
            exponents: self.exponents,
            position: self.position.coords.into(),
            quaternion_wxyz: [q.w, q.i, q.j, q.k],
        }
    }

    /// Scale, exponents, position, quaternion (w first): 12 numbers.
    pub fn to_vector(&self) -> [f64; 12] {
        let p = self.params();
        let mut out = [0.0; 12];
        out[..3].copy_from_slice(&p.scale);
        out[3..5].copy_from_slice(&p.exponents);
        out[5..8].copy_from_slice(&p.position);
        out[8..].copy_from_slice(&p.quaternion_wxyz);
        out
    }
}

impl TryFrom<SuperquadricParams> for Superquadric {
    type Error = SqError;

    fn try_from(p: SuperquadricParams) -> Result<Self, SqError> {
        let [w, i, j, k] = p.quaternion_wxyz;
        let q = Quaternion::new(w, i, j, k);
        let norm = q.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > QUATERNION_TOLERANCE {
            return Err(SqError::NonUnitQuaternion(norm));
        }
        Self::new(
            Vector3::from(p.scale),
            p.exponents,
            Point3::from(p.position),
            UnitQuaternion::new_unchecked(q),
        )
    }
}

impl From<Superquadric> for SuperquadricParams {
    fn from(sq: Superquadric) -> Self {
        sq.params()
    }
}

pub fn implicit_value(sq: &Superquadric, point: &Point3<f64>) -> f64 {
    sq.implicit_value(point)
}

pub fn radial_distance(sq: &Superquadric, point: &Point3<f64>) -> Result<f64, SqError> {
    sq.radial_distance(point)
}

/// `n` surface points from the trigonometric parameterization with
/// Latin-hypercube stratified angles. The same seed gives the same points.
pub fn sq_surface_sample(sq: &Superquadric, n: usize, seed: u64) -> Vec<Point3<f64>> {
    sq.sample_surface(n, seed)
}

fn inside_outside(scale: &Vector3<f64>, [e1, e2]: [f64; 2], x: &Vector3<f64>) -> f64 {
    let xy = (x.x.abs() / scale.x).powf(2.0 / e2) + (x.y.abs() / scale.y).powf(2.0 / e2);
    xy.powf(e2 / e1) + (x.z.abs() / scale.z).powf(2.0 / e1)
}

/// Signed radial distance, positive outside. `F` is homogeneous of degree
/// `2/ε₁` along rays, so the surface crossing is at `x · F^(−ε₁/2)`.
fn radial_residual(scale: &Vector3<f64>, exponents: [f64; 2], x: &Vector3<f64>) -> f64 {
    let f = inside_outside(scale, exponents, x);
    x.norm() * (1.0 - f.powf(-exponents[0] / 2.0))
}

/// How surface samples are spread over a superquadric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceSampling {
    /// Stratified angles of the trigonometric parameterization. Samples
    /// crowd into edges and corners as the exponents shrink.
    #[default]
    Parametric,
    /// Stratified points on the faces of the scale box, allotted by face
    /// area and projected radially onto the surface. Close to area-uniform
    /// for box-like shapes.
    Radial,
}

/// Location of a surface sample independent of the shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SurfaceCoord {
    Angles {
        eta: f64,
        omega: f64,
    },
    /// A point on the surface of the cube `[-1, 1]³`.
    Box(Vector3<f64>),
}

impl SurfaceCoord {
    pub(crate) fn canonical_point(
        &self,
        scale: &Vector3<f64>,
        exponents: [f64; 2],
    ) -> Vector3<f64> {
        match *self {
            SurfaceCoord::Angles { eta, omega } => {
                canonical_surface_point(scale, exponents, eta, omega)
            }
            SurfaceCoord::Box(b) => {
                let u = b.component_mul(scale);
                u * inside_outside(scale, exponents, &u).powf(-exponents[0] / 2.0)
            }
        }
    }
}

/// Sample locations for `n` points. Radial sampling allots points to box
/// faces by the areas implied by `scale`.
pub(crate) fn surface_coords(
    sampling: SurfaceSampling,
    scale: &Vector3<f64>,
    n: usize,
    seed: u64,
) -> Vec<SurfaceCoord> {
    match sampling {
        SurfaceSampling::Parametric => stratified_angles(n, seed)
            .into_iter()
            .map(|(eta, omega)| SurfaceCoord::Angles { eta, omega })
            .collect(),
        SurfaceSampling::Radial => box_face_points(scale, n, seed)
            .into_iter()
            .map(SurfaceCoord::Box)
            .collect(),
    }
}

/// Stratified points on the six faces of `[-1, 1]³`, with counts
/// proportional to the face areas of the box with half-extents `scale`
/// (largest remainder rounding).
fn box_face_points(scale: &Vector3<f64>, n: usize, seed: u64) -> Vec<Vector3<f64>> {
    let areas: Vec<f64> = (0..6)
        .map(|f| scale[(f / 2 + 1) % 3] * scale[(f / 2 + 2) % 3])
        .collect();
    let total: f64 = areas.iter().sum();
    let quotas: Vec<f64> = areas.iter().map(|a| a / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&i, &j| {
        (quotas[j] - quotas[j].floor())
            .total_cmp(&(quotas[i] - quotas[i].floor()))
            .then(i.cmp(&j))
    });
    for &f in order.iter().take(n - counts.iter().sum::<usize>()) {
        counts[f] += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for (face, &m) in counts.iter().enumerate() {
        let (axis, sign) = (face / 2, if face % 2 == 0 { 1.0 } else { -1.0 });
        let mut strata: Vec<usize> = (0..m).collect();
        strata.shuffle(&mut rng);
        for (i, s) in strata.into_iter().enumerate() {
            let u = -1.0 + 2.0 * (i as f64 + rng.random::<f64>()) / m as f64;
            let v = -1.0 + 2.0 * (s as f64 + rng.random::<f64>()) / m as f64;
            let mut p = Vector3::zeros();
            p[axis] = sign;
            p[(axis + 1) % 3] = u;
            p[(axis + 2) % 3] = v;
            points.push(p);
        }
    }
    points
}

fn spow(base: f64, exponent: f64) -> f64 {
    base.signum() * base.abs().powf(exponent)
}

fn canonical_surface_point(
    scale: &Vector3<f64>,
    [e1, e2]: [f64; 2],
    eta: f64,
    omega: f64,
) -> Vector3<f64> {
    let (se, ce) = eta.sin_cos();
    let (so, co) = omega.sin_cos();
    let c = spow(ce, e1);
    Vector3::new(
        scale.x * c * spow(co, e2),
        scale.y * c * spow(so, e2),
        scale.z * spow(se, e1),
    )
}

/// Latin hypercube over `(η, ω) ∈ [−π/2, π/2] × [−π, π]`: every one of the
/// `n` strata of each angle holds exactly one jittered sample.
fn stratified_angles(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: Vec<usize> = (0..n).collect();
    strata.shuffle(&mut rng);
    let n_f = n as f64;
    strata
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let eta = -PI / 2.0 + PI * (i as f64 + rng.random::<f64>()) / n_f;
            let omega = -PI + 2.0 * PI * (s as f64 + rng.random::<f64>()) / n_f;
            (eta, omega)
        })
        .collect()
}
