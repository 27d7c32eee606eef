//! Dense signed distance grid and the batched lookup engine.
//!
//! Voxel centers sit on the bounds: `dims` samples span each interval, so the
//! spacing is `(max - min) / (dims - 1)`. Values are stored as `f32`,
//! x-fastest (`index = x + nx * (y + ny * z)`). Queries outside the bounds are
//! clamped to the closest point of the grid volume before interpolation.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use super::MeshSdf;
use crate::mesh::TriangleMesh;

/// Points within this fraction of a voxel of a grid plane snap onto it, so a
/// query at a voxel center returns the stored value exactly.
const SNAP: f64 = 1e-9;
const QUERY_CHUNK: usize = 4096;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs at least 2 samples per axis, got {0:?}")]
    InvalidDims([usize; 3]),
    #[error("grid bounds must be finite with max > min on every axis")]
    InvalidBounds,
    #[error("expected {expected} grid values, got {actual}")]
    ValueCount { expected: usize, actual: usize },
    #[error("grid value {0} is not finite")]
    NonFinite(usize),
    #[error("grid file I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a grid file (bad magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported grid file version {0}")]
    UnsupportedVersion(u32),
    #[error("grid file truncated: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("grid file has {0} unexpected trailing bytes")]
    TrailingBytes(usize),
}

/// Voxel counts and bounds of a grid to build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub bounds_min: Point3<f64>,
    pub bounds_max: Point3<f64>,
}

impl Default for GridSpec {
    /// 200³ samples over [−0.5 m, 0.5 m]³.
    fn default() -> Self {
        Self::cube(200, 0.5)
    }
}

impl GridSpec {
    /// `dims`³ samples over `[-half_width, half_width]³`.
    pub fn cube(dims: usize, half_width: f64) -> Self {
        Self::centered([dims; 3], Vector3::repeat(half_width), Point3::origin())
    }

    /// A box of `half_extent` around `center`; `center` is the offset of the
    /// grid from the mesh origin.
    pub fn centered(dims: [usize; 3], half_extent: Vector3<f64>, center: Point3<f64>) -> Self {
        Self {
            dims,
            bounds_min: center - half_extent,
            bounds_max: center + half_extent,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.dims.iter().any(|&n| n < 2) {
            return Err(GridError::InvalidDims(self.dims));
        }
        let ok = (0..3).all(|k| {
            self.bounds_min[k].is_finite()
                && self.bounds_max[k].is_finite()
                && self.bounds_max[k] > self.bounds_min[k]
        });
        if !ok {
            return Err(GridError::InvalidBounds);
        }
        Ok(())
    }

    pub fn spacing(&self) -> Vector3<f64> {
        Vector3::from_fn(|k, _| {
            (self.bounds_max[k] - self.bounds_min[k]) / (self.dims[k] - 1) as f64
        })
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryMode {
    /// Trilinear interpolation of the 8 surrounding samples.
    #[default]
    Trilinear,
    /// Value of the nearest stored sample.
    Nearest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    spec: GridSpec,
    spacing: Vector3<f64>,
    inv_spacing: Vector3<f64>,
    values: Vec<f32>,
}

impl SdfGrid {
    pub fn from_values(spec: GridSpec, values: Vec<f32>) -> Result<Self, GridError> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(GridError::ValueCount {
                expected: spec.len(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        let spacing = spec.spacing();
        Ok(Self {
            spec,
            spacing,
            inv_spacing: spacing.map(|h| 1.0 / h),
            values,
        })
    }

    /// Samples the exact signed distance of `mesh` at every voxel center.
    /// Z-slabs are filled in parallel.
    pub fn build(mesh: &TriangleMesh, spec: GridSpec) -> Result<Self, GridError> {
        spec.validate()?;
        let sdf = MeshSdf::new(mesh);
        let [nx, ny, _] = spec.dims;
        let spacing = spec.spacing();
        let mut values = vec![0f32; spec.len()];
        values
            .par_chunks_mut(nx * ny)
            .enumerate()
            .for_each(|(k, slab)| {
                let z = spec.bounds_min.z + k as f64 * spacing.z;
                let mut row_hint = None;
                for j in 0..ny {
                    let y = spec.bounds_min.y + j as f64 * spacing.y;
                    let mut hint = row_hint;
                    for i in 0..nx {
                        let p = Point3::new(spec.bounds_min.x + i as f64 * spacing.x, y, z);
                        let (d, slot) = sdf.signed_distance_hinted(&p, hint);
                        slab[i + nx * j] = d as f32;
                        hint = Some(slot);
                        if i == 0 {
                            row_hint = hint;
                        }
                    }
                }
            });
        Self::from_values(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dims(&self) -> [usize; 3] {
        self.spec.dims
    }

    pub fn bounds(&self) -> (Point3<f64>, Point3<f64>) {
        (self.spec.bounds_min, self.spec.bounds_max)
    }

    pub fn spacing(&self) -> Vector3<f64> {
        self.spacing
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.spec.dims;
        i + nx * (j + ny * k)
    }

    pub fn value_at(&self, i: usize, j: usize, k: usize) -> f32 {
        self.values[self.index(i, j, k)]
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        let min = &self.spec.bounds_min;
        Point3::new(
            min.x + i as f64 * self.spacing.x,
            min.y + j as f64 * self.spacing.y,
            min.z + k as f64 * self.spacing.z,
        )
    }

    /// Closest point of the grid volume to `p`.
    #[inline]
    pub fn clamp(&self, p: &Point3<f64>) -> Point3<f64> {
        p.sup(&self.spec.bounds_min).inf(&self.spec.bounds_max)
    }

    /// Half the voxel diagonal.
    pub fn discretization_error(&self) -> f64 {
        self.spacing.norm() / 2.0
    }

    /// Trilinear lookup of a single point.
    #[inline]
    pub fn query_point(&self, p: &Point3<f64>) -> f64 {
        let cell = self.locate(p);
        self.trilinear(&cell)
    }

    pub fn query_point_with(&self, mode: QueryMode, p: &Point3<f64>) -> f64 {
        let cell = self.locate(p);
        match mode {
            QueryMode::Trilinear => self.trilinear(&cell),
            QueryMode::Nearest => self.nearest(&cell),
        }
    }

    /// Batched trilinear lookup; output order matches input order.
    pub fn query(&self, points: &[Point3<f64>]) -> Vec<f64> {
        self.query_with(QueryMode::Trilinear, points)
    }

    pub fn query_with(&self, mode: QueryMode, points: &[Point3<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; points.len()];
        self.query_into(mode, points, &mut out);
        out
    }

    /// Writes one distance per point into `out`, which must have the same
    /// length as `points`.
    pub fn query_into(&self, mode: QueryMode, points: &[Point3<f64>], out: &mut [f64]) {
        assert_eq!(
            points.len(),
            out.len(),
            "output buffer length must match the batch"
        );
        out.par_chunks_mut(QUERY_CHUNK)
            .zip(points.par_chunks(QUERY_CHUNK))
            .for_each(|(out, points)| match mode {
                QueryMode::Trilinear => {
                    for (o, p) in out.iter_mut().zip(points) {
                        *o = self.query_point(p);
                    }
                }
                QueryMode::Nearest => {
                    for (o, p) in out.iter_mut().zip(points) {
                        *o = self.nearest(&self.locate(p));
                    }
                }
            });
    }

    /// Values of the 8 samples surrounding `p` (after clamping).
    pub fn neighborhood(&self, p: &Point3<f64>) -> [f32; 8] {
        let c = self.locate(p);
        let v = &self.values;
        let [sx, sy, sz] = c.step;
        let b = c.base;
        [
            v[b],
            v[b + sx],
            v[b + sy],
            v[b + sx + sy],
            v[b + sz],
            v[b + sx + sz],
            v[b + sy + sz],
            v[b + sx + sy + sz],
        ]
    }

    #[inline]
    fn locate(&self, p: &Point3<f64>) -> Cell {
        let p = self.clamp(p);
        let [nx, ny, _] = self.spec.dims;
        let strides = [1, nx, nx * ny];
        let mut base = 0;
        let mut frac = [0.0; 3];
        let mut step = [0; 3];
        for k in 0..3 {
            let n = self.spec.dims[k];
            let last = (n - 1) as f64;
            let u = ((p[k] - self.spec.bounds_min[k]) * self.inv_spacing[k]).clamp(0.0, last);
            let mut i = u.floor();
            let mut f = u - i;
            if f > 1.0 - SNAP {
                i += 1.0;
                f = 0.0;
            } else if f < SNAP {
                f = 0.0;
            }
            let i = (i as usize).min(n - 1);
            base += i * strides[k];
            step[k] = if i + 1 < n { strides[k] } else { 0 };
            frac[k] = f;
        }
        Cell { base, step, frac }
    }

    #[inline]
    fn trilinear(&self, c: &Cell) -> f64 {
        let v = &self.values;
        let [sx, sy, sz] = c.step;
        let [fx, fy, fz] = c.frac;
        let b = c.base;
        let at = |o: usize| v[b + o] as f64;
        let x00 = lerp(at(0), at(sx), fx);
        let x10 = lerp(at(sy), at(sx + sy), fx);
        let x01 = lerp(at(sz), at(sx + sz), fx);
        let x11 = lerp(at(sy + sz), at(sx + sy + sz), fx);
        lerp(lerp(x00, x10, fy), lerp(x01, x11, fy), fz)
    }

    #[inline]
    fn nearest(&self, c: &Cell) -> f64 {
        let mut index = c.base;
        for k in 0..3 {
            if c.frac[k] >= 0.5 {
                index += c.step[k];
            }
        }
        self.values[index] as f64
    }
}

struct Cell {
    base: usize,
    step: [usize; 3],
    frac: [f64; 3],
}

/// Linear blend clamped to its endpoints so interpolated values never leave
/// the range of the samples.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (a + t * (b - a)).clamp(a.min(b), a.max(b))
}

pub fn build_sdf_grid(mesh: &TriangleMesh, spec: GridSpec) -> Result<SdfGrid, GridError> {
    SdfGrid::build(mesh, spec)
}

pub fn query(grid: &SdfGrid, points: &[Point3<f64>]) -> Vec<f64> {
    grid.query(points)
}
