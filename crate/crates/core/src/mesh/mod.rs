//! Indexed triangle meshes in meters.
//!
//! A [`TriangleMesh`] is validated on construction: indices must be in range,
//! coordinates finite, and triangles with area below [`DEGENERATE_AREA`] are
//! dropped (the count is kept for reporting). Every other representation in
//! this crate is derived from a mesh.

mod io;
mod mass;
mod obb;
pub mod primitives;
mod sampling;

use std::collections::HashMap;

use nalgebra::{Isometry3, Point3, Vector3};
use thiserror::Error;

pub use io::{load_mesh, read_mesh, save_obj, write_obj, MeshFormat};
pub use mass::{center_of_mass, CenterOfMass, ComMethod};
pub use obb::{oriented_bounding_box, ObbRecord, OrientedBoundingBox};
pub use sampling::{sample_surface, SurfaceSample};

/// Triangles with a smaller area (m²) are discarded at construction.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("failed to read mesh: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed mesh at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed binary STL: {0}")]
    Stl(String),
    #[error("unsupported mesh format `{0}`")]
    UnsupportedFormat(String),
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {triangle} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        count: usize,
    },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
}

pub type Result<T, E = MeshError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[usize; 3]>,
    dropped: usize,
}

impl TriangleMesh {
    /// Validates and builds a mesh, filtering degenerate triangles.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(i) = vertices
            .iter()
            .position(|v| !v.coords.iter().all(|c| c.is_finite()))
        {
            return Err(MeshError::NonFinite(i));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange {
                    triangle: t,
                    index,
                    count: vertices.len(),
                });
            }
        }

        let total = triangles.len();
        let triangles: Vec<[usize; 3]> = triangles
            .into_iter()
            .filter(|t| {
                triangle_area(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]) >= DEGENERATE_AREA
            })
            .collect();
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let dropped = total - triangles.len();
        Ok(Self {
            vertices,
            triangles,
            dropped,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Number of degenerate triangles removed at construction.
    pub fn dropped_triangles(&self) -> usize {
        self.dropped
    }

    #[inline]
    pub fn triangle(&self, index: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[index];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, index: usize) -> f64 {
        let [a, b, c] = self.triangle(index);
        triangle_area(&a, &b, &c)
    }

    /// Sum of triangle areas in m².
    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| self.triangle_area(i))
            .sum()
    }

    /// Axis-aligned bounds of the vertices as `(min, max)`.
    pub fn aabb(&self) -> (Point3<f64>, Point3<f64>) {
        let mut min = Point3::from([f64::INFINITY; 3]);
        let mut max = Point3::from([f64::NEG_INFINITY; 3]);
        for v in &self.vertices {
            min = min.inf(v);
            max = max.sup(v);
        }
        (min, max)
    }

    /// True when every undirected edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        let mut edges: HashMap<(usize, usize), u32> =
            HashMap::with_capacity(self.triangles.len() * 3 / 2);
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        edges.values().all(|&n| n == 2)
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        self.map_vertices(|v| v + offset)
    }

    pub fn transformed(&self, transform: &Isometry3<f64>) -> Self {
        self.map_vertices(|v| transform * v)
    }

    fn map_vertices(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
            dropped: self.dropped,
        }
    }
}

/// Free-function form of [`TriangleMesh::surface_area`].
pub fn surface_area(mesh: &TriangleMesh) -> f64 {
    mesh.surface_area()
}

#[inline]
pub(crate) fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}
