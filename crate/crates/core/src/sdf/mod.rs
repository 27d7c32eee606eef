//! Signed distance to triangle meshes and the dense voxel grid that serves
//! batched lookups.
//!
//! Distances are exact point-to-triangle minima, accelerated by a [`Bvh`]
//! whose result is bit-identical to the brute-force scan. The sign comes from
//! the generalized winding number: a point is inside when the winding number
//! exceeds 0.5, which tolerates holes and self-intersections in scanned
//! meshes.

mod bvh;
pub mod geometry;
mod grid;
mod io;

use nalgebra::Point3;

pub use bvh::Bvh;
pub use grid::{build_sdf_grid, query, GridError, GridSpec, QueryMode, SdfGrid};
pub use io::{load_grid, save_grid, GRID_HEADER_LEN, GRID_MAGIC, GRID_VERSION};

use crate::mesh::TriangleMesh;
use geometry::{point_triangle_distance_sq, solid_angle};

/// Winding numbers above this value count as inside.
pub const INSIDE_THRESHOLD: f64 = 0.5;

/// Exact signed distance evaluator for one mesh.
#[derive(Debug, Clone)]
pub struct MeshSdf {
    bvh: Bvh,
}

impl MeshSdf {
    pub fn new(mesh: &TriangleMesh) -> Self {
        Self {
            bvh: Bvh::new(mesh),
        }
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn unsigned_distance(&self, p: &Point3<f64>) -> f64 {
        self.bvh.nearest(p, None).0.sqrt()
    }

    pub fn winding_number(&self, p: &Point3<f64>) -> f64 {
        self.bvh.winding_number(p)
    }

    /// Negative inside, positive outside.
    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        let d = self.unsigned_distance(p);
        if self.winding_number(p) > INSIDE_THRESHOLD {
            -d
        } else {
            d
        }
    }

    /// Signed distance reusing the nearest-triangle slot of a neighbouring
    /// query as the initial search bound. Returns the new slot.
    pub(crate) fn signed_distance_hinted(
        &self,
        p: &Point3<f64>,
        hint: Option<usize>,
    ) -> (f64, usize) {
        let (d2, slot) = self.bvh.nearest_slot(p, hint);
        let d = d2.sqrt();
        let signed = if self.bvh.winding_number(p) > INSIDE_THRESHOLD {
            -d
        } else {
            d
        };
        (signed, slot)
    }
}

/// Signed distance from `point` to `mesh`. Builds a hierarchy on every call;
/// use [`MeshSdf`] for repeated queries.
pub fn signed_distance_exact(mesh: &TriangleMesh, point: &Point3<f64>) -> f64 {
    MeshSdf::new(mesh).signed_distance(point)
}

/// Reference minimum over all triangles, without acceleration.
pub fn brute_force_distance(mesh: &TriangleMesh, point: &Point3<f64>) -> f64 {
    (0..mesh.triangles().len())
        .map(|t| point_triangle_distance_sq(point, &mesh.triangle(t)))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Reference winding number: exact solid-angle sum over all triangles.
pub fn brute_force_winding_number(mesh: &TriangleMesh, point: &Point3<f64>) -> f64 {
    let total: f64 = (0..mesh.triangles().len())
        .map(|t| solid_angle(point, &mesh.triangle(t)))
        .sum();
    total / (4.0 * std::f64::consts::PI)
}

pub fn brute_force_signed_distance(mesh: &TriangleMesh, point: &Point3<f64>) -> f64 {
    let d = brute_force_distance(mesh, point);
    if brute_force_winding_number(mesh, point) > INSIDE_THRESHOLD {
        -d
    } else {
        d
    }
}
