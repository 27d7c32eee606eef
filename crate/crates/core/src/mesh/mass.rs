use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{triangle_area, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComMethod {
    /// Uniform-density solid centroid (closed meshes).
    Volume,
    /// Area-weighted surface centroid, used when the mesh is open or has no volume.
    SurfaceFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterOfMass {
    pub position: Point3<f64>,
    pub method: ComMethod,
}

/// Geometric center of mass.
///
/// Closed meshes use the divergence theorem: the solid is decomposed into
/// signed tetrahedra against a reference point. Open meshes fall back to the
/// surface centroid and are flagged through [`ComMethod::SurfaceFallback`].
pub fn center_of_mass(mesh: &TriangleMesh) -> CenterOfMass {
    // Work relative to the first vertex so results translate exactly.
    let origin = mesh.vertices()[0];

    if mesh.is_watertight() {
        let mut volume = 0.0;
        let mut moment = Vector3::zeros();
        for t in 0..mesh.triangles().len() {
            let [a, b, c] = mesh.triangle(t).map(|v| v - origin);
            let v = a.dot(&b.cross(&c)) / 6.0;
            volume += v;
            moment += (a + b + c) * (v / 4.0);
        }
        let (lo, hi) = mesh.aabb();
        let scale = (hi - lo).norm();
        if volume.abs() > 1e-12 * scale.powi(3) {
            return CenterOfMass {
                position: origin + moment / volume,
                method: ComMethod::Volume,
            };
        }
    }

    let mut area = 0.0;
    let mut moment = Vector3::zeros();
    for t in 0..mesh.triangles().len() {
        let [a, b, c] = mesh.triangle(t).map(|v| v - origin);
        let w = triangle_area(&Point3::from(a), &Point3::from(b), &Point3::from(c));
        area += w;
        moment += (a + b + c) * (w / 3.0);
    }
    CenterOfMass {
        position: origin + moment / area,
        method: ComMethod::SurfaceFallback,
    }
}

impl TriangleMesh {
    pub fn center_of_mass(&self) -> CenterOfMass {
        center_of_mass(self)
    }
}
