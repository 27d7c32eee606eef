//! Oriented bounding boxes along the principal axes of a mesh surface.
//!
//! Axes are the eigenvectors of the area-weighted surface covariance, so the
//! tessellation density does not bias them. The covariance is integrated in
//! closed form per triangle, which is the exact limit of averaging over
//! area-uniform surface samples. Extents are the min-max span of the mesh
//! vertices projected onto each axis.

use std::cmp::Ordering;

use nalgebra::{Matrix3, Point3, Quaternion, Rotation3, SymmetricEigen, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::TriangleMesh;

/// Relative eigenvalue / extent gap under which two axes count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "ObbRecord", into = "ObbRecord")]
pub struct OrientedBoundingBox {
    pub center: Point3<f64>,
    /// Columns of the rotation matrix are the box axes, longest first.
    pub orientation: UnitQuaternion<f64>,
    /// Full side lengths along each axis, in descending order.
    pub extent: Vector3<f64>,
}

impl OrientedBoundingBox {
    pub fn axes(&self) -> [Vector3<f64>; 3] {
        let m = self.orientation.to_rotation_matrix();
        [
            m.matrix().column(0).into(),
            m.matrix().column(1).into(),
            m.matrix().column(2).into(),
        ]
    }

    /// Whether `point` lies inside the box grown by `tolerance` along every axis.
    pub fn contains(&self, point: &Point3<f64>, tolerance: f64) -> bool {
        let d = point - self.center;
        self.axes()
            .iter()
            .zip(self.extent.iter())
            .all(|(axis, e)| d.dot(axis).abs() <= e / 2.0 + tolerance)
    }

    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }
}

/// Flat layout for files: center, quaternion (w first), full extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObbRecord {
    pub center: [f64; 3],
    pub quaternion_wxyz: [f64; 4],
    pub extent: [f64; 3],
}

impl From<ObbRecord> for OrientedBoundingBox {
    fn from(r: ObbRecord) -> Self {
        let [w, i, j, k] = r.quaternion_wxyz;
        let q = Quaternion::new(w, i, j, k);
        // Keep stored unit quaternions bit-exact; renormalize anything else.
        let orientation = if (q.norm() - 1.0).abs() < 1e-12 {
            UnitQuaternion::new_unchecked(q)
        } else {
            UnitQuaternion::from_quaternion(q)
        };
        Self {
            center: Point3::from(r.center),
            orientation,
            extent: Vector3::from(r.extent),
        }
    }
}

impl From<OrientedBoundingBox> for ObbRecord {
    fn from(b: OrientedBoundingBox) -> Self {
        Self {
            center: b.center.coords.into(),
            quaternion_wxyz: b.quaternion_wxyz(),
            extent: b.extent.into(),
        }
    }
}

pub fn oriented_bounding_box(mesh: &TriangleMesh) -> OrientedBoundingBox {
    let (lo, hi) = mesh.aabb();
    let reference = nalgebra::center(&lo, &hi);
    let eigen = SymmetricEigen::new(surface_covariance(mesh, &reference));
    let basis = principal_basis(&eigen);

    // Project vertices and order axes by descending extent.
    let mut spans: Vec<(Vector3<f64>, f64, f64)> = basis
        .iter()
        .map(|axis| {
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in mesh.vertices() {
                let s = (v - reference).dot(axis);
                min = min.min(s);
                max = max.max(s);
            }
            (*axis, min, max)
        })
        .collect();
    let scale = spans.iter().map(|s| s.2 - s.1).fold(0.0, f64::max);
    spans.sort_by(|a, b| {
        let (ea, eb) = (a.2 - a.1, b.2 - b.1);
        if (ea - eb).abs() <= TIE_TOLERANCE * scale {
            lexicographic(&b.0, &a.0)
        } else {
            eb.total_cmp(&ea)
        }
    });

    let mut axes = [spans[0].0, spans[1].0, spans[2].0];
    if axes[0].cross(&axes[1]).dot(&axes[2]) < 0.0 {
        axes[2] = -axes[2];
        let (min, max) = (spans[2].1, spans[2].2);
        spans[2].1 = -max;
        spans[2].2 = -min;
    }

    let mut center = reference;
    for (axis, (min, max)) in axes.iter().zip(spans.iter().map(|s| (s.1, s.2))) {
        center += axis * ((min + max) / 2.0);
    }
    let rotation = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&axes));
    OrientedBoundingBox {
        center,
        orientation: UnitQuaternion::from_rotation_matrix(&rotation),
        extent: Vector3::new(
            spans[0].2 - spans[0].1,
            spans[1].2 - spans[1].1,
            spans[2].2 - spans[2].1,
        ),
    }
}

impl TriangleMesh {
    pub fn oriented_bounding_box(&self) -> OrientedBoundingBox {
        oriented_bounding_box(self)
    }
}

/// Covariance of a uniform area density on the surface, about its mean.
///
/// Per triangle, ∫ x xᵀ dA = A/12 (Σ vᵢvᵢᵀ + s sᵀ) with s = Σ vᵢ.
fn surface_covariance(mesh: &TriangleMesh, reference: &Point3<f64>) -> Matrix3<f64> {
    let mut area = 0.0;
    let mut first = Vector3::zeros();
    let mut second = Matrix3::zeros();
    for t in 0..mesh.triangles().len() {
        let [a, b, c] = mesh.triangle(t).map(|v| v - reference);
        let w = 0.5 * (b - a).cross(&(c - a)).norm();
        let s = a + b + c;
        area += w;
        first += s * (w / 3.0);
        second += (a * a.transpose() + b * b.transpose() + c * c.transpose() + s * s.transpose())
            * (w / 12.0);
    }
    let mean = first / area;
    second / area - mean * mean.transpose()
}

/// Eigenvectors with a canonical sign (largest-magnitude component positive).
/// Tied eigenvalues span a subspace with no preferred basis; the world axes
/// are projected into it and orthonormalised so symmetric shapes get a
/// reproducible frame.
fn principal_basis(eigen: &SymmetricEigen<f64, nalgebra::U3>) -> [Vector3<f64>; 3] {
    let mut order = [0, 1, 2];
    order.sort_by(|&i, &j| eigen.eigenvalues[j].total_cmp(&eigen.eigenvalues[i]));
    let largest = eigen.eigenvalues[order[0]].abs().max(f64::MIN_POSITIVE);

    let mut basis: Vec<Vector3<f64>> = Vec::with_capacity(3);
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3
            && (eigen.eigenvalues[order[start]] - eigen.eigenvalues[order[end]]).abs()
                <= TIE_TOLERANCE * largest
        {
            end += 1;
        }
        if end - start == 1 {
            basis.push(eigen.eigenvectors.column(order[start]).into());
        } else {
            let group: Vec<Vector3<f64>> = order[start..end]
                .iter()
                .map(|&k| eigen.eigenvectors.column(k).into())
                .collect();
            basis.extend(canonical_subspace_basis(&group));
        }
        start = end;
    }
    basis.iter_mut().for_each(canonical_sign);
    [basis[0], basis[1], basis[2]]
}

fn canonical_subspace_basis(group: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let project = |v: &Vector3<f64>| -> Vector3<f64> { group.iter().map(|g| g * g.dot(v)).sum() };
    let mut candidates: Vec<Vector3<f64>> = [Vector3::x(), Vector3::y(), Vector3::z()]
        .iter()
        .map(project)
        .collect();
    candidates.sort_by(|a, b| b.norm().total_cmp(&a.norm()));

    let mut out: Vec<Vector3<f64>> = Vec::with_capacity(group.len());
    for c in candidates {
        if out.len() == group.len() {
            break;
        }
        let mut v = c;
        for u in &out {
            v -= u * u.dot(&v);
        }
        if v.norm() > 1e-6 {
            out.push(v.normalize());
        }
    }
    out
}

fn canonical_sign(v: &mut Vector3<f64>) {
    let k = v.iamax();
    if v[k] < 0.0 {
        *v = -*v;
    }
}

fn lexicographic(a: &Vector3<f64>, b: &Vector3<f64>) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::{cuboid, icosphere, unit_cube};
    use nalgebra::Isometry3;
    use proptest::prelude::*;

    fn thin_box() -> TriangleMesh {
        cuboid(Vector3::new(0.2, 0.05, 0.02), Point3::origin())
    }

    #[test]
    fn axis_aligned_box() {
        let obb = oriented_bounding_box(&thin_box());
        assert!((obb.extent - Vector3::new(0.2, 0.05, 0.02)).norm() < 1e-12);
        for (axis, expected) in obb
            .axes()
            .iter()
            .zip([Vector3::x(), Vector3::y(), Vector3::z()])
        {
            assert!((axis.dot(&expected).abs() - 1.0).abs() < 1e-12);
        }
        assert!(obb.center.coords.norm() < 1e-12);
    }

    #[test]
    fn rotated_box_recovers_rotation() {
        let rotation = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 30f64.to_radians());
        let mesh = thin_box().transformed(&Isometry3::from_parts(
            Vector3::new(0.1, 0.2, -0.3).into(),
            rotation,
        ));
        let obb = oriented_bounding_box(&mesh);
        assert!((obb.extent - Vector3::new(0.2, 0.05, 0.02)).norm() < 1e-6);
        let expected = rotation.to_rotation_matrix();
        for (k, axis) in obb.axes().iter().enumerate() {
            let e: Vector3<f64> = expected.matrix().column(k).into();
            assert!((axis.dot(&e).abs() - 1.0).abs() < 1e-9, "axis {k}");
        }
        assert!((obb.center - Point3::new(0.1, 0.2, -0.3)).norm() < 1e-9);
    }

    #[test]
    fn sphere_extents_are_isotropic() {
        let obb = oriented_bounding_box(&icosphere(0.1, 4));
        assert!((obb.extent[0] - obb.extent[2]) / obb.extent[0] < 0.02);
    }

    #[test]
    fn cube_frame_is_reproducible() {
        let a = oriented_bounding_box(&unit_cube());
        let b = oriented_bounding_box(&unit_cube());
        assert_eq!(a, b);
        assert!((a.extent - Vector3::repeat(1.0)).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn containment_ordering_and_handedness(
            sx in 0.01..0.3f64, sy in 0.01..0.3f64, sz in 0.01..0.3f64,
            r in -3.0..3.0f64, p in -1.5..1.5f64, y in -3.0..3.0f64,
        ) {
            let mesh = cuboid(Vector3::new(sx, sy, sz), Point3::origin())
                .transformed(&Isometry3::from_parts(Vector3::new(0.05, 0.0, 0.1).into(),
                    UnitQuaternion::from_euler_angles(r, p, y)));
            let obb = oriented_bounding_box(&mesh);
            for v in mesh.vertices() {
                prop_assert!(obb.contains(v, 1e-9));
            }
            prop_assert!(obb.extent[0] >= obb.extent[1] && obb.extent[1] >= obb.extent[2]);
            let [x, yy, z] = obb.axes();
            prop_assert!((x.cross(&yy).dot(&z) - 1.0).abs() < 1e-9);
        }
    }
}
