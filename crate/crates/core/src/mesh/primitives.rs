//! Closed, outward-oriented test solids.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};

use super::TriangleMesh;

const BOX_TRIANGLES: [[usize; 3]; 12] = [
    [0, 3, 2],
    [0, 2, 1],
    [4, 5, 6],
    [4, 6, 7],
    [0, 1, 5],
    [0, 5, 4],
    [1, 2, 6],
    [1, 6, 5],
    [2, 3, 7],
    [2, 7, 6],
    [3, 0, 4],
    [3, 4, 7],
];

/// Axis-aligned box with the given side lengths.
pub fn cuboid(size: Vector3<f64>, center: Point3<f64>) -> TriangleMesh {
    let h = size / 2.0;
    let vertices = (0..8)
        .map(|i| {
            let sx = if matches!(i % 4, 1 | 2) { 1.0 } else { -1.0 };
            let sy = if i % 4 >= 2 { 1.0 } else { -1.0 };
            let sz = if i >= 4 { 1.0 } else { -1.0 };
            center + Vector3::new(sx * h.x, sy * h.y, sz * h.z)
        })
        .collect();
    TriangleMesh::new(vertices, BOX_TRIANGLES.to_vec()).expect("box is valid")
}

/// Side-1 cube centered at the origin: 8 vertices, 12 triangles.
pub fn unit_cube() -> TriangleMesh {
    cuboid(Vector3::repeat(1.0), Point3::origin())
}

/// Subdivided icosahedron projected onto a sphere of `radius`.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vector3::from(*v).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vector3<f64>>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) / 2.0).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    let vertices = vertices
        .into_iter()
        .map(|v| Point3::from(v * radius))
        .collect();
    TriangleMesh::new(vertices, faces).expect("icosphere is valid")
}

/// A closed hemispherical shell (bowl) opening towards +z with its rim at
/// z = 0: outer radius `radius`, wall `thickness`.
pub fn hemispherical_bowl(
    radius: f64,
    thickness: f64,
    rings: usize,
    segments: usize,
) -> TriangleMesh {
    assert!(thickness > 0.0 && thickness < radius && rings >= 1 && segments >= 3);
    let mut vertices = Vec::with_capacity(2 * (1 + rings * segments));
    let mut triangles = Vec::new();

    let mut shell = |r: f64, outward: bool, vertices: &mut Vec<Point3<f64>>| -> usize {
        let pole = vertices.len();
        vertices.push(Point3::new(0.0, 0.0, -r));
        for k in 1..=rings {
            let theta = PI / 2.0 * k as f64 / rings as f64;
            for s in 0..segments {
                let phi = 2.0 * PI * s as f64 / segments as f64;
                vertices.push(Point3::new(
                    r * theta.sin() * phi.cos(),
                    r * theta.sin() * phi.sin(),
                    -r * theta.cos(),
                ));
            }
        }
        let ring = |k: usize, s: usize| pole + 1 + (k - 1) * segments + s % segments;
        let mut push = |t: [usize; 3]| triangles.push(if outward { t } else { [t[0], t[2], t[1]] });
        for s in 0..segments {
            push([pole, ring(1, s + 1), ring(1, s)]);
        }
        for k in 1..rings {
            for s in 0..segments {
                let (a, b, c, d) = (
                    ring(k, s),
                    ring(k, s + 1),
                    ring(k + 1, s + 1),
                    ring(k + 1, s),
                );
                push([a, b, c]);
                push([a, c, d]);
            }
        }
        ring(rings, 0)
    };

    let outer_rim = shell(radius, true, &mut vertices);
    let inner_rim = shell(radius - thickness, false, &mut vertices);
    for s in 0..segments {
        let (o0, o1) = (outer_rim + s, outer_rim + (s + 1) % segments);
        let (i0, i1) = (inner_rim + s, inner_rim + (s + 1) % segments);
        triangles.push([o0, o1, i1]);
        triangles.push([o0, i1, i0]);
    }
    TriangleMesh::new(vertices, triangles).expect("bowl is valid")
}
