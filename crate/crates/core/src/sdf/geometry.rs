use nalgebra::{Point3, Vector3};

/// Closest point on triangle `abc` to `p` (Voronoi-region walk, Ericson 5.1.5).
#[inline]
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[inline]
pub fn point_triangle_distance_sq(p: &Point3<f64>, tri: &[Point3<f64>; 3]) -> f64 {
    (p - closest_point_on_triangle(p, &tri[0], &tri[1], &tri[2])).norm_squared()
}

/// Signed solid angle subtended by triangle `abc` seen from `q`
/// (Van Oosterom and Strackee). Positive when `q` is behind the
/// counter-clockwise face.
#[inline]
pub fn solid_angle(q: &Point3<f64>, tri: &[Point3<f64>; 3]) -> f64 {
    let a = tri[0] - q;
    let b = tri[1] - q;
    let c = tri[2] - q;
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let det = a.dot(&b.cross(&c));
    let div = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    2.0 * det.atan2(div)
}

/// Squared distance from `p` to the box `[min, max]`; zero inside.
#[inline]
pub fn box_distance_sq(p: &Point3<f64>, min: &Point3<f64>, max: &Point3<f64>) -> f64 {
    let mut d = Vector3::zeros();
    for k in 0..3 {
        d[k] = (min[k] - p[k]).max(0.0).max(p[k] - max[k]);
    }
    d.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn tri() -> [Point3<f64>; 3] {
        [
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn regions() {
        let t = tri();
        let cases = [
            (Point3::new(0.2, 0.2, 1.0), Point3::new(0.2, 0.2, 0.0)),
            (Point3::new(-1.0, -1.0, 0.0), Point3::origin()),
            (Point3::new(2.0, -0.5, 0.3), Point3::new(1.0, 0.0, 0.0)),
            (Point3::new(0.5, -1.0, 0.0), Point3::new(0.5, 0.0, 0.0)),
            (Point3::new(1.0, 1.0, 0.0), Point3::new(0.5, 0.5, 0.0)),
            (Point3::new(-1.0, 0.5, 0.0), Point3::new(0.0, 0.5, 0.0)),
        ];
        for (p, expected) in cases {
            let c = closest_point_on_triangle(&p, &t[0], &t[1], &t[2]);
            assert!((c - expected).norm() < 1e-15, "{p} -> {c}");
        }
    }

    #[test]
    fn solid_angle_of_octant() {
        // The triangle spanning the three unit axes covers one octant: 4π/8.
        let t = [
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        assert!((solid_angle(&Point3::origin(), &t) - PI / 2.0).abs() < 1e-12);
    }

    proptest! {
        // Closest point must beat a dense barycentric scan of the triangle.
        #[test]
        fn closest_point_is_minimal(px in -2.0..2.0f64, py in -2.0..2.0f64, pz in -1.0..1.0f64) {
            let t = [Point3::new(0.1, -0.2, 0.0), Point3::new(1.0, 0.3, 0.2), Point3::new(-0.3, 0.9, -0.1)];
            let p = Point3::new(px, py, pz);
            let best = point_triangle_distance_sq(&p, &t);
            let n = 60;
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                    let q = t[0] + (t[1] - t[0]) * u + (t[2] - t[0]) * v;
                    prop_assert!(best <= (p - q).norm_squared() + 1e-12);
                }
            }
        }
    }
}
