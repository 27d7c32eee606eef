use nalgebra::Point3;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TriangleMesh;

/// Seeded, area-uniform points on a mesh surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSample {
    pub points: Vec<Point3<f64>>,
    pub seed: u64,
}

/// Draws `n` points uniformly by area: a triangle is picked with probability
/// proportional to its area, then a point uniformly inside it.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> SurfaceSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let areas: Vec<f64> = (0..mesh.triangles().len())
        .map(|i| mesh.triangle_area(i))
        .collect();
    // Construction guarantees at least one triangle with positive area.
    let picker = WeightedIndex::new(&areas).expect("mesh has positive area");

    let points = (0..n)
        .map(|_| {
            let [a, b, c] = mesh.triangle(picker.sample(&mut rng));
            let r1: f64 = rng.random::<f64>().sqrt();
            let r2: f64 = rng.random();
            let (wa, wb, wc) = (1.0 - r1, r1 * (1.0 - r2), r1 * r2);
            Point3::from(a.coords * wa + b.coords * wb + c.coords * wc)
        })
        .collect();
    SurfaceSample { points, seed }
}

impl TriangleMesh {
    pub fn sample_surface(&self, n: usize, seed: u64) -> SurfaceSample {
        sample_surface(self, n, seed)
    }
}
