//! Axis-aligned bounding volume hierarchy over mesh triangles.
//!
//! Besides nearest-triangle queries, every node carries the first-order
//! (dipole) moment of its triangles so the generalized winding number can be
//! evaluated hierarchically: clusters that are far from the query point
//! relative to their size contribute through the dipole term, near clusters
//! are summed exactly.

use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};

use super::geometry::{box_distance_sq, point_triangle_distance_sq, solid_angle};
use crate::mesh::TriangleMesh;

const LEAF_SIZE: usize = 4;
/// Far-field acceptance ratio between query distance and cluster radius.
const FAR_FIELD_RATIO: f64 = 4.0;
/// Nodes whose box lower bound exceeds the current best by less than this
/// relative margin are still visited, so floating-point rounding in the box
/// bound can never hide the true nearest triangle.
const PRUNE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone)]
struct Node {
    min: Point3<f64>,
    max: Point3<f64>,
    /// Leaf: first triangle. Inner: index of the left child.
    first: u32,
    /// Leaf: triangle count. Inner: 0.
    count: u32,
    /// Inner: index of the right child.
    right: u32,
    area_normal: Vector3<f64>,
    centroid: Point3<f64>,
    radius: f64,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    triangles: Vec<[Point3<f64>; 3]>,
    /// Mesh triangle index for each entry of `triangles`.
    source: Vec<usize>,
}

impl Bvh {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let n = mesh.triangles().len();
        let mut items: Vec<(Point3<f64>, usize)> = (0..n)
            .map(|t| {
                let [a, b, c] = mesh.triangle(t);
                (Point3::from((a.coords + b.coords + c.coords) / 3.0), t)
            })
            .collect();
        let mut bvh = Self {
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            triangles: Vec::with_capacity(n),
            source: Vec::with_capacity(n),
        };
        bvh.build(mesh, &mut items);
        bvh
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    fn build(&mut self, mesh: &TriangleMesh, items: &mut [(Point3<f64>, usize)]) -> u32 {
        let index = self.nodes.len();
        self.nodes.push(Node {
            min: Point3::origin(),
            max: Point3::origin(),
            first: 0,
            count: 0,
            right: 0,
            area_normal: Vector3::zeros(),
            centroid: Point3::origin(),
            radius: 0.0,
        });

        if items.len() <= LEAF_SIZE {
            let first = self.triangles.len() as u32;
            for &(_, t) in items.iter() {
                self.triangles.push(mesh.triangle(t));
                self.source.push(t);
            }
            let range = first as usize..self.triangles.len();
            let node = &mut self.nodes[index];
            node.first = first;
            node.count = items.len() as u32;
            fill_bounds(node, &self.triangles[range]);
            return index as u32;
        }

        let (mut lo, mut hi) = (items[0].0, items[0].0);
        for (c, _) in items.iter() {
            lo = lo.inf(c);
            hi = hi.sup(c);
        }
        let axis = (hi - lo).imax();
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| a.0[axis].total_cmp(&b.0[axis]));
        let (left_items, right_items) = items.split_at_mut(mid);

        let left = self.build(mesh, left_items);
        let right = self.build(mesh, right_items);
        let (l, r) = (&self.nodes[left as usize], &self.nodes[right as usize]);
        let min = l.min.inf(&r.min);
        let max = l.max.sup(&r.max);
        let area_normal = l.area_normal + r.area_normal;
        let node = &mut self.nodes[index];
        node.min = min;
        node.max = max;
        node.first = left;
        node.right = right;
        node.area_normal = area_normal;
        self.finish_inner(index);
        index as u32
    }

    /// Area-weighted centroid and enclosing radius of an inner node.
    fn finish_inner(&mut self, index: usize) {
        let (start, end) = self.triangle_range(index);
        let mut area = 0.0;
        let mut moment = Vector3::zeros();
        for t in &self.triangles[start..end] {
            let w = 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm();
            area += w;
            moment += (t[0].coords + t[1].coords + t[2].coords) * (w / 3.0);
        }
        let centroid = Point3::from(moment / area);
        let radius = self.triangles[start..end]
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| (v - centroid).norm())
            .fold(0.0, f64::max);
        let node = &mut self.nodes[index];
        node.centroid = centroid;
        node.radius = radius;
    }

    /// Contiguous triangle range covered by a subtree.
    fn triangle_range(&self, index: usize) -> (usize, usize) {
        let mut lo = index;
        while self.nodes[lo].count == 0 {
            lo = self.nodes[lo].first as usize;
        }
        let mut hi = index;
        while self.nodes[hi].count == 0 {
            hi = self.nodes[hi].right as usize;
        }
        let h = &self.nodes[hi];
        (self.nodes[lo].first as usize, (h.first + h.count) as usize)
    }

    /// Squared distance to the nearest triangle and that triangle's mesh index.
    ///
    /// `hint` is a mesh triangle index used to seed the search bound; it does
    /// not affect the result.
    pub fn nearest(&self, p: &Point3<f64>, hint: Option<usize>) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut best_slot = 0;
        if let Some(h) = hint {
            if let Some(slot) = self.source.iter().position(|&s| s == h) {
                best = point_triangle_distance_sq(p, &self.triangles[slot]);
                best_slot = slot;
            }
        }
        let (d, slot) = self.nearest_from(p, best, best_slot);
        (d, self.source[slot])
    }

    /// Like [`Bvh::nearest`] but the hint is a slot in internal order, which
    /// avoids the index lookup on hot paths.
    pub(crate) fn nearest_slot(&self, p: &Point3<f64>, hint_slot: Option<usize>) -> (f64, usize) {
        match hint_slot {
            Some(slot) => self.nearest_from(
                p,
                point_triangle_distance_sq(p, &self.triangles[slot]),
                slot,
            ),
            None => self.nearest_from(p, f64::INFINITY, 0),
        }
    }

    fn nearest_from(&self, p: &Point3<f64>, mut best: f64, mut best_slot: usize) -> (f64, usize) {
        let mut stack = [0u32; 64];
        let mut top = 1;
        stack[0] = 0;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if box_distance_sq(p, &node.min, &node.max) > best * (1.0 + PRUNE_SLACK) {
                continue;
            }
            if node.count > 0 {
                let start = node.first as usize;
                for slot in start..start + node.count as usize {
                    let d = point_triangle_distance_sq(p, &self.triangles[slot]);
                    if d < best {
                        best = d;
                        best_slot = slot;
                    }
                }
                continue;
            }
            let (l, r) = (node.first, node.right);
            let dl = box_distance_sq(p, &self.nodes[l as usize].min, &self.nodes[l as usize].max);
            let dr = box_distance_sq(p, &self.nodes[r as usize].min, &self.nodes[r as usize].max);
            // Push the farther child first so the nearer one is popped next.
            let (near, far) = if dl <= dr { (l, r) } else { (r, l) };
            stack[top] = far;
            stack[top + 1] = near;
            top += 2;
        }
        (best, best_slot)
    }

    /// Generalized winding number using far-field dipole approximation.
    pub fn winding_number(&self, q: &Point3<f64>) -> f64 {
        let mut total = 0.0;
        let mut stack = [0u32; 64];
        let mut top = 1;
        stack[0] = 0;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if node.count > 0 {
                let start = node.first as usize;
                for t in &self.triangles[start..start + node.count as usize] {
                    total += solid_angle(q, t);
                }
                continue;
            }
            let d = node.centroid - q;
            let dist = d.norm();
            if dist > FAR_FIELD_RATIO * node.radius {
                total += node.area_normal.dot(&d) / (dist * dist * dist);
            } else {
                stack[top] = node.first;
                stack[top + 1] = node.right;
                top += 2;
            }
        }
        total / (4.0 * PI)
    }
}

fn fill_bounds(node: &mut Node, triangles: &[[Point3<f64>; 3]]) {
    let mut min = triangles[0][0];
    let mut max = triangles[0][0];
    let mut area = 0.0;
    let mut moment = Vector3::zeros();
    let mut area_normal = Vector3::zeros();
    for t in triangles {
        for v in t {
            min = min.inf(v);
            max = max.sup(v);
        }
        let n = (t[1] - t[0]).cross(&(t[2] - t[0])) * 0.5;
        let w = n.norm();
        area_normal += n;
        area += w;
        moment += (t[0].coords + t[1].coords + t[2].coords) * (w / 3.0);
    }
    let centroid = Point3::from(moment / area);
    node.min = min;
    node.max = max;
    node.area_normal = area_normal;
    node.centroid = centroid;
    node.radius = triangles
        .iter()
        .flat_map(|t| t.iter())
        .map(|v| (v - centroid).norm())
        .fold(0.0, f64::max);
}
