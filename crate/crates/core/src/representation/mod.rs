//! Observation encodings of object geometry.
//!
//! Assets are precomputed once per object in the object frame. At run time
//! the simulator supplies the object's world pose and, for the distance
//! encoding, the fingertip positions. All observations are in the world
//! frame; re-referencing to the hand is left to the consumer.
//!
//! | kind   | length | layout                                        |
//! |--------|--------|-----------------------------------------------|
//! | COM    | 3      | position                                      |
//! | BBOX   | 10     | center, quaternion (w first), extent          |
//! | SQ     | 12     | scale, exponents, position, quaternion        |
//! | PC-N   | 3N     | points, xyz interleaved                       |
//! | SDF    | 5      | signed fingertip distances, thumb to little   |

mod assets;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::OrientedBoundingBox;
use crate::reward::FINGER_COUNT;
use crate::sdf::{GridError, SdfGrid};
use crate::superquadric::{SqError, Superquadric};

pub use assets::{AssetEntry, AssetIndex, PointCloudFile};

/// Point-cloud sizes with a precomputed sample set.
pub const POINT_CLOUD_SIZES: [usize; 3] = [32, 128, 512];

#[derive(Debug, Error)]
pub enum RepresentationError {
    #[error("distance observations come from fingertip_distances, not build_observation")]
    SdfKind,
    #[error("object assets lack the {0} needed for this observation")]
    MissingAsset(String),
    #[error("unknown observation kind {0:?}")]
    UnknownKind(String),
    #[error("pose must be finite with a unit quaternion")]
    InvalidPose,
    #[error("asset file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("asset file {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("point cloud {path} has {found} points, expected {expected}")]
    PointCount {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Superquadric(#[from] SqError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationKind {
    Com,
    Bbox,
    Sq,
    Pc32,
    Pc128,
    Pc512,
    Sdf,
}

impl ObservationKind {
    pub const ALL: [ObservationKind; 7] = [
        ObservationKind::Com,
        ObservationKind::Bbox,
        ObservationKind::Sq,
        ObservationKind::Pc32,
        ObservationKind::Pc128,
        ObservationKind::Pc512,
        ObservationKind::Sdf,
    ];

    /// Length of the observation vector.
    pub fn dim(self) -> usize {
        match self {
            ObservationKind::Com => 3,
            ObservationKind::Bbox => 10,
            ObservationKind::Sq => 12,
            ObservationKind::Sdf => FINGER_COUNT,
            pc => 3 * pc.point_count().expect("point-cloud kind"),
        }
    }

    pub fn point_count(self) -> Option<usize> {
        match self {
            ObservationKind::Pc32 => Some(32),
            ObservationKind::Pc128 => Some(128),
            ObservationKind::Pc512 => Some(512),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObservationKind::Com => "com",
            ObservationKind::Bbox => "bbox",
            ObservationKind::Sq => "sq",
            ObservationKind::Pc32 => "pc32",
            ObservationKind::Pc128 => "pc128",
            ObservationKind::Pc512 => "pc512",
            ObservationKind::Sdf => "sdf",
        }
    }
}

impl fmt::Display for ObservationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObservationKind {
    type Err = RepresentationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase().replace('-', "");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| RepresentationError::UnknownKind(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub kind: ObservationKind,
    pub values: Vec<f64>,
}

/// World pose of an object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectPose {
    pub position: Point3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl ObjectPose {
    pub fn new(
        position: Point3<f64>,
        orientation: UnitQuaternion<f64>,
    ) -> Result<Self, RepresentationError> {
        let pose = Self {
            position,
            orientation,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn identity() -> Self {
        Self {
            position: Point3::origin(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            position: Point3::new(x, y, z),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position.coords), self.orientation)
    }

    pub fn validate(&self) -> Result<(), RepresentationError> {
        let q = self.orientation.quaternion();
        let finite = self
            .position
            .iter()
            .chain(q.coords.iter())
            .all(|c| c.is_finite());
        if finite && (q.norm() - 1.0).abs() <= 1e-9 {
            Ok(())
        } else {
            Err(RepresentationError::InvalidPose)
        }
    }
}

impl From<Isometry3<f64>> for ObjectPose {
    fn from(iso: Isometry3<f64>) -> Self {
        Self {
            position: Point3::from(iso.translation.vector),
            orientation: iso.rotation,
        }
    }
}

/// Precomputed object-frame geometry. Members are optional so partial asset
/// sets can be used for the encodings they support.
#[derive(Debug, Clone, Default)]
pub struct ObjectAssets {
    pub com: Option<Point3<f64>>,
    pub obb: Option<OrientedBoundingBox>,
    pub sq: Option<Superquadric>,
    /// Fixed surface samples keyed by point count.
    pub pc_points: BTreeMap<usize, Vec<Point3<f64>>>,
    pub sdf: Option<SdfGrid>,
}

impl ObjectAssets {
    fn point_cloud(&self, n: usize) -> Result<&[Point3<f64>], RepresentationError> {
        match self.pc_points.get(&n) {
            Some(points) if points.len() == n => Ok(points),
            _ => Err(RepresentationError::MissingAsset(format!(
                "{n}-point cloud"
            ))),
        }
    }

    pub fn grid(&self) -> Result<&SdfGrid, RepresentationError> {
        self.sdf
            .as_ref()
            .ok_or_else(|| RepresentationError::MissingAsset("distance grid".into()))
    }
}

fn missing(what: &str) -> RepresentationError {
    RepresentationError::MissingAsset(what.into())
}

/// Explicit encodings, moved into the world frame by `pose`.
pub fn build_observation(
    assets: &ObjectAssets,
    pose: &ObjectPose,
    kind: ObservationKind,
) -> Result<Observation, RepresentationError> {
    pose.validate()?;
    let iso = pose.isometry();
    let values = match kind {
        ObservationKind::Sdf => return Err(RepresentationError::SdfKind),
        ObservationKind::Com => {
            let com = assets.com.ok_or_else(|| missing("center of mass"))?;
            (iso * com).coords.iter().copied().collect()
        }
        ObservationKind::Bbox => {
            let obb = assets.obb.ok_or_else(|| missing("bounding box"))?;
            let center = iso * obb.center;
            let q = (pose.orientation * obb.orientation).into_inner();
            let mut v: Vec<f64> = center.coords.iter().copied().collect();
            v.extend([q.w, q.i, q.j, q.k]);
            v.extend(obb.extent.iter());
            v
        }
        ObservationKind::Sq => {
            let sq = assets.sq.ok_or_else(|| missing("superquadric"))?;
            sq.transformed(&iso).to_vector().to_vec()
        }
        pc => {
            let points = assets.point_cloud(pc.point_count().expect("point-cloud kind"))?;
            points
                .iter()
                .flat_map(|p| (iso * p).coords.iter().copied().collect::<Vec<_>>())
                .collect()
        }
    };
    debug_assert_eq!(values.len(), kind.dim());
    Ok(Observation { kind, values })
}

/// One observation per pose, in order.
pub fn build_observation_batch(
    assets: &ObjectAssets,
    poses: &[ObjectPose],
    kind: ObservationKind,
) -> Result<Vec<Observation>, RepresentationError> {
    poses
        .par_iter()
        .map(|pose| build_observation(assets, pose, kind))
        .collect()
}

/// Signed distances of world-frame fingertips to the object surface, in the
/// order given (thumb to little finger by convention). Fingertips are moved
/// into the object frame and interpolated in the grid.
pub fn fingertip_distances(
    grid: &SdfGrid,
    pose: &ObjectPose,
    fingertips: &[Point3<f64>; FINGER_COUNT],
) -> [f64; FINGER_COUNT] {
    let iso = pose.isometry();
    fingertips.map(|f| grid.query_point(&iso.inverse_transform_point(&f)))
}

/// [`fingertip_distances`] for many environments, in order.
pub fn fingertip_distances_batch(
    grid: &SdfGrid,
    inputs: &[(ObjectPose, [Point3<f64>; FINGER_COUNT])],
) -> Vec<[f64; FINGER_COUNT]> {
    inputs
        .par_iter()
        .map(|(pose, tips)| fingertip_distances(grid, pose, tips))
        .collect()
}

pub fn sdf_observation(
    assets: &ObjectAssets,
    pose: &ObjectPose,
    fingertips: &[Point3<f64>; FINGER_COUNT],
) -> Result<Observation, RepresentationError> {
    pose.validate()?;
    Ok(Observation {
        kind: ObservationKind::Sdf,
        values: fingertip_distances(assets.grid()?, pose, fingertips).to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::icosphere;
    use crate::mesh::{center_of_mass, oriented_bounding_box};
    use crate::sdf::GridSpec;
    use nalgebra::Vector3;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn sphere_assets() -> &'static ObjectAssets {
        static ASSETS: OnceLock<ObjectAssets> = OnceLock::new();
        ASSETS.get_or_init(|| {
            let mesh = icosphere(0.1, 3);
            let pc_points = POINT_CLOUD_SIZES
                .iter()
                .map(|&n| (n, mesh.sample_surface(n, n as u64).points))
                .collect();
            ObjectAssets {
                com: Some(Point3::new(0.0, 0.0, 0.05)),
                obb: Some(oriented_bounding_box(&mesh)),
                sq: Some(Superquadric::sphere(0.1, center_of_mass(&mesh).position).unwrap()),
                pc_points,
                sdf: Some(SdfGrid::build(&mesh, GridSpec::cube(64, 0.3)).unwrap()),
            }
        })
    }

    fn some_pose() -> ObjectPose {
        ObjectPose::new(
            Point3::new(0.3, -0.1, 0.2),
            UnitQuaternion::from_euler_angles(0.2, 0.5, -1.0),
        )
        .unwrap()
    }

    #[test]
    fn lengths_by_kind() {
        let assets = sphere_assets();
        for kind in ObservationKind::ALL {
            let obs = match kind {
                ObservationKind::Sdf => {
                    sdf_observation(assets, &some_pose(), &[Point3::origin(); 5]).unwrap()
                }
                _ => build_observation(assets, &some_pose(), kind).unwrap(),
            };
            assert_eq!(obs.values.len(), kind.dim(), "{kind}");
        }
        assert_eq!(ObservationKind::Pc128.dim(), 384);
    }

    #[test]
    fn com_is_moved_rigidly() {
        let obs = build_observation(
            sphere_assets(),
            &ObjectPose::from_translation(0.2, 0.0, 0.0),
            ObservationKind::Com,
        )
        .unwrap();
        assert_eq!(obs.values, vec![0.2, 0.0, 0.05]);
    }

    #[test]
    fn bbox_identity_pose_is_verbatim() {
        let assets = sphere_assets();
        let obb = assets.obb.unwrap();
        let obs =
            build_observation(assets, &ObjectPose::identity(), ObservationKind::Bbox).unwrap();
        let mut expected: Vec<f64> = obb.center.coords.iter().copied().collect();
        expected.extend(obb.quaternion_wxyz());
        expected.extend(obb.extent.iter());
        assert_eq!(obs.values, expected);
    }

    #[test]
    fn point_clouds_round_trip_through_the_pose() {
        let assets = sphere_assets();
        let pose = some_pose();
        let obs = build_observation(assets, &pose, ObservationKind::Pc128).unwrap();
        let grid = assets.sdf.as_ref().unwrap();
        let object_points = &assets.pc_points[&128];
        for (chunk, p) in obs.values.chunks(3).zip(object_points) {
            let world = Point3::new(chunk[0], chunk[1], chunk[2]);
            assert!((world - pose.isometry() * p).norm() <= 1e-12);
            let back = pose.isometry().inverse_transform_point(&world);
            assert!((grid.query_point(&back) - grid.query_point(p)).abs() <= 1e-6);
        }
    }

    #[test]
    fn errors() {
        let assets = sphere_assets();
        assert!(matches!(
            build_observation(assets, &ObjectPose::identity(), ObservationKind::Sdf),
            Err(RepresentationError::SdfKind)
        ));
        let empty = ObjectAssets::default();
        for kind in [
            ObservationKind::Com,
            ObservationKind::Bbox,
            ObservationKind::Sq,
            ObservationKind::Pc32,
        ] {
            assert!(matches!(
                build_observation(&empty, &ObjectPose::identity(), kind),
                Err(RepresentationError::MissingAsset(_))
            ));
        }
        assert!(sdf_observation(&empty, &ObjectPose::identity(), &[Point3::origin(); 5]).is_err());
        let bad = ObjectPose {
            position: Point3::new(f64::NAN, 0.0, 0.0),
            orientation: UnitQuaternion::identity(),
        };
        assert!(matches!(
            build_observation(assets, &bad, ObservationKind::Com),
            Err(RepresentationError::InvalidPose)
        ));
    }

    #[test]
    fn kind_names_parse() {
        for kind in ObservationKind::ALL {
            assert_eq!(kind.name().parse::<ObservationKind>().unwrap(), kind);
        }
        assert_eq!(
            "PC-128".parse::<ObservationKind>().unwrap(),
            ObservationKind::Pc128
        );
        assert!("pc64".parse::<ObservationKind>().is_err());
    }

    #[test]
    fn fingertip_examples() {
        let grid = sphere_assets().sdf.as_ref().unwrap();
        let same = fingertip_distances(grid, &some_pose(), &[Point3::new(0.1, 0.2, 0.3); 5]);
        assert!(same.iter().all(|d| *d == same[0]));
        let tips = [Point3::new(0.25, 0.0, 0.0); 5];
        let d = fingertip_distances(grid, &ObjectPose::identity(), &tips);
        assert!(
            (d[0] - 0.15).abs() <= grid.discretization_error() + 2e-3,
            "{}",
            d[0]
        );
        let t = Vector3::new(0.4, -0.2, 0.1);
        let moved = fingertip_distances(
            grid,
            &ObjectPose::from_translation(t.x, t.y, t.z),
            &tips.map(|p| p + t),
        );
        for (a, b) in moved.iter().zip(&d) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn batches_preserve_order() {
        let assets = sphere_assets();
        let grid = assets.sdf.as_ref().unwrap();
        let inputs: Vec<(ObjectPose, [Point3<f64>; 5])> = (0..50)
            .map(|i| {
                let x = i as f64 * 0.01;
                (
                    ObjectPose::from_translation(x, 0.0, 0.0),
                    [Point3::new(0.12, x, 0.0); 5],
                )
            })
            .collect();
        let batch = fingertip_distances_batch(grid, &inputs);
        for ((pose, tips), out) in inputs.iter().zip(&batch) {
            assert_eq!(*out, fingertip_distances(grid, pose, tips));
        }
        let poses: Vec<ObjectPose> = inputs.iter().map(|(p, _)| *p).collect();
        let obs = build_observation_batch(assets, &poses, ObservationKind::Sq).unwrap();
        assert_eq!(
            obs[7],
            build_observation(assets, &poses[7], ObservationKind::Sq).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fingertip_distances_are_rigidly_invariant(
            t in proptest::array::uniform3(-0.5..0.5f64),
            r in proptest::array::uniform3(-3.0..3.0f64),
            tips in proptest::array::uniform5(proptest::array::uniform3(-0.25..0.25f64)),
        ) {
            let grid = sphere_assets().sdf.as_ref().unwrap();
            let pose = some_pose();
            let tips = tips.map(|c| pose.isometry() * Point3::from(c));
            let motion = Isometry3::new(Vector3::from(t), Vector3::from(r));
            let moved_pose = ObjectPose::from(motion * pose.isometry());
            let a = fingertip_distances(grid, &pose, &tips);
            let b = fingertip_distances(grid, &moved_pose, &tips.map(|p| motion * p));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }
}
