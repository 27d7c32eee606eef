//! JSON index of per-object asset files.
//!
//! ```json
//! {
//!   "objects": {
//!     "mug": {
//!       "mesh": "meshes/mug.obj",
//!       "sdf": "cache/mug.sdf",
//!       "sq": "cache/mug.sq.json",
//!       "obb": { "center": [..], "quaternion_wxyz": [..], "extent": [..] },
//!       "com": [0.0, 0.0, 0.04],
//!       "pc": { "32": "cache/mug.pc32.json", "128": "..." }
//!     }
//!   }
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the index.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ObjectAssets, RepresentationError};
use crate::mesh::OrientedBoundingBox;
use crate::sdf::load_grid;
use crate::superquadric::FitRecord;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AssetIndex {
    pub objects: BTreeMap<String, AssetEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AssetEntry {
    pub mesh: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdf: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sq: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obb: Option<OrientedBoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub com: Option<[f64; 3]>,
    /// Point-cloud sample files keyed by point count.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pc: BTreeMap<usize, PathBuf>,
}

/// Seeded surface samples of one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloudFile {
    pub seed: u64,
    pub points: Vec<[f64; 3]>,
}

impl PointCloudFile {
    pub fn new(seed: u64, points: &[Point3<f64>]) -> Self {
        Self {
            seed,
            points: points.iter().map(|p| p.coords.into()).collect(),
        }
    }

    pub fn points(&self) -> Vec<Point3<f64>> {
        self.points.iter().map(|&p| Point3::from(p)).collect()
    }
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, RepresentationError> {
    let text = fs::read_to_string(path).map_err(|source| RepresentationError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| RepresentationError::Json {
        path: path.display().to_string(),
        source,
    })
}

impl AssetIndex {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RepresentationError> {
        read_json(path.as_ref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("index serializes")
    }
}

impl AssetEntry {
    /// Loads every referenced asset; `base` anchors relative paths.
    pub fn load_assets(&self, base: &Path) -> Result<ObjectAssets, RepresentationError> {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let sdf = self
            .sdf
            .as_deref()
            .map(|p| load_grid(resolve(p)))
            .transpose()?;
        let sq = match self.sq.as_deref() {
            Some(p) => Some(read_json::<FitRecord>(&resolve(p))?.superquadric()?),
            None => None,
        };
        let mut pc_points = BTreeMap::new();
        for (&n, p) in &self.pc {
            let path = resolve(p);
            let file: PointCloudFile = read_json(&path)?;
            if file.points.len() != n {
                return Err(RepresentationError::PointCount {
                    path: path.display().to_string(),
                    expected: n,
                    found: file.points.len(),
                });
            }
            pc_points.insert(n, file.points());
        }
        Ok(ObjectAssets {
            com: self.com.map(Point3::from),
            obb: self.obb,
            sq,
            pc_points,
            sdf,
        })
    }
}
