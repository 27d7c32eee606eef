//! Geometry representations and reward shaping for learning to grasp.
//!
//! Triangle meshes are turned into compact explicit encodings (center of
//! mass, oriented bounding box, superquadric, surface point clouds) and into a
//! dense signed distance grid that answers batched fingertip queries. The
//! [`reward`] module evaluates the shaped lifting reward built on those
//! distances.

pub mod mesh;
pub mod representation;
pub mod reward;
pub mod sdf;
pub mod superquadric;

pub use mesh::{MeshError, TriangleMesh};
pub use representation::{
    build_observation, fingertip_distances, ObjectAssets, ObjectPose, Observation, ObservationKind,
};
pub use reward::{is_success, lift_reward, sdf_reward, total_reward, RewardConfig, StepSignal};
pub use sdf::{load_grid, query, GridError, GridSpec, MeshSdf, QueryMode, SdfGrid};
pub use superquadric::{fit_superquadric, FitConfig, FitResult, SqError, Superquadric};
