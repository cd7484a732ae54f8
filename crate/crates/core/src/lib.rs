//! Offline grasp synthesis for parallel jaw grippers.
//!
//! Given a point cloud of a known rigid part (sampled from CAD or loaded
//! with normals), [`synthesis`] enumerates contact pairs that fit the jaw
//! stroke, hold within the friction cone and leave the jaws collision free,
//! and [`clustering`] reduces the survivors to a small, spatially and
//! directionally diverse set with two rounds of k-medoids.
//!
//! ```
//! use graspgen_core::prelude::*;
//!
//! let part = shapes::cube(0.04);
//! let cloud = sample_mesh(&part, 400, 7).unwrap();
//! let gripper = GripperModel::new(0.06, 0.5);
//! let candidates = synthesize(&cloud, &gripper, &SynthesisConfig::default()).unwrap();
//! let grasps = cluster_grasps(&candidates, &ClusteringConfig::default()).unwrap();
//! assert!(!grasps.is_empty() && grasps.len() <= 30);
//! ```

pub mod cloud;
pub mod clustering;
pub mod error;
pub mod geometry;
pub mod shapes;
pub mod synthesis;

pub use error::{CloudError, ClusterError, GeometryError, SynthesisError};

pub mod prelude {
    pub use crate::cloud::{
        load_ply, sample_mesh, voxel_downsample, PointCloud, SpatialIndex, SurfacePoint,
        TriangleMesh,
    };
    pub use crate::clustering::{cluster_grasps, pam, ClusterResult, ClusteringConfig};
    pub use crate::geometry::{build_grasp_frame, normalize, Pose, Rotation, UnitVec3, Vec3};
    pub use crate::shapes;
    pub use crate::synthesis::{
        synthesize, ContactPair, GraspCandidate, GripperModel, Side, SideFilter, SynthesisConfig,
    };
}
