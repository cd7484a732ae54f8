//! Point clouds with outward normals, and the ways to obtain them.

mod index;
mod mesh;
mod ply;
mod voxel;

use std::collections::HashMap;

pub use index::{OrientedBox, SpatialIndex};
pub use mesh::{load_mesh, load_obj, load_stl, read_obj, read_stl, sample_mesh, MeshFormat, TriangleMesh};
pub use ply::{load_ply, load_ply_scaled, read_ply, write_ply, PlyEncoding};
pub use voxel::voxel_downsample;

use crate::error::CloudError;
use crate::geometry::{normalize, UnitVec3, Vec3};

/// Points closer than this are treated as the same sample.
pub const DEDUP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub position: Vec3,
    /// Outward-pointing surface normal.
    pub normal: UnitVec3,
}

impl SurfacePoint {
    pub fn new(position: Vec3, normal: UnitVec3) -> Self {
        Self { position, normal }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<SurfacePoint>,
    source: String,
}

impl PointCloud {
    /// Builds a cloud, dropping every point within [`DEDUP_TOLERANCE`] of an
    /// earlier one. Order of the survivors is preserved.
    pub fn new(points: Vec<SurfacePoint>, source: impl Into<String>) -> Self {
        let points = dedup(points);
        Self {
            points,
            source: source.into(),
        }
    }

    /// Builds a cloud from raw positions and (not necessarily unit) normals.
    pub fn from_raw(
        raw: impl IntoIterator<Item = (Vec3, Vec3)>,
        source: impl Into<String>,
    ) -> Result<Self, CloudError> {
        let mut points = Vec::new();
        for (index, (p, n)) in raw.into_iter().enumerate() {
            if !p.is_finite() {
                return Err(CloudError::InvalidPosition { index });
            }
            let normal = unit_normal(n).ok_or(CloudError::InvalidNormal { index })?;
            points.push(SurfacePoint::new(p, normal));
        }
        Ok(Self::new(points, source))
    }

    pub fn points(&self) -> &[SurfacePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&SurfacePoint> {
        self.points.get(i)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.points.iter().map(|p| p.position)
    }

    /// Axis-aligned bounds `(min, max)`, or `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = self.points.first()?.position;
        Some(self.positions().fold((first, first), |(lo, hi), p| {
            (lo.component_min(p), hi.component_max(p))
        }))
    }

    pub fn into_points(self) -> Vec<SurfacePoint> {
        self.points
    }
}

impl std::ops::Index<usize> for PointCloud {
    type Output = SurfacePoint;
    fn index(&self, i: usize) -> &SurfacePoint {
        &self.points[i]
    }
}

/// Normalizes a file normal. Already-unit normals are kept bit-for-bit.
pub(crate) fn unit_normal(n: Vec3) -> Option<UnitVec3> {
    if !n.is_finite() {
        return None;
    }
    if (n.norm_squared() - 1.0).abs() <= 1e-12 {
        return Some(UnitVec3::new_unchecked(n));
    }
    normalize(n).ok()
}

fn dedup(points: Vec<SurfacePoint>) -> Vec<SurfacePoint> {
    let inv = 1.0 / DEDUP_TOLERANCE;
    let cell = |p: Vec3| {
        (
            (p.x * inv).floor() as i64,
            (p.y * inv).floor() as i64,
            (p.z * inv).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::with_capacity(points.len());
    let mut kept: Vec<SurfacePoint> = Vec::with_capacity(points.len());
    'outer: for sp in points {
        let (cx, cy, cz) = cell(sp.position);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &k in bucket {
                            if kept[k].position.distance(sp.position) <= DEDUP_TOLERANCE {
                                continue 'outer;
                            }
                        }
                    }
                }
            }
        }
        grid.entry((cx, cy, cz)).or_default().push(kept.len());
        kept.push(sp);
    }
    kept
}
