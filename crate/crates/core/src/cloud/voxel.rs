use std::collections::HashMap;

use super::PointCloud;

/// Keeps one point per occupied voxel: the member closest to the voxel's
/// centroid (lowest index on ties), with its own normal.
///
/// Voxels are aligned to the origin. Survivors keep the order of their
/// voxel's first member, so a no-op filter returns the cloud unchanged.
pub fn voxel_downsample(cloud: &PointCloud, voxel: f64) -> PointCloud {
    assert!(voxel > 0.0, "voxel size must be positive");
    let inv = 1.0 / voxel;
    let mut slots: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in cloud.points().iter().enumerate() {
        let key = (
            (p.position.x * inv).floor() as i64,
            (p.position.y * inv).floor() as i64,
            (p.position.z * inv).floor() as i64,
        );
        let slot = *slots.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(i);
    }
    let points = groups
        .iter()
        .map(|members| {
            let pick = if members.len() == 1 {
                members[0]
            } else {
                let sum = members
                    .iter()
                    .fold(crate::geometry::Vec3::ZERO, |acc, &i| acc + cloud[i].position);
                let centroid = sum / members.len() as f64;
                let mut best = members[0];
                let mut best_d = cloud[best].position.distance_squared(centroid);
                for &i in &members[1..] {
                    let d = cloud[i].position.distance_squared(centroid);
                    if d < best_d {
                        best = i;
                        best_d = d;
                    }
                }
                best
            };
            cloud[pick]
        })
        .collect();
    PointCloud::new(points, format!("{} | voxel {voxel}", cloud.source()))
}
