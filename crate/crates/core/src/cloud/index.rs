//! Uniform hash grid over point positions.

use std::collections::HashMap;

use super::PointCloud;
use crate::geometry::{Rotation, Vec3};

type Cell = (i64, i64, i64);

/// A box with arbitrary orientation, closed on its boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    /// Columns are the box axes in world coordinates.
    pub rotation: Rotation,
    pub half_extents: Vec3,
}

impl OrientedBox {
    pub fn new(center: Vec3, rotation: Rotation, half_extents: Vec3) -> Self {
        Self {
            center,
            rotation,
            half_extents,
        }
    }

    #[inline]
    pub fn contains(&self, p: Vec3) -> bool {
        let local = self.rotation.apply_inverse(p - self.center);
        local.x.abs() <= self.half_extents.x
            && local.y.abs() <= self.half_extents.y
            && local.z.abs() <= self.half_extents.z
    }

    /// World-space axis-aligned bounds `(min, max)`.
    pub fn aabb(&self) -> (Vec3, Vec3) {
        let m = self.rotation.matrix();
        let h = self.half_extents;
        let reach = |r: usize| m[r][0].abs() * h.x + m[r][1].abs() * h.y + m[r][2].abs() * h.z;
        let r = Vec3::new(reach(0), reach(1), reach(2));
        (self.center - r, self.center + r)
    }
}

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    positions: Vec<Vec3>,
    buckets: HashMap<Cell, Vec<u32>>,
    inv_cell: f64,
    cell_size: f64,
}

impl SpatialIndex {
    /// Buckets every point of `cloud` into cubic cells of edge `cell_size`.
    pub fn new(cloud: &PointCloud, cell_size: f64) -> Self {
        assert!(cell_size > 0.0 && cell_size.is_finite(), "cell size must be positive");
        assert!(cloud.len() <= u32::MAX as usize, "cloud too large to index");
        let inv_cell = 1.0 / cell_size;
        let positions: Vec<Vec3> = cloud.positions().collect();
        let mut buckets: HashMap<Cell, Vec<u32>> = HashMap::new();
        for (i, &p) in positions.iter().enumerate() {
            buckets.entry(cell_of(p, inv_cell)).or_default().push(i as u32);
        }
        Self {
            positions,
            buckets,
            inv_cell,
            cell_size,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn position(&self, i: usize) -> Vec3 {
        self.positions[i]
    }

    /// Calls `visit` with every index whose cell overlaps `[lo, hi]`.
    fn visit_cells(&self, lo: Vec3, hi: Vec3, mut visit: impl FnMut(usize) -> bool) -> bool {
        let (ax, ay, az) = cell_of(lo, self.inv_cell);
        let (bx, by, bz) = cell_of(hi, self.inv_cell);
        let span = |a: i64, b: i64| (b.saturating_sub(a) as u128).saturating_add(1);
        let cells = span(ax, bx) * span(ay, by) * span(az, bz);
        if cells > self.buckets.len() as u128 {
            for (&(x, y, z), bucket) in &self.buckets {
                if (ax..=bx).contains(&x) && (ay..=by).contains(&y) && (az..=bz).contains(&z) {
                    for &i in bucket {
                        if visit(i as usize) {
                            return true;
                        }
                    }
                }
            }
            return false;
        }
        for x in ax..=bx {
            for y in ay..=by {
                for z in az..=bz {
                    if let Some(bucket) = self.buckets.get(&(x, y, z)) {
                        for &i in bucket {
                            if visit(i as usize) {
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    }

    /// Indices with `‖p − center‖ ≤ radius`, ascending.
    pub fn radius_query(&self, center: Vec3, radius: f64) -> Vec<usize> {
        let r = Vec3::new(radius, radius, radius);
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.visit_cells(center - r, center + r, |i| {
            if self.positions[i].distance_squared(center) <= r2 {
                out.push(i);
            }
            false
        });
        out.sort_unstable();
        out
    }

    /// Indices inside `obox` (boundary included), ascending.
    pub fn box_query(&self, obox: &OrientedBox) -> Vec<usize> {
        let (lo, hi) = obox.aabb();
        let mut out = Vec::new();
        self.visit_cells(lo, hi, |i| {
            if obox.contains(self.positions[i]) {
                out.push(i);
            }
            false
        });
        out.sort_unstable();
        out
    }

    /// True if some point with `‖p − center‖ ≤ radius` satisfies `pred`.
    /// Stops at the first hit.
    pub fn any_in_radius(&self, center: Vec3, radius: f64, mut pred: impl FnMut(usize, Vec3) -> bool) -> bool {
        let r = Vec3::new(radius, radius, radius);
        let r2 = radius * radius;
        self.visit_cells(center - r, center + r, |i| {
            let p = self.positions[i];
            p.distance_squared(center) <= r2 && pred(i, p)
        })
    }

    /// True if some point inside `obox` satisfies `pred`. Stops at the first hit.
    pub fn any_in_box(&self, obox: &OrientedBox, mut pred: impl FnMut(usize, Vec3) -> bool) -> bool {
        let (lo, hi) = obox.aabb();
        self.visit_cells(lo, hi, |i| {
            let p = self.positions[i];
            obox.contains(p) && pred(i, p)
        })
    }
}

#[inline]
fn cell_of(p: Vec3, inv_cell: f64) -> Cell {
    (
        (p.x * inv_cell).floor() as i64,
        (p.y * inv_cell).floor() as i64,
        (p.z * inv_cell).floor() as i64,
    )
}
