//! Jaw-box collision geometry.
//!
//! In the grasp frame (x closing, y lateral, z approach) the two fingers
//! have their inner faces at `x = ±(width + clearance)/2` and run from the
//! fingertip plane `z = 0`, which contains both contacts, back to the palm
//! at `z = -finger_length`. The palm is a plate of `finger_thickness` behind
//! that. The swept volume that must be free of points is the outer cuboid
//! (fingers and palm) minus the inner cuboid (the gap between the fingers).

use super::{ContactPair, GripperModel};
use crate::cloud::{OrientedBox, SpatialIndex};
use crate::geometry::{build_grasp_frame, discrete_angles, Pose, Vec3};

/// Relative padding on the index query box; the exact test runs afterwards.
const QUERY_PAD: f64 = 1e-9;
/// Absorbs rounding in the distance-from-axis test, relative to `|d|² + L²`.
const RADIAL_PAD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JawGeometry {
    /// Half the gap between the finger inner faces.
    pub inner_half_gap: f64,
    pub finger_thickness: f64,
    pub half_finger_width: f64,
    pub finger_length: f64,
}

impl JawGeometry {
    pub fn new(gripper: &GripperModel, width: f64) -> Self {
        Self {
            inner_half_gap: 0.5 * (width + gripper.clearance),
            finger_thickness: gripper.finger_thickness,
            half_finger_width: 0.5 * gripper.finger_width,
            finger_length: gripper.finger_length,
        }
    }

    /// Closed outer cuboid in grasp-frame coordinates.
    #[inline]
    pub fn in_outer(&self, local: Vec3) -> bool {
        local.x.abs() <= self.inner_half_gap + self.finger_thickness
            && local.y.abs() <= self.half_finger_width
            && local.z <= 0.0
            && local.z >= -(self.finger_length + self.finger_thickness)
    }

    /// Closed inner cuboid in grasp-frame coordinates.
    #[inline]
    pub fn in_inner(&self, local: Vec3) -> bool {
        local.x.abs() <= self.inner_half_gap
            && local.y.abs() <= self.half_finger_width
            && local.z <= 0.0
            && local.z >= -self.finger_length
    }

    /// True if a point at `local` would be hit by the gripper.
    #[inline]
    pub fn collides(&self, local: Vec3) -> bool {
        self.in_outer(local) && !self.in_inner(local)
    }

    /// World-space box enclosing the outer cuboid, slightly padded.
    pub fn outer_query_box(&self, frame: &Pose) -> OrientedBox {
        let depth = self.finger_length + self.finger_thickness;
        let half = Vec3::new(
            self.inner_half_gap + self.finger_thickness,
            self.half_finger_width,
            0.5 * depth,
        );
        let pad = half.x.max(half.y).max(half.z) * QUERY_PAD;
        OrientedBox::new(
            frame.transform_point(Vec3::new(0.0, 0.0, -0.5 * depth)),
            frame.rotation,
            half + Vec3::new(pad, pad, pad),
        )
    }
}

/// True when the gripper at rotation `theta` about the pair axis touches no
/// cloud point outside the gap between its fingers.
pub fn collision_check(
    pair: &ContactPair,
    theta: f64,
    gripper: &GripperModel,
    index: &SpatialIndex,
) -> bool {
    let frame = build_grasp_frame(pair.midpoint, pair.axis, theta);
    let jaw = JawGeometry::new(gripper, pair.width);
    let query = jaw.outer_query_box(&frame);
    !index.any_in_box(&query, |_, p| jaw.collides(frame.inverse_transform_point(p)))
}

/// Collision-free angles among `2πk / rotation_steps`, ascending.
///
/// Gives the same answers as calling [`collision_check`] per angle, but scans
/// the neighborhood once for all angles and stops when every angle is blocked.
/// The closing axis is the first column of every frame, so a point's
/// closing-axis coordinate is computed once and shared.
pub fn discretize_rotations(
    pair: &ContactPair,
    gripper: &GripperModel,
    index: &SpatialIndex,
) -> Vec<f64> {
    let jaw = JawGeometry::new(gripper, pair.width);
    let slab = jaw.inner_half_gap + jaw.finger_thickness;
    let depth = jaw.finger_length + jaw.finger_thickness;
    let reach = (slab * slab + jaw.half_finger_width * jaw.half_finger_width + depth * depth).sqrt();
    let axis = pair.axis.into_inner();
    let thetas = discrete_angles(gripper.rotation_steps);
    let frames: Vec<[[f64; 3]; 3]> = thetas
        .iter()
        .map(|&t| build_grasp_frame(pair.midpoint, pair.axis, t).rotation.matrix())
        .collect();
    let palm2 = jaw.finger_length * jaw.finger_length;
    let mut open = vec![true; thetas.len()];
    let mut remaining = thetas.len();
    index.any_in_radius(pair.midpoint, reach * (1.0 + QUERY_PAD), |_, p| {
        let d = p - pair.midpoint;
        let x = axis.x * d.x + axis.y * d.y + axis.z * d.z;
        if x.abs() > slab {
            return false;
        }
        // Between the fingers only the palm can be hit, and the palm is at
        // least a finger length from the closing axis.
        let dd = d.x * d.x + d.y * d.y + d.z * d.z;
        if x.abs() <= jaw.inner_half_gap && dd - x * x < palm2 - RADIAL_PAD * (dd + palm2) {
            return false;
        }
        for (m, free) in frames.iter().zip(open.iter_mut()) {
            if !*free {
                continue;
            }
            let y = m[0][1] * d.x + m[1][1] * d.y + m[2][1] * d.z;
            if y.abs() > jaw.half_finger_width {
                continue;
            }
            let z = m[0][2] * d.x + m[1][2] * d.y + m[2][2] * d.z;
            if jaw.collides(Vec3::new(x, y, z)) {
                *free = false;
                remaining -= 1;
            }
        }
        remaining == 0
    });
    thetas.into_iter().zip(open).filter_map(|(t, free)| free.then_some(t)).collect()
}
