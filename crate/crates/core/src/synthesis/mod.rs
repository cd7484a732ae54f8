//! Pair enumeration and the grasp filter chain.
//!
//! Every unordered pair of surface points within reach of the jaws is a grasp
//! axis candidate. Pairs are dropped at the first failed test, cheapest
//! first: jaw stroke, then the friction cone at both contacts, then the
//! jaw-box collision test at each discrete rotation about the axis.

mod jaw;

use rayon::prelude::*;

pub use jaw::{collision_check, discretize_rotations, JawGeometry};

use crate::cloud::{PointCloud, SpatialIndex, SurfacePoint};
use crate::error::SynthesisError;
use crate::geometry::{angle_between, build_grasp_frame, normalize, Pose, UnitVec3, Vec3};

/// Pairs shorter than this have no usable closing axis.
pub const MIN_WIDTH: f64 = 1e-9;

/// Simplified parallel jaw gripper. Lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperModel {
    /// Maximum jaw opening.
    pub stroke: f64,
    pub finger_width: f64,
    pub finger_thickness: f64,
    pub finger_length: f64,
    /// Coulomb friction coefficient.
    pub mu: f64,
    /// Divides `mu` before the cone half-angle is taken.
    pub safety_factor: f64,
    pub rotation_steps: usize,
    /// How much longer the inner cuboid is than the contact distance.
    pub clearance: f64,
}

impl GripperModel {
    pub const DEFAULT_SAFETY_FACTOR: f64 = 1.5;
    pub const DEFAULT_ROTATION_STEPS: usize = 12;
    pub const DEFAULT_CLEARANCE: f64 = 0.001;
    pub const DEFAULT_FINGER_WIDTH: f64 = 0.01;
    pub const DEFAULT_FINGER_THICKNESS: f64 = 0.005;
    pub const DEFAULT_FINGER_LENGTH: f64 = 0.03;

    /// A gripper with the given stroke and friction and default everything else.
    pub fn new(stroke: f64, mu: f64) -> Self {
        Self {
            stroke,
            finger_width: Self::DEFAULT_FINGER_WIDTH,
            finger_thickness: Self::DEFAULT_FINGER_THICKNESS,
            finger_length: Self::DEFAULT_FINGER_LENGTH,
            mu,
            safety_factor: Self::DEFAULT_SAFETY_FACTOR,
            rotation_steps: Self::DEFAULT_ROTATION_STEPS,
            clearance: Self::DEFAULT_CLEARANCE,
        }
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        let positive = [
            ("stroke", self.stroke),
            ("finger_width", self.finger_width),
            ("finger_thickness", self.finger_thickness),
            ("finger_length", self.finger_length),
            ("mu", self.mu),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SynthesisError::InvalidGripper(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !(self.safety_factor >= 1.0 && self.safety_factor.is_finite()) {
            return Err(SynthesisError::InvalidGripper(format!(
                "safety_factor must be at least 1, got {}",
                self.safety_factor
            )));
        }
        if self.rotation_steps == 0 {
            return Err(SynthesisError::InvalidGripper(
                "rotation_steps must be at least 1".into(),
            ));
        }
        if !(self.clearance >= 0.0 && self.clearance.is_finite()) {
            return Err(SynthesisError::InvalidGripper(format!(
                "clearance must be non-negative, got {}",
                self.clearance
            )));
        }
        Ok(())
    }

    /// Friction cone half-angle after the safety factor: `atan(mu / safety_factor)`.
    pub fn effective_cone_angle(&self) -> f64 {
        (self.mu / self.safety_factor).atan()
    }

    /// Multiplies every length by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            stroke: self.stroke * s,
            finger_width: self.finger_width * s,
            finger_thickness: self.finger_thickness * s,
            finger_length: self.finger_length * s,
            clearance: self.clearance * s,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// Fingers squeeze inward on outward-facing surfaces.
    Outside,
    /// Fingers push outward against inward-facing surfaces, e.g. a bore.
    Inside,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Outside => "outside",
            Side::Inside => "inside",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SideFilter {
    #[default]
    OutsideOnly,
    InsideOnly,
    Both,
}

impl SideFilter {
    pub fn allows(self, side: Side) -> bool {
        matches!(
            (self, side),
            (SideFilter::Both, _)
                | (SideFilter::OutsideOnly, Side::Outside)
                | (SideFilter::InsideOnly, Side::Inside)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SynthesisConfig {
    pub side_filter: SideFilter,
    /// Keep a record of every rejected pair and the test it failed.
    pub record_rejections: bool,
}

/// Two contacts with `i < j`; the axis points from `i` to `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPair {
    pub i: usize,
    pub j: usize,
    /// `position_j - position_i`.
    pub v: Vec3,
    pub width: f64,
    pub midpoint: Vec3,
    pub axis: UnitVec3,
    pub side: Side,
    /// Cone half-angle minus the worse of the two contact angles.
    pub friction_margin: f64,
}

impl ContactPair {
    /// Derives the pair geometry from `cloud`. Returns `None` for `i >= j`
    /// or coincident points.
    pub fn new(cloud: &PointCloud, i: usize, j: usize, side: Side, friction_margin: f64) -> Option<Self> {
        if i >= j {
            return None;
        }
        let (pi, pj) = (cloud.get(i)?.position, cloud.get(j)?.position);
        let v = pj - pi;
        let width = v.norm();
        if width < MIN_WIDTH {
            return None;
        }
        Some(Self {
            i,
            j,
            v,
            width,
            midpoint: pi.midpoint(pj),
            axis: normalize(v).ok()?,
            side,
            friction_margin,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspCandidate {
    pub pair: ContactPair,
    /// Collision-free rotations about the axis, ascending.
    pub valid_thetas: Vec<f64>,
    /// One pose per entry of `valid_thetas`.
    pub poses: Vec<Pose>,
}

impl GraspCandidate {
    pub fn new(pair: ContactPair, valid_thetas: Vec<f64>) -> Self {
        let poses = valid_thetas
            .iter()
            .map(|&t| build_grasp_frame(pair.midpoint, pair.axis, t))
            .collect();
        Self {
            pair,
            valid_thetas,
            poses,
        }
    }
}

/// Number of unordered point pairs, `n(n-1)/2`.
pub fn pair_count(n: u64) -> Result<u64, SynthesisError> {
    let (a, b) = if n % 2 == 0 {
        (n / 2, n.saturating_sub(1))
    } else {
        (n, (n - 1) / 2)
    };
    a.checked_mul(b).ok_or(SynthesisError::Overflow(n))
}

/// The jaws can close on the pair: `1e-9 < ‖pj - pi‖ < stroke`.
pub fn check_stroke(pi: &SurfacePoint, pj: &SurfacePoint, stroke: f64) -> bool {
    let d = pi.position.distance(pj.position);
    d > MIN_WIDTH && d < stroke
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionOutcome {
    pub side: Side,
    pub margin: f64,
}

/// Tests both contacts against the friction cone, as an outside grasp and
/// then as an inside grasp. `None` if neither allowed side holds.
pub fn classify_and_check_friction(
    pi: &SurfacePoint,
    pj: &SurfacePoint,
    gripper: &GripperModel,
    sides: SideFilter,
) -> Option<FrictionOutcome> {
    let u = normalize(pj.position - pi.position).ok()?;
    let alpha = gripper.effective_cone_angle();
    let (ni, nj) = (-pi.normal, -pj.normal);
    let try_side = |side: Side| {
        if !sides.allows(side) {
            return None;
        }
        // The finger force direction at each contact.
        let (fi, fj) = match side {
            Side::Outside => (u, -u),
            Side::Inside => (-u, u),
        };
        let worst = angle_between(fi, ni).max(angle_between(fj, nj));
        (worst <= alpha).then_some(FrictionOutcome {
            side,
            margin: alpha - worst,
        })
    };
    try_side(Side::Outside).or_else(|| try_side(Side::Inside))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectStage {
    Stroke,
    Friction,
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection {
    pub i: usize,
    pub j: usize,
    pub stage: RejectStage,
}

/// Pair counts after each filter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthesisStats {
    pub points: usize,
    /// All unordered pairs, `n(n-1)/2`.
    pub pair_count: u64,
    /// Pairs returned by the radius search and actually tested.
    pub evaluated: u64,
    pub post_stroke: u64,
    pub post_friction: u64,
    pub post_collision: u64,
    /// Filled only when [`SynthesisConfig::record_rejections`] is set.
    pub rejections: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOutput {
    pub candidates: Vec<GraspCandidate>,
    pub stats: SynthesisStats,
}

pub fn synthesize(
    cloud: &PointCloud,
    gripper: &GripperModel,
    config: &SynthesisConfig,
) -> Result<Vec<GraspCandidate>, SynthesisError> {
    synthesize_with_stats(cloud, gripper, config).map(|o| o.candidates)
}

/// Runs the filter chain with a fresh grid index of cell size `stroke`.
pub fn synthesize_with_stats(
    cloud: &PointCloud,
    gripper: &GripperModel,
    config: &SynthesisConfig,
) -> Result<SynthesisOutput, SynthesisError> {
    if cloud.is_empty() {
        return Err(SynthesisError::EmptyCloud);
    }
    gripper.validate()?;
    let index = SpatialIndex::new(cloud, gripper.stroke);
    synthesize_indexed(cloud, &index, gripper, config)
}

#[derive(Default)]
struct PointResult {
    candidates: Vec<GraspCandidate>,
    evaluated: u64,
    post_stroke: u64,
    post_friction: u64,
    rejections: Vec<Rejection>,
}

/// Runs the filter chain against a prebuilt index over the same cloud.
///
/// Points are processed in parallel; the output is sorted by `(i, j)` and
/// does not depend on the thread count.
pub fn synthesize_indexed(
    cloud: &PointCloud,
    index: &SpatialIndex,
    gripper: &GripperModel,
    config: &SynthesisConfig,
) -> Result<SynthesisOutput, SynthesisError> {
    if cloud.is_empty() {
        return Err(SynthesisError::EmptyCloud);
    }
    gripper.validate()?;
    assert_eq!(index.len(), cloud.len(), "index was built over a different cloud");
    // The exact strict test follows, so pad the search radius.
    let search_radius = gripper.stroke * (1.0 + 1e-9);
    let per_point: Vec<PointResult> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let mut out = PointResult::default();
            let pi = &cloud[i];
            let reject = |out: &mut PointResult, j, stage| {
                if config.record_rejections {
                    out.rejections.push(Rejection { i, j, stage });
                }
            };
            for j in index.radius_query(pi.position, search_radius) {
                if j <= i {
                    continue;
                }
                out.evaluated += 1;
                let pj = &cloud[j];
                if !check_stroke(pi, pj, gripper.stroke) {
                    reject(&mut out, j, RejectStage::Stroke);
                    continue;
                }
                out.post_stroke += 1;
                let Some(friction) = classify_and_check_friction(pi, pj, gripper, config.side_filter)
                else {
                    reject(&mut out, j, RejectStage::Friction);
                    continue;
                };
                out.post_friction += 1;
                let pair = ContactPair::new(cloud, i, j, friction.side, friction.margin)
                    .expect("stroke check guarantees a non-degenerate pair");
                let thetas = discretize_rotations(&pair, gripper, index);
                if thetas.is_empty() {
                    reject(&mut out, j, RejectStage::Collision);
                    continue;
                }
                out.candidates.push(GraspCandidate::new(pair, thetas));
            }
            out
        })
        .collect();

    let mut stats = SynthesisStats {
        points: cloud.len(),
        pair_count: pair_count(cloud.len() as u64)?,
        ..Default::default()
    };
    let mut candidates = Vec::new();
    for r in per_point {
        stats.evaluated += r.evaluated;
        stats.post_stroke += r.post_stroke;
        stats.post_friction += r.post_friction;
        stats.rejections.extend(r.rejections);
        candidates.extend(r.candidates);
    }
    stats.post_collision = candidates.len() as u64;
    Ok(SynthesisOutput { candidates, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn sp(p: [f64; 3], n: [f64; 3]) -> SurfacePoint {
        SurfacePoint::new(Vec3::from_array(p), normalize(Vec3::from_array(n)).unwrap())
    }

    #[test]
    fn pair_count_examples() {
        assert_eq!(pair_count(10_000).unwrap(), 49_995_000);
        assert_eq!(pair_count(0).unwrap(), 0);
        assert_eq!(pair_count(1).unwrap(), 0);
        assert_eq!(pair_count(5).unwrap(), 10);
        assert_eq!(pair_count(u64::MAX), Err(SynthesisError::Overflow(u64::MAX)));
        // Largest n whose result fits.
        assert_eq!(pair_count(1 << 32).unwrap(), (1u64 << 31) * ((1u64 << 32) - 1));
    }

    #[test]
    fn stroke_is_strict() {
        let a = sp([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let b = sp([0.05, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let c = sp([0.06, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert!(check_stroke(&a, &b, 0.06));
        assert!(!check_stroke(&a, &c, 0.06));
        assert!(!check_stroke(&a, &a, 0.06));
    }

    #[test]
    fn opposite_box_faces_are_an_outside_grasp() {
        let g = GripperModel::new(0.06, 0.5);
        let pi = sp([0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]);
        let pj = sp([0.04, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let out = classify_and_check_friction(&pi, &pj, &g, SideFilter::OutsideOnly).unwrap();
        assert_eq!(out.side, Side::Outside);
        assert!((out.margin - (1.0f64 / 3.0).atan()).abs() < 1e-15);
        assert!((out.margin - 0.3217505543966422).abs() < 1e-15);
        assert_eq!(classify_and_check_friction(&pi, &pj, &g, SideFilter::InsideOnly), None);
    }

    #[test]
    fn perpendicular_faces_never_pass() {
        let g = GripperModel::new(0.06, 1e6);
        assert!(g.effective_cone_angle() < FRAC_PI_2);
        // pi on the face x = 0, pj on the shared edge with the face z = 0:
        // the closing axis lies in pi's tangent plane.
        let pi = sp([0.0, 0.0, 0.02], [-1.0, 0.0, 0.0]);
        let pj = sp([0.0, 0.0, 0.0], [0.0, 0.0, -1.0]);
        assert_eq!(classify_and_check_friction(&pi, &pj, &g, SideFilter::Both), None);
    }

    #[test]
    fn ring_bore_is_an_inside_grasp() {
        let g = GripperModel::new(0.06, 0.5);
        let r = 0.015;
        // Inner wall normals point at the ring axis.
        let pi = sp([-r, 0.0, 0.002], [1.0, 0.0, 0.0]);
        let pj = sp([r, 0.0, 0.002], [-1.0, 0.0, 0.0]);
        assert_eq!(classify_and_check_friction(&pi, &pj, &g, SideFilter::OutsideOnly), None);
        let out = classify_and_check_friction(&pi, &pj, &g, SideFilter::Both).unwrap();
        assert_eq!(out.side, Side::Inside);
        assert!((out.margin - g.effective_cone_angle()).abs() < 1e-15);
    }

    #[test]
    fn gripper_validation() {
        let ok = GripperModel::new(0.06, 0.5);
        assert!(ok.validate().is_ok());
        assert!(GripperModel { mu: -0.1, ..ok }.validate().is_err());
        assert!(GripperModel { safety_factor: 0.9, ..ok }.validate().is_err());
        assert!(GripperModel { rotation_steps: 0, ..ok }.validate().is_err());
        assert!(GripperModel { stroke: f64::NAN, ..ok }.validate().is_err());
    }

    #[test]
    fn two_point_cloud_gives_one_candidate() {
        let cloud = PointCloud::new(
            vec![
                sp([0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]),
                sp([0.03, 0.0, 0.0], [1.0, 0.0, 0.0]),
            ],
            "two",
        );
        let g = GripperModel::new(0.06, 0.5);
        let out = synthesize_with_stats(&cloud, &g, &SynthesisConfig::default()).unwrap();
        assert_eq!(out.candidates.len(), 1);
        let c = &out.candidates[0];
        assert_eq!((c.pair.i, c.pair.j), (0, 1));
        assert_eq!(c.valid_thetas.len(), 12);
        assert_eq!(c.poses.len(), 12);
        assert_eq!(c.pair.midpoint, Vec3::new(0.015, 0.0, 0.0));
        assert_eq!(out.stats.pair_count, 1);
        assert_eq!(out.stats.evaluated, 1);
        assert_eq!(out.stats.post_collision, 1);
    }

    #[test]
    fn empty_cloud_is_an_error() {
        let cloud = PointCloud::new(vec![], "empty");
        let g = GripperModel::new(0.06, 0.5);
        assert_eq!(
            synthesize(&cloud, &g, &SynthesisConfig::default()),
            Err(SynthesisError::EmptyCloud)
        );
    }

    #[test]
    fn rejections_are_recorded_when_asked() {
        let cloud = PointCloud::new(
            vec![
                sp([0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]),
                sp([0.03, 0.0, 0.0], [0.0, 1.0, 0.0]),
            ],
            "two",
        );
        let g = GripperModel::new(0.06, 0.5);
        let config = SynthesisConfig {
            record_rejections: true,
            ..Default::default()
        };
        let out = synthesize_with_stats(&cloud, &g, &config).unwrap();
        assert!(out.candidates.is_empty());
        assert_eq!(
            out.stats.rejections,
            vec![Rejection { i: 0, j: 1, stage: RejectStage::Friction }]
        );
    }
}
