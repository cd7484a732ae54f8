//! Grasp set JSON and colored PLY output.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use graspgen_core::cloud::PointCloud;
use graspgen_core::geometry::Vec3;
use graspgen_core::synthesis::GraspCandidate;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspSetFile {
    pub schema_version: String,
    pub metadata: Metadata,
    pub grasps: Vec<GraspRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub tool: String,
    pub tool_version: String,
    /// RFC 3339, UTC. The only field that differs between identical runs.
    pub created_at: String,
    /// Unit of every length in this file.
    pub unit: String,
    pub input: InputInfo,
    pub config: ConfigEcho,
    pub counts: StageCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputInfo {
    pub path: String,
    pub format: String,
    pub native_unit: String,
    pub sha256: String,
    /// Points handed to synthesis, after sampling and downsampling.
    pub points: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub stroke: f64,
    pub finger_width: f64,
    pub finger_thickness: f64,
    pub finger_length: f64,
    pub mu: f64,
    pub safety_factor: f64,
    pub rotation_steps: u64,
    pub clearance: f64,
    pub side: String,
    pub k_translational: u64,
    pub k_rotational: u64,
    pub max_swap_iterations: u64,
    pub n_points: Option<u64>,
    pub seed: Option<u64>,
    pub voxel_size: Option<f64>,
}

/// Surviving candidates after each filter stage. `pre_filter` is the full
/// pair count `n(n-1)/2`; `evaluated` is what remained after radius pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageCounts {
    pub pre_filter: u64,
    pub evaluated: u64,
    pub post_stroke: u64,
    pub post_friction: u64,
    pub post_collision: u64,
    pub post_clustering: u64,
}

impl StageCounts {
    pub fn as_array(&self) -> [u64; 6] {
        [
            self.pre_filter,
            self.evaluated,
            self.post_stroke,
            self.post_friction,
            self.post_collision,
            self.post_clustering,
        ]
    }

    pub fn is_non_increasing(&self) -> bool {
        self.as_array().windows(2).all(|w| w[0] >= w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspRecord {
    pub i: u64,
    pub j: u64,
    pub contact_i: [f64; 3],
    pub contact_j: [f64; 3],
    pub normal_i: [f64; 3],
    pub normal_j: [f64; 3],
    pub width: f64,
    pub side: String,
    pub friction_margin: f64,
    pub thetas: Vec<f64>,
    pub poses: Vec<PoseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub theta: f64,
    pub translation: [f64; 3],
    /// Unit quaternion `(w, x, y, z)` with `w >= 0`.
    pub quaternion: [f64; 4],
}

impl GraspRecord {
    pub fn from_candidate(cloud: &PointCloud, c: &GraspCandidate) -> Self {
        let (pi, pj) = (&cloud[c.pair.i], &cloud[c.pair.j]);
        Self {
            i: c.pair.i as u64,
            j: c.pair.j as u64,
            contact_i: pi.position.to_array(),
            contact_j: pj.position.to_array(),
            normal_i: pi.normal.to_array(),
            normal_j: pj.normal.to_array(),
            width: c.pair.width,
            side: c.pair.side.as_str().to_string(),
            friction_margin: c.pair.friction_margin,
            thetas: c.valid_thetas.clone(),
            poses: c
                .valid_thetas
                .iter()
                .zip(&c.poses)
                .map(|(&theta, pose)| PoseRecord {
                    theta,
                    translation: pose.translation.to_array(),
                    quaternion: pose.rotation.to_quaternion(),
                })
                .collect(),
        }
    }
}

/// Pretty JSON with every float written as 17 significant digits, which
/// round-trips `f64` exactly.
struct PreciseFormatter(PrettyFormatter<'static>);

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value with the precise float formatter.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    out.push(b'\n');
    out
}

pub fn export_grasp_json(set: &GraspSetFile, path: &Path) -> io::Result<()> {
    fs::write(path, to_json_bytes(set))
}

pub fn load_grasp_json(path: &Path) -> io::Result<GraspSetFile> {
    let data = fs::read(path)?;
    serde_json::from_slice(&data).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

pub const CLOUD_COLOR: [u8; 3] = [0, 255, 0];
pub const CONTACT_COLOR: [u8; 3] = [255, 0, 0];
const TRIAD_SAMPLES: usize = 10;

/// Triad color for the `k`-th grasp: golden-ratio hue steps at reduced
/// saturation, so it never equals the cloud or contact colors.
pub fn grasp_color(k: usize) -> [u8; 3] {
    let h = (0.6 + k as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let (v, s) = (1.0, 0.75);
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|ch| ((ch + m) * 255.0).round() as u8)
}

/// Writes an ASCII PLY with the cloud in green, contact points of the final
/// grasps in red, and a small axis triad per pose.
///
/// Coordinates are divided by `meters_per_unit` so that the file matches the
/// input's native unit.
pub fn export_visual_ply(
    cloud: &PointCloud,
    set: &GraspSetFile,
    path: &Path,
    meters_per_unit: f64,
    triad_length: f64,
) -> io::Result<()> {
    let contacts: BTreeSet<usize> = set
        .grasps
        .iter()
        .flat_map(|g| [g.i as usize, g.j as usize])
        .collect();
    let mut vertices: Vec<(Vec3, [u8; 3])> = cloud
        .points()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let color = if contacts.contains(&k) { CONTACT_COLOR } else { CLOUD_COLOR };
            (p.position, color)
        })
        .collect();
    for (k, g) in set.grasps.iter().enumerate() {
        let color = grasp_color(k);
        for pose in &g.poses {
            let origin = Vec3::from_array(pose.translation);
            let r = quaternion_to_columns(pose.quaternion);
            for axis in r {
                for s in 1..=TRIAD_SAMPLES {
                    let t = triad_length * s as f64 / TRIAD_SAMPLES as f64;
                    vertices.push((origin + axis * t, color));
                }
            }
        }
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    write!(
        w,
        "ply\nformat ascii 1.0\ncomment graspgen grasp visualization\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        vertices.len()
    )?;
    for (p, [r, g, b]) in vertices {
        let p = p / meters_per_unit;
        writeln!(w, "{} {} {} {r} {g} {b}", p.x as f32, p.y as f32, p.z as f32)?;
    }
    w.flush()
}

fn quaternion_to_columns([w, x, y, z]: [f64; 4]) -> [Vec3; 3] {
    [
        Vec3::new(1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y + w * z), 2.0 * (x * z - w * y)),
        Vec3::new(2.0 * (x * y - w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z + w * x)),
        Vec3::new(2.0 * (x * z + w * y), 2.0 * (y * z - w * x), 1.0 - 2.0 * (x * x + y * y)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let bytes = to_json_bytes(&vec![0.1f64, 1.0 / 3.0, -2.5e-300, 0.0]);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("3.3333333333333331e-1"));
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0, -2.5e-300, 0.0]);
    }

    #[test]
    fn triad_colors_avoid_reserved_colors() {
        for k in 0..1000 {
            let c = grasp_color(k);
            assert_ne!(c, CLOUD_COLOR);
            assert_ne!(c, CONTACT_COLOR);
        }
        assert_ne!(grasp_color(0), grasp_color(1));
    }

    #[test]
    fn quaternion_columns_match_rotation() {
        use graspgen_core::geometry::{normalize, Rotation};
        let r = Rotation::from_axis_angle(normalize(Vec3::new(1.0, -2.0, 0.5)).unwrap(), 2.1);
        let cols = quaternion_to_columns(r.to_quaternion());
        for (c, col) in cols.iter().enumerate() {
            assert!((*col - r.column(c)).norm() < 1e-12);
        }
    }
}
