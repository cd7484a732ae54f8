//! Brute-force reference implementations and fixtures shared by the test
//! suites. Nothing here calls into the synthesis or clustering code paths it
//! is used to check.
#![allow(dead_code)]

use graspgen_core::cloud::{sample_mesh, PointCloud, SurfacePoint, TriangleMesh};
use graspgen_core::geometry::{build_grasp_frame, normalize, Pose, Rotation, UnitVec3, Vec3};
use graspgen_core::shapes;
use graspgen_core::synthesis::{GripperModel, SideFilter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(i, j, valid thetas)` for every surviving pair, sorted by `(i, j)`.
pub type PairThetas = Vec<(usize, usize, Vec<f64>)>;

/// Naive point-in-gripper test, built as the union of the two finger boxes
/// and the palm plate in the grasp frame.
pub fn naive_point_hits_gripper(g: &GripperModel, width: f64, frame: &Pose, p: Vec3) -> bool {
    let d = p - frame.translation;
    let x = d.dot(frame.rotation.column(0));
    let y = d.dot(frame.rotation.column(1));
    let z = d.dot(frame.rotation.column(2));
    let gap = (width + g.clearance) / 2.0;
    let t = g.finger_thickness;
    let lateral = y.abs() <= g.finger_width / 2.0;
    let finger = x.abs() > gap && x.abs() <= gap + t && z <= 0.0 && z >= -g.finger_length;
    let palm = x.abs() <= gap + t && z < -g.finger_length && z >= -(g.finger_length + t);
    lateral && (finger || palm)
}

pub fn naive_collision_free(cloud: &PointCloud, g: &GripperModel, i: usize, j: usize, theta: f64) -> bool {
    let (a, b) = (cloud[i].position, cloud[j].position);
    let v = b - a;
    let width = (v.x * v.x + v.y * v.y + v.z * v.z).sqrt();
    let axis = normalize(v).unwrap();
    let frame = build_grasp_frame((a + b) * 0.5, axis, theta);
    cloud
        .points()
        .iter()
        .all(|p| !naive_point_hits_gripper(g, width, &frame, p.position))
}

fn acos_clamped(c: f64) -> f64 {
    c.clamp(-1.0, 1.0).acos()
}

/// Friction verdict from first principles: `Some(true)` outside, `Some(false)`
/// inside, `None` rejected.
pub fn naive_friction(pi: &SurfacePoint, pj: &SurfacePoint, g: &GripperModel, sides: SideFilter) -> Option<bool> {
    let v = pj.position - pi.position;
    let len = (v.x * v.x + v.y * v.y + v.z * v.z).sqrt();
    let u = v / len;
    let alpha = (g.mu / g.safety_factor).atan();
    let (ni, nj) = (pi.normal.into_inner(), pj.normal.into_inner());
    // Outside: finger i pushes along +u into -n_i, finger j along -u into -n_j.
    let outside = acos_clamped(u.dot(-ni)) <= alpha && acos_clamped((-u).dot(-nj)) <= alpha;
    let inside = acos_clamped((-u).dot(-ni)) <= alpha && acos_clamped(u.dot(-nj)) <= alpha;
    let allow_out = matches!(sides, SideFilter::OutsideOnly | SideFilter::Both);
    let allow_in = matches!(sides, SideFilter::InsideOnly | SideFilter::Both);
    if outside && allow_out {
        Some(true)
    } else if inside && allow_in {
        Some(false)
    } else {
        None
    }
}

/// Triple loop over all pairs, all discrete angles and all points.
pub fn brute_force_synthesis(cloud: &PointCloud, g: &GripperModel, sides: SideFilter) -> PairThetas {
    let n = cloud.len();
    let thetas: Vec<f64> = (0..g.rotation_steps)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / g.rotation_steps as f64)
        .collect();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let v = cloud[j].position - cloud[i].position;
            let d = (v.x * v.x + v.y * v.y + v.z * v.z).sqrt();
            if !(d > 1e-9 && d < g.stroke) {
                continue;
            }
            if naive_friction(&cloud[i], &cloud[j], g, sides).is_none() {
                continue;
            }
            let free: Vec<f64> = thetas
                .iter()
                .copied()
                .filter(|&t| naive_collision_free(cloud, g, i, j, t))
                .collect();
            if !free.is_empty() {
                out.push((i, j, free));
            }
        }
    }
    out
}

pub fn sampled(mesh: &TriangleMesh, n: usize, seed: u64) -> PointCloud {
    sample_mesh(mesh, n, seed).unwrap()
}

/// Synthetic parts, in meters.
pub fn fixture_parts() -> Vec<(&'static str, TriangleMesh)> {
    vec![
        ("cube", shapes::cube(0.04)),
        ("cylinder", shapes::cylinder(0.02, 0.05, 24)),
        ("ring", shapes::ring(0.03, 0.018, 0.012, 24)),
        ("l-bracket", shapes::l_bracket(0.06, 0.05, 0.008, 0.03)),
        ("bar", shapes::bar(0.12, 0.025, 0.015)),
    ]
}

pub fn fixture_gripper() -> GripperModel {
    GripperModel {
        stroke: 0.06,
        finger_width: 0.01,
        finger_thickness: 0.005,
        finger_length: 0.03,
        mu: 0.5,
        safety_factor: 1.5,
        rotation_steps: 12,
        clearance: 0.001,
    }
}

pub fn random_unit(rng: &mut impl Rng) -> UnitVec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return normalize(v).unwrap();
        }
    }
}

pub fn random_rotation(rng: &mut impl Rng) -> Rotation {
    let axis = random_unit(rng);
    Rotation::from_axis_angle(axis, rng.random_range(0.0..std::f64::consts::TAU))
}

/// A small random box part in a random pose, with a few clutter points, for
/// property tests. Stroke-sized so that many pairs reach the collision test.
pub fn random_scene(seed: u64, n_points: usize) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = shapes::cuboid(
        rng.random_range(0.01..0.05),
        rng.random_range(0.01..0.05),
        rng.random_range(0.01..0.05),
    );
    let pose = Pose::new(
        random_rotation(&mut rng),
        Vec3::new(
            rng.random_range(-0.05..0.05),
            rng.random_range(-0.05..0.05),
            rng.random_range(-0.05..0.05),
        ),
    );
    let part = sample_mesh(&mesh.transformed(&pose), n_points, rng.random()).unwrap();
    let mut points = part.into_points();
    for _ in 0..n_points / 10 {
        let p = pose.translation
            + Vec3::new(
                rng.random_range(-0.04..0.04),
                rng.random_range(-0.04..0.04),
                rng.random_range(-0.04..0.04),
            );
        points.push(SurfacePoint::new(p, random_unit(&mut rng)));
    }
    PointCloud::new(points, format!("random scene {seed}"))
}

/// The 24 proper rotations that map coordinate axes onto coordinate axes.
pub fn cube_rotations() -> Vec<Rotation> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::new();
    for perm in perms {
        for signs in 0..8 {
            let mut m = [[0.0; 3]; 3];
            for (row, &col) in perm.iter().enumerate() {
                m[row][col] = if signs >> row & 1 == 1 { -1.0 } else { 1.0 };
            }
            if let Ok(r) = Rotation::from_matrix(m) {
                out.push(r);
            }
        }
    }
    assert_eq!(out.len(), 24);
    out
}

pub fn transform_cloud(cloud: &PointCloud, pose: &Pose) -> PointCloud {
    let pts = cloud
        .points()
        .iter()
        .map(|p| SurfacePoint::new(pose.transform_point(p.position), pose.transform_direction(p.normal)))
        .collect();
    PointCloud::new(pts, "transformed")
}

/// Exhaustive k-medoids optimum over all `C(n, k)` medoid sets.
pub fn brute_force_kmedoids(n: usize, k: usize, d: &dyn Fn(usize, usize) -> f64) -> (Vec<usize>, f64) {
    fn rec(
        start: usize,
        n: usize,
        k: usize,
        cur: &mut Vec<usize>,
        d: &dyn Fn(usize, usize) -> f64,
        best: &mut (Vec<usize>, f64),
    ) {
        if cur.len() == k {
            let c = medoid_cost(n, cur, d);
            if c < best.1 {
                *best = (cur.clone(), c);
            }
            return;
        }
        for m in start..n {
            cur.push(m);
            rec(m + 1, n, k, cur, d, best);
            cur.pop();
        }
    }
    let mut best = (Vec::new(), f64::INFINITY);
    rec(0, n, k, &mut Vec::new(), d, &mut best);
    best
}

pub fn medoid_cost(n: usize, medoids: &[usize], d: &dyn Fn(usize, usize) -> f64) -> f64 {
    (0..n)
        .map(|o| {
            medoids
                .iter()
                .map(|&m| if m == o { 0.0 } else { d(m, o) })
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// True if no single medoid/non-medoid exchange lowers the cost by more than `tol`.
pub fn is_swap_local_optimum(n: usize, medoids: &[usize], d: &dyn Fn(usize, usize) -> f64, tol: f64) -> bool {
    let base = medoid_cost(n, medoids, d);
    for slot in 0..medoids.len() {
        for h in 0..n {
            if medoids.contains(&h) {
                continue;
            }
            let mut trial = medoids.to_vec();
            trial[slot] = h;
            if medoid_cost(n, &trial, d) < base - tol {
                return false;
            }
        }
    }
    true
}
