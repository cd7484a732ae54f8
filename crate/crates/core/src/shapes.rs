//! Closed triangle meshes of simple parts, with outward winding.
//!
//! Used as fixtures and for quick experiments without CAD files.

use std::f64::consts::TAU;

use crate::cloud::TriangleMesh;
use crate::geometry::Vec3;

#[derive(Default)]
struct Builder {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

impl Builder {
    fn vertex(&mut self, v: Vec3) -> usize {
        self.vertices.push(v);
        self.vertices.len() - 1
    }

    /// Adds a triangle wound so that its normal points along `outward`.
    fn triangle(&mut self, a: Vec3, b: Vec3, c: Vec3, outward: Vec3) {
        let n = (b - a).cross(c - a);
        let (a, b, c) = if n.dot(outward) >= 0.0 { (a, b, c) } else { (a, c, b) };
        let t = [self.vertex(a), self.vertex(b), self.vertex(c)];
        self.triangles.push(t);
    }

    /// Adds a planar quad given in cyclic order.
    fn quad(&mut self, q: [Vec3; 4], outward: Vec3) {
        self.triangle(q[0], q[1], q[2], outward);
        self.triangle(q[0], q[2], q[3], outward);
    }

    /// Axis-aligned rectangle in the plane `axis = at`, spanning `[lo, hi]`
    /// in the other two coordinates.
    fn rect(&mut self, axis: usize, at: f64, lo: [f64; 2], hi: [f64; 2], outward_sign: f64) {
        let make = |u: f64, v: f64| -> Vec3 {
            match axis {
                0 => Vec3::new(at, u, v),
                1 => Vec3::new(u, at, v),
                _ => Vec3::new(u, v, at),
            }
        };
        let mut outward = [0.0; 3];
        outward[axis] = outward_sign;
        self.quad(
            [
                make(lo[0], lo[1]),
                make(hi[0], lo[1]),
                make(hi[0], hi[1]),
                make(lo[0], hi[1]),
            ],
            Vec3::from_array(outward),
        );
    }

    fn finish(self) -> TriangleMesh {
        TriangleMesh::new(self.vertices, self.triangles).expect("generated indices are in range")
    }
}

/// Axis-aligned box centered at the origin.
pub fn cuboid(dx: f64, dy: f64, dz: f64) -> TriangleMesh {
    let (hx, hy, hz) = (dx / 2.0, dy / 2.0, dz / 2.0);
    let mut b = Builder::default();
    for s in [-1.0, 1.0] {
        b.rect(0, s * hx, [-hy, -hz], [hy, hz], s);
        b.rect(1, s * hy, [-hx, -hz], [hx, hz], s);
        b.rect(2, s * hz, [-hx, -hy], [hx, hy], s);
    }
    b.finish()
}

pub fn cube(edge: f64) -> TriangleMesh {
    cuboid(edge, edge, edge)
}

/// Long box along x.
pub fn bar(length: f64, width: f64, height: f64) -> TriangleMesh {
    cuboid(length, width, height)
}

/// Faceted cylinder about z, centered at the origin.
pub fn cylinder(radius: f64, height: f64, segments: usize) -> TriangleMesh {
    assert!(segments >= 3);
    let h = height / 2.0;
    let rim = |k: usize, z: f64| {
        let a = TAU * (k % segments) as f64 / segments as f64;
        Vec3::new(radius * a.cos(), radius * a.sin(), z)
    };
    let mut b = Builder::default();
    for k in 0..segments {
        let mid = TAU * (k as f64 + 0.5) / segments as f64;
        let out = Vec3::new(mid.cos(), mid.sin(), 0.0);
        b.quad([rim(k, -h), rim(k + 1, -h), rim(k + 1, h), rim(k, h)], out);
        for s in [-1.0, 1.0] {
            b.triangle(
                Vec3::new(0.0, 0.0, s * h),
                rim(k, s * h),
                rim(k + 1, s * h),
                Vec3::new(0.0, 0.0, s),
            );
        }
    }
    b.finish()
}

/// Faceted thick ring (tube) about z with a through bore.
pub fn ring(outer_radius: f64, inner_radius: f64, height: f64, segments: usize) -> TriangleMesh {
    assert!(segments >= 3 && inner_radius > 0.0 && inner_radius < outer_radius);
    let h = height / 2.0;
    let at = |r: f64, k: usize, z: f64| {
        let a = TAU * (k % segments) as f64 / segments as f64;
        Vec3::new(r * a.cos(), r * a.sin(), z)
    };
    let mut b = Builder::default();
    for k in 0..segments {
        let mid = TAU * (k as f64 + 0.5) / segments as f64;
        let radial = Vec3::new(mid.cos(), mid.sin(), 0.0);
        let (ro, ri) = (outer_radius, inner_radius);
        b.quad([at(ro, k, -h), at(ro, k + 1, -h), at(ro, k + 1, h), at(ro, k, h)], radial);
        // The bore wall faces the axis.
        b.quad([at(ri, k, -h), at(ri, k + 1, -h), at(ri, k + 1, h), at(ri, k, h)], -radial);
        for s in [-1.0, 1.0] {
            b.quad(
                [at(ri, k, s * h), at(ro, k, s * h), at(ro, k + 1, s * h), at(ri, k + 1, s * h)],
                Vec3::new(0.0, 0.0, s),
            );
        }
    }
    b.finish()
}

/// L-shaped bracket: a horizontal leg of length `leg_a` and a vertical leg of
/// height `leg_b`, both `thickness` thick, extruded `depth` along y.
///
/// The profile lies in the xz-plane with its outer corner at the origin.
pub fn l_bracket(leg_a: f64, leg_b: f64, thickness: f64, depth: f64) -> TriangleMesh {
    assert!(thickness < leg_a && thickness < leg_b);
    // Counter-clockwise in (x, z).
    let profile = [
        (0.0, 0.0),
        (leg_a, 0.0),
        (leg_a, thickness),
        (thickness, thickness),
        (thickness, leg_b),
        (0.0, leg_b),
    ];
    let mut b = Builder::default();
    for e in 0..profile.len() {
        let (x0, z0) = profile[e];
        let (x1, z1) = profile[(e + 1) % profile.len()];
        let outward = Vec3::new(z1 - z0, 0.0, -(x1 - x0));
        b.quad(
            [
                Vec3::new(x0, 0.0, z0),
                Vec3::new(x1, 0.0, z1),
                Vec3::new(x1, depth, z1),
                Vec3::new(x0, depth, z0),
            ],
            outward,
        );
    }
    for (y, s) in [(0.0, -1.0), (depth, 1.0)] {
        b.rect(1, y, [0.0, 0.0], [leg_a, thickness], s);
        b.rect(1, y, [0.0, thickness], [thickness, leg_b], s);
    }
    b.finish()
}
