//! Triangle meshes (OBJ, STL) and area-weighted surface sampling.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PointCloud, SurfacePoint};
use crate::error::CloudError;
use crate::geometry::{normalize, Pose, UnitVec3, Vec3};

/// Triangles with less area than this are dropped when a mesh is built.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    normals: Option<Vec<Vec3>>,
}

impl TriangleMesh {
    /// Validates indices and drops degenerate triangles.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, CloudError> {
        Self::with_normals(vertices, triangles, None)
    }

    pub fn with_normals(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        normals: Option<Vec<Vec3>>,
    ) -> Result<Self, CloudError> {
        let count = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&vertex) = tri.iter().find(|&&v| v >= count) {
                return Err(CloudError::IndexOutOfRange {
                    triangle: t,
                    vertex,
                    count,
                });
            }
        }
        if let Some(index) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(CloudError::InvalidPosition { index });
        }
        let normals = normals.filter(|n| n.len() == count);
        let mut mesh = TriangleMesh {
            vertices,
            triangles,
            normals,
        };
        let keep: Vec<[usize; 3]> = (0..mesh.triangles.len())
            .filter(|&t| mesh.area(t) > MIN_TRIANGLE_AREA)
            .map(|t| mesh.triangles[t])
            .collect();
        mesh.triangles = keep;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    fn doubled_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(c - a)
    }

    pub fn area(&self, t: usize) -> f64 {
        0.5 * self.doubled_normal(t).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Unit normal from the counter-clockwise winding of triangle `t`.
    pub fn face_normal(&self, t: usize) -> UnitVec3 {
        normalize(self.doubled_normal(t)).expect("degenerate triangles are removed at construction")
    }

    /// Applies a rigid transform to every vertex (and normal).
    pub fn transformed(&self, pose: &Pose) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| pose.transform_point(v)).collect(),
            triangles: self.triangles.clone(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|&n| pose.rotation.apply(n)).collect()),
        }
    }

    pub fn scaled(&self, factor: f64) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| v * factor).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.clone(),
        }
    }

    /// Concatenates two meshes.
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let offset = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(other.triangles.iter().map(|t| t.map(|v| v + offset)));
        TriangleMesh {
            vertices,
            triangles,
            normals: None,
        }
    }
}

/// Draws `n` points uniformly by area, each carrying its triangle's normal.
///
/// The generator is ChaCha8 seeded with `seed`, so equal inputs give equal
/// clouds on every platform.
pub fn sample_mesh(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud, CloudError> {
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.area(t);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(CloudError::DegenerateMesh);
    }
    if n == 0 {
        return Err(CloudError::EmptyCloud);
    }
    let normals: Vec<UnitVec3> = (0..mesh.triangles.len()).map(|t| mesh.face_normal(t)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        let t = cumulative
            .partition_point(|&c| c <= target)
            .min(cumulative.len() - 1);
        let [a, b, c] = mesh.corners(t);
        let s = rng.random::<f64>().sqrt();
        let r = rng.random::<f64>();
        let p = a * (1.0 - s) + b * (s * (1.0 - r)) + c * (s * r);
        points.push(SurfacePoint::new(p, normals[t]));
    }
    Ok(PointCloud::new(
        points,
        format!("mesh sample n={n} seed={seed}"),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Stl,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "stl" => Some(MeshFormat::Stl),
            _ => None,
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat, scale: f64) -> Result<TriangleMesh, CloudError> {
    match format {
        MeshFormat::Obj => load_obj(path, scale),
        MeshFormat::Stl => load_stl(path, scale),
    }
}

pub fn load_obj(path: impl AsRef<Path>, scale: f64) -> Result<TriangleMesh, CloudError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CloudError::io(path, e))?;
    read_obj(&text, scale)
}

pub fn load_stl(path: impl AsRef<Path>, scale: f64) -> Result<TriangleMesh, CloudError> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| CloudError::io(path, e))?;
    read_stl(&data, scale)
}

fn parse_floats<const N: usize>(
    words: &mut std::str::SplitWhitespace<'_>,
    line: usize,
) -> Result<[f64; N], CloudError> {
    let mut out = [0.0; N];
    for slot in out.iter_mut() {
        *slot = words
            .next()
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| CloudError::parse(line, format!("expected {N} numbers")))?;
    }
    Ok(out)
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn obj_index(token: &str, len: usize, line: usize) -> Result<usize, CloudError> {
    let raw: i64 = token
        .parse()
        .map_err(|_| CloudError::parse(line, format!("bad index '{token}'")))?;
    let resolved = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        len as i64 + raw
    } else {
        -1
    };
    if resolved < 0 {
        return Err(CloudError::parse(line, format!("index '{token}' out of range")));
    }
    Ok(resolved as usize)
}

/// Parses `v`, `vn` and `f` records; polygons are fan-triangulated.
pub fn read_obj(text: &str, scale: f64) -> Result<TriangleMesh, CloudError> {
    let mut vertices = Vec::new();
    let mut file_normals = Vec::new();
    let mut triangles = Vec::new();
    let mut corner_normals: Vec<(usize, usize)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("");
        let mut words = line.split_whitespace();
        match words.next() {
            Some("v") => {
                let [x, y, z] = parse_floats::<3>(&mut words, line_no)?;
                vertices.push(Vec3::new(x, y, z) * scale);
            }
            Some("vn") => {
                let [x, y, z] = parse_floats::<3>(&mut words, line_no)?;
                file_normals.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut face = Vec::new();
                for corner in words {
                    let mut parts = corner.split('/');
                    let v = obj_index(parts.next().unwrap_or(""), vertices.len(), line_no)?;
                    if let Some(n) = parts.nth(1).filter(|s| !s.is_empty()) {
                        let n = obj_index(n, file_normals.len(), line_no)?;
                        corner_normals.push((v, n));
                    }
                    face.push(v);
                }
                if face.len() < 3 {
                    return Err(CloudError::parse(line_no, "face with fewer than 3 vertices"));
                }
                for i in 1..face.len() - 1 {
                    triangles.push([face[0], face[i], face[i + 1]]);
                }
            }
            _ => {}
        }
    }
    let normals = (!corner_normals.is_empty()).then(|| {
        let mut per_vertex = vec![None; vertices.len()];
        for &(v, n) in &corner_normals {
            if let (Some(slot), Some(&normal)) = (per_vertex.get_mut(v), file_normals.get(n)) {
                slot.get_or_insert(normal);
            }
        }
        per_vertex.into_iter().collect::<Option<Vec<Vec3>>>()
    });
    TriangleMesh::with_normals(vertices, triangles, normals.flatten())
}

/// Parses ASCII or binary STL. Stored facet normals are ignored; normals
/// come from the vertex winding.
pub fn read_stl(data: &[u8], scale: f64) -> Result<TriangleMesh, CloudError> {
    let is_binary = data.len() >= 84 && {
        let count = u32::from_le_bytes(data[80..84].try_into().unwrap()) as usize;
        data.len() == 84 + count * 50
    };
    if is_binary {
        read_stl_binary(data, scale)
    } else if data.trim_ascii_start().starts_with(b"solid") {
        let text = std::str::from_utf8(data)
            .map_err(|_| CloudError::parse(1, "ASCII STL is not valid text"))?;
        read_stl_ascii(text, scale)
    } else {
        Err(CloudError::parse(1, "neither ASCII nor binary STL"))
    }
}

fn read_stl_binary(data: &[u8], scale: f64) -> Result<TriangleMesh, CloudError> {
    let count = u32::from_le_bytes(data[80..84].try_into().unwrap()) as usize;
    let mut vertices = Vec::with_capacity(count * 3);
    let mut triangles = Vec::with_capacity(count);
    for f in 0..count {
        let base = 84 + f * 50 + 12;
        for v in 0..3 {
            let at = base + v * 12;
            let c = |k: usize| {
                f32::from_le_bytes(data[at + 4 * k..at + 4 * k + 4].try_into().unwrap()) as f64
            };
            vertices.push(Vec3::new(c(0), c(1), c(2)) * scale);
        }
        triangles.push([3 * f, 3 * f + 1, 3 * f + 2]);
    }
    TriangleMesh::new(vertices, triangles)
}

fn read_stl_ascii(text: &str, scale: f64) -> Result<TriangleMesh, CloudError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut pending = 0usize;
    for (k, line) in text.lines().enumerate() {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("vertex") => {
                let [x, y, z] = parse_floats::<3>(&mut words, k + 1)?;
                vertices.push(Vec3::new(x, y, z) * scale);
                pending += 1;
            }
            Some("endfacet") => {
                if pending != 3 {
                    return Err(CloudError::parse(k + 1, "facet without exactly 3 vertices"));
                }
                let n = vertices.len();
                triangles.push([n - 3, n - 2, n - 1]);
                pending = 0;
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn square_samples_stay_inside_with_up_normals() {
        let cloud = sample_mesh(&unit_square(), 1000, 42).unwrap();
        assert_eq!(cloud.len(), 1000);
        for p in cloud.points() {
            assert_eq!(p.normal.into_inner(), Vec3::new(0.0, 0.0, 1.0));
            assert!((0.0..=1.0).contains(&p.position.x));
            assert!((0.0..=1.0).contains(&p.position.y));
            assert_eq!(p.position.z, 0.0);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_mesh(&unit_square(), 200, 7).unwrap();
        let b = sample_mesh(&unit_square(), 200, 7).unwrap();
        let c = sample_mesh(&unit_square(), 200, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn degenerate_mesh_rejected() {
        let flat = TriangleMesh::new(
            vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(flat.triangles().is_empty());
        assert!(matches!(sample_mesh(&flat, 10, 0), Err(CloudError::DegenerateMesh)));
    }

    #[test]
    fn out_of_range_index() {
        let err = TriangleMesh::new(vec![Vec3::ZERO], vec![[0, 0, 3]]).unwrap_err();
        assert!(matches!(
            err,
            CloudError::IndexOutOfRange {
                triangle: 0,
                vertex: 3,
                count: 1
            }
        ));
    }

    #[test]
    fn obj_quad_with_slashes_and_negative_indices() {
        let text = "# square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\n\
f 1//1 2//1 3//1 4//1\nf -4 -2 -1\n";
        let mesh = read_obj(text, 1000.0).unwrap();
        assert_eq!(mesh.triangles(), &[[0, 1, 2], [0, 2, 3], [0, 2, 3]]);
        assert_eq!(mesh.vertices()[2], Vec3::new(1000.0, 1000.0, 0.0));
        assert_eq!(mesh.vertex_normals().unwrap().len(), 4);
        assert!(matches!(read_obj("v 0 0\n", 1.0), Err(CloudError::Parse { line: 1, .. })));
        assert!(matches!(read_obj("v 0 0 0\nf 1 2\n", 1.0), Err(CloudError::Parse { line: 2, .. })));
    }

    fn binary_stl(tris: &[[[f32; 3]; 3]]) -> Vec<u8> {
        let mut data = vec![0u8; 80];
        data.extend_from_slice(&(tris.len() as u32).to_le_bytes());
        for tri in tris {
            // Deliberately wrong stored normal.
            for v in [9.0f32, 9.0, 9.0] {
                data.extend_from_slice(&v.to_le_bytes());
            }
            for corner in tri {
                for v in corner {
                    data.extend_from_slice(&v.to_le_bytes());
                }
            }
            data.extend_from_slice(&[0, 0]);
        }
        data
    }

    #[test]
    fn stl_binary_normals_come_from_winding() {
        let data = binary_stl(&[[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]]);
        let mesh = read_stl(&data, 1.0).unwrap();
        assert_eq!(mesh.triangles().len(), 1);
        assert_eq!(mesh.face_normal(0).into_inner(), Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn stl_ascii() {
        let text = "solid t\nfacet normal 0 0 0\nouter loop\nvertex 0 0 0\nvertex 1 0 0\n\
vertex 0 1 0\nendloop\nendfacet\nendsolid t\n";
        let mesh = read_stl(text.as_bytes(), 1.0).unwrap();
        assert_eq!(mesh.face_normal(0).into_inner(), Vec3::new(0.0, 0.0, 1.0));
        assert!((mesh.total_area() - 0.5).abs() < 1e-15);
        assert!(read_stl(b"garbage", 1.0).is_err());
    }
}
