//! PLY point clouds with normals (ASCII and binary little-endian).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::PointCloud;
use crate::error::CloudError;
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => b[0] as i8 as f64,
            ScalarType::U8 => b[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            ScalarType::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            ScalarType::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            ScalarType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    body_offset: usize,
    lines: usize,
}

fn parse_header(data: &[u8]) -> Result<Header, CloudError> {
    let mut offset = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let rest = &data[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| CloudError::parse(line_no + 1, "unterminated header"))?;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| CloudError::parse(line_no + 1, "header is not valid text"))?
            .trim_end_matches('\r');
        offset += end + 1;
        line_no += 1;
        let mut words = line.split_whitespace();
        let keyword = words.next().unwrap_or("");
        if line_no == 1 {
            if line.trim() != "ply" {
                return Err(CloudError::parse(1, "missing 'ply' magic"));
            }
            continue;
        }
        match keyword {
            "format" => {
                encoding = Some(match words.next() {
                    Some("ascii") => PlyEncoding::Ascii,
                    Some("binary_little_endian") => PlyEncoding::BinaryLittleEndian,
                    Some(other) => {
                        return Err(CloudError::UnsupportedFormat(format!("PLY format {other}")))
                    }
                    None => return Err(CloudError::parse(line_no, "format without value")),
                });
            }
            "comment" | "obj_info" | "" => {}
            "element" => {
                let name = words
                    .next()
                    .ok_or_else(|| CloudError::parse(line_no, "element without name"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| CloudError::parse(line_no, "element without valid count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| CloudError::parse(line_no, "property before any element"))?;
                let bad_type = || CloudError::parse(line_no, format!("bad property: {line}"));
                let first = words.next().ok_or_else(bad_type)?;
                if first == "list" {
                    let count = words.next().and_then(ScalarType::parse).ok_or_else(bad_type)?;
                    let item = words.next().and_then(ScalarType::parse).ok_or_else(bad_type)?;
                    words.next().ok_or_else(bad_type)?;
                    element.properties.push(Property::List { count, item });
                } else {
                    let ty = ScalarType::parse(first).ok_or_else(bad_type)?;
                    let name = words.next().ok_or_else(bad_type)?;
                    element.properties.push(Property::Scalar {
                        name: name.to_string(),
                        ty,
                    });
                }
            }
            "end_header" => break,
            other => {
                return Err(CloudError::parse(line_no, format!("unknown header keyword '{other}'")))
            }
        }
    }
    let encoding = encoding.ok_or_else(|| CloudError::parse(line_no, "missing format line"))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: offset,
        lines: line_no,
    })
}

/// Column positions of the six vertex properties we need.
struct VertexLayout {
    columns: [usize; 6],
}

impl VertexLayout {
    fn find(element: &Element) -> Result<Self, CloudError> {
        let position = |wanted: &str| {
            element.properties.iter().position(|p| {
                matches!(p, Property::Scalar { name, .. } if name == wanted)
            })
        };
        let mut columns = [0; 6];
        for (slot, name) in ["x", "y", "z"].iter().enumerate() {
            columns[slot] = position(name)
                .ok_or_else(|| CloudError::parse(0, format!("vertex has no '{name}' property")))?;
        }
        for (slot, name) in ["nx", "ny", "nz"].iter().enumerate() {
            columns[3 + slot] = position(name).ok_or(CloudError::MissingNormals)?;
        }
        Ok(Self { columns })
    }

    fn split(&self, row: &[f64]) -> (Vec3, Vec3) {
        let c = &self.columns;
        (
            Vec3::new(row[c[0]], row[c[1]], row[c[2]]),
            Vec3::new(row[c[3]], row[c[4]], row[c[5]]),
        )
    }
}

/// Parses PLY bytes, multiplying positions by `scale`.
pub fn read_ply(data: &[u8], scale: f64, source: &str) -> Result<PointCloud, CloudError> {
    let header = parse_header(data)?;
    let vertex_idx = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| CloudError::parse(header.lines, "no vertex element"))?;
    let vertex = &header.elements[vertex_idx];
    let layout = VertexLayout::find(vertex)?;
    if vertex.count == 0 {
        return Err(CloudError::EmptyCloud);
    }
    let body = &data[header.body_offset..];
    let raw = match header.encoding {
        PlyEncoding::Ascii => read_ascii_body(body, &header, vertex_idx, &layout)?,
        PlyEncoding::BinaryLittleEndian => read_binary_body(body, &header, vertex_idx, &layout)?,
    };
    let scaled = raw.into_iter().map(|(p, n)| (p * scale, n));
    let cloud = PointCloud::from_raw(scaled, source)?;
    if cloud.is_empty() {
        return Err(CloudError::EmptyCloud);
    }
    Ok(cloud)
}

fn read_ascii_body(
    body: &[u8],
    header: &Header,
    vertex_idx: usize,
    layout: &VertexLayout,
) -> Result<Vec<(Vec3, Vec3)>, CloudError> {
    let text = std::str::from_utf8(body)
        .map_err(|_| CloudError::parse(header.lines + 1, "ASCII body is not valid text"))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (header.lines + 1 + k, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let mut out = Vec::new();
    for (e_idx, element) in header.elements.iter().enumerate() {
        for _ in 0..element.count {
            let (line_no, line) = lines
                .next()
                .ok_or_else(|| CloudError::parse(header.lines, "body ends before all elements"))?;
            if e_idx != vertex_idx {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CloudError::parse(line_no, "non-numeric vertex value"))?;
            if row.len() < element.properties.len() {
                return Err(CloudError::parse(line_no, "too few values in vertex row"));
            }
            out.push(layout.split(&row));
        }
        if e_idx == vertex_idx {
            // Elements after the vertices carry nothing we need.
            break;
        }
    }
    Ok(out)
}

fn read_binary_body(
    body: &[u8],
    header: &Header,
    vertex_idx: usize,
    layout: &VertexLayout,
) -> Result<Vec<(Vec3, Vec3)>, CloudError> {
    let truncated = || CloudError::parse(header.lines + 1, "binary body is truncated");
    let mut pos = 0usize;
    let mut out = Vec::new();
    for (e_idx, element) in header.elements.iter().enumerate() {
        if e_idx == vertex_idx {
            out.reserve(element.count);
            let mut row = vec![0.0; element.properties.len()];
            for _ in 0..element.count {
                for (slot, prop) in element.properties.iter().enumerate() {
                    match prop {
                        Property::Scalar { ty, .. } => {
                            let bytes = body.get(pos..pos + ty.size()).ok_or_else(truncated)?;
                            row[slot] = ty.read_le(bytes);
                            pos += ty.size();
                        }
                        Property::List { count, item } => {
                            pos = skip_list(body, pos, *count, *item).ok_or_else(truncated)?;
                        }
                    }
                }
                out.push(layout.split(&row));
            }
            break;
        }
        for _ in 0..element.count {
            for prop in &element.properties {
                pos = match prop {
                    Property::Scalar { ty, .. } => pos + ty.size(),
                    Property::List { count, item } => {
                        skip_list(body, pos, *count, *item).ok_or_else(truncated)?
                    }
                };
            }
        }
    }
    Ok(out)
}

fn skip_list(body: &[u8], pos: usize, count: ScalarType, item: ScalarType) -> Option<usize> {
    let n = count.read_le(body.get(pos..pos + count.size())?);
    if !(n >= 0.0) {
        return None;
    }
    let end = pos + count.size() + n as usize * item.size();
    (end <= body.len()).then_some(end)
}

/// Loads a PLY cloud whose lengths are already meters.
pub fn load_ply(path: impl AsRef<Path>) -> Result<PointCloud, CloudError> {
    load_ply_scaled(path, 1.0)
}

/// Loads a PLY cloud, multiplying positions by `scale` (e.g. 0.001 for mm).
pub fn load_ply_scaled(path: impl AsRef<Path>, scale: f64) -> Result<PointCloud, CloudError> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| CloudError::io(path, e))?;
    read_ply(&data, scale, &path.display().to_string())
}

/// Writes positions and normals as double-precision vertex properties.
pub fn write_ply(
    cloud: &PointCloud,
    path: impl AsRef<Path>,
    encoding: PlyEncoding,
) -> Result<(), CloudError> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(64 + cloud.len() * 48);
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    let header = format!(
        "ply\nformat {format} 1.0\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\n\
         property double nx\nproperty double ny\nproperty double nz\nend_header\n",
        cloud.len()
    );
    buf.extend_from_slice(header.as_bytes());
    for p in cloud.points() {
        let values = [
            p.position.x,
            p.position.y,
            p.position.z,
            p.normal.x,
            p.normal.y,
            p.normal.z,
        ];
        match encoding {
            PlyEncoding::Ascii => {
                let row: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
                buf.extend_from_slice(row.join(" ").as_bytes());
                buf.push(b'\n');
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in values {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| CloudError::io(path, e))
}
