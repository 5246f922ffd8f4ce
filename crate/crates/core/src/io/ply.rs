//! PLY reader/writer covering the three schemas the toolkit exchanges:
//! labelled point clouds (`vertex` with optional colour/label properties),
//! skeleton graphs (`vertex` + `edge`), and triangle meshes (`vertex` +
//! `face`). ASCII and binary little-endian, with unknown properties and
//! elements skipped.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::cloud::{LabeledPoint, LabeledPointCloud, SemanticClass};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriangleMesh;
use crate::skeleton::Skeleton;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
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
    fn parse(token: &str) -> Option<Self> {
        match token {
            "char" | "int8" => Some(Self::I8),
            "uchar" | "uint8" => Some(Self::U8),
            "short" | "int16" => Some(Self::I16),
            "ushort" | "uint16" => Some(Self::U16),
            "int" | "int32" => Some(Self::I32),
            "uint" | "uint32" => Some(Self::U32),
            "float" | "float32" => Some(Self::F32),
            "double" | "float64" => Some(Self::F64),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
enum PropKind {
    Scalar(ScalarType),
    List(ScalarType, ScalarType),
}

#[derive(Clone, Debug)]
struct Property {
    name: String,
    kind: PropKind,
}

#[derive(Clone, Debug)]
struct ElementSpec {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Clone, Debug)]
struct Header {
    encoding: PlyEncoding,
    elements: Vec<ElementSpec>,
}

/// Parsed contents of one element: scalar properties as `f64` columns
/// (lossless for every supported scalar type) and list properties row by
/// row.
#[derive(Default)]
struct ElementData {
    columns: HashMap<String, Vec<f64>>,
    lists: HashMap<String, Vec<Vec<f64>>>,
}

fn bad(path: &Path, message: impl Into<String>) -> Error {
    Error::MalformedPly { path: path.to_path_buf(), message: message.into() }
}

fn read_header<R: BufRead>(path: &Path, reader: &mut R) -> Result<Header> {
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim_end() != "ply" {
        return Err(bad(path, "missing 'ply' magic"));
    }

    let mut encoding = None;
    let mut elements: Vec<ElementSpec> = Vec::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(bad(path, "unterminated header"));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["end_header"] => break,
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    other => return Err(bad(path, format!("unsupported format {other:?}"))),
                });
            }
            ["element", name, count] => {
                let count: usize =
                    count.parse().map_err(|_| bad(path, format!("bad element count {count:?}")))?;
                elements.push(ElementSpec { name: (*name).to_string(), count, properties: Vec::new() });
            }
            ["property", "list", count_ty, elem_ty, name] => {
                let count_ty = ScalarType::parse(count_ty)
                    .ok_or_else(|| bad(path, format!("unknown type {count_ty:?}")))?;
                let elem_ty = ScalarType::parse(elem_ty)
                    .ok_or_else(|| bad(path, format!("unknown type {elem_ty:?}")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| bad(path, "property before element"))?
                    .properties
                    .push(Property { name: (*name).to_string(), kind: PropKind::List(count_ty, elem_ty) });
            }
            ["property", ty, name] => {
                let ty = ScalarType::parse(ty).ok_or_else(|| bad(path, format!("unknown type {ty:?}")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| bad(path, "property before element"))?
                    .properties
                    .push(Property { name: (*name).to_string(), kind: PropKind::Scalar(ty) });
            }
            _ => return Err(bad(path, format!("unrecognised header line {:?}", line.trim_end()))),
        }
    }
    let encoding = encoding.ok_or_else(|| bad(path, "missing format line"))?;
    Ok(Header { encoding, elements })
}

fn read_binary_scalar<R: Read>(reader: &mut R, ty: ScalarType) -> std::io::Result<f64> {
    Ok(match ty {
        ScalarType::I8 => reader.read_i8()? as f64,
        ScalarType::U8 => reader.read_u8()? as f64,
        ScalarType::I16 => reader.read_i16::<LittleEndian>()? as f64,
        ScalarType::U16 => reader.read_u16::<LittleEndian>()? as f64,
        ScalarType::I32 => reader.read_i32::<LittleEndian>()? as f64,
        ScalarType::U32 => reader.read_u32::<LittleEndian>()? as f64,
        ScalarType::F32 => reader.read_f32::<LittleEndian>()? as f64,
        ScalarType::F64 => reader.read_f64::<LittleEndian>()?,
    })
}

fn parse_ascii_scalar(path: &Path, token: &str) -> Result<f64> {
    token.parse().map_err(|_| bad(path, format!("invalid numeric token {token:?}")))
}

fn read_elements<R: BufRead>(path: &Path, reader: &mut R, header: &Header) -> Result<Vec<ElementData>> {
    let mut out = Vec::with_capacity(header.elements.len());
    match header.encoding {
        PlyEncoding::Ascii => {
            let mut lines = reader.lines();
            for spec in &header.elements {
                let mut data = ElementData::default();
                for p in &spec.properties {
                    match p.kind {
                        PropKind::Scalar(_) => {
                            data.columns.insert(p.name.clone(), Vec::with_capacity(spec.count));
                        }
                        PropKind::List(..) => {
                            data.lists.insert(p.name.clone(), Vec::with_capacity(spec.count));
                        }
                    }
                }
                for _ in 0..spec.count {
                    let line = loop {
                        match lines.next() {
                            Some(l) => {
                                let l = l?;
                                if !l.trim().is_empty() {
                                    break l;
                                }
                            }
                            None => return Err(bad(path, "unexpected end of ascii body")),
                        }
                    };
                    let mut tokens = line.split_whitespace();
                    for p in &spec.properties {
                        match p.kind {
                            PropKind::Scalar(_) => {
                                let tok = tokens.next().ok_or_else(|| bad(path, "row too short"))?;
                                data.columns.get_mut(&p.name).unwrap().push(parse_ascii_scalar(path, tok)?);
                            }
                            PropKind::List(..) => {
                                let tok = tokens.next().ok_or_else(|| bad(path, "row too short"))?;
                                let n = parse_ascii_scalar(path, tok)? as usize;
                                let mut values = Vec::with_capacity(n);
                                for _ in 0..n {
                                    let tok = tokens.next().ok_or_else(|| bad(path, "list row too short"))?;
                                    values.push(parse_ascii_scalar(path, tok)?);
                                }
                                data.lists.get_mut(&p.name).unwrap().push(values);
                            }
                        }
                    }
                }
                out.push(data);
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for spec in &header.elements {
                let mut data = ElementData::default();
                for p in &spec.properties {
                    match p.kind {
                        PropKind::Scalar(_) => {
                            data.columns.insert(p.name.clone(), Vec::with_capacity(spec.count));
                        }
                        PropKind::List(..) => {
                            data.lists.insert(p.name.clone(), Vec::with_capacity(spec.count));
                        }
                    }
                }
                for _ in 0..spec.count {
                    for p in &spec.properties {
                        match p.kind {
                            PropKind::Scalar(ty) => {
                                let v = read_binary_scalar(reader, ty)
                                    .map_err(|_| bad(path, "truncated binary body"))?;
                                data.columns.get_mut(&p.name).unwrap().push(v);
                            }
                            PropKind::List(count_ty, elem_ty) => {
                                let n = read_binary_scalar(reader, count_ty)
                                    .map_err(|_| bad(path, "truncated binary body"))?
                                    as usize;
                                let mut values = Vec::with_capacity(n);
                                for _ in 0..n {
                                    values.push(
                                        read_binary_scalar(reader, elem_ty)
                                            .map_err(|_| bad(path, "truncated binary body"))?,
                                    );
                                }
                                data.lists.get_mut(&p.name).unwrap().push(values);
                            }
                        }
                    }
                }
                out.push(data);
            }
        }
    }
    Ok(out)
}

struct Parsed {
    header: Header,
    elements: Vec<ElementData>,
}

fn parse_file(path: &Path) -> Result<Parsed> {
    let file = std::fs::File::open(path)?;
    let mut reader = BufReader::new(file);
    let header = read_header(path, &mut reader)?;
    let elements = read_elements(path, &mut reader, &header)?;
    Ok(Parsed { header, elements })
}

fn find_element<'a>(parsed: &'a Parsed, name: &str) -> Option<(&'a ElementSpec, &'a ElementData)> {
    parsed
        .header
        .elements
        .iter()
        .position(|e| e.name == name)
        .map(|i| (&parsed.header.elements[i], &parsed.elements[i]))
}

/// Which graph/mesh elements a PLY file carries, judged from the header.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PlyKind {
    PointCloud,
    Skeleton,
    Mesh,
}

/// Classifies a PLY by header only (edge element => skeleton, face element
/// with data => mesh, otherwise point cloud).
pub fn classify_ply(path: &Path) -> Result<PlyKind> {
    let file = std::fs::File::open(path)?;
    let mut reader = BufReader::new(file);
    let header = read_header(path, &mut reader)?;
    if header.elements.iter().any(|e| e.name == "edge" && e.count > 0) {
        Ok(PlyKind::Skeleton)
    } else if header.elements.iter().any(|e| e.name == "face" && e.count > 0) {
        Ok(PlyKind::Mesh)
    } else {
        Ok(PlyKind::PointCloud)
    }
}

pub fn read_cloud_ply(path: &Path) -> Result<LabeledPointCloud> {
    let parsed = parse_file(path)?;
    let (spec, data) =
        find_element(&parsed, "vertex").ok_or_else(|| bad(path, "no vertex element"))?;

    let col = |name: &str| data.columns.get(name);
    let (xs, ys, zs) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(bad(path, "vertex element lacks x/y/z")),
    };

    let reds = col("red");
    let greens = col("green");
    let blues = col("blue");
    let has_color = reds.is_some() && greens.is_some() && blues.is_some();
    let classes = col("class");
    let instances = col("instance");
    let temporals = col("temporal_id");
    if instances.is_some() && classes.is_none() {
        return Err(bad(path, "instance property without class property"));
    }

    let mut points = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let position = Vec3::new(xs[i], ys[i], zs[i]);
        if !position.is_finite() {
            return Err(bad(path, format!("non-finite coordinate at vertex {i}")));
        }
        let color = if has_color {
            [reds.unwrap()[i] as u8, greens.unwrap()[i] as u8, blues.unwrap()[i] as u8]
        } else {
            [0, 0, 0]
        };
        let class = match classes {
            Some(c) => {
                let code = c[i] as i64;
                Some(SemanticClass::from_code(code).ok_or(Error::UnknownClassCode {
                    path: path.to_path_buf(),
                    line: i + 1,
                    code,
                })?)
            }
            None => None,
        };
        let instance = instances.map(|v| v[i] as u32);
        let temporal_id = temporals.map(|v| v[i] as u32);
        points.push(LabeledPoint { position, color, class, instance, temporal_id });
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut cloud = LabeledPointCloud::new(points);
    cloud.has_color = has_color;
    Ok(cloud)
}

pub fn write_cloud_ply(path: &Path, cloud: &LabeledPointCloud, encoding: PlyEncoding) -> Result<()> {
    let with_class = cloud.has_classes();
    let with_instance = with_class && cloud.has_instances();
    let with_temporal = with_instance && cloud.has_temporal_ids();
    let with_color = cloud.has_color || with_class;

    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "ply")?;
    match encoding {
        PlyEncoding::Ascii => writeln!(out, "format ascii 1.0")?,
        PlyEncoding::BinaryLittleEndian => writeln!(out, "format binary_little_endian 1.0")?,
    }
    writeln!(out, "element vertex {}", cloud.len())?;
    writeln!(out, "property double x")?;
    writeln!(out, "property double y")?;
    writeln!(out, "property double z")?;
    if with_color {
        writeln!(out, "property uchar red")?;
        writeln!(out, "property uchar green")?;
        writeln!(out, "property uchar blue")?;
    }
    if with_class {
        writeln!(out, "property uchar class")?;
    }
    if with_instance {
        writeln!(out, "property uint instance")?;
    }
    if with_temporal {
        writeln!(out, "property uint temporal_id")?;
    }
    writeln!(out, "end_header")?;

    for p in &cloud.points {
        match encoding {
            PlyEncoding::Ascii => {
                write!(out, "{} {} {}", p.position.x, p.position.y, p.position.z)?;
                if with_color {
                    write!(out, " {} {} {}", p.color[0], p.color[1], p.color[2])?;
                }
                if with_class {
                    write!(out, " {}", p.class.map(|c| c.code()).unwrap_or(0))?;
                }
                if with_instance {
                    write!(out, " {}", p.instance.unwrap_or(0))?;
                }
                if with_temporal {
                    write!(out, " {}", p.temporal_id.unwrap_or(0))?;
                }
                writeln!(out)?;
            }
            PlyEncoding::BinaryLittleEndian => {
                out.write_f64::<LittleEndian>(p.position.x)?;
                out.write_f64::<LittleEndian>(p.position.y)?;
                out.write_f64::<LittleEndian>(p.position.z)?;
                if with_color {
                    out.write_all(&p.color)?;
                }
                if with_class {
                    out.write_u8(p.class.map(|c| c.code()).unwrap_or(0))?;
                }
                if with_instance {
                    out.write_u32::<LittleEndian>(p.instance.unwrap_or(0))?;
                }
                if with_temporal {
                    out.write_u32::<LittleEndian>(p.temporal_id.unwrap_or(0))?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a skeleton graph (`vertex` + `edge` elements). Duplicate edges are
/// deduplicated; the second value returned is how many were dropped.
pub fn read_skeleton_ply(path: &Path) -> Result<(Skeleton, usize)> {
    let parsed = parse_file(path)?;
    let (vspec, vdata) =
        find_element(&parsed, "vertex").ok_or_else(|| bad(path, "no vertex element"))?;
    let (xs, ys, zs) = match (vdata.columns.get("x"), vdata.columns.get("y"), vdata.columns.get("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(bad(path, "vertex element lacks x/y/z")),
    };
    let vertices: Vec<Vec3<f64>> =
        (0..vspec.count).map(|i| Vec3::new(xs[i], ys[i], zs[i])).collect();

    let (espec, edata) = find_element(&parsed, "edge").ok_or_else(|| bad(path, "no edge element"))?;
    let (v1, v2) = match (edata.columns.get("vertex1"), edata.columns.get("vertex2")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(bad(path, "edge element lacks vertex1/vertex2")),
    };
    let mut edges = Vec::with_capacity(espec.count);
    for i in 0..espec.count {
        let (a, b) = (v1[i], v2[i]);
        if a < 0.0 || b < 0.0 {
            return Err(bad(path, format!("negative vertex index in edge {i}")));
        }
        edges.push((a as u32, b as u32));
    }

    let (skeleton, duplicates) = Skeleton::new_counting(vertices, edges).map_err(|e| match e {
        Error::InvalidParams(msg) => bad(path, msg),
        other => other,
    })?;
    if skeleton.is_empty() {
        return Err(Error::EmptySkeleton);
    }
    Ok((skeleton, duplicates))
}

pub fn write_skeleton_ply(path: &Path, skeleton: &Skeleton, encoding: PlyEncoding) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "ply")?;
    match encoding {
        PlyEncoding::Ascii => writeln!(out, "format ascii 1.0")?,
        PlyEncoding::BinaryLittleEndian => writeln!(out, "format binary_little_endian 1.0")?,
    }
    writeln!(out, "element vertex {}", skeleton.vertex_count())?;
    writeln!(out, "property double x")?;
    writeln!(out, "property double y")?;
    writeln!(out, "property double z")?;
    writeln!(out, "element edge {}", skeleton.edge_count())?;
    writeln!(out, "property int vertex1")?;
    writeln!(out, "property int vertex2")?;
    writeln!(out, "end_header")?;
    match encoding {
        PlyEncoding::Ascii => {
            for v in skeleton.vertices() {
                writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
            }
            for &(a, b) in skeleton.edges() {
                writeln!(out, "{a} {b}")?;
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for v in skeleton.vertices() {
                out.write_f64::<LittleEndian>(v.x)?;
                out.write_f64::<LittleEndian>(v.y)?;
                out.write_f64::<LittleEndian>(v.z)?;
            }
            for &(a, b) in skeleton.edges() {
                out.write_i32::<LittleEndian>(a as i32)?;
                out.write_i32::<LittleEndian>(b as i32)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a triangle mesh (`vertex` + `face` elements); non-triangular faces
/// are fanned into triangles.
pub fn read_mesh_ply(path: &Path) -> Result<TriangleMesh> {
    let parsed = parse_file(path)?;
    let (vspec, vdata) =
        find_element(&parsed, "vertex").ok_or_else(|| bad(path, "no vertex element"))?;
    let (xs, ys, zs) = match (vdata.columns.get("x"), vdata.columns.get("y"), vdata.columns.get("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(bad(path, "vertex element lacks x/y/z")),
    };
    let vertices: Vec<Vec3<f64>> =
        (0..vspec.count).map(|i| Vec3::new(xs[i], ys[i], zs[i])).collect();

    let (_, fdata) = find_element(&parsed, "face").ok_or_else(|| bad(path, "no face element"))?;
    let lists = fdata
        .lists
        .get("vertex_indices")
        .or_else(|| fdata.lists.get("vertex_index"))
        .ok_or_else(|| bad(path, "face element lacks vertex_indices"))?;

    let mut triangles = Vec::new();
    for (i, face) in lists.iter().enumerate() {
        if face.len() < 3 {
            return Err(bad(path, format!("face {i} has fewer than 3 vertices")));
        }
        if face.iter().any(|&v| v < 0.0) {
            return Err(bad(path, format!("negative vertex index in face {i}")));
        }
        for k in 1..face.len() - 1 {
            triangles.push([face[0] as u32, face[k] as u32, face[k + 1] as u32]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn write_mesh_ply(path: &Path, mesh: &TriangleMesh, encoding: PlyEncoding) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "ply")?;
    match encoding {
        PlyEncoding::Ascii => writeln!(out, "format ascii 1.0")?,
        PlyEncoding::BinaryLittleEndian => writeln!(out, "format binary_little_endian 1.0")?,
    }
    writeln!(out, "element vertex {}", mesh.vertices().len())?;
    writeln!(out, "property double x")?;
    writeln!(out, "property double y")?;
    writeln!(out, "property double z")?;
    writeln!(out, "element face {}", mesh.triangle_count())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;
    match encoding {
        PlyEncoding::Ascii => {
            for v in mesh.vertices() {
                writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
            }
            for t in mesh.triangles() {
                writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for v in mesh.vertices() {
                out.write_f64::<LittleEndian>(v.x)?;
                out.write_f64::<LittleEndian>(v.y)?;
                out.write_f64::<LittleEndian>(v.z)?;
            }
            for t in mesh.triangles() {
                out.write_u8(3)?;
                for &i in t {
                    out.write_i32::<LittleEndian>(i as i32)?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skeleton_two_vertices_one_edge() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nelement edge 1\nproperty int vertex1\nproperty int vertex2\nend_header\n0 0 0\n3 4 0\n0 1\n",
        )
        .unwrap();
        let (skel, dups) = read_skeleton_ply(&path).unwrap();
        assert_eq!(dups, 0);
        assert_eq!(skel.vertex_count(), 2);
        assert!((skel.total_length() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn dangling_edge_index_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\nelement edge 1\nproperty int vertex1\nproperty int vertex2\nend_header\n0 0 0\n1 0 0\n2 0 0\n0 5\n",
        )
        .unwrap();
        assert!(matches!(
            read_skeleton_ply(&path).unwrap_err(),
            Error::DanglingEdgeIndex { index: 5, .. }
        ));
    }

    #[test]
    fn duplicate_edges_counted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nelement edge 3\nproperty int vertex1\nproperty int vertex2\nend_header\n0 0 0\n1 0 0\n0 1\n1 0\n0 1\n",
        )
        .unwrap();
        let (skel, dups) = read_skeleton_ply(&path).unwrap();
        assert_eq!(skel.edge_count(), 1);
        assert_eq!(dups, 2);
    }

    #[test]
    fn binary_cloud_round_trip_is_bitwise_exact() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let points: Vec<LabeledPoint> = (0..1000)
            .map(|_| LabeledPoint {
                position: Vec3::new(
                    rng.random_range(-500.0..500.0),
                    rng.random_range(-500.0..500.0),
                    rng.random_range(-500.0..500.0),
                ),
                color: [rng.random(), rng.random(), rng.random()],
                class: SemanticClass::from_code(rng.random_range(1..=9)),
                instance: Some(rng.random_range(0..40)),
                temporal_id: Some(rng.random_range(0..10)),
            })
            .collect();
        let mut cloud = LabeledPointCloud::new(points);
        cloud.has_color = true;

        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.ply");
        let b = dir.path().join("b.ply");
        write_cloud_ply(&a, &cloud, PlyEncoding::BinaryLittleEndian).unwrap();
        let loaded = read_cloud_ply(&a).unwrap();
        assert_eq!(loaded.points, cloud.points);
        write_cloud_ply(&b, &loaded, PlyEncoding::BinaryLittleEndian).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn ascii_cloud_round_trip_is_value_exact() {
        let points = vec![
            LabeledPoint::unlabeled(Vec3::new(0.1 + 0.2, -1.0 / 3.0, 1e-17)),
            LabeledPoint::unlabeled(Vec3::new(12345.6789, 2.0_f64.sqrt(), -0.0)),
        ];
        let cloud = LabeledPointCloud::new(points);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        write_cloud_ply(&path, &cloud, PlyEncoding::Ascii).unwrap();
        let loaded = read_cloud_ply(&path).unwrap();
        for (a, b) in loaded.points.iter().zip(&cloud.points) {
            assert_eq!(a.position.to_array(), b.position.to_array());
        }
    }

    #[test]
    fn mesh_round_trip_preserves_area() {
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.0, 2.0, 0.0),
                Vec3::new(2.0, 2.0, 1.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        for encoding in [PlyEncoding::Ascii, PlyEncoding::BinaryLittleEndian] {
            let path = dir.path().join("m.ply");
            write_mesh_ply(&path, &mesh, encoding).unwrap();
            let loaded = read_mesh_ply(&path).unwrap();
            assert_eq!(loaded.triangle_count(), 2);
            assert!((loaded.area() - mesh.area()).abs() < 1e-12);
        }
    }

    #[test]
    fn classify_distinguishes_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let skel_path = dir.path().join("s.ply");
        let skel = Skeleton::new(
            vec![Vec3::zero(), Vec3::new(1.0, 0.0, 0.0)],
            vec![(0, 1)],
        )
        .unwrap();
        write_skeleton_ply(&skel_path, &skel, PlyEncoding::Ascii).unwrap();
        assert_eq!(classify_ply(&skel_path).unwrap(), PlyKind::Skeleton);

        let cloud_path = dir.path().join("c.ply");
        let cloud = LabeledPointCloud::new(vec![LabeledPoint::unlabeled(Vec3::zero())]);
        write_cloud_ply(&cloud_path, &cloud, PlyEncoding::Ascii).unwrap();
        assert_eq!(classify_ply(&cloud_path).unwrap(), PlyKind::PointCloud);
    }

    #[test]
    fn unknown_properties_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("extra.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\ncomment made elsewhere\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty float confidence\nend_header\n1 2 3 0.5\n",
        )
        .unwrap();
        let cloud = read_cloud_ply(&path).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.points[0].position, Vec3::new(1.0, 2.0, 3.0));
    }
}
