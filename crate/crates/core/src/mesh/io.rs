//! OBJ (ASCII) and STL (binary or ASCII) readers, and an OBJ writer.
//!
//! Only positions and faces are read from OBJ; normals, texture coordinates
//! and grouping statements are ignored. Polygonal faces are fan-triangulated.
//! STL facets are welded by exact coordinate equality so that edge
//! connectivity survives the round trip.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Point3;

use super::{MeshError, Result, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Stl,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or_default()
            .to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Ok(Self::Obj),
            "stl" => Ok(Self::Stl),
            _ => Err(MeshError::UnsupportedFormat(path.display().to_string())),
        }
    }
}

/// Loads a mesh, choosing the format from the file extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)?;
    let file = fs::File::open(path)?;
    read_mesh(BufReader::new(file), format)
}

pub fn read_mesh<R: Read>(reader: R, format: MeshFormat) -> Result<TriangleMesh> {
    match format {
        MeshFormat::Obj => parse_obj(BufReader::new(reader)),
        MeshFormat::Stl => {
            let mut bytes = Vec::new();
            BufReader::new(reader).read_to_end(&mut bytes)?;
            parse_stl(&bytes)
        }
    }
}

/// Writes positions and faces as OBJ. Coordinates use the shortest
/// round-tripping decimal form, so reading the file back is exact.
pub fn write_obj<W: Write>(mesh: &TriangleMesh, writer: W) -> Result<()> {
    let mut out = BufWriter::new(writer);
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for [a, b, c] in mesh.triangles() {
        writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    write_obj(mesh, fs::File::create(path)?)
}

fn parse_obj<R: BufRead>(reader: R) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut face = Vec::with_capacity(4);

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0; 3];
                for c in &mut coords {
                    let token = tokens
                        .next()
                        .ok_or_else(|| parse_error(lineno, "vertex needs 3 coordinates"))?;
                    *c = token.parse().map_err(|_| {
                        parse_error(lineno, format!("invalid coordinate `{token}`"))
                    })?;
                }
                vertices.push(Point3::from(coords));
            }
            Some("f") => {
                face.clear();
                for token in tokens {
                    face.push(resolve_index(token, vertices.len(), lineno)?);
                }
                if face.len() < 3 {
                    return Err(parse_error(lineno, "face needs at least 3 vertices"));
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Resolves `i`, `i/t`, `i//n` or `i/t/n`; negative indices are relative.
fn resolve_index(token: &str, count: usize, line: usize) -> Result<usize> {
    let head = token.split('/').next().unwrap_or_default();
    let index: i64 = head
        .parse()
        .map_err(|_| parse_error(line, format!("invalid face index `{token}`")))?;
    let resolved = match index {
        0 => return Err(parse_error(line, "face index 0 is not valid in OBJ")),
        i if i > 0 => i - 1,
        i => count as i64 + i,
    };
    if resolved < 0 {
        return Err(parse_error(
            line,
            format!("relative face index `{token}` out of range"),
        ));
    }
    Ok(resolved as usize)
}

fn parse_error(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh> {
    if bytes.len() >= 84 {
        let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        if bytes.len() == 84 + 50 * count {
            return parse_binary_stl(&bytes[84..], count);
        }
    }
    if bytes.trim_ascii_start().starts_with(b"solid") {
        return parse_ascii_stl(bytes);
    }
    if bytes.is_empty() {
        return Err(MeshError::Empty);
    }
    Err(MeshError::Stl(format!(
        "{} bytes is neither a valid binary nor ASCII STL",
        bytes.len()
    )))
}

fn parse_binary_stl(payload: &[u8], count: usize) -> Result<TriangleMesh> {
    let mut welder = Welder::default();
    let mut triangles = Vec::with_capacity(count);
    for facet in payload.chunks_exact(50) {
        // 12 bytes of normal, then three vertices, then a 2-byte attribute.
        let mut tri = [0; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let off = 12 + 12 * k;
            let coord = |j: usize| {
                let b = &facet[off + 4 * j..off + 4 * j + 4];
                f32::from_le_bytes(b.try_into().unwrap()) as f64
            };
            *slot = welder.index(Point3::new(coord(0), coord(1), coord(2)));
        }
        triangles.push(tri);
    }
    TriangleMesh::new(welder.vertices, triangles)
}

fn parse_ascii_stl(bytes: &[u8]) -> Result<TriangleMesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::Stl(e.to_string()))?;
    let mut welder = Welder::default();
    let mut triangles = Vec::new();
    let mut pending = Vec::with_capacity(3);
    for (i, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("vertex") => {
                let mut coords = [0.0; 3];
                for c in &mut coords {
                    let token = tokens
                        .next()
                        .ok_or_else(|| parse_error(i + 1, "vertex needs 3 coordinates"))?;
                    *c = token
                        .parse()
                        .map_err(|_| parse_error(i + 1, format!("invalid coordinate `{token}`")))?;
                }
                pending.push(welder.index(Point3::from(coords)));
            }
            Some("endloop") => {
                if pending.len() != 3 {
                    return Err(parse_error(
                        i + 1,
                        "facet loop must have exactly 3 vertices",
                    ));
                }
                triangles.push([pending[0], pending[1], pending[2]]);
                pending.clear();
            }
            _ => {}
        }
    }
    TriangleMesh::new(welder.vertices, triangles)
}

#[derive(Default)]
struct Welder {
    vertices: Vec<Point3<f64>>,
    lookup: HashMap<[u64; 3], usize>,
}

impl Welder {
    fn index(&mut self, p: Point3<f64>) -> usize {
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        *self.lookup.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }
}
