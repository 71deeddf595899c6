//! OBJ and ASCII PLY reading/writing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use super::Mesh;
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Loads an OBJ or ASCII PLY file, chosen by extension (falling back to content sniffing).
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_ply = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("ply") => true,
        Some(ext) if ext.eq_ignore_ascii_case("obj") => false,
        _ => text.trim_start().starts_with("ply"),
    };
    if is_ply {
        parse_ply(&text)
    } else {
        parse_obj(&text)
    }
}

/// Writes OBJ or ASCII PLY depending on the extension (OBJ by default).
///
/// Coordinates use Rust's shortest round-trip float formatting, so reloading
/// reproduces them bit for bit.
pub fn save_mesh(m: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if m.face_count() == 0 {
        return Err(Error::InvalidMesh("refusing to write a mesh without faces".into()));
    }
    let is_ply = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    let text = if is_ply { write_ply(m) } else { write_obj(m) };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_obj(m: &Mesh) -> String {
    let mut s = String::with_capacity(64 * (m.vertex_count() + m.face_count()));
    for p in m.vertices() {
        let _ = writeln!(s, "v {:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    for f in m.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

fn write_ply(m: &Mesh) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        m.vertex_count(),
        m.face_count()
    );
    for p in m.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    for f in m.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: "missing coordinate".into(),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad number {tok:?}"),
    })
}

/// Splits polygons into triangles; quads are fanned from their first corner.
fn push_polygon(faces: &mut Vec<[usize; 3]>, poly: &[usize], face: usize) -> Result<()> {
    match poly.len() {
        3 => faces.push([poly[0], poly[1], poly[2]]),
        4 => {
            warn!("face {face} is a quad; splitting along diagonal {}-{}", poly[0], poly[2]);
            faces.push([poly[0], poly[1], poly[2]]);
            faces.push([poly[0], poly[2], poly[3]]);
        }
        n => return Err(Error::FaceArity { face, count: n }),
    }
    Ok(())
}

pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut polys: Vec<(usize, Vec<i64>)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                vertices.push([x, y, z]);
            }
            Some("f") => {
                let idx = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        head.parse::<i64>().map_err(|_| Error::Parse {
                            line,
                            message: format!("bad face index {t:?}"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                polys.push((line, idx));
            }
            _ => {}
        }
    }

    let n = vertices.len();
    let mut faces = Vec::with_capacity(polys.len());
    for (fi, (_, poly)) in polys.iter().enumerate() {
        let resolved = poly
            .iter()
            .map(|&i| {
                // 1-based; negative values count back from the end
                let r = if i > 0 { i - 1 } else { n as i64 + i };
                if i == 0 || r < 0 || r >= n as i64 {
                    Err(Error::IndexOutOfRange {
                        face: fi,
                        index: i,
                        vertex_count: n,
                    })
                } else {
                    Ok(r as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        push_polygon(&mut faces, &resolved, fi)?;
    }
    Mesh::new(vertices, faces)
}

struct PlyElement {
    name: String,
    count: usize,
    props: Vec<PlyProp>,
}

enum PlyProp {
    Scalar(String),
    List(String),
}

pub fn parse_ply(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let perr = |line: usize, message: &str| Error::Parse {
        line,
        message: message.to_string(),
    };

    if !matches!(lines.next(), Some((_, "ply"))) {
        return Err(perr(1, "missing 'ply' magic"));
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    loop {
        let (line, l) = lines.next().ok_or_else(|| perr(0, "unterminated header"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", fmt, ..] => {
                if *fmt != "ascii" {
                    return Err(perr(line, "only ASCII PLY is supported"));
                }
            }
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count.parse().map_err(|_| perr(line, "bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", _, _, name] => elements
                .last_mut()
                .ok_or_else(|| perr(line, "property before element"))?
                .props
                .push(PlyProp::List(name.to_string())),
            ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| perr(line, "property before element"))?
                .props
                .push(PlyProp::Scalar(name.to_string())),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            _ => return Err(perr(line, "unrecognized header line")),
        }
    }

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut face_no = 0usize;
    for el in &elements {
        for _ in 0..el.count {
            let (line, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of data"))?;
            let mut toks = l.split_whitespace();
            let mut xyz = [None; 3];
            let mut list: Option<Vec<i64>> = None;
            for prop in &el.props {
                match prop {
                    PlyProp::Scalar(name) => {
                        let v = parse_f64(toks.next(), line)?;
                        match name.as_str() {
                            "x" => xyz[0] = Some(v),
                            "y" => xyz[1] = Some(v),
                            "z" => xyz[2] = Some(v),
                            _ => {}
                        }
                    }
                    PlyProp::List(name) => {
                        let n: usize = toks
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| perr(line, "bad list length"))?;
                        let items = (0..n)
                            .map(|_| {
                                toks.next()
                                    .and_then(|t| t.parse::<i64>().ok())
                                    .ok_or_else(|| perr(line, "bad list entry"))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        if name == "vertex_indices" || name == "vertex_index" {
                            list = Some(items);
                        }
                    }
                }
            }
            match el.name.as_str() {
                "vertex" => {
                    let p = [xyz[0], xyz[1], xyz[2]];
                    if p.iter().any(Option::is_none) {
                        return Err(perr(line, "vertex without x/y/z"));
                    }
                    vertices.push([p[0].unwrap(), p[1].unwrap(), p[2].unwrap()]);
                }
                "face" => {
                    let idx = list.ok_or_else(|| perr(line, "face without vertex_indices"))?;
                    let n = vertices.len();
                    let resolved = idx
                        .iter()
                        .map(|&i| {
                            if i < 0 || i as usize >= n {
                                Err(Error::IndexOutOfRange {
                                    face: face_no,
                                    index: i,
                                    vertex_count: n,
                                })
                            } else {
                                Ok(i as usize)
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    push_polygon(&mut faces, &resolved, face_no)?;
                    face_no += 1;
                }
                _ => {}
            }
        }
    }
    Mesh::new(vertices, faces)
}
