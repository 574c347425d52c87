//! Wavefront OBJ parsing, wedge splitting, and canonical serialization.
//!
//! Only the records the metric needs are honored: `v`, `vt`, and `f`.
//! Normals are parsed and dropped (curvature recomputes its own), and
//! material statements are ignored because the texture image is supplied
//! explicitly by the caller.

use std::collections::HashMap;

use nalgebra::{Point3, Vector2};

use crate::error::{Error, Result};
use crate::mesh::{Corner, Mesh, RawMesh};

/// Parse OBJ text into a [`RawMesh`].
///
/// Face corners may use the `v`, `v/vt`, or `v/vt/vn` forms with 1-based
/// positive or negative (relative) indices. Every corner must carry a
/// texture coordinate: a textured-mesh metric cannot score faces without
/// UVs, so their absence is a parse error rather than a silent default.
pub fn parse_obj(text: &str) -> Result<RawMesh> {
    let mut mesh = RawMesh::default();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let mut fields = line.split_whitespace();
        let Some(keyword) = fields.next() else {
            continue;
        };
        match keyword {
            "v" => {
                let p = parse_floats::<3>(&mut fields, line_no, "v")?;
                mesh.positions.push(Point3::new(p[0], p[1], p[2]));
            }
            "vt" => {
                let p = parse_floats::<2>(&mut fields, line_no, "vt")?;
                mesh.uv_pool.push(Vector2::new(p[0], p[1]));
            }
            "f" => {
                let mut corners = Vec::new();
                for field in fields {
                    corners.push(parse_corner(
                        field,
                        mesh.positions.len(),
                        mesh.uv_pool.len(),
                        line_no,
                    )?);
                }
                if corners.len() < 3 {
                    return Err(Error::ObjParse {
                        line: line_no,
                        msg: format!("face has {} corners, need at least 3", corners.len()),
                    });
                }
                mesh.faces.push(corners);
            }
            // vn is parsed for validity but never stored; everything else
            // (mtllib, usemtl, o, g, s, ...) is skipped.
            _ => {}
        }
    }

    Ok(mesh)
}

fn parse_floats<const N: usize>(
    fields: &mut std::str::SplitWhitespace,
    line: usize,
    record: &str,
) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    for slot in out.iter_mut() {
        let field = fields.next().ok_or_else(|| Error::ObjParse {
            line,
            msg: format!("`{record}` record has too few fields"),
        })?;
        *slot = field.parse::<f64>().map_err(|_| Error::ObjParse {
            line,
            msg: format!("non-numeric field `{field}` in `{record}` record"),
        })?;
        if !slot.is_finite() {
            return Err(Error::ObjParse {
                line,
                msg: format!("non-finite value `{field}` in `{record}` record"),
            });
        }
    }
    Ok(out)
}

/// Resolve a 1-based (or negative relative) OBJ index against `count`
/// elements seen so far.
fn resolve_index(raw: i64, count: usize, line: usize, what: &str) -> Result<usize> {
    let resolved = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        return Err(Error::ObjParse {
            line,
            msg: format!("{what} index 0 is invalid (OBJ indices are 1-based)"),
        });
    };
    if resolved < 0 || resolved as usize >= count {
        return Err(Error::ObjParse {
            line,
            msg: format!("{what} index {raw} out of range (have {count})"),
        });
    }
    Ok(resolved as usize)
}

fn parse_corner(field: &str, n_pos: usize, n_uv: usize, line: usize) -> Result<Corner> {
    let mut parts = field.split('/');
    let pos_part = parts.next().unwrap_or("");
    let uv_part = parts.next();
    let normal_part = parts.next();
    if parts.next().is_some() {
        return Err(Error::ObjParse {
            line,
            msg: format!("malformed face corner `{field}`"),
        });
    }

    let pos_raw: i64 = pos_part.parse().map_err(|_| Error::ObjParse {
        line,
        msg: format!("non-numeric vertex index `{pos_part}`"),
    })?;
    let position = resolve_index(pos_raw, n_pos, line, "vertex")?;

    let uv = match uv_part {
        Some(part) if !part.is_empty() => {
            let uv_raw: i64 = part.parse().map_err(|_| Error::ObjParse {
                line,
                msg: format!("non-numeric texture index `{part}`"),
            })?;
            resolve_index(uv_raw, n_uv, line, "texture")?
        }
        _ => {
            return Err(Error::ObjParse {
                line,
                msg: format!("face corner `{field}` has no texture coordinate; the metric requires per-corner UVs"),
            });
        }
    };

    if let Some(part) = normal_part {
        if !part.is_empty() {
            part.parse::<i64>().map_err(|_| Error::ObjParse {
                line,
                msg: format!("non-numeric normal index `{part}`"),
            })?;
        }
    }

    Ok(Corner { position, uv })
}

/// Convert a [`RawMesh`] into the per-vertex-UV [`Mesh`] form.
///
/// Each unique `(position index, uv index)` pair becomes one output vertex,
/// so vertices on UV seams are duplicated per wedge. Polygons with more
/// than three corners are fan-triangulated from corner 0.
pub fn wedge_split(raw: &RawMesh) -> Mesh {
    let mut wedge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut uv = Vec::new();
    let mut faces = Vec::new();

    let mut wedge = |corner: &Corner| -> usize {
        *wedge_ids
            .entry((corner.position, corner.uv))
            .or_insert_with(|| {
                vertices.push(raw.positions[corner.position]);
                uv.push(raw.uv_pool[corner.uv]);
                vertices.len() - 1
            })
    };

    for poly in &raw.faces {
        let local: Vec<usize> = poly.iter().map(&mut wedge).collect();
        for i in 1..local.len() - 1 {
            faces.push([local[0], local[i], local[i + 1]]);
        }
    }

    Mesh {
        vertices,
        uv,
        faces,
    }
}

/// Serialize a cleaned mesh back to OBJ text.
///
/// Output is canonical: all `v` records, then all `vt` records, then `f`
/// records with matching `v/vt` indices. Coordinates use Rust's shortest
/// round-trip float formatting, so parse ∘ serialize is exact.
pub fn serialize_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for t in &mesh.uv {
        out.push_str(&format!("vt {} {}\n", t.x, t.y));
    }
    for f in &mesh.faces {
        out.push_str(&format!(
            "f {}/{} {}/{} {}/{}\n",
            f[0] + 1,
            f[0] + 1,
            f[1] + 1,
            f[1] + 1,
            f[2] + 1,
            f[2] + 1
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: &str = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\n";

    #[test]
    fn parses_minimal_obj() {
        let raw = parse_obj(&format!("{TRI}f 1/1 2/2 3/3\n")).unwrap();
        assert_eq!(raw.positions.len(), 3);
        assert_eq!(raw.uv_pool.len(), 3);
        assert_eq!(raw.faces.len(), 1);
        assert_eq!(raw.faces[0].len(), 3);
        assert_eq!(raw.faces[0][0], Corner { position: 0, uv: 0 });
    }

    #[test]
    fn relative_indices_resolve_to_same_triangle() {
        let abs = parse_obj(&format!("{TRI}f 1/1 2/2 3/3\n")).unwrap();
        let rel = parse_obj(&format!("{TRI}f -3/-3 -2/-2 -1/-1\n")).unwrap();
        assert_eq!(abs.faces, rel.faces);
    }

    #[test]
    fn out_of_range_index_reports_line() {
        let err = parse_obj(&format!("{TRI}f 1/1 2/2 5/3\n")).unwrap_err();
        match err {
            Error::ObjParse { line, .. } => assert_eq!(line, 7),
            other => panic!("expected ObjParse, got {other:?}"),
        }
    }

    #[test]
    fn missing_uv_is_an_error() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::ObjParse { line: 4, .. }));
    }

    #[test]
    fn comments_and_unknown_records_ignored() {
        let text = format!("# header\nmtllib foo.mtl\nusemtl bar\nvn 0 0 1\n{TRI}f 1/1/1 2/2/1 3/3/1 # trailing\n");
        let raw = parse_obj(&text).unwrap();
        assert_eq!(raw.faces.len(), 1);
    }

    #[test]
    fn face_with_two_corners_is_an_error() {
        let err = parse_obj(&format!("{TRI}f 1/1 2/2\n")).unwrap_err();
        assert!(matches!(err, Error::ObjParse { line: 7, .. }));
    }

    #[test]
    fn quad_fan_triangulates_on_0_2_diagonal() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nf 1/1 2/2 3/3 4/4\n";
        let mesh = wedge_split(&parse_obj(text).unwrap());
        assert_eq!(mesh.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn wedge_split_without_seams_keeps_vertex_count() {
        let raw = parse_obj(&format!("{TRI}f 1/1 2/2 3/3\n")).unwrap();
        let mesh = wedge_split(&raw);
        assert_eq!(mesh.vertex_count(), raw.positions.len());
        assert_eq!(mesh.uv.len(), mesh.vertices.len());
    }

    #[test]
    fn wedge_split_duplicates_seam_vertices() {
        // One position used with two different uvs across two faces.
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvt 0.5 0.5\n\
                    f 1/1 2/2 3/3\nf 1/4 2/2 3/3\n";
        let mesh = wedge_split(&parse_obj(text).unwrap());
        assert_eq!(mesh.vertex_count(), 4);
        assert_eq!(mesh.face_count(), 2);
    }

    #[test]
    fn serialize_parse_round_trips_exactly() {
        let text = "v 0.123456789012345 -7.5 1e-9\nv 1 0 0\nv 0 1 0\nvt 0.25 0.75\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n";
        let mesh = wedge_split(&parse_obj(text).unwrap());
        let round = wedge_split(&parse_obj(&serialize_obj(&mesh)).unwrap());
        assert_eq!(mesh, round);
    }
}
