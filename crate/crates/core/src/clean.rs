//! Mesh cleaning: iterative removal of duplicated/unreferenced vertices and
//! duplicated/null faces until a fixed point.
//!
//! Identity is bit-exact on `(position, uv)`: an epsilon weld would silently
//! merge UV seams and change rendered colors. Face removals can orphan
//! vertices, and vertex merges can degenerate faces, so the two passes
//! alternate until one full iteration detects nothing.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Totals of what [`clean`] removed, summed over all iterations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CleanReport {
    pub duplicated_vertices_removed: usize,
    pub unreferenced_vertices_removed: usize,
    pub duplicated_faces_removed: usize,
    pub null_faces_removed: usize,
    pub iterations: usize,
}

fn vertex_key(mesh: &Mesh, i: usize) -> [u64; 5] {
    let v = mesh.vertices[i];
    let t = mesh.uv[i];
    [
        v.x.to_bits(),
        v.y.to_bits(),
        v.z.to_bits(),
        t.x.to_bits(),
        t.y.to_bits(),
    ]
}

/// Run one vertex pass: merge bit-identical duplicates onto the lowest
/// index, drop unreferenced vertices, compact, and rewrite faces.
/// Returns (duplicates removed, unreferenced removed).
fn vertex_pass(mesh: &mut Mesh) -> (usize, usize) {
    let n = mesh.vertex_count();
    let mut canonical: Vec<usize> = (0..n).collect();
    let mut first_seen: HashMap<[u64; 5], usize> = HashMap::with_capacity(n);
    for (i, slot) in canonical.iter_mut().enumerate() {
        *slot = *first_seen.entry(vertex_key(mesh, i)).or_insert(i);
    }

    for face in &mut mesh.faces {
        for idx in face.iter_mut() {
            *idx = canonical[*idx];
        }
    }

    let mut referenced = vec![false; n];
    for face in &mesh.faces {
        for &idx in face {
            referenced[idx] = true;
        }
    }

    let mut duplicated = 0;
    let mut unreferenced = 0;
    let mut remap = vec![usize::MAX; n];
    let mut kept = 0;
    for i in 0..n {
        if canonical[i] != i {
            duplicated += 1;
        } else if !referenced[i] {
            unreferenced += 1;
        } else {
            remap[i] = kept;
            kept += 1;
        }
    }
    if duplicated == 0 && unreferenced == 0 {
        return (0, 0);
    }

    let mut vertices = Vec::with_capacity(kept);
    let mut uv = Vec::with_capacity(kept);
    for (i, &slot) in remap.iter().enumerate() {
        if slot != usize::MAX {
            vertices.push(mesh.vertices[i]);
            uv.push(mesh.uv[i]);
        }
    }
    for face in &mut mesh.faces {
        for idx in face.iter_mut() {
            *idx = remap[*idx];
        }
    }
    mesh.vertices = vertices;
    mesh.uv = uv;

    (duplicated, unreferenced)
}

/// Run one face pass: drop null faces (repeated vertex index) and
/// duplicated faces (same unordered index set, first occurrence kept).
/// Returns (duplicates removed, nulls removed).
fn face_pass(mesh: &mut Mesh) -> (usize, usize) {
    let mut seen: HashMap<[usize; 3], ()> = HashMap::with_capacity(mesh.face_count());
    let mut duplicated = 0;
    let mut null = 0;
    mesh.faces.retain(|&face| {
        let [a, b, c] = face;
        if a == b || b == c || a == c {
            null += 1;
            return false;
        }
        let mut key = face;
        key.sort_unstable();
        if seen.insert(key, ()).is_some() {
            duplicated += 1;
            return false;
        }
        true
    });
    (duplicated, null)
}

/// Clean a mesh per the fixed-point vertex/face removal loop.
///
/// Errors with [`Error::EmptyAfterClean`] if no faces survive.
pub fn clean(mesh: &Mesh) -> Result<(Mesh, CleanReport)> {
    let mut mesh = mesh.clone();
    let mut report = CleanReport::default();

    loop {
        report.iterations += 1;
        let (dup_v, unref_v) = vertex_pass(&mut mesh);
        let (dup_f, null_f) = face_pass(&mut mesh);
        report.duplicated_vertices_removed += dup_v;
        report.unreferenced_vertices_removed += unref_v;
        report.duplicated_faces_removed += dup_f;
        report.null_faces_removed += null_f;
        if dup_v + unref_v + dup_f + null_f == 0 {
            break;
        }
    }

    if mesh.faces.is_empty() {
        return Err(Error::EmptyAfterClean);
    }
    Ok((mesh, report))
}
