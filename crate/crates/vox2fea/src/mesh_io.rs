//! Mesh files: lossless JSON for caching and legacy ASCII VTK for viewing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vox2fea_core::mesh::FaceRef;
use vox2fea_core::{LabelCode, TetMesh};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MeshFile {
    nodes: Vec<[f64; 3]>,
    tets: Vec<[usize; 4]>,
    #[serde(default)]
    mid_nodes: Vec<[usize; 6]>,
    labels: Vec<u8>,
    #[serde(default)]
    node_sets: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    surfaces: BTreeMap<String, Vec<FaceRef>>,
}

pub fn mesh_to_json(mesh: &TetMesh) -> String {
    let file = MeshFile {
        nodes: mesh.nodes.clone(),
        tets: mesh.tets.clone(),
        mid_nodes: mesh.mid_nodes.clone(),
        labels: mesh.labels.iter().map(|l| l.0).collect(),
        node_sets: mesh.node_sets.clone(),
        surfaces: mesh.surfaces.clone(),
    };
    serde_json::to_string(&file).expect("mesh serializes") + "\n"
}

pub fn save_mesh(mesh: &TetMesh, path: &Path) -> Result<()> {
    fs::write(path, mesh_to_json(mesh)).map_err(Error::io(path))
}

pub fn load_mesh(path: &Path) -> Result<TetMesh> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let file: MeshFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let labels = file
        .labels
        .iter()
        .map(|&b| LabelCode::new(b))
        .collect::<vox2fea_core::Result<Vec<_>>>()?;
    let mut mesh = TetMesh::new(file.nodes, file.tets, labels)?;
    if !file.mid_nodes.is_empty() {
        if file.mid_nodes.len() != mesh.tets.len() {
            return Err(bad(format!(
                "{} mid-side rows for {} elements",
                file.mid_nodes.len(),
                mesh.tets.len()
            )));
        }
        if file
            .mid_nodes
            .iter()
            .flatten()
            .any(|&n| n >= mesh.nodes.len())
        {
            return Err(bad("mid-side node index out of range".into()));
        }
        mesh.mid_nodes = file.mid_nodes;
    }
    for (name, set) in &file.node_sets {
        if set.iter().any(|&n| n >= mesh.nodes.len()) {
            return Err(bad(format!("node set {name} references a missing node")));
        }
    }
    for (name, surf) in &file.surfaces {
        if surf
            .iter()
            .any(|&(e, f)| e >= mesh.tets.len() || !(1..=4).contains(&f))
        {
            return Err(bad(format!("surface {name} references a missing face")));
        }
    }
    mesh.node_sets = file.node_sets;
    mesh.surfaces = file.surfaces;
    Ok(mesh)
}

/// Legacy ASCII VTK unstructured grid with a per-cell label scalar.
pub fn mesh_to_vtk(mesh: &TetMesh) -> String {
    let quadratic = !mesh.mid_nodes.is_empty();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nvox2fea tetrahedral mesh (um)\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    let per = if quadratic { 10 } else { 4 };
    let _ = writeln!(
        s,
        "CELLS {} {}",
        mesh.tets.len(),
        mesh.tets.len() * (per + 1)
    );
    for (e, t) in mesh.tets.iter().enumerate() {
        let _ = write!(s, "{per} {} {} {} {}", t[0], t[1], t[2], t[3]);
        if quadratic {
            // VTK quadratic tet edge order: 01 12 20 03 13 23, same as ours
            for n in mesh.mid_nodes[e] {
                let _ = write!(s, " {n}");
            }
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.tets.len());
    let ty = if quadratic { 24 } else { 10 };
    for _ in &mesh.tets {
        let _ = writeln!(s, "{ty}");
    }
    let _ = writeln!(
        s,
        "CELL_DATA {}\nSCALARS label int 1\nLOOKUP_TABLE default",
        mesh.tets.len()
    );
    for l in &mesh.labels {
        let _ = writeln!(s, "{}", l.0);
    }
    s
}

pub fn save_vtk(mesh: &TetMesh, path: &Path) -> Result<()> {
    fs::write(path, mesh_to_vtk(mesh)).map_err(Error::io(path))
}
