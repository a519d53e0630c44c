//! Tetrahedral mesh container and validity/quality checks.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::geom::{self, Vec3};
use crate::label::LabelCode;
use crate::{Error, Result};

/// Local corner indices of the four faces, ABAQUS numbering S1..S4
/// (1-2-3, 1-4-2, 2-4-3, 3-4-1).
pub const FACES: [[usize; 3]; 4] = [[0, 1, 2], [0, 3, 1], [1, 3, 2], [2, 3, 0]];

/// Local corner pairs of the six edges, in C3D10 mid-side node order.
pub const EDGES: [[usize; 2]; 6] = [[0, 1], [1, 2], [2, 0], [0, 3], [1, 3], [2, 3]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshOrder {
    Linear,
    Quadratic,
}

/// Element face reference: element index and ABAQUS face number 1..=4.
pub type FaceRef = (usize, u8);

#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    /// Node coordinates in micrometres.
    pub nodes: Vec<Vec3>,
    /// Corner connectivity, positively oriented.
    pub tets: Vec<[usize; 4]>,
    /// Mid-side nodes per element in [`EDGES`] order; empty for linear meshes.
    pub mid_nodes: Vec<[usize; 6]>,
    pub labels: Vec<LabelCode>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    pub surfaces: BTreeMap<String, Vec<FaceRef>>,
}

impl TetMesh {
    pub fn new(nodes: Vec<Vec3>, tets: Vec<[usize; 4]>, labels: Vec<LabelCode>) -> Result<Self> {
        if tets.len() != labels.len() {
            return Err(Error::SizeMismatch {
                expected: tets.len(),
                actual: labels.len(),
            });
        }
        if let Some(bad) = tets.iter().flatten().find(|&&n| n >= nodes.len()) {
            return Err(Error::InvalidModel(alloc::format!(
                "element references node {bad}, mesh has {}",
                nodes.len()
            )));
        }
        Ok(Self {
            nodes,
            tets,
            mid_nodes: Vec::new(),
            labels,
            node_sets: BTreeMap::new(),
            surfaces: BTreeMap::new(),
        })
    }

    pub fn order(&self) -> MeshOrder {
        if self.mid_nodes.is_empty() || self.tets.is_empty() {
            MeshOrder::Linear
        } else {
            MeshOrder::Quadratic
        }
    }

    pub fn element_count(&self) -> usize {
        self.tets.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn points(&self, e: usize) -> [Vec3; 4] {
        let t = self.tets[e];
        [
            self.nodes[t[0]],
            self.nodes[t[1]],
            self.nodes[t[2]],
            self.nodes[t[3]],
        ]
    }

    pub fn volume(&self, e: usize) -> f64 {
        let p = self.points(e);
        geom::tet_volume(p[0], p[1], p[2], p[3])
    }

    pub fn centroid(&self, e: usize) -> Vec3 {
        geom::centroid4(self.points(e))
    }

    /// Corner nodes of face `face` (1..=4) of element `e`, ordered so the
    /// normal points out of the element.
    pub fn face_nodes(&self, e: usize, face: u8) -> [usize; 3] {
        let t = self.tets[e];
        let f = FACES[face as usize - 1];
        // FACES follow ABAQUS ordering, whose right-hand normal points into
        // the element; reverse for outward.
        [t[f[0]], t[f[2]], t[f[1]]]
    }

    /// Outward normal scaled to the face area.
    pub fn face_area_normal(&self, e: usize, face: u8) -> Vec3 {
        let [a, b, c] = self.face_nodes(e, face);
        geom::scale(
            geom::tri_normal(self.nodes[a], self.nodes[b], self.nodes[c]),
            0.5,
        )
    }

    /// Map from sorted face corner triple to the element faces using it.
    pub fn face_map(&self) -> BTreeMap<[usize; 3], Vec<FaceRef>> {
        let mut map: BTreeMap<[usize; 3], Vec<FaceRef>> = BTreeMap::new();
        for (e, t) in self.tets.iter().enumerate() {
            for (k, f) in FACES.iter().enumerate() {
                let mut key = [t[f[0]], t[f[1]], t[f[2]]];
                key.sort_unstable();
                map.entry(key).or_default().push((e, k as u8 + 1));
            }
        }
        map
    }

    /// Sorted unique corner edges.
    pub fn unique_edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .tets
            .iter()
            .flat_map(|t| {
                EDGES.iter().map(move |&[i, j]| {
                    let (a, b) = (t[i], t[j]);
                    if a < b {
                        [a, b]
                    } else {
                        [b, a]
                    }
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn labels_present(&self) -> Vec<LabelCode> {
        let mut seen = [false; 256];
        for l in &self.labels {
            seen[l.0 as usize] = true;
        }
        (0..256)
            .filter(|&i| seen[i])
            .map(|i| LabelCode(i as u8))
            .collect()
    }

    pub fn volume_by_label(&self) -> BTreeMap<LabelCode, f64> {
        let mut out = BTreeMap::new();
        for e in 0..self.tets.len() {
            *out.entry(self.labels[e]).or_insert(0.0) += self.volume(e);
        }
        out
    }

    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.nodes.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.nodes {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Some((lo, hi))
    }

    /// Keeps the elements for which `keep` is true, drops nodes no longer
    /// referenced, and re-indexes node sets and surfaces. Returns the old→new
    /// node map (`usize::MAX` for removed nodes).
    pub fn retain_elements(&mut self, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        let kept: Vec<usize> = (0..self.tets.len()).filter(|&e| keep(e)).collect();
        let mut elem_map = vec![usize::MAX; self.tets.len()];
        for (new, &old) in kept.iter().enumerate() {
            elem_map[old] = new;
        }
        let mut used = vec![false; self.nodes.len()];
        for &e in &kept {
            for &n in &self.tets[e] {
                used[n] = true;
            }
            if let Some(m) = self.mid_nodes.get(e) {
                for &n in m {
                    used[n] = true;
                }
            }
        }
        let mut node_map = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, &u) in used.iter().enumerate() {
            if u {
                node_map[i] = nodes.len();
                nodes.push(self.nodes[i]);
            }
        }
        let remap4 = |t: &[usize; 4]| t.map(|n| node_map[n]);
        self.tets = kept.iter().map(|&e| remap4(&self.tets[e])).collect();
        if !self.mid_nodes.is_empty() {
            self.mid_nodes = kept
                .iter()
                .map(|&e| self.mid_nodes[e].map(|n| node_map[n]))
                .collect();
        }
        self.labels = kept.iter().map(|&e| self.labels[e]).collect();
        self.nodes = nodes;
        for set in self.node_sets.values_mut() {
            *set = set
                .iter()
                .filter_map(|&n| Some(node_map[n]).filter(|&m| m != usize::MAX))
                .collect();
        }
        for surf in self.surfaces.values_mut() {
            *surf = surf
                .iter()
                .filter_map(|&(e, f)| Some((elem_map[e], f)).filter(|x| x.0 != usize::MAX))
                .collect();
        }
        node_map
    }
}

/// Mesh validity and quality summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QualityReport {
    pub element_count: usize,
    pub node_count: usize,
    /// Smallest dihedral angle over all elements, degrees.
    pub min_dihedral_deg: f64,
    /// Median over elements of each element's smallest dihedral angle.
    pub median_dihedral_deg: f64,
    pub inverted_elements: usize,
    /// Faces shared by more than two elements, plus boundary faces that have
    /// mesh material on their outer side (hanging nodes, overlaps).
    pub non_conformal_faces: usize,
    /// Boundary faces enclosing an interior void: faces that should have been
    /// shared by two elements but have only one.
    pub dangling_faces: usize,
    pub boundary_faces: usize,
    pub label_counts: BTreeMap<LabelCode, usize>,
    pub label_volumes: BTreeMap<LabelCode, f64>,
    /// Symmetric Hausdorff distance between label-boundary surfaces of the
    /// mesh and of the source labelmap, in voxels. Only known when the mesh
    /// is checked against its labelmap.
    pub hausdorff_voxels: Option<f64>,
}

impl QualityReport {
    pub fn is_valid(&self) -> bool {
        self.inverted_elements == 0 && self.non_conformal_faces == 0 && self.dangling_faces == 0
    }
}

/// Full validity and quality check of a mesh.
pub fn validate_mesh(mesh: &TetMesh) -> QualityReport {
    let n = mesh.tets.len();
    let mut report = QualityReport {
        element_count: n,
        node_count: mesh.nodes.len(),
        ..Default::default()
    };
    let mut per_elem_min = Vec::with_capacity(n);
    let mut global_min = f64::INFINITY;
    for e in 0..n {
        let p = mesh.points(e);
        let v = geom::tet_volume(p[0], p[1], p[2], p[3]);
        if !(v > 0.0) {
            report.inverted_elements += 1;
        }
        let m = if v > 0.0 { geom::min_dihedral(p) } else { 0.0 };
        global_min = global_min.min(m);
        per_elem_min.push(m);
        *report.label_counts.entry(mesh.labels[e]).or_insert(0) += 1;
        *report.label_volumes.entry(mesh.labels[e]).or_insert(0.0) += v;
    }
    report.min_dihedral_deg = if n == 0 { 0.0 } else { global_min };
    per_elem_min.sort_by(f64::total_cmp);
    report.median_dihedral_deg = per_elem_min.get(n / 2).copied().unwrap_or(0.0);

    let faces = mesh.face_map();
    let mut boundary: Vec<FaceRef> = Vec::new();
    for refs in faces.values() {
        match refs.len() {
            1 => boundary.push(refs[0]),
            2 => {}
            k => report.non_conformal_faces += k,
        }
    }
    report.boundary_faces = boundary.len();
    if report.inverted_elements == 0 && !boundary.is_empty() {
        report.non_conformal_faces += count_covered_faces(mesh, &boundary);
        report.dangling_faces = count_cavity_faces(mesh, &boundary);
    }
    report
}

/// Boundary faces whose outside is covered by another element.
fn count_covered_faces(mesh: &TetMesh, boundary: &[FaceRef]) -> usize {
    covered_faces(mesh, boundary).len()
}

/// Boundary faces whose outside is covered, with the covering element.
fn covered_faces(mesh: &TetMesh, boundary: &[FaceRef]) -> Vec<(FaceRef, usize)> {
    let locator = TetLocator::new(mesh);
    boundary
        .iter()
        .filter_map(|&(e, f)| {
            let [a, b, c] = mesh.face_nodes(e, f);
            let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
            let nrm = geom::normalize(geom::tri_normal(pa, pb, pc));
            let size = geom::dist(pa, pb)
                .max(geom::dist(pb, pc))
                .max(geom::dist(pc, pa));
            let centre = geom::scale(geom::add(geom::add(pa, pb), pc), 1.0 / 3.0);
            let probe = geom::add(centre, geom::scale(nrm, 1e-3 * size));
            locator
                .locate(mesh, probe, 1e-9)
                .filter(|&hit| hit != e)
                .map(|hit| ((e, f), hit))
        })
        .collect()
}

/// Elements that are inverted, share a face with two or more others, or
/// overlap across a boundary face: everything [`validate_mesh`] counts as
/// inverted or non-conformal.
pub fn defective_elements(mesh: &TetMesh) -> Vec<usize> {
    let mut out: Vec<usize> = (0..mesh.tets.len())
        .filter(|&e| {
            let p = mesh.points(e);
            !(geom::tet_volume(p[0], p[1], p[2], p[3]) > 0.0)
        })
        .collect();
    let mut boundary = Vec::new();
    for refs in mesh.face_map().values() {
        match refs.len() {
            1 => boundary.push(refs[0]),
            2 => {}
            _ => out.extend(refs.iter().map(|r| r.0)),
        }
    }
    if out.is_empty() {
        for ((e, _), hit) in covered_faces(mesh, &boundary) {
            out.push(e);
            out.push(hit);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Faces of closed boundary shells with negative enclosed volume (voids).
fn count_cavity_faces(mesh: &TetMesh, boundary: &[FaceRef]) -> usize {
    let m = boundary.len();
    let mut edge_faces: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
    let tri: Vec<[usize; 3]> = boundary
        .iter()
        .map(|&(e, f)| mesh.face_nodes(e, f))
        .collect();
    for (i, t) in tri.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edge_faces.entry([a.min(b), a.max(b)]).or_default().push(i);
        }
    }
    // union-find over faces
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for fs in edge_faces.values() {
        for w in fs.windows(2) {
            let (ra, rb) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut vol: BTreeMap<usize, (f64, usize, f64)> = BTreeMap::new();
    for (i, t) in tri.iter().enumerate() {
        let r = find(&mut parent, i);
        let (a, b, c) = (mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
        let entry = vol.entry(r).or_insert((0.0, 0, 0.0));
        entry.0 += geom::dot(a, geom::cross(b, c)) / 6.0;
        entry.1 += 1;
        entry.2 += geom::tri_area(a, b, c);
    }
    vol.values()
        .filter(|(v, _, area)| {
            // relative to the shell's own size to ignore round-off
            let scale = libm::pow(*area, 1.5);
            *v < -1e-9 * scale
        })
        .map(|&(_, k, _)| k)
        .sum()
}

/// Uniform-grid bucket index over element bounding boxes.
pub struct TetLocator {
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
}

impl TetLocator {
    pub fn new(mesh: &TetMesh) -> Self {
        let (lo, hi) = mesh.bounds().unwrap_or(([0.0; 3], [1.0; 3]));
        let mut mean_edge = 0.0;
        for e in 0..mesh.tets.len() {
            let p = mesh.points(e);
            mean_edge += geom::dist(p[0], p[1]);
        }
        let n = mesh.tets.len().max(1);
        let cell = (mean_edge / n as f64).max(1e-12) * 2.0;
        let dims = [0, 1, 2].map(|a| (((hi[a] - lo[a]) / cell) as usize + 1).min(1 << 10));
        let mut buckets = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let idx = |p: Vec3, a: usize| -> usize {
            (((p[a] - lo[a]) / cell).max(0.0) as usize).min(dims[a] - 1)
        };
        for e in 0..mesh.tets.len() {
            let p = mesh.points(e);
            let mut bl = [usize::MAX; 3];
            let mut bh = [0usize; 3];
            for q in &p {
                for a in 0..3 {
                    let i = idx(*q, a);
                    bl[a] = bl[a].min(i);
                    bh[a] = bh[a].max(i);
                }
            }
            for z in bl[2]..=bh[2] {
                for y in bl[1]..=bh[1] {
                    for x in bl[0]..=bh[0] {
                        buckets[x + dims[0] * (y + dims[1] * z)].push(e);
                    }
                }
            }
        }
        Self {
            origin: lo,
            cell,
            dims,
            buckets,
        }
    }

    /// An element containing `p` (barycentric coordinates >= -tol).
    pub fn locate(&self, mesh: &TetMesh, p: Vec3, tol: f64) -> Option<usize> {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let f = (p[a] - self.origin[a]) / self.cell;
            if f < -1.0 || f > self.dims[a] as f64 + 1.0 {
                return None;
            }
            c[a] = (f.max(0.0) as usize).min(self.dims[a] - 1);
        }
        let bucket = &self.buckets[c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])];
        bucket.iter().copied().find(|&e| {
            let b = geom::barycentric(p, mesh.points(e));
            b.iter().all(|&x| x >= -tol)
        })
    }
}
