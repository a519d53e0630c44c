//! Quality improvement of labelled tetrahedral meshes.
//!
//! Three local operations run in alternating sweeps: smart Laplacian
//! smoothing (a move is kept only if it improves the worst element around
//! the node), a compass search on nodes of poor or inverted elements, and
//! 2-3 / 3-2 flips inside single-material regions. Nodes on material
//! interfaces or on the mesh boundary never end up further than
//! `max_boundary_shift_um` from where they started, and nodes on the end-cap
//! planes stay in their plane.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use super::node_elements;
use crate::geom::{self, Vec3};
use crate::mesh::{
    defective_elements, validate_mesh, MeshOrder, QualityReport, TetMesh, EDGES, FACES,
};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub target_min_dihedral_deg: f64,
    /// Limit on the displacement of interface and boundary nodes.
    pub max_boundary_shift_um: f64,
    pub sweeps: usize,
    pub flips: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            target_min_dihedral_deg: 15.0,
            max_boundary_shift_um: 10.0,
            sweeps: 6,
            flips: true,
        }
    }
}

/// Optimizes with default settings (half of a 20 µm voxel as boundary
/// shift limit).
pub fn optimize_mesh(mesh: &TetMesh, target_min_dihedral: f64) -> (TetMesh, QualityReport) {
    optimize_mesh_with(
        mesh,
        &OptimizeConfig {
            target_min_dihedral_deg: target_min_dihedral,
            ..OptimizeConfig::default()
        },
    )
}

pub fn optimize_mesh_with(mesh: &TetMesh, cfg: &OptimizeConfig) -> (TetMesh, QualityReport) {
    let mut out = mesh.clone();
    if out.tets.is_empty() {
        let r = validate_mesh(&out);
        return (out, r);
    }
    let original = out.nodes.clone();
    let surface = BoundaryFans::new(&out);
    let flips = cfg.flips && out.order() == MeshOrder::Linear && out.surfaces.is_empty();
    for _ in 0..cfg.sweeps {
        let kind = classify(&out);
        let mut changed = smooth(&mut out, &original, &kind, &surface, cfg);
        changed += repair(&mut out, &original, &kind, &surface, cfg);
        if flips {
            changed += flip_pass(&mut out, cfg);
        }
        if changed == 0 {
            break;
        }
    }
    undo_defects(&mut out, &original);
    if out.order() == MeshOrder::Quadratic {
        for (t, m) in out.tets.clone().iter().zip(out.mid_nodes.clone()) {
            for (k, [a, b]) in EDGES.iter().enumerate() {
                out.nodes[m[k]] = geom::midpoint(out.nodes[t[*a]], out.nodes[t[*b]]);
            }
        }
    }
    let report = validate_mesh(&out);
    (out, report)
}

/// Returns nodes to their input positions around elements the optimization
/// left inverted or overlapping, widening the reverted patch until the
/// defects are gone or the whole mesh is back where it started.
fn undo_defects(mesh: &mut TetMesh, original: &[Vec3]) {
    let adj = node_elements(mesh.nodes.len(), &mesh.tets);
    let mut patch: BTreeSet<usize> = BTreeSet::new();
    loop {
        let bad = defective_elements(mesh);
        if bad.is_empty() {
            return;
        }
        let before = patch.len();
        let seeds: Vec<usize> = bad.iter().flat_map(|&e| mesh.tets[e]).collect();
        for n in seeds {
            for &e in &adj[n] {
                patch.extend(mesh.tets[e]);
            }
        }
        if patch.len() == before {
            return;
        }
        for &n in &patch {
            mesh.nodes[n] = original[n];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeKind {
    Free,
    /// On a material interface or the boundary.
    Constrained,
    /// On an end-cap plane: constrained and z fixed.
    Cap,
    /// Not a corner node.
    Unused,
}

fn classify(mesh: &TetMesh) -> Vec<NodeKind> {
    let mut kind = vec![NodeKind::Unused; mesh.nodes.len()];
    for t in &mesh.tets {
        for &n in t {
            kind[n] = NodeKind::Free;
        }
    }
    let (lo, hi) = mesh.bounds().unwrap_or(([0.0; 3], [0.0; 3]));
    let tol = 1e-9 * (hi[2] - lo[2]).abs().max(1.0);
    for refs in mesh.face_map().values() {
        let (e, f) = refs[0];
        let interface = refs.len() == 1 || refs.iter().any(|r| mesh.labels[r.0] != mesh.labels[e]);
        if !interface {
            continue;
        }
        let nodes = mesh.face_nodes(e, f);
        let cap = refs.len() == 1
            && (nodes
                .iter()
                .all(|&n| (mesh.nodes[n][2] - lo[2]).abs() <= tol)
                || nodes
                    .iter()
                    .all(|&n| (mesh.nodes[n][2] - hi[2]).abs() <= tol));
        for n in nodes {
            if cap {
                kind[n] = NodeKind::Cap;
            } else if kind[n] == NodeKind::Free {
                kind[n] = NodeKind::Constrained;
            }
        }
    }
    // cap nodes on the rim of the cap also lie on the side boundary; they keep
    // z fixed and the shift limit
    kind
}

/// Boundary faces around each node with their normals in the input mesh.
/// Moving a node must not turn any of them by more than `MAX_TURN_COS`,
/// which keeps the boundary from folding over itself.
struct BoundaryFans {
    fans: BTreeMap<usize, Vec<([usize; 3], Vec3)>>,
}

const MAX_TURN_COS: f64 = 0.5;

impl BoundaryFans {
    fn new(mesh: &TetMesh) -> Self {
        let mut fans: BTreeMap<usize, Vec<([usize; 3], Vec3)>> = BTreeMap::new();
        for refs in mesh.face_map().values() {
            if refs.len() != 1 {
                continue;
            }
            let f = mesh.face_nodes(refs[0].0, refs[0].1);
            let p = f.map(|n| mesh.nodes[n]);
            let nrm = geom::normalize(geom::tri_normal(p[0], p[1], p[2]));
            for n in f {
                fans.entry(n).or_default().push((f, nrm));
            }
        }
        Self { fans }
    }

    fn keeps(&self, mesh: &TetMesh, n: usize, at: Vec3) -> bool {
        let Some(fan) = self.fans.get(&n) else {
            return true;
        };
        fan.iter().all(|(f, nrm)| {
            let p = f.map(|m| if m == n { at } else { mesh.nodes[m] });
            let now = geom::normalize(geom::tri_normal(p[0], p[1], p[2]));
            geom::dot(now, *nrm) > MAX_TURN_COS
        })
    }
}

/// Quality of one element: smallest dihedral angle when positive, a negative
/// number that grows with the signed volume otherwise.
fn element_quality(p: [Vec3; 4]) -> f64 {
    let v = geom::tet_volume(p[0], p[1], p[2], p[3]);
    if v > 0.0 {
        geom::min_dihedral(p)
    } else {
        let l = EDGES
            .iter()
            .map(|[a, b]| geom::dist(p[*a], p[*b]))
            .sum::<f64>()
            / 6.0;
        -1.0 + v / (l * l * l).max(1e-300)
    }
}

fn star_worst(mesh: &TetMesh, elems: &[usize], n: usize, at: Vec3) -> f64 {
    elems
        .iter()
        .map(|&e| element_quality(mesh.tets[e].map(|m| if m == n { at } else { mesh.nodes[m] })))
        .fold(f64::INFINITY, f64::min)
}

/// Applies the per-kind movement constraints to a proposed position.
fn admissible(
    kind: NodeKind,
    origin: Vec3,
    current: Vec3,
    mut p: Vec3,
    limit: f64,
) -> Option<Vec3> {
    match kind {
        NodeKind::Free => Some(p),
        NodeKind::Unused => None,
        NodeKind::Constrained | NodeKind::Cap => {
            if kind == NodeKind::Cap {
                p[2] = current[2];
            }
            let d = geom::sub(p, origin);
            let len = geom::norm(d);
            if len > limit {
                p = geom::add(origin, geom::scale(d, limit / len));
                if kind == NodeKind::Cap {
                    p[2] = current[2];
                }
            }
            Some(p)
        }
    }
}

fn neighbours(mesh: &TetMesh, adj: &[Vec<usize>], n: usize, kind: &[NodeKind]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let own = kind[n];
    for &e in &adj[n] {
        for &m in &mesh.tets[e] {
            if m == n || out.contains(&m) {
                continue;
            }
            // boundary nodes average over boundary neighbours only
            if own != NodeKind::Free && kind[m] == NodeKind::Free {
                continue;
            }
            out.push(m);
        }
    }
    out
}

fn smooth(
    mesh: &mut TetMesh,
    original: &[Vec3],
    kind: &[NodeKind],
    surface: &BoundaryFans,
    cfg: &OptimizeConfig,
) -> usize {
    let adj = node_elements(mesh.nodes.len(), &mesh.tets);
    let mut moved = 0;
    for n in 0..mesh.nodes.len() {
        if kind[n] == NodeKind::Unused || adj[n].is_empty() {
            continue;
        }
        let nb = neighbours(mesh, &adj, n, kind);
        if nb.is_empty() {
            continue;
        }
        let mut c = [0.0; 3];
        for &m in &nb {
            c = geom::add(c, mesh.nodes[m]);
        }
        c = geom::scale(c, 1.0 / nb.len() as f64);
        let cur = mesh.nodes[n];
        let before = star_worst(mesh, &adj[n], n, cur);
        if before >= cfg.target_min_dihedral_deg {
            continue;
        }
        let Some(mut p) = admissible(kind[n], original[n], cur, c, cfg.max_boundary_shift_um)
        else {
            continue;
        };
        for _ in 0..3 {
            if star_worst(mesh, &adj[n], n, p) > before + 1e-9 && surface.keeps(mesh, n, p) {
                mesh.nodes[n] = p;
                moved += 1;
                break;
            }
            p = geom::midpoint(cur, p);
        }
    }
    moved
}

/// Compass search on the nodes of elements below the target angle.
fn repair(
    mesh: &mut TetMesh,
    original: &[Vec3],
    kind: &[NodeKind],
    surface: &BoundaryFans,
    cfg: &OptimizeConfig,
) -> usize {
    let adj = node_elements(mesh.nodes.len(), &mesh.tets);
    let mut bad: Vec<usize> = Vec::new();
    for e in 0..mesh.tets.len() {
        if element_quality(mesh.points(e)) < cfg.target_min_dihedral_deg {
            bad.extend_from_slice(&mesh.tets[e]);
        }
    }
    bad.sort_unstable();
    bad.dedup();
    let mut moved = 0;
    for n in bad {
        if kind[n] == NodeKind::Unused {
            continue;
        }
        let mut cur = mesh.nodes[n];
        let mut best = star_worst(mesh, &adj[n], n, cur);
        let mut h = adj[n]
            .iter()
            .flat_map(|&e| {
                EDGES.map(|[a, b]| {
                    geom::dist(mesh.nodes[mesh.tets[e][a]], mesh.nodes[mesh.tets[e][b]])
                })
            })
            .fold(f64::INFINITY, f64::min)
            * 0.25;
        let mut improved = false;
        for _ in 0..12 {
            let mut step_ok = false;
            for axis in 0..3 {
                for sign in [1.0, -1.0] {
                    let mut p = cur;
                    p[axis] += sign * h;
                    let Some(p) =
                        admissible(kind[n], original[n], cur, p, cfg.max_boundary_shift_um)
                    else {
                        continue;
                    };
                    let q = star_worst(mesh, &adj[n], n, p);
                    if q > best + 1e-9 && surface.keeps(mesh, n, p) {
                        best = q;
                        cur = p;
                        step_ok = true;
                    }
                }
            }
            if !step_ok {
                h *= 0.5;
            } else {
                improved = true;
            }
        }
        if improved {
            mesh.nodes[n] = cur;
            moved += 1;
        }
    }
    moved
}

fn oriented(mesh: &TetMesh, mut t: [usize; 4]) -> [usize; 4] {
    let p = t.map(|n| mesh.nodes[n]);
    if geom::tet_volume(p[0], p[1], p[2], p[3]) < 0.0 {
        t.swap(2, 3);
    }
    t
}

fn mesh_volume_of(mesh: &TetMesh, t: [usize; 4]) -> f64 {
    let p = t.map(|n| mesh.nodes[n]);
    geom::tet_volume(p[0], p[1], p[2], p[3])
}

fn quality_of(mesh: &TetMesh, t: [usize; 4]) -> f64 {
    element_quality(t.map(|n| mesh.nodes[n]))
}

/// One pass of 3-2 then 2-3 flips between elements of equal label, applied
/// when they raise the worst angle of the affected elements.
fn flip_pass(mesh: &mut TetMesh, cfg: &OptimizeConfig) -> usize {
    let mut flipped = 0;
    let mut dead = vec![false; mesh.tets.len()];
    let mut fresh: Vec<([usize; 4], crate::label::LabelCode)> = Vec::new();

    // 3-2: interior edges with exactly three elements around them
    let mut edge_elems: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (e, t) in mesh.tets.iter().enumerate() {
        for [a, b] in EDGES {
            edge_elems
                .entry((t[a].min(t[b]), t[a].max(t[b])))
                .or_default()
                .push(e);
        }
    }
    // a flip must not create an edge or face the mesh already has
    let mut edges: BTreeSet<(usize, usize)> = edge_elems.keys().copied().collect();
    let face_map = mesh.face_map();
    let mut faces: BTreeSet<[usize; 3]> = face_map.keys().copied().collect();
    for (&(a, b), elems) in &edge_elems {
        if elems.len() != 3 || elems.iter().any(|&e| dead[e]) {
            continue;
        }
        let label = mesh.labels[elems[0]];
        if elems.iter().any(|&e| mesh.labels[e] != label) {
            continue;
        }
        let worst = elems
            .iter()
            .map(|&e| quality_of(mesh, mesh.tets[e]))
            .fold(f64::INFINITY, f64::min);
        if worst >= cfg.target_min_dihedral_deg {
            continue;
        }
        // ring vertices; a closed ring has each appearing in exactly two
        let mut ring: Vec<usize> = Vec::new();
        let mut count: BTreeMap<usize, usize> = BTreeMap::new();
        for &e in elems {
            for &n in &mesh.tets[e] {
                if n != a && n != b {
                    *count.entry(n).or_insert(0) += 1;
                    if !ring.contains(&n) {
                        ring.push(n);
                    }
                }
            }
        }
        if ring.len() != 3 || count.values().any(|&c| c != 2) {
            continue;
        }
        let mut key = [ring[0], ring[1], ring[2]];
        key.sort_unstable();
        if faces.contains(&key) {
            continue;
        }
        let t1 = oriented(mesh, [ring[0], ring[1], ring[2], a]);
        let t2 = oriented(mesh, [ring[0], ring[1], ring[2], b]);
        // both must lie on opposite sides of the ring plane
        let pr = [ring[0], ring[1], ring[2]].map(|n| mesh.nodes[n]);
        let sa = geom::tet_volume(pr[0], pr[1], pr[2], mesh.nodes[a]);
        let sb = geom::tet_volume(pr[0], pr[1], pr[2], mesh.nodes[b]);
        if !(sa * sb < 0.0) {
            continue;
        }
        // the two new elements must tile the old three exactly
        let old_vol: f64 = elems.iter().map(|&e| mesh.volume(e)).sum();
        let new_vol = mesh_volume_of(mesh, t1) + mesh_volume_of(mesh, t2);
        if (new_vol - old_vol).abs() > 1e-9 * old_vol {
            continue;
        }
        let q = quality_of(mesh, t1).min(quality_of(mesh, t2));
        if q > worst + 1e-9 {
            for &e in elems {
                dead[e] = true;
            }
            fresh.push((t1, label));
            fresh.push((t2, label));
            faces.insert(key);
            flipped += 1;
        }
    }

    // 2-3: interior faces between two elements of equal label
    for refs in face_map.values() {
        if refs.len() != 2 {
            continue;
        }
        let (e1, f1) = refs[0];
        let (e2, _) = refs[1];
        if dead[e1] || dead[e2] || mesh.labels[e1] != mesh.labels[e2] {
            continue;
        }
        let worst = quality_of(mesh, mesh.tets[e1]).min(quality_of(mesh, mesh.tets[e2]));
        if worst >= cfg.target_min_dihedral_deg {
            continue;
        }
        let face = FACES[f1 as usize - 1].map(|k| mesh.tets[e1][k]);
        let apex = |e: usize| *mesh.tets[e].iter().find(|n| !face.contains(n)).unwrap();
        let (a, b) = (apex(e1), apex(e2));
        if edges.contains(&(a.min(b), a.max(b))) {
            continue;
        }
        let new = [
            [a, b, face[0], face[1]],
            [a, b, face[1], face[2]],
            [a, b, face[2], face[0]],
        ];
        let mut ok = true;
        let mut q = f64::INFINITY;
        let mut made = Vec::new();
        for t in new {
            let p = t.map(|n| mesh.nodes[n]);
            let v = geom::tet_volume(p[0], p[1], p[2], p[3]);
            if v == 0.0 {
                ok = false;
                break;
            }
            let t = oriented(mesh, t);
            q = q.min(quality_of(mesh, t));
            made.push(t);
        }
        // the three new elements must tile the old pair exactly
        let old_vol = mesh.volume(e1) + mesh.volume(e2);
        let new_vol: f64 = made.iter().map(|&t| mesh_volume_of(mesh, t)).sum();
        if !ok || (new_vol - old_vol).abs() > 1e-9 * old_vol || q <= worst + 1e-9 || q <= 0.0 {
            continue;
        }
        dead[e1] = true;
        dead[e2] = true;
        edges.insert((a.min(b), a.max(b)));
        for t in made {
            fresh.push((t, mesh.labels[e1]));
        }
        flipped += 1;
    }

    if flipped > 0 {
        let mut tets = Vec::with_capacity(mesh.tets.len() + fresh.len());
        let mut labels = Vec::with_capacity(tets.capacity());
        for (e, t) in mesh.tets.iter().enumerate() {
            if !dead[e] {
                tets.push(*t);
                labels.push(mesh.labels[e]);
            }
        }
        for (t, l) in fresh {
            tets.push(t);
            labels.push(l);
        }
        mesh.tets = tets;
        mesh.labels = labels;
    }
    flipped
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::kuhn_grid;

    #[test]
    fn optimal_mesh_is_left_alone() {
        let m = kuhn_grid(3, 10.0);
        let before = validate_mesh(&m);
        let (out, r) = optimize_mesh(&m, 15.0);
        assert!((r.min_dihedral_deg - before.min_dihedral_deg).abs() < 1e-9);
        for (a, b) in m.nodes.iter().zip(&out.nodes) {
            assert!(geom::dist(*a, *b) < 1e-9);
        }
        assert_eq!(out.element_count(), m.element_count());
    }

    #[test]
    fn inverted_sliver_is_repaired() {
        let mut m = kuhn_grid(4, 10.0);
        // push an interior node through the opposite face of its elements
        let n = m
            .nodes
            .iter()
            .position(|p| *p == [20.0, 20.0, 20.0])
            .unwrap();
        m.nodes[n] = [32.0, 20.0, 20.0];
        let broken = validate_mesh(&m);
        assert!(broken.inverted_elements > 0);
        let (out, r) = optimize_mesh(&m, 15.0);
        assert_eq!(r.inverted_elements, 0, "{r:?}");
        assert!(r.is_valid());
        assert!(r.min_dihedral_deg >= 5.0);
        let total: f64 = (0..out.element_count()).map(|e| out.volume(e)).sum();
        assert!((total - 40.0f64.powi(3)).abs() < 1e-6);
    }

    #[test]
    fn boundary_nodes_respect_shift_limit() {
        let mut m = kuhn_grid(4, 10.0);
        // perturb everything, then optimize
        for (i, p) in m.nodes.iter_mut().enumerate() {
            let w = (i as f64 * 0.618).fract() - 0.5;
            for c in p.iter_mut() {
                if *c > 0.0 && *c < 40.0 {
                    *c += 2.5 * w;
                }
            }
        }
        for e in 0..m.element_count() {
            if m.centroid(e)[0] > 20.0 {
                m.labels[e] = crate::label::LabelCode::CALCIUM;
            }
        }
        let kind = classify(&m);
        let cfg = OptimizeConfig {
            max_boundary_shift_um: 1.0,
            ..OptimizeConfig::default()
        };
        let (out, r) = optimize_mesh_with(&m, &cfg);
        assert!(r.is_valid());
        for n in 0..m.node_count() {
            if matches!(kind[n], NodeKind::Constrained | NodeKind::Cap) {
                assert!(geom::dist(m.nodes[n], out.nodes[n]) <= 1.0 + 1e-9);
            }
        }
    }
}
