//! Fitting the refined lattice to the material interfaces.

use alloc::vec;
use alloc::vec::Vec;

use super::field::MaterialField;
use super::{node_elements, star_quality, MeshConfig};
use crate::geom::{self, Vec3};
use crate::label::LabelCode;
use crate::mesh::TetMesh;
use crate::{Result, Warnings};

/// Snaps, labels, projects and trims the lattice. `caps` are the z planes
/// that bound the stack; nodes on them stay on them.
pub(crate) fn conform(
    mut nodes: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    field: &MaterialField,
    cfg: &MeshConfig,
    caps: [f64; 2],
) -> Result<(TetMesh, Warnings)> {
    let warnings = Warnings::new();
    let scale = caps[1].abs().max(1.0);
    let on_cap: Vec<bool> = nodes
        .iter()
        .map(|p| caps.iter().any(|&c| (p[2] - c).abs() <= 1e-9 * scale))
        .collect();
    let adj = node_elements(nodes.len(), &tets);

    warp_to_crossings(&mut nodes, &tets, &adj, &on_cap, field, cfg);

    let mut labels: Vec<LabelCode> = tets
        .iter()
        .map(|t| field.label_at(geom::centroid4(t.map(|n| nodes[n]))))
        .collect();

    for round in 0..=cfg.relabel_rounds {
        project_interfaces(&mut nodes, &tets, &labels, &adj, &on_cap, field, cfg);
        if round == cfg.relabel_rounds || relabel_stuck_nodes(&nodes, &mut labels, &adj, field) == 0
        {
            break;
        }
    }

    let mut mesh = TetMesh::new(nodes, tets, labels)?;
    let labels = mesh.labels.clone();
    mesh.retain_elements(|e| labels[e] != LabelCode::BACKGROUND);
    Ok((mesh, warnings))
}

/// Moves every node that lies within `warp_fraction` of an edge crossing
/// onto the closest such crossing, unless that would degrade its elements
/// below the dihedral guard.
fn warp_to_crossings(
    nodes: &mut [Vec3],
    tets: &[[usize; 4]],
    adj: &[Vec<usize>],
    on_cap: &[bool],
    field: &MaterialField,
    cfg: &MeshConfig,
) {
    let node_label: Vec<LabelCode> = nodes.iter().map(|&p| field.label_at(p)).collect();
    let mut edges: Vec<(usize, usize)> = tets
        .iter()
        .flat_map(|t| crate::mesh::EDGES.map(|[a, b]| (t[a].min(t[b]), t[a].max(t[b]))))
        .filter(|&(a, b)| node_label[a] != node_label[b])
        .collect();
    edges.sort_unstable();
    edges.dedup();

    // (node, fraction from node, crossing point, other end)
    let mut cuts: Vec<(usize, f64, Vec3, usize)> = Vec::with_capacity(2 * edges.len());
    for &(a, b) in &edges {
        let (pa, pb) = (nodes[a], nodes[b]);
        let t = field.crossing(node_label[a], node_label[b], pa, pb);
        let c = geom::lerp(pa, pb, t);
        cuts.push((a, t, c, b));
        cuts.push((b, 1.0 - t, c, a));
    }
    cuts.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));

    let mut warped = vec![false; nodes.len()];
    let mut i = 0;
    while i < cuts.len() {
        let u = cuts[i].0;
        let mut j = i;
        while j < cuts.len() && cuts[j].0 == u {
            j += 1;
        }
        for &(_, t, c, other) in &cuts[i..j] {
            if t >= cfg.warp_fraction {
                break;
            }
            if warped[other] || (on_cap[u] && !on_cap[other]) {
                continue;
            }
            let q = star_quality(nodes, tets, &adj[u], u, c);
            if q >= cfg.min_dihedral_guard_deg {
                nodes[u] = c;
                warped[u] = true;
                break;
            }
        }
        i = j;
    }
}

/// Pulls nodes on label boundaries onto the implicit interface between the
/// two nearest materials around them.
fn project_interfaces(
    nodes: &mut [Vec3],
    tets: &[[usize; 4]],
    labels: &[LabelCode],
    adj: &[Vec<usize>],
    on_cap: &[bool],
    field: &MaterialField,
    cfg: &MeshConfig,
) {
    let s = field.spacing();
    let voxel = s[0].min(s[1]).min(s[2]);
    let h = 0.25 * voxel;
    let max_step = 0.5 * voxel;
    let mut around: Vec<LabelCode> = Vec::new();
    for _ in 0..cfg.projection_sweeps {
        let mut moved = 0usize;
        for u in 0..nodes.len() {
            around.clear();
            for &e in &adj[u] {
                if !around.contains(&labels[e]) {
                    around.push(labels[e]);
                }
            }
            if around.len() < 2 {
                continue;
            }
            let p = nodes[u];
            let (a, b) = nearest_pair(field, &around, p);
            let g = |q: Vec3| field.distance(a, q) - field.distance(b, q);
            let g0 = g(p);
            if g0.abs() < 1e-3 * voxel {
                continue;
            }
            let mut grad = [0.0; 3];
            for (k, gk) in grad.iter_mut().enumerate() {
                let mut qp = p;
                let mut qm = p;
                qp[k] += h;
                qm[k] -= h;
                *gk = (g(qp) - g(qm)) / (2.0 * h);
            }
            if on_cap[u] {
                grad[2] = 0.0;
            }
            let gg = geom::dot(grad, grad);
            if gg < 1e-12 {
                continue;
            }
            let mut step = geom::scale(grad, -g0 / gg);
            let len = geom::norm(step);
            if len > max_step {
                step = geom::scale(step, max_step / len);
            }
            let before = star_quality(nodes, tets, &adj[u], u, p);
            let floor = cfg.min_dihedral_guard_deg.min(before);
            for _ in 0..3 {
                let q = geom::add(p, step);
                if g(q).abs() < g0.abs() && star_quality(nodes, tets, &adj[u], u, q) >= floor {
                    nodes[u] = q;
                    moved += 1;
                    break;
                }
                step = geom::scale(step, 0.5);
            }
        }
        if moved == 0 {
            break;
        }
    }
}

/// Interface nodes that projection could not bring within half a voxel of
/// the interface sit on a label staircase. Their elements take the material
/// at the node, which moves the interface onto nodes that lie closer to it.
fn relabel_stuck_nodes(
    nodes: &[Vec3],
    labels: &mut [LabelCode],
    adj: &[Vec<usize>],
    field: &MaterialField,
) -> usize {
    let s = field.spacing();
    let half = 0.5 * s[0].min(s[1]).min(s[2]);
    let mut changes: Vec<(usize, LabelCode)> = Vec::new();
    for (u, elems) in adj.iter().enumerate() {
        let own = field.label_at(nodes[u]);
        if elems.iter().all(|&e| labels[e] == own) {
            continue;
        }
        // distance to the interface with the nearest foreign label
        let d_own = field.distance(own, nodes[u]);
        let d_other = elems
            .iter()
            .filter(|&&e| labels[e] != own)
            .map(|&e| field.distance(labels[e], nodes[u]))
            .fold(f64::INFINITY, f64::min);
        if 0.5 * (d_other - d_own) > half {
            for &e in elems {
                if labels[e] != own {
                    changes.push((e, own));
                }
            }
        }
    }
    changes.sort_unstable_by_key(|c| c.0);
    changes.dedup_by_key(|c| c.0);
    for &(e, l) in &changes {
        labels[e] = l;
    }
    changes.len()
}

fn nearest_pair(field: &MaterialField, around: &[LabelCode], p: Vec3) -> (LabelCode, LabelCode) {
    let mut d: Vec<(f64, LabelCode)> = around.iter().map(|&l| (field.distance(l, p), l)).collect();
    d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    (d[0].1, d[1].1)
}
