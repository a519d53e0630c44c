//! Elevation of linear tetrahedra to ten-node elements.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::geom;
use crate::mesh::{MeshOrder, TetMesh, EDGES};
use crate::{Error, Result};

/// Adds one node at the midpoint of every unique edge. Corner numbering is
/// unchanged; new nodes follow in order of first appearance.
pub fn to_quadratic(mesh: &TetMesh) -> Result<TetMesh> {
    if mesh.order() == MeshOrder::Quadratic {
        return Err(Error::AlreadyQuadratic);
    }
    let mut out = mesh.clone();
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mids = Vec::with_capacity(mesh.tets.len());
    for t in &mesh.tets {
        let m = EDGES.map(|[a, b]| {
            let key = (t[a].min(t[b]), t[a].max(t[b]));
            *seen.entry(key).or_insert_with(|| {
                out.nodes
                    .push(geom::midpoint(mesh.nodes[key.0], mesh.nodes[key.1]));
                out.nodes.len() - 1
            })
        });
        mids.push(m);
    }
    out.mid_nodes = mids;
    Ok(out)
}
