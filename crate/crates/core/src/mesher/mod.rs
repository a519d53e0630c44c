//! Graded multi-material tetrahedral meshing of labelmaps.
//!
//! The volume is covered by a Kuhn cube lattice that is refined by
//! conforming bisection until every simplex meets the size limit of the
//! materials it touches. Lattice nodes close to a material interface are
//! then snapped onto it, elements take the material found at their centroid,
//! interface nodes are projected onto the implicit interface and background
//! elements are dropped.

mod bisect;
pub mod fidelity;
pub mod field;
pub mod optimize;
pub mod quadratic;
mod snap;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::geom::{self, Vec3};
use crate::label::LabelCode;
use crate::mesh::TetMesh;
use crate::volume::LabelVolume;
use crate::{Error, Result, Warnings};

pub use fidelity::{check_fidelity, FidelityReport};
pub use field::MaterialField;
pub use optimize::{optimize_mesh, optimize_mesh_with, OptimizeConfig};
pub use quadratic::to_quadratic;

/// Per-label upper bound on element volume, in cubic voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct SizingField {
    pub max_tet_volume_by_label: BTreeMap<LabelCode, f64>,
    /// Bound for labels without an entry.
    pub default_max_volume: f64,
    /// Bound for elements that straddle a material interface.
    pub interface_max_volume: f64,
}

impl SizingField {
    pub const DEFAULT_INNER: f64 = 2.83;

    /// Inner layer `inner`, outer layer 2×, everything else 8×; interface
    /// elements 2×.
    pub fn graded(inner: f64) -> Self {
        let mut map = BTreeMap::new();
        map.insert(LabelCode::INNER_REFINE, inner);
        map.insert(LabelCode::OUTER_REFINE, 2.0 * inner);
        Self {
            max_tet_volume_by_label: map,
            default_max_volume: 8.0 * inner,
            interface_max_volume: 2.0 * inner,
        }
    }

    /// Same bound everywhere.
    pub fn uniform(volume: f64) -> Self {
        Self {
            max_tet_volume_by_label: BTreeMap::new(),
            default_max_volume: volume,
            interface_max_volume: volume,
        }
    }

    pub fn max_volume(&self, label: LabelCode) -> f64 {
        self.max_tet_volume_by_label
            .get(&label)
            .copied()
            .unwrap_or(self.default_max_volume)
    }

    pub fn largest(&self) -> f64 {
        self.max_tet_volume_by_label.values().copied().fold(
            self.default_max_volume.max(self.interface_max_volume),
            f64::max,
        )
    }

    /// Every bound multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            max_tet_volume_by_label: self
                .max_tet_volume_by_label
                .iter()
                .map(|(&l, &v)| (l, v * factor))
                .collect(),
            default_max_volume: self.default_max_volume * factor,
            interface_max_volume: self.interface_max_volume * factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self
            .max_tet_volume_by_label
            .values()
            .chain([&self.default_max_volume, &self.interface_max_volume]);
        for &v in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "element volume bound {v} must be > 0"
                )));
            }
        }
        let inner = self.max_volume(LabelCode::INNER_REFINE);
        let outer = self.max_volume(LabelCode::OUTER_REFINE);
        let global = self.max_volume(LabelCode::WALL);
        if !(inner <= outer && outer <= global) {
            return Err(Error::InvalidConfig(format!(
                "sizing must satisfy inner ≤ outer ≤ global, got {inner}, {outer}, {global}"
            )));
        }
        Ok(())
    }
}

impl Default for SizingField {
    fn default() -> Self {
        Self::graded(Self::DEFAULT_INNER)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshConfig {
    pub sizing: SizingField,
    /// Lattice nodes closer than this fraction of an edge to an interface
    /// crossing snap onto it.
    pub warp_fraction: f64,
    /// Snapping and projection never create elements below this angle.
    pub min_dihedral_guard_deg: f64,
    pub projection_sweeps: usize,
    /// Rounds of relabelling elements around nodes stuck off the interface.
    pub relabel_rounds: usize,
    /// Gaussian smoothing of the distance fields, voxels; 0 disables.
    pub smoothing_voxels: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            sizing: SizingField::default(),
            warp_fraction: 0.3,
            min_dihedral_guard_deg: 10.0,
            projection_sweeps: 6,
            relabel_rounds: 0,
            smoothing_voxels: 0.0,
        }
    }
}

/// Meshes every non-background voxel with the default pipeline settings.
pub fn generate_tet_mesh(vol: &LabelVolume, sizing: &SizingField) -> Result<TetMesh> {
    let cfg = MeshConfig {
        sizing: sizing.clone(),
        ..MeshConfig::default()
    };
    generate_tet_mesh_with(vol, &cfg).map(|(m, _)| m)
}

/// Smallest element, relative to the interface bound, made by the local
/// refinement at junctions and thin layers.
const JUNCTION_FACTOR: f64 = 0.25;
/// Refine-and-refit rounds around boundary pieces the mesh misses.
const REPAIR_ROUNDS: usize = 6;
/// Boundary distance, in voxels, above which the mesh is refined locally.
const MISFIT_TOLERANCE: f64 = 1.0;
/// Smallest element volume, in voxels, made by that refinement.
const MISFIT_FLOOR: f64 = 0.5;

/// Points bucketed on a uniform grid for radius queries.
struct PointBuckets {
    cell: f64,
    buckets: BTreeMap<[i64; 3], Vec<Vec3>>,
}

impl PointBuckets {
    fn new(points: &[Vec3], cell: f64) -> Self {
        let mut buckets: BTreeMap<[i64; 3], Vec<Vec3>> = BTreeMap::new();
        for &p in points {
            buckets.entry(Self::key(p, cell)).or_default().push(p);
        }
        Self { cell, buckets }
    }

    fn key(p: Vec3, cell: f64) -> [i64; 3] {
        p.map(|c| libm::floor(c / cell) as i64)
    }

    /// True if a point lies within `r` of `c`; `r` must not exceed the cell.
    fn any_within(&self, c: Vec3, r: f64) -> bool {
        let k = Self::key(c, self.cell);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(list) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if list.iter().any(|&q| geom::dist(q, c) <= r) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

pub fn generate_tet_mesh_with(vol: &LabelVolume, cfg: &MeshConfig) -> Result<(TetMesh, Warnings)> {
    cfg.sizing.validate()?;
    let [nx, ny, nz] = vol.dims();
    if nz < 2 {
        return Err(Error::DegenerateVolume(format!(
            "need at least two slices to mesh, got {nz}"
        )));
    }
    let s = vol.spacing();
    let voxel = vol.voxel_volume();
    let (lo, hi) = tissue_bounds(vol)
        .ok_or_else(|| Error::DegenerateVolume(format!("no tissue in {nx}×{ny}×{nz} volume")))?;

    let field = MaterialField::new(vol, cfg.smoothing_voxels);

    // lattice box: two voxels of background around the tissue in x/y, the
    // end-slice centres in z
    let margin = 2.0;
    let origin = [
        (lo[0] as f64 - margin) * s[0],
        (lo[1] as f64 - margin) * s[1],
        0.0,
    ];
    let extent = [
        (hi[0] - lo[0]) as f64 * s[0] + 2.0 * margin * s[0],
        (hi[1] - lo[1]) as f64 * s[1] + 2.0 * margin * s[1],
        (nz - 1) as f64 * s[2],
    ];
    let base = libm::cbrt(6.0 * cfg.sizing.largest() * voxel);
    let mut cells = [0usize; 3];
    let mut step = [0.0; 3];
    for a in 0..3 {
        cells[a] = (libm::ceil(extent[a] / base - 1e-9) as usize).max(1);
        step[a] = extent[a] / cells[a] as f64;
    }
    let mut lattice = bisect::BisectionMesh::kuhn(origin, cells, step);

    let sizing = &cfg.sizing;
    lattice.refine_while(|p| {
        let v = geom::tet_volume(p[0], p[1], p[2], p[3]).abs();
        let c = geom::centroid4(*p);
        let mut samples = [c; 11];
        samples[1..5].copy_from_slice(p);
        for (k, [a, b]) in crate::mesh::EDGES.iter().enumerate() {
            samples[5 + k] = geom::midpoint(p[*a], p[*b]);
        }
        let mut seen = [LabelCode::BACKGROUND; 11];
        let mut distinct = 0;
        let mut limit = f64::INFINITY;
        for q in &samples {
            let l = field.label_at(*q);
            if !seen[..distinct].contains(&l) {
                seen[distinct] = l;
                distinct += 1;
            }
            limit = limit.min(sizing.max_volume(l));
        }
        if distinct > 1 {
            limit = limit.min(sizing.interface_max_volume);
        }
        if distinct > 2 {
            // junctions and layers thinner than an element
            limit = limit.min(sizing.interface_max_volume * JUNCTION_FACTOR);
        }
        v > limit * voxel * (1.0 + 1e-9)
    });

    let caps = [0.0, extent[2]];
    let floor = MISFIT_FLOOR * voxel;
    let widest = s[0].max(s[1]).max(s[2]);
    let reach = libm::sqrt(3.0) * base + widest;
    let mut round = 0;
    let (mesh, mut warnings) = loop {
        let (nodes, tets) = lattice.parts();
        let (mesh, mut warnings) = snap::conform(nodes, tets, &field, cfg, caps)?;
        let misfit = fidelity::misfit_points(&mesh, vol, MISFIT_TOLERANCE);
        if misfit.is_empty() {
            break (mesh, warnings);
        }
        if round == REPAIR_ROUNDS {
            warnings.push(format!(
                "{} boundary samples remain more than {MISFIT_TOLERANCE} voxels off",
                misfit.len()
            ));
            break (mesh, warnings);
        }
        round += 1;
        // refine around boundary pieces the mesh does not follow
        let near = PointBuckets::new(&misfit, reach);
        let before = lattice.live_count();
        lattice.refine_once_where(|p| {
            geom::tet_volume(p[0], p[1], p[2], p[3]).abs() > floor * (1.0 + 1e-9) && {
                let c = geom::centroid4(*p);
                let r = p.iter().map(|&q| geom::dist(q, c)).fold(0.0, f64::max);
                near.any_within(c, r + widest)
            }
        });
        if lattice.live_count() == before {
            break (mesh, warnings);
        }
    };

    let present = mesh.labels_present();
    for &l in field.labels() {
        if l != LabelCode::BACKGROUND && !present.contains(&l) {
            warnings.push(format!(
                "label {l} is smaller than the requested element size and was not meshed"
            ));
        }
    }
    Ok((mesh, warnings))
}

/// Inclusive voxel bounds of the non-background region.
fn tissue_bounds(vol: &LabelVolume) -> Option<([usize; 3], [usize; 3])> {
    let [nx, ny, nz] = vol.dims();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if vol.get(x, y, z) != LabelCode::BACKGROUND {
                    any = true;
                    for (a, c) in [x, y, z].into_iter().enumerate() {
                        lo[a] = lo[a].min(c);
                        hi[a] = hi[a].max(c);
                    }
                }
            }
        }
    }
    any.then_some((lo, hi))
}

/// Positions of a node's incident elements, used by the local passes.
pub fn node_elements(node_count: usize, tets: &[[usize; 4]]) -> Vec<Vec<usize>> {
    let mut adj = alloc::vec![Vec::new(); node_count];
    for (e, t) in tets.iter().enumerate() {
        for &n in t {
            adj[n].push(e);
        }
    }
    adj
}

/// Smallest dihedral angle over `elems` with node `n` placed at `p`;
/// negative if any element is inverted.
pub(crate) fn star_quality(
    nodes: &[Vec3],
    tets: &[[usize; 4]],
    elems: &[usize],
    n: usize,
    p: Vec3,
) -> f64 {
    let mut worst = 180.0f64;
    for &e in elems {
        let q = tets[e].map(|m| if m == n { p } else { nodes[m] });
        if geom::tet_volume(q[0], q[1], q[2], q[3]) <= 0.0 {
            return -1.0;
        }
        worst = worst.min(geom::min_dihedral(q));
    }
    worst
}
