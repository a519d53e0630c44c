//! Geometric agreement between a mesh and the labelmap it came from.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::geom::{self, Vec3};
use crate::label::LabelCode;
use crate::mesh::{TetMesh, FACES};
use crate::volume::LabelVolume;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FidelityReport {
    /// Symmetric Hausdorff distance between label-boundary surfaces, voxels.
    pub hausdorff_voxels: f64,
    pub mesh_to_voxels: f64,
    pub voxels_to_mesh: f64,
    /// Relative volume error per label, mesh against voxels.
    pub volume_error: BTreeMap<LabelCode, f64>,
}

impl FidelityReport {
    pub fn worst_volume_error(&self) -> f64 {
        self.volume_error.values().fold(0.0, |a, &b| a.max(b.abs()))
    }
}

type Tri = [Vec3; 3];

/// Compares label-boundary surfaces and per-label volumes. The mesh is
/// expected to span the stack from the first to the last slice centre, so the
/// end slices count half towards the voxel volume and the z ends are not
/// boundaries on either side.
pub fn check_fidelity(mesh: &TetMesh, vol: &LabelVolume) -> FidelityReport {
    let s = vol.spacing();
    let voxel = s[0].min(s[1]).min(s[2]);
    let mesh_tris = mesh_interface(mesh, vol);
    let vox_tris = voxel_interface(vol);

    let mesh_grid = TriGrid::new(&mesh_tris, 2.0 * voxel);
    let vox_grid = TriGrid::new(&vox_tris, 2.0 * voxel);
    let limit = 50.0 * voxel;
    let m2v = surface_samples(&mesh_tris)
        .map(|p| vox_grid.distance(p, limit))
        .fold(0.0, f64::max);
    let v2m = surface_samples(&vox_tris)
        .map(|p| mesh_grid.distance(p, limit))
        .fold(0.0, f64::max);

    let mut volume_error = BTreeMap::new();
    let reference = weighted_voxel_volumes(vol);
    let meshed = mesh.volume_by_label();
    for (&l, &v) in &reference {
        if l == LabelCode::BACKGROUND {
            continue;
        }
        let m = meshed.get(&l).copied().unwrap_or(0.0);
        volume_error.insert(l, (m - v) / v);
    }
    FidelityReport {
        hausdorff_voxels: m2v.max(v2m) / voxel,
        mesh_to_voxels: m2v / voxel,
        voxels_to_mesh: v2m / voxel,
        volume_error,
    }
}

/// Surface samples of either boundary lying more than `tol` voxels from the
/// other boundary.
pub(crate) fn misfit_points(mesh: &TetMesh, vol: &LabelVolume, tol: f64) -> Vec<Vec3> {
    let s = vol.spacing();
    let voxel = s[0].min(s[1]).min(s[2]);
    let mesh_tris = mesh_interface(mesh, vol);
    let vox_tris = voxel_interface(vol);
    let mesh_grid = TriGrid::new(&mesh_tris, 2.0 * voxel);
    let vox_grid = TriGrid::new(&vox_tris, 2.0 * voxel);
    let limit = tol * voxel;
    let mut out: Vec<Vec3> = surface_samples(&mesh_tris)
        .filter(|&p| vox_grid.distance(p, limit) >= limit)
        .collect();
    out.extend(surface_samples(&vox_tris).filter(|&p| mesh_grid.distance(p, limit) >= limit));
    out
}

/// Corners, centroid and one edge midpoint of every triangle.
fn surface_samples(tris: &[Tri]) -> impl Iterator<Item = Vec3> + '_ {
    tris.iter().flat_map(|t| {
        [
            t[0],
            t[1],
            t[2],
            geom::scale(geom::add(geom::add(t[0], t[1]), t[2]), 1.0 / 3.0),
            geom::midpoint(t[0], t[1]),
        ]
    })
}

/// Per-label voxel volume with the end slices weighted one half.
pub fn weighted_voxel_volumes(vol: &LabelVolume) -> BTreeMap<LabelCode, f64> {
    let [nx, ny, nz] = vol.dims();
    let vv = vol.voxel_volume();
    let mut out = BTreeMap::new();
    for z in 0..nz {
        let w = if nz > 1 && (z == 0 || z == nz - 1) {
            0.5
        } else {
            1.0
        };
        for y in 0..ny {
            for x in 0..nx {
                *out.entry(vol.get(x, y, z)).or_insert(0.0) += w * vv;
            }
        }
    }
    out
}

/// Faces between elements of different labels and boundary faces off the
/// end-cap planes.
fn mesh_interface(mesh: &TetMesh, vol: &LabelVolume) -> Vec<Tri> {
    let zmax = (vol.dims()[2] - 1) as f64 * vol.spacing()[2];
    let tol = 1e-6 * vol.spacing()[2];
    let on_cap = |p: Vec3| p[2].abs() <= tol || (p[2] - zmax).abs() <= tol;
    let mut out = Vec::new();
    for refs in mesh.face_map().values() {
        let (e, f) = refs[0];
        let keep = match refs.len() {
            1 => {
                let [a, b, c] = mesh.face_nodes(e, f);
                !(on_cap(mesh.nodes[a]) && on_cap(mesh.nodes[b]) && on_cap(mesh.nodes[c]))
            }
            _ => refs.iter().any(|r| mesh.labels[r.0] != mesh.labels[e]),
        };
        if keep {
            let t = mesh.tets[e];
            let ff = FACES[f as usize - 1];
            out.push([
                mesh.nodes[t[ff[0]]],
                mesh.nodes[t[ff[1]]],
                mesh.nodes[t[ff[2]]],
            ]);
        }
    }
    out
}

/// Voxel faces separating different labels; outside the grid in x and y is
/// background, the z ends are open and clipped to the end-slice centres.
fn voxel_interface(vol: &LabelVolume) -> Vec<Tri> {
    let [nx, ny, nz] = vol.dims();
    let s = vol.spacing();
    let zmax = (nz - 1) as f64 * s[2];
    let mut out = Vec::new();
    let mut square = |c: Vec3, axis: usize| {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let corner = |du: f64, dv: f64| {
            let mut p = c;
            p[u] += du * 0.5 * s[u];
            p[v] += dv * 0.5 * s[v];
            p[2] = p[2].clamp(0.0, zmax);
            p
        };
        let q = [
            corner(-1.0, -1.0),
            corner(1.0, -1.0),
            corner(1.0, 1.0),
            corner(-1.0, 1.0),
        ];
        out.push([q[0], q[1], q[2]]);
        out.push([q[0], q[2], q[3]]);
    };
    let get = |x: isize, y: isize, z: usize| {
        if x < 0 || y < 0 || x >= nx as isize || y >= ny as isize {
            LabelCode::BACKGROUND
        } else {
            vol.get(x as usize, y as usize, z)
        }
    };
    for z in 0..nz {
        for y in -1..ny as isize {
            for x in -1..nx as isize {
                let here = get(x, y, z);
                let centre = [x as f64 * s[0], y as f64 * s[1], z as f64 * s[2]];
                if here != get(x + 1, y, z) {
                    let mut c = centre;
                    c[0] += 0.5 * s[0];
                    square(c, 0);
                }
                if here != get(x, y + 1, z) {
                    let mut c = centre;
                    c[1] += 0.5 * s[1];
                    square(c, 1);
                }
                if z + 1 < nz && x >= 0 && y >= 0 && here != get(x, y, z + 1) {
                    let mut c = centre;
                    c[2] += 0.5 * s[2];
                    square(c, 2);
                }
            }
        }
    }
    out
}

/// Uniform bucket grid over triangles for nearest-distance queries.
struct TriGrid<'a> {
    tris: &'a [Tri],
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    start: Vec<usize>,
    items: Vec<usize>,
}

impl<'a> TriGrid<'a> {
    fn new(tris: &'a [Tri], cell: f64) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for t in tris {
            for p in t {
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
        }
        if tris.is_empty() {
            lo = [0.0; 3];
            hi = [0.0; 3];
        }
        let dims = [0, 1, 2].map(|a| ((hi[a] - lo[a]) / cell) as usize + 1);
        let ncell = dims[0] * dims[1] * dims[2];
        let mut grid = Self {
            tris,
            origin: lo,
            cell,
            dims,
            start: alloc::vec![0; ncell + 1],
            items: Vec::new(),
        };
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (i, t) in tris.iter().enumerate() {
            let mut a = [usize::MAX; 3];
            let mut b = [0usize; 3];
            for p in t {
                let c = grid.cell_of(*p);
                for k in 0..3 {
                    a[k] = a[k].min(c[k]);
                    b[k] = b[k].max(c[k]);
                }
            }
            for z in a[2]..=b[2] {
                for y in a[1]..=b[1] {
                    for x in a[0]..=b[0] {
                        pairs.push((grid.flat([x, y, z]), i));
                    }
                }
            }
        }
        pairs.sort_unstable();
        for &(c, _) in &pairs {
            grid.start[c + 1] += 1;
        }
        for c in 0..ncell {
            grid.start[c + 1] += grid.start[c];
        }
        grid.items = pairs.into_iter().map(|(_, i)| i).collect();
        grid
    }

    fn cell_of(&self, p: Vec3) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let g = libm::floor((p[a] - self.origin[a]) / self.cell);
            (g.max(0.0) as usize).min(self.dims[a] - 1)
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    /// Distance from `p` to the nearest triangle, at most `limit`.
    fn distance(&self, p: Vec3, limit: f64) -> f64 {
        if self.tris.is_empty() {
            return limit;
        }
        let c = self.cell_of(p);
        // distance from p to the clamped cell box, to account for points
        // outside the grid
        let outside = (0..3)
            .map(|a| {
                let lo = self.origin[a];
                let hi = self.origin[a] + self.dims[a] as f64 * self.cell;
                (lo - p[a]).max(p[a] - hi).max(0.0)
            })
            .fold(0.0f64, |acc, d| acc + d * d);
        let outside = libm::sqrt(outside);
        let mut best = limit;
        let max_ring = *self.dims.iter().max().unwrap();
        for r in 0..=max_ring {
            if outside + (r as f64 - 1.0).max(0.0) * self.cell > best {
                break;
            }
            let lo = c.map(|v| v as isize - r as isize);
            let hi = c.map(|v| v as isize + r as isize);
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        let shell = x == lo[0]
                            || x == hi[0]
                            || y == lo[1]
                            || y == hi[1]
                            || z == lo[2]
                            || z == hi[2];
                        if !shell {
                            continue;
                        }
                        if x < 0 || y < 0 || z < 0 {
                            continue;
                        }
                        let q = [x as usize, y as usize, z as usize];
                        if q[0] >= self.dims[0] || q[1] >= self.dims[1] || q[2] >= self.dims[2] {
                            continue;
                        }
                        let f = self.flat(q);
                        for &i in &self.items[self.start[f]..self.start[f + 1]] {
                            let t = &self.tris[i];
                            best = best.min(geom::point_triangle_distance(p, t[0], t[1], t[2]));
                        }
                    }
                }
            }
        }
        best
    }
}
