//! Connected-component labeling on 2D frames and 3D volumes.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::label::LabelCode;
use crate::volume::{Frame, LabelVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    /// In-plane 8-neighbourhood; volumes are labeled slice by slice.
    Planar8,
    /// Full 26-neighbourhood.
    Volume26,
}

/// Per-voxel component ids (0 = not in the set, ids dense from 1 in raster
/// order of each component's first voxel) plus component sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentMap {
    pub ids: Vec<u32>,
    /// `sizes[id - 1]` is the voxel count of component `id`.
    pub sizes: Vec<usize>,
}

impl ComponentMap {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, id: u32) -> usize {
        self.sizes[id as usize - 1]
    }

    /// `(id, size)` pairs, largest first; equal sizes keep ascending id order.
    pub fn sizes_descending(&self) -> Vec<(u32, usize)> {
        let mut v: Vec<(u32, usize)> = self
            .sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| (i as u32 + 1, s))
            .collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    /// Voxel indices of each component, indexed by `id - 1`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sizes.len()];
        for (i, &id) in self.ids.iter().enumerate() {
            if id != 0 {
                out[id as usize - 1].push(i);
            }
        }
        out
    }
}

/// Labels connected regions of `mask` on an `nx * ny * nz` grid.
pub fn label_mask(mask: &[bool], dims: [usize; 3], connectivity: Connectivity) -> ComponentMap {
    let [nx, ny, nz] = dims;
    debug_assert_eq!(mask.len(), nx * ny * nz);
    let mut offsets: Vec<[isize; 3]> = Vec::with_capacity(26);
    let dz_range: &[isize] = match connectivity {
        Connectivity::Planar8 => &[0],
        Connectivity::Volume26 => &[-1, 0, 1],
    };
    for &dz in dz_range {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dx != 0 || dy != 0 || dz != 0 {
                    offsets.push([dx, dy, dz]);
                }
            }
        }
    }

    let mut ids = vec![0u32; mask.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || ids[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        ids[start] = id;
        queue.push_back(start);
        let mut size = 0usize;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let x = (i % nx) as isize;
            let y = ((i / nx) % ny) as isize;
            let z = (i / (nx * ny)) as isize;
            for o in &offsets {
                let (xx, yy, zz) = (x + o[0], y + o[1], z + o[2]);
                if xx < 0
                    || yy < 0
                    || zz < 0
                    || xx >= nx as isize
                    || yy >= ny as isize
                    || zz >= nz as isize
                {
                    continue;
                }
                let j = xx as usize + nx * (yy as usize + ny * zz as usize);
                if mask[j] && ids[j] == 0 {
                    ids[j] = id;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    ComponentMap { ids, sizes }
}

pub fn frame_components(frame: &Frame, label: LabelCode) -> ComponentMap {
    label_mask(
        &frame.mask(label),
        [frame.nx, frame.ny, 1],
        Connectivity::Planar8,
    )
}

/// Connected components of `label` in a volume.
pub fn connected_components(
    vol: &LabelVolume,
    label: LabelCode,
    connectivity: Connectivity,
) -> ComponentMap {
    let mask: Vec<bool> = vol.voxels().iter().map(|&v| v == label).collect();
    label_mask(&mask, vol.dims(), connectivity)
}
