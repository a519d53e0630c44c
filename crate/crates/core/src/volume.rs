//! Dense voxel grids of [`LabelCode`]s.

use alloc::vec;
use alloc::vec::Vec;

use crate::label::LabelCode;
use crate::{Error, Result};

/// 3D labelmap with physical spacing in micrometres. Voxels are stored
/// x-fastest: index = x + nx * (y + ny * z).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    dims: [usize; 3],
    spacing: [f64; 3],
    voxels: Vec<LabelCode>,
    frame_positions: Option<Vec<usize>>,
}

fn check_dims(dims: [usize; 3]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::InvalidDims(dims));
    }
    Ok(())
}

fn check_spacing(spacing: [f64; 3]) -> Result<()> {
    if spacing.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::InvalidSpacing(spacing));
    }
    Ok(())
}

impl LabelVolume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], voxels: Vec<LabelCode>) -> Result<Self> {
        check_dims(dims)?;
        check_spacing(spacing)?;
        let expected = dims[0] * dims[1] * dims[2];
        if voxels.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                actual: voxels.len(),
            });
        }
        if let Some(bad) = voxels.iter().find(|v| !v.is_known()) {
            return Err(Error::UnknownLabel(bad.0));
        }
        Ok(Self {
            dims,
            spacing,
            voxels,
            frame_positions: None,
        })
    }

    pub fn filled(dims: [usize; 3], spacing: [f64; 3], label: LabelCode) -> Result<Self> {
        check_dims(dims)?;
        Self::new(dims, spacing, vec![label; dims[0] * dims[1] * dims[2]])
    }

    /// Stacks equally sized frames along z.
    pub fn from_frames(frames: &[Frame], z_spacing: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or(Error::InvalidDims([0, 0, frames.len()]))?;
        let (nx, ny) = (first.nx, first.ny);
        let mut voxels = Vec::with_capacity(nx * ny * frames.len());
        for f in frames {
            if f.nx != nx || f.ny != ny {
                return Err(Error::DimsMismatch([nx, ny, 1], [f.nx, f.ny, 1]));
            }
            voxels.extend_from_slice(&f.data);
        }
        Self::new(
            [nx, ny, frames.len()],
            [first.spacing[0], first.spacing[1], z_spacing],
            voxels,
        )
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn voxels(&self) -> &[LabelCode] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [LabelCode] {
        &mut self.voxels
    }

    pub fn frame_positions(&self) -> Option<&[usize]> {
        self.frame_positions.as_deref()
    }

    pub fn set_frame_positions(&mut self, positions: Option<Vec<usize>>) {
        self.frame_positions = positions;
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> LabelCode {
        self.voxels[self.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, label: LabelCode) {
        let i = self.index(x, y, z);
        self.voxels[i] = label;
    }

    pub fn is_isotropic(&self) -> bool {
        let [sx, sy, sz] = self.spacing;
        let tol = 1e-9 * sx.max(sy).max(sz);
        (sx - sy).abs() <= tol && (sx - sz).abs() <= tol
    }

    /// Physical position of a voxel centre in micrometres.
    pub fn voxel_center(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        [
            x as f64 * self.spacing[0],
            y as f64 * self.spacing[1],
            z as f64 * self.spacing[2],
        ]
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    pub fn slice(&self, z: usize) -> Frame {
        let n = self.dims[0] * self.dims[1];
        Frame {
            nx: self.dims[0],
            ny: self.dims[1],
            spacing: [self.spacing[0], self.spacing[1]],
            data: self.voxels[z * n..(z + 1) * n].to_vec(),
        }
    }

    pub fn set_slice(&mut self, z: usize, frame: &Frame) -> Result<()> {
        if frame.nx != self.dims[0] || frame.ny != self.dims[1] {
            return Err(Error::DimsMismatch(self.dims, [frame.nx, frame.ny, 1]));
        }
        let n = self.dims[0] * self.dims[1];
        self.voxels[z * n..(z + 1) * n].copy_from_slice(&frame.data);
        Ok(())
    }

    /// Voxel count per code, indexed by the code value.
    pub fn label_counts(&self) -> [usize; 256] {
        let mut counts = [0usize; 256];
        for v in &self.voxels {
            counts[v.0 as usize] += 1;
        }
        counts
    }

    pub fn contains_label(&self, label: LabelCode) -> bool {
        self.voxels.contains(&label)
    }
}

/// A single z-slice. Same x-fastest layout as [`LabelVolume`].
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub nx: usize,
    pub ny: usize,
    pub spacing: [f64; 2],
    pub data: Vec<LabelCode>,
}

impl Frame {
    pub fn new(nx: usize, ny: usize, spacing: [f64; 2], data: Vec<LabelCode>) -> Result<Self> {
        check_dims([nx, ny, 1])?;
        check_spacing([spacing[0], spacing[1], 1.0])?;
        if data.len() != nx * ny {
            return Err(Error::SizeMismatch {
                expected: nx * ny,
                actual: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_known()) {
            return Err(Error::UnknownLabel(bad.0));
        }
        Ok(Self {
            nx,
            ny,
            spacing,
            data,
        })
    }

    pub fn filled(nx: usize, ny: usize, spacing: [f64; 2], label: LabelCode) -> Self {
        Self {
            nx,
            ny,
            spacing,
            data: vec![label; nx * ny],
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        x + self.nx * y
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> LabelCode {
        self.data[x + self.nx * y]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: LabelCode) {
        self.data[x + self.nx * y] = label;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn mask(&self, label: LabelCode) -> Vec<bool> {
        self.data.iter().map(|&v| v == label).collect()
    }

    pub fn count(&self, label: LabelCode) -> usize {
        self.data.iter().filter(|&&v| v == label).count()
    }

    pub fn same_grid(&self, other: &Frame) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.spacing == other.spacing
    }
}
