//! Exact Euclidean distance transforms on anisotropic grids.
//!
//! The transform is the separable lower-envelope-of-parabolas algorithm of
//! Felzenszwalb and Huttenlocher, run once per axis. Alongside the squared
//! distance it carries the index of the nearest seed (a feature transform),
//! which [`crate::interpolate::expand_labels`] and the mesher rely on.

use alloc::vec;
use alloc::vec::Vec;

use crate::label::LabelCode;
use crate::volume::Frame;

/// Sentinel distance (µm) used where the source set is absent.
pub const DISTANCE_CAP_UM: f64 = 1.0e9;

/// Marker in [`DistanceTransform::nearest`] for points with no reachable seed.
pub const NO_SEED: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct DistanceTransform {
    /// Squared Euclidean distance to the nearest seed, in physical units².
    /// `f64::INFINITY` when there are no seeds.
    pub sq_dist: Vec<f64>,
    /// Linear index of the nearest seed, or [`NO_SEED`].
    pub nearest: Vec<usize>,
}

impl DistanceTransform {
    pub fn distance(&self, i: usize) -> f64 {
        libm::sqrt(self.sq_dist[i])
    }
}

/// Squared distance from every grid point to the nearest `true` point of
/// `seeds`. `dims` and `spacing` list the axes fastest first (at most 3 axes).
pub fn squared_edt(seeds: &[bool], dims: &[usize], spacing: &[f64]) -> DistanceTransform {
    assert_eq!(dims.len(), spacing.len());
    assert!(!dims.is_empty() && dims.len() <= 3);
    let n: usize = dims.iter().product();
    assert_eq!(seeds.len(), n);

    let mut sq = vec![f64::INFINITY; n];
    let mut nearest = vec![NO_SEED; n];
    for (i, &s) in seeds.iter().enumerate() {
        if s {
            sq[i] = 0.0;
            nearest[i] = i;
        }
    }
    if !seeds.iter().any(|&s| s) {
        return DistanceTransform {
            sq_dist: sq,
            nearest,
        };
    }

    let mut scratch = Scratch::default();
    for axis in 0..dims.len() {
        let len = dims[axis];
        if len == 1 {
            continue;
        }
        let stride: usize = dims[..axis].iter().product();
        let lines = n / len;
        for line in 0..lines {
            // base index of this line: split line number into (below, above) axis
            let below = line % stride;
            let above = line / stride;
            let base = below + above * stride * len;
            scratch.load(&sq, &nearest, base, stride, len);
            scratch.envelope(spacing[axis]);
            scratch.store(&mut sq, &mut nearest, base, stride);
        }
    }
    DistanceTransform {
        sq_dist: sq,
        nearest,
    }
}

#[derive(Default)]
struct Scratch {
    f: Vec<f64>,
    feat: Vec<usize>,
    out_d: Vec<f64>,
    out_feat: Vec<usize>,
    // envelope: parabola sites and boundaries
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Scratch {
    fn load(&mut self, sq: &[f64], nearest: &[usize], base: usize, stride: usize, len: usize) {
        self.f.clear();
        self.feat.clear();
        for k in 0..len {
            let i = base + k * stride;
            self.f.push(sq[i]);
            self.feat.push(nearest[i]);
        }
    }

    fn envelope(&mut self, h: f64) {
        let len = self.f.len();
        self.out_d.clear();
        self.out_d.resize(len, f64::INFINITY);
        self.out_feat.clear();
        self.out_feat.resize(len, NO_SEED);
        self.v.clear();
        self.z.clear();
        let f = &self.f;
        // position of sample q is q * h
        let intersect = |p: usize, q: usize| -> f64 {
            let (pp, qq) = (p as f64 * h, q as f64 * h);
            ((f[q] + qq * qq) - (f[p] + pp * pp)) / (2.0 * (qq - pp))
        };
        for q in 0..len {
            if !f[q].is_finite() {
                continue;
            }
            if self.v.is_empty() {
                self.v.push(q);
                self.z.push(f64::NEG_INFINITY);
                continue;
            }
            loop {
                let p = *self.v.last().unwrap();
                let s = intersect(p, q);
                if s <= *self.z.last().unwrap() {
                    self.v.pop();
                    self.z.pop();
                    if self.v.is_empty() {
                        self.v.push(q);
                        self.z.push(f64::NEG_INFINITY);
                        break;
                    }
                } else {
                    self.v.push(q);
                    self.z.push(s);
                    break;
                }
            }
        }
        if self.v.is_empty() {
            return;
        }
        let mut k = 0usize;
        for q in 0..len {
            let x = q as f64 * h;
            while k + 1 < self.v.len() && self.z[k + 1] < x {
                k += 1;
            }
            let p = self.v[k];
            let dx = x - p as f64 * h;
            self.out_d[q] = f[p] + dx * dx;
            self.out_feat[q] = self.feat[p];
        }
    }

    fn store(&self, sq: &mut [f64], nearest: &mut [usize], base: usize, stride: usize) {
        for (k, (&d, &ft)) in self.out_d.iter().zip(&self.out_feat).enumerate() {
            let i = base + k * stride;
            sq[i] = d;
            nearest[i] = ft;
        }
    }
}

/// Signed distance field on a frame or volume, in micrometres.
///
/// Negative inside the source set, zero on its boundary voxels, positive
/// outside. Where the source set is absent every value equals `cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub values: Vec<f64>,
    pub cap: f64,
}

impl DistanceField {
    pub fn same_grid(&self, other: &DistanceField) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }

    pub fn is_capped(&self) -> bool {
        self.values.iter().all(|&v| v >= self.cap)
    }
}

/// Boundary voxels of a mask: members with a face neighbour outside the mask.
/// Positions beyond the grid edge count as outside.
pub fn boundary_of(mask: &[bool], nx: usize, ny: usize) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for y in 0..ny {
        for x in 0..nx {
            let i = x + nx * y;
            if !mask[i] {
                continue;
            }
            let edge = x == 0 || y == 0 || x + 1 == nx || y + 1 == ny;
            out[i] = edge || !mask[i - 1] || !mask[i + 1] || !mask[i - nx] || !mask[i + nx];
        }
    }
    out
}

/// Signed distance of a 2D mask: |f| is the exact Euclidean distance to the
/// nearest boundary voxel centre, with f <= 0 on members.
pub fn signed_distance_mask(
    mask: &[bool],
    nx: usize,
    ny: usize,
    spacing: [f64; 2],
) -> DistanceField {
    let dims = [nx, ny, 1];
    let sp = [spacing[0], spacing[1], 1.0];
    if !mask.iter().any(|&m| m) {
        return DistanceField {
            dims,
            spacing: sp,
            values: vec![DISTANCE_CAP_UM; mask.len()],
            cap: DISTANCE_CAP_UM,
        };
    }
    let boundary = boundary_of(mask, nx, ny);
    let dt = squared_edt(&boundary, &[nx, ny], &spacing);
    let values = dt
        .sq_dist
        .iter()
        .zip(mask)
        .map(|(&d2, &inside)| {
            let d = libm::sqrt(d2);
            if inside {
                -d
            } else {
                d
            }
        })
        .collect();
    DistanceField {
        dims,
        spacing: sp,
        values,
        cap: DISTANCE_CAP_UM,
    }
}

/// Signed distance field of one label in a frame.
pub fn signed_distance(frame: &Frame, label: LabelCode) -> DistanceField {
    signed_distance_mask(&frame.mask(label), frame.nx, frame.ny, frame.spacing)
}

/// Two-sided signed distance on a 3D grid: for members, minus the distance to
/// the nearest non-member voxel centre; for non-members, the distance to the
/// nearest member. The zero crossing lies halfway between voxel centres, on
/// the voxel faces.
///
/// `pad_outside[a]` makes positions beyond the grid along axis `a` count as
/// non-members; otherwise the grid is treated as extending indefinitely with
/// the same contents along that axis.
pub fn two_sided_sdf(
    mask: &[bool],
    dims: [usize; 3],
    spacing: [f64; 3],
    pad_outside: [bool; 3],
) -> Vec<f64> {
    let n = mask.len();
    let any_in = mask.iter().any(|&m| m);
    let any_out = mask.iter().any(|&m| !m) || pad_outside.iter().any(|&p| p);
    if !any_in {
        return vec![DISTANCE_CAP_UM; n];
    }
    let outside_dist = squared_edt(mask, &dims, &spacing);

    // Inside distances need the complement, padded by one layer where the grid
    // edge counts as outside.
    let inside_sq = if !any_out {
        vec![DISTANCE_CAP_UM * DISTANCE_CAP_UM; n]
    } else {
        let pad = pad_outside.map(|p| p as usize);
        let pdims = [
            dims[0] + 2 * pad[0],
            dims[1] + 2 * pad[1],
            dims[2] + 2 * pad[2],
        ];
        let mut comp = vec![true; pdims[0] * pdims[1] * pdims[2]];
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let pi = (x + pad[0]) + pdims[0] * ((y + pad[1]) + pdims[1] * (z + pad[2]));
                    comp[pi] = !mask[x + dims[0] * (y + dims[1] * z)];
                }
            }
        }
        let dt = squared_edt(&comp, &pdims, &spacing);
        let mut out = vec![0.0; n];
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let pi = (x + pad[0]) + pdims[0] * ((y + pad[1]) + pdims[1] * (z + pad[2]));
                    out[x + dims[0] * (y + dims[1] * z)] = dt.sq_dist[pi];
                }
            }
        }
        out
    };
    (0..n)
        .map(|i| {
            if mask[i] {
                -libm::sqrt(inside_sq[i]).min(DISTANCE_CAP_UM)
            } else {
                libm::sqrt(outside_dist.sq_dist[i]).min(DISTANCE_CAP_UM)
            }
        })
        .collect()
}
