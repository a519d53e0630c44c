//! Implicit multi-material description of a labelmap.
//!
//! Every label present gets a two-sided signed distance field on the voxel
//! grid. The material at an arbitrary point is the label whose trilinearly
//! interpolated distance is smallest, which reproduces the voxel labels at
//! voxel centres and places interfaces on (slightly rounded) voxel faces.

use alloc::vec::Vec;

use crate::edt::two_sided_sdf;
use crate::geom::Vec3;
use crate::label::LabelCode;
use crate::volume::LabelVolume;

pub struct MaterialField {
    dims: [usize; 3],
    spacing: [f64; 3],
    labels: Vec<LabelCode>,
    /// Per-label distances, µm, stored x-fastest like the volume.
    sdf: Vec<Vec<f32>>,
}

impl MaterialField {
    /// Builds the field. Along x and y the region outside the grid is
    /// background; along z the end slices extend indefinitely, so the stack
    /// ends are cut planes rather than material interfaces.
    pub fn new(vol: &LabelVolume, smoothing_voxels: f64) -> Self {
        let dims = vol.dims();
        let spacing = vol.spacing();
        let mut labels: Vec<LabelCode> = Vec::new();
        let counts = vol.label_counts();
        for (code, &c) in counts.iter().enumerate() {
            if c > 0 {
                labels.push(LabelCode(code as u8));
            }
        }
        let mut sdf = Vec::with_capacity(labels.len());
        for &l in &labels {
            let mask: Vec<bool> = vol.voxels().iter().map(|&v| v == l).collect();
            // beyond the x/y edges is background: pad non-background labels
            // as non-members; background needs no padding
            let pad = if l == LabelCode::BACKGROUND {
                [false, false, false]
            } else {
                [true, true, false]
            };
            let mut d = two_sided_sdf(&mask, dims, spacing, pad);
            if smoothing_voxels > 0.0 {
                gaussian_blur(&mut d, dims, smoothing_voxels);
            }
            sdf.push(d.into_iter().map(|v| v as f32).collect());
        }
        Self {
            dims,
            spacing,
            labels,
            sdf,
        }
    }

    pub fn labels(&self) -> &[LabelCode] {
        &self.labels
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    fn slot(&self, label: LabelCode) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Trilinear interpolation weights and base voxel for a physical point.
    /// Points outside the grid clamp to its edge.
    fn stencil(&self, p: Vec3) -> ([usize; 3], [f64; 3]) {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let n = self.dims[a];
            let g = (p[a] / self.spacing[a]).clamp(0.0, (n - 1) as f64);
            if n == 1 {
                continue;
            }
            let i = (g as usize).min(n - 2);
            base[a] = i;
            frac[a] = g - i as f64;
        }
        (base, frac)
    }

    fn interp(&self, slot: usize, base: [usize; 3], frac: [f64; 3]) -> f64 {
        let [nx, ny, _] = self.dims;
        let d = &self.sdf[slot];
        let step = [
            usize::from(self.dims[0] > 1),
            usize::from(self.dims[1] > 1),
            usize::from(self.dims[2] > 1),
        ];
        let mut acc = 0.0;
        for corner in 0..8 {
            let o = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let mut w = 1.0;
            for a in 0..3 {
                w *= if o[a] == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let x = base[0] + o[0] * step[0];
            let y = base[1] + o[1] * step[1];
            let z = base[2] + o[2] * step[2];
            acc += w * d[x + nx * (y + ny * z)] as f64;
        }
        acc
    }

    /// Interpolated distance of `label` at `p`; +inf for absent labels.
    pub fn distance(&self, label: LabelCode, p: Vec3) -> f64 {
        match self.slot(label) {
            Some(s) => {
                let (b, f) = self.stencil(p);
                self.interp(s, b, f)
            }
            None => f64::INFINITY,
        }
    }

    /// Material at `p`. Exact ties go to the lower code.
    pub fn label_at(&self, p: Vec3) -> LabelCode {
        let (b, f) = self.stencil(p);
        let mut best = (f64::INFINITY, LabelCode::BACKGROUND);
        for (s, &l) in self.labels.iter().enumerate() {
            let d = self.interp(s, b, f);
            if d < best.0 {
                best = (d, l);
            }
        }
        best.1
    }

    /// The two labels with the smallest distances at `p`, nearest first.
    pub fn two_nearest(&self, p: Vec3) -> [(LabelCode, f64); 2] {
        let (b, f) = self.stencil(p);
        let mut best = [(LabelCode::BACKGROUND, f64::INFINITY); 2];
        for (s, &l) in self.labels.iter().enumerate() {
            let d = self.interp(s, b, f);
            if d < best[0].1 {
                best[1] = best[0];
                best[0] = (l, d);
            } else if d < best[1].1 {
                best[1] = (l, d);
            }
        }
        best
    }

    /// Point where the material changes from `a` to `b` along the segment
    /// `pa`–`pb`, as a fraction from `pa`. Expects `a` nearer at `pa` and `b`
    /// nearer at `pb`.
    pub fn crossing(&self, a: LabelCode, b: LabelCode, pa: Vec3, pb: Vec3) -> f64 {
        let g = |t: f64| {
            let p = crate::geom::lerp(pa, pb, t);
            self.distance(a, p) - self.distance(b, p)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let (mut glo, mut ghi) = (g(0.0), g(1.0));
        if !(glo <= 0.0 && ghi >= 0.0) || glo == ghi {
            return 0.5;
        }
        for _ in 0..40 {
            // regula falsi with bisection fallback
            let mut t = lo - glo * (hi - lo) / (ghi - glo);
            if !(t > lo + 1e-3 * (hi - lo) && t < hi - 1e-3 * (hi - lo)) {
                t = 0.5 * (lo + hi);
            }
            let gt = g(t);
            if gt <= 0.0 {
                lo = t;
                glo = gt;
            } else {
                hi = t;
                ghi = gt;
            }
            if hi - lo < 1e-7 {
                break;
            }
        }
        if glo.abs() <= ghi.abs() {
            lo
        } else {
            hi
        }
    }
}

/// Separable Gaussian blur with reflecting edges; sigma in voxels.
fn gaussian_blur(d: &mut [f64], dims: [usize; 3], sigma: f64) {
    let r = libm::ceil(3.0 * sigma) as isize;
    let kernel: Vec<f64> = (-r..=r)
        .map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let ksum: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|k| k / ksum).collect();
    let mut line = Vec::new();
    for axis in 0..3 {
        let len = dims[axis];
        if len == 1 {
            continue;
        }
        let stride: usize = dims[..axis].iter().product();
        let n = d.len();
        for l in 0..n / len {
            let base = (l % stride) + (l / stride) * stride * len;
            line.clear();
            line.extend((0..len).map(|k| d[base + k * stride]));
            for k in 0..len {
                let mut acc = 0.0;
                for (j, w) in kernel.iter().enumerate() {
                    let mut q = k as isize + j as isize - r;
                    if q < 0 {
                        q = -q - 1;
                    }
                    if q >= len as isize {
                        q = 2 * len as isize - q - 1;
                    }
                    let q = q.clamp(0, len as isize - 1) as usize;
                    acc += w * line[q];
                }
                d[base + k * stride] = acc;
            }
        }
    }
}
