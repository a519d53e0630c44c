//! Signed-distance interpolation of sparse labeled frames into an isotropic
//! volume.
//!
//! Between two frames every label component is paired with its counterpart
//! (largest overlap, else nearest centroid; an artificial one-voxel seed when
//! the label is missing on the other side). Each pair is morphed by blending
//! the two signed distance fields, the per-label results are expanded to fill
//! gaps, and the slice is cropped to the morphed cross-section of the artery.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::components::frame_components;
use crate::edt::{signed_distance_mask, squared_edt, DistanceField};
use crate::label::LabelCode;
use crate::volume::{Frame, LabelVolume};
use crate::{Error, Result, Warnings};

/// Physical frame positions and the output slice spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationPlan {
    pub frame_z_um: Vec<f64>,
    pub target_spacing_um: f64,
}

impl InterpolationPlan {
    pub fn uniform(frames: usize, frame_gap_um: f64, target_spacing_um: f64) -> Self {
        Self {
            frame_z_um: (0..frames).map(|i| i as f64 * frame_gap_um).collect(),
            target_spacing_um,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_spacing_um.is_finite() && self.target_spacing_um > 0.0) {
            return Err(Error::InvalidConfig("target spacing must be > 0".into()));
        }
        if self.frame_z_um.len() < 2 {
            return Err(Error::InvalidConfig(
                "at least two frames are required".into(),
            ));
        }
        for (i, w) in self.frame_z_um.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidConfig(format!(
                    "frame positions must be strictly increasing (frames {i} and {})",
                    i + 1
                )));
            }
            if self.steps_in_gap(i) < 1 {
                return Err(Error::InvalidConfig(format!(
                    "gap between frames {i} and {} is smaller than the target spacing",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Output slice steps spanning gap `i`; the gap holds `steps - 1`
    /// interpolated slices.
    pub fn steps_in_gap(&self, i: usize) -> usize {
        let gap = self.frame_z_um[i + 1] - self.frame_z_um[i];
        libm::round(gap / self.target_spacing_um) as usize
    }

    pub fn slices_between(&self, i: usize) -> usize {
        self.steps_in_gap(i).saturating_sub(1)
    }

    /// Output z index of every input frame.
    pub fn frame_indices(&self) -> Vec<usize> {
        let mut out = vec![0usize];
        for i in 0..self.frame_z_um.len() - 1 {
            out.push(out[i] + self.steps_in_gap(i));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolateConfig {
    /// Labels morphed component by component. Everything else in a frame is
    /// treated as background between frames.
    pub labels: Vec<LabelCode>,
}

impl Default for InterpolateConfig {
    fn default() -> Self {
        Self {
            labels: vec![
                LabelCode::WALL,
                LabelCode::LIPID,
                LabelCode::CALCIUM,
                LabelCode::LUMEN,
            ],
        }
    }
}

struct Component {
    voxels: Vec<usize>,
    centroid: [f64; 2],
}

fn components_of(frame: &Frame, label: LabelCode) -> Vec<Component> {
    let cc = frame_components(frame, label);
    cc.members()
        .into_iter()
        .map(|voxels| {
            let (mut sx, mut sy) = (0.0, 0.0);
            for &i in &voxels {
                sx += (i % frame.nx) as f64;
                sy += (i / frame.nx) as f64;
            }
            let n = voxels.len() as f64;
            Component {
                voxels,
                centroid: [sx / n, sy / n],
            }
        })
        .collect()
}

/// Voxel (x, y) nearest to `centroid`, clamped into the frame.
fn seed_position(frame: &Frame, centroid: [f64; 2], warnings: &mut Warnings) -> (usize, usize) {
    let rx = libm::round(centroid[0]);
    let ry = libm::round(centroid[1]);
    let cx = rx.clamp(0.0, (frame.nx - 1) as f64);
    let cy = ry.clamp(0.0, (frame.ny - 1) as f64);
    if cx != rx || cy != ry {
        warnings.push(format!(
            "seed centroid ({rx}, {ry}) outside the frame, clamped to ({cx}, {cy})"
        ));
    }
    (cx as usize, cy as usize)
}

/// Places a one-voxel artificial component of `label` in whichever frame
/// lacks the label, at the centroid of each component in the other frame.
/// Frames where both or neither contain the label come back unchanged.
pub fn seed_artificial_label(
    a: &Frame,
    b: &Frame,
    label: LabelCode,
) -> Result<(Frame, Frame, Warnings)> {
    if !a.same_grid(b) {
        return Err(Error::DimsMismatch([a.nx, a.ny, 1], [b.nx, b.ny, 1]));
    }
    let mut warnings = Warnings::new();
    let (mut a2, mut b2) = (a.clone(), b.clone());
    let in_a = a.data.contains(&label);
    let in_b = b.data.contains(&label);
    if in_a != in_b {
        let (src, dst) = if in_a { (a, &mut b2) } else { (b, &mut a2) };
        for comp in components_of(src, label) {
            let (x, y) = seed_position(dst, comp.centroid, &mut warnings);
            dst.set(x, y, label);
        }
    }
    Ok((a2, b2, warnings))
}

/// Blends of boundary-centred distances are thresholded at half a voxel,
/// where the pixel edges lie. Frame masks are reproduced exactly at t = 0
/// and t = 1 because no outside voxel lies within a voxel of the boundary.
fn morph_threshold(spacing: [f64; 3]) -> f64 {
    0.5 * spacing[0].min(spacing[1])
}

/// Mask of `(1 - t) f_a + t f_b <= h / 2` for in-plane voxel size `h`.
pub fn interpolate_component_pair(
    field_a: &DistanceField,
    field_b: &DistanceField,
    t: f64,
) -> Result<Vec<bool>> {
    if !field_a.same_grid(field_b) {
        return Err(Error::DimsMismatch(field_a.dims, field_b.dims));
    }
    let level = morph_threshold(field_a.spacing);
    Ok(field_a
        .values
        .iter()
        .zip(&field_b.values)
        .map(|(&fa, &fb)| (1.0 - t) * fa + t * fb <= level)
        .collect())
}

/// Assigns every voxel the label of its nearest mask. Equidistant masks are
/// resolved by label priority (calcium > lipid > lumen > wall).
pub fn expand_labels(
    masks: &[(LabelCode, Vec<bool>)],
    nx: usize,
    ny: usize,
    spacing: [f64; 2],
) -> Result<Frame> {
    expand_ranked(masks, None, nx, ny, spacing)
}

/// [`expand_labels`] with an extra key consulted before label priority when
/// two masks are equally near: the smaller value in `fields` wins. The
/// interpolation passes the blended signed distances here, which splits
/// one-voxel gaps between adjacent morphs down the middle instead of handing
/// them wholesale to the higher-priority label.
fn expand_ranked(
    masks: &[(LabelCode, Vec<bool>)],
    fields: Option<&[Vec<f64>]>,
    nx: usize,
    ny: usize,
    spacing: [f64; 2],
) -> Result<Frame> {
    let n = nx * ny;
    let mut best_d = vec![f64::INFINITY; n];
    let mut best_f = vec![f64::INFINITY; n];
    let mut best_l = vec![LabelCode::BACKGROUND; n];
    let mut any = false;
    for (k, (label, mask)) in masks.iter().enumerate() {
        if mask.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                actual: mask.len(),
            });
        }
        if !mask.iter().any(|&m| m) {
            continue;
        }
        any = true;
        let dt = squared_edt(mask, &[nx, ny], &spacing);
        for i in 0..n {
            let d = dt.sq_dist[i];
            let f = fields.map_or(0.0, |fs| fs[k][i]);
            let better = d < best_d[i]
                || (d == best_d[i]
                    && (f < best_f[i]
                        || (f == best_f[i] && label.priority() > best_l[i].priority())));
            if better {
                best_d[i] = d;
                best_f[i] = f;
                best_l[i] = *label;
            }
        }
    }
    if !any {
        return Err(Error::EmptyMasks);
    }
    Frame::new(nx, ny, spacing, best_l)
}

/// Sets voxels outside `section` to background.
pub fn crop_to_mask(frame: &Frame, section: &[bool]) -> Result<Frame> {
    if section.len() != frame.len() {
        return Err(Error::SizeMismatch {
            expected: frame.len(),
            actual: section.len(),
        });
    }
    if !section.iter().any(|&m| m) {
        return Err(Error::EmptySectionMask);
    }
    let mut out = frame.clone();
    for (v, &inside) in out.data.iter_mut().zip(section) {
        if !inside {
            *v = LabelCode::BACKGROUND;
        }
    }
    Ok(out)
}

fn mask_of(frame: &Frame, voxels: &[usize]) -> Vec<bool> {
    let mut m = vec![false; frame.len()];
    for &i in voxels {
        m[i] = true;
    }
    m
}

fn point_mask(frame: &Frame, x: usize, y: usize) -> Vec<bool> {
    let mut m = vec![false; frame.len()];
    m[frame.index(x, y)] = true;
    m
}

fn sq_dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])
}

/// Partner in `others` for `comp`: largest voxel overlap, else the nearest
/// centroid. Ties go to the lower index.
fn best_partner(comp: &Component, others: &[Component], other_ids: &[u32]) -> Option<usize> {
    if others.is_empty() {
        return None;
    }
    let mut overlap = vec![0usize; others.len()];
    for &i in &comp.voxels {
        let id = other_ids[i];
        if id != 0 {
            overlap[id as usize - 1] += 1;
        }
    }
    let (best, &count) = overlap
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .unwrap();
    if count > 0 {
        return Some(best);
    }
    others
        .iter()
        .enumerate()
        .min_by(|a, b| {
            sq_dist2(comp.centroid, a.1.centroid)
                .total_cmp(&sq_dist2(comp.centroid, b.1.centroid))
                .then(a.0.cmp(&b.0))
        })
        .map(|(i, _)| i)
}

/// Matched morph of one label: the signed distance field pairs whose blends
/// are unioned at each t.
struct LabelMorph {
    label: LabelCode,
    pairs: Vec<(DistanceField, DistanceField)>,
}

fn plan_label(a: &Frame, b: &Frame, label: LabelCode, warnings: &mut Warnings) -> LabelMorph {
    let comps_a = components_of(a, label);
    let comps_b = components_of(b, label);
    let ids_a = frame_components(a, label).ids;
    let ids_b = frame_components(b, label).ids;
    let sdf = |f: &Frame, m: &[bool]| signed_distance_mask(m, f.nx, f.ny, f.spacing);

    let mut pairs_idx: Vec<(usize, usize)> = Vec::new();
    let mut pairs = Vec::new();
    if comps_b.is_empty() {
        for c in &comps_a {
            let (x, y) = seed_position(b, c.centroid, warnings);
            pairs.push((sdf(a, &mask_of(a, &c.voxels)), sdf(b, &point_mask(b, x, y))));
        }
    } else if comps_a.is_empty() {
        for c in &comps_b {
            let (x, y) = seed_position(a, c.centroid, warnings);
            pairs.push((sdf(a, &point_mask(a, x, y)), sdf(b, &mask_of(b, &c.voxels))));
        }
    } else {
        for (i, c) in comps_a.iter().enumerate() {
            if let Some(j) = best_partner(c, &comps_b, &ids_b) {
                pairs_idx.push((i, j));
            }
        }
        for (j, c) in comps_b.iter().enumerate() {
            if let Some(i) = best_partner(c, &comps_a, &ids_a) {
                pairs_idx.push((i, j));
            }
        }
        pairs_idx.sort_unstable();
        pairs_idx.dedup();
        let fa: Vec<DistanceField> = comps_a
            .iter()
            .map(|c| sdf(a, &mask_of(a, &c.voxels)))
            .collect();
        let fb: Vec<DistanceField> = comps_b
            .iter()
            .map(|c| sdf(b, &mask_of(b, &c.voxels)))
            .collect();
        for (i, j) in pairs_idx {
            pairs.push((fa[i].clone(), fb[j].clone()));
        }
    }
    LabelMorph { label, pairs }
}

fn section_mask(frame: &Frame) -> Vec<bool> {
    frame
        .data
        .iter()
        .map(|&v| v != LabelCode::BACKGROUND)
        .collect()
}

/// Interpolated slices strictly between `a` and `b`, at t = j / steps for
/// j = 1..steps.
pub fn interpolate_gap(
    a: &Frame,
    b: &Frame,
    steps: usize,
    cfg: &InterpolateConfig,
) -> Result<(Vec<Frame>, Warnings)> {
    if !a.same_grid(b) {
        return Err(Error::DimsMismatch([a.nx, a.ny, 1], [b.nx, b.ny, 1]));
    }
    let mut warnings = Warnings::new();
    let morphs: Vec<LabelMorph> = cfg
        .labels
        .iter()
        .map(|&l| plan_label(a, b, l, &mut warnings))
        .filter(|m| !m.pairs.is_empty())
        .collect();
    let sec_a = signed_distance_mask(&section_mask(a), a.nx, a.ny, a.spacing);
    let sec_b = signed_distance_mask(&section_mask(b), b.nx, b.ny, b.spacing);

    let level = morph_threshold(sec_a.spacing);
    let mut out = Vec::with_capacity(steps.saturating_sub(1));
    for j in 1..steps {
        let t = j as f64 / steps as f64;
        let mut masks = Vec::with_capacity(morphs.len());
        let mut fields = Vec::with_capacity(morphs.len());
        for m in &morphs {
            let mut blended = vec![f64::INFINITY; a.len()];
            for (fa, fb) in &m.pairs {
                for ((b, &va), &vb) in blended.iter_mut().zip(&fa.values).zip(&fb.values) {
                    *b = b.min((1.0 - t) * va + t * vb);
                }
            }
            masks.push((
                m.label,
                blended.iter().map(|&v| v <= level).collect::<Vec<bool>>(),
            ));
            fields.push(blended);
        }
        let expanded = expand_ranked(&masks, Some(&fields), a.nx, a.ny, a.spacing)?;
        let section = interpolate_component_pair(&sec_a, &sec_b, t)?;
        out.push(crop_to_mask(&expanded, &section)?);
    }
    Ok((out, warnings))
}

/// Builds the isotropic volume from preprocessed frames. Slices at the frame
/// positions are the input frames verbatim.
pub fn interpolate_pullback(
    frames: &[Frame],
    plan: &InterpolationPlan,
    cfg: &InterpolateConfig,
) -> Result<(LabelVolume, Warnings)> {
    plan.validate()?;
    if frames.len() != plan.frame_z_um.len() {
        return Err(Error::InvalidConfig(format!(
            "{} frames but {} frame positions",
            frames.len(),
            plan.frame_z_um.len()
        )));
    }
    let mut slices: Vec<Frame> = Vec::new();
    let mut warnings = Warnings::new();
    for i in 0..frames.len() - 1 {
        let wrap = |e: Error| Error::FramePair {
            first: i,
            second: i + 1,
            source: alloc::boxed::Box::new(e),
        };
        if !frames[i].same_grid(&frames[i + 1]) {
            return Err(wrap(Error::DimsMismatch(
                [frames[i].nx, frames[i].ny, 1],
                [frames[i + 1].nx, frames[i + 1].ny, 1],
            )));
        }
        let (mid, w) =
            interpolate_gap(&frames[i], &frames[i + 1], plan.steps_in_gap(i), cfg).map_err(wrap)?;
        warnings.extend(w.into_iter().map(|m| format!("frames {i}-{}: {m}", i + 1)));
        slices.push(frames[i].clone());
        slices.extend(mid);
    }
    slices.push(frames[frames.len() - 1].clone());
    let mut vol = LabelVolume::from_frames(&slices, plan.target_spacing_um)?;
    vol.set_frame_positions(Some(plan.frame_indices()));
    Ok((vol, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = 20.0;

    fn disk(n: usize, c: [f64; 2], r: f64, label: LabelCode) -> Frame {
        let mut f = Frame::filled(n, n, [S, S], LabelCode::BACKGROUND);
        for y in 0..n {
            for x in 0..n {
                if libm::hypot(x as f64 - c[0], y as f64 - c[1]) <= r {
                    f.set(x, y, label);
                }
            }
        }
        f
    }

    fn eq_radius_um(mask: &[bool]) -> f64 {
        let area = mask.iter().filter(|&&m| m).count() as f64;
        libm::sqrt(area / core::f64::consts::PI) * S
    }

    #[test]
    fn seeds_at_centroid() {
        let mut a = Frame::filled(80, 80, [S, S], LabelCode::WALL);
        for y in 58..63 {
            for x in 38..43 {
                a.set(x, y, LabelCode::CALCIUM);
            }
        }
        let b = Frame::filled(80, 80, [S, S], LabelCode::WALL);
        let (a2, b2, w) = seed_artificial_label(&a, &b, LabelCode::CALCIUM).unwrap();
        assert!(w.is_empty());
        assert_eq!(a2, a);
        assert_eq!(b2.count(LabelCode::CALCIUM), 1);
        assert_eq!(b2.get(40, 60), LabelCode::CALCIUM);
        // present in both: unchanged
        let (a3, b3, _) = seed_artificial_label(&a, &a, LabelCode::CALCIUM).unwrap();
        assert_eq!((a3, b3), (a.clone(), a));
    }

    #[test]
    fn seeds_per_component() {
        let mut a = Frame::filled(60, 60, [S, S], LabelCode::WALL);
        let blobs = [(5usize, 5usize, 4usize, 3usize), (40, 30, 6, 6)];
        let mut expected = Vec::new();
        for &(x0, y0, w, h) in &blobs {
            let (mut sx, mut sy) = (0.0, 0.0);
            for y in y0..y0 + h {
                for x in x0..x0 + w {
                    a.set(x, y, LabelCode::LIPID);
                    sx += x as f64;
                    sy += y as f64;
                }
            }
            let n = (w * h) as f64;
            expected.push((libm::round(sx / n) as usize, libm::round(sy / n) as usize));
        }
        let b = Frame::filled(60, 60, [S, S], LabelCode::WALL);
        let (_, b2, _) = seed_artificial_label(&a, &b, LabelCode::LIPID).unwrap();
        assert_eq!(b2.count(LabelCode::LIPID), 2);
        for (x, y) in expected {
            assert_eq!(b2.get(x, y), LabelCode::LIPID);
        }
    }

    #[test]
    fn pair_endpoints_and_mismatch() {
        let a = disk(40, [20.0, 20.0], 6.0, LabelCode::LIPID);
        let b = disk(40, [22.0, 18.0], 9.0, LabelCode::LIPID);
        let fa = crate::edt::signed_distance(&a, LabelCode::LIPID);
        let fb = crate::edt::signed_distance(&b, LabelCode::LIPID);
        assert_eq!(
            interpolate_component_pair(&fa, &fb, 0.0).unwrap(),
            a.mask(LabelCode::LIPID)
        );
        assert_eq!(
            interpolate_component_pair(&fa, &fb, 1.0).unwrap(),
            b.mask(LabelCode::LIPID)
        );
        let small = Frame::filled(10, 10, [S, S], LabelCode::LIPID);
        let fs = crate::edt::signed_distance(&small, LabelCode::LIPID);
        assert!(interpolate_component_pair(&fa, &fs, 0.5).is_err());
    }

    #[test]
    fn concentric_disks_follow_linear_law() {
        // r = 200 µm and 400 µm
        let a = disk(61, [30.0, 30.0], 10.0, LabelCode::LIPID);
        let b = disk(61, [30.0, 30.0], 20.0, LabelCode::LIPID);
        let fa = crate::edt::signed_distance(&a, LabelCode::LIPID);
        let fb = crate::edt::signed_distance(&b, LabelCode::LIPID);
        let ra = eq_radius_um(&a.mask(LabelCode::LIPID));
        let rb = eq_radius_um(&b.mask(LabelCode::LIPID));
        for (t, nominal) in [(0.5, 300.0), (0.25, 250.0)] {
            let m = interpolate_component_pair(&fa, &fb, t).unwrap();
            let r = eq_radius_um(&m);
            let law = (1.0 - t) * ra + t * rb;
            assert!((r - law).abs() <= S / 2.0, "t={t}: {r} vs {law}");
            assert!((r - nominal).abs() <= S / 2.0, "t={t}: {r} vs {nominal}");
        }
        for j in 1..20 {
            let t = j as f64 / 20.0;
            let m = interpolate_component_pair(&fa, &fb, t).unwrap();
            let law = (1.0 - t) * ra + t * rb;
            assert!((eq_radius_um(&m) - law).abs() <= S / 2.0, "t={t}");
        }
        assert_eq!(
            interpolate_component_pair(&fa, &fb, 0.0).unwrap(),
            a.mask(LabelCode::LIPID)
        );
        assert_eq!(
            interpolate_component_pair(&fa, &fb, 1.0).unwrap(),
            b.mask(LabelCode::LIPID)
        );
    }

    #[test]
    fn expand_single_and_gap() {
        let n = 20;
        let mut left = vec![false; n * n];
        let mut right = vec![false; n * n];
        for y in 0..n {
            for x in 0..n {
                if x < 9 {
                    left[x + n * y] = true;
                }
                if x >= 11 {
                    right[x + n * y] = true;
                }
            }
        }
        let f = expand_labels(&[(LabelCode::WALL, left.clone())], n, n, [S, S]).unwrap();
        assert!(f.data.iter().all(|&v| v == LabelCode::WALL));
        let f = expand_labels(
            &[
                (LabelCode::WALL, left.clone()),
                (LabelCode::LIPID, right.clone()),
            ],
            n,
            n,
            [S, S],
        )
        .unwrap();
        // columns 9 and 10 are the gap; 9 is nearer wall, 10 nearer lipid
        for y in 0..n {
            assert_eq!(f.get(9, y), LabelCode::WALL);
            assert_eq!(f.get(10, y), LabelCode::LIPID);
        }
        // 3-voxel gap: middle column equidistant, lipid outranks wall
        let mut right3 = vec![false; n * n];
        for y in 0..n {
            for x in 12..n {
                right3[x + n * y] = true;
            }
        }
        let f = expand_labels(
            &[(LabelCode::WALL, left), (LabelCode::LIPID, right3)],
            n,
            n,
            [S, S],
        )
        .unwrap();
        assert_eq!(f.get(10, 3), LabelCode::LIPID);
        assert_eq!(
            expand_labels(&[(LabelCode::WALL, vec![false; n * n])], n, n, [S, S]),
            Err(Error::EmptyMasks)
        );
    }

    #[test]
    fn overlap_priority() {
        let mut m = vec![false; 9];
        m[4] = true;
        let f = expand_labels(
            &[(LabelCode::LIPID, m.clone()), (LabelCode::CALCIUM, m)],
            3,
            3,
            [S, S],
        )
        .unwrap();
        assert_eq!(f.get(1, 1), LabelCode::CALCIUM);
    }

    #[test]
    fn crop_behaviour() {
        let f = disk(30, [15.0, 15.0], 12.0, LabelCode::WALL);
        assert_eq!(crop_to_mask(&f, &vec![true; 900]).unwrap(), f);
        let small = disk(30, [15.0, 15.0], 6.0, LabelCode::WALL);
        let cropped = crop_to_mask(&f, &small.mask(LabelCode::WALL)).unwrap();
        assert_eq!(cropped, small);
        assert_eq!(
            crop_to_mask(&f, &vec![false; 900]),
            Err(Error::EmptySectionMask)
        );
    }

    fn annulus(n: usize, r_lumen: f64, r_out: f64) -> Frame {
        let c = (n / 2) as f64;
        let mut f = Frame::filled(n, n, [S, S], LabelCode::BACKGROUND);
        for y in 0..n {
            for x in 0..n {
                let r = libm::hypot(x as f64 - c, y as f64 - c);
                if r <= r_lumen {
                    f.set(x, y, LabelCode::LUMEN);
                } else if r <= r_out {
                    f.set(x, y, LabelCode::WALL);
                }
            }
        }
        f
    }

    #[test]
    fn t_zero_reproduces_frame() {
        let a = annulus(60, 10.0, 20.0);
        let b = annulus(60, 14.0, 24.0);
        let cfg = InterpolateConfig::default();
        let morphs: Vec<LabelMorph> = cfg
            .labels
            .iter()
            .map(|&l| plan_label(&a, &b, l, &mut Warnings::new()))
            .filter(|m| !m.pairs.is_empty())
            .collect();
        let mut masks = Vec::new();
        for m in &morphs {
            let mut union = vec![false; a.len()];
            for (fa, fb) in &m.pairs {
                for (u, v) in union
                    .iter_mut()
                    .zip(interpolate_component_pair(fa, fb, 0.0).unwrap())
                {
                    *u |= v;
                }
            }
            masks.push((m.label, union));
        }
        let expanded = expand_labels(&masks, 60, 60, [S, S]).unwrap();
        let cropped = crop_to_mask(&expanded, &section_mask(&a)).unwrap();
        assert_eq!(cropped, a);
    }

    #[test]
    fn identical_frames_constant_morph() {
        let a = annulus(50, 8.0, 18.0);
        let plan = InterpolationPlan::uniform(2, 400.0, 20.0);
        let (vol, _) =
            interpolate_pullback(&[a.clone(), a.clone()], &plan, &Default::default()).unwrap();
        assert_eq!(vol.dims()[2], 21);
        for z in 0..21 {
            assert_eq!(vol.slice(z), a, "slice {z}");
        }
        assert_eq!(vol.frame_positions(), Some(&[0usize, 20][..]));
        assert!(vol.is_isotropic());
    }

    #[test]
    fn lumen_radius_linear_across_gap() {
        // 1.5 mm -> 1.7 mm scaled down to 20 -> 30 px lumens
        let a = annulus(100, 20.0, 35.0);
        let b = annulus(100, 30.0, 45.0);
        let plan = InterpolationPlan::uniform(2, 400.0, 20.0);
        let (vol, _) =
            interpolate_pullback(&[a.clone(), b.clone()], &plan, &Default::default()).unwrap();
        let ra = eq_radius_um(&a.mask(LabelCode::LUMEN));
        let rb = eq_radius_um(&b.mask(LabelCode::LUMEN));
        let mut prev = 0.0;
        for z in 0..21 {
            let s = vol.slice(z);
            let r = eq_radius_um(&s.mask(LabelCode::LUMEN));
            let t = z as f64 / 20.0;
            let law = (1.0 - t) * ra + t * rb;
            assert!((r - law).abs() <= S / 2.0, "z={z}: {r} vs {law}");
            assert!(r >= prev);
            prev = r;
            // label completeness inside the section
            for v in &s.data {
                assert!(
                    *v == LabelCode::BACKGROUND || *v == LabelCode::WALL || *v == LabelCode::LUMEN
                );
            }
        }
    }

    #[test]
    fn seeded_component_grows_monotonically() {
        let mut a = annulus(80, 12.0, 32.0);
        let b = a.clone();
        for y in 10..18 {
            for x in 36..44 {
                a.set(x, y, LabelCode::CALCIUM);
            }
        }
        let plan = InterpolationPlan::uniform(2, 400.0, 20.0);
        // b -> a: calcium grows from a seed
        let (vol, _) = interpolate_pullback(&[b, a], &plan, &Default::default()).unwrap();
        let mut prev = 0;
        for z in 0..21 {
            let c = vol.slice(z).count(LabelCode::CALCIUM);
            assert!(c >= prev, "z={z}: {c} < {prev}");
            prev = c;
        }
        assert_eq!(prev, 64);
        assert!(vol.slice(1).count(LabelCode::CALCIUM) <= 2);
    }

    #[test]
    fn plan_validation() {
        assert!(InterpolationPlan {
            frame_z_um: vec![0.0, 0.0],
            target_spacing_um: 20.0
        }
        .validate()
        .is_err());
        assert!(InterpolationPlan {
            frame_z_um: vec![0.0],
            target_spacing_um: 20.0
        }
        .validate()
        .is_err());
        let p = InterpolationPlan {
            frame_z_um: vec![0.0, 400.0, 810.0],
            target_spacing_um: 20.0,
        };
        p.validate().unwrap();
        assert_eq!(p.frame_indices(), vec![0, 20, 41]);
        assert_eq!(p.slices_between(1), 20);
    }
}
