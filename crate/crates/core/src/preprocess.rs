//! Anatomical rectification of labeled frames, and refinement-layer
//! construction on the interpolated volume.
//!
//! Per-frame order: [`pool_labels`] → [`isolate_lumen`] →
//! [`filter_small_components`] → [`enforce_lipid_cap`] →
//! [`enforce_wall_thickness`]; see [`preprocess_frame`].

use alloc::format;
use alloc::vec::Vec;

use crate::components::{frame_components, label_mask, Connectivity};
use crate::edt::squared_edt;
use crate::label::LabelCode;
use crate::volume::{Frame, LabelVolume};
use crate::{Error, Result, Warnings};

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub min_component_area_px: usize,
    pub min_wall_thickness_um: f64,
    pub lipid_cap_thickness_um: f64,
    pub inner_refine_radius_um: f64,
    pub outer_refine_radius_um: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            min_component_area_px: 150,
            min_wall_thickness_um: 500.0,
            lipid_cap_thickness_um: 200.0,
            inner_refine_radius_um: 200.0,
            outer_refine_radius_um: 200.0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("min_wall_thickness_um", self.min_wall_thickness_um),
            ("lipid_cap_thickness_um", self.lipid_cap_thickness_um),
            ("inner_refine_radius_um", self.inner_refine_radius_um),
            ("outer_refine_radius_um", self.outer_refine_radius_um),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.min_component_area_px == 0 {
            return Err(Error::InvalidConfig(
                "min_component_area_px must be > 0".into(),
            ));
        }
        Ok(())
    }
}

// Distances are compared against physical thresholds; allow for rounding in
// the squared-distance sums.
const DIST_EPS: f64 = 1e-6;

/// Maps fibrous and mixed tissue to wall. Accepts only raw segmentation codes.
pub fn pool_labels(frame: &Frame) -> Result<Frame> {
    let mut out = frame.clone();
    for v in out.data.iter_mut() {
        *v = match *v {
            LabelCode::BACKGROUND | LabelCode::LIPID | LabelCode::CALCIUM => *v,
            LabelCode::FIBROUS | LabelCode::MIXED => LabelCode::WALL,
            other => return Err(Error::UnknownLabel(other.0)),
        };
    }
    Ok(out)
}

/// Relabels the enclosed background region as lumen.
///
/// The exterior is the largest background component touching the frame edge
/// (the largest component overall when none touches the edge); the lumen is
/// the largest remaining background component. Further enclosed cavities stay
/// background and are reported. A frame that already contains lumen is
/// returned unchanged.
pub fn isolate_lumen(frame: &Frame) -> Result<(Frame, Warnings)> {
    let mut warnings = Warnings::new();
    if frame.data.contains(&LabelCode::LUMEN) {
        return Ok((frame.clone(), warnings));
    }
    let cc = frame_components(frame, LabelCode::BACKGROUND);
    if cc.count() < 2 {
        return Err(Error::NoLumen);
    }
    let (nx, ny) = (frame.nx, frame.ny);
    let mut touches_edge = alloc::vec![false; cc.count()];
    for y in 0..ny {
        for x in 0..nx {
            if x == 0 || y == 0 || x + 1 == nx || y + 1 == ny {
                let id = cc.ids[x + nx * y];
                if id != 0 {
                    touches_edge[id as usize - 1] = true;
                }
            }
        }
    }
    let ordered = cc.sizes_descending();
    let exterior = ordered
        .iter()
        .find(|(id, _)| touches_edge[*id as usize - 1])
        .unwrap_or(&ordered[0])
        .0;
    let enclosed: Vec<(u32, usize)> = ordered
        .iter()
        .copied()
        .filter(|(id, _)| *id != exterior && !touches_edge[*id as usize - 1])
        .collect();
    let Some(&(lumen_id, _)) = enclosed.first() else {
        return Err(Error::NoLumen);
    };
    for &(id, size) in &enclosed[1..] {
        warnings.push(format!(
            "enclosed background cavity {id} ({size} px) left as background"
        ));
    }
    let mut out = frame.clone();
    for (v, &id) in out.data.iter_mut().zip(&cc.ids) {
        if id == lumen_id {
            *v = LabelCode::LUMEN;
        }
    }
    Ok((out, warnings))
}

/// Absorbs wall and lipid components smaller than the configured area into
/// the most common label around them. Calcium is never filtered. Repeats
/// until no small wall or lipid component remains.
pub fn filter_small_components(frame: &Frame, cfg: &PreprocessConfig) -> Frame {
    let mut out = frame.clone();
    let (nx, ny) = (out.nx, out.ny);
    loop {
        let mut changed = false;
        for label in [LabelCode::WALL, LabelCode::LIPID] {
            let cc = frame_components(&out, label);
            let members = cc.members();
            let mut small: Vec<(usize, usize)> = cc
                .sizes
                .iter()
                .enumerate()
                .filter(|(_, &s)| s < cfg.min_component_area_px)
                .map(|(i, &s)| (s, i))
                .collect();
            small.sort_unstable();
            for (_, comp) in small {
                let mut votes = [0usize; 256];
                for &i in &members[comp] {
                    let (x, y) = ((i % nx) as isize, (i / nx) as isize);
                    for dy in -1isize..=1 {
                        for dx in -1isize..=1 {
                            let (xx, yy) = (x + dx, y + dy);
                            if xx < 0 || yy < 0 || xx >= nx as isize || yy >= ny as isize {
                                continue;
                            }
                            let j = xx as usize + nx * yy as usize;
                            let l = out.data[j];
                            if l != label {
                                votes[l.0 as usize] += 1;
                            }
                        }
                    }
                }
                let winner = (0..256usize).filter(|&c| votes[c] > 0).max_by(|&a, &b| {
                    votes[a]
                        .cmp(&votes[b])
                        .then(
                            LabelCode(a as u8)
                                .priority()
                                .cmp(&LabelCode(b as u8).priority()),
                        )
                        .then(b.cmp(&a))
                });
                if let Some(w) = winner {
                    for &i in &members[comp] {
                        out.data[i] = LabelCode(w as u8);
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

fn lumen_distance(frame: &Frame) -> Option<Vec<f64>> {
    let seeds = frame.mask(LabelCode::LUMEN);
    if !seeds.iter().any(|&s| s) {
        return None;
    }
    let dt = squared_edt(&seeds, &[frame.nx, frame.ny], &frame.spacing);
    Some(dt.sq_dist.iter().map(|&d| libm::sqrt(d)).collect())
}

/// Converts lipid within the cap thickness of the lumen to wall.
pub fn enforce_lipid_cap(frame: &Frame, cfg: &PreprocessConfig) -> Frame {
    let mut out = frame.clone();
    let Some(dist) = lumen_distance(frame) else {
        return out;
    };
    for (v, &d) in out.data.iter_mut().zip(&dist) {
        if *v == LabelCode::LIPID && d <= cfg.lipid_cap_thickness_um + DIST_EPS {
            *v = LabelCode::WALL;
        }
    }
    out
}

/// Grows tissue outward so that every point within the minimum thickness of
/// the lumen is tissue. Only background voxels change (to wall); the lumen
/// and existing tissue are untouched.
pub fn enforce_wall_thickness(frame: &Frame, cfg: &PreprocessConfig) -> Frame {
    let mut out = frame.clone();
    let Some(dist) = lumen_distance(frame) else {
        return out;
    };
    for (v, &d) in out.data.iter_mut().zip(&dist) {
        if *v == LabelCode::BACKGROUND && d <= cfg.min_wall_thickness_um + DIST_EPS {
            *v = LabelCode::WALL;
        }
    }
    out
}

/// Runs the per-frame rectification chain on a raw segmented frame.
pub fn preprocess_frame(frame: &Frame, cfg: &PreprocessConfig) -> Result<(Frame, Warnings)> {
    cfg.validate()?;
    let pooled = pool_labels(frame)?;
    let (isolated, warnings) = isolate_lumen(&pooled)?;
    let filtered = filter_small_components(&isolated, cfg);
    // The cap can leave lipid slivers below the area threshold.
    let capped = filter_small_components(&enforce_lipid_cap(&filtered, cfg), cfg);
    Ok((enforce_wall_thickness(&capped, cfg), warnings))
}

/// Marks wall voxels near calcium, lipid or lumen as the inner refinement
/// layer (code 5) and the next shell as the outer layer (code 6).
pub fn build_refinement_layers(vol: &LabelVolume, cfg: &PreprocessConfig) -> LabelVolume {
    let seeds: Vec<bool> = vol
        .voxels()
        .iter()
        .map(|&v| matches!(v, LabelCode::CALCIUM | LabelCode::LIPID | LabelCode::LUMEN))
        .collect();
    let mut out = vol.clone();
    if !seeds.iter().any(|&s| s) {
        return out;
    }
    let dt = squared_edt(&seeds, &vol.dims(), &vol.spacing());
    let r_in = cfg.inner_refine_radius_um + DIST_EPS;
    let r_out = cfg.inner_refine_radius_um + cfg.outer_refine_radius_um + DIST_EPS;
    let (r_in2, r_out2) = (r_in * r_in, r_out * r_out);
    for (v, &d2) in out.voxels_mut().iter_mut().zip(&dt.sq_dist) {
        if *v == LabelCode::WALL {
            if d2 <= r_in2 {
                *v = LabelCode::INNER_REFINE;
            } else if d2 <= r_out2 {
                *v = LabelCode::OUTER_REFINE;
            }
        }
    }
    out
}

/// Count of connected components of `label` (8-connected) smaller than `min`.
pub fn small_component_count(frame: &Frame, label: LabelCode, min: usize) -> usize {
    let cc = label_mask(
        &frame.mask(label),
        [frame.nx, frame.ny, 1],
        Connectivity::Planar8,
    );
    cc.sizes.iter().filter(|&&s| s < min).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = 20.0;

    fn disk_frame(n: usize, c: f64, r_in: f64, r_out: f64, tissue: LabelCode) -> Frame {
        let mut f = Frame::filled(n, n, [S, S], LabelCode::BACKGROUND);
        for y in 0..n {
            for x in 0..n {
                let r = libm::hypot(x as f64 - c, y as f64 - c);
                if r >= r_in && r <= r_out {
                    f.set(x, y, tissue);
                }
            }
        }
        f
    }

    #[test]
    fn pooling() {
        let mut f = Frame::filled(4, 4, [S, S], LabelCode::FIBROUS);
        let pooled = pool_labels(&f).unwrap();
        assert!(pooled.data.iter().all(|&v| v == LabelCode::WALL));
        for i in 0..16 {
            if (i % 4 + i / 4) % 2 == 0 {
                f.data[i] = LabelCode::MIXED;
            }
        }
        f.data[5] = LabelCode::LIPID;
        let pooled = pool_labels(&f).unwrap();
        assert_eq!(pooled.data[5], LabelCode::LIPID);
        assert_eq!(pooled.count(LabelCode::WALL), 15);
        f.data[0] = LabelCode::LUMEN;
        assert_eq!(pool_labels(&f), Err(Error::UnknownLabel(4)));
    }

    #[test]
    fn annulus_lumen() {
        let f = disk_frame(41, 20.0, 8.0, 14.0, LabelCode::WALL);
        let (out, w) = isolate_lumen(&f).unwrap();
        assert!(w.is_empty());
        assert_eq!(out.get(20, 20), LabelCode::LUMEN);
        assert_eq!(out.get(0, 0), LabelCode::BACKGROUND);
        let lumen = frame_components(&out, LabelCode::LUMEN);
        assert_eq!(lumen.count(), 1);
        // idempotent
        assert_eq!(isolate_lumen(&out).unwrap().0, out);
    }

    #[test]
    fn two_cavities_keeps_larger() {
        // wall block with a 50 px and a 20 px cavity
        let mut f = Frame::filled(40, 20, [S, S], LabelCode::BACKGROUND);
        for y in 2..18 {
            for x in 2..38 {
                f.set(x, y, LabelCode::WALL);
            }
        }
        for y in 5..10 {
            for x in 5..15 {
                f.set(x, y, LabelCode::BACKGROUND); // 50
            }
        }
        for y in 5..9 {
            for x in 25..30 {
                f.set(x, y, LabelCode::BACKGROUND); // 20
            }
        }
        let (out, w) = isolate_lumen(&f).unwrap();
        assert_eq!(out.count(LabelCode::LUMEN), 50);
        assert_eq!(out.get(26, 6), LabelCode::BACKGROUND);
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("20 px"));
    }

    #[test]
    fn solid_disk_has_no_lumen() {
        let f = disk_frame(21, 10.0, 0.0, 8.0, LabelCode::WALL);
        assert_eq!(isolate_lumen(&f).unwrap_err(), Error::NoLumen);
    }

    fn wall_with_speck(label: LabelCode, size: (usize, usize)) -> Frame {
        let mut f = Frame::filled(40, 40, [S, S], LabelCode::WALL);
        for y in 10..10 + size.1 {
            for x in 10..10 + size.0 {
                f.set(x, y, label);
            }
        }
        f
    }

    #[test]
    fn small_lipid_absorbed_calcium_kept() {
        let cfg = PreprocessConfig::default();
        let f = wall_with_speck(LabelCode::LIPID, (5, 2));
        let out = filter_small_components(&f, &cfg);
        assert_eq!(out.count(LabelCode::LIPID), 0);
        let f = wall_with_speck(LabelCode::CALCIUM, (5, 2));
        assert_eq!(filter_small_components(&f, &cfg), f);
    }

    #[test]
    fn threshold_is_strict() {
        let cfg = PreprocessConfig::default();
        let f = wall_with_speck(LabelCode::LIPID, (15, 10));
        assert_eq!(f.count(LabelCode::LIPID), 150);
        assert_eq!(filter_small_components(&f, &cfg), f);
        let mut f = wall_with_speck(LabelCode::LIPID, (15, 10));
        f.set(10, 10, LabelCode::WALL);
        assert_eq!(filter_small_components(&f, &cfg).count(LabelCode::LIPID), 0);
    }

    #[test]
    fn filter_is_idempotent() {
        let cfg = PreprocessConfig::default();
        let mut f = disk_frame(60, 30.0, 10.0, 25.0, LabelCode::WALL);
        for y in 5..9 {
            for x in 28..33 {
                f.set(x, y, LabelCode::LIPID);
            }
        }
        f.set(30, 45, LabelCode::CALCIUM);
        let (f, _) = isolate_lumen(&f).unwrap();
        let once = filter_small_components(&f, &cfg);
        assert_eq!(filter_small_components(&once, &cfg), once);
        assert_eq!(once.count(LabelCode::CALCIUM), 1);
        assert_eq!(once.count(LabelCode::LIPID), 0);
    }

    /// Tissue thickness measured by marching along rays from the lumen centre.
    fn ray_thickness(f: &Frame, c: f64, angle: f64) -> f64 {
        let (dx, dy) = (libm::cos(angle), libm::sin(angle));
        let step = 0.05;
        let mut t = 0.0;
        let mut thickness = 0.0;
        let mut left_lumen = false;
        loop {
            let x = libm::round(c + t * dx);
            let y = libm::round(c + t * dy);
            if x < 0.0 || y < 0.0 || x >= f.nx as f64 || y >= f.ny as f64 {
                break;
            }
            let l = f.get(x as usize, y as usize);
            if l == LabelCode::LUMEN {
                t += step;
                continue;
            }
            if l == LabelCode::BACKGROUND {
                if left_lumen {
                    break;
                }
            } else {
                left_lumen = true;
                thickness += step;
            }
            t += step;
        }
        thickness * S
    }

    #[test]
    fn thin_annulus_thickened_to_bound() {
        let cfg = PreprocessConfig::default();
        // r_in 1.5 mm (75 voxels) would be large; scale: lumen 20 px, wall 15 px (300 µm)
        let f = disk_frame(120, 60.0, 20.0, 35.0, LabelCode::WALL);
        let (f, _) = isolate_lumen(&f).unwrap();
        let out = enforce_wall_thickness(&f, &cfg);
        for k in 0..72 {
            let a = k as f64 * core::f64::consts::PI / 36.0;
            let t = ray_thickness(&out, 60.0, a);
            assert!(t >= 500.0 - S * core::f64::consts::SQRT_2, "angle {k}: {t}");
        }
        assert_eq!(enforce_wall_thickness(&out, &cfg), out);
    }

    #[test]
    fn thick_wall_unchanged() {
        let cfg = PreprocessConfig::default();
        let f = disk_frame(120, 60.0, 20.0, 50.0, LabelCode::WALL);
        let (f, _) = isolate_lumen(&f).unwrap();
        assert_eq!(enforce_wall_thickness(&f, &cfg), f);
    }

    #[test]
    fn thin_sector_only() {
        let cfg = PreprocessConfig::default();
        let c = 60.0;
        let mut f = disk_frame(120, c, 20.0, 50.0, LabelCode::WALL);
        // carve a 30 degree sector down to 100 µm (5 px)
        for y in 0..120 {
            for x in 0..120 {
                let (dx, dy) = (x as f64 - c, y as f64 - c);
                let r = libm::hypot(dx, dy);
                let a = libm::atan2(dy, dx).to_degrees();
                if (-15.0..=15.0).contains(&a) && r > 25.0 && r <= 50.0 {
                    f.set(x, y, LabelCode::BACKGROUND);
                }
            }
        }
        let (f, _) = isolate_lumen(&f).unwrap();
        assert!(ray_thickness(&f, c, 0.0) < 150.0);
        let out = enforce_wall_thickness(&f, &cfg);
        for k in -40..=40 {
            let a = (k as f64).to_radians();
            let before = ray_thickness(&f, c, a);
            let after = ray_thickness(&out, c, a);
            assert!(after >= 500.0 - S * core::f64::consts::SQRT_2);
            if !(-20..=20).contains(&k) {
                assert_eq!(before, after, "angle {k} changed");
            }
        }
        let changed: Vec<usize> = (0..f.len()).filter(|&i| f.data[i] != out.data[i]).collect();
        for i in changed {
            let (dx, dy) = ((i % 120) as f64 - c, (i / 120) as f64 - c);
            let a = libm::atan2(dy, dx).to_degrees();
            assert!(a.abs() <= 20.0, "voxel at {a} degrees changed");
        }
    }

    #[test]
    fn lipid_cap() {
        let cfg = PreprocessConfig::default();
        // all-lipid wall around a lumen of radius 20 px
        let f = disk_frame(120, 60.0, 20.0, 50.0, LabelCode::LIPID);
        let (f, _) = isolate_lumen(&f).unwrap();
        let out = enforce_lipid_cap(&f, &cfg);
        let seeds = out.mask(LabelCode::LUMEN);
        let dt = squared_edt(&seeds, &[120, 120], &[S, S]);
        for i in 0..out.len() {
            let d = libm::sqrt(dt.sq_dist[i]);
            match f.data[i] {
                LabelCode::LIPID if d <= 200.0 => assert_eq!(out.data[i], LabelCode::WALL),
                other => assert_eq!(out.data[i], other),
            }
        }
        assert!(out.count(LabelCode::LIPID) > 0);
        assert_eq!(enforce_lipid_cap(&out, &cfg), out);
    }

    #[test]
    fn deep_lipid_untouched() {
        let cfg = PreprocessConfig::default();
        let c = 60.0;
        let mut f = disk_frame(120, c, 20.0, 50.0, LabelCode::WALL);
        // lipid starting 15 px (300 µm) from the lumen
        for y in 0..120 {
            for x in 0..120 {
                let r = libm::hypot(x as f64 - c, y as f64 - c);
                if r > 20.0 + 15.5 && r < 45.0 && x > 60 {
                    f.set(x, y, LabelCode::LIPID);
                }
            }
        }
        let (f, _) = isolate_lumen(&f).unwrap();
        assert_eq!(enforce_lipid_cap(&f, &cfg), f);
    }

    #[test]
    fn preprocess_chain_preserves_calcium() {
        let cfg = PreprocessConfig::default();
        let mut f = disk_frame(120, 60.0, 20.0, 30.0, LabelCode::FIBROUS);
        f.set(60, 35, LabelCode::CALCIUM);
        f.set(60, 36, LabelCode::MIXED);
        let (out, _) = preprocess_frame(&f, &cfg).unwrap();
        assert_eq!(out.get(60, 35), LabelCode::CALCIUM);
        assert_eq!(out.count(LabelCode::CALCIUM), 1);
        let (again, _) = preprocess_frame(&pool_back(&out), &cfg).unwrap();
        assert_eq!(again, out);
    }

    // preprocess_frame expects raw codes; map lumen back to background
    fn pool_back(f: &Frame) -> Frame {
        let mut g = f.clone();
        for v in g.data.iter_mut() {
            if *v == LabelCode::LUMEN {
                *v = LabelCode::BACKGROUND;
            }
        }
        g
    }

    fn brute_layers(vol: &LabelVolume, cfg: &PreprocessConfig) -> Vec<LabelCode> {
        let [nx, ny, nz] = vol.dims();
        let s = vol.spacing();
        let seeds: Vec<[usize; 3]> = (0..vol.len())
            .filter(|&i| {
                matches!(
                    vol.voxels()[i],
                    LabelCode::CALCIUM | LabelCode::LIPID | LabelCode::LUMEN
                )
            })
            .map(|i| vol.coords(i))
            .collect();
        let mut out = vol.voxels().to_vec();
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let i = vol.index(x, y, z);
                    if out[i] != LabelCode::WALL {
                        continue;
                    }
                    let d = seeds
                        .iter()
                        .map(|p| {
                            let dx = (p[0] as f64 - x as f64) * s[0];
                            let dy = (p[1] as f64 - y as f64) * s[1];
                            let dz = (p[2] as f64 - z as f64) * s[2];
                            libm::sqrt(dx * dx + dy * dy + dz * dz)
                        })
                        .fold(f64::INFINITY, f64::min);
                    if d <= cfg.inner_refine_radius_um + 1e-9 {
                        out[i] = LabelCode::INNER_REFINE;
                    } else if d <= cfg.inner_refine_radius_um + cfg.outer_refine_radius_um + 1e-9 {
                        out[i] = LabelCode::OUTER_REFINE;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn calcium_sphere_shells() {
        let cfg = PreprocessConfig::default();
        let n = 41;
        let mut vol = LabelVolume::filled([n, n, n], [S; 3], LabelCode::WALL).unwrap();
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let r = libm::sqrt(
                        (x as f64 - 20.0).powi(2)
                            + (y as f64 - 20.0).powi(2)
                            + (z as f64 - 20.0).powi(2),
                    );
                    if r <= 3.0 {
                        vol.set(x, y, z, LabelCode::CALCIUM);
                    }
                }
            }
        }
        let out = build_refinement_layers(&vol, &cfg);
        assert_eq!(out.voxels(), brute_layers(&vol, &cfg).as_slice());
        // along +x: calcium to r=3, inner to r=13, outer to r=23 (clipped by grid)
        assert_eq!(out.get(23, 20, 20), LabelCode::CALCIUM);
        assert_eq!(out.get(33, 20, 20), LabelCode::INNER_REFINE);
        assert_eq!(out.get(34, 20, 20), LabelCode::OUTER_REFINE);
        assert_eq!(out.get(20, 20, 0), LabelCode::OUTER_REFINE);
        assert_eq!(out.get(0, 0, 0), LabelCode::WALL);
        assert_eq!(build_refinement_layers(&out, &cfg), out);
    }

    #[test]
    fn nearby_calcifications_merge() {
        let cfg = PreprocessConfig::default();
        let mut vol = LabelVolume::filled([30, 9, 9], [S; 3], LabelCode::WALL).unwrap();
        // two voxels 100 µm (5 voxels) apart
        vol.set(10, 4, 4, LabelCode::CALCIUM);
        vol.set(15, 4, 4, LabelCode::CALCIUM);
        let out = build_refinement_layers(&vol, &cfg);
        assert_eq!(out.voxels(), brute_layers(&vol, &cfg).as_slice());
        for x in 11..15 {
            assert_eq!(out.get(x, 4, 4), LabelCode::INNER_REFINE);
        }
        let cc = crate::components::connected_components(
            &out,
            LabelCode::INNER_REFINE,
            Connectivity::Volume26,
        );
        assert_eq!(cc.count(), 1);
    }

    #[test]
    fn no_inclusions_only_lumen_shells() {
        let cfg = PreprocessConfig::default();
        let mut vol = LabelVolume::filled([30, 5, 5], [S; 3], LabelCode::WALL).unwrap();
        for z in 0..5 {
            for y in 0..5 {
                vol.set(0, y, z, LabelCode::LUMEN);
            }
        }
        let out = build_refinement_layers(&vol, &cfg);
        assert_eq!(out.get(10, 2, 2), LabelCode::INNER_REFINE);
        assert_eq!(out.get(11, 2, 2), LabelCode::OUTER_REFINE);
        assert_eq!(out.get(20, 2, 2), LabelCode::OUTER_REFINE);
        assert_eq!(out.get(21, 2, 2), LabelCode::WALL);
    }
}
