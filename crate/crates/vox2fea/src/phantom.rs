//! Synthetic pullbacks with known geometry, written in the raw segmentation
//! palette (fibrous, mixed, lipid, calcium, background).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vox2fea_core::{Frame, LabelCode, LabelVolume};

use crate::labelmap::save_label_volume;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    Annulus,
    EccentricLipid,
    CalcifiedNodule,
    ConvergenceRegion,
}

impl PhantomKind {
    pub fn name(self) -> &'static str {
        match self {
            PhantomKind::Annulus => "annulus",
            PhantomKind::EccentricLipid => "eccentric-lipid",
            PhantomKind::CalcifiedNodule => "calcified-nodule",
            PhantomKind::ConvergenceRegion => "convergence-region",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomParams {
    pub pixel_um: f64,
    pub frame_gap_um: f64,
    pub frames: usize,
    /// Lumen radius at the first and last frame; linear in between.
    pub lumen_radius_um: [f64; 2],
    pub wall_thickness_um: f64,
    /// Background ring kept around the vessel.
    pub margin_um: f64,
    /// Tissue between lumen and lipid pool.
    pub lipid_cap_um: f64,
    pub lipid_thickness_um: f64,
    /// Half opening angle of the lipid crescent at the first and last frame.
    pub lipid_half_angle_deg: [f64; 2],
    /// Calcium disk radius at the first and last frame.
    pub calcium_radius_um: [f64; 2],
    /// Angular position of the calcium nodule.
    pub calcium_angle_deg: f64,
    /// Outer half of the wall between these angles is mixed tissue.
    pub mixed_sector_deg: [f64; 2],
    /// Adds small lipid and calcium specks inside the wall and a detached
    /// fibrous islet outside it.
    pub specks: bool,
}

impl Default for PhantomParams {
    fn default() -> Self {
        Self {
            pixel_um: 20.0,
            frame_gap_um: 400.0,
            frames: 3,
            lumen_radius_um: [1500.0, 1500.0],
            wall_thickness_um: 500.0,
            margin_um: 200.0,
            lipid_cap_um: 250.0,
            lipid_thickness_um: 400.0,
            lipid_half_angle_deg: [60.0, 60.0],
            calcium_radius_um: [200.0, 200.0],
            calcium_angle_deg: 180.0,
            mixed_sector_deg: [90.0, 150.0],
            specks: false,
        }
    }
}

impl PhantomParams {
    /// Defaults adjusted so each kind's inclusions fit in the wall.
    pub fn for_kind(kind: PhantomKind) -> Self {
        let base = Self::default();
        match kind {
            PhantomKind::Annulus => base,
            PhantomKind::EccentricLipid => Self {
                wall_thickness_um: 900.0,
                ..base
            },
            PhantomKind::CalcifiedNodule => Self {
                wall_thickness_um: 700.0,
                ..base
            },
            PhantomKind::ConvergenceRegion => Self {
                frames: 4,
                lumen_radius_um: [1400.0, 1600.0],
                wall_thickness_um: 1000.0,
                lipid_half_angle_deg: [40.0, 70.0],
                calcium_radius_um: [180.0, 240.0],
                ..base
            },
        }
    }

    pub fn validate(&self, kind: PhantomKind) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("phantom: {m}")));
        let positive = [
            ("pixel_um", self.pixel_um),
            ("frame_gap_um", self.frame_gap_um),
            ("wall_thickness_um", self.wall_thickness_um),
            (
                "lumen_radius_um",
                self.lumen_radius_um[0].min(self.lumen_radius_um[1]),
            ),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be > 0"));
            }
        }
        if self.frames < 2 {
            return bad("at least two frames are required".into());
        }
        if self.margin_um < 2.0 * self.pixel_um {
            return bad("margin must be at least two pixels".into());
        }
        if self.uses_lipid(kind) {
            if !(self.lipid_cap_um > 0.0 && self.lipid_thickness_um > 0.0) {
                return bad("lipid cap and thickness must be > 0".into());
            }
            if self.lipid_cap_um + self.lipid_thickness_um >= self.wall_thickness_um {
                return bad("lipid pool does not fit inside the wall".into());
            }
            if self
                .lipid_half_angle_deg
                .iter()
                .any(|&a| !(a > 0.0 && a < 180.0))
            {
                return bad("lipid half angle must lie in (0, 180)".into());
            }
        }
        if self.uses_calcium(kind) {
            let r = self.calcium_radius_um[0].max(self.calcium_radius_um[1]);
            if self.calcium_radius_um.iter().any(|&c| !(c > 0.0)) {
                return bad("calcium radius must be > 0".into());
            }
            if 2.0 * r >= self.wall_thickness_um {
                return bad("calcium nodule does not fit inside the wall".into());
            }
        }
        Ok(())
    }

    fn uses_lipid(&self, kind: PhantomKind) -> bool {
        matches!(
            kind,
            PhantomKind::EccentricLipid | PhantomKind::ConvergenceRegion
        )
    }

    fn uses_calcium(&self, kind: PhantomKind) -> bool {
        matches!(
            kind,
            PhantomKind::CalcifiedNodule | PhantomKind::ConvergenceRegion
        )
    }

    fn lerp(&self, v: [f64; 2], k: usize) -> f64 {
        let t = k as f64 / (self.frames - 1) as f64;
        v[0] + (v[1] - v[0]) * t
    }

    /// Pixels per frame side.
    pub fn frame_size(&self) -> usize {
        let r = self.lumen_radius_um[0].max(self.lumen_radius_um[1]) + self.wall_thickness_um;
        (2.0 * (r + self.margin_um) / self.pixel_um).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipidTruth {
    pub inner_radius_um: f64,
    pub outer_radius_um: f64,
    pub half_angle_deg: f64,
    pub cap_thickness_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalciumTruth {
    /// Centre in pixel coordinates (x, y).
    pub center_px: [f64; 2],
    pub radius_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub z_um: f64,
    pub lumen_radius_um: f64,
    pub outer_radius_um: f64,
    pub lipid: Option<LipidTruth>,
    pub calcium: Option<CalciumTruth>,
    /// Speck centres in pixel coordinates keyed by label name.
    pub specks: BTreeMap<String, [usize; 2]>,
    /// Voxel count per raw code.
    pub counts: BTreeMap<u8, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub kind: PhantomKind,
    pub params: PhantomParams,
    pub dims: [usize; 3],
    /// Vessel axis in pixel coordinates.
    pub center_px: [f64; 2],
    pub frames: Vec<FrameTruth>,
    pub counts: BTreeMap<u8, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    /// Raw frames stacked with the frame gap as z spacing.
    pub volume: LabelVolume,
    pub truth: GroundTruth,
}

impl Phantom {
    pub fn frames(&self) -> Vec<Frame> {
        (0..self.volume.dims()[2])
            .map(|z| self.volume.slice(z))
            .collect()
    }
}

fn angle_diff_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

pub fn generate_phantom(kind: PhantomKind, params: &PhantomParams) -> Result<Phantom> {
    params.validate(kind)?;
    let p = params;
    let n = p.frame_size();
    let c = n as f64 / 2.0;
    let mut voxels = Vec::with_capacity(n * n * p.frames);
    let mut frames = Vec::new();
    let mut total: BTreeMap<u8, usize> = BTreeMap::new();
    for k in 0..p.frames {
        let r_in = p.lerp(p.lumen_radius_um, k);
        let r_out = r_in + p.wall_thickness_um;
        let lipid = p.uses_lipid(kind).then(|| LipidTruth {
            inner_radius_um: r_in + p.lipid_cap_um,
            outer_radius_um: r_in + p.lipid_cap_um + p.lipid_thickness_um,
            half_angle_deg: p.lerp(p.lipid_half_angle_deg, k),
            cap_thickness_um: p.lipid_cap_um,
        });
        let calcium = p.uses_calcium(kind).then(|| {
            let rc = p.lerp(p.calcium_radius_um, k);
            // centre inside the wall so the nodule bulges into the lumen
            let d = (r_in + 0.7 * rc) / p.pixel_um;
            let a = p.calcium_angle_deg.to_radians();
            CalciumTruth {
                center_px: [c + d * a.cos(), c + d * a.sin()],
                radius_um: rc,
            }
        });
        let mut frame = vec![LabelCode::BACKGROUND; n * n];
        for y in 0..n {
            for x in 0..n {
                let dx = (x as f64 + 0.5 - c) * p.pixel_um;
                let dy = (y as f64 + 0.5 - c) * p.pixel_um;
                let r = dx.hypot(dy);
                let ang = dy.atan2(dx).to_degrees().rem_euclid(360.0);
                let mut l = LabelCode::BACKGROUND;
                if r >= r_in && r < r_out {
                    l = LabelCode::FIBROUS;
                    let mid = r_in + 0.5 * p.wall_thickness_um;
                    if r >= mid && ang >= p.mixed_sector_deg[0] && ang < p.mixed_sector_deg[1] {
                        l = LabelCode::MIXED;
                    }
                }
                if let Some(lp) = &lipid {
                    if r >= lp.inner_radius_um
                        && r < lp.outer_radius_um
                        && angle_diff_deg(ang, 0.0) <= lp.half_angle_deg
                    {
                        l = LabelCode::LIPID;
                    }
                }
                if let Some(ca) = &calcium {
                    let ex = (x as f64 + 0.5 - ca.center_px[0]) * p.pixel_um;
                    let ey = (y as f64 + 0.5 - ca.center_px[1]) * p.pixel_um;
                    if ex.hypot(ey) < ca.radius_um {
                        l = LabelCode::CALCIUM;
                    }
                }
                frame[y * n + x] = l;
            }
        }
        let mut specks = BTreeMap::new();
        if p.specks {
            let at = |r: f64, deg: f64| {
                let a = PI * deg / 180.0;
                [
                    (c + r / p.pixel_um * a.cos()) as usize,
                    (c + r / p.pixel_um * a.sin()) as usize,
                ]
            };
            let mid = r_in + 0.5 * p.wall_thickness_um;
            let items = [
                (LabelCode::LIPID, at(mid, 270.0), 3usize),
                (LabelCode::CALCIUM, at(mid, 300.0), 3),
                (LabelCode::FIBROUS, at(r_out + 0.5 * p.margin_um, 45.0), 4),
            ];
            for (label, [sx, sy], side) in items {
                for y in sy..sy + side {
                    for x in sx..sx + side {
                        if x < n && y < n {
                            frame[y * n + x] = label;
                        }
                    }
                }
                specks.insert(label.name().to_string(), [sx, sy]);
            }
        }
        let mut counts = BTreeMap::new();
        for l in &frame {
            *counts.entry(l.0).or_insert(0) += 1;
            *total.entry(l.0).or_insert(0) += 1;
        }
        voxels.extend_from_slice(&frame);
        frames.push(FrameTruth {
            z_um: k as f64 * p.frame_gap_um,
            lumen_radius_um: r_in,
            outer_radius_um: r_out,
            lipid,
            calcium,
            specks,
            counts,
        });
    }
    let dims = [n, n, p.frames];
    let mut volume = LabelVolume::new(dims, [p.pixel_um, p.pixel_um, p.frame_gap_um], voxels)?;
    volume.set_frame_positions(Some((0..p.frames).collect()));
    Ok(Phantom {
        volume,
        truth: GroundTruth {
            kind,
            params: params.clone(),
            dims,
            center_px: [c, c],
            frames,
            counts: total,
        },
    })
}

/// Writes `<stem>.json`, `<stem>.raw` and `<stem>.truth.json` into `dir`.
pub fn write_phantom(phantom: &Phantom, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let (json, raw) = save_label_volume(&phantom.volume, &dir.join(stem))?;
    let truth = dir.join(format!("{stem}.truth.json"));
    let text = serde_json::to_string_pretty(&phantom.truth).expect("truth serializes");
    fs::write(&truth, text + "\n").map_err(Error::io(&truth))?;
    Ok(vec![json, raw, truth])
}
