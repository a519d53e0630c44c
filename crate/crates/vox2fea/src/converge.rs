//! Mesh-refinement ladder: the same layered volume meshed at successively
//! smaller inner-layer element volumes, solved with the built-in linear
//! solver and compared slice by slice against the finest rung.

use std::fmt::Write as _;
use std::fs;

use log::info;
use vox2fea_core::mesh::validate_mesh;
use vox2fea_core::mesher::{generate_tet_mesh_with, optimize_mesh_with};
use vox2fea_core::microfe::{
    convergence_report, slice_peaks, solve_model, ConvergenceReport, ProbeSlices, RungPeaks,
};
use vox2fea_core::{LabelCode, LabelVolume};

use crate::config::PipelineConfig;
use crate::pipeline::{build_linear_model, layered_volume};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RungSummary {
    pub inner_volume_voxels: f64,
    pub element_count: usize,
    /// Elements in the inner refinement layer.
    pub inner_layer_elements: usize,
    pub min_dihedral_deg: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub rungs: Vec<RungSummary>,
    pub peaks: Vec<RungPeaks>,
    pub report: ConvergenceReport,
}

impl ConvergenceRun {
    /// Errors of rung `i` against rung `i + 1`, per slice (stress %, strain %),
    /// with and without calcium.
    pub fn consecutive_errors(&self, i: usize) -> Result<ConvergenceReport> {
        Ok(convergence_report(&self.peaks[i..i + 2])?)
    }
}

/// Default probes: input frames at least the cap clearance from both ends,
/// or the middle slice when none qualifies.
pub fn default_probes(vol: &LabelVolume, cfg: &PipelineConfig) -> ProbeSlices {
    let sz = vol.spacing()[2];
    let half = if cfg.converge.probe_half_width_um > 0.0 {
        cfg.converge.probe_half_width_um
    } else {
        sz
    };
    if !cfg.converge.probe_slices_um.is_empty() {
        return ProbeSlices {
            z_um: cfg.converge.probe_slices_um.clone(),
            half_width_um: half,
        };
    }
    let length = (vol.dims()[2] - 1) as f64 * sz;
    let clear = cfg.converge.cap_clearance_um;
    let frames = vol
        .frame_positions()
        .map(<[usize]>::to_vec)
        .unwrap_or_default();
    let mut z_um: Vec<f64> = frames
        .iter()
        .map(|&z| z as f64 * sz)
        .filter(|&z| z >= clear && z <= length - clear)
        .collect();
    if z_um.is_empty() {
        z_um.push(length / 2.0);
    }
    z_um.dedup();
    ProbeSlices {
        z_um,
        half_width_um: half,
    }
}

/// Runs the ladder on an already layered volume.
pub fn converge_volume(layered: &LabelVolume, cfg: &PipelineConfig) -> Result<ConvergenceRun> {
    cfg.validate()?;
    let probes = default_probes(layered, cfg);
    let mut rungs = Vec::new();
    let mut peaks = Vec::new();
    for r in 0..cfg.converge.rungs {
        let inner = cfg.sizing.inner / cfg.converge.ratio.powi(r as i32);
        let mut sizing_cfg = cfg.sizing.clone();
        let scale = inner / cfg.sizing.inner;
        sizing_cfg.inner = inner;
        sizing_cfg.outer = cfg.sizing.outer.map(|v| v * scale);
        sizing_cfg.global = cfg.sizing.global.map(|v| v * scale);
        sizing_cfg.interface = cfg.sizing.interface.map(|v| v * scale);
        let mesh_cfg = cfg.mesh.to_core(sizing_cfg.to_core()?);
        let (mesh, _) = generate_tet_mesh_with(layered, &mesh_cfg)?;
        let mesh = if cfg.stages.optimize {
            optimize_mesh_with(&mesh, &cfg.optimize.to_core()).0
        } else {
            mesh
        };
        let report = validate_mesh(&mesh);
        if !report.is_valid() {
            return Err(Error::Validation(format!(
                "rung {r} produced an invalid mesh"
            )));
        }
        let model = build_linear_model(&mesh, cfg)?;
        let result = solve_model(&model, &cfg.solver.to_core())?;
        let p = slice_peaks(&model.mesh, &result, &probes);
        info!(
            "rung {r}: inner {inner:.3} voxel^3, {} elements, {} iterations",
            model.mesh.tets.len(),
            result.iterations
        );
        rungs.push(RungSummary {
            inner_volume_voxels: inner,
            element_count: model.mesh.tets.len(),
            inner_layer_elements: model
                .mesh
                .labels
                .iter()
                .filter(|&&l| l == LabelCode::INNER_REFINE)
                .count(),
            min_dihedral_deg: report.min_dihedral_deg,
            iterations: result.iterations,
        });
        peaks.push(p);
    }
    let report = convergence_report(&peaks)?;
    Ok(ConvergenceRun {
        rungs,
        peaks,
        report,
    })
}

/// Plain-text table of a ladder.
pub fn report_table(run: &ConvergenceRun) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "probe slices (um): {:?}, half width {} um",
        run.report.probes.z_um, run.report.probes.half_width_um
    );
    let _ = writeln!(
        s,
        "{:>4} {:>10} {:>10} {:>10} {:>8} {:>12} {:>12} {:>12} {:>12}",
        "rung",
        "inner_v3",
        "elements",
        "inner_el",
        "iters",
        "stress_%",
        "strain_%",
        "stress_nc_%",
        "strain_nc_%"
    );
    for (i, (r, e)) in run.rungs.iter().zip(&run.report.rungs).enumerate() {
        let _ = writeln!(
            s,
            "{:>4} {:>10.4} {:>10} {:>10} {:>8} {:>12.3} {:>12.3} {:>12.3} {:>12.3}",
            i,
            r.inner_volume_voxels,
            r.element_count,
            r.inner_layer_elements,
            r.iterations,
            e.mean_with_calcium.0,
            e.mean_with_calcium.1,
            e.mean_without_calcium.0,
            e.mean_without_calcium.1
        );
    }
    s
}

/// Delimited per-slice table: rung, slice, z, peaks and errors.
pub fn report_csv(run: &ConvergenceRun) -> String {
    let mut s = String::from(
        "rung,elements,slice,z_um,peak_stress_mpa,peak_strain,stress_err_pct,strain_err_pct,\
         peak_stress_nc_mpa,peak_strain_nc,stress_nc_err_pct,strain_nc_err_pct\n",
    );
    for (i, (p, e)) in run.peaks.iter().zip(&run.report.rungs).enumerate() {
        for (k, z) in p.probes.z_um.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i},{},{k},{z},{},{},{},{},{},{},{},{}",
                p.element_count,
                p.with_calcium[k].0,
                p.with_calcium[k].1,
                e.with_calcium[k].0,
                e.with_calcium[k].1,
                p.without_calcium[k].0,
                p.without_calcium[k].1,
                e.without_calcium[k].0,
                e.without_calcium[k].1
            );
        }
    }
    s
}

/// Builds the layered volume, runs the ladder and writes `convergence.txt`
/// and `convergence.csv` into the output directory.
pub fn run_convergence(cfg: &PipelineConfig) -> Result<ConvergenceRun> {
    cfg.validate()?;
    let layered = layered_volume(cfg)?;
    fs::create_dir_all(&cfg.output_dir).map_err(Error::io(&cfg.output_dir))?;
    let run = converge_volume(&layered, cfg)?;
    for (name, text) in [
        ("convergence.txt", report_table(&run)),
        ("convergence.csv", report_csv(&run)),
    ] {
        let path = cfg.output_dir.join(name);
        fs::write(&path, text).map_err(Error::io(&path))?;
    }
    Ok(run)
}
