//! End-to-end run: preprocess, interpolate, refinement layers, mesh,
//! optimize, optional quadratic elevation, export and optional verification.
//!
//! Each stage writes its artifacts into the output directory and records a
//! key (hash of its upstream key and config section) under `cache/`. A rerun
//! whose key and artifact hashes still match reloads the artifacts instead of
//! recomputing them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vox2fea_core::interpolate::{interpolate_pullback, InterpolationPlan};
use vox2fea_core::mesher::{
    check_fidelity, generate_tet_mesh_with, optimize_mesh_with, to_quadratic,
};
use vox2fea_core::microfe::{solve_model, SolveResult};
use vox2fea_core::preprocess::{build_refinement_layers, preprocess_frame};
use vox2fea_core::{
    mesh::validate_mesh, FeaModel, Frame, LabelCode, LabelVolume, QualityReport, TetMesh,
};

use crate::config::PipelineConfig;
use crate::inp::inp_string;
use crate::labelmap::{labelmap_paths, load_label_volume, save_label_volume};
use crate::mesh_io::{load_mesh, mesh_to_json, mesh_to_vtk};
use crate::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_parts(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes") + "\n"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestStage {
    pub name: String,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub input_sha256: String,
    pub config_sha256: String,
    pub seed: u64,
    pub stages: Vec<ManifestStage>,
    pub files: Vec<ManifestFile>,
}

/// Quality and fidelity of the optimized mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub element_count: usize,
    pub node_count: usize,
    pub min_dihedral_deg: f64,
    pub median_dihedral_deg: f64,
    pub inverted_elements: usize,
    pub non_conformal_faces: usize,
    pub dangling_faces: usize,
    pub label_counts: BTreeMap<String, usize>,
    pub label_volumes_um3: BTreeMap<String, f64>,
    pub hausdorff_voxels: f64,
    pub volume_error: BTreeMap<String, f64>,
}

impl QualitySummary {
    pub fn new(report: &QualityReport, mesh: &TetMesh, vol: &LabelVolume) -> Self {
        let fid = check_fidelity(mesh, vol);
        let named = |m: &BTreeMap<LabelCode, f64>| {
            m.iter().map(|(l, v)| (l.name().to_string(), *v)).collect()
        };
        Self {
            element_count: report.element_count,
            node_count: report.node_count,
            min_dihedral_deg: report.min_dihedral_deg,
            median_dihedral_deg: report.median_dihedral_deg,
            inverted_elements: report.inverted_elements,
            non_conformal_faces: report.non_conformal_faces,
            dangling_faces: report.dangling_faces,
            label_counts: report
                .label_counts
                .iter()
                .map(|(l, c)| (l.name().to_string(), *c))
                .collect(),
            label_volumes_um3: named(&report.label_volumes),
            hausdorff_voxels: fid.hausdorff_voxels,
            volume_error: named(&fid.volume_error),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.inverted_elements == 0 && self.non_conformal_faces == 0 && self.dangling_faces == 0
    }
}

/// Peaks of a verification solve, in MPa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub iterations: usize,
    pub relative_residual: f64,
    pub peak_von_mises_mpa: f64,
    pub peak_von_mises_element: usize,
    pub peak_principal_strain: f64,
    pub peak_principal_strain_element: usize,
    pub peak_von_mises_without_calcium_mpa: f64,
    pub peak_principal_strain_without_calcium: f64,
    pub max_displacement_mm: f64,
}

impl VerifySummary {
    pub fn new(mesh: &TetMesh, r: &SolveResult) -> Self {
        let mut wo = (0.0f64, 0.0f64);
        for e in 0..mesh.tets.len() {
            if mesh.labels[e] != LabelCode::CALCIUM {
                wo.0 = wo.0.max(r.von_mises[e]);
                wo.1 = wo.1.max(r.max_principal_strain[e]);
            }
        }
        let max_u = r
            .displacements
            .iter()
            .map(|u| (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt())
            .fold(0.0, f64::max);
        Self {
            iterations: r.iterations,
            relative_residual: r.relative_residual,
            peak_von_mises_mpa: r.peak_von_mises.0,
            peak_von_mises_element: r.peak_von_mises.1 + 1,
            peak_principal_strain: r.peak_principal_strain.0,
            peak_principal_strain_element: r.peak_principal_strain.1 + 1,
            peak_von_mises_without_calcium_mpa: wo.0,
            peak_principal_strain_without_calcium: wo.1,
            max_displacement_mm: max_u,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub output_dir: PathBuf,
    pub preprocessed: LabelVolume,
    pub interpolated: LabelVolume,
    pub layered: LabelVolume,
    /// Optimized mesh, lumen included.
    pub mesh: TetMesh,
    pub quality: QualitySummary,
    pub model: FeaModel,
    pub inp_path: PathBuf,
    pub verify: Option<VerifySummary>,
    pub manifest: Manifest,
    /// Stages reloaded from the cache.
    pub cached: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct CacheRecord {
    key: String,
    files: BTreeMap<String, String>,
}

/// Stage bookkeeping for one run.
struct Runner {
    dir: PathBuf,
    stages: Vec<ManifestStage>,
    files: BTreeMap<String, String>,
    cached: Vec<String>,
}

impl Runner {
    fn cache_path(&self, stage: &str) -> PathBuf {
        self.dir.join("cache").join(format!("{stage}.json"))
    }

    /// True when the stage's artifacts are present and current.
    fn is_fresh(&self, stage: &str, key: &str) -> bool {
        let Ok(text) = fs::read_to_string(self.cache_path(stage)) else {
            return false;
        };
        let Ok(rec) = serde_json::from_str::<CacheRecord>(&text) else {
            return false;
        };
        rec.key == key
            && rec.files.iter().all(|(name, hash)| {
                fs::read(self.dir.join(name)).is_ok_and(|b| sha256_hex(&b) == *hash)
            })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(Error::io(&path))?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn record(&mut self, stage: &str, key: &str, outputs: &[&str]) -> Result<()> {
        let mut files = BTreeMap::new();
        for &name in outputs {
            let path = self.dir.join(name);
            let bytes = fs::read(&path).map_err(Error::io(&path))?;
            let hash = sha256_hex(&bytes);
            self.files.insert(name.to_string(), hash.clone());
            files.insert(name.to_string(), hash);
        }
        let rec = CacheRecord {
            key: key.to_string(),
            files,
        };
        let path = self.cache_path(stage);
        fs::write(&path, to_json(&rec)).map_err(Error::io(&path))?;
        self.stages.push(ManifestStage {
            name: stage.to_string(),
            key: key.to_string(),
        });
        Ok(())
    }

    /// Runs `compute` unless the stage is fresh; `load` reads its artifacts.
    fn stage<T>(
        &mut self,
        stage: &'static str,
        key: &str,
        outputs: &[&str],
        compute: impl FnOnce(&mut Self) -> Result<T>,
        load: impl FnOnce(&Self) -> Result<T>,
    ) -> Result<T> {
        let wrap = |e: Error| Error::Stage {
            stage,
            source: Box::new(e),
        };
        let value = if self.is_fresh(stage, key) {
            info!("stage {stage}: cached");
            self.cached.push(stage.to_string());
            load(self).map_err(wrap)?
        } else {
            info!("stage {stage}: running");
            compute(self).map_err(wrap)?
        };
        self.record(stage, key, outputs).map_err(wrap)?;
        Ok(value)
    }
}

fn warnings_text(w: &[String]) -> String {
    w.iter().map(|s| format!("{s}\n")).collect()
}

fn save_volume(r: &mut Runner, vol: &LabelVolume, stem: &str) -> Result<()> {
    let (json, raw) = save_label_volume(vol, &r.dir.join(stem))?;
    for p in [json, raw] {
        let bytes = fs::read(&p).map_err(Error::io(&p))?;
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        r.files.insert(name, sha256_hex(&bytes));
    }
    Ok(())
}

fn volume_outputs(stem: &str) -> [String; 2] {
    [format!("{stem}.json"), format!("{stem}.raw")]
}

/// Preprocesses every input frame.
pub fn preprocess_frames(
    input: &LabelVolume,
    cfg: &PipelineConfig,
) -> Result<(LabelVolume, Vec<String>)> {
    let pre = cfg.preprocess.to_core();
    let mut out = input.clone();
    let mut warnings = Vec::new();
    for z in 0..input.dims()[2] {
        let (frame, w) = preprocess_frame(&input.slice(z), &pre)?;
        warnings.extend(w.into_iter().map(|s| format!("frame {z}: {s}")));
        out.set_slice(z, &frame)?;
    }
    Ok((out, warnings))
}

/// Interpolates preprocessed frames to an isotropic volume.
pub fn interpolate_frames(
    pre: &LabelVolume,
    cfg: &PipelineConfig,
) -> Result<(LabelVolume, Vec<String>)> {
    let [sx, sy, sz] = pre.spacing();
    if sx != sy {
        return Err(Error::Config(format!(
            "in-plane spacing must be square, got {sx} x {sy}"
        )));
    }
    let positions: Vec<usize> = pre
        .frame_positions()
        .map(<[usize]>::to_vec)
        .unwrap_or_else(|| (0..pre.dims()[2]).collect());
    let target = match cfg.interpolation.target_spacing_um {
        t if t > 0.0 => t,
        _ => sx,
    };
    let plan = InterpolationPlan {
        frame_z_um: positions.iter().map(|&z| z as f64 * sz).collect(),
        target_spacing_um: target,
    };
    let frames: Vec<Frame> = positions.iter().map(|&z| pre.slice(z)).collect();
    let (vol, w) = interpolate_pullback(&frames, &plan, &cfg.interpolation.to_core()?)?;
    Ok((vol, w))
}

/// Input through refinement layers, without caching or artifacts.
pub fn layered_volume(cfg: &PipelineConfig) -> Result<LabelVolume> {
    let input = load_label_volume(&cfg.input)?;
    let (pre, _) = preprocess_frames(&input, cfg)?;
    let (vol, _) = interpolate_frames(&pre, cfg)?;
    Ok(build_refinement_layers(&vol, &cfg.preprocess.to_core()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(Error::io(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn section_key(upstream: &str, stage: &str, section: &impl Serialize) -> String {
    let cfg = serde_json::to_vec(section).expect("section serializes");
    hash_parts(&[stage.as_bytes(), upstream.as_bytes(), &cfg])
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Artifacts> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(dir.join("cache")).map_err(Error::io(&dir))?;
    let (json, raw) = labelmap_paths(&cfg.input);
    let input_hash = hash_parts(&[
        &fs::read(&json).map_err(Error::io(&json))?,
        &fs::read(&raw).map_err(Error::io(&raw))?,
    ]);
    let mut run = Runner {
        dir: dir.clone(),
        stages: Vec::new(),
        files: BTreeMap::new(),
        cached: Vec::new(),
    };

    let k1 = section_key(&input_hash, "preprocess", &cfg.preprocess);
    let out1 = volume_outputs("01_preprocessed");
    let preprocessed = run.stage(
        "preprocess",
        &k1,
        &[&out1[0], &out1[1], "01_preprocessed.warnings.txt"],
        |r| {
            let input = load_label_volume(&cfg.input)?;
            let (vol, w) = preprocess_frames(&input, cfg)?;
            for s in &w {
                warn!("{s}");
            }
            save_volume(r, &vol, "01_preprocessed")?;
            r.write("01_preprocessed.warnings.txt", warnings_text(&w).as_bytes())?;
            Ok(vol)
        },
        |r| load_label_volume(&r.dir.join("01_preprocessed")),
    )?;

    let k2 = section_key(&k1, "interpolate", &cfg.interpolation);
    let out2 = volume_outputs("02_interpolated");
    let interpolated = run.stage(
        "interpolate",
        &k2,
        &[&out2[0], &out2[1], "02_interpolated.warnings.txt"],
        |r| {
            let (vol, w) = interpolate_frames(&preprocessed, cfg)?;
            for s in &w {
                warn!("{s}");
            }
            save_volume(r, &vol, "02_interpolated")?;
            r.write("02_interpolated.warnings.txt", warnings_text(&w).as_bytes())?;
            Ok(vol)
        },
        |r| load_label_volume(&r.dir.join("02_interpolated")),
    )?;

    let k3 = section_key(&k2, "layers", &cfg.preprocess);
    let out3 = volume_outputs("03_layered");
    let layered = run.stage(
        "layers",
        &k3,
        &[&out3[0], &out3[1]],
        |r| {
            let vol = build_refinement_layers(&interpolated, &cfg.preprocess.to_core());
            save_volume(r, &vol, "03_layered")?;
            Ok(vol)
        },
        |r| load_label_volume(&r.dir.join("03_layered")),
    )?;

    let k4 = section_key(&k3, "mesh", &(&cfg.sizing, &cfg.mesh));
    let raw_mesh = run.stage(
        "mesh",
        &k4,
        &["04_mesh.json", "04_mesh.warnings.txt"],
        |r| {
            let mesh_cfg = cfg.mesh.to_core(cfg.sizing.to_core()?);
            let (mesh, w) = generate_tet_mesh_with(&layered, &mesh_cfg)?;
            for s in &w {
                warn!("{s}");
            }
            info!(
                "mesh: {} nodes, {} elements",
                mesh.nodes.len(),
                mesh.tets.len()
            );
            r.write("04_mesh.json", mesh_to_json(&mesh).as_bytes())?;
            r.write("04_mesh.warnings.txt", warnings_text(&w).as_bytes())?;
            Ok(mesh)
        },
        |r| load_mesh(&r.dir.join("04_mesh.json")),
    )?;

    let k5 = section_key(
        &k4,
        "optimize",
        &(&cfg.optimize, cfg.stages.optimize, cfg.stages.strict),
    );
    let (mesh, quality) = run.stage(
        "optimize",
        &k5,
        &["05_optimized.json", "05_optimized.vtk", "05_quality.json"],
        |r| {
            let mesh = if cfg.stages.optimize {
                optimize_mesh_with(&raw_mesh, &cfg.optimize.to_core()).0
            } else {
                raw_mesh.clone()
            };
            let report = validate_mesh(&mesh);
            let quality = QualitySummary::new(&report, &mesh, &layered);
            info!(
                "quality: min dihedral {:.2} deg, Hausdorff {:.3} voxels",
                quality.min_dihedral_deg, quality.hausdorff_voxels
            );
            r.write("05_optimized.json", mesh_to_json(&mesh).as_bytes())?;
            r.write("05_optimized.vtk", mesh_to_vtk(&mesh).as_bytes())?;
            r.write("05_quality.json", to_json(&quality).as_bytes())?;
            if cfg.stages.strict && !quality.is_valid() {
                return Err(Error::Validation(format!(
                    "mesh has {} inverted elements, {} non-conformal and {} dangling faces",
                    quality.inverted_elements, quality.non_conformal_faces, quality.dangling_faces
                )));
            }
            Ok((mesh, quality))
        },
        |r| {
            Ok((
                load_mesh(&r.dir.join("05_optimized.json"))?,
                read_json(&r.dir.join("05_quality.json"))?,
            ))
        },
    )?;

    let k6 = section_key(&k5, "export", &(&cfg.boundary, cfg.stages.quadratic));
    let model = run.stage(
        "export",
        &k6,
        &["06_model.json", "06_model.inp"],
        |r| {
            let model = build_model(&mesh, cfg)?;
            r.write("06_model.json", mesh_to_json(&model.mesh).as_bytes())?;
            r.write("06_model.inp", inp_string(&model)?.as_bytes())?;
            Ok(model)
        },
        |r| {
            Ok(FeaModel {
                mesh: load_mesh(&r.dir.join("06_model.json"))?,
                materials: cfg.boundary.materials()?,
                boundary: cfg.boundary.to_core(),
                hybrid: cfg.boundary.hybrid,
            })
        },
    )?;

    let verify = if cfg.stages.verify {
        let k7 = section_key(&k6, "verify", &cfg.solver);
        Some(run.stage(
            "verify",
            &k7,
            &["07_verify.json"],
            |r| {
                let linear = if cfg.stages.quadratic {
                    build_linear_model(&mesh, cfg)?
                } else {
                    model.clone()
                };
                let result = solve_model(&linear, &cfg.solver.to_core())?;
                let summary = VerifySummary::new(&linear.mesh, &result);
                info!(
                    "verify: {} iterations, peak von Mises {:.5} MPa",
                    summary.iterations, summary.peak_von_mises_mpa
                );
                r.write("07_verify.json", to_json(&summary).as_bytes())?;
                Ok(summary)
            },
            |r| read_json(&r.dir.join("07_verify.json")),
        )?)
    } else {
        None
    };

    let mut cfg_id = cfg.clone();
    cfg_id.input = PathBuf::new();
    cfg_id.output_dir = PathBuf::new();
    let manifest = Manifest {
        tool: format!("vox2fea {}", env!("CARGO_PKG_VERSION")),
        input_sha256: input_hash,
        config_sha256: sha256_hex(cfg_id.to_toml().as_bytes()),
        seed: cfg.seed,
        stages: run.stages.clone(),
        files: run
            .files
            .iter()
            .map(|(path, sha256)| ManifestFile {
                path: path.clone(),
                sha256: sha256.clone(),
                bytes: fs::metadata(dir.join(path)).map(|m| m.len()).unwrap_or(0),
            })
            .collect(),
    };
    let mpath = dir.join("manifest.json");
    fs::write(&mpath, to_json(&manifest)).map_err(Error::io(&mpath))?;
    Ok(Artifacts {
        output_dir: dir.clone(),
        preprocessed,
        interpolated,
        layered,
        mesh,
        quality,
        model,
        inp_path: dir.join("06_model.inp"),
        verify,
        manifest,
        cached: run.cached,
    })
}

/// FE model of an optimized mesh, elevated to quadratic when configured.
pub fn build_model(mesh: &TetMesh, cfg: &PipelineConfig) -> Result<FeaModel> {
    let source = if cfg.stages.quadratic {
        to_quadratic(mesh)?
    } else {
        mesh.clone()
    };
    let mut model = FeaModel::build(&source, cfg.boundary.materials()?, cfg.boundary.to_core())?;
    model.hybrid = cfg.boundary.hybrid;
    Ok(model)
}

/// Linear FE model regardless of the export order.
pub fn build_linear_model(mesh: &TetMesh, cfg: &PipelineConfig) -> Result<FeaModel> {
    let mut model = FeaModel::build(mesh, cfg.boundary.materials()?, cfg.boundary.to_core())?;
    model.hybrid = cfg.boundary.hybrid;
    Ok(model)
}
