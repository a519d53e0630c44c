//! Pipeline configuration file (TOML). Every section has defaults; relative
//! paths resolve against the directory of the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vox2fea_core::fem::material_cards;
use vox2fea_core::interpolate::InterpolateConfig;
use vox2fea_core::mesher::{MeshConfig, OptimizeConfig};
use vox2fea_core::microfe::SolverConfig;
use vox2fea_core::preprocess::PreprocessConfig;
use vox2fea_core::{BoundarySpec, LabelCode, MaterialModel, SizingField};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub min_component_area_px: usize,
    pub min_wall_thickness_um: f64,
    pub lipid_cap_thickness_um: f64,
    pub inner_refine_radius_um: f64,
    pub outer_refine_radius_um: f64,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        let d = PreprocessConfig::default();
        Self {
            min_component_area_px: d.min_component_area_px,
            min_wall_thickness_um: d.min_wall_thickness_um,
            lipid_cap_thickness_um: d.lipid_cap_thickness_um,
            inner_refine_radius_um: d.inner_refine_radius_um,
            outer_refine_radius_um: d.outer_refine_radius_um,
        }
    }
}

impl PreprocessSection {
    pub fn to_core(&self) -> PreprocessConfig {
        PreprocessConfig {
            min_component_area_px: self.min_component_area_px,
            min_wall_thickness_um: self.min_wall_thickness_um,
            lipid_cap_thickness_um: self.lipid_cap_thickness_um,
            inner_refine_radius_um: self.inner_refine_radius_um,
            outer_refine_radius_um: self.outer_refine_radius_um,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolationSection {
    /// Output slice spacing; 0 means the in-plane pixel size.
    pub target_spacing_um: f64,
    /// Labels morphed component by component.
    pub labels: Vec<u8>,
}

impl Default for InterpolationSection {
    fn default() -> Self {
        Self {
            target_spacing_um: 0.0,
            labels: InterpolateConfig::default()
                .labels
                .iter()
                .map(|l| l.0)
                .collect(),
        }
    }
}

impl InterpolationSection {
    pub fn to_core(&self) -> Result<InterpolateConfig> {
        let labels = self
            .labels
            .iter()
            .map(|&b| LabelCode::new(b))
            .collect::<vox2fea_core::Result<Vec<_>>>()?;
        Ok(InterpolateConfig { labels })
    }
}

/// Element volume bounds in cubic voxels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizingSection {
    pub inner: f64,
    /// Defaults to 2× inner.
    pub outer: Option<f64>,
    /// Bound for every other label; defaults to 8× inner.
    pub global: Option<f64>,
    /// Elements straddling an interface; defaults to 2× inner.
    pub interface: Option<f64>,
}

impl Default for SizingSection {
    fn default() -> Self {
        Self {
            inner: SizingField::DEFAULT_INNER,
            outer: None,
            global: None,
            interface: None,
        }
    }
}

impl SizingSection {
    pub fn to_core(&self) -> Result<SizingField> {
        let mut s = SizingField::graded(self.inner);
        if let Some(o) = self.outer {
            s.max_tet_volume_by_label.insert(LabelCode::OUTER_REFINE, o);
        }
        if let Some(g) = self.global {
            s.default_max_volume = g;
        }
        if let Some(i) = self.interface {
            s.interface_max_volume = i;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub warp_fraction: f64,
    pub min_dihedral_guard_deg: f64,
    pub projection_sweeps: usize,
    pub relabel_rounds: usize,
    pub smoothing_voxels: f64,
}

impl Default for MeshSection {
    fn default() -> Self {
        let d = MeshConfig::default();
        Self {
            warp_fraction: d.warp_fraction,
            min_dihedral_guard_deg: d.min_dihedral_guard_deg,
            projection_sweeps: d.projection_sweeps,
            relabel_rounds: d.relabel_rounds,
            smoothing_voxels: d.smoothing_voxels,
        }
    }
}

impl MeshSection {
    pub fn to_core(&self, sizing: SizingField) -> MeshConfig {
        MeshConfig {
            sizing,
            warp_fraction: self.warp_fraction,
            min_dihedral_guard_deg: self.min_dihedral_guard_deg,
            projection_sweeps: self.projection_sweeps,
            relabel_rounds: self.relabel_rounds,
            smoothing_voxels: self.smoothing_voxels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    pub target_min_dihedral_deg: f64,
    pub max_boundary_shift_um: f64,
    pub sweeps: usize,
    pub flips: bool,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        let d = OptimizeConfig::default();
        Self {
            target_min_dihedral_deg: d.target_min_dihedral_deg,
            max_boundary_shift_um: d.max_boundary_shift_um,
            sweeps: d.sweeps,
            flips: d.flips,
        }
    }
}

impl OptimizeSection {
    pub fn to_core(&self) -> OptimizeConfig {
        OptimizeConfig {
            target_min_dihedral_deg: self.target_min_dihedral_deg,
            max_boundary_shift_um: self.max_boundary_shift_um,
            sweeps: self.sweeps,
            flips: self.flips,
        }
    }
}

/// Material card as written in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MaterialSpec {
    Hyperelastic {
        c10_kpa: f64,
        #[serde(default)]
        c01_kpa: f64,
        #[serde(default)]
        c20_kpa: f64,
        #[serde(default)]
        c11_kpa: f64,
        #[serde(default)]
        c30_kpa: f64,
        #[serde(default)]
        d1_per_kpa: f64,
    },
    LinearElastic {
        youngs_kpa: f64,
        poisson: f64,
    },
}

impl From<MaterialSpec> for MaterialModel {
    fn from(m: MaterialSpec) -> Self {
        match m {
            MaterialSpec::Hyperelastic {
                c10_kpa,
                c01_kpa,
                c20_kpa,
                c11_kpa,
                c30_kpa,
                d1_per_kpa,
            } => MaterialModel::Hyperelastic {
                c10_kpa,
                c01_kpa,
                c20_kpa,
                c11_kpa,
                c30_kpa,
                d1_per_kpa,
            },
            MaterialSpec::LinearElastic {
                youngs_kpa,
                poisson,
            } => MaterialModel::LinearElastic {
                youngs_kpa,
                poisson,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySection {
    pub pressure_kpa: f64,
    pub endcap_tolerance_um: f64,
    pub load_surface_name: String,
    pub endcap_set_names: [String; 2],
    /// Hybrid element types (C3D4H, C3D10H).
    pub hybrid: bool,
    /// Overrides of the built-in cards, keyed by label name.
    pub materials: BTreeMap<String, MaterialSpec>,
}

impl Default for BoundarySection {
    fn default() -> Self {
        let d = BoundarySpec::default();
        Self {
            pressure_kpa: d.pressure_kpa,
            endcap_tolerance_um: d.endcap_tolerance_um,
            load_surface_name: d.load_surface_name,
            endcap_set_names: d.endcap_set_names,
            hybrid: true,
            materials: BTreeMap::new(),
        }
    }
}

impl BoundarySection {
    pub fn to_core(&self) -> BoundarySpec {
        BoundarySpec {
            pressure_kpa: self.pressure_kpa,
            endcap_tolerance_um: self.endcap_tolerance_um,
            load_surface_name: self.load_surface_name.clone(),
            endcap_set_names: self.endcap_set_names.clone(),
        }
    }

    pub fn materials(&self) -> Result<BTreeMap<LabelCode, MaterialModel>> {
        let mut cards = material_cards();
        for (name, spec) in &self.materials {
            let label = LabelCode::PALETTE
                .iter()
                .copied()
                .find(|l| l.name() == name)
                .ok_or_else(|| Error::Config(format!("unknown material label {name:?}")))?;
            let model = MaterialModel::from(spec.clone());
            model.validate(label)?;
            cards.insert(label, model);
        }
        Ok(cards)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
        }
    }
}

impl SolverSection {
    pub fn to_core(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub optimize: bool,
    pub quadratic: bool,
    /// Linear solve of the exported model with the built-in solver.
    pub verify: bool,
    /// Abort when the mesh fails validation.
    pub strict: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self {
            optimize: true,
            quadratic: false,
            verify: false,
            strict: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSection {
    pub rungs: usize,
    /// Inner-layer element volume divisor between consecutive rungs.
    pub ratio: f64,
    /// Probe slice z positions; empty means the input frames at least
    /// `cap_clearance_um` from both end caps.
    pub probe_slices_um: Vec<f64>,
    /// Default probes keep this distance from the constrained end caps.
    pub cap_clearance_um: f64,
    /// Elements whose centroid lies within this distance belong to a slice;
    /// 0 means one voxel.
    pub probe_half_width_um: f64,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self {
            rungs: 3,
            ratio: 2.0,
            probe_slices_um: Vec::new(),
            cap_clearance_um: 800.0,
            probe_half_width_um: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Labelmap with the raw frames (`.json` sidecar path).
    pub input: PathBuf,
    pub output_dir: PathBuf,
    /// Kept for reproducibility records; no stage is stochastic.
    pub seed: u64,
    pub preprocess: PreprocessSection,
    pub interpolation: InterpolationSection,
    pub sizing: SizingSection,
    pub mesh: MeshSection,
    pub optimize: OptimizeSection,
    pub boundary: BoundarySection,
    pub solver: SolverSection,
    pub stages: StageToggles,
    pub converge: ConvergeSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            output_dir: PathBuf::from("vox2fea-out"),
            seed: 0,
            preprocess: PreprocessSection::default(),
            interpolation: InterpolationSection::default(),
            sizing: SizingSection::default(),
            mesh: MeshSection::default(),
            optimize: OptimizeSection::default(),
            boundary: BoundarySection::default(),
            solver: SolverSection::default(),
            stages: StageToggles::default(),
            converge: ConvergeSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.input.is_relative() {
            cfg.input = base.join(&cfg.input);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.as_os_str().is_empty() {
            return Err(Error::Config("input path is not set".into()));
        }
        let json = self.input.with_extension("json");
        if !json.is_file() {
            return Err(Error::Config(format!(
                "input {} does not exist",
                json.display()
            )));
        }
        self.preprocess.to_core().validate()?;
        self.interpolation.to_core()?;
        if !(self.interpolation.target_spacing_um >= 0.0) {
            return Err(Error::Config("target spacing must be >= 0".into()));
        }
        self.sizing.to_core()?;
        self.boundary.to_core().validate()?;
        self.boundary.materials()?;
        if !(self.solver.tolerance > 0.0) || self.solver.max_iterations == 0 {
            return Err(Error::Config(
                "solver tolerance and iteration limit must be > 0".into(),
            ));
        }
        if !(self.converge.cap_clearance_um >= 0.0) {
            return Err(Error::Config("cap clearance must be >= 0".into()));
        }
        if self.converge.rungs < 2 || !(self.converge.ratio > 1.0) {
            return Err(Error::Config(
                "convergence needs >= 2 rungs and a ratio > 1".into(),
            ));
        }
        Ok(())
    }
}
