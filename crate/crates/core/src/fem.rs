//! Finite-element model assembly: materials, loads and boundary sets.
//!
//! Material constants are stored in kPa as tabulated; writers convert to the
//! unit system of their output.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::label::LabelCode;
use crate::mesh::{FaceRef, TetMesh, FACES};
use crate::{Error, Result};

/// Poisson ratio used when linearizing soft tissue.
pub const SOFT_TISSUE_POISSON: f64 = 0.49;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialModel {
    /// Polynomial strain energy, N = 3; coefficients not listed are zero.
    Hyperelastic {
        c10_kpa: f64,
        c01_kpa: f64,
        c20_kpa: f64,
        c11_kpa: f64,
        c30_kpa: f64,
        /// Compressibility D1, kPa⁻¹.
        d1_per_kpa: f64,
    },
    LinearElastic {
        youngs_kpa: f64,
        poisson: f64,
    },
}

impl MaterialModel {
    pub fn hyperelastic(c10_kpa: f64, c20_kpa: f64, c30_kpa: f64, d1_per_kpa: f64) -> Self {
        Self::Hyperelastic {
            c10_kpa,
            c01_kpa: 0.0,
            c20_kpa,
            c11_kpa: 0.0,
            c30_kpa,
            d1_per_kpa,
        }
    }

    pub fn validate(&self, label: LabelCode) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidMaterial { label, reason });
        match *self {
            Self::Hyperelastic {
                c10_kpa,
                c01_kpa,
                c20_kpa,
                c11_kpa,
                c30_kpa,
                d1_per_kpa,
            } => {
                let all = [c10_kpa, c01_kpa, c20_kpa, c11_kpa, c30_kpa, d1_per_kpa];
                if all.iter().any(|v| !v.is_finite()) {
                    return bad("coefficients must be finite".into());
                }
                if !(c10_kpa + c01_kpa > 0.0) {
                    return bad(format!("initial shear modulus 2(C10+C01) must be > 0, C10={c10_kpa}, C01={c01_kpa}"));
                }
                if d1_per_kpa < 0.0 {
                    return bad(format!("D1 must be >= 0, got {d1_per_kpa}"));
                }
                Ok(())
            }
            Self::LinearElastic {
                youngs_kpa,
                poisson,
            } => {
                if !(youngs_kpa.is_finite() && youngs_kpa > 0.0) {
                    return bad(format!("Young's modulus must be > 0, got {youngs_kpa}"));
                }
                if !(poisson > -1.0 && poisson < 0.5) {
                    return bad(format!(
                        "Poisson ratio must lie in (-1, 0.5), got {poisson}"
                    ));
                }
                Ok(())
            }
        }
    }

    /// Small-strain isotropic constants (E in kPa, ν). Soft tissue uses the
    /// initial shear modulus 2(C10 + C01) with ν = 0.49.
    pub fn linearized(&self) -> (f64, f64) {
        match *self {
            Self::Hyperelastic {
                c10_kpa, c01_kpa, ..
            } => {
                let mu = 2.0 * (c10_kpa + c01_kpa);
                (2.0 * mu * (1.0 + SOFT_TISSUE_POISSON), SOFT_TISSUE_POISSON)
            }
            Self::LinearElastic {
                youngs_kpa,
                poisson,
            } => (youngs_kpa, poisson),
        }
    }
}

/// Default material per label: fibrous wall (also used for both refinement
/// layers), lipid and calcium.
pub fn material_cards() -> BTreeMap<LabelCode, MaterialModel> {
    let wall = MaterialModel::hyperelastic(127.9, 0.0, 0.0, 0.096);
    let lipid = MaterialModel::hyperelastic(1.6, 9.3, 11.0, 0.0);
    let calcium = MaterialModel::LinearElastic {
        youngs_kpa: 184_000.0,
        poisson: 0.495,
    };
    let mut cards = BTreeMap::new();
    cards.insert(LabelCode::WALL, wall);
    cards.insert(LabelCode::LIPID, lipid);
    cards.insert(LabelCode::CALCIUM, calcium);
    cards.insert(LabelCode::INNER_REFINE, wall);
    cards.insert(LabelCode::OUTER_REFINE, wall);
    cards
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub pressure_kpa: f64,
    pub endcap_tolerance_um: f64,
    pub load_surface_name: String,
    /// Node-set names for the z-min and z-max caps.
    pub endcap_set_names: [String; 2],
}

impl Default for BoundarySpec {
    fn default() -> Self {
        Self {
            pressure_kpa: 15.0,
            endcap_tolerance_um: 20.0,
            load_surface_name: "LUMEN_SURFACE".into(),
            endcap_set_names: ["CAP_ZMIN".into(), "CAP_ZMAX".into()],
        }
    }
}

impl BoundarySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.pressure_kpa.is_finite() && self.pressure_kpa > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "pressure must be > 0, got {}",
                self.pressure_kpa
            )));
        }
        if !(self.endcap_tolerance_um.is_finite() && self.endcap_tolerance_um > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "end-cap tolerance must be > 0, got {}",
                self.endcap_tolerance_um
            )));
        }
        let names = [
            &self.load_surface_name,
            &self.endcap_set_names[0],
            &self.endcap_set_names[1],
        ];
        for n in names {
            if n.is_empty()
                || !n
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::InvalidConfig(format!(
                    "set name {n:?} must be non-empty ASCII without spaces"
                )));
            }
        }
        if self.endcap_set_names[0] == self.endcap_set_names[1] {
            return Err(Error::InvalidConfig("end-cap set names must differ".into()));
        }
        Ok(())
    }
}

/// Faces of tissue elements that touch lumen elements, as (element, face).
/// Their outward normals point into the lumen.
pub fn extract_lumen_surface(mesh: &TetMesh) -> Result<Vec<FaceRef>> {
    if !mesh.labels.contains(&LabelCode::LUMEN) {
        return Err(Error::NoLumenElements);
    }
    let mut out = Vec::new();
    for refs in mesh.face_map().values() {
        if refs.len() != 2 {
            continue;
        }
        let (a, b) = (refs[0], refs[1]);
        let (la, lb) = (mesh.labels[a.0], mesh.labels[b.0]);
        if la == LabelCode::LUMEN && lb.is_tissue() {
            out.push(b);
        } else if lb == LabelCode::LUMEN && la.is_tissue() {
            out.push(a);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidModel("lumen elements touch no tissue".into()));
    }
    out.sort_unstable();
    Ok(out)
}

/// Drops lumen elements and orphaned nodes. Returns the old→new node map
/// (`usize::MAX` for removed nodes); stored sets and surfaces are re-indexed.
pub fn remove_lumen(mesh: &TetMesh) -> (TetMesh, Vec<usize>) {
    let mut out = mesh.clone();
    let labels = mesh.labels.clone();
    let map = out.retain_elements(|e| labels[e] != LabelCode::LUMEN);
    (out, map)
}

/// Nodes within the tolerance of the lowest and highest z.
pub fn find_endcap_nodes(mesh: &TetMesh, spec: &BoundarySpec) -> Result<[Vec<usize>; 2]> {
    let (lo, hi) = mesh.bounds().ok_or(Error::EmptyEndCap("z-min"))?;
    let tol = spec.endcap_tolerance_um;
    let mut used = alloc::vec![false; mesh.nodes.len()];
    for t in &mesh.tets {
        for &n in t {
            used[n] = true;
        }
    }
    for m in &mesh.mid_nodes {
        for &n in m {
            used[n] = true;
        }
    }
    let pick = |target: f64| -> Vec<usize> {
        (0..mesh.nodes.len())
            .filter(|&n| used[n] && (mesh.nodes[n][2] - target).abs() <= tol)
            .collect()
    };
    let low = pick(lo[2]);
    let high = pick(hi[2]);
    if low.is_empty() {
        return Err(Error::EmptyEndCap("z-min"));
    }
    if high.is_empty() {
        return Err(Error::EmptyEndCap("z-max"));
    }
    Ok([low, high])
}

/// Tissue mesh with materials, load surface and fixed end caps.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaModel {
    /// Tissue-only mesh; carries the load surface and cap node sets.
    pub mesh: TetMesh,
    pub materials: BTreeMap<LabelCode, MaterialModel>,
    pub boundary: BoundarySpec,
    /// Emit hybrid (pressure-enriched) element types.
    pub hybrid: bool,
}

impl FeaModel {
    /// Extracts the lumen surface, removes the lumen and finds the caps.
    pub fn build(
        mesh: &TetMesh,
        materials: BTreeMap<LabelCode, MaterialModel>,
        boundary: BoundarySpec,
    ) -> Result<Self> {
        boundary.validate()?;
        let surface = extract_lumen_surface(mesh)?;
        let mut with_surface = mesh.clone();
        with_surface
            .surfaces
            .insert(boundary.load_surface_name.clone(), surface);
        let (mut tissue, _) = remove_lumen(&with_surface);
        let [low, high] = find_endcap_nodes(&tissue, &boundary)?;
        tissue
            .node_sets
            .insert(boundary.endcap_set_names[0].clone(), low);
        tissue
            .node_sets
            .insert(boundary.endcap_set_names[1].clone(), high);
        let model = Self {
            mesh: tissue,
            materials,
            boundary,
            hybrid: true,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.boundary.validate()?;
        let mesh = &self.mesh;
        if mesh.tets.is_empty() {
            return Err(Error::InvalidModel("mesh has no elements".into()));
        }
        for l in mesh.labels_present() {
            if l == LabelCode::LUMEN || l == LabelCode::BACKGROUND {
                return Err(Error::InvalidModel(format!(
                    "{l} elements remain in the model"
                )));
            }
            let m = self.materials.get(&l).ok_or(Error::MissingMaterial(l))?;
            m.validate(l)?;
        }
        let surface = mesh
            .surfaces
            .get(&self.boundary.load_surface_name)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::InvalidModel("load surface is missing or empty".into()))?;
        if surface
            .iter()
            .any(|&(e, f)| e >= mesh.tets.len() || !(1..=4).contains(&f))
        {
            return Err(Error::InvalidModel(
                "load surface references a missing face".into(),
            ));
        }
        for name in &self.boundary.endcap_set_names {
            let set = mesh
                .node_sets
                .get(name)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| {
                    Error::InvalidModel(format!("node set {name} is missing or empty"))
                })?;
            if set.iter().any(|&n| n >= mesh.nodes.len()) {
                return Err(Error::InvalidModel(format!(
                    "node set {name} references a missing node"
                )));
            }
        }
        Ok(())
    }

    /// Per-element (E, ν) in kPa for the linear solver.
    pub fn linearized_materials(&self) -> Result<Vec<(f64, f64)>> {
        self.mesh
            .labels
            .iter()
            .map(|l| {
                self.materials
                    .get(l)
                    .map(|m| m.linearized())
                    .ok_or(Error::MissingMaterial(*l))
            })
            .collect()
    }

    /// Corner nodes of every load face, outward from the tissue.
    pub fn load_faces(&self) -> Vec<[usize; 3]> {
        self.mesh.surfaces[&self.boundary.load_surface_name]
            .iter()
            .map(|&(e, f)| self.mesh.face_nodes(e, f))
            .collect()
    }
}

/// Local corner indices of face `f` (1..=4) in ABAQUS order.
pub fn face_corners(f: u8) -> [usize; 3] {
    FACES[f as usize - 1]
}
