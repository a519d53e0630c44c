//! ABAQUS keyword decks. Files use millimetres and MPa; the model is held in
//! micrometres and kPa.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use vox2fea_core::{FeaModel, LabelCode, MaterialModel, MeshOrder};

use crate::{Error, Result};

const UM_PER_MM: f64 = 1000.0;
const KPA_PER_MPA: f64 = 1000.0;

/// Shortest decimal of `v` rounded to 15 significant digits, always with a
/// decimal point or exponent. The rounding hides unit-conversion noise such
/// as 9.3 / 1000 = 0.009300000000000001.
pub fn fmt_real(v: f64) -> String {
    let v: f64 = format!("{v:.14e}").parse().expect("formatted float parses");
    let a = v.abs();
    let s = if v == 0.0 {
        "0.".to_string()
    } else if (1e-3..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    };
    if s.contains(['.', 'e']) {
        s
    } else {
        s + "."
    }
}

pub fn elset_name(label: LabelCode) -> String {
    format!("ELSET_{}", label.name().to_ascii_uppercase())
}

pub fn material_name(label: LabelCode) -> String {
    format!("MAT_{}", label.name().to_ascii_uppercase())
}

pub fn element_type(order: MeshOrder, hybrid: bool) -> &'static str {
    match (order, hybrid) {
        (MeshOrder::Linear, true) => "C3D4H",
        (MeshOrder::Linear, false) => "C3D4",
        (MeshOrder::Quadratic, true) => "C3D10H",
        (MeshOrder::Quadratic, false) => "C3D10",
    }
}

fn write_ids(s: &mut String, ids: impl IntoIterator<Item = usize>) {
    for (n, id) in ids.into_iter().enumerate() {
        if n > 0 {
            s.push_str(if n % 16 == 0 { ",\n" } else { ", " });
        }
        let _ = write!(s, "{id}");
    }
    s.push('\n');
}

/// Hyperelastic coefficients in deck order: C10 C01 C20 C11 C02 C30 C21 C12
/// C03 D1 D2 D3, in MPa and 1/MPa.
pub fn polynomial_coefficients(m: &MaterialModel) -> Option<[f64; 12]> {
    match *m {
        MaterialModel::Hyperelastic {
            c10_kpa,
            c01_kpa,
            c20_kpa,
            c11_kpa,
            c30_kpa,
            d1_per_kpa,
        } => Some([
            c10_kpa / KPA_PER_MPA,
            c01_kpa / KPA_PER_MPA,
            c20_kpa / KPA_PER_MPA,
            c11_kpa / KPA_PER_MPA,
            0.0,
            c30_kpa / KPA_PER_MPA,
            0.0,
            0.0,
            0.0,
            d1_per_kpa * KPA_PER_MPA,
            0.0,
            0.0,
        ]),
        MaterialModel::LinearElastic { .. } => None,
    }
}

/// Serializes a validated model. Identical models give identical text.
pub fn inp_string(model: &FeaModel) -> Result<String> {
    model.validate()?;
    let mesh = &model.mesh;
    let order = mesh.order();
    let mut s = String::new();
    s.push_str("*HEADING\n");
    let _ = writeln!(
        s,
        "vox2fea model: {} nodes, {} elements; units mm, MPa, tonne, s",
        mesh.nodes.len(),
        mesh.tets.len()
    );
    s.push_str("*NODE\n");
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(
            s,
            "{}, {}, {}, {}",
            i + 1,
            fmt_real(p[0] / UM_PER_MM),
            fmt_real(p[1] / UM_PER_MM),
            fmt_real(p[2] / UM_PER_MM)
        );
    }
    let _ = writeln!(
        s,
        "*ELEMENT, TYPE={}, ELSET=EALL",
        element_type(order, model.hybrid)
    );
    for (e, t) in mesh.tets.iter().enumerate() {
        let _ = write!(s, "{}", e + 1);
        for n in t {
            let _ = write!(s, ", {}", n + 1);
        }
        if order == MeshOrder::Quadratic {
            for n in mesh.mid_nodes[e] {
                let _ = write!(s, ", {}", n + 1);
            }
        }
        s.push('\n');
    }
    let labels = mesh.labels_present();
    for &l in &labels {
        let _ = writeln!(s, "*ELSET, ELSET={}", elset_name(l));
        write_ids(
            &mut s,
            (0..mesh.tets.len())
                .filter(|&e| mesh.labels[e] == l)
                .map(|e| e + 1),
        );
    }
    let surf_name = &model.boundary.load_surface_name;
    let _ = writeln!(s, "*SURFACE, TYPE=ELEMENT, NAME={surf_name}");
    for &(e, f) in &mesh.surfaces[surf_name] {
        let _ = writeln!(s, "{}, S{f}", e + 1);
    }
    for name in &model.boundary.endcap_set_names {
        let _ = writeln!(s, "*NSET, NSET={name}");
        write_ids(&mut s, mesh.node_sets[name].iter().map(|n| n + 1));
    }
    for &l in &labels {
        let _ = writeln!(
            s,
            "*SOLID SECTION, ELSET={}, MATERIAL={}\n,",
            elset_name(l),
            material_name(l)
        );
    }
    for &l in &labels {
        let m = &model.materials[&l];
        let _ = writeln!(s, "*MATERIAL, NAME={}", material_name(l));
        match *m {
            MaterialModel::Hyperelastic { .. } => {
                let c = polynomial_coefficients(m).expect("hyperelastic");
                s.push_str("*HYPERELASTIC, POLYNOMIAL, N=3\n");
                let line = |v: &[f64]| {
                    v.iter()
                        .map(|&x| fmt_real(x))
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                let _ = writeln!(s, "{}", line(&c[..8]));
                let _ = writeln!(s, "{}", line(&c[8..]));
            }
            MaterialModel::LinearElastic {
                youngs_kpa,
                poisson,
            } => {
                s.push_str("*ELASTIC\n");
                let _ = writeln!(
                    s,
                    "{}, {}",
                    fmt_real(youngs_kpa / KPA_PER_MPA),
                    fmt_real(poisson)
                );
            }
        }
    }
    s.push_str("*BOUNDARY\n");
    for name in &model.boundary.endcap_set_names {
        let _ = writeln!(s, "{name}, 1, 3");
    }
    s.push_str("*STEP, NAME=PRESSURIZE, NLGEOM=YES\n*STATIC\n0.1, 1., 1e-05, 1.\n*DSLOAD\n");
    let _ = writeln!(
        s,
        "{surf_name}, P, {}",
        fmt_real(model.boundary.pressure_kpa / KPA_PER_MPA)
    );
    s.push_str("*OUTPUT, FIELD, VARIABLE=PRESELECT\n*END STEP\n");
    Ok(s)
}

pub fn write_inp(model: &FeaModel, path: &Path) -> Result<()> {
    let text = inp_string(model)?;
    fs::write(path, text).map_err(Error::io(path))
}

/// One keyword block: keyword, its parameters and data lines split on commas.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub keyword: String,
    pub params: BTreeMap<String, String>,
    pub data: Vec<Vec<String>>,
}

impl Block {
    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }
}

/// Generic keyword-deck reader. Comments (`**`) are skipped; keywords and
/// parameter names are upper-cased.
pub fn parse_blocks(text: &str) -> std::result::Result<Vec<Block>, String> {
    let mut blocks: Vec<Block> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("**") {
            continue;
        }
        if let Some(rest) = line.strip_prefix('*') {
            let mut parts = rest.split(',');
            let keyword = parts.next().unwrap_or("").trim().to_ascii_uppercase();
            let mut params = BTreeMap::new();
            for p in parts {
                let (k, v) = p.split_once('=').unwrap_or((p, ""));
                params.insert(k.trim().to_ascii_uppercase(), v.trim().to_string());
            }
            blocks.push(Block {
                keyword,
                params,
                data: Vec::new(),
            });
        } else {
            let block = blocks
                .last_mut()
                .ok_or_else(|| format!("line {}: data before any keyword", no + 1))?;
            let fields: Vec<String> = line
                .split(',')
                .map(|f| f.trim().to_string())
                .filter(|f| !f.is_empty())
                .collect();
            block.data.push(fields);
        }
    }
    Ok(blocks)
}

/// Model content recovered from a deck written by [`inp_string`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InpDeck {
    pub nodes: Vec<[f64; 3]>,
    pub element_type: String,
    pub elements: Vec<Vec<usize>>,
    pub elsets: BTreeMap<String, Vec<usize>>,
    pub nsets: BTreeMap<String, Vec<usize>>,
    pub surfaces: BTreeMap<String, Vec<(usize, u8)>>,
    /// Element set → material name.
    pub sections: BTreeMap<String, String>,
    /// Material name → (kind keyword, constants).
    pub materials: BTreeMap<String, (String, Vec<f64>)>,
    /// (set, first dof, last dof)
    pub boundaries: Vec<(String, u8, u8)>,
    /// (surface, magnitude)
    pub pressures: Vec<(String, f64)>,
}

pub fn parse_inp(text: &str) -> std::result::Result<InpDeck, String> {
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| format!("bad number {s:?}: {e}"))
    };
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| format!("bad integer {s:?}: {e}"))
    };
    let mut deck = InpDeck::default();
    let mut material: Option<String> = None;
    for b in parse_blocks(text)? {
        match b.keyword.as_str() {
            "NODE" => {
                for d in &b.data {
                    if d.len() != 4 || int(&d[0])? != deck.nodes.len() + 1 {
                        return Err(format!("node line {d:?} is malformed or out of order"));
                    }
                    deck.nodes.push([num(&d[1])?, num(&d[2])?, num(&d[3])?]);
                }
            }
            "ELEMENT" => {
                deck.element_type = b.param("TYPE").unwrap_or_default().to_string();
                for d in &b.data {
                    let ids = d
                        .iter()
                        .map(|x| int(x))
                        .collect::<std::result::Result<Vec<_>, _>>()?;
                    deck.elements.push(ids[1..].to_vec());
                }
            }
            "ELSET" | "NSET" => {
                let key = if b.keyword == "ELSET" {
                    "ELSET"
                } else {
                    "NSET"
                };
                let name = b.param(key).ok_or("set without a name")?.to_string();
                let ids = b
                    .data
                    .iter()
                    .flatten()
                    .map(|x| int(x))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let target = if key == "ELSET" {
                    &mut deck.elsets
                } else {
                    &mut deck.nsets
                };
                target.insert(name, ids);
            }
            "SURFACE" => {
                let name = b.param("NAME").ok_or("surface without a name")?.to_string();
                let mut faces = Vec::new();
                for d in &b.data {
                    let face = d[1]
                        .strip_prefix('S')
                        .and_then(|f| f.parse::<u8>().ok())
                        .ok_or_else(|| format!("bad face id {:?}", d[1]))?;
                    faces.push((int(&d[0])?, face));
                }
                deck.surfaces.insert(name, faces);
            }
            "SOLID SECTION" => {
                deck.sections.insert(
                    b.param("ELSET").ok_or("section without ELSET")?.to_string(),
                    b.param("MATERIAL")
                        .ok_or("section without MATERIAL")?
                        .to_string(),
                );
            }
            "MATERIAL" => material = b.param("NAME").map(str::to_string),
            "HYPERELASTIC" | "ELASTIC" => {
                let name = material.clone().ok_or("material data outside *MATERIAL")?;
                let values = b
                    .data
                    .iter()
                    .flatten()
                    .map(|x| num(x))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                deck.materials.insert(name, (b.keyword.clone(), values));
            }
            "BOUNDARY" => {
                for d in &b.data {
                    let lo = d[1].parse::<u8>().map_err(|e| e.to_string())?;
                    let hi = d
                        .get(2)
                        .map_or(Ok(lo), |x| x.parse::<u8>())
                        .map_err(|e| e.to_string())?;
                    deck.boundaries.push((d[0].clone(), lo, hi));
                }
            }
            "DSLOAD" => {
                for d in &b.data {
                    if d.len() != 3 || d[1] != "P" {
                        return Err(format!("unsupported load line {d:?}"));
                    }
                    deck.pressures.push((d[0].clone(), num(&d[2])?));
                }
            }
            _ => {}
        }
    }
    Ok(deck)
}
