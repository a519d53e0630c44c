//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use vox2fea::phantom::write_phantom;
use vox2fea::{generate_phantom, PhantomKind, PhantomParams};
use vox2fea_core::fem::material_cards;
use vox2fea_core::{BoundarySpec, FeaModel, LabelCode, TetMesh};

pub const KINDS: [PhantomKind; 4] = [
    PhantomKind::Annulus,
    PhantomKind::EccentricLipid,
    PhantomKind::CalcifiedNodule,
    PhantomKind::ConvergenceRegion,
];

/// Kind defaults with a 700 µm lumen, which keeps meshes near 10⁵ elements.
pub fn desk_params(kind: PhantomKind) -> PhantomParams {
    PhantomParams {
        lumen_radius_um: [700.0, 700.0],
        ..PhantomParams::for_kind(kind)
    }
}

/// Writes `ph.*` and `cfg.toml` into `dir` and returns the config path.
/// `extra` is appended to the config verbatim.
pub fn write_case(dir: &Path, kind: PhantomKind, params: &PhantomParams, extra: &str) -> PathBuf {
    let phantom = generate_phantom(kind, params).unwrap();
    write_phantom(&phantom, dir, "ph").unwrap();
    let cfg = dir.join("cfg.toml");
    fs::write(
        &cfg,
        format!("input = \"ph.json\"\noutput_dir = \"out\"\n{extra}"),
    )
    .unwrap();
    cfg
}

/// `n × n × layers` cubes of side `h` split into Kuhn tetrahedra. The
/// central cube column is lumen; one wall cube is lipid and one calcium.
pub fn block_mesh(n: usize, layers: usize, h: f64) -> TetMesh {
    let id = |x: usize, y: usize, z: usize| x + (n + 1) * (y + (n + 1) * z);
    let mut nodes = Vec::new();
    for z in 0..=layers {
        for y in 0..=n {
            for x in 0..=n {
                nodes.push([x as f64 * h, y as f64 * h, z as f64 * h]);
            }
        }
    }
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mid = n / 2;
    let (mut tets, mut labels) = (Vec::new(), Vec::new());
    for z in 0..layers {
        for y in 0..n {
            for x in 0..n {
                let label = match (x, y, z) {
                    (x, y, _) if x == mid && y == mid => LabelCode::LUMEN,
                    (0, 0, 0) => LabelCode::LIPID,
                    (x, y, 0) if x == n - 1 && y == n - 1 => LabelCode::CALCIUM,
                    _ => LabelCode::WALL,
                };
                for perm in perms {
                    let mut c = [x, y, z];
                    let mut t = [id(x, y, z); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        t[s + 1] = id(c[0], c[1], c[2]);
                    }
                    let p = t.map(|i| nodes[i]);
                    if vox2fea_core::geom::tet_volume(p[0], p[1], p[2], p[3]) < 0.0 {
                        t.swap(2, 3);
                    }
                    tets.push(t);
                    labels.push(label);
                }
            }
        }
    }
    TetMesh::new(nodes, tets, labels).unwrap()
}

/// Hybrid model of a 3 × 3 × 2 block with 100 µm cubes.
pub fn block_model(quadratic: bool) -> FeaModel {
    let mut mesh = block_mesh(3, 2, 100.0);
    if quadratic {
        mesh = vox2fea_core::mesher::to_quadratic(&mesh).unwrap();
    }
    let mut model = FeaModel::build(&mesh, material_cards(), BoundarySpec::default()).unwrap();
    model.hybrid = true;
    model
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compares `text` with a golden file; `VOX2FEA_BLESS=1` rewrites it.
pub fn check_golden(name: &str, text: &str) -> Result<(), String> {
    let path = golden_path(name);
    if std::env::var_os("VOX2FEA_BLESS").is_some() {
        fs::write(&path, text).unwrap();
    }
    let want = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if want == text {
        Ok(())
    } else {
        Err(format!("{} differs from the emitted deck", path.display()))
    }
}
