//! Labelmaps, mesh files, configs and phantoms on disk.

mod common;

use std::fs;

use common::{block_mesh, desk_params, KINDS};
use tempfile::tempdir;
use vox2fea::labelmap::labelmap_paths;
use vox2fea::mesh_io::{load_mesh, mesh_to_vtk, save_mesh};
use vox2fea::phantom::{write_phantom, GroundTruth};
use vox2fea::{
    generate_phantom, load_label_volume, save_label_volume, Error, PhantomKind, PipelineConfig,
};
use vox2fea_core::{LabelCode, LabelVolume};

fn write_pair(dir: &std::path::Path, json: &str, raw: &[u8]) -> std::path::PathBuf {
    let stem = dir.join("vol");
    let (j, r) = labelmap_paths(&stem);
    fs::write(j, json).unwrap();
    fs::write(r, raw).unwrap();
    stem
}

#[test]
fn all_background_volume() {
    let dir = tempdir().unwrap();
    let stem = write_pair(
        dir.path(),
        r#"{"dims": [2, 2, 1], "spacing_um": [20.0, 20.0, 400.0]}"#,
        &[0; 4],
    );
    let vol = load_label_volume(&stem).unwrap();
    assert_eq!(vol.dims(), [2, 2, 1]);
    assert_eq!(vol.spacing(), [20.0, 20.0, 400.0]);
    assert_eq!(vol.label_counts()[0], 4);
    assert_eq!(vol.frame_positions(), None);
}

#[test]
fn labelmap_round_trip() {
    let dir = tempdir().unwrap();
    let mut vol =
        LabelVolume::filled([5, 4, 3], [20.0, 20.0, 400.0], LabelCode::BACKGROUND).unwrap();
    vol.set(1, 2, 0, LabelCode::FIBROUS);
    vol.set(4, 3, 2, LabelCode::CALCIUM);
    vol.set(0, 0, 1, LabelCode::MIXED);
    vol.set_frame_positions(Some(vec![0, 1, 2]));
    let (json, raw) = save_label_volume(&vol, &dir.path().join("rt")).unwrap();
    assert_eq!(fs::read(&raw).unwrap().len(), 60);
    assert_eq!(load_label_volume(&json).unwrap(), vol);
}

#[test]
fn labelmap_errors() {
    let dir = tempdir().unwrap();
    let meta = r#"{"dims": [10, 10, 5], "spacing_um": [20.0, 20.0, 400.0]}"#;
    let short = write_pair(dir.path(), meta, &[0; 499]);
    assert!(matches!(
        load_label_volume(&short),
        Err(Error::Format { .. })
    ));

    let bad_label = write_pair(dir.path(), meta, &[200; 500]);
    assert!(matches!(load_label_volume(&bad_label), Err(Error::Core(_))));

    let malformed = write_pair(dir.path(), "{\"dims\": [10, 10", &[0; 500]);
    assert!(matches!(
        load_label_volume(&malformed),
        Err(Error::Json { .. })
    ));

    let frames =
        r#"{"dims": [10, 10, 5], "spacing_um": [20.0, 20.0, 400.0], "frame_positions": [0, 5]}"#;
    let outside = write_pair(dir.path(), frames, &[0; 500]);
    assert!(matches!(
        load_label_volume(&outside),
        Err(Error::Format { .. })
    ));

    let missing = dir.path().join("nothing");
    let err = load_label_volume(&missing).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn phantom_counts_survive_disk() {
    let dir = tempdir().unwrap();
    for kind in KINDS {
        let phantom = generate_phantom(kind, &desk_params(kind)).unwrap();
        let files = write_phantom(&phantom, dir.path(), kind.name()).unwrap();
        let vol = load_label_volume(&files[0]).unwrap();
        assert_eq!(vol, phantom.volume);
        let truth: GroundTruth =
            serde_json::from_str(&fs::read_to_string(&files[2]).unwrap()).unwrap();
        assert_eq!(truth, phantom.truth);
        let counts = vol.label_counts();
        for (&code, &n) in &truth.counts {
            assert_eq!(counts[code as usize], n, "{} label {code}", kind.name());
        }
        assert_eq!(truth.counts.values().sum::<usize>(), vol.len());
        for (z, frame) in truth.frames.iter().enumerate() {
            let slice = vol.slice(z);
            for (&code, &n) in &frame.counts {
                assert_eq!(slice.count(LabelCode(code)), n);
            }
        }
    }
}

#[test]
fn phantom_geometry_matches_truth() {
    let p = desk_params(PhantomKind::EccentricLipid);
    let phantom = generate_phantom(PhantomKind::EccentricLipid, &p).unwrap();
    let [cx, cy] = phantom.truth.center_px;
    let frame = phantom.volume.slice(1);
    let truth = &phantom.truth.frames[1];
    let lipid = truth.lipid.as_ref().unwrap();
    // walk along +x: lumen (background), cap, lipid, wall, background
    let y = cy as usize;
    let label_at = |r_um: f64| frame.get((cx + r_um / p.pixel_um) as usize, y);
    assert_eq!(
        label_at(truth.lumen_radius_um - 30.0),
        LabelCode::BACKGROUND
    );
    assert_eq!(label_at(truth.lumen_radius_um + 30.0), LabelCode::FIBROUS);
    assert_eq!(label_at(lipid.inner_radius_um + 30.0), LabelCode::LIPID);
    assert_eq!(label_at(lipid.outer_radius_um + 30.0), LabelCode::FIBROUS);
    assert_eq!(
        label_at(truth.outer_radius_um + 30.0),
        LabelCode::BACKGROUND
    );
    assert!(phantom.truth.counts.contains_key(&LabelCode::MIXED.0));
}

#[test]
fn phantom_parameters_are_checked() {
    let mut p = desk_params(PhantomKind::EccentricLipid);
    p.lipid_thickness_um = p.wall_thickness_um;
    assert!(generate_phantom(PhantomKind::EccentricLipid, &p).is_err());
    let mut p = desk_params(PhantomKind::CalcifiedNodule);
    p.calcium_radius_um = [400.0, 400.0];
    assert!(generate_phantom(PhantomKind::CalcifiedNodule, &p).is_err());
    let mut p = desk_params(PhantomKind::Annulus);
    p.frames = 1;
    assert!(generate_phantom(PhantomKind::Annulus, &p).is_err());
}

#[test]
fn mesh_json_round_trip() {
    let dir = tempdir().unwrap();
    let mut mesh = vox2fea_core::mesher::to_quadratic(&block_mesh(2, 1, 50.0)).unwrap();
    // coordinates whose shortest decimals need all 17 digits
    for (i, p) in mesh.nodes.iter_mut().enumerate() {
        for c in p.iter_mut() {
            *c += (i as f64 + 1.0).sqrt() / 3.0;
        }
    }
    mesh.node_sets.insert("A".into(), vec![0, 3]);
    mesh.surfaces.insert("S".into(), vec![(1, 2)]);
    let path = dir.path().join("m.json");
    save_mesh(&mesh, &path).unwrap();
    assert_eq!(load_mesh(&path).unwrap(), mesh);

    mesh.surfaces.insert("S".into(), vec![(1, 5)]);
    save_mesh(&mesh, &path).unwrap();
    assert!(matches!(load_mesh(&path), Err(Error::Format { .. })));
}

#[test]
fn vtk_lists_every_cell() {
    let mesh = block_mesh(2, 1, 50.0);
    let vtk = mesh_to_vtk(&mesh);
    assert!(vtk.starts_with("# vtk DataFile Version"));
    assert!(vtk.contains(&format!("POINTS {} double", mesh.nodes.len())));
    assert!(vtk.contains(&format!(
        "CELLS {} {}",
        mesh.tets.len(),
        5 * mesh.tets.len()
    )));
}

#[test]
fn config_round_trip_and_errors() {
    let cfg = PipelineConfig::default();
    assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    assert!(PipelineConfig::from_toml("[sizing]\ninnr = 2.0\n").is_err());
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));

    let dir = tempdir().unwrap();
    let stem = write_pair(
        dir.path(),
        r#"{"dims": [2, 2, 2], "spacing_um": [20.0, 20.0, 400.0]}"#,
        &[0; 8],
    );
    let path = dir.path().join("cfg.toml");
    fs::write(&path, "input = \"vol.json\"\n[sizing]\ninner = 1.5\n").unwrap();
    let loaded = PipelineConfig::load(&path).unwrap();
    assert_eq!(loaded.input, stem.with_extension("json"));
    assert_eq!(loaded.output_dir, dir.path().join("vox2fea-out"));
    assert_eq!(loaded.sizing.inner, 1.5);
    loaded.validate().unwrap();

    let mut bad = loaded.clone();
    bad.sizing.inner = -1.0;
    assert!(bad.validate().is_err());
    let mut bad = loaded.clone();
    bad.converge.rungs = 1;
    assert!(bad.validate().is_err());
    let mut bad = loaded;
    bad.boundary.materials.insert(
        "plaque".into(),
        vox2fea::config::MaterialSpec::LinearElastic {
            youngs_kpa: 1.0,
            poisson: 0.3,
        },
    );
    assert!(bad.validate().is_err());
}
