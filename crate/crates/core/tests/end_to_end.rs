//! Frames to solved model entirely in memory on a small lipid-bearing vessel.

use vox2fea_core::fem::material_cards;
use vox2fea_core::interpolate::{interpolate_pullback, InterpolateConfig, InterpolationPlan};
use vox2fea_core::mesher::{check_fidelity, generate_tet_mesh, optimize_mesh};
use vox2fea_core::microfe::{solve_model, SolverConfig};
use vox2fea_core::preprocess::{build_refinement_layers, preprocess_frame, PreprocessConfig};
use vox2fea_core::{BoundarySpec, FeaModel, Frame, LabelCode, SizingField};

const PX: f64 = 20.0;
const N: usize = 100;

/// Vessel of lumen radius `r_in` pixels with a 30-pixel wall and a lipid
/// crescent of half angle `lipid_deg` twelve pixels behind the lumen.
fn frame(r_in: f64, lipid_deg: f64) -> Frame {
    let c = N as f64 / 2.0;
    let mut f = Frame::filled(N, N, [PX, PX], LabelCode::BACKGROUND);
    for y in 0..N {
        for x in 0..N {
            let (dx, dy) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c);
            let r = dx.hypot(dy);
            let ang = dy.atan2(dx).to_degrees().abs();
            if r >= r_in && r < r_in + 30.0 {
                let lipid = r >= r_in + 12.0 && r < r_in + 20.0 && ang <= lipid_deg;
                f.set(
                    x,
                    y,
                    if lipid {
                        LabelCode::LIPID
                    } else {
                        LabelCode::FIBROUS
                    },
                );
            }
        }
    }
    f
}

#[test]
fn pullback_to_pressurized_model() {
    let cfg = PreprocessConfig::default();
    let raw = [frame(12.0, 40.0), frame(13.0, 50.0), frame(14.0, 60.0)];
    let pre: Vec<Frame> = raw
        .iter()
        .map(|f| preprocess_frame(f, &cfg).unwrap().0)
        .collect();
    for f in &pre {
        assert!(f.count(LabelCode::LUMEN) > 0);
    }

    let plan = InterpolationPlan::uniform(3, 200.0, PX);
    let (vol, _) = interpolate_pullback(&pre, &plan, &InterpolateConfig::default()).unwrap();
    assert_eq!(vol.dims(), [N, N, 21]);
    for (k, &z) in vol.frame_positions().unwrap().iter().enumerate() {
        assert_eq!(vol.slice(z), pre[k], "frame {k}");
    }

    let layered = build_refinement_layers(&vol, &cfg);
    assert!(layered.contains_label(LabelCode::INNER_REFINE));
    let mesh = generate_tet_mesh(&layered, &SizingField::graded(2.83)).unwrap();
    let (mesh, report) = optimize_mesh(&mesh, 15.0);
    assert!(report.is_valid(), "{report:?}");
    assert!(report.min_dihedral_deg >= 5.0);
    let fid = check_fidelity(&mesh, &layered);
    assert!(fid.hausdorff_voxels <= 1.5, "{fid:?}");
    assert!(fid.worst_volume_error() <= 0.05, "{fid:?}");

    let model = FeaModel::build(&mesh, material_cards(), BoundarySpec::default()).unwrap();
    model.validate().unwrap();
    assert!(!model.mesh.labels.contains(&LabelCode::LUMEN));

    let result = solve_model(&model, &SolverConfig::default()).unwrap();
    assert!(result.relative_residual <= 1e-8);
    // pressure pushes the lumen surface outwards
    let surface = &model.mesh.surfaces[&model.boundary.load_surface_name];
    let axis = [N as f64 * PX / 2.0; 2];
    let mut outward = 0.0;
    for &(e, f) in surface {
        for n in model.mesh.face_nodes(e, f) {
            let p = model.mesh.nodes[n];
            let (rx, ry) = (p[0] - axis[0], p[1] - axis[1]);
            let u = result.displacements[n];
            outward += (u[0] * rx + u[1] * ry) / rx.hypot(ry);
        }
    }
    assert!(outward > 0.0);
    assert!(result.peak_von_mises.0 > 0.0 && result.peak_principal_strain.0 > 0.0);
}
