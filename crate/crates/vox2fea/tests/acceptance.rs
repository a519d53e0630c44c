//! Acceptance gate. Runs every criterion in order, prints one PASS/FAIL line
//! each and fails if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{block_model, check_golden, desk_params, write_case, KINDS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;
use vox2fea::converge::run_convergence;
use vox2fea::inp::{elset_name, inp_string, material_name, parse_inp};
use vox2fea::pipeline::{interpolate_frames, preprocess_frames};
use vox2fea::{generate_phantom, PhantomKind, PhantomParams, PipelineConfig};
use vox2fea_core::interpolate::{interpolate_pullback, InterpolateConfig, InterpolationPlan};
use vox2fea_core::mesh::{validate_mesh, EDGES};
use vox2fea_core::mesher::{
    check_fidelity, generate_tet_mesh_with, optimize_mesh_with, to_quadratic,
};
use vox2fea_core::microfe::lame_benchmark;
use vox2fea_core::preprocess::build_refinement_layers;
use vox2fea_core::{Frame, LabelCode, LabelVolume, TetMesh};

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, Box<dyn Fn() -> Outcome>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Pixel-centre disk of radius `r_um` on background.
fn disk(n: usize, px: f64, r_um: f64, label: LabelCode) -> Frame {
    let c = n as f64 / 2.0;
    let mut f = Frame::filled(n, n, [px, px], LabelCode::BACKGROUND);
    for y in 0..n {
        for x in 0..n {
            let (dx, dy) = ((x as f64 + 0.5 - c) * px, (y as f64 + 0.5 - c) * px);
            if dx.hypot(dy) <= r_um {
                f.set(x, y, label);
            }
        }
    }
    f
}

fn equivalent_radius(frame: &Frame, label: LabelCode) -> f64 {
    let area = frame.count(label) as f64 * frame.spacing[0] * frame.spacing[1];
    (area / std::f64::consts::PI).sqrt()
}

fn sdf_morph() -> Outcome {
    const PX: f64 = 20.0;
    let (r0, r1, gap) = (200.0, 400.0, 400.0);
    let frames = [
        disk(64, PX, r0, LabelCode::LIPID),
        disk(64, PX, r1, LabelCode::LIPID),
    ];
    let plan = InterpolationPlan::uniform(2, gap, PX);
    let cfg = InterpolateConfig {
        labels: vec![LabelCode::LIPID],
    };
    let (vol, _) = interpolate_pullback(&frames, &plan, &cfg).map_err(|e| e.to_string())?;
    let slices = vol.dims()[2];
    ensure(slices == 21, || format!("{slices} slices"))?;
    let mut worst: f64 = 0.0;
    for z in 1..slices - 1 {
        let t = z as f64 * PX / gap;
        let law = r0 + t * (r1 - r0);
        let r = equivalent_radius(&vol.slice(z), LabelCode::LIPID);
        worst = worst.max((r - law).abs() / PX);
    }
    ensure(worst <= 0.5, || {
        format!("radius off the linear law by {worst:.3} voxels")
    })?;
    Ok(format!(
        "{} intermediate slices, worst deviation {worst:.3} voxels",
        slices - 2
    ))
}

fn endpoint_fidelity() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut checked = 0;
    for kind in KINDS {
        let phantom = generate_phantom(kind, &desk_params(kind)).map_err(|e| e.to_string())?;
        let (pre, _) = preprocess_frames(&phantom.volume, &cfg).map_err(|e| e.to_string())?;
        let (vol, _) = interpolate_frames(&pre, &cfg).map_err(|e| e.to_string())?;
        let positions = vol.frame_positions().ok_or("no frame positions")?.to_vec();
        ensure(positions.len() == pre.dims()[2], || {
            format!("{}: frame count", kind.name())
        })?;
        for (k, z) in positions.into_iter().enumerate() {
            ensure(vol.slice(z) == pre.slice(k), || {
                format!("{} frame {k} differs", kind.name())
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} frames over 4 phantoms identical"))
}

/// Smallest distance between voxel centres of two masks.
fn min_distance(frame: &Frame, from: &[usize], to: &[usize]) -> f64 {
    let s = frame.spacing[0];
    let xy = |i: usize| ((i % frame.nx) as f64 * s, (i / frame.nx) as f64 * s);
    let mut best = f64::INFINITY;
    for &a in from {
        let (ax, ay) = xy(a);
        for &b in to {
            let (bx, by) = xy(b);
            best = best.min((ax - bx).hypot(ay - by));
        }
    }
    best
}

/// Component sizes of `label` under 8-connectivity by flood fill.
fn component_sizes(frame: &Frame, label: LabelCode) -> Vec<usize> {
    let (nx, ny) = (frame.nx as i64, frame.ny as i64);
    let mut seen = vec![false; frame.len()];
    let mut sizes = Vec::new();
    for start in 0..frame.len() {
        if seen[start] || frame.data[start] != label {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut n = 0;
        while let Some(i) = stack.pop() {
            n += 1;
            let (x, y) = ((i % frame.nx) as i64, (i / frame.nx) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (u, v) = (x + dx, y + dy);
                    if u < 0 || v < 0 || u >= nx || v >= ny {
                        continue;
                    }
                    let j = (u + v * nx) as usize;
                    if !seen[j] && frame.data[j] == label {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        sizes.push(n);
    }
    sizes
}

fn preprocessing_thresholds() -> Outcome {
    let params = PhantomParams {
        lumen_radius_um: [600.0, 700.0],
        wall_thickness_um: 300.0,
        lipid_cap_um: 60.0,
        lipid_thickness_um: 220.0,
        calcium_radius_um: [100.0, 120.0],
        specks: true,
        ..PhantomParams::for_kind(PhantomKind::ConvergenceRegion)
    };
    let phantom =
        generate_phantom(PhantomKind::ConvergenceRegion, &params).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::default();
    let (pre, _) = preprocess_frames(&phantom.volume, &cfg).map_err(|e| e.to_string())?;
    let diagonal = 20.0 * 2f64.sqrt();
    let (mut thinnest, mut closest_lipid) = (f64::INFINITY, f64::INFINITY);
    for (z, truth) in phantom.truth.frames.iter().enumerate() {
        let f = pre.slice(z);
        let of = |l: LabelCode| (0..f.len()).filter(|&i| f.data[i] == l).collect::<Vec<_>>();
        let lumen = of(LabelCode::LUMEN);
        ensure(!lumen.is_empty(), || format!("frame {z}: no lumen"))?;
        // tissue voxels touching the exterior
        let outer: Vec<usize> = (0..f.len())
            .filter(|&i| {
                let l = f.data[i];
                if l == LabelCode::BACKGROUND || l == LabelCode::LUMEN {
                    return false;
                }
                let (x, y) = (i % f.nx, i / f.nx);
                [
                    (x.wrapping_sub(1), y),
                    (x + 1, y),
                    (x, y.wrapping_sub(1)),
                    (x, y + 1),
                ]
                .iter()
                .any(|&(u, v)| u < f.nx && v < f.ny && f.get(u, v) == LabelCode::BACKGROUND)
            })
            .collect();
        thinnest = thinnest.min(min_distance(&f, &outer, &lumen));
        closest_lipid = closest_lipid.min(min_distance(&f, &of(LabelCode::LIPID), &lumen));
        for l in [LabelCode::WALL, LabelCode::LIPID] {
            let small = component_sizes(&f, l)
                .into_iter()
                .filter(|&n| n < 150)
                .count();
            ensure(small == 0, || {
                format!("frame {z}: {small} small {} components", l.name())
            })?;
        }
        let [sx, sy] = truth.specks[LabelCode::CALCIUM.name()];
        ensure(f.get(sx + 1, sy + 1) == LabelCode::CALCIUM, || {
            format!("frame {z}: calcium speck lost")
        })?;
    }
    ensure(thinnest >= 500.0 - diagonal, || {
        format!("wall {thinnest:.1} um")
    })?;
    ensure(closest_lipid.is_finite(), || {
        "no lipid survived".to_string()
    })?;
    ensure(closest_lipid >= 200.0, || {
        format!("lipid {closest_lipid:.1} um from lumen")
    })?;
    Ok(format!(
        "min wall {thinnest:.1} um (>= {:.1}), lipid >= {closest_lipid:.1} um from lumen, calcium specks kept",
        500.0 - diagonal
    ))
}

fn layered(kind: PhantomKind, cfg: &PipelineConfig) -> Result<LabelVolume, String> {
    let phantom = generate_phantom(kind, &desk_params(kind)).map_err(|e| e.to_string())?;
    let (pre, _) = preprocess_frames(&phantom.volume, cfg).map_err(|e| e.to_string())?;
    let (vol, _) = interpolate_frames(&pre, cfg).map_err(|e| e.to_string())?;
    Ok(build_refinement_layers(&vol, &cfg.preprocess.to_core()))
}

fn mesh_validity() -> Outcome {
    let cfg = PipelineConfig::default();
    let mesh_cfg = cfg
        .mesh
        .to_core(cfg.sizing.to_core().map_err(|e| e.to_string())?);
    let mut lines = Vec::new();
    for kind in KINDS {
        let start = Instant::now();
        let vol = layered(kind, &cfg)?;
        let (mesh, _) = generate_tet_mesh_with(&vol, &mesh_cfg).map_err(|e| e.to_string())?;
        let (mesh, _) = optimize_mesh_with(&mesh, &cfg.optimize.to_core());
        let q = validate_mesh(&mesh);
        let fid = check_fidelity(&mesh, &vol);
        let took = start.elapsed();
        let name = kind.name();
        ensure(
            q.non_conformal_faces == 0 && q.inverted_elements == 0,
            || {
                format!(
                    "{name}: {} non-conformal, {} inverted",
                    q.non_conformal_faces, q.inverted_elements
                )
            },
        )?;
        ensure(q.min_dihedral_deg >= 5.0, || {
            format!("{name}: min dihedral {:.2}", q.min_dihedral_deg)
        })?;
        ensure(fid.hausdorff_voxels <= 1.5, || {
            format!("{name}: Hausdorff {:.3}", fid.hausdorff_voxels)
        })?;
        ensure(fid.worst_volume_error() <= 0.05, || {
            format!("{name}: volume error {:?}", fid.volume_error)
        })?;
        ensure(took < Duration::from_secs(120), || {
            format!("{name}: {took:.1?}")
        })?;
        lines.push(format!(
            "{name} {} el {:.2} deg {:.2} vx {:.1}% {:.0?}",
            q.element_count,
            q.min_dihedral_deg,
            fid.hausdorff_voxels,
            100.0 * fid.worst_volume_error(),
            took
        ));
    }
    Ok(lines.join("; "))
}

/// Kuhn-split box grid with jittered interior nodes and random labels.
fn random_mesh(rng: &mut ChaCha8Rng) -> TetMesh {
    let n = [
        rng.gen_range(1..5),
        rng.gen_range(1..5),
        rng.gen_range(1..4),
    ];
    let h = rng.gen_range(5.0..50.0);
    let id = |x: usize, y: usize, z: usize| x + (n[0] + 1) * (y + (n[1] + 1) * z);
    let mut nodes = Vec::new();
    for z in 0..=n[2] {
        for y in 0..=n[1] {
            for x in 0..=n[0] {
                let mut p = [x as f64 * h, y as f64 * h, z as f64 * h];
                let c = [x, y, z];
                for a in 0..3 {
                    if c[a] > 0 && c[a] < n[a] {
                        p[a] += rng.gen_range(-0.2..0.2) * h;
                    }
                }
                nodes.push(p);
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
    let palette = [
        LabelCode::WALL,
        LabelCode::LIPID,
        LabelCode::CALCIUM,
        LabelCode::INNER_REFINE,
    ];
    let (mut tets, mut labels) = (Vec::new(), Vec::new());
    for z in 0..n[2] {
        for y in 0..n[1] {
            for x in 0..n[0] {
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
                    labels.push(palette[rng.gen_range(0..palette.len())]);
                }
            }
        }
    }
    TetMesh::new(nodes, tets, labels).unwrap()
}

fn quadratic_conversion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for m in 0..100 {
        let linear = random_mesh(&mut rng);
        let edges: BTreeSet<(usize, usize)> = linear
            .tets
            .iter()
            .flat_map(|t| EDGES.map(|[a, b]| (t[a].min(t[b]), t[a].max(t[b]))))
            .collect();
        let quad = to_quadratic(&linear).map_err(|e| e.to_string())?;
        let want = linear.nodes.len() + edges.len();
        ensure(quad.nodes.len() == want, || {
            format!("mesh {m}: {} nodes, want {want}", quad.nodes.len())
        })?;
        for (t, mid) in quad.tets.iter().zip(&quad.mid_nodes) {
            for (k, [a, b]) in EDGES.iter().enumerate() {
                let (pa, pb, pm) = (quad.nodes[t[*a]], quad.nodes[t[*b]], quad.nodes[mid[k]]);
                for c in 0..3 {
                    worst = worst.max((pm[c] - 0.5 * (pa[c] + pb[c])).abs());
                }
            }
        }
    }
    ensure(worst < 1e-9, || format!("midside deviation {worst:e} um"))?;
    Ok(format!(
        "100 meshes, node counts exact, max midside deviation {worst:e} um"
    ))
}

/// Counts `(nodes, elements)` by scanning deck lines without the parser.
fn raw_counts(text: &str) -> (usize, usize) {
    let mut section = "";
    let (mut nodes, mut elements) = (0, 0);
    for line in text.lines() {
        if line.starts_with('*') {
            section = line.split(',').next().unwrap();
            continue;
        }
        match section {
            "*NODE" => nodes += 1,
            "*ELEMENT" => elements += 1,
            _ => {}
        }
    }
    (nodes, elements)
}

fn export_round_trip() -> Outcome {
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    for (quadratic, golden) in [(false, "block_linear.inp"), (true, "block_quadratic.inp")] {
        let model = block_model(quadratic);
        let mesh = &model.mesh;
        let text = inp_string(&model).map_err(|e| e.to_string())?;
        let deck = parse_inp(&text)?;
        ensure(
            raw_counts(&text) == (mesh.nodes.len(), mesh.tets.len()),
            || "raw line counts".into(),
        )?;
        ensure(deck.nodes.len() == mesh.nodes.len(), || "node count".into())?;
        ensure(deck.elements.len() == mesh.tets.len(), || {
            "element count".into()
        })?;
        for l in mesh.labels_present() {
            let n = mesh.labels.iter().filter(|&&x| x == l).count();
            ensure(deck.elsets[&elset_name(l)].len() == n, || {
                format!("set {}", l.name())
            })?;
        }
        let surf = &model.boundary.load_surface_name;
        ensure(
            deck.surfaces[surf].len() == mesh.surfaces[surf].len(),
            || "surface faces".into(),
        )?;
        for set in &model.boundary.endcap_set_names {
            ensure(deck.nsets[set].len() == mesh.node_sets[set].len(), || {
                format!("node set {set}")
            })?;
        }
        let wall = &deck.materials[&material_name(LabelCode::WALL)].1;
        let lipid = &deck.materials[&material_name(LabelCode::LIPID)].1;
        let calcium = &deck.materials[&material_name(LabelCode::CALCIUM)].1;
        ensure(near(wall[0], 0.1279), || format!("wall C10 {}", wall[0]))?;
        ensure(near(lipid[2], 0.0093), || format!("lipid C20 {}", lipid[2]))?;
        ensure(
            calcium.len() == 2 && near(calcium[0], 184.0) && near(calcium[1], 0.495),
            || format!("calcium {calcium:?}"),
        )?;
        ensure(deck.pressures == vec![(surf.clone(), 0.015)], || {
            format!("{:?}", deck.pressures)
        })?;
        ensure(inp_string(&block_model(quadratic)).unwrap() == text, || {
            "repeat differs".into()
        })?;
        check_golden(golden, &text)?;
    }
    Ok("counts, sets, surfaces and constants (C10 0.1279, C20 0.0093, E 184, nu 0.495, p 0.015 MPa) match; goldens stable".into())
}

fn lame_convergence() -> Outcome {
    let (a, b, p): (f64, f64, f64) = (1.5, 2.0, 15.0);
    // σθ(a) = p (a² + b²) / (b² − a²)
    let exact = p * (a * a + b * b) / (b * b - a * a);
    ensure((exact - 53.57).abs() < 0.01, || {
        format!("reference {exact}")
    })?;
    let mut errs = Vec::new();
    for n in [[2, 6, 1], [4, 12, 1], [8, 24, 2]] {
        let (hoop, _) = lame_benchmark(a, b, p, (767.4, 0.3), n).map_err(|e| e.to_string())?;
        errs.push(100.0 * (hoop - exact).abs() / exact);
    }
    ensure(errs.windows(2).all(|w| w[1] < w[0]), || {
        format!("errors {errs:.2?} not decreasing")
    })?;
    ensure(errs[2] < 10.0, || format!("finest error {:.2}%", errs[2]))?;
    Ok(format!(
        "hoop stress errors {errs:.2?} % against {exact:.2} kPa"
    ))
}

fn convergence_property(dir: &Path) -> Outcome {
    // kind geometry scaled down; default probes keep clear of the end caps
    let params = PhantomParams {
        frames: 9,
        lumen_radius_um: [600.0, 700.0],
        wall_thickness_um: 800.0,
        ..PhantomParams::for_kind(PhantomKind::ConvergenceRegion)
    };
    let extra = "[converge]\nrungs = 2\n";
    let cfg_path = write_case(dir, PhantomKind::ConvergenceRegion, &params, extra);
    let cfg = PipelineConfig::load(&cfg_path).map_err(|e| e.to_string())?;
    let run = run_convergence(&cfg).map_err(|e| e.to_string())?;
    let ratio = run.rungs[1].inner_layer_elements as f64 / run.rungs[0].inner_layer_elements as f64;
    ensure((1.5..3.0).contains(&ratio), || {
        format!("inner-layer element ratio {ratio:.2}")
    })?;
    let e = &run.report.rungs[0];
    let strain = e.with_calcium.iter().map(|x| x.1).fold(0.0, f64::max);
    let stress = e.without_calcium.iter().map(|x| x.0).fold(0.0, f64::max);
    let stress_all = e.with_calcium.iter().map(|x| x.0).fold(0.0, f64::max);
    ensure(strain <= 10.0, || {
        format!(
            "peak strain error {strain:.2}% per slice {:?}",
            e.with_calcium
        )
    })?;
    ensure(stress <= 15.0, || {
        format!(
            "peak stress error {stress:.2}% per slice {:?}",
            e.without_calcium
        )
    })?;
    Ok(format!(
        "{} -> {} elements (inner x{ratio:.2}), probes {:?} um; worst slice strain {strain:.2}%, \
         stress {stress:.2}% outside calcium ({stress_all:.1}% including calcium)",
        run.rungs[0].element_count, run.rungs[1].element_count, run.report.probes.z_um
    ))
}

fn determinism(dir: &Path) -> Outcome {
    let bin = env!("CARGO_BIN_EXE_vox2fea");
    let mut manifests = Vec::new();
    for name in ["a", "b"] {
        let case = dir.join(name);
        let out = Command::new(bin)
            .args([
                "phantom",
                "--kind",
                "eccentric-lipid",
                "--lumen-radius-um",
                "700",
                "--name",
                "ph",
                "--out",
            ])
            .arg(&case)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        fs::write(
            case.join("cfg.toml"),
            "input = \"ph.json\"\noutput_dir = \"out\"\n[stages]\nverify = true\n",
        )
        .map_err(|e| e.to_string())?;
        let run = Command::new(bin)
            .args(["--log", "warn", "run", "--config"])
            .arg(case.join("cfg.toml"))
            .output()
            .map_err(|e| e.to_string())?;
        ensure(run.status.success(), || {
            String::from_utf8_lossy(&run.stderr).into_owned()
        })?;
        manifests.push(fs::read(case.join("out/manifest.json")).map_err(|e| e.to_string())?);
    }
    ensure(manifests[0] == manifests[1], || "manifests differ".into())?;
    Ok(format!(
        "two runs, identical {}-byte manifests",
        manifests[0].len()
    ))
}

#[test]
fn acceptance() {
    let scratch = tempdir().unwrap();
    let conv_dir = scratch.path().join("converge");
    let det_dir = scratch.path().join("determinism");
    let criteria: Vec<Criterion> = vec![
        ("1 sdf morph", 5, Box::new(sdf_morph)),
        ("2 endpoint fidelity", 10, Box::new(endpoint_fidelity)),
        (
            "3 preprocessing thresholds",
            5,
            Box::new(preprocessing_thresholds),
        ),
        ("4 mesh validity", 4 * 120, Box::new(mesh_validity)),
        ("5 quadratic conversion", 30, Box::new(quadratic_conversion)),
        ("6 export round trip", 10, Box::new(export_round_trip)),
        ("7 lame convergence", 300, Box::new(lame_convergence)),
        (
            "8 convergence property",
            900,
            Box::new(move || convergence_property(&conv_dir)),
        ),
        (
            "9 determinism",
            300,
            Box::new(move || determinism(&det_dir)),
        ),
    ];
    let mut failed = Vec::new();
    for (name, limit, check) in &criteria {
        let start = Instant::now();
        let mut outcome = check();
        let took = start.elapsed();
        if outcome.is_ok() && took > Duration::from_secs(*limit) {
            outcome = Err(format!("took {took:.1?}, limit {limit} s"));
        }
        match outcome {
            Ok(detail) => println!("PASS {name} ({took:.1?}): {detail}"),
            Err(detail) => {
                println!("FAIL {name} ({took:.1?}): {detail}");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
