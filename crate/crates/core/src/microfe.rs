//! Small-strain linear-elastic solver on four-node tetrahedra.
//!
//! The solver is unit-agnostic: coordinates, moduli and pressures only need
//! to be consistent. [`solve_model`] runs an [`FeaModel`] in millimetres and
//! MPa.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::fem::FeaModel;
use crate::geom::{self, Vec3};
use crate::label::LabelCode;
use crate::mesh::{MeshOrder, TetMesh};
use crate::{Error, Result};

pub type Sym3 = [[f64; 3]; 3];

/// Symmetric stiffness in 3×3 node blocks, both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    blocks: Vec<[f64; 9]>,
}

impl BlockMatrix {
    fn with_pattern(node_count: usize, tets: &[[usize; 4]]) -> Self {
        let mut nb: Vec<Vec<usize>> = vec![Vec::new(); node_count];
        for t in tets {
            for &a in t {
                for &b in t {
                    nb[a].push(b);
                }
            }
        }
        let mut row_start = Vec::with_capacity(node_count + 1);
        let mut cols = Vec::new();
        row_start.push(0);
        for (i, list) in nb.iter_mut().enumerate() {
            list.push(i);
            list.sort_unstable();
            list.dedup();
            cols.extend_from_slice(list);
            row_start.push(cols.len());
        }
        let blocks = vec![[0.0; 9]; cols.len()];
        Self {
            row_start,
            cols,
            blocks,
        }
    }

    pub fn node_count(&self) -> usize {
        self.row_start.len() - 1
    }

    fn slot(&self, row: usize, col: usize) -> usize {
        let range = self.row_start[row]..self.row_start[row + 1];
        let k = self.cols[range.clone()]
            .binary_search(&col)
            .expect("entry outside sparsity pattern");
        range.start + k
    }

    /// Entry for degrees of freedom `i` and `j` (node·3 + component).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_start[i / 3]..self.row_start[i / 3 + 1];
        match self.cols[range.clone()].binary_search(&(j / 3)) {
            Ok(k) => self.blocks[range.start + k][(i % 3) * 3 + j % 3],
            Err(_) => 0.0,
        }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.node_count() {
            let mut acc = [0.0; 3];
            for k in self.row_start[i]..self.row_start[i + 1] {
                let j = self.cols[k];
                let b = &self.blocks[k];
                let xj = [x[3 * j], x[3 * j + 1], x[3 * j + 2]];
                for r in 0..3 {
                    acc[r] += b[3 * r] * xj[0] + b[3 * r + 1] * xj[1] + b[3 * r + 2] * xj[2];
                }
            }
            y[3 * i..3 * i + 3].copy_from_slice(&acc);
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; 3 * self.node_count()];
        for i in 0..self.node_count() {
            let b = &self.blocks[self.slot(i, i)];
            d[3 * i] = b[0];
            d[3 * i + 1] = b[4];
            d[3 * i + 2] = b[8];
        }
        d
    }

    /// Largest |K_ij − K_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.node_count() {
            for k in self.row_start[i]..self.row_start[i + 1] {
                let j = self.cols[k];
                let t = &self.blocks[self.slot(j, i)];
                let b = &self.blocks[k];
                for r in 0..3 {
                    for c in 0..3 {
                        worst = worst.max((b[3 * r + c] - t[3 * c + r]).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Assembled linear system.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub stiffness: BlockMatrix,
    pub loads: Vec<f64>,
}

/// Isotropic elasticity matrix in Voigt order xx, yy, zz, yz, xz, xy with
/// engineering shear strains.
pub fn elasticity_matrix(e: f64, nu: f64) -> [[f64; 6]; 6] {
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let mut d = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = lambda;
        }
        d[i][i] = lambda + 2.0 * mu;
        d[i + 3][i + 3] = mu;
    }
    d
}

/// Shape-function gradients of a linear tet and its volume.
fn gradients(p: [Vec3; 4]) -> Option<([Vec3; 4], f64)> {
    let v = geom::tet_volume(p[0], p[1], p[2], p[3]);
    if !(v > 0.0) {
        return None;
    }
    let mut g = [[0.0; 3]; 4];
    for (i, gi) in g.iter_mut().enumerate() {
        // gradient of barycentric i = area normal of the opposite face / 3V,
        // pointing towards vertex i
        let o = [(i + 1) % 4, (i + 2) % 4, (i + 3) % 4];
        let n = geom::tri_normal(p[o[0]], p[o[1]], p[o[2]]);
        let s = if geom::dot(n, geom::sub(p[i], p[o[0]])) > 0.0 {
            1.0
        } else {
            -1.0
        };
        *gi = geom::scale(n, s / (6.0 * v));
    }
    Some((g, v))
}

/// Strain-displacement rows for one node's gradient.
fn b_block(g: Vec3) -> [[f64; 3]; 6] {
    [
        [g[0], 0.0, 0.0],
        [0.0, g[1], 0.0],
        [0.0, 0.0, g[2]],
        [0.0, g[2], g[1]],
        [g[2], 0.0, g[0]],
        [g[1], g[0], 0.0],
    ]
}

/// Assembles the stiffness for `materials[e] = (E, ν)` and consistent nodal
/// loads for `pressure` acting on `load_faces`. Faces are corner triples whose
/// right-hand normal points out of the body; the pressure pushes against it.
pub fn assemble(
    mesh: &TetMesh,
    materials: &[(f64, f64)],
    load_faces: &[[usize; 3]],
    pressure: f64,
) -> Result<System> {
    if mesh.order() != MeshOrder::Linear {
        return Err(Error::NotLinear);
    }
    if materials.len() != mesh.tets.len() {
        return Err(Error::SizeMismatch {
            expected: mesh.tets.len(),
            actual: materials.len(),
        });
    }
    let mut k = BlockMatrix::with_pattern(mesh.nodes.len(), &mesh.tets);
    for (e, t) in mesh.tets.iter().enumerate() {
        let (g, v) = gradients(mesh.points(e)).ok_or(Error::DegenerateElement(e))?;
        let (young, nu) = materials[e];
        let d = elasticity_matrix(young, nu);
        let b: [[[f64; 3]; 6]; 4] = g.map(b_block);
        for a in 0..4 {
            // D·B_a
            let mut db = [[0.0; 3]; 6];
            for r in 0..6 {
                for c in 0..3 {
                    db[r][c] = (0..6).map(|m| d[r][m] * b[a][m][c]).sum();
                }
            }
            for bb in 0..4 {
                let slot = k.slot(t[bb], t[a]);
                let blk = &mut k.blocks[slot];
                for r in 0..3 {
                    for c in 0..3 {
                        let s: f64 = (0..6).map(|m| b[bb][m][r] * db[m][c]).sum();
                        blk[3 * r + c] += v * s;
                    }
                }
            }
        }
    }
    // symmetrize exactly: average mirrored entries
    for i in 0..k.node_count() {
        for s in k.row_start[i]..k.row_start[i + 1] {
            let j = k.cols[s];
            if j < i {
                continue;
            }
            let m = k.slot(j, i);
            for r in 0..3 {
                for c in 0..3 {
                    let avg = 0.5 * (k.blocks[s][3 * r + c] + k.blocks[m][3 * c + r]);
                    k.blocks[s][3 * r + c] = avg;
                    k.blocks[m][3 * c + r] = avg;
                }
            }
        }
    }
    let mut loads = vec![0.0; 3 * mesh.nodes.len()];
    for f in load_faces {
        let n = geom::scale(
            geom::tri_normal(mesh.nodes[f[0]], mesh.nodes[f[1]], mesh.nodes[f[2]]),
            0.5,
        );
        for &node in f {
            for c in 0..3 {
                loads[3 * node + c] -= pressure * n[c] / 3.0;
            }
        }
    }
    Ok(System {
        stiffness: k,
        loads,
    })
}

/// Prescribed displacement component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub node: usize,
    pub dof: usize,
    pub value: f64,
}

/// All three components of every node in `nodes` fixed to zero.
pub fn fix_nodes(nodes: &[usize]) -> Vec<Constraint> {
    nodes
        .iter()
        .flat_map(|&node| {
            (0..3).map(move |dof| Constraint {
                node,
                dof,
                value: 0.0,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub displacements: Vec<Vec3>,
    pub strain: Vec<Sym3>,
    pub stress: Vec<Sym3>,
    pub von_mises: Vec<f64>,
    pub max_principal_strain: Vec<f64>,
    /// (value, element)
    pub peak_von_mises: (f64, usize),
    pub peak_principal_strain: (f64, usize),
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients on the unconstrained degrees
/// of freedom.
pub fn solve_displacements(
    system: &System,
    constraints: &[Constraint],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, usize, f64)> {
    let k = &system.stiffness;
    let n = system.loads.len();
    let mut fixed = vec![false; n];
    let mut u = vec![0.0; n];
    for c in constraints {
        if c.node * 3 + c.dof >= n || c.dof > 2 {
            return Err(Error::InvalidModel(format!(
                "constraint on node {} dof {} is out of range",
                c.node, c.dof
            )));
        }
        fixed[3 * c.node + c.dof] = true;
        u[3 * c.node + c.dof] = c.value;
    }
    let diag = k.diagonal();
    let mut ku = vec![0.0; n];
    k.mul(&u, &mut ku);
    let mut r: Vec<f64> = (0..n)
        .map(|i| {
            if fixed[i] {
                0.0
            } else {
                system.loads[i] - ku[i]
            }
        })
        .collect();
    let norm = |v: &[f64]| libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    let b_norm = norm(&r);
    if b_norm == 0.0 {
        return Ok((u, 0, 0.0));
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if fixed[i] || diag[i] <= 0.0 {
                0.0
            } else {
                r[i] / diag[i]
            };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut q = vec![0.0; n];
    for it in 1..=cfg.max_iterations {
        k.mul(&p, &mut q);
        for i in 0..n {
            if fixed[i] {
                q[i] = 0.0;
            }
        }
        let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        if !(pq > 0.0) {
            return Err(Error::Singular(format!(
                "search direction has non-positive curvature {pq:e} at iteration {it}"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let res = norm(&r) / b_norm;
        if res <= cfg.tolerance {
            return Ok((u, it, res));
        }
        precond(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iterations,
        residual: norm(&r) / b_norm,
    })
}

/// Solves and evaluates strains and stresses per element.
pub fn solve(
    mesh: &TetMesh,
    materials: &[(f64, f64)],
    system: &System,
    constraints: &[Constraint],
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let (u, iterations, relative_residual) = solve_displacements(system, constraints, cfg)?;
    let displacements: Vec<Vec3> = u.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let mut strain = Vec::with_capacity(mesh.tets.len());
    let mut stress = Vec::with_capacity(mesh.tets.len());
    let mut von_mises = Vec::with_capacity(mesh.tets.len());
    let mut max_principal_strain = Vec::with_capacity(mesh.tets.len());
    for (e, t) in mesh.tets.iter().enumerate() {
        let (g, _) = gradients(mesh.points(e)).ok_or(Error::DegenerateElement(e))?;
        let mut grad_u = [[0.0; 3]; 3];
        for (a, &node) in t.iter().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    grad_u[i][j] += displacements[node][i] * g[a][j];
                }
            }
        }
        let mut eps = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                eps[i][j] = 0.5 * (grad_u[i][j] + grad_u[j][i]);
            }
        }
        let (young, nu) = materials[e];
        let lambda = young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = young / (2.0 * (1.0 + nu));
        let tr = eps[0][0] + eps[1][1] + eps[2][2];
        let mut sig = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                sig[i][j] = 2.0 * mu * eps[i][j] + if i == j { lambda * tr } else { 0.0 };
            }
        }
        von_mises.push(von_mises_of(&sig));
        max_principal_strain.push(eigenvalues(&eps)[2]);
        strain.push(eps);
        stress.push(sig);
    }
    let peak = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold((f64::NEG_INFINITY, 0), |best, (i, &x)| {
                if x > best.0 {
                    (x, i)
                } else {
                    best
                }
            })
    };
    Ok(SolveResult {
        peak_von_mises: peak(&von_mises),
        peak_principal_strain: peak(&max_principal_strain),
        displacements,
        strain,
        stress,
        von_mises,
        max_principal_strain,
        iterations,
        relative_residual,
    })
}

pub fn von_mises_of(s: &Sym3) -> f64 {
    let d = [s[0][0] - s[1][1], s[1][1] - s[2][2], s[2][2] - s[0][0]];
    let shear = s[0][1] * s[0][1] + s[1][2] * s[1][2] + s[0][2] * s[0][2];
    libm::sqrt(0.5 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) + 3.0 * shear)
}

/// Eigenvalues of a symmetric 3×3 matrix, ascending.
pub fn eigenvalues(a: &Sym3) -> [f64; 3] {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut e = [a[0][0], a[1][1], a[2][2]];
        e.sort_by(f64::total_cmp);
        return e;
    }
    let (d0, d1, d2) = (a[0][0] - q, a[1][1] - q, a[2][2] - q);
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
    let p = libm::sqrt(p2 / 6.0);
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = libm::acos(r) / 3.0;
    let e3 = q + 2.0 * p * libm::cos(phi);
    let e1 = q + 2.0 * p * libm::cos(phi + 2.0 * core::f64::consts::PI / 3.0);
    let e2 = 3.0 * q - e1 - e3;
    [e1, e2, e3]
}

/// Reaction forces K·u − f at every degree of freedom.
pub fn residual_forces(system: &System, u: &[f64]) -> Vec<f64> {
    let mut ku = vec![0.0; u.len()];
    system.stiffness.mul(u, &mut ku);
    ku.iter().zip(&system.loads).map(|(a, b)| a - b).collect()
}

/// Linear solve of an FE model with its caps fixed and the lumen pressure
/// applied, in millimetres and MPa (displacements mm, stresses MPa).
pub fn solve_model(model: &FeaModel, cfg: &SolverConfig) -> Result<SolveResult> {
    model.validate()?;
    let mut mesh = model.mesh.clone();
    if mesh.order() != MeshOrder::Linear {
        return Err(Error::NotLinear);
    }
    for p in &mut mesh.nodes {
        *p = geom::scale(*p, 1e-3);
    }
    let materials: Vec<(f64, f64)> = model
        .linearized_materials()?
        .into_iter()
        .map(|(e, nu)| (e * 1e-3, nu))
        .collect();
    let system = assemble(
        &mesh,
        &materials,
        &model.load_faces(),
        model.boundary.pressure_kpa * 1e-3,
    )?;
    let mut fixed: Vec<usize> = Vec::new();
    for name in &model.boundary.endcap_set_names {
        fixed.extend_from_slice(&model.mesh.node_sets[name]);
    }
    fixed.sort_unstable();
    fixed.dedup();
    solve(&mesh, &materials, &system, &fix_nodes(&fixed), cfg)
}

/// Thin slabs across the stack where peaks are compared.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSlices {
    pub z_um: Vec<f64>,
    pub half_width_um: f64,
}

/// Peak von Mises stress and principal strain per probe slice for one rung.
#[derive(Debug, Clone, PartialEq)]
pub struct RungPeaks {
    pub element_count: usize,
    pub probes: ProbeSlices,
    /// (stress, strain) per slice, all elements.
    pub with_calcium: Vec<(f64, f64)>,
    /// (stress, strain) per slice, calcium elements skipped.
    pub without_calcium: Vec<(f64, f64)>,
}

/// Slice peaks of a solved mesh; elements belong to a slice when their
/// centroid lies within the half width of its z position.
pub fn slice_peaks(mesh: &TetMesh, result: &SolveResult, probes: &ProbeSlices) -> RungPeaks {
    let mut with = vec![(0.0f64, 0.0f64); probes.z_um.len()];
    let mut without = with.clone();
    for e in 0..mesh.tets.len() {
        let z = mesh.centroid(e)[2];
        for (k, &zp) in probes.z_um.iter().enumerate() {
            if (z - zp).abs() > probes.half_width_um {
                continue;
            }
            let (s, d) = (result.von_mises[e], result.max_principal_strain[e]);
            with[k].0 = with[k].0.max(s);
            with[k].1 = with[k].1.max(d);
            if mesh.labels[e] != LabelCode::CALCIUM {
                without[k].0 = without[k].0.max(s);
                without[k].1 = without[k].1.max(d);
            }
        }
    }
    RungPeaks {
        element_count: mesh.tets.len(),
        probes: probes.clone(),
        with_calcium: with,
        without_calcium: without,
    }
}

/// Percentage errors of one rung against the finest.
#[derive(Debug, Clone, PartialEq)]
pub struct RungErrors {
    pub element_count: usize,
    /// Per slice (stress %, strain %), all elements.
    pub with_calcium: Vec<(f64, f64)>,
    pub without_calcium: Vec<(f64, f64)>,
    /// Mean over slices (stress %, strain %).
    pub mean_with_calcium: (f64, f64),
    pub mean_without_calcium: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub probes: ProbeSlices,
    /// One entry per rung in input order; the last is the reference.
    pub rungs: Vec<RungErrors>,
}

fn pct(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * (value - reference).abs() / reference.abs()
    }
}

/// Errors of every rung's slice peaks relative to the last (finest) rung.
pub fn convergence_report(rungs: &[RungPeaks]) -> Result<ConvergenceReport> {
    if rungs.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "convergence needs at least two rungs, got {}",
            rungs.len()
        )));
    }
    let reference = rungs.last().unwrap();
    if rungs.iter().any(|r| r.probes != reference.probes) {
        return Err(Error::ProbeMismatch);
    }
    let errors = |a: &[(f64, f64)], b: &[(f64, f64)]| -> Vec<(f64, f64)> {
        a.iter()
            .zip(b)
            .map(|(x, y)| (pct(x.0, y.0), pct(x.1, y.1)))
            .collect()
    };
    let mean = |v: &[(f64, f64)]| {
        let n = v.len().max(1) as f64;
        (
            v.iter().map(|x| x.0).sum::<f64>() / n,
            v.iter().map(|x| x.1).sum::<f64>() / n,
        )
    };
    let out = rungs
        .iter()
        .map(|r| {
            let w = errors(&r.with_calcium, &reference.with_calcium);
            let wo = errors(&r.without_calcium, &reference.without_calcium);
            RungErrors {
                element_count: r.element_count,
                mean_with_calcium: mean(&w),
                mean_without_calcium: mean(&wo),
                with_calcium: w,
                without_calcium: wo,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        probes: reference.probes.clone(),
        rungs: out,
    })
}

/// Structured mesh of a quarter of a thick-walled cylinder: inner radius
/// `a`, outer `b`, length `len`, with `n = [radial, circumferential, axial]`
/// cells each split into six tetrahedra.
pub fn quarter_cylinder(a: f64, b: f64, len: f64, n: [usize; 3]) -> TetMesh {
    let [nr, nt, nz] = n;
    let id = |i: usize, j: usize, k: usize| i + (nr + 1) * (j + (nt + 1) * k);
    let mut nodes = Vec::with_capacity((nr + 1) * (nt + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=nt {
            for i in 0..=nr {
                let r = a + (b - a) * i as f64 / nr as f64;
                let th = core::f64::consts::FRAC_PI_2 * j as f64 / nt as f64;
                let z = len * k as f64 / nz as f64;
                nodes.push([r * libm::cos(th), r * libm::sin(th), z]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(6 * nr * nt * nz);
    for k in 0..nz {
        for j in 0..nt {
            for i in 0..nr {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut t = [id(i, j, k); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        t[s + 1] = id(c[0], c[1], c[2]);
                    }
                    let p = t.map(|m| nodes[m]);
                    if geom::tet_volume(p[0], p[1], p[2], p[3]) < 0.0 {
                        t.swap(2, 3);
                    }
                    tets.push(t);
                }
            }
        }
    }
    let labels = vec![LabelCode::WALL; tets.len()];
    let mut mesh = TetMesh::new(nodes, tets, labels).expect("valid structured mesh");
    // inner surface faces: elements with three nodes at i = 0
    let mut surface = Vec::new();
    for (e, t) in mesh.tets.iter().enumerate() {
        for f in 1..=4u8 {
            let c = crate::fem::face_corners(f);
            if c.iter().all(|&l| t[l] % (nr + 1) == 0) {
                surface.push((e, f));
            }
        }
    }
    mesh.surfaces.insert("INNER".into(), surface);
    mesh
}

/// Lamé hoop stress at radius `r` for internal pressure `p`.
pub fn lame_hoop_stress(a: f64, b: f64, p: f64, r: f64) -> f64 {
    let k = p * a * a / (b * b - a * a);
    k * (1.0 + b * b / (r * r))
}

/// Solves the pressurized quarter cylinder under plane strain and returns
/// the mean hoop stress of the elements on the inner surface.
pub fn lame_benchmark(
    a: f64,
    b: f64,
    p: f64,
    material: (f64, f64),
    n: [usize; 3],
) -> Result<(f64, SolveResult)> {
    let len = (b - a) * n[2] as f64 / n[0] as f64;
    let mesh = quarter_cylinder(a, b, len, n);
    let faces: Vec<[usize; 3]> = mesh.surfaces["INNER"]
        .iter()
        .map(|&(e, f)| mesh.face_nodes(e, f))
        .collect();
    let materials = vec![material; mesh.tets.len()];
    let system = assemble(&mesh, &materials, &faces, p)?;
    let tol = 1e-9 * b;
    let mut cons = Vec::new();
    for (i, q) in mesh.nodes.iter().enumerate() {
        if q[1].abs() < tol {
            cons.push(Constraint {
                node: i,
                dof: 1,
                value: 0.0,
            });
        }
        if q[0].abs() < tol {
            cons.push(Constraint {
                node: i,
                dof: 0,
                value: 0.0,
            });
        }
        if q[2].abs() < tol || (q[2] - len).abs() < tol {
            cons.push(Constraint {
                node: i,
                dof: 2,
                value: 0.0,
            });
        }
    }
    let result = solve(&mesh, &materials, &system, &cons, &SolverConfig::default())?;
    let mut inner: BTreeMap<usize, ()> = BTreeMap::new();
    for &(e, _) in &mesh.surfaces["INNER"] {
        inner.insert(e, ());
    }
    let mut sum = 0.0;
    for &e in inner.keys() {
        let c = mesh.centroid(e);
        let th = libm::atan2(c[1], c[0]);
        let t = [-libm::sin(th), libm::cos(th), 0.0];
        let s = &result.stress[e];
        let mut h = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                h += t[i] * s[i][j] * t[j];
            }
        }
        sum += h;
    }
    Ok((sum / inner.len() as f64, result))
}
