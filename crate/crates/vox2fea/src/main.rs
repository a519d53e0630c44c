use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use vox2fea::converge::{report_table, run_convergence};
use vox2fea::inp::parse_inp;
use vox2fea::mesh_io::load_mesh;
use vox2fea::phantom::write_phantom;
use vox2fea::{
    generate_phantom, run_pipeline, Error, PhantomKind, PhantomParams, PipelineConfig, Result,
};
use vox2fea_core::mesh::validate_mesh;
use vox2fea_core::{LabelCode, TetMesh};

#[derive(Parser)]
#[command(
    name = "vox2fea",
    version,
    about = "Labeled vessel frames to tetrahedral FE models"
)]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a synthetic pullback and its ground truth.
    Phantom {
        #[arg(long, value_enum)]
        kind: PhantomKind,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// File stem; defaults to the kind name.
        #[arg(long)]
        name: Option<String>,
        /// TOML file overriding generator parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        lumen_radius_um: Option<f64>,
        #[arg(long)]
        wall_thickness_um: Option<f64>,
        #[arg(long)]
        specks: bool,
    },
    /// Mesh-refinement ladder with the built-in solver.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        rungs: Option<usize>,
    },
    /// Check a mesh (`.json` from the pipeline or an `.inp` deck).
    Validate { mesh: PathBuf },
}

fn mesh_from_inp(path: &Path) -> Result<TetMesh> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let bad = |message: String| Error::Format {
        path: path.into(),
        message,
    };
    let deck = parse_inp(&text).map_err(bad)?;
    let mut tets = Vec::with_capacity(deck.elements.len());
    for e in &deck.elements {
        if e.len() != 4 && e.len() != 10 || e.iter().any(|&n| n == 0 || n > deck.nodes.len()) {
            return Err(bad(format!("unsupported element {e:?}")));
        }
        tets.push([e[0] - 1, e[1] - 1, e[2] - 1, e[3] - 1]);
    }
    let mut labels = vec![LabelCode::WALL; tets.len()];
    for (name, ids) in &deck.elsets {
        if let Some(l) = LabelCode::PALETTE
            .iter()
            .find(|l| vox2fea::inp::elset_name(**l) == *name)
        {
            for &id in ids {
                if let Some(slot) = labels.get_mut(id.wrapping_sub(1)) {
                    *slot = *l;
                }
            }
        }
    }
    let mut mesh = TetMesh::new(deck.nodes.clone(), tets, labels)?;
    if deck.elements.first().is_some_and(|e| e.len() == 10) {
        mesh.mid_nodes = deck
            .elements
            .iter()
            .map(|e| std::array::from_fn(|i| e.get(4 + i).map_or(0, |n| n - 1)))
            .collect();
    }
    Ok(mesh)
}

/// Kind defaults with the keys present in a TOML file replaced.
fn override_params(base: &PhantomParams, path: &Path) -> Result<PhantomParams> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let config = |e: &dyn std::fmt::Display| Error::Config(format!("{}: {e}", path.display()));
    let overrides: toml::Table = toml::from_str(&text).map_err(|e| config(&e))?;
    let mut merged = toml::Table::try_from(base).map_err(|e| config(&e))?;
    merged.extend(overrides);
    merged.try_into().map_err(|e| config(&e))
}

fn validate(path: &Path) -> Result<()> {
    let mesh = match path.extension().and_then(|e| e.to_str()) {
        Some("inp") => mesh_from_inp(path)?,
        _ => load_mesh(path)?,
    };
    let r = validate_mesh(&mesh);
    println!("elements            {}", r.element_count);
    println!("nodes               {}", r.node_count);
    println!("min dihedral (deg)  {:.3}", r.min_dihedral_deg);
    println!("median dihedral     {:.3}", r.median_dihedral_deg);
    println!("inverted elements   {}", r.inverted_elements);
    println!("non-conformal faces {}", r.non_conformal_faces);
    println!("dangling faces      {}", r.dangling_faces);
    for (l, c) in &r.label_counts {
        println!("label {:<14} {c}", l.name());
    }
    if r.is_valid() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{} is not a valid mesh",
            path.display()
        )))
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = PipelineConfig::load(&config)?;
            let art = run_pipeline(&cfg)?;
            println!(
                "wrote {} ({} elements, {} cached stages)",
                art.inp_path.display(),
                art.model.mesh.tets.len(),
                art.cached.len()
            );
        }
        Command::Phantom {
            kind,
            out,
            name,
            params,
            frames,
            lumen_radius_um,
            wall_thickness_um,
            specks,
        } => {
            let mut p = PhantomParams::for_kind(kind);
            if let Some(path) = params {
                p = override_params(&p, &path)?;
            }
            if let Some(f) = frames {
                p.frames = f;
            }
            if let Some(r) = lumen_radius_um {
                p.lumen_radius_um = [r, r];
            }
            if let Some(t) = wall_thickness_um {
                p.wall_thickness_um = t;
            }
            p.specks |= specks;
            let phantom = generate_phantom(kind, &p)?;
            let stem = name.unwrap_or_else(|| kind.name().to_string());
            for f in write_phantom(&phantom, &out, &stem)? {
                println!("{}", f.display());
            }
        }
        Command::Converge { config, rungs } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(n) = rungs {
                cfg.converge.rungs = n;
            }
            let run = run_convergence(&cfg)?;
            print!("{}", report_table(&run));
        }
        Command::Validate { mesh } => validate(&mesh)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .format_timestamp(None)
        .init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
