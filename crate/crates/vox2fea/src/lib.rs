//! File formats, synthetic phantoms, the staged pipeline and the command
//! line on top of [`vox2fea_core`].
//!
//! * [`labelmap`]: JSON sidecar plus raw byte voxels.
//! * [`inp`]: ABAQUS keyword deck writer and a reader for checking decks.
//! * [`mesh_io`]: lossless JSON meshes and legacy VTK output.
//! * [`phantom`]: deterministic test pullbacks with ground truth.
//! * [`pipeline`] and [`converge`]: end-to-end runs and refinement ladders.

// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod config;
pub mod converge;
mod error;
pub mod inp;
pub mod labelmap;
pub mod mesh_io;
pub mod phantom;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use labelmap::{load_label_volume, save_label_volume};
pub use phantom::{generate_phantom, PhantomKind, PhantomParams};
pub use pipeline::{run_pipeline, Artifacts};
pub use vox2fea_core as core;
