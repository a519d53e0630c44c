//! Core algorithms for turning stacks of labeled vascular cross-sections into
//! tetrahedral finite-element models.
//!
//! Everything here is pure computation over in-memory values and builds without
//! `std` (an allocator is required). File formats, configuration and the command
//! line live in the `vox2fea` crate.
//!
//! Pipeline order:
//!
//! 1. [`preprocess`] rectifies each labeled frame (label pooling, lumen
//!    isolation, small-component filtering, lipid cap, wall thickening).
//! 2. [`interpolate`] morphs between frames with signed distance fields to build
//!    an isotropic [`LabelVolume`], after which
//!    [`preprocess::build_refinement_layers`] marks the refinement shells.
//! 3. [`mesher`] produces a graded, conformal multi-material [`TetMesh`].
//! 4. [`fem`] extracts the lumen surface, drops the lumen, finds the end caps
//!    and attaches materials to form an [`FeaModel`].
//! 5. [`microfe`] is a small linear-elastic solver used to check models and run
//!    mesh-convergence studies.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN as well; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod components;
pub mod edt;
pub mod error;
pub mod fem;
pub mod geom;
pub mod interpolate;
pub mod label;
pub mod mesh;
pub mod mesher;
pub mod microfe;
pub mod preprocess;
pub mod volume;

pub use error::{Error, Result};

pub use label::LabelCode;

pub use fem::{BoundarySpec, FeaModel, MaterialModel};
pub use mesh::{MeshOrder, QualityReport, TetMesh};
pub use mesher::SizingField;
pub use volume::{Frame, LabelVolume};

/// Non-fatal observations collected while running a stage.
///
/// Stages that can proceed in degraded situations (an extra enclosed cavity, a
/// clamped seed position) push a message here instead of failing.
pub type Warnings = alloc::vec::Vec<alloc::string::String>;
