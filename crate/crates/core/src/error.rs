use alloc::string::String;

use crate::label::LabelCode;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions {0:?}: every component must be >= 1")]
    InvalidDims([usize; 3]),
    #[error("invalid spacing {0:?}: every component must be finite and > 0")]
    InvalidSpacing([f64; 3]),
    #[error("voxel buffer holds {actual} values, dimensions require {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("label code {0} is not in the palette")]
    UnknownLabel(u8),
    #[error("field dimensions differ: {0:?} vs {1:?}")]
    DimsMismatch([usize; 3], [usize; 3]),
    #[error("frame has no enclosed background cavity to use as lumen")]
    NoLumen,
    #[error("all masks are empty")]
    EmptyMasks,
    #[error("section mask is empty")]
    EmptySectionMask,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("interpolation between frames {first} and {second} failed: {source}")]
    FramePair {
        first: usize,
        second: usize,
        source: alloc::boxed::Box<Error>,
    },
    #[error("volume is degenerate for meshing: {0}")]
    DegenerateVolume(String),
    #[error("mesh is already quadratic")]
    AlreadyQuadratic,
    #[error("operation requires a linear mesh")]
    NotLinear,
    #[error("mesh has no lumen-labeled elements")]
    NoLumenElements,
    #[error("end cap node set at {0} is empty")]
    EmptyEndCap(&'static str),
    #[error("no material assigned to label {0}")]
    MissingMaterial(LabelCode),
    #[error("invalid material for label {label}: {reason}")]
    InvalidMaterial { label: LabelCode, reason: String },
    #[error("invalid FE model: {0}")]
    InvalidModel(String),
    #[error("element {0} has zero or negative volume")]
    DegenerateElement(usize),
    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },
    #[error("stiffness system is singular: {0}")]
    Singular(String),
    #[error("probe definitions differ between results")]
    ProbeMismatch,
}
