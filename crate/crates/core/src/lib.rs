//! Training-data generation for handwritten mathematical expression
//! recognition.
//!
//! An [`OnlineHme`] is a set of pen strokes grouped into symbols, plus a
//! symbol relation tree that yields its LaTeX ground truth. From a corpus
//! of these the crate produces new expressions by
//!
//! - [distortion](distortion): per-symbol shear, shrink, perspective and
//!   rotation, then a global rotation and scaling;
//! - [decomposition](decomposition): sub-expressions cut out of the tree
//!   together with their strokes;
//! - hybrid: decomposition first, then distortion of every result.
//!
//! [`inkml`] reads and writes CROHME-style InkML, [`raster`] renders ink to
//! images and [`pipeline`] runs whole corpora.
//!
//! ```
//! use hmegen::{decompose, synth::hme_from_latex};
//!
//! let hme = hme_from_latex("x^2+2x+1", 0)?;
//! let parts = decompose(&hme)?;
//! assert_eq!(parts.latex(), ["x + 2 x + 1", "x ^ { 2 }", "2 x + 1", "x ^ { 2 } + 2 x"]);
//! # Ok::<(), hmegen::Error>(())
//! ```

pub mod decomposition;
pub mod distortion;
pub mod ink;
pub mod inkml;
pub mod latex;
pub mod pipeline;
pub mod raster;
pub mod srt;
pub mod synth;

pub use decomposition::{decompose, DecompositionError, DecompositionResult, RuleTrace};
pub use distortion::{distort_hme, Axis, DistortionError, DistortionParams, LocalModel};
pub use ink::{
    BoundingBox, InkError, OnlineHme, PenPoint, Provenance, Strategy, Stroke, Symbol, SymbolId,
};
pub use inkml::{parse_inkml, write_inkml, InkmlError, ParseOptions};
pub use latex::{latex_of, LatexError};
pub use pipeline::{DatasetReport, PipelineError, StrategyConfig};
pub use raster::{rasterize, Image, RasterConfig, RasterError};
pub use srt::{Relation, SrtNode, SymbolRelationTree};

/// Any error from this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Ink(#[from] InkError),
    #[error(transparent)]
    Latex(#[from] LatexError),
    #[error(transparent)]
    Inkml(#[from] InkmlError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ink-model.md")]
    mod ink_model {}
    #[doc = include_str!("../../../book/src/distortion.md")]
    mod distortion {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/rasterization.md")]
    mod rasterization {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
