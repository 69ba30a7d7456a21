//! Workbench for Raven-style progressive-matrix puzzles built around property
//! prediction: a symbolic task generator with a rasterizer, a one-hot panel
//! codec with relevance masking, a small reverse-mode tensor engine, a
//! transformer that predicts panel properties under masking, and a choice
//! maker that solves puzzles by matching predicted properties to answers.

pub mod autodiff;
pub mod codec;
pub mod domain;
pub mod eval;
pub mod io;
pub mod model;
pub mod rng;
pub mod taskgen;
pub mod train;

pub use codec::{EncodedPanel, LossWeights, ENCODED_DIM};
pub use domain::{
    ArrangementKind, BiasMode, ObjectSpec, PropertyVector, RelevanceMask, RpmTask, Violation,
    NUM_COLORS, NUM_SIZES, NUM_SLOTS, NUM_TYPES,
};
pub use taskgen::{GenConfig, Rule, RuleAttr, RuleSpec};
