//! Synthetic chart dataset pipeline.
//!
//! Figures are generated from themed specs through an LLM gateway (with a
//! deterministic offline stub), rendered by a sandboxed plotting runtime,
//! restyled, quality-filtered and annotated with QA pairs. The crate also
//! carries the dataset metrics and the QA evaluation harness.

pub mod diversify;
pub mod error;
pub mod eval;
pub mod filter;
pub mod gateway;
pub mod generator;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod qa;
pub mod render;
pub mod stats;
pub mod store;
pub mod util;

pub type FeatureMoments64 = metrics::FeatureMoments<f64>;
pub type FeatureMoments32 = metrics::FeatureMoments<f32>;
pub type Matrix64 = metrics::linalg::Matrix<f64>;
pub type Matrix32 = metrics::linalg::Matrix<f32>;

pub use error::{
    DiversifyError, EvalError, FilterError, GatewayError, GenerationError, MetricsError, PipelineError, QaError,
    RenderError, StoreError,
};
