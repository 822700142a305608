//! Figure spec → plotting program → raster image.

mod program;
mod sandbox;

use std::path::Path;

use rayon::prelude::*;

pub use program::{
    chart_function_source, data_block, data_preserved, draw_function, emit_plot_program, header_value, insert_at_hook,
    py_literal, read_geometry, set_geometry, PlotProgram, DATA_BEGIN, DATA_END, DECORATE_HOOK, OUTPUT_NAME, STYLE_HOOK,
};
pub use sandbox::{ImageArtifact, RenderProvenance, Sandbox, DEFAULT_TIMEOUT};

use crate::error::RenderError;

/// Renders many programs on a bounded pool. Results come back in input order.
pub fn render_all(
    sandbox: &Sandbox,
    programs: &[PlotProgram],
    out_dir: &Path,
    workers: usize,
) -> Vec<(Result<ImageArtifact, RenderError>, RenderProvenance)> {
    let workers = workers.max(1);
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| programs.par_iter().map(|p| sandbox.render_with_provenance(p, out_dir)).collect()),
        Err(_) => programs.iter().map(|p| sandbox.render_with_provenance(p, out_dir)).collect(),
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
