//! File formats, reports, threaded assembly and perturbed meshes around
//! `polyvem-core`.

pub mod io;
pub mod jitter;
pub mod parallel;
pub mod report;

pub use parallel::ThreadedAssembly;
pub use polyvem_core as core;
