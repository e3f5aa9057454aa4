//! Lowest-order nonconforming virtual elements for the Poisson problem on
//! general polygonal meshes.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the whole
//! numerical pipeline:
//!
//! * [`mesh`]: polygonal meshes with face/cell incidence, test-family
//!   generators and element merging,
//! * [`geometry`]: height and hourglass predicates, isotropy classification,
//!   extended-patch search and the convex-hull overlap audit,
//! * [`vem`]: per-element DoF matrices, elliptic and patch projectors,
//!   consistency and stabilization matrices, load vectors,
//! * [`system`]: global assembly, Dirichlet reduction and a Jacobi
//!   preconditioned conjugate gradient solve,
//! * [`harness`]: interpolation, the discrete energy norm, manufactured
//!   solutions and convergence studies.
//!
//! File formats, reports, threading and the command line live in the
//! companion `polyvem` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod point;
pub mod polygon;
pub mod quadrature;
pub mod sparse;
pub mod system;
pub mod vem;

pub use geometry::{Classification, GeometryConfig, GeometryReport, PatchAssignment, PatchSet};
pub use harness::{ConvergenceRow, ManufacturedCase, MeshFamily};
pub use mesh::{Mesh, MeshError};
pub use point::Point;
pub use system::{SparseSystem, Stabilization};
