//! Microscopic tridomain model with dynamic gap junctions.
//!
//! Two intracellular potentials and one extracellular potential live on a
//! periodic cell geometry and talk to each other only through the membranes
//! and the gap junction. The crate builds the geometry, assembles P1 finite
//! element operators, advances the coupled system with a linearly implicit
//! Euler scheme and turns the analytic estimates of the model into
//! measurable diagnostics.
//!
//! ```no_run
//! use tridomain::geometry::{build_unit_cell, UnitCellSpec};
//!
//! let cell = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 8)).unwrap();
//! println!("{} vertices", cell.vertices.len());
//! ```

pub mod assembly;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod ionics;
pub mod linalg;
pub mod stepper;

pub use error::{Error, Result};
