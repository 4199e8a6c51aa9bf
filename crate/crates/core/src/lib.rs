//! Numerical computation of all complex critical points of an objective
//! function (Euclidean distance or likelihood) restricted to an algebraic
//! variety, using parameter-homotopy monodromy loops and a trace test.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI
//! live in the companion `edml-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod critsys;
pub mod linalg;
pub mod monodromy;
pub mod poly;
pub mod rng;
pub mod seed;
pub mod tracetest;
pub mod track;

pub use num_complex::Complex64;

pub use critsys::{build_critical_system, randomize_square, CriticalSystem, Model, Objective};
pub use monodromy::{collect_fiber, MonodromyConfig, MonodromyDiagnostics, SolutionSet};
pub use poly::{parse_problem, ObjectiveKind, PolySystem, Polynomial, Problem};
pub use seed::{seed_critical_point, SeedResult};
pub use tracetest::{trace_test, TraceReport, TraceSetup};
pub use track::{total_degree_solve, track, track_many, Homotopy, PathResult, PathStatus, TrackerConfig};
