//! Generalized orthogonal matching pursuit with its linear algebra, recovery
//! bound machinery and simulation harness.

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod pursuit;
pub mod signal;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::{IndexSet, LsSolution, Matrix};
pub use pursuit::{gomp_solve, omp_solve, PursuitConfig, PursuitResult, PursuitTrace, StoppingMode};
pub use signal::SparseSignal;
pub use theory::{BoundReport, PartitionReport, RicEstimate};
