//! RIC estimation, the partition and bound machinery, and inequality checkers.

pub mod bounds;
pub mod checks;
pub mod corpus;
pub mod partition;
pub mod ric;

pub use bounds::{bound_constants, check_condition, eta, sigma, BoundReport, Condition, DELTA_MAX};
pub use checks::{
    check_lemma1, check_prop1, check_prop2, check_theorem_error, check_theorem_residual, Instance,
    Lemma1Check, Prop1Check, Prop2Check, TheoremErrorCheck, TheoremResidualCheck,
};
pub use partition::{partition, PartitionReport};
pub use ric::{binomial, ric_exact, ric_monte_carlo, ric_upper_bound, RicEstimate, RicKind, RicTable, ENUMERATION_BUDGET};
