//! Scenario runner: loads weights and symbols, computes bump and necessity constants,
//! measures operator-norm lower bounds and reports the hard and informational checks.
//!
//! Hard checks are the inequalities that hold exactly at sample resolution: sparse
//! duality, the pointwise sparse bound, the sparse converse, the necessity decomposition
//! and the Power-gauge `K` against the unbumped expression. Comparisons of measured norms
//! with `K` are informational.

pub mod report;
pub mod run;
pub mod scenario;
pub mod suite;

pub use report::{Check, Provenance, Status, VerdictReport};
pub use run::{refinement_sweep, run_scenario, RefinementRow, RefinementTable};
pub use scenario::{GaugeSelection, GridSpec, OperatorHandle, Scenario, SparseSpec, Tolerances};
pub use suite::{corollary_suite, shipped_scenarios, SuiteReport, SHIPPED_SCENARIOS};
