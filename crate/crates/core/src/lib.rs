//! Flexible job-shop scheduling toolkit.
//!
//! Exact and symmetry-breaking solvers, dispatching-rule baselines,
//! feasibility recovery for predicted schedules, perturbed dataset
//! generation, and a two-stage neural proxy (assignment classifier followed
//! by a start-time regressor) trained with constraint-violation penalties.

pub mod bench;
pub mod datagen;
pub mod error;
pub mod heuristics;
pub mod instances;
pub mod io;
pub mod model;
pub mod neural;
pub mod par;
pub mod recovery;
pub mod solver;

pub use error::{Error, ParseError, Result};
pub use model::{
    check_feasibility, makespan, Alternative, Assignment, Instance, JspView, MachineId, Schedule, Solution,
    SolveStatus, TaskRef, Time, ViolationReport,
};
