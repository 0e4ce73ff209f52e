//! Optimality gaps and a method-by-instance benchmark harness.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::{dispatch, RulePair};
use crate::model::{check_feasibility, Instance, Solution, SolveStatus, Time};
use crate::neural::{predict_encoder, predict_with_branching, Checkpoint};
use crate::par::{map_indexed, Execution};
use crate::solver::{solve_fjsp, SolveOptions};

/// `(model - reference) / reference`.
pub fn optimality_gap(model: Time, reference: Time) -> Result<f64> {
    if reference <= 0 {
        return Err(Error::InvalidArgument(format!(
            "reference makespan must be positive, got {reference}"
        )));
    }
    Ok((model - reference) as f64 / reference as f64)
}

/// `exp(mean(ln(1 + g))) - 1`.
pub fn shifted_geomean(gaps: &[f64]) -> Result<f64> {
    if gaps.is_empty() {
        return Err(Error::InvalidArgument("shifted geometric mean of no gaps".into()));
    }
    if let Some(g) = gaps.iter().find(|&&g| !(g > -1.0)) {
        return Err(Error::InvalidArgument(format!("gap {g} is not above -1")));
    }
    let mean = gaps.iter().map(|g| g.ln_1p()).sum::<f64>() / gaps.len() as f64;
    Ok(mean.exp_m1())
}

#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    Exact(&'a SolveOptions),
    Heuristic(RulePair),
    TwoStage {
        assign: &'a Checkpoint,
        sched: &'a Checkpoint,
        branch_size: usize,
    },
    Encoder(&'a Checkpoint),
}

impl Method<'_> {
    pub fn name(&self) -> String {
        match self {
            Method::Exact(_) => "exact".into(),
            Method::Heuristic(r) => r.name().into(),
            Method::TwoStage { branch_size: 0, .. } => "two_stage".into(),
            Method::TwoStage { branch_size, .. } => format!("two_stage_b{branch_size}"),
            Method::Encoder(_) => "encoder".into(),
        }
    }

    pub fn run(&self, inst: &Instance) -> Result<Solution> {
        match *self {
            Method::Exact(opts) => solve_fjsp(inst, opts),
            Method::Heuristic(r) => Ok(dispatch(inst, r)),
            Method::TwoStage {
                assign,
                sched,
                branch_size,
            } => predict_with_branching(inst, assign, sched, branch_size),
            Method::Encoder(joint) => predict_encoder(inst, joint),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub makespan: Time,
    pub status: SolveStatus,
}

/// Reference makespans from the exact solver, one per instance.
pub fn compute_references(instances: &[Instance], opts: &SolveOptions, exec: Execution) -> Result<Vec<Reference>> {
    map_indexed(instances, exec, |_, inst| {
        solve_fjsp(inst, opts).map(|s| Reference {
            makespan: s.makespan(),
            status: s.status,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub makespan: Option<Time>,
    pub gap: Option<f64>,
    pub feasible: bool,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    /// Shifted geometric mean over feasible cells; `None` if there are none.
    pub gap: Option<f64>,
    pub mean_seconds: f64,
    pub feasibility_rate: f64,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub references: Vec<Reference>,
    pub methods: Vec<MethodReport>,
}

impl GapReport {
    /// Copy with every timing zeroed, for reproducibility comparisons.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        for m in &mut out.methods {
            m.mean_seconds = 0.0;
            m.cells.iter_mut().for_each(|c| c.seconds = 0.0);
        }
        out
    }

    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }

    /// Aligned text table, one row per method.
    pub fn render_table(&self) -> String {
        let width = self.methods.iter().map(|m| m.method.len()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>10}  {:>9}", "method", "gap (%)", "time (s)", "feasible");
        for m in &self.methods {
            let gap = m.gap.map_or("-".to_string(), |g| format!("{:.3}", 100.0 * g));
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>10.5}  {:>8.1}%",
                m.method,
                gap,
                m.mean_seconds,
                100.0 * m.feasibility_rate
            );
        }
        out
    }
}

/// Runs every method on every instance, cells concurrently under `exec`.
/// A failing cell is recorded, not fatal.
pub fn run_benchmark(
    instances: &[Instance],
    references: &[Reference],
    methods: &[Method],
    exec: Execution,
) -> Result<GapReport> {
    if references.len() != instances.len() {
        return Err(Error::LengthMismatch {
            expected: instances.len(),
            found: references.len(),
        });
    }
    let cells: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..instances.len()).map(move |i| (m, i)))
        .collect();
    let results = map_indexed(&cells, exec, |_, &(m, i)| {
        let inst = &instances[i];
        let started = Instant::now();
        let outcome = methods[m].run(inst);
        let seconds = started.elapsed().as_secs_f64();
        match outcome {
            Ok(sol) => {
                let feasible = check_feasibility(inst, &sol.assignment, &sol.schedule)
                    .map(|r| r.is_feasible())
                    .unwrap_or(false);
                let makespan = sol.makespan();
                Cell {
                    makespan: Some(makespan),
                    gap: feasible
                        .then(|| optimality_gap(makespan, references[i].makespan).ok())
                        .flatten(),
                    feasible,
                    seconds,
                    error: None,
                }
            }
            Err(e) => Cell {
                makespan: None,
                gap: None,
                feasible: false,
                seconds,
                error: Some(e.to_string()),
            },
        }
    });

    let n = instances.len();
    let mut results = results.into_iter();
    let methods = methods
        .iter()
        .map(|method| {
            let cells: Vec<Cell> = results.by_ref().take(n).collect();
            let gaps: Vec<f64> = cells.iter().filter_map(|c| c.gap).collect();
            MethodReport {
                method: method.name(),
                gap: shifted_geomean(&gaps).ok(),
                mean_seconds: cells.iter().map(|c| c.seconds).sum::<f64>() / n.max(1) as f64,
                feasibility_rate: cells.iter().filter(|c| c.feasible).count() as f64 / n.max(1) as f64,
                cells,
            }
        })
        .collect();
    Ok(GapReport {
        references: references.to_vec(),
        methods,
    })
}
