//! Perturbed instance families and their supervised datasets.
//!
//! A family is one base instance whose durations on an impacted machine are
//! scaled by a random slowdown factor. Each member is solved to optimality
//! and then re-solved toward a single reference solution (the base slowed by
//! a fixed delay), so that similar instances receive similar labels.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{DatasetRecord, RecordKind, RecordMeta};
use crate::model::{Assignment, Instance, JspView, MachineId, Solution, SolveStatus, Time};
use crate::par::{map_indexed, Execution};
use crate::solver::{solve_fjsp, solve_jsp, solve_symmetry_breaking, SolveOptions, SymmetryBreakGoal};

pub const MAX_FACTOR: f64 = 1.5;
pub const DEFAULT_REFERENCE_DELAY: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub impacted_machine: MachineId,
    pub factor_range: (f64, f64),
    pub rng_seed: u64,
    pub count: usize,
    /// Draw the impacted machine per instance instead of fixing it.
    #[serde(default)]
    pub vary_machine: bool,
}

impl PerturbSpec {
    pub fn new(impacted_machine: MachineId, count: usize, rng_seed: u64) -> Self {
        Self {
            impacted_machine,
            factor_range: (1.0, MAX_FACTOR),
            rng_seed,
            count,
            vary_machine: false,
        }
    }

    fn validate(&self, base: &Instance) -> Result<()> {
        let (lo, hi) = self.factor_range;
        if !(1.0..=MAX_FACTOR).contains(&lo) || !(lo..=MAX_FACTOR).contains(&hi) {
            return Err(Error::InvalidArgument(format!(
                "factor range [{lo}, {hi}] must lie within [1, {MAX_FACTOR}]"
            )));
        }
        check_machine(base, self.impacted_machine)
    }

    /// The `(machine, factor)` for every draw, in draw order.
    pub fn draws(&self, num_machines: usize) -> Vec<(MachineId, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let (lo, hi) = self.factor_range;
        (0..self.count)
            .map(|_| {
                let factor = rng.random_range(lo..=hi);
                let machine = if self.vary_machine {
                    rng.random_range(0..num_machines)
                } else {
                    self.impacted_machine
                };
                (machine, factor)
            })
            .collect()
    }
}

fn check_machine(base: &Instance, machine: MachineId) -> Result<()> {
    if machine >= base.num_machines() {
        return Err(Error::InvalidArgument(format!(
            "machine {machine} out of range for {} machines",
            base.num_machines()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplit {
    /// 8:1:1 over a seeded shuffle of `0..n`; rounding leftovers go to train.
    pub fn shuffled(n: usize, seed: u64) -> Self {
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        idx.shuffle(&mut rng);
        let tenth = n / 10;
        let mut test = idx.split_off(n - tenth);
        let mut validation = idx.split_off(n - 2 * tenth);
        let mut train = idx;
        train.sort_unstable();
        validation.sort_unstable();
        test.sort_unstable();
        Self { train, validation, test }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Scales every duration on `machine` by `factor`, rounding to the nearest
/// integer and never below 1.
pub fn perturb(base: &Instance, machine: MachineId, factor: f64) -> Result<Instance> {
    if !(1.0..=MAX_FACTOR).contains(&factor) {
        return Err(Error::InvalidArgument(format!(
            "slowdown factor {factor} outside [1, {MAX_FACTOR}]"
        )));
    }
    check_machine(base, machine)?;
    Ok(base.map_durations(|_, m, d| {
        if m == machine {
            ((d as f64 * factor).round() as Time).max(1)
        } else {
            d
        }
    }))
}

/// Optimal solution of the base slowed by the default 25% on `machine`.
pub fn build_reference(base: &Instance, machine: MachineId, opts: &SolveOptions) -> Result<Solution> {
    build_reference_with_delay(base, machine, DEFAULT_REFERENCE_DELAY, opts)
}

pub fn build_reference_with_delay(
    base: &Instance,
    machine: MachineId,
    delay: f64,
    opts: &SolveOptions,
) -> Result<Solution> {
    let inst = perturb(base, machine, 1.0 + delay)?;
    let sol = solve_fjsp(&inst, opts)?;
    if sol.status == SolveStatus::Unsolved {
        return Err(Error::Unsolved);
    }
    Ok(sol)
}

/// How dataset labels are chosen among co-optimal solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Nearest optimum to the reference solution.
    #[default]
    SymmetryBreaking,
    /// Independent solves with per-instance randomized branching.
    Standard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOptions {
    pub solve: SolveOptions,
    pub mode: LabelMode,
    pub execution: Execution,
    /// Store wall-clock solve time in each record. Off keeps output
    /// byte-identical across runs.
    pub record_timings: bool,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            mode: LabelMode::SymmetryBreaking,
            execution: Execution::default(),
            record_timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub records: Vec<DatasetRecord>,
    pub split: DatasetSplit,
    pub failures: Vec<Failure>,
}

fn worst(a: SolveStatus, b: SolveStatus) -> SolveStatus {
    use SolveStatus::*;
    match (a, b) {
        (Unsolved, _) | (_, Unsolved) => Unsolved,
        (FeasibleTimeLimit, _) | (_, FeasibleTimeLimit) => FeasibleTimeLimit,
        _ => Optimal,
    }
}

/// Solves every draw of `spec` and labels it according to `opts.mode`.
/// Output is in draw order whatever the worker count; failed draws are left
/// out and listed in `failures`.
pub fn generate_dataset(
    base: &Instance,
    spec: &PerturbSpec,
    reference: &Solution,
    opts: &GenerateOptions,
) -> Result<GeneratedDataset> {
    spec.validate(base)?;
    reference.assignment.check(base)?;
    let draws = spec.draws(base.num_machines());
    let results = map_indexed(&draws, opts.execution, |i, &(machine, factor)| -> Result<DatasetRecord> {
        let started = Instant::now();
        let inst = perturb(base, machine, factor)?;
        let (sol, status) = label(&inst, reference, opts, spec.rng_seed, i)?;
        let meta = RecordMeta {
            impacted_machine: machine,
            factor,
            status,
            solve_seconds: opts.record_timings.then(|| started.elapsed().as_secs_f64()),
            instance_index: i,
            kind: RecordKind::GroundTruth,
        };
        Ok(DatasetRecord::from_solution(&inst, &sol.assignment, &sol.schedule, meta))
    });

    let mut records = Vec::with_capacity(draws.len());
    let mut failures = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(Failure {
                index,
                message: e.to_string(),
            }),
        }
    }
    let split = DatasetSplit::shuffled(records.len(), spec.rng_seed);
    Ok(GeneratedDataset {
        records,
        split,
        failures,
    })
}

fn label(
    inst: &Instance,
    reference: &Solution,
    opts: &GenerateOptions,
    seed: u64,
    index: usize,
) -> Result<(Solution, SolveStatus)> {
    match opts.mode {
        LabelMode::Standard => {
            let solve = SolveOptions {
                seed: Some(seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)),
                ..opts.solve.clone()
            };
            let sol = solve_fjsp(inst, &solve)?;
            let status = sol.status;
            Ok((sol, status))
        }
        LabelMode::SymmetryBreaking => {
            let optimum = solve_fjsp(inst, &opts.solve)?;
            let goal = SymmetryBreakGoal {
                reference_assignment: reference.assignment.clone(),
                reference_starts: Some(reference.schedule.starts.clone()),
                target_makespan: optimum.makespan(),
            };
            let assigned = solve_symmetry_breaking(inst, &goal, &opts.solve)?;
            let view = JspView::new(inst, &assigned.assignment)?;
            let scheduled = solve_jsp(&view, &opts.solve, Some(&goal))?;
            let status = worst(worst(optimum.status, assigned.status), scheduled.status);
            Ok((scheduled, status))
        }
    }
}

#[derive(Debug, Clone)]
pub struct AugmentedDataset {
    pub records: Vec<DatasetRecord>,
    pub failures: Vec<Failure>,
}

/// Scheduling-stage samples: every ground-truth record plus candidate
/// assignments for the same instances, each labelled by the symmetry-broken
/// optimum of its induced job shop.
///
/// `candidates` pairs a position in `records` with an assignment. Candidates
/// equal to a ground truth or to each other are dropped. When the pool
/// exceeds `cap`, candidates are subsampled first; ground truths are only
/// subsampled if they alone exceed `cap`. `reference_starts` of `None` labels
/// candidates by a plain optimal solve instead.
pub fn augment_scheduling_dataset(
    records: &[DatasetRecord],
    candidates: &[(usize, Assignment)],
    reference_starts: Option<&[Time]>,
    cap: usize,
    rng_seed: u64,
    opts: &GenerateOptions,
) -> Result<AugmentedDataset> {
    let mut seen: HashSet<(usize, Vec<MachineId>)> =
        records.iter().enumerate().map(|(i, r)| (i, r.assignment.clone())).collect();
    let mut extra: Vec<(usize, Assignment)> = Vec::new();
    for (i, a) in candidates {
        let rec = records.get(*i).ok_or_else(|| {
            Error::InvalidArgument(format!("candidate refers to record {i} of {}", records.len()))
        })?;
        a.check(&rec.instance()?)?;
        if seen.insert((*i, a.machines().to_vec())) {
            extra.push((*i, a.clone()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let ground: Vec<usize> = if records.len() > cap {
        sorted_sample(&mut rng, records.len(), cap)
    } else {
        (0..records.len()).collect()
    };
    let room = cap - ground.len();
    let extra: Vec<(usize, Assignment)> = if extra.len() > room {
        sorted_sample(&mut rng, extra.len(), room)
            .into_iter()
            .map(|k| extra[k].clone())
            .collect()
    } else {
        extra
    };

    let solved = map_indexed(&extra, opts.execution, |_, (i, a)| {
        label_candidate(&records[*i], a, reference_starts, opts)
    });
    let mut out: Vec<DatasetRecord> = ground.iter().map(|&i| records[i].clone()).collect();
    let mut failures = Vec::new();
    for ((i, _), r) in extra.iter().zip(solved) {
        match r {
            Ok(rec) => out.push(rec),
            Err(e) => failures.push(Failure {
                index: *i,
                message: e.to_string(),
            }),
        }
    }
    Ok(AugmentedDataset { records: out, failures })
}

fn sorted_sample(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut picked = index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

fn label_candidate(
    source: &DatasetRecord,
    a: &Assignment,
    reference_starts: Option<&[Time]>,
    opts: &GenerateOptions,
) -> Result<DatasetRecord> {
    let started = Instant::now();
    let inst = source.instance()?;
    let view = JspView::new(&inst, a)?;
    let optimum = solve_jsp(&view, &opts.solve, None)?;
    let (sol, status) = match reference_starts {
        None => {
            let status = optimum.status;
            (optimum, status)
        }
        Some(reference) => {
            let goal = SymmetryBreakGoal {
                reference_assignment: a.clone(),
                reference_starts: Some(reference.to_vec()),
                target_makespan: optimum.makespan(),
            };
            let sol = solve_jsp(&view, &opts.solve, Some(&goal))?;
            let status = worst(optimum.status, sol.status);
            (sol, status)
        }
    };
    let meta = RecordMeta {
        status,
        solve_seconds: opts.record_timings.then(|| started.elapsed().as_secs_f64()),
        kind: RecordKind::Branch,
        ..source.meta.clone()
    };
    Ok(DatasetRecord::from_solution(&inst, &sol.assignment, &sol.schedule, meta))
}
