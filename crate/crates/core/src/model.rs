//! Domain types shared by every other module.
//!
//! Tasks are stored in processing order: task 0 of a job executes first and
//! task `t + 1` may only start once task `t` has finished. Every task is also
//! addressed by a flat index `n` in `0..num_tasks()`, jobs laid out back to
//! back, which is the row index used by the dense `N x M` views (features,
//! dataset records).
//!
//! Incompatibility between a task and a machine is expressed by the machine
//! being absent from the task's alternatives; there is no sentinel duration.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

/// Integer time unit used by all solver, heuristic and recovery outputs.
pub type Time = i64;
pub type MachineId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskRef {
    pub job: usize,
    pub task: usize,
}

impl fmt::Display for TaskRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.job, self.task)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alternative {
    pub machine: MachineId,
    pub duration: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("instance has no jobs")]
    NoJobs,
    #[error("instance has no machines")]
    NoMachines,
    #[error("job {job} has no tasks")]
    EmptyJob { job: usize },
    #[error("no compatible machine for ({job},{task})")]
    NoCompatibleMachine { job: usize, task: usize },
    #[error("non-positive duration {duration} for ({job},{task}) on machine {machine}")]
    NonPositiveDuration {
        job: usize,
        task: usize,
        machine: MachineId,
        duration: Time,
    },
    #[error("machine {machine} out of range for ({job},{task}), instance has {num_machines} machines")]
    MachineOutOfRange {
        job: usize,
        task: usize,
        machine: MachineId,
        num_machines: usize,
    },
    #[error("machine {machine} listed twice for ({job},{task})")]
    DuplicateMachine {
        job: usize,
        task: usize,
        machine: MachineId,
    },
}

/// A flexible job-shop instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    num_machines: usize,
    /// Flat index of the first task of each job, plus a final sentinel.
    job_start: Vec<usize>,
    job_of: Vec<usize>,
    /// Alternatives per flat task, sorted by machine id.
    alternatives: Vec<Vec<Alternative>>,
}

impl Instance {
    /// Builds an instance and rejects it if any invariant fails.
    pub fn new(num_machines: usize, jobs: Vec<Vec<Vec<Alternative>>>) -> Result<Self> {
        let inst = Self::from_parts(num_machines, jobs);
        let errors = inst.validate();
        if errors.is_empty() {
            Ok(inst)
        } else {
            Err(Error::InvalidInstance(errors))
        }
    }

    /// Builds an instance without validation; pair with [`Instance::validate`].
    pub fn from_parts(num_machines: usize, jobs: Vec<Vec<Vec<Alternative>>>) -> Self {
        let mut job_start = Vec::with_capacity(jobs.len() + 1);
        let mut job_of = Vec::new();
        let mut alternatives = Vec::new();
        for (j, tasks) in jobs.into_iter().enumerate() {
            job_start.push(alternatives.len());
            for mut alts in tasks {
                alts.sort_by_key(|a| a.machine);
                alternatives.push(alts);
                job_of.push(j);
            }
        }
        job_start.push(alternatives.len());
        Self {
            num_machines,
            job_start,
            job_of,
            alternatives,
        }
    }

    /// Lists every violated invariant; empty means the instance is valid.
    pub fn validate(&self) -> Vec<ValidationError> {
        let mut errors = Vec::new();
        if self.num_jobs() == 0 {
            errors.push(ValidationError::NoJobs);
        }
        if self.num_machines == 0 {
            errors.push(ValidationError::NoMachines);
        }
        for j in 0..self.num_jobs() {
            if self.tasks_in_job(j) == 0 {
                errors.push(ValidationError::EmptyJob { job: j });
            }
        }
        for n in 0..self.num_tasks() {
            let TaskRef { job, task } = self.task_ref(n);
            let alts = &self.alternatives[n];
            if alts.is_empty() {
                errors.push(ValidationError::NoCompatibleMachine { job, task });
            }
            for (i, alt) in alts.iter().enumerate() {
                if alt.machine >= self.num_machines {
                    errors.push(ValidationError::MachineOutOfRange {
                        job,
                        task,
                        machine: alt.machine,
                        num_machines: self.num_machines,
                    });
                }
                if alt.duration <= 0 {
                    errors.push(ValidationError::NonPositiveDuration {
                        job,
                        task,
                        machine: alt.machine,
                        duration: alt.duration,
                    });
                }
                if i > 0 && alts[i - 1].machine == alt.machine {
                    errors.push(ValidationError::DuplicateMachine {
                        job,
                        task,
                        machine: alt.machine,
                    });
                }
            }
        }
        errors
    }

    pub fn num_jobs(&self) -> usize {
        self.job_start.len() - 1
    }

    pub fn num_machines(&self) -> usize {
        self.num_machines
    }

    pub fn num_tasks(&self) -> usize {
        self.alternatives.len()
    }

    pub fn tasks_in_job(&self, job: usize) -> usize {
        self.job_start[job + 1] - self.job_start[job]
    }

    pub fn tasks_per_job(&self) -> Vec<usize> {
        (0..self.num_jobs()).map(|j| self.tasks_in_job(j)).collect()
    }

    /// Flat index range of a job's tasks, in processing order.
    pub fn job_tasks(&self, job: usize) -> std::ops::Range<usize> {
        self.job_start[job]..self.job_start[job + 1]
    }

    pub fn task_index(&self, job: usize, task: usize) -> usize {
        debug_assert!(task < self.tasks_in_job(job));
        self.job_start[job] + task
    }

    pub fn task_ref(&self, n: usize) -> TaskRef {
        let job = self.job_of[n];
        TaskRef {
            job,
            task: n - self.job_start[job],
        }
    }

    pub fn job_of(&self, n: usize) -> usize {
        self.job_of[n]
    }

    /// Job predecessor of flat task `n`, if any.
    pub fn prev_task(&self, n: usize) -> Option<usize> {
        (n > self.job_start[self.job_of[n]]).then(|| n - 1)
    }

    /// Job successor of flat task `n`, if any.
    pub fn next_task(&self, n: usize) -> Option<usize> {
        (n + 1 < self.job_start[self.job_of[n] + 1]).then_some(n + 1)
    }

    pub fn is_last_in_job(&self, n: usize) -> bool {
        self.next_task(n).is_none()
    }

    pub fn alternatives(&self, n: usize) -> &[Alternative] {
        &self.alternatives[n]
    }

    pub fn duration(&self, n: usize, machine: MachineId) -> Option<Time> {
        self.alternatives[n]
            .iter()
            .find(|a| a.machine == machine)
            .map(|a| a.duration)
    }

    pub fn is_compatible(&self, n: usize, machine: MachineId) -> bool {
        self.duration(n, machine).is_some()
    }

    pub fn min_duration(&self, n: usize) -> Time {
        self.alternatives[n].iter().map(|a| a.duration).min().unwrap_or(0)
    }

    pub fn mean_duration(&self, n: usize) -> f64 {
        let alts = &self.alternatives[n];
        if alts.is_empty() {
            return 0.0;
        }
        alts.iter().map(|a| a.duration as f64).sum::<f64>() / alts.len() as f64
    }

    pub fn max_duration(&self) -> Time {
        self.alternatives
            .iter()
            .flatten()
            .map(|a| a.duration)
            .max()
            .unwrap_or(0)
    }

    /// Mean size of the compatible machine sets.
    pub fn flexibility(&self) -> f64 {
        if self.num_tasks() == 0 {
            return 0.0;
        }
        self.alternatives.iter().map(Vec::len).sum::<usize>() as f64 / self.num_tasks() as f64
    }

    /// Nested per-job view, the shape accepted by [`Instance::new`].
    pub fn to_jobs(&self) -> Vec<Vec<Vec<Alternative>>> {
        (0..self.num_jobs())
            .map(|j| {
                self.job_tasks(j)
                    .map(|n| self.alternatives[n].clone())
                    .collect()
            })
            .collect()
    }

    /// Returns a copy with every duration replaced by `f(task, machine, duration)`.
    pub fn map_durations(&self, mut f: impl FnMut(usize, MachineId, Time) -> Time) -> Instance {
        let mut out = self.clone();
        for (n, alts) in out.alternatives.iter_mut().enumerate() {
            for alt in alts.iter_mut() {
                alt.duration = f(n, alt.machine, alt.duration);
            }
        }
        out
    }

    /// Dense `N x M` duration matrix, `None` where incompatible.
    pub fn dense_durations(&self) -> Vec<Vec<Option<Time>>> {
        (0..self.num_tasks())
            .map(|n| {
                let mut row = vec![None; self.num_machines];
                for alt in &self.alternatives[n] {
                    row[alt.machine] = Some(alt.duration);
                }
                row
            })
            .collect()
    }

    /// Inverse of [`Instance::dense_durations`].
    pub fn from_dense(tasks_per_job: &[usize], durations: &[Vec<Option<Time>>]) -> Result<Self> {
        let expected: usize = tasks_per_job.iter().sum();
        if durations.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: durations.len(),
            });
        }
        let num_machines = durations.first().map_or(0, Vec::len);
        let mut rows = durations.iter();
        let mut jobs = Vec::with_capacity(tasks_per_job.len());
        for &count in tasks_per_job {
            let mut tasks = Vec::with_capacity(count);
            for row in rows.by_ref().take(count) {
                if row.len() != num_machines {
                    return Err(Error::LengthMismatch {
                        expected: num_machines,
                        found: row.len(),
                    });
                }
                tasks.push(
                    row.iter()
                        .enumerate()
                        .filter_map(|(machine, d)| d.map(|duration| Alternative { machine, duration }))
                        .collect(),
                );
            }
            jobs.push(tasks);
        }
        Instance::new(num_machines, jobs)
    }
}

/// Machine choice for every task, indexed by flat task index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    machine_of: Vec<MachineId>,
}

impl Assignment {
    /// Wraps a raw machine vector; use [`Assignment::check`] before trusting it.
    pub fn new(machine_of: Vec<MachineId>) -> Self {
        Self { machine_of }
    }

    /// Validated constructor.
    pub fn for_instance(inst: &Instance, machine_of: Vec<MachineId>) -> Result<Self> {
        let a = Self::new(machine_of);
        a.check(inst)?;
        Ok(a)
    }

    pub fn machine(&self, n: usize) -> MachineId {
        self.machine_of[n]
    }

    pub fn set_machine(&mut self, n: usize, machine: MachineId) {
        self.machine_of[n] = machine;
    }

    pub fn machines(&self) -> &[MachineId] {
        &self.machine_of
    }

    pub fn len(&self) -> usize {
        self.machine_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.machine_of.is_empty()
    }

    /// Every task must sit on one of its compatible machines.
    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.machine_of.len() != inst.num_tasks() {
            return Err(Error::LengthMismatch {
                expected: inst.num_tasks(),
                found: self.machine_of.len(),
            });
        }
        for (n, &m) in self.machine_of.iter().enumerate() {
            if !inst.is_compatible(n, m) {
                let TaskRef { job, task } = inst.task_ref(n);
                return Err(Error::IncompatibleAssignment { job, task, machine: m });
            }
        }
        Ok(())
    }

    /// Duration of each task on its assigned machine. Assumes a checked assignment.
    pub fn durations(&self, inst: &Instance) -> Vec<Time> {
        self.machine_of
            .iter()
            .enumerate()
            .map(|(n, &m)| inst.duration(n, m).expect("assignment checked against instance"))
            .collect()
    }

    /// Number of tasks whose machine differs.
    pub fn mismatches(&self, other: &Assignment) -> usize {
        self.machine_of
            .iter()
            .zip(&other.machine_of)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Hamming distance between the one-hot `N x M` matrices: each moved task
    /// contributes 2 (one cleared entry, one set entry).
    pub fn hamming_distance(&self, other: &Assignment) -> usize {
        2 * self.mismatches(other)
    }
}

/// Start time per flat task plus the resulting makespan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub starts: Vec<Time>,
    pub makespan: Time,
}

impl Schedule {
    /// Computes the makespan of `starts` under `assignment`.
    pub fn new(inst: &Instance, assignment: &Assignment, starts: Vec<Time>) -> Result<Self> {
        assignment.check(inst)?;
        if starts.len() != inst.num_tasks() {
            return Err(Error::LengthMismatch {
                expected: inst.num_tasks(),
                found: starts.len(),
            });
        }
        let durations = assignment.durations(inst);
        let makespan = completion_time(inst, &durations, &starts);
        Ok(Self { starts, makespan })
    }

    pub fn start(&self, n: usize) -> Time {
        self.starts[n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    FeasibleTimeLimit,
    Unsolved,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleTimeLimit => "feasible (time limit)",
            SolveStatus::Unsolved => "unsolved",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub assignment: Assignment,
    pub schedule: Schedule,
    pub status: SolveStatus,
}

impl Solution {
    pub fn makespan(&self) -> Time {
        self.schedule.makespan
    }
}

/// Job-shop instance induced by fixing one machine per task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JspView {
    instance: Instance,
    assignment: Assignment,
    durations: Vec<Time>,
}

impl JspView {
    pub fn new(inst: &Instance, assignment: &Assignment) -> Result<Self> {
        assignment.check(inst)?;
        let durations = assignment.durations(inst);
        let jobs = (0..inst.num_jobs())
            .map(|j| {
                inst.job_tasks(j)
                    .map(|n| {
                        vec![Alternative {
                            machine: assignment.machine(n),
                            duration: durations[n],
                        }]
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            instance: Instance::from_parts(inst.num_machines(), jobs),
            assignment: assignment.clone(),
            durations,
        })
    }

    /// The induced instance, with exactly one alternative per task.
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn machine_of(&self, n: usize) -> MachineId {
        self.assignment.machine(n)
    }

    pub fn duration_of(&self, n: usize) -> Time {
        self.durations[n]
    }

    pub fn durations(&self) -> &[Time] {
        &self.durations
    }

    pub fn num_tasks(&self) -> usize {
        self.durations.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecedenceViolation {
    pub job: usize,
    /// The earlier task of the violated consecutive pair.
    pub task: usize,
    pub magnitude: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapViolation {
    pub first: TaskRef,
    pub second: TaskRef,
    pub machine: MachineId,
    pub magnitude: Time,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub job_precedence: Vec<PrecedenceViolation>,
    pub machine_overlap: Vec<OverlapViolation>,
    pub total: Time,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        self.total == 0
    }
}

/// Measures how far `schedule` is from satisfying job precedence and machine
/// disjunction under `assignment`.
///
/// A consecutive pair `(t, t+1)` contributes `max(0, s_t + d_t - s_{t+1})`. A
/// same-machine pair contributes the smaller of the two one-sided overlaps,
/// i.e. the least shift that would separate them.
pub fn check_feasibility(
    inst: &Instance,
    assignment: &Assignment,
    schedule: &Schedule,
) -> Result<ViolationReport> {
    assignment.check(inst)?;
    let starts = &schedule.starts;
    if starts.len() != inst.num_tasks() {
        return Err(Error::LengthMismatch {
            expected: inst.num_tasks(),
            found: starts.len(),
        });
    }
    let d = assignment.durations(inst);
    let mut report = ViolationReport::default();
    for n in 0..inst.num_tasks() {
        if starts[n] < 0 {
            // Negative starts are folded into the precedence list against time 0.
            let TaskRef { job, task } = inst.task_ref(n);
            report.job_precedence.push(PrecedenceViolation {
                job,
                task,
                magnitude: -starts[n],
            });
        }
        if let Some(next) = inst.next_task(n) {
            let gap = starts[n] + d[n] - starts[next];
            if gap > 0 {
                let TaskRef { job, task } = inst.task_ref(n);
                report.job_precedence.push(PrecedenceViolation {
                    job,
                    task,
                    magnitude: gap,
                });
            }
        }
    }
    for machine in 0..inst.num_machines() {
        let on_machine: Vec<usize> = (0..inst.num_tasks())
            .filter(|&n| assignment.machine(n) == machine)
            .collect();
        for (i, &a) in on_machine.iter().enumerate() {
            for &b in &on_machine[i + 1..] {
                let b_after_a = (starts[a] + d[a] - starts[b]).max(0);
                let a_after_b = (starts[b] + d[b] - starts[a]).max(0);
                let magnitude = b_after_a.min(a_after_b);
                if magnitude > 0 {
                    report.machine_overlap.push(OverlapViolation {
                        first: inst.task_ref(a),
                        second: inst.task_ref(b),
                        machine,
                        magnitude,
                    });
                }
            }
        }
    }
    report.total = report.job_precedence.iter().map(|v| v.magnitude).sum::<Time>()
        + report.machine_overlap.iter().map(|v| v.magnitude).sum::<Time>();
    Ok(report)
}

/// Completion time of the last-finishing job.
pub fn makespan(inst: &Instance, assignment: &Assignment, schedule: &Schedule) -> Result<Time> {
    assignment.check(inst)?;
    if schedule.starts.len() != inst.num_tasks() {
        return Err(Error::LengthMismatch {
            expected: inst.num_tasks(),
            found: schedule.starts.len(),
        });
    }
    Ok(completion_time(inst, &assignment.durations(inst), &schedule.starts))
}

pub(crate) fn completion_time(inst: &Instance, durations: &[Time], starts: &[Time]) -> Time {
    (0..inst.num_jobs())
        .map(|j| {
            let last = inst.job_tasks(j).end - 1;
            starts[last] + durations[last]
        })
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn alt(machine: MachineId, duration: Time) -> Alternative {
        Alternative { machine, duration }
    }

    /// One machine, jobs given as chains of durations.
    pub fn single_machine(jobs: &[&[Time]]) -> Instance {
        Instance::new(
            1,
            jobs.iter()
                .map(|tasks| tasks.iter().map(|&d| vec![alt(0, d)]).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn minimal_instance_is_valid() {
        let inst = Instance::from_parts(1, vec![vec![vec![alt(0, 5)]]]);
        assert!(inst.validate().is_empty());
        assert_eq!(inst.num_tasks(), 1);
    }

    #[test]
    fn empty_compatible_set_is_reported() {
        let inst = Instance::from_parts(1, vec![vec![vec![]]]);
        let errors = inst.validate();
        assert_eq!(errors, vec![ValidationError::NoCompatibleMachine { job: 0, task: 0 }]);
        assert_eq!(errors[0].to_string(), "no compatible machine for (0,0)");
    }

    #[test]
    fn zero_duration_is_reported() {
        let inst = Instance::from_parts(1, vec![vec![vec![alt(0, 0)]]]);
        let errors = inst.validate();
        assert_eq!(errors.len(), 1);
        assert!(errors[0].to_string().starts_with("non-positive duration"));
    }

    #[test]
    fn out_of_range_and_duplicate_machines() {
        let inst = Instance::from_parts(2, vec![vec![vec![alt(2, 1), alt(0, 1), alt(0, 3)]]]);
        let errors = inst.validate();
        assert!(errors.contains(&ValidationError::MachineOutOfRange {
            job: 0,
            task: 0,
            machine: 2,
            num_machines: 2
        }));
        assert!(errors.contains(&ValidationError::DuplicateMachine { job: 0, task: 0, machine: 0 }));
    }

    #[test]
    fn back_to_back_chain_is_feasible() {
        let inst = single_machine(&[&[2, 3]]);
        let a = Assignment::new(vec![0, 0]);
        let s = Schedule::new(&inst, &a, vec![0, 2]).unwrap();
        let report = check_feasibility(&inst, &a, &s).unwrap();
        assert_eq!(report.total, 0);
        assert!(report.is_feasible());
    }

    #[test]
    fn early_successor_is_a_precedence_violation() {
        let inst = single_machine(&[&[2, 3]]);
        let a = Assignment::new(vec![0, 0]);
        let s = Schedule::new(&inst, &a, vec![0, 1]).unwrap();
        let report = check_feasibility(&inst, &a, &s).unwrap();
        assert_eq!(
            report.job_precedence,
            vec![PrecedenceViolation { job: 0, task: 0, magnitude: 1 }]
        );
        // The same pair also overlaps on the shared machine.
        assert_eq!(report.machine_overlap[0].magnitude, 1);
        assert_eq!(report.total, 2);
    }

    #[test]
    fn overlap_magnitude_is_smaller_shift() {
        let inst = single_machine(&[&[4], &[4]]);
        let a = Assignment::new(vec![0, 0]);
        let s = Schedule::new(&inst, &a, vec![0, 2]).unwrap();
        let report = check_feasibility(&inst, &a, &s).unwrap();
        assert!(report.job_precedence.is_empty());
        assert_eq!(report.machine_overlap.len(), 1);
        assert_eq!(report.machine_overlap[0].magnitude, 2);
        assert_eq!(report.total, 2);
    }

    #[test]
    fn incompatible_assignment_is_rejected() {
        let inst = single_machine(&[&[4]]);
        let a = Assignment::new(vec![1]);
        let s = Schedule { starts: vec![0], makespan: 4 };
        assert!(matches!(
            check_feasibility(&inst, &a, &s),
            Err(Error::IncompatibleAssignment { .. })
        ));
    }

    #[test]
    fn makespan_examples() {
        let inst = single_machine(&[&[5]]);
        let a = Assignment::new(vec![0]);
        let s = Schedule { starts: vec![0], makespan: 0 };
        assert_eq!(makespan(&inst, &a, &s).unwrap(), 5);

        let inst = single_machine(&[&[3], &[4]]);
        let a = Assignment::new(vec![0, 0]);
        let s = Schedule { starts: vec![0, 3], makespan: 0 };
        assert_eq!(makespan(&inst, &a, &s).unwrap(), 7);

        let inst = Instance::new(2, vec![vec![vec![alt(0, 3)]], vec![vec![alt(1, 3)]]]).unwrap();
        let a = Assignment::new(vec![0, 1]);
        let s = Schedule { starts: vec![0, 0], makespan: 0 };
        assert_eq!(makespan(&inst, &a, &s).unwrap(), 3);
    }

    #[test]
    fn dense_round_trip() {
        let inst = Instance::new(
            2,
            vec![
                vec![vec![alt(0, 3), alt(1, 4)], vec![alt(0, 2)]],
                vec![vec![alt(0, 5), alt(1, 5)]],
            ],
        )
        .unwrap();
        let dense = inst.dense_durations();
        assert_eq!(dense[1], vec![Some(2), None]);
        let back = Instance::from_dense(&inst.tasks_per_job(), &dense).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn jsp_view_fixes_durations() {
        let inst = Instance::new(2, vec![vec![vec![alt(0, 3), alt(1, 4)], vec![alt(0, 2)]]]).unwrap();
        let view = JspView::new(&inst, &Assignment::new(vec![1, 0])).unwrap();
        assert_eq!(view.durations(), &[4, 2]);
        assert_eq!(view.machine_of(0), 1);
        assert_eq!(view.instance().alternatives(0), &[alt(1, 4)]);
        assert!(JspView::new(&inst, &Assignment::new(vec![1, 1])).is_err());
    }
}
