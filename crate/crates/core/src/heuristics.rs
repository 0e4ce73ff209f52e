//! Two-stage dispatching rules: a machine-selection rule applied when a task
//! becomes ready, and a sequencing rule applied when a machine goes idle.
//!
//! Ties are broken by lower job index, then lower task index, then lower
//! machine id. Simultaneous machine events are handled in machine-id order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, MachineId, Schedule, Solution, SolveStatus, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MachineRule {
    /// Smallest processing time.
    Spt,
    /// Earliest end time, counting all work already committed to the machine.
    Eet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SequencingRule {
    /// Earliest arrival in the machine queue.
    Fifo,
    /// Most operations remaining in the job.
    Mopnr,
    /// Least work remaining.
    Lwkr,
    /// Most work remaining.
    Mwkr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RulePair {
    pub machine_rule: MachineRule,
    pub sequencing_rule: SequencingRule,
}

impl RulePair {
    pub const ALL: [RulePair; 8] = {
        use MachineRule::*;
        use SequencingRule::*;
        const fn pair(sequencing_rule: SequencingRule, machine_rule: MachineRule) -> RulePair {
            RulePair {
                machine_rule,
                sequencing_rule,
            }
        }
        [
            pair(Fifo, Spt),
            pair(Fifo, Eet),
            pair(Mopnr, Spt),
            pair(Mopnr, Eet),
            pair(Lwkr, Spt),
            pair(Lwkr, Eet),
            pair(Mwkr, Spt),
            pair(Mwkr, Eet),
        ]
    };

    pub fn name(&self) -> &'static str {
        use MachineRule::*;
        use SequencingRule::*;
        match (self.sequencing_rule, self.machine_rule) {
            (Fifo, Spt) => "fifo_spt",
            (Fifo, Eet) => "fifo_eet",
            (Mopnr, Spt) => "mopnr_spt",
            (Mopnr, Eet) => "mopnr_eet",
            (Lwkr, Spt) => "lwkr_spt",
            (Lwkr, Eet) => "lwkr_eet",
            (Mwkr, Spt) => "mwkr_spt",
            (Mwkr, Eet) => "mwkr_eet",
        }
    }
}

impl fmt::Display for RulePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RulePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RulePair::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = RulePair::ALL.iter().map(|r| r.name()).collect();
                Error::InvalidArgument(format!("unknown rule `{s}`, expected one of {}", names.join(", ")))
            })
    }
}

struct Queued {
    task: usize,
    arrival: Time,
}

/// Runs the event-driven dispatching simulation and returns a feasible solution.
pub fn dispatch(inst: &Instance, rules: RulePair) -> Solution {
    let n_tasks = inst.num_tasks();
    let n_machines = inst.num_machines();

    // Remaining work from a task to the end of its job, by mean compatible duration.
    let mut work_from = vec![0.0; n_tasks];
    for n in (0..n_tasks).rev() {
        work_from[n] = inst.mean_duration(n) + inst.next_task(n).map_or(0.0, |next| work_from[next]);
    }

    let mut machine_of = vec![0; n_tasks];
    let mut durations = vec![0; n_tasks];
    let mut starts = vec![0; n_tasks];
    let mut running: Vec<Option<usize>> = vec![None; n_machines];
    let mut busy_until: Vec<Time> = vec![0; n_machines];
    let mut queues: Vec<Vec<Queued>> = (0..n_machines).map(|_| Vec::new()).collect();
    let mut queued_work: Vec<Time> = vec![0; n_machines];

    let mut ready: Vec<usize> = (0..inst.num_jobs()).map(|j| inst.job_tasks(j).start).collect();
    let mut started = 0;
    let mut now: Time = 0;

    loop {
        ready.sort_unstable();
        for n in ready.drain(..) {
            let alt = inst
                .alternatives(n)
                .iter()
                .min_by_key(|a| match rules.machine_rule {
                    MachineRule::Spt => (a.duration, a.machine),
                    MachineRule::Eet => {
                        let committed = busy_until[a.machine].max(now) + queued_work[a.machine];
                        (committed + a.duration, a.machine)
                    }
                })
                .expect("validated instance has a compatible machine per task");
            machine_of[n] = alt.machine;
            durations[n] = alt.duration;
            queued_work[alt.machine] += alt.duration;
            queues[alt.machine].push(Queued { task: n, arrival: now });
        }

        for m in 0..n_machines {
            if running[m].is_some() || queues[m].is_empty() {
                continue;
            }
            let pick = select(inst, &queues[m], rules.sequencing_rule, &work_from);
            let Queued { task, .. } = queues[m].swap_remove(pick);
            starts[task] = now;
            busy_until[m] = now + durations[task];
            queued_work[m] -= durations[task];
            running[m] = Some(task);
            started += 1;
        }

        if started == n_tasks {
            break;
        }

        now = running
            .iter()
            .zip(&busy_until)
            .filter_map(|(r, &t)| r.map(|_| t))
            .min()
            .expect("unstarted tasks remain, so some machine is running");
        for m in 0..n_machines {
            if let Some(task) = running[m] {
                if busy_until[m] == now {
                    running[m] = None;
                    if let Some(next) = inst.next_task(task) {
                        ready.push(next);
                    }
                }
            }
        }
    }

    let assignment = Assignment::new(machine_of);
    let makespan = crate::model::completion_time(inst, &durations, &starts);
    Solution {
        assignment,
        schedule: Schedule { starts, makespan },
        status: SolveStatus::FeasibleTimeLimit,
    }
}

fn select(inst: &Instance, queue: &[Queued], rule: SequencingRule, work_from: &[f64]) -> usize {
    let key = |q: &Queued| (inst.job_of(q.task), q.task);
    let better = |a: &Queued, b: &Queued| -> bool {
        let primary = match rule {
            SequencingRule::Fifo => a.arrival.cmp(&b.arrival),
            SequencingRule::Mopnr => remaining_ops(inst, b.task).cmp(&remaining_ops(inst, a.task)),
            SequencingRule::Lwkr => work_from[a.task].total_cmp(&work_from[b.task]),
            SequencingRule::Mwkr => work_from[b.task].total_cmp(&work_from[a.task]),
        };
        primary.then_with(|| key(a).cmp(&key(b))).is_lt()
    };
    let mut best = 0;
    for i in 1..queue.len() {
        if better(&queue[i], &queue[best]) {
            best = i;
        }
    }
    best
}

fn remaining_ops(inst: &Instance, n: usize) -> usize {
    inst.job_tasks(inst.job_of(n)).end - n
}

/// Best makespan over all eight rule pairs, ties to the earlier pair.
pub fn best_dispatch(inst: &Instance) -> (RulePair, Solution) {
    RulePair::ALL
        .iter()
        .map(|&r| (r, dispatch(inst, r)))
        .min_by_key(|(_, s)| s.makespan())
        .expect("eight rule pairs")
}

/// Chooses the machine a rule would pick for `n` given machine availability; exposed for tests.
pub fn select_machine(inst: &Instance, n: usize, rule: MachineRule, ready: Time, machine_free: &[Time]) -> MachineId {
    inst.alternatives(n)
        .iter()
        .min_by_key(|a| match rule {
            MachineRule::Spt => (a.duration, a.machine),
            MachineRule::Eet => (machine_free[a.machine].max(ready) + a.duration, a.machine),
        })
        .map(|a| a.machine)
        .expect("validated instance")
}
