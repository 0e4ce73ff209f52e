//! Feasible schedules from predicted start times.
//!
//! Predicted starts are used only for their order. Sorting each machine's
//! tasks by predicted start fixes the disjunctions; together with the job
//! chains they form a precedence graph, and earliest starts along that graph
//! are the least-makespan schedule respecting the order. A cyclic order
//! (a task predicted before its own job predecessor on a shared machine)
//! falls back to serial schedule generation.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, Schedule, Time};

/// Per-machine task sequences plus a global priority used by the fallback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineOrdering {
    sequences: Vec<Vec<usize>>,
    /// `rank[n]` is task n's position in the global predicted order.
    rank: Vec<usize>,
}

impl MachineOrdering {
    /// Builds an ordering from explicit sequences. The fallback priority is
    /// the position within the machine sequence, then job, then task.
    pub fn from_sequences(inst: &Instance, a: &Assignment, sequences: Vec<Vec<usize>>) -> Result<Self> {
        let n = inst.num_tasks();
        a.check(inst)?;
        if sequences.len() != inst.num_machines() {
            return Err(Error::LengthMismatch {
                expected: inst.num_machines(),
                found: sequences.len(),
            });
        }
        let mut position = vec![usize::MAX; n];
        for (m, seq) in sequences.iter().enumerate() {
            for (i, &t) in seq.iter().enumerate() {
                if t >= n || a.machine(t) != m || position[t] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "machine {m} sequence lists task {t} out of place"
                    )));
                }
                position[t] = i;
            }
        }
        if position.contains(&usize::MAX) {
            return Err(Error::InvalidArgument("ordering does not cover every task".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&t| (position[t], inst.job_of(t), t));
        Ok(Self {
            sequences,
            rank: ranks(&order),
        })
    }

    pub fn sequences(&self) -> &[Vec<usize>] {
        &self.sequences
    }

    pub fn sequence(&self, machine: usize) -> &[usize] {
        &self.sequences[machine]
    }
}

fn ranks(order: &[usize]) -> Vec<usize> {
    let mut rank = vec![0; order.len()];
    for (i, &t) in order.iter().enumerate() {
        rank[t] = i;
    }
    rank
}

/// Sorts each machine's tasks by predicted start; equal predictions go by
/// job index, then task index.
pub fn derive_ordering(inst: &Instance, a: &Assignment, predicted: &[f64]) -> Result<MachineOrdering> {
    let n = inst.num_tasks();
    a.check(inst)?;
    if predicted.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: predicted.len(),
        });
    }
    let cmp = |&x: &usize, &y: &usize| -> Ordering {
        predicted[x]
            .total_cmp(&predicted[y])
            .then(inst.job_of(x).cmp(&inst.job_of(y)))
            .then(x.cmp(&y))
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(cmp);
    let mut sequences = vec![Vec::new(); inst.num_machines()];
    for &t in &order {
        sequences[a.machine(t)].push(t);
    }
    Ok(MachineOrdering {
        sequences,
        rank: ranks(&order),
    })
}

/// Earliest-start schedule under job chains and the machine sequences, or
/// the serial fallback when those constraints contain a cycle.
pub fn recover(inst: &Instance, a: &Assignment, ord: &MachineOrdering) -> Result<Schedule> {
    a.check(inst)?;
    if ord.rank.len() != inst.num_tasks() || ord.sequences.len() != inst.num_machines() {
        return Err(Error::LengthMismatch {
            expected: inst.num_tasks(),
            found: ord.rank.len(),
        });
    }
    let durations = a.durations(inst);
    let starts =
        longest_path(inst, &durations, &ord.sequences).unwrap_or_else(|| serial(inst, a, &durations, &ord.rank));
    Schedule::new(inst, a, starts)
}

/// Convenience for the common path: order by prediction, then recover.
pub fn recover_from_predictions(inst: &Instance, a: &Assignment, predicted: &[f64]) -> Result<Schedule> {
    let ord = derive_ordering(inst, a, predicted)?;
    recover(inst, a, &ord)
}

/// Kahn's algorithm with longest-path relaxation; `None` on a cycle.
fn longest_path(inst: &Instance, durations: &[Time], sequences: &[Vec<usize>]) -> Option<Vec<Time>> {
    let n = inst.num_tasks();
    let mut machine_next = vec![None; n];
    let mut indeg = vec![0usize; n];
    for seq in sequences {
        for w in seq.windows(2) {
            machine_next[w[0]] = Some(w[1]);
            indeg[w[1]] += 1;
        }
    }
    for t in 0..n {
        if let Some(next) = inst.next_task(t) {
            indeg[next] += 1;
        }
    }
    let mut starts = vec![0; n];
    let mut stack: Vec<usize> = (0..n).filter(|&t| indeg[t] == 0).collect();
    let mut seen = 0;
    while let Some(t) = stack.pop() {
        seen += 1;
        let end = starts[t] + durations[t];
        for succ in [inst.next_task(t), machine_next[t]].into_iter().flatten() {
            starts[succ] = starts[succ].max(end);
            indeg[succ] -= 1;
            if indeg[succ] == 0 {
                stack.push(succ);
            }
        }
    }
    (seen == n).then_some(starts)
}

/// Serial generation: repeatedly take the lowest-ranked task whose job
/// predecessor is done and append it to its machine.
fn serial(inst: &Instance, a: &Assignment, durations: &[Time], rank: &[usize]) -> Vec<Time> {
    let n = inst.num_tasks();
    let mut next: Vec<usize> = (0..inst.num_jobs()).map(|j| inst.job_tasks(j).start).collect();
    let mut job_ready = vec![0; inst.num_jobs()];
    let mut machine_free = vec![0; inst.num_machines()];
    let mut starts = vec![0; n];
    for _ in 0..n {
        let t = (0..inst.num_jobs())
            .filter(|&j| next[j] < inst.job_tasks(j).end)
            .map(|j| next[j])
            .min_by_key(|&t| rank[t])
            .expect("unscheduled task remains");
        let j = inst.job_of(t);
        let m = a.machine(t);
        let s = job_ready[j].max(machine_free[m]);
        starts[t] = s;
        job_ready[j] = s + durations[t];
        machine_free[m] = s + durations[t];
        next[j] += 1;
    }
    starts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_feasibility;
    use crate::model::tests::{alt, single_machine};
    use crate::solver::{solve_fjsp, solve_jsp, SolveOptions};
    use crate::JspView;
    use proptest::prelude::*;

    /// Iterative relaxation of all difference constraints until nothing moves.
    fn relaxation_oracle(inst: &Instance, a: &Assignment, sequences: &[Vec<usize>]) -> Option<Vec<Time>> {
        let n = inst.num_tasks();
        let d = a.durations(inst);
        let mut edges = Vec::new();
        for t in 0..n {
            if let Some(next) = inst.next_task(t) {
                edges.push((t, next));
            }
        }
        for seq in sequences {
            for w in seq.windows(2) {
                edges.push((w[0], w[1]));
            }
        }
        let mut s = vec![0; n];
        for _ in 0..=n {
            let mut changed = false;
            for &(x, y) in &edges {
                if s[x] + d[x] > s[y] {
                    s[y] = s[x] + d[x];
                    changed = true;
                }
            }
            if !changed {
                return Some(s);
            }
        }
        None
    }

    #[test]
    fn ordering_by_prediction() {
        let inst = single_machine(&[&[1], &[1]]);
        let a = Assignment::new(vec![0, 0]);
        let ord = derive_ordering(&inst, &a, &[0.2, 3.9]).unwrap();
        assert_eq!(ord.sequence(0), &[0, 1]);
        let ord = derive_ordering(&inst, &a, &[3.9, 0.2]).unwrap();
        assert_eq!(ord.sequence(0), &[1, 0]);
    }

    #[test]
    fn equal_predictions_break_ties_by_job() {
        let inst = single_machine(&[&[1], &[1], &[1]]);
        let a = Assignment::new(vec![0, 0, 0]);
        let ord = derive_ordering(&inst, &a, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(ord.sequence(0), &[0, 1, 2]);
    }

    #[test]
    fn different_machines_are_not_ordered_together() {
        let inst = Instance::new(2, vec![vec![vec![alt(0, 1)]], vec![vec![alt(1, 1)]]]).unwrap();
        let a = Assignment::new(vec![0, 1]);
        let ord = derive_ordering(&inst, &a, &[5.0, 0.0]).unwrap();
        assert_eq!(ord.sequences(), &[vec![0], vec![1]]);
    }

    #[test]
    fn chain_alone_on_machine() {
        let inst = single_machine(&[&[2, 3]]);
        let a = Assignment::new(vec![0, 0]);
        let s = recover_from_predictions(&inst, &a, &[0.0, 2.0]).unwrap();
        assert_eq!(s.starts, vec![0, 2]);
        assert_eq!(s.makespan, 5);
    }

    #[test]
    fn cycle_falls_back_to_serial() {
        let inst = single_machine(&[&[2, 2]]);
        let a = Assignment::new(vec![0, 0]);
        let ord = derive_ordering(&inst, &a, &[5.0, 0.0]).unwrap();
        assert_eq!(ord.sequence(0), &[1, 0]);
        let s = recover(&inst, &a, &ord).unwrap();
        assert_eq!(s.starts, vec![0, 2]);
    }

    #[test]
    fn optimal_starts_reproduce_optimal_makespan() {
        let inst = crate::io::parse_fjs("2 2 2\n2 2 1 3 2 4 1 1 2\n1 2 1 5 2 5\n").unwrap();
        let sol = solve_fjsp(&inst, &SolveOptions::default()).unwrap();
        let predicted: Vec<f64> = sol.schedule.starts.iter().map(|&s| s as f64).collect();
        let s = recover_from_predictions(&inst, &sol.assignment, &predicted).unwrap();
        assert_eq!(s.makespan, sol.makespan());
    }

    #[test]
    fn from_sequences_validates() {
        let inst = single_machine(&[&[1], &[1]]);
        let a = Assignment::new(vec![0, 0]);
        assert!(MachineOrdering::from_sequences(&inst, &a, vec![vec![1, 0]]).is_ok());
        assert!(MachineOrdering::from_sequences(&inst, &a, vec![vec![1]]).is_err());
        assert!(MachineOrdering::from_sequences(&inst, &a, vec![vec![1, 1]]).is_err());
        assert!(derive_ordering(&inst, &a, &[0.0]).is_err());
    }

    fn arb_case() -> impl Strategy<Value = (Instance, Assignment, Vec<f64>)> {
        (1usize..5, 1usize..4, 1usize..4, any::<u64>()).prop_map(|(jobs, tasks, machines, seed)| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let inst = crate::solver::tests::random_instance(&mut rng, jobs, tasks, machines);
            let machine_of = (0..inst.num_tasks())
                .map(|t| {
                    let alts = inst.alternatives(t);
                    alts[rng.random_range(0..alts.len())].machine
                })
                .collect();
            let predicted = (0..inst.num_tasks()).map(|_| rng.random_range(-5.0..40.0)).collect();
            (inst, Assignment::new(machine_of), predicted)
        })
    }

    proptest! {
        #[test]
        fn recovered_schedules_are_feasible((inst, a, predicted) in arb_case()) {
            let s = recover_from_predictions(&inst, &a, &predicted).unwrap();
            prop_assert!(check_feasibility(&inst, &a, &s).unwrap().is_feasible());
        }

        #[test]
        fn longest_path_matches_relaxation((inst, a, predicted) in arb_case()) {
            let ord = derive_ordering(&inst, &a, &predicted).unwrap();
            let oracle = relaxation_oracle(&inst, &a, ord.sequences());
            let direct = longest_path(&inst, &a.durations(&inst), ord.sequences());
            prop_assert_eq!(direct, oracle);
        }

        #[test]
        fn recovery_is_idempotent((inst, a, predicted) in arb_case()) {
            let first = recover_from_predictions(&inst, &a, &predicted).unwrap();
            let again: Vec<f64> = first.starts.iter().map(|&s| s as f64).collect();
            let second = recover_from_predictions(&inst, &a, &again).unwrap();
            prop_assert_eq!(first, second);
        }

        #[test]
        fn recovered_makespan_at_least_jsp_optimum((inst, a, predicted) in arb_case()) {
            let s = recover_from_predictions(&inst, &a, &predicted).unwrap();
            let view = JspView::new(&inst, &a).unwrap();
            let opt = solve_jsp(&view, &SolveOptions::default(), None).unwrap();
            prop_assert!(s.makespan >= opt.makespan());
        }
    }
}
