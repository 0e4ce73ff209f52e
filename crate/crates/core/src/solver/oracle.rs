//! Exhaustive reference solvers for small instances.
//!
//! These enumerate every compatible assignment and every per-machine task
//! permutation and schedule each combination by longest path. They share no
//! code with the branch and bound and exist to check it.

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, JspView, MachineId, Schedule, Solution, SolveStatus, Time};

/// Largest task count the exhaustive solvers accept.
pub const ORACLE_MAX_TASKS: usize = 8;

fn guard(inst: &Instance) -> Result<()> {
    if inst.num_tasks() > ORACLE_MAX_TASKS {
        return Err(Error::InvalidArgument(format!(
            "exhaustive search limited to {ORACLE_MAX_TASKS} tasks, instance has {}",
            inst.num_tasks()
        )));
    }
    Ok(())
}

/// Optimal FJSP solution by full enumeration.
pub fn brute_force_fjsp(inst: &Instance) -> Result<Solution> {
    guard(inst)?;
    let mut best: Option<(Time, Vec<MachineId>, Vec<Time>)> = None;
    for_each_assignment(inst, &mut |machines| {
        let durations: Vec<Time> = machines
            .iter()
            .enumerate()
            .map(|(t, &m)| inst.duration(t, m).unwrap())
            .collect();
        if let Some((makespan, starts)) = best_sequence(inst, machines, &durations) {
            if best.as_ref().is_none_or(|b| makespan < b.0) {
                best = Some((makespan, machines.to_vec(), starts));
            }
        }
    });
    let (makespan, machines, starts) = best.expect("every valid instance has a schedule");
    Ok(Solution {
        assignment: Assignment::new(machines),
        schedule: Schedule { starts, makespan },
        status: SolveStatus::Optimal,
    })
}

/// Optimal makespan for a fixed assignment.
pub fn brute_force_jsp(view: &JspView) -> Result<Time> {
    let inst = view.instance();
    guard(inst)?;
    let machines = view.assignment().machines().to_vec();
    Ok(best_sequence(inst, &machines, view.durations())
        .expect("acyclic sequence exists")
        .0)
}

/// Least Hamming distance to `reference` among assignments admitting a
/// schedule that completes by `cap`.
pub fn brute_force_min_hamming(inst: &Instance, reference: &Assignment, cap: Time) -> Result<Option<usize>> {
    guard(inst)?;
    let mut best: Option<usize> = None;
    for_each_assignment(inst, &mut |machines| {
        let distance = Assignment::new(machines.to_vec()).hamming_distance(reference);
        if best.is_some_and(|b| b <= distance) {
            return;
        }
        let durations: Vec<Time> = machines
            .iter()
            .enumerate()
            .map(|(t, &m)| inst.duration(t, m).unwrap())
            .collect();
        if best_sequence(inst, machines, &durations).is_some_and(|(mk, _)| mk <= cap) {
            best = Some(distance);
        }
    });
    Ok(best)
}

/// Least L1 distance from `reference` over all integer start vectors that are
/// feasible for `view` and complete by `cap`. Exponential in the task count;
/// intended for three or four tasks.
pub fn brute_force_min_start_distance(view: &JspView, reference: &[Time], cap: Time) -> Option<i64> {
    let inst = view.instance();
    let n = inst.num_tasks();
    let d = view.durations();
    let mut starts = vec![0; n];
    let mut best: Option<i64> = None;

    fn rec(
        t: usize,
        view: &JspView,
        d: &[Time],
        cap: Time,
        reference: &[Time],
        starts: &mut Vec<Time>,
        best: &mut Option<i64>,
    ) {
        let n = starts.len();
        if t == n {
            let inst = view.instance();
            for a in 0..n {
                if let Some(next) = inst.next_task(a) {
                    if starts[a] + d[a] > starts[next] {
                        return;
                    }
                }
                for b in a + 1..n {
                    if view.machine_of(a) == view.machine_of(b)
                        && starts[a] < starts[b] + d[b]
                        && starts[b] < starts[a] + d[a]
                    {
                        return;
                    }
                }
            }
            let dist: i64 = starts.iter().zip(reference).map(|(s, r)| (s - r).abs()).sum();
            if best.is_none_or(|b| dist < b) {
                *best = Some(dist);
            }
            return;
        }
        for s in 0..=(cap - d[t]) {
            starts[t] = s;
            rec(t + 1, view, d, cap, reference, starts, best);
        }
    }

    rec(0, view, d, cap, reference, &mut starts, &mut best);
    best
}

fn for_each_assignment(inst: &Instance, f: &mut impl FnMut(&[MachineId])) {
    let n = inst.num_tasks();
    let mut machines = vec![0; n];
    fn rec(t: usize, inst: &Instance, machines: &mut Vec<MachineId>, f: &mut impl FnMut(&[MachineId])) {
        if t == machines.len() {
            f(machines);
            return;
        }
        for alt in inst.alternatives(t) {
            machines[t] = alt.machine;
            rec(t + 1, inst, machines, f);
        }
    }
    rec(0, inst, &mut machines, f);
}

/// Best makespan over all machine orders for a fixed assignment.
fn best_sequence(inst: &Instance, machines: &[MachineId], durations: &[Time]) -> Option<(Time, Vec<Time>)> {
    let per_machine: Vec<Vec<usize>> = (0..inst.num_machines())
        .map(|m| (0..inst.num_tasks()).filter(|&t| machines[t] == m).collect())
        .collect();
    let perms: Vec<Vec<Vec<usize>>> = per_machine.iter().map(|tasks| permutations(tasks)).collect();

    let mut best: Option<(Time, Vec<Time>)> = None;
    let mut choice = vec![0usize; perms.len()];
    loop {
        let orders: Vec<&Vec<usize>> = choice.iter().enumerate().map(|(m, &i)| &perms[m][i]).collect();
        if let Some(starts) = longest_path(inst, durations, &orders) {
            let makespan = (0..inst.num_tasks())
                .filter(|&t| inst.is_last_in_job(t))
                .map(|t| starts[t] + durations[t])
                .max()
                .unwrap_or(0);
            if best.as_ref().is_none_or(|b| makespan < b.0) {
                best = Some((makespan, starts));
            }
        }
        // odometer over machines
        let mut m = 0;
        loop {
            if m == choice.len() {
                return best;
            }
            choice[m] += 1;
            if choice[m] < perms[m].len() {
                break;
            }
            choice[m] = 0;
            m += 1;
        }
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Earliest starts under job chains plus the given machine orders; `None` on a cycle.
fn longest_path(inst: &Instance, durations: &[Time], orders: &[&Vec<usize>]) -> Option<Vec<Time>> {
    let n = inst.num_tasks();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    let mut edge = |a: usize, b: usize| {
        succ[a].push(b);
        indeg[b] += 1;
    };
    for t in 0..n {
        if let Some(next) = inst.next_task(t) {
            edge(t, next);
        }
    }
    for order in orders {
        for w in order.windows(2) {
            edge(w[0], w[1]);
        }
    }
    let mut starts = vec![0; n];
    let mut stack: Vec<usize> = (0..n).filter(|&t| indeg[t] == 0).collect();
    let mut seen = 0;
    while let Some(a) = stack.pop() {
        seen += 1;
        for &b in &succ[a] {
            starts[b] = starts[b].max(starts[a] + durations[a]);
            indeg[b] -= 1;
            if indeg[b] == 0 {
                stack.push(b);
            }
        }
    }
    (seen == n).then_some(starts)
}
