//! Depth-first branch and bound over semi-active schedules.
//!
//! A node appends one `(task, machine)` pair to a partial schedule, starting
//! the task at the later of its job predecessor's end and the machine's
//! current end. Every semi-active schedule is generated by exactly one
//! sequence whose `(start, job)` keys increase strictly, so children that
//! would break that order are skipped. The same ordering gives a floor on all
//! future start times, which tightens the bounds below.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Instance, MachineId, Time};

use super::projection::project_starts;

const MEMO_CAPACITY: usize = 2_000_000;

pub(crate) enum Objective<'a> {
    Makespan,
    /// Fewest tasks off their reference machine, makespan capped.
    Hamming { reference: &'a [MachineId], cap: Time },
    /// Least L1 distance to reference starts, makespan capped. Requires one
    /// alternative per task.
    StartDistance { reference: &'a [Time], cap: Time },
}

pub(crate) struct Incumbent {
    pub machine_of: Vec<MachineId>,
    pub starts: Vec<Time>,
}

pub(crate) struct Outcome {
    pub best: Option<Incumbent>,
    /// True when the search space was exhausted, i.e. `best` is optimal.
    pub complete: bool,
}

struct Candidate {
    task: usize,
    machine: MachineId,
    duration: Time,
    start: Time,
    key: (i64, Time, u64),
}

pub(crate) struct Search<'a> {
    inst: &'a Instance,
    objective: Objective<'a>,
    deadline: Instant,
    rng: Option<ChaCha8Rng>,

    tail_min: Vec<Time>,
    job_end: Vec<usize>,

    next: Vec<usize>,
    job_ready: Vec<Time>,
    machine_free: Vec<Time>,
    last: Option<(Time, usize)>,
    machine_of: Vec<MachineId>,
    starts: Vec<Time>,
    sequences: Vec<Vec<usize>>,
    remaining_min_work: Time,
    mandatory_load: Vec<Time>,
    mismatches: i64,

    best: Option<Incumbent>,
    best_value: i64,
    target_value: i64,
    memo: HashMap<Box<[i64]>, i64>,
    nodes: u64,
    timed_out: bool,
    done: bool,
}

impl<'a> Search<'a> {
    pub fn new(inst: &'a Instance, objective: Objective<'a>, deadline: Instant, seed: Option<u64>) -> Self {
        let n = inst.num_tasks();
        let mut tail_min = vec![0; n];
        for t in (0..n).rev() {
            tail_min[t] = inst.min_duration(t) + inst.next_task(t).map_or(0, |x| tail_min[x]);
        }
        let job_end = (0..inst.num_jobs()).map(|j| inst.job_tasks(j).end).collect();
        let mut mandatory_load = vec![0; inst.num_machines()];
        for t in 0..n {
            if let [only] = inst.alternatives(t) {
                mandatory_load[only.machine] += only.duration;
            }
        }
        Self {
            inst,
            objective,
            deadline,
            rng: seed.map(ChaCha8Rng::seed_from_u64),
            tail_min,
            job_end,
            next: (0..inst.num_jobs()).map(|j| inst.job_tasks(j).start).collect(),
            job_ready: vec![0; inst.num_jobs()],
            machine_free: vec![0; inst.num_machines()],
            last: None,
            machine_of: vec![0; n],
            starts: vec![0; n],
            sequences: vec![Vec::new(); inst.num_machines()],
            remaining_min_work: (0..n).map(|t| inst.min_duration(t)).sum(),
            mandatory_load,
            mismatches: 0,
            best: None,
            best_value: i64::MAX,
            target_value: i64::MIN,
            memo: HashMap::new(),
            nodes: 0,
            timed_out: false,
            done: false,
        }
    }

    /// Only solutions strictly below `value` will be recorded.
    pub fn with_upper_bound(mut self, value: i64) -> Self {
        self.best_value = value;
        self
    }

    pub fn run(mut self) -> Outcome {
        self.target_value = self.root_bound();
        self.dfs(0);
        Outcome {
            complete: !self.timed_out,
            best: self.best,
        }
    }

    /// A value no solution can beat; reaching it ends the search early.
    fn root_bound(&self) -> i64 {
        match self.objective {
            Objective::Makespan => self.makespan_bound(),
            Objective::Hamming { reference, .. } => (0..self.inst.num_tasks())
                .filter(|&t| !self.inst.is_compatible(t, reference[t]))
                .count() as i64,
            Objective::StartDistance { .. } => self.start_distance_bound().unwrap_or(i64::MAX),
        }
    }

    fn dfs(&mut self, depth: usize) {
        if self.done || self.timed_out {
            return;
        }
        self.nodes += 1;
        if Instant::now() >= self.deadline {
            self.timed_out = true;
            return;
        }
        if depth == self.inst.num_tasks() {
            self.leaf();
            return;
        }

        let makespan_lb = self.makespan_bound();
        match self.objective {
            Objective::Makespan => {
                if makespan_lb >= self.best_value {
                    return;
                }
            }
            Objective::Hamming { reference, cap } => {
                if makespan_lb > cap {
                    return;
                }
                let forced = self.forced_mismatches(reference);
                if self.mismatches + forced >= self.best_value {
                    return;
                }
            }
            Objective::StartDistance { cap, .. } => {
                if makespan_lb > cap {
                    return;
                }
                match self.start_distance_bound() {
                    Some(lb) if lb < self.best_value => {}
                    _ => return,
                }
            }
        }

        if !self.memo_admits() {
            return;
        }

        let candidates = self.candidates();
        for c in candidates {
            let saved = self.apply(&c);
            self.dfs(depth + 1);
            self.undo(&c, saved);
            if self.done || self.timed_out {
                return;
            }
        }
    }

    fn leaf(&mut self) {
        let makespan = self.job_ready.iter().copied().max().unwrap_or(0);
        let (value, starts) = match self.objective {
            Objective::Makespan => (makespan, self.starts.clone()),
            Objective::Hamming { cap, .. } => {
                if makespan > cap {
                    return;
                }
                (self.mismatches, self.starts.clone())
            }
            Objective::StartDistance { reference, cap } => {
                let durations: Vec<Time> = (0..self.inst.num_tasks())
                    .map(|t| self.inst.alternatives(t)[0].duration)
                    .collect();
                match project_starts(self.inst, &durations, &self.sequences, reference, cap) {
                    Some(projected) => {
                        let dist = l1(&projected, reference);
                        (dist, projected)
                    }
                    None => return,
                }
            }
        };
        if value < self.best_value {
            self.best_value = value;
            self.best = Some(Incumbent {
                machine_of: self.machine_of.clone(),
                starts,
            });
            if value <= self.target_value {
                self.done = true;
            }
        }
    }

    fn floor(&self) -> Time {
        self.last.map_or(0, |(s, _)| s)
    }

    fn makespan_bound(&self) -> Time {
        let floor = self.floor();
        let mut lb = self.job_ready.iter().copied().max().unwrap_or(0);
        for (j, &t) in self.next.iter().enumerate() {
            if t < self.job_end[j] {
                lb = lb.max(self.job_ready[j].max(floor) + self.tail_min[t]);
            }
        }
        let mut total = self.remaining_min_work;
        for (m, &free) in self.machine_free.iter().enumerate() {
            let free = free.max(floor);
            lb = lb.max(free + self.mandatory_load[m]);
            total += free;
        }
        let machines = self.machine_free.len() as Time;
        lb.max((total + machines - 1) / machines)
    }

    fn forced_mismatches(&self, reference: &[MachineId]) -> i64 {
        let mut forced = 0;
        for (j, &start) in self.next.iter().enumerate() {
            for t in start..self.job_end[j] {
                if !self.inst.is_compatible(t, reference[t]) {
                    forced += 1;
                }
            }
        }
        forced
    }

    /// Sum over tasks of the distance from the reference start to the window
    /// of starts still reachable; `None` if some window is empty.
    fn start_distance_bound(&self) -> Option<i64> {
        let Objective::StartDistance { reference, cap } = self.objective else {
            return Some(0);
        };
        let floor = self.floor();
        let mut lb = 0;
        for (j, &first_open) in self.next.iter().enumerate() {
            let range = self.inst.job_tasks(j);
            let mut est = 0;
            for t in range.clone() {
                let alt = self.inst.alternatives(t)[0];
                let earliest = if t < first_open {
                    self.starts[t]
                } else {
                    let chain = if t == first_open { self.job_ready[j] } else { est };
                    chain.max(floor).max(self.machine_free[alt.machine])
                };
                let latest = cap - self.tail_min[t];
                if earliest > latest {
                    return None;
                }
                let r = reference[t];
                lb += if r < earliest {
                    earliest - r
                } else if r > latest {
                    r - latest
                } else {
                    0
                };
                est = earliest + alt.duration;
            }
        }
        Some(lb)
    }

    fn memo_key(&self) -> Box<[i64]> {
        let mut key = Vec::with_capacity(2 * self.next.len() + self.machine_free.len() + 2);
        key.extend(self.next.iter().map(|&x| x as i64));
        key.extend(self.job_ready.iter().copied());
        key.extend(self.machine_free.iter().copied());
        let (s, j) = self.last.map_or((-1, -1), |(s, j)| (s, j as i64));
        key.push(s);
        key.push(j);
        key.into_boxed_slice()
    }

    /// Transposition check. Two partial schedules with the same frontier have
    /// identical futures; for the Hamming objective the cheaper one wins.
    fn memo_admits(&mut self) -> bool {
        let cost = match self.objective {
            Objective::Makespan => 0,
            Objective::Hamming { .. } => self.mismatches,
            Objective::StartDistance { .. } => return true,
        };
        let key = self.memo_key();
        match self.memo.get_mut(&key) {
            Some(seen) if *seen <= cost => false,
            Some(seen) => {
                *seen = cost;
                true
            }
            None => {
                if self.memo.len() < MEMO_CAPACITY {
                    self.memo.insert(key, cost);
                }
                true
            }
        }
    }

    fn candidates(&mut self) -> Vec<Candidate> {
        let mut out = Vec::new();
        for j in 0..self.next.len() {
            let t = self.next[j];
            if t >= self.job_end[j] {
                continue;
            }
            for alt in self.inst.alternatives(t) {
                let start = self.job_ready[j].max(self.machine_free[alt.machine]);
                if let Some(last) = self.last {
                    if (start, j) <= last {
                        continue;
                    }
                }
                let end = start + alt.duration;
                let primary = match self.objective {
                    Objective::Makespan => 0,
                    Objective::Hamming { reference, .. } => i64::from(alt.machine != reference[t]),
                    Objective::StartDistance { reference, .. } => (start - reference[t]).abs(),
                };
                let tie = match self.rng.as_mut() {
                    Some(rng) => rng.random::<u64>(),
                    None => ((j as u64) << 32) | alt.machine as u64,
                };
                out.push(Candidate {
                    task: t,
                    machine: alt.machine,
                    duration: alt.duration,
                    start,
                    key: (primary, end, tie),
                });
            }
        }
        out.sort_by_key(|c| c.key);
        out
    }

    fn apply(&mut self, c: &Candidate) -> Saved {
        let j = self.inst.job_of(c.task);
        let saved = Saved {
            job_ready: self.job_ready[j],
            machine_free: self.machine_free[c.machine],
            last: self.last,
        };
        self.next[j] += 1;
        self.job_ready[j] = c.start + c.duration;
        self.machine_free[c.machine] = c.start + c.duration;
        self.last = Some((c.start, j));
        self.machine_of[c.task] = c.machine;
        self.starts[c.task] = c.start;
        self.sequences[c.machine].push(c.task);
        self.remaining_min_work -= self.inst.min_duration(c.task);
        if let [only] = self.inst.alternatives(c.task) {
            self.mandatory_load[only.machine] -= only.duration;
        }
        if let Objective::Hamming { reference, .. } = self.objective {
            if c.machine != reference[c.task] {
                self.mismatches += 1;
            }
        }
        saved
    }

    fn undo(&mut self, c: &Candidate, saved: Saved) {
        let j = self.inst.job_of(c.task);
        self.next[j] -= 1;
        self.job_ready[j] = saved.job_ready;
        self.machine_free[c.machine] = saved.machine_free;
        self.last = saved.last;
        self.sequences[c.machine].pop();
        self.remaining_min_work += self.inst.min_duration(c.task);
        if let [only] = self.inst.alternatives(c.task) {
            self.mandatory_load[only.machine] += only.duration;
        }
        if let Objective::Hamming { reference, .. } = self.objective {
            if c.machine != reference[c.task] {
                self.mismatches -= 1;
            }
        }
    }
}

struct Saved {
    job_ready: Time,
    machine_free: Time,
    last: Option<(Time, usize)>,
}

pub(crate) fn l1(a: &[Time], b: &[Time]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
