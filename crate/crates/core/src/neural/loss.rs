//! Losses, the masked softmax over compatible machines, and entropy-based
//! branching on uncertain assignments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the constraint-violation penalty in the scheduling loss.
    pub lambda: f64,
    /// Probability clamp inside logarithms.
    pub epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            epsilon: 1e-7,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda {} must be >= 0", self.lambda)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1e-3) {
            return Err(Error::InvalidArgument(format!("epsilon {} not in (0, 1e-3)", self.epsilon)));
        }
        Ok(())
    }
}

/// Per-task machine logits and their masked softmax, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentDistribution {
    pub machines: usize,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub mask: Vec<bool>,
}

impl AssignmentDistribution {
    pub fn new(logits: Vec<f64>, mask: Vec<bool>, machines: usize) -> Result<Self> {
        let probs = masked_softmax(&logits, &mask, machines)?;
        Ok(Self {
            machines,
            logits,
            probs,
            mask,
        })
    }

    pub fn num_tasks(&self) -> usize {
        self.probs.len() / self.machines
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.probs[t * self.machines..(t + 1) * self.machines]
    }

    /// Most probable compatible machine per task; ties go to the lowest id.
    pub fn argmax(&self) -> Assignment {
        let m = self.machines;
        Assignment::new(
            (0..self.num_tasks())
                .map(|t| {
                    (0..m)
                        .filter(|&k| self.mask[t * m + k])
                        .fold(None, |best: Option<usize>, k| match best {
                            Some(b) if self.probs[t * m + b] >= self.probs[t * m + k] => Some(b),
                            _ => Some(k),
                        })
                        .expect("every row has a compatible machine")
                })
                .collect(),
        )
    }

    /// Shannon entropy of each task's distribution.
    pub fn entropies(&self) -> Vec<f64> {
        (0..self.num_tasks())
            .map(|t| {
                -self
                    .row(t)
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|&p| p * p.ln())
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Row-wise softmax over unmasked entries; masked entries are exactly 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool], machines: usize) -> Result<Vec<f64>> {
    if machines == 0 || logits.len() != mask.len() || logits.len() % machines != 0 {
        return Err(Error::LengthMismatch {
            expected: mask.len(),
            found: logits.len(),
        });
    }
    let mut out = vec![0.0; logits.len()];
    for (t, (row, keep)) in logits.chunks(machines).zip(mask.chunks(machines)).enumerate() {
        let top = row
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!("task {t} has no compatible machine")));
        }
        let dst = &mut out[t * machines..(t + 1) * machines];
        let mut total = 0.0;
        for k in 0..machines {
            if keep[k] {
                dst[k] = (row[k] - top).exp();
                total += dst[k];
            }
        }
        dst.iter_mut().for_each(|p| *p /= total);
    }
    Ok(out)
}

/// Binary cross-entropy summed over compatible entries, with probabilities
/// clamped to `[eps, 1 - eps]`. Returns the loss and its gradient with
/// respect to the logits that produced `probs`.
pub fn assignment_loss(
    probs: &[f64],
    mask: &[bool],
    machines: usize,
    truth: &Assignment,
    eps: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = probs.len() / machines.max(1);
    if truth.len() != n || mask.len() != probs.len() {
        return Err(Error::LengthMismatch {
            expected: n,
            found: truth.len(),
        });
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; probs.len()];
    let mut dp = vec![0.0; machines];
    for t in 0..n {
        let target = truth.machine(t);
        if target >= machines || !mask[t * machines + target] {
            return Err(Error::InvalidArgument(format!(
                "truth puts task {t} on incompatible machine {target}"
            )));
        }
        let p = &probs[t * machines..(t + 1) * machines];
        let keep = &mask[t * machines..(t + 1) * machines];
        for k in 0..machines {
            dp[k] = 0.0;
            if !keep[k] {
                continue;
            }
            let z = if k == target { 1.0 } else { 0.0 };
            let pc = p[k].clamp(eps, 1.0 - eps);
            loss -= z * pc.ln() + (1.0 - z) * (1.0 - pc).ln();
            if p[k] > eps && p[k] < 1.0 - eps {
                dp[k] = -z / pc + (1.0 - z) / (1.0 - pc);
            }
        }
        // Softmax Jacobian restricted to the compatible entries.
        let dot: f64 = (0..machines).filter(|&k| keep[k]).map(|k| dp[k] * p[k]).sum();
        for k in 0..machines {
            if keep[k] {
                grad[t * machines + k] = p[k] * (dp[k] - dot);
            }
        }
    }
    Ok((loss, grad))
}

/// Precomputed constraint structure of one (instance, assignment) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleStructure {
    pub durations: Vec<f64>,
    /// Consecutive tasks of a job, in processing order.
    pub chain: Vec<(usize, usize)>,
    /// All unordered pairs sharing a machine.
    pub shared: Vec<(usize, usize)>,
}

impl ScheduleStructure {
    pub fn new(inst: &Instance, a: &Assignment, scale: f64) -> Result<Self> {
        a.check(inst)?;
        let n = inst.num_tasks();
        let durations = a.durations(inst).into_iter().map(|d| d as f64 / scale).collect();
        let chain = (0..n).filter_map(|t| inst.next_task(t).map(|x| (t, x))).collect();
        let mut shared = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                if a.machine(x) == a.machine(y) {
                    shared.push((x, y));
                }
            }
        }
        Ok(Self {
            durations,
            chain,
            shared,
        })
    }
}

/// `|pred - truth|_1` plus `lambda` times the precedence and overlap
/// violations of `pred`. Subgradients are 0 at kinks.
pub fn scheduling_loss(pred: &[f64], truth: &[f64], structure: &ScheduleStructure, lambda: f64) -> (f64, Vec<f64>) {
    let d = &structure.durations;
    let mut grad = vec![0.0; pred.len()];
    let mut loss = 0.0;
    for (t, (&p, &s)) in pred.iter().zip(truth).enumerate() {
        loss += (p - s).abs();
        grad[t] = sign(p - s);
    }
    if lambda == 0.0 {
        return (loss, grad);
    }
    for &(a, b) in &structure.chain {
        let v = pred[a] + d[a] - pred[b];
        if v > 0.0 {
            loss += lambda * v;
            grad[a] += lambda;
            grad[b] -= lambda;
        }
    }
    for &(a, b) in &structure.shared {
        // a before b leaves pred[a] + d[a] - pred[b] overlap, and vice versa.
        let left = (pred[a] + d[a] - pred[b]).max(0.0);
        let right = (pred[b] + d[b] - pred[a]).max(0.0);
        let v = left.min(right);
        if v > 0.0 {
            loss += lambda * v;
            if left < right {
                grad[a] += lambda;
                grad[b] -= lambda;
            } else if right < left {
                grad[b] += lambda;
                grad[a] -= lambda;
            }
        }
    }
    (loss, grad)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Tasks chosen for branching, highest entropy first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSet {
    pub tasks: Vec<usize>,
}

impl BranchSet {
    /// The `s` tasks of highest entropy; ties go to the lower task index.
    pub fn select(dist: &AssignmentDistribution, s: usize) -> Self {
        let h = dist.entropies();
        let mut order: Vec<usize> = (0..h.len()).collect();
        order.sort_by(|&x, &y| h[y].total_cmp(&h[x]).then(x.cmp(&y)));
        order.truncate(s);
        Self { tasks: order }
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

/// The argmax assignment followed by every single-task reassignment of the
/// `s` most uncertain tasks to another compatible machine.
pub fn entropy_branch(dist: &AssignmentDistribution, s: usize) -> Vec<Assignment> {
    let base = dist.argmax();
    let m = dist.machines;
    let mut out = vec![base.clone()];
    for t in BranchSet::select(dist, s).tasks {
        for k in (0..m).filter(|&k| dist.mask[t * m + k] && k != base.machine(t)) {
            let mut a = base.clone();
            a.set_machine(t, k);
            out.push(a);
        }
    }
    out
}
