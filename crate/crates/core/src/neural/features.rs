use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance};

/// Problem dimensions a network is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub tasks: usize,
    pub machines: usize,
    pub jobs: usize,
}

impl Shape {
    pub fn of(inst: &Instance) -> Self {
        Self {
            tasks: inst.num_tasks(),
            machines: inst.num_machines(),
            jobs: inst.num_jobs(),
        }
    }
}

/// Network inputs for one instance, row-major by task.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensors {
    pub shape: Shape,
    /// `tasks x machines`: duration over scale where compatible, else 0.
    pub d_m: Vec<f64>,
    /// `tasks x jobs`: mean compatible duration over scale in the task's own
    /// job column, else 0.
    pub d_j: Vec<f64>,
    pub mask: Vec<bool>,
    pub norm_scale: f64,
}

/// Largest duration over a set of instances; the usual `norm_scale`.
pub fn max_duration<'a>(instances: impl IntoIterator<Item = &'a Instance>) -> f64 {
    instances.into_iter().map(|i| i.max_duration()).max().unwrap_or(1) as f64
}

impl FeatureTensors {
    pub fn new(inst: &Instance, norm_scale: f64) -> Result<Self> {
        if !(norm_scale > 0.0) || !norm_scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "normalization scale must be positive, got {norm_scale}"
            )));
        }
        let shape = Shape::of(inst);
        let (n, m, j) = (shape.tasks, shape.machines, shape.jobs);
        let mut d_m = vec![0.0; n * m];
        let mut mask = vec![false; n * m];
        let mut d_j = vec![0.0; n * j];
        for t in 0..n {
            for alt in inst.alternatives(t) {
                d_m[t * m + alt.machine] = alt.duration as f64 / norm_scale;
                mask[t * m + alt.machine] = true;
            }
            d_j[t * j + inst.job_of(t)] = inst.mean_duration(t) / norm_scale;
        }
        Ok(Self {
            shape,
            d_m,
            d_j,
            mask,
            norm_scale,
        })
    }

    /// Input for the scheduling stage: only the assigned machine's duration
    /// stays nonzero in `d_m`.
    pub fn conditioned(&self, a: &Assignment) -> Result<Self> {
        let (n, m) = (self.shape.tasks, self.shape.machines);
        if a.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: a.len(),
            });
        }
        let mut out = self.clone();
        for t in 0..n {
            let keep = a.machine(t);
            if keep >= m || !self.mask[t * m + keep] {
                return Err(Error::InvalidArgument(format!(
                    "task {t} cannot run on machine {keep}"
                )));
            }
            for k in 0..m {
                if k != keep {
                    out.d_m[t * m + k] = 0.0;
                }
            }
        }
        Ok(out)
    }
}
