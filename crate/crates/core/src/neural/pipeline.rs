//! Inference: features, assignment, start times, then recovery to a
//! feasible schedule.

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, Solution, SolveStatus};
use crate::recovery::recover_from_predictions;

use super::checkpoint::Checkpoint;
use super::features::FeatureTensors;
use super::loss::{entropy_branch, AssignmentDistribution};
use super::network::{Head, Mode};

fn expect_head(c: &Checkpoint, head: Head) -> Result<()> {
    let found = c.network.config().head;
    if found != head {
        return Err(Error::InvalidArgument(format!(
            "checkpoint has a {found:?} head, expected {head:?}"
        )));
    }
    Ok(())
}

pub fn predict_distribution(inst: &Instance, assign: &Checkpoint) -> Result<AssignmentDistribution> {
    expect_head(assign, Head::AssignmentLogits)?;
    let f = FeatureTensors::new(inst, assign.norm_scale)?;
    let logits = assign.network.forward(&f, Mode::Eval)?;
    AssignmentDistribution::new(logits, f.mask, inst.num_machines())
}

/// Predicted start times in time units for a fixed assignment.
pub fn predict_starts(inst: &Instance, a: &Assignment, sched: &Checkpoint) -> Result<Vec<f64>> {
    expect_head(sched, Head::StartTimes)?;
    let f = FeatureTensors::new(inst, sched.norm_scale)?.conditioned(a)?;
    let y = sched.network.forward(&f, Mode::Eval)?;
    Ok(y.into_iter().map(|s| s * sched.norm_scale).collect())
}

fn finish(inst: &Instance, a: Assignment, predicted: &[f64]) -> Result<Solution> {
    let schedule = recover_from_predictions(inst, &a, predicted)?;
    Ok(Solution {
        assignment: a,
        schedule,
        status: SolveStatus::FeasibleTimeLimit,
    })
}

/// Two-stage prediction with the argmax assignment.
pub fn predict_pipeline(inst: &Instance, assign: &Checkpoint, sched: &Checkpoint) -> Result<Solution> {
    predict_with_branching(inst, assign, sched, 0)
}

/// Runs the scheduling stage and recovery on every entropy-branch candidate
/// and keeps the lowest makespan; earlier candidates win ties. A branch size
/// of 0 is the plain argmax pipeline.
pub fn predict_with_branching(
    inst: &Instance,
    assign: &Checkpoint,
    sched: &Checkpoint,
    branch_size: usize,
) -> Result<Solution> {
    let dist = predict_distribution(inst, assign)?;
    let mut best: Option<Solution> = None;
    for a in entropy_branch(&dist, branch_size.min(inst.num_tasks())) {
        let starts = predict_starts(inst, &a, sched)?;
        let sol = finish(inst, a, &starts)?;
        if best.as_ref().is_none_or(|b| sol.makespan() < b.makespan()) {
            best = Some(sol);
        }
    }
    Ok(best.expect("branching yields at least the argmax"))
}

/// One-stage baseline: a joint head predicts logits and starts together.
pub fn predict_encoder(inst: &Instance, joint: &Checkpoint) -> Result<Solution> {
    expect_head(joint, Head::Joint)?;
    let f = FeatureTensors::new(inst, joint.norm_scale)?;
    let y = joint.network.forward(&f, Mode::Eval)?;
    let split = inst.num_tasks() * inst.num_machines();
    let dist = AssignmentDistribution::new(y[..split].to_vec(), f.mask, inst.num_machines())?;
    let starts: Vec<f64> = y[split..].iter().map(|s| s * joint.norm_scale).collect();
    finish(inst, dist.argmax(), &starts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_feasibility;
    use crate::model::tests::alt;
    use crate::neural::{Network, NetworkConfig, Shape};
    use crate::solver::{solve_fjsp, SolveOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn checkpoint(inst: &Instance, head: Head, seed: u64) -> Checkpoint {
        Checkpoint {
            network: Network::new(NetworkConfig::new(Shape::of(inst), head), seed).unwrap(),
            norm_scale: inst.max_duration() as f64,
        }
    }

    #[test]
    fn random_networks_still_give_feasible_schedules() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..20 {
            let inst = crate::solver::tests::random_instance(&mut rng, 3, 3, 3);
            let a = checkpoint(&inst, Head::AssignmentLogits, seed);
            let s = checkpoint(&inst, Head::StartTimes, seed + 100);
            let j = checkpoint(&inst, Head::Joint, seed + 200);
            let opt = solve_fjsp(&inst, &SolveOptions::default()).unwrap().makespan();
            for sol in [
                predict_pipeline(&inst, &a, &s).unwrap(),
                predict_with_branching(&inst, &a, &s, rng.random_range(0..4)).unwrap(),
                predict_encoder(&inst, &j).unwrap(),
            ] {
                assert!(check_feasibility(&inst, &sol.assignment, &sol.schedule).unwrap().is_feasible());
                assert!(sol.makespan() >= opt);
                assert_eq!(sol.status, SolveStatus::FeasibleTimeLimit);
            }
        }
    }

    #[test]
    fn branching_never_hurts() {
        let inst = Instance::new(
            2,
            vec![
                vec![vec![alt(0, 3), alt(1, 4)], vec![alt(0, 2), alt(1, 2)]],
                vec![vec![alt(0, 5), alt(1, 5)]],
            ],
        )
        .unwrap();
        for seed in 0..10 {
            let a = checkpoint(&inst, Head::AssignmentLogits, seed);
            let s = checkpoint(&inst, Head::StartTimes, seed);
            let plain = predict_pipeline(&inst, &a, &s).unwrap().makespan();
            let branched = predict_with_branching(&inst, &a, &s, 3).unwrap().makespan();
            assert!(branched <= plain);
        }
    }

    #[test]
    fn wrong_head_is_rejected() {
        let inst = Instance::new(1, vec![vec![vec![alt(0, 2)]]]).unwrap();
        let a = checkpoint(&inst, Head::AssignmentLogits, 0);
        assert!(predict_pipeline(&inst, &a, &a).is_err());
        assert!(predict_encoder(&inst, &a).is_err());
    }
}
