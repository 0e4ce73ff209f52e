//! Closest schedule to a reference under fixed machine sequences.
//!
//! With the sequences fixed the feasible starts form a system of difference
//! constraints, and minimizing the L1 distance to the reference is a linear
//! program. Writing each start as `r + up - down` keeps the constraint matrix
//! totally unimodular, so the simplex vertex is integral.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::model::{Instance, Time};

/// Starts minimizing `sum |s - reference|` subject to job order, the given
/// per-machine sequences, `s >= 0` and completion by `cap`. `None` if no
/// schedule respects the sequences within `cap`.
pub(crate) fn project_starts(
    inst: &Instance,
    durations: &[Time],
    sequences: &[Vec<usize>],
    reference: &[Time],
    cap: Time,
) -> Option<Vec<Time>> {
    let n = inst.num_tasks();
    let mut tail = vec![0; n];
    for t in (0..n).rev() {
        tail[t] = durations[t] + inst.next_task(t).map_or(0, |x| tail[x]);
    }

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n)
        .map(|_| (lp.add_var(1.0, (0.0, f64::INFINITY)), lp.add_var(1.0, (0.0, f64::INFINITY))))
        .collect();

    // 0 <= r + up - down <= cap - tail
    for t in 0..n {
        let (up, down) = vars[t];
        let r = reference[t] as f64;
        lp.add_constraint(&[(up, 1.0), (down, -1.0)], ComparisonOp::Ge, -r);
        lp.add_constraint(&[(up, 1.0), (down, -1.0)], ComparisonOp::Le, (cap - tail[t]) as f64 - r);
    }
    // s_after - s_before >= d_before
    let mut precede = |before: usize, after: usize| {
        let (ua, da) = vars[after];
        let (ub, db) = vars[before];
        let rhs = (durations[before] + reference[before] - reference[after]) as f64;
        lp.add_constraint(&[(ua, 1.0), (da, -1.0), (ub, -1.0), (db, 1.0)], ComparisonOp::Ge, rhs);
    };
    for t in 0..n {
        if let Some(next) = inst.next_task(t) {
            precede(t, next);
        }
    }
    for seq in sequences {
        for pair in seq.windows(2) {
            precede(pair[0], pair[1]);
        }
    }

    let solution = lp.solve().ok()?.into_solution().ok()?;
    let starts: Vec<Time> = (0..n)
        .map(|t| {
            let (up, down) = vars[t];
            reference[t] + (solution.var_value(up) - solution.var_value(down)).round() as Time
        })
        .collect();

    let respects = |before: usize, after: usize| starts[before] + durations[before] <= starts[after];
    let ok = (0..n).all(|t| starts[t] >= 0 && starts[t] + tail[t] <= cap)
        && (0..n).all(|t| inst.next_task(t).is_none_or(|x| respects(t, x)))
        && sequences.iter().all(|s| s.windows(2).all(|p| respects(p[0], p[1])));
    ok.then_some(starts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::single_machine;

    #[test]
    fn reference_already_feasible() {
        let inst = single_machine(&[&[3], &[3]]);
        let starts = project_starts(&inst, &[3, 3], &[vec![1, 0]], &[3, 0], 6).unwrap();
        assert_eq!(starts, vec![3, 0]);
    }

    #[test]
    fn shifts_to_nearest_feasible() {
        // Chain of 2 then 3; reference wants both at 1.
        let inst = single_machine(&[&[2, 3]]);
        let starts = project_starts(&inst, &[2, 3], &[vec![0, 1]], &[1, 1], 10).unwrap();
        // Cost 2 is optimal; several splits attain it.
        assert_eq!((starts[0] - 1).abs() + (starts[1] - 1).abs(), 2);
        assert!(starts[0] + 2 <= starts[1]);
    }

    #[test]
    fn cap_too_small_is_infeasible() {
        let inst = single_machine(&[&[3], &[3]]);
        assert!(project_starts(&inst, &[3, 3], &[vec![0, 1]], &[0, 3], 5).is_none());
    }
}
