use fjsp_core::datagen::{build_reference, generate_dataset, GenerateOptions, PerturbSpec};
use fjsp_core::heuristics::{best_dispatch, dispatch, RulePair};
use fjsp_core::io::{parse_fjs, read_dataset, write_dataset, write_fjs};
use fjsp_core::neural::{predict_pipeline, Checkpoint, Head, Network, NetworkConfig, Shape};
use fjsp_core::par::Execution;
use fjsp_core::recovery::recover_from_predictions;
use fjsp_core::solver::{brute_force_fjsp, solve_fjsp, SolveOptions};
use fjsp_core::{check_feasibility, instances, Alternative, Instance};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=3).prop_flat_map(|machines| {
        let alt = (0..machines, 1i64..=9).prop_map(|(machine, duration)| Alternative { machine, duration });
        let task = prop::collection::vec(alt, 1..=machines).prop_map(|mut alts| {
            alts.sort_by_key(|a| a.machine);
            alts.dedup_by_key(|a| a.machine);
            alts
        });
        let job = prop::collection::vec(task, 1..=2);
        prop::collection::vec(job, 1..=3).prop_map(move |jobs| Instance::new(machines, jobs).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fjs_text_round_trips(inst in instance()) {
        prop_assert_eq!(parse_fjs(&write_fjs(&inst)).unwrap(), inst);
    }

    #[test]
    fn solver_matches_oracle_and_bounds_heuristics(inst in instance()) {
        let exact = solve_fjsp(&inst, &SolveOptions::default()).unwrap();
        prop_assert_eq!(exact.makespan(), brute_force_fjsp(&inst).unwrap().makespan());
        prop_assert!(check_feasibility(&inst, &exact.assignment, &exact.schedule).unwrap().is_feasible());
        for rule in RulePair::ALL {
            prop_assert!(dispatch(&inst, rule).makespan() >= exact.makespan());
        }
    }

    #[test]
    fn recovery_of_heuristic_starts_never_worsens_them(inst in instance()) {
        let (_, sol) = best_dispatch(&inst);
        let starts: Vec<f64> = sol.schedule.starts.iter().map(|&s| s as f64).collect();
        let recovered = recover_from_predictions(&inst, &sol.assignment, &starts).unwrap();
        prop_assert!(check_feasibility(&inst, &sol.assignment, &recovered).unwrap().is_feasible());
        prop_assert!(recovered.makespan <= sol.makespan());
    }
}

#[test]
fn generated_dataset_survives_a_file_round_trip() {
    let base = instances::base_4x3x3();
    let reference = build_reference(&base, 1, &SolveOptions::default()).unwrap();
    let opts = GenerateOptions {
        execution: Execution::with_workers(2),
        ..GenerateOptions::default()
    };
    let data = generate_dataset(&base, &PerturbSpec::new(1, 20, 9), &reference, &opts).unwrap();
    assert_eq!(data.records.len(), 20);
    assert_eq!(data.split.len(), 20);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    write_dataset(&data.records, &path).unwrap();
    let back = read_dataset(&path, true).unwrap();
    assert_eq!(back, data.records);
}

#[test]
fn untrained_pipeline_still_yields_feasible_schedules() {
    for (_, inst) in instances::all() {
        let shape = Shape::of(&inst);
        let scale = inst.max_duration() as f64;
        let assign = Checkpoint {
            network: Network::new(NetworkConfig::new(shape, Head::AssignmentLogits), 3).unwrap(),
            norm_scale: scale,
        };
        let sched = Checkpoint {
            network: Network::new(NetworkConfig::new(shape, Head::StartTimes), 4).unwrap(),
            norm_scale: scale,
        };
        let sol = predict_pipeline(&inst, &assign, &sched).unwrap();
        assert!(check_feasibility(&inst, &sol.assignment, &sol.schedule).unwrap().is_feasible());
    }
}
