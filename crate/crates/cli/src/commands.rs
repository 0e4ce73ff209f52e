use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use fjsp_core::bench::{compute_references, run_benchmark, Method, Reference};
use fjsp_core::datagen::{
    augment_scheduling_dataset, build_reference_with_delay, generate_dataset, DatasetSplit, GenerateOptions,
    LabelMode, PerturbSpec,
};
use fjsp_core::heuristics::{dispatch, RulePair};
use fjsp_core::io::{read_dataset, read_fjs, write_dataset, DatasetRecord};
use fjsp_core::neural::{
    entropy_branch, grid_search, max_duration, predict_distribution, predict_encoder, predict_with_branching, train,
    write_history, Checkpoint, Grid, Head, LossConfig, NetworkConfig, Sample, Shape, TrainConfig,
};
use fjsp_core::par::Execution;
use fjsp_core::recovery::recover_from_predictions;
use fjsp_core::solver::{solve_fjsp, solve_jsp, solve_symmetry_breaking, SolveOptions, SymmetryBreakGoal};
use fjsp_core::{Assignment, Instance, JspView, Solution, SolveStatus};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::manifest::RunInfo;

pub fn execute(cmd: &Command) -> CliResult<RunInfo> {
    let mut info = RunInfo::default();
    match cmd {
        Command::Solve(a) => solve(a, &mut info)?,
        Command::Heuristic(a) => heuristic(a, &mut info)?,
        Command::GenData(a) => gen_data(a, &mut info)?,
        Command::Augment(a) => augment(a, &mut info)?,
        Command::Train(a) => train_stage(a, &mut info)?,
        Command::Predict(a) => predict(a, &mut info)?,
        Command::Recover(a) => recover(a, &mut info)?,
        Command::Evaluate(a) => evaluate(a, &mut info)?,
        Command::Replay(_) => unreachable!("replay is handled by the caller"),
    }
    Ok(info)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn time_limit(seconds: f64) -> CliResult<f64> {
    if seconds.is_finite() && seconds > 0.0 {
        Ok(seconds)
    } else {
        Err(CliError::Usage(format!("time limit must be positive, got {seconds}")))
    }
}

fn report_solution(inst: &Instance, sol: &Solution, output: Option<&Path>, info: &mut RunInfo) -> CliResult<()> {
    let check = fjsp_core::check_feasibility(inst, &sol.assignment, &sol.schedule)?;
    println!("makespan {}", sol.makespan());
    println!("status {}", sol.status);
    if !check.is_feasible() {
        println!("violations {}", check.total);
    }
    if let Some(out) = output {
        write_json(out, sol)?;
        info.output(out);
    }
    Ok(())
}

fn solve(a: &SolveArgs, info: &mut RunInfo) -> CliResult<()> {
    let inst = read_fjs(&a.input)?;
    info.input(&a.input);
    let opts = SolveOptions {
        time_limit_seconds: time_limit(a.time_limit)?,
        seed: a.seed,
        ..SolveOptions::default()
    };
    if let Some(s) = a.seed {
        info.seed("solver", s);
    }
    let sol = match a.mode {
        ModeArg::Makespan => solve_fjsp(&inst, &opts)?,
        ModeArg::SymmetryBreak => {
            let path = a.reference.as_ref().expect("clap requires --reference");
            let reference: Solution = read_json(path)?;
            info.input(path);
            reference.assignment.check(&inst)?;
            let optimum = solve_fjsp(&inst, &opts)?;
            let goal = SymmetryBreakGoal {
                reference_assignment: reference.assignment.clone(),
                reference_starts: Some(reference.schedule.starts.clone()),
                target_makespan: optimum.makespan(),
            };
            let assigned = solve_symmetry_breaking(&inst, &goal, &opts)?;
            let view = JspView::new(&inst, &assigned.assignment)?;
            let mut sol = solve_jsp(&view, &opts, Some(&goal))?;
            if optimum.status != SolveStatus::Optimal || assigned.status != SolveStatus::Optimal {
                sol.status = SolveStatus::FeasibleTimeLimit;
            }
            println!(
                "hamming {}",
                sol.assignment.hamming_distance(&reference.assignment)
            );
            sol
        }
    };
    report_solution(&inst, &sol, a.output.as_deref(), info)
}

fn heuristic(a: &HeuristicArgs, info: &mut RunInfo) -> CliResult<()> {
    let inst = read_fjs(&a.input)?;
    info.input(&a.input);
    let sol = dispatch(&inst, a.rule);
    report_solution(&inst, &sol, a.output.as_deref(), info)
}

fn gen_data(a: &GenDataArgs, info: &mut RunInfo) -> CliResult<()> {
    let base = read_fjs(&a.base)?;
    info.input(&a.base);
    info.seed("data", a.seed);
    let solve = SolveOptions::with_time_limit(time_limit(a.time_limit)?);
    if !(a.reference_delay >= 0.0) {
        return Err(CliError::Usage(format!(
            "reference delay must be nonnegative, got {}",
            a.reference_delay
        )));
    }
    let reference = build_reference_with_delay(&base, a.machine, a.reference_delay, &solve)?;
    let spec = PerturbSpec {
        factor_range: (a.factor_min, a.factor_max),
        vary_machine: a.vary_machine,
        ..PerturbSpec::new(a.machine, a.count, a.seed)
    };
    let opts = GenerateOptions {
        solve,
        mode: match a.labels {
            LabelArg::SymmetryBreaking => LabelMode::SymmetryBreaking,
            LabelArg::Standard => LabelMode::Standard,
        },
        execution: Execution::with_workers(a.workers),
        record_timings: a.record_timings,
    };
    let data = generate_dataset(&base, &spec, &reference, &opts)?;
    for f in &data.failures {
        eprintln!("warning: draw {} skipped: {}", f.index, f.message);
    }
    if data.records.is_empty() {
        return Err(CliError::Data("no instance could be labelled".into()));
    }
    write_dataset(&data.records, &a.output)?;
    let reference_path = sibling(&a.output, ".reference.json");
    let split_path = sibling(&a.output, ".split.json");
    write_json(&reference_path, &reference)?;
    write_json(&split_path, &data.split)?;
    info.output(&a.output);
    info.output(&reference_path);
    info.output(&split_path);
    println!(
        "records {} (train {}, validation {}, test {}), failures {}",
        data.records.len(),
        data.split.train.len(),
        data.split.validation.len(),
        data.split.test.len(),
        data.failures.len()
    );
    Ok(())
}

fn load_split(path: &Path, n: usize, info: &mut RunInfo) -> CliResult<DatasetSplit> {
    let split: DatasetSplit = read_json(path)?;
    info.input(path);
    if let Some(i) = [&split.train, &split.validation, &split.test]
        .into_iter()
        .flatten()
        .find(|&&i| i >= n)
    {
        return Err(CliError::Data(format!(
            "{}: index {i} out of range for {n} records",
            path.display()
        )));
    }
    Ok(split)
}

fn pick(records: &[DatasetRecord], idx: &[usize]) -> Vec<DatasetRecord> {
    idx.iter().map(|&i| records[i].clone()).collect()
}

fn load_checkpoint(path: &Path, info: &mut RunInfo) -> CliResult<Checkpoint> {
    info.input(path);
    Ok(Checkpoint::load(path)?)
}

fn augment(a: &AugmentArgs, info: &mut RunInfo) -> CliResult<()> {
    let records = read_dataset(&a.data, true)?;
    info.input(&a.data);
    let split = load_split(&a.split, records.len(), info)?;
    let assign = load_checkpoint(&a.assign_model, info)?;
    let reference: Solution = read_json(&a.reference)?;
    info.input(&a.reference);
    info.seed("augment", a.seed);

    let train_records = pick(&records, &split.train);
    let mut candidates = Vec::new();
    for (i, rec) in train_records.iter().enumerate() {
        let dist = predict_distribution(&rec.instance()?, &assign)?;
        candidates.extend(entropy_branch(&dist, a.branch_size).into_iter().map(|c| (i, c)));
    }
    let opts = GenerateOptions {
        solve: SolveOptions::with_time_limit(time_limit(a.time_limit)?),
        execution: Execution::with_workers(a.workers),
        ..GenerateOptions::default()
    };
    let starts = (!a.standard).then_some(reference.schedule.starts.as_slice());
    let out = augment_scheduling_dataset(&train_records, &candidates, starts, a.cap, a.seed, &opts)?;
    for f in &out.failures {
        eprintln!("warning: candidate {} skipped: {}", f.index, f.message);
    }
    write_dataset(&out.records, &a.output)?;
    info.output(&a.output);
    println!(
        "records {} from {} ground truths and {} candidates, failures {}",
        out.records.len(),
        train_records.len(),
        candidates.len(),
        out.failures.len()
    );
    Ok(())
}

fn train_stage(a: &TrainArgs, info: &mut RunInfo) -> CliResult<()> {
    let records = read_dataset(&a.data, true)?;
    info.input(&a.data);
    let split = load_split(&a.split, records.len(), info)?;
    info.seed("train", a.seed);
    let train_records = match &a.train_data {
        Some(p) => {
            info.input(p);
            read_dataset(p, true)?
        }
        None => pick(&records, &split.train),
    };
    let validation = pick(&records, &split.validation);
    let head = match a.stage {
        StageArg::Assign => Head::AssignmentLogits,
        StageArg::Sched => Head::StartTimes,
        StageArg::Joint => Head::Joint,
    };
    let first = records
        .first()
        .ok_or_else(|| CliError::Data(format!("{}: no records", a.data.display())))?
        .instance()?;
    let instances = records
        .iter()
        .chain(&train_records)
        .map(DatasetRecord::instance)
        .collect::<fjsp_core::Result<Vec<_>>>()?;
    let norm_scale = max_duration(instances.iter());

    let train_set = Sample::from_records(&train_records, head, norm_scale)?;
    let val_set = Sample::from_records(&validation, head, norm_scale)?;
    let net = NetworkConfig {
        encoder_layers: a.encoder_layers,
        decoder_layers: a.decoder_layers,
        filters: a.filters,
        hidden: a.hidden,
        dropout: a.dropout,
        ..NetworkConfig::new(Shape::of(&first), head)
    };
    let tc = TrainConfig {
        max_epochs: a.max_epochs,
        batch_size: a.batch_size,
        learning_rate: a.learning_rate,
        rng_seed: a.seed,
        ..TrainConfig::default()
    };
    let lc = LossConfig {
        lambda: a.lambda,
        ..LossConfig::default()
    };
    let outcome = if a.grid {
        let result = grid_search(
            &train_set,
            &val_set,
            &net,
            &tc,
            &lc,
            &Grid::default(),
            Execution::with_workers(a.workers),
        )?;
        for (k, t) in result.trials.iter().enumerate() {
            println!(
                "trial {k}: encoder {} decoder {} rate {:e} -> validation {:.6e} ({} epochs){}",
                t.encoder_layers,
                t.decoder_layers,
                t.learning_rate,
                t.best_validation_loss,
                t.epochs,
                if k == result.best_trial { " *" } else { "" }
            );
        }
        result.best
    } else {
        train(&train_set, &val_set, &net, &tc, &lc)?
    };

    Checkpoint {
        network: outcome.network,
        norm_scale,
    }
    .save(&a.output)?;
    info.output(&a.output);
    let history = a.history.clone().unwrap_or_else(|| sibling(&a.output, ".history.jsonl"));
    let file = File::create(&history).map_err(|e| CliError::Data(format!("{}: {e}", history.display())))?;
    write_history(&outcome.history, BufWriter::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", history.display())))?;
    info.output(&history);
    println!(
        "epochs {}, best epoch {}, validation loss {:.6e}",
        outcome.history.len(),
        outcome.best_epoch,
        outcome.best_validation_loss
    );
    Ok(())
}

fn predict(a: &PredictArgs, info: &mut RunInfo) -> CliResult<()> {
    let inst = read_fjs(&a.input)?;
    info.input(&a.input);
    let sol = match (&a.assign_model, &a.sched_model, &a.encoder_model) {
        (Some(am), Some(sm), None) => {
            let assign = load_checkpoint(am, info)?;
            let sched = load_checkpoint(sm, info)?;
            predict_with_branching(&inst, &assign, &sched, a.branch_size)?
        }
        (None, None, Some(em)) => predict_encoder(&inst, &load_checkpoint(em, info)?)?,
        _ => {
            return Err(CliError::Usage(
                "give --assign-model with --sched-model, or --encoder-model".into(),
            ))
        }
    };
    report_solution(&inst, &sol, a.output.as_deref(), info)
}

#[derive(Debug, Deserialize)]
struct Predictions {
    assignment: Vec<usize>,
    starts: Vec<f64>,
}

fn recover(a: &RecoverArgs, info: &mut RunInfo) -> CliResult<()> {
    let inst = read_fjs(&a.input)?;
    info.input(&a.input);
    let p: Predictions = read_json(&a.predictions)?;
    info.input(&a.predictions);
    let assignment = Assignment::for_instance(&inst, p.assignment)?;
    let schedule = recover_from_predictions(&inst, &assignment, &p.starts)?;
    let sol = Solution {
        assignment,
        schedule,
        status: SolveStatus::FeasibleTimeLimit,
    };
    report_solution(&inst, &sol, a.output.as_deref(), info)
}

fn evaluate(a: &EvaluateArgs, info: &mut RunInfo) -> CliResult<()> {
    let records = read_dataset(&a.data, true)?;
    info.input(&a.data);
    let split = load_split(&a.split, records.len(), info)?;
    let idx: Vec<usize> = match a.subset {
        SubsetArg::Train => split.train.clone(),
        SubsetArg::Validation => split.validation.clone(),
        SubsetArg::Test => split.test.clone(),
        SubsetArg::All => (0..records.len()).collect(),
    };
    if idx.is_empty() {
        return Err(CliError::Data("the selected subset is empty".into()));
    }
    let subset = pick(&records, &idx);
    let instances = subset
        .iter()
        .map(DatasetRecord::instance)
        .collect::<fjsp_core::Result<Vec<_>>>()?;
    let exec = Execution::with_workers(a.workers);
    let opts = SolveOptions::with_time_limit(time_limit(a.time_limit)?);
    let references = if a.recompute_reference {
        compute_references(&instances, &opts, exec)?
    } else {
        subset
            .iter()
            .map(|r| Reference {
                makespan: r.makespan,
                status: r.meta.status,
            })
            .collect()
    };

    let assign = a.assign_model.as_deref().map(|p| load_checkpoint(p, info)).transpose()?;
    let sched = a.sched_model.as_deref().map(|p| load_checkpoint(p, info)).transpose()?;
    let encoder = a.encoder_model.as_deref().map(|p| load_checkpoint(p, info)).transpose()?;

    let mut methods: Vec<Method> = RulePair::ALL.iter().map(|&r| Method::Heuristic(r)).collect();
    if let (Some(assign), Some(sched)) = (&assign, &sched) {
        for &branch_size in &a.branch_size {
            methods.push(Method::TwoStage {
                assign,
                sched,
                branch_size,
            });
        }
    }
    if let Some(e) = &encoder {
        methods.push(Method::Encoder(e));
    }
    if a.exact {
        methods.push(Method::Exact(&opts));
    }

    let report = run_benchmark(&instances, &references, &methods, exec)?;
    print!("{}", report.render_table());
    if let Some(path) = &a.report {
        write_json(path, &report)?;
        info.output(path);
    }
    Ok(())
}
