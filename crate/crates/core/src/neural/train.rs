//! Mini-batch Adam training with plateau learning-rate decay, early
//! stopping on validation loss, and a grid search over depth and rate.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::DatasetRecord;
use crate::model::Assignment;
use crate::par::{map_indexed, Execution};

use super::features::FeatureTensors;
use super::loss::{assignment_loss, masked_softmax, scheduling_loss, LossConfig, ScheduleStructure};
use super::network::{Head, Mode, Network, NetworkConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Stale validation epochs before the rate is divided by ten.
    pub plateau_patience: usize,
    /// Stale validation epochs before training stops.
    pub early_stop_patience: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 1000,
            batch_size: 32,
            learning_rate: 1e-3,
            plateau_patience: 10,
            early_stop_patience: 20,
            rng_seed: 0,
        }
    }
}

pub const LR_DECAY: f64 = 0.1;

/// One supervised example, already in network units.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureTensors,
    pub assignment: Assignment,
    /// Start times divided by the normalization scale.
    pub starts: Vec<f64>,
    pub structure: ScheduleStructure,
}

impl Sample {
    /// For the start-time head the features are conditioned on the record's
    /// assignment.
    pub fn from_record(rec: &DatasetRecord, head: Head, norm_scale: f64) -> Result<Self> {
        let inst = rec.instance()?;
        let assignment = rec.assignment();
        let mut features = FeatureTensors::new(&inst, norm_scale)?;
        if head == Head::StartTimes {
            features = features.conditioned(&assignment)?;
        }
        Ok(Self {
            structure: ScheduleStructure::new(&inst, &assignment, norm_scale)?,
            starts: rec.starts.iter().map(|&s| s as f64 / norm_scale).collect(),
            features,
            assignment,
        })
    }

    pub fn from_records(recs: &[DatasetRecord], head: Head, norm_scale: f64) -> Result<Vec<Self>> {
        recs.iter().map(|r| Self::from_record(r, head, norm_scale)).collect()
    }
}

/// Loss of one network output and its gradient with respect to that output.
pub fn sample_loss(head: Head, output: &[f64], sample: &Sample, lc: &LossConfig) -> Result<(f64, Vec<f64>)> {
    let shape = sample.features.shape;
    let logits_len = shape.tasks * shape.machines;
    let assign = |logits: &[f64]| {
        let probs = masked_softmax(logits, &sample.features.mask, shape.machines)?;
        assignment_loss(&probs, &sample.features.mask, shape.machines, &sample.assignment, lc.epsilon)
    };
    let sched = |starts: &[f64]| scheduling_loss(starts, &sample.starts, &sample.structure, lc.lambda);
    match head {
        Head::AssignmentLogits => assign(output),
        Head::StartTimes => Ok(sched(output)),
        Head::Joint => {
            let (la, mut ga) = assign(&output[..logits_len])?;
            let (ls, gs) = sched(&output[logits_len..]);
            ga.extend(gs);
            Ok((la + ls, ga))
        }
    }
}

/// Mean loss over `samples` with dropout off.
pub fn evaluate_loss(net: &Network, samples: &[Sample], lc: &LossConfig) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        let y = net.forward(&s.features, Mode::Eval)?;
        total += sample_loss(net.config().head, &y, s, lc)?.0;
    }
    Ok(total / samples.len().max(1) as f64)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grads[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grads[i] * grads[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Stale { decay: bool, stop: bool },
}

/// Tracks stale validation epochs. The decay counter restarts after each
/// decay; the stop counter only restarts on improvement.
#[derive(Debug, Clone)]
pub struct Plateau {
    best: f64,
    since_improvement: usize,
    since_decay: usize,
    decay_after: usize,
    stop_after: usize,
}

impl Plateau {
    pub fn new(decay_after: usize, stop_after: usize) -> Self {
        Self {
            best: f64::INFINITY,
            since_improvement: 0,
            since_decay: 0,
            decay_after,
            stop_after,
        }
    }

    pub fn observe(&mut self, value: f64) -> Verdict {
        if value < self.best {
            self.best = value;
            self.since_improvement = 0;
            self.since_decay = 0;
            return Verdict::Improved;
        }
        self.since_improvement += 1;
        self.since_decay += 1;
        let stop = self.since_improvement >= self.stop_after;
        let decay = !stop && self.since_decay >= self.decay_after;
        if decay {
            self.since_decay = 0;
        }
        Verdict::Stale { decay, stop }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub network: Network,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
}

pub fn train(
    train_set: &[Sample],
    validation: &[Sample],
    net: &NetworkConfig,
    tc: &TrainConfig,
    lc: &LossConfig,
) -> Result<TrainOutcome> {
    if train_set.is_empty() || validation.is_empty() {
        return Err(Error::InvalidArgument(
            "training needs nonempty train and validation splits".into(),
        ));
    }
    if tc.batch_size == 0 || !(tc.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("batch size and learning rate must be positive".into()));
    }
    lc.validate()?;
    let mut network = Network::new(net.clone(), tc.rng_seed)?;
    let head = net.head;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(tc.rng_seed);
    shuffle_rng.set_stream(1);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(tc.rng_seed);
    dropout_rng.set_stream(2);

    let mut adam = Adam::new(network.num_params());
    let mut lr = tc.learning_rate;
    let mut plateau = Plateau::new(tc.plateau_patience, tc.early_stop_patience);
    let mut best = network.clone();
    let mut best_epoch = 0;
    let mut best_loss = f64::INFINITY;
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grads = vec![0.0; network.num_params()];

    for epoch in 1..=tc.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(tc.batch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let s = &train_set[i];
                let (y, cache) = network.forward_cached(&s.features, Mode::Train(&mut dropout_rng))?;
                let (loss, mut g) = sample_loss(head, &y, s, lc)?;
                epoch_loss += loss;
                g.iter_mut().for_each(|v| *v *= scale);
                network.backward(&cache, &g, &mut grads);
            }
            adam.step(network.params_mut(), &grads, lr);
        }
        let validation_loss = evaluate_loss(&network, validation, lc)?;
        history.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            validation_loss,
            learning_rate: lr,
        });
        match plateau.observe(validation_loss) {
            Verdict::Improved => {
                best = network.clone();
                best_epoch = epoch;
                best_loss = validation_loss;
            }
            Verdict::Stale { stop: true, .. } => break,
            Verdict::Stale { decay, .. } => {
                if decay {
                    lr *= LR_DECAY;
                }
            }
        }
        if !validation_loss.is_finite() {
            break;
        }
    }
    Ok(TrainOutcome {
        network: best,
        history,
        best_epoch,
        best_validation_loss: best_loss,
    })
}

/// Writes one JSON object per epoch.
pub fn write_history(history: &[EpochRecord], mut w: impl Write) -> std::io::Result<()> {
    for rec in history {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub encoder_layers: Vec<usize>,
    pub decoder_layers: Vec<usize>,
    pub learning_rates: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            encoder_layers: vec![2, 3],
            decoder_layers: vec![2, 3],
            learning_rates: vec![1e-1, 1e-2, 1e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub learning_rate: f64,
    pub best_validation_loss: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub best: TrainOutcome,
    pub trials: Vec<Trial>,
    pub best_trial: usize,
}

/// Trains one network per grid point (concurrently under `exec`) and keeps
/// the one with the lowest validation loss; ties go to the earlier point.
pub fn grid_search(
    train_set: &[Sample],
    validation: &[Sample],
    base: &NetworkConfig,
    tc: &TrainConfig,
    lc: &LossConfig,
    grid: &Grid,
    exec: Execution,
) -> Result<GridResult> {
    let mut points = Vec::new();
    for &e in &grid.encoder_layers {
        for &d in &grid.decoder_layers {
            for &lr in &grid.learning_rates {
                points.push((e, d, lr));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    let outcomes = map_indexed(&points, exec, |_, &(e, d, lr)| {
        let net = NetworkConfig {
            encoder_layers: e,
            decoder_layers: d,
            ..base.clone()
        };
        let tc = TrainConfig {
            learning_rate: lr,
            ..tc.clone()
        };
        train(train_set, validation, &net, &tc, lc)
    });
    let mut trials = Vec::new();
    let mut best: Option<(usize, TrainOutcome)> = None;
    for (i, (outcome, &(e, d, lr))) in outcomes.into_iter().zip(&points).enumerate() {
        let outcome = outcome?;
        trials.push(Trial {
            encoder_layers: e,
            decoder_layers: d,
            learning_rate: lr,
            best_validation_loss: outcome.best_validation_loss,
            epochs: outcome.history.len(),
        });
        if best
            .as_ref()
            .is_none_or(|(_, b)| outcome.best_validation_loss < b.best_validation_loss)
        {
            best = Some((i, outcome));
        }
    }
    let (best_trial, best) = best.expect("grid is nonempty");
    Ok(GridResult {
        best,
        trials,
        best_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{RecordKind, RecordMeta};
    use crate::model::tests::alt;
    use crate::model::{Instance, Schedule, SolveStatus};
    use crate::neural::features::Shape;
    use crate::solver::{solve_fjsp, SolveOptions};

    #[test]
    fn plateau_decays_once_after_ten_and_stops_at_twenty() {
        let mut p = Plateau::new(10, 20);
        assert_eq!(p.observe(1.0), Verdict::Improved);
        let verdicts: Vec<Verdict> = (0..20).map(|_| p.observe(1.0)).collect();
        let decays = verdicts
            .iter()
            .filter(|v| matches!(v, Verdict::Stale { decay: true, .. }))
            .count();
        assert_eq!(decays, 1);
        assert!(matches!(verdicts[9], Verdict::Stale { decay: true, stop: false }));
        assert!(matches!(verdicts[19], Verdict::Stale { stop: true, .. }));
        assert!(verdicts[..19].iter().all(|v| matches!(v, Verdict::Stale { stop: false, .. })));
    }

    #[test]
    fn improvement_resets_both_counters() {
        let mut p = Plateau::new(3, 5);
        p.observe(1.0);
        for _ in 0..4 {
            p.observe(2.0);
        }
        assert_eq!(p.observe(0.5), Verdict::Improved);
        for _ in 0..2 {
            assert!(matches!(p.observe(0.5), Verdict::Stale { decay: false, stop: false }));
        }
    }

    fn record(inst: &Instance) -> DatasetRecord {
        let sol = solve_fjsp(inst, &SolveOptions::default()).unwrap();
        DatasetRecord::from_solution(
            inst,
            &sol.assignment,
            &sol.schedule,
            RecordMeta {
                impacted_machine: 0,
                factor: 1.0,
                status: SolveStatus::Optimal,
                solve_seconds: None,
                instance_index: 0,
                kind: RecordKind::GroundTruth,
            },
        )
    }

    fn toy_records(n: usize) -> Vec<DatasetRecord> {
        (0..n)
            .map(|i| {
                let d = 1 + i as i64 % 5;
                let inst = Instance::new(
                    2,
                    vec![
                        vec![vec![alt(0, d), alt(1, 6 - d)], vec![alt(1, 2)]],
                        vec![vec![alt(0, 3), alt(1, 1 + d)]],
                    ],
                )
                .unwrap();
                record(&inst)
            })
            .collect()
    }

    /// Forced assignments give a constant validation loss, so every epoch
    /// after the first is stale.
    #[test]
    fn constant_validation_stops_after_twenty_stale_epochs() {
        let inst = Instance::new(2, vec![vec![vec![alt(0, 2)], vec![alt(1, 3)]]]).unwrap();
        let recs = vec![record(&inst); 4];
        let samples = Sample::from_records(&recs, Head::AssignmentLogits, 3.0).unwrap();
        let net = NetworkConfig::new(Shape::of(&inst), Head::AssignmentLogits);
        let out = train(&samples, &samples, &net, &TrainConfig::default(), &LossConfig::default()).unwrap();
        assert_eq!(out.history.len(), 21);
        assert_eq!(out.best_epoch, 1);
        let lrs: Vec<f64> = out.history.iter().map(|h| h.learning_rate).collect();
        assert!(lrs[..11].iter().all(|&l| l == 1e-3));
        assert!(lrs[11..].iter().all(|&l| l == 1e-3 * LR_DECAY));
    }

    #[test]
    fn overfits_a_toy_set() {
        let recs = toy_records(10);
        let shape = Shape::of(&recs[0].instance().unwrap());
        for head in [Head::AssignmentLogits, Head::StartTimes] {
            let samples = Sample::from_records(&recs, head, 6.0).unwrap();
            let net = NetworkConfig {
                dropout: 0.0,
                ..NetworkConfig::new(shape, head)
            };
            let tc = TrainConfig {
                max_epochs: 500,
                learning_rate: 1e-2,
                early_stop_patience: 500,
                plateau_patience: 500,
                rng_seed: 1,
                ..TrainConfig::default()
            };
            let out = train(&samples, &samples, &net, &tc, &LossConfig::default()).unwrap();
            let final_loss = evaluate_loss(&out.network, &samples, &LossConfig::default()).unwrap();
            assert!(final_loss < 1e-2, "{head:?}: {final_loss}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let recs = toy_records(10);
        let shape = Shape::of(&recs[0].instance().unwrap());
        let samples = Sample::from_records(&recs, Head::Joint, 6.0).unwrap();
        let net = NetworkConfig::new(shape, Head::Joint);
        let tc = TrainConfig {
            max_epochs: 15,
            ..TrainConfig::default()
        };
        let a = train(&samples[..8], &samples[8..], &net, &tc, &LossConfig::default()).unwrap();
        let b = train(&samples[..8], &samples[8..], &net, &tc, &LossConfig::default()).unwrap();
        assert_eq!(a.network, b.network);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn empty_split_is_rejected() {
        let recs = toy_records(2);
        let shape = Shape::of(&recs[0].instance().unwrap());
        let samples = Sample::from_records(&recs, Head::StartTimes, 6.0).unwrap();
        let net = NetworkConfig::new(shape, Head::StartTimes);
        assert!(train(&samples, &[], &net, &TrainConfig::default(), &LossConfig::default()).is_err());
    }

    #[test]
    fn grid_search_covers_grid_and_picks_lowest() {
        let recs = toy_records(10);
        let shape = Shape::of(&recs[0].instance().unwrap());
        let samples = Sample::from_records(&recs, Head::AssignmentLogits, 6.0).unwrap();
        let net = NetworkConfig::new(shape, Head::AssignmentLogits);
        let tc = TrainConfig {
            max_epochs: 5,
            ..TrainConfig::default()
        };
        let g = grid_search(
            &samples[..8],
            &samples[8..],
            &net,
            &tc,
            &LossConfig::default(),
            &Grid::default(),
            Execution::with_workers(4),
        )
        .unwrap();
        assert_eq!(g.trials.len(), 12);
        let min = g.trials.iter().map(|t| t.best_validation_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(g.trials[g.best_trial].best_validation_loss, min);
        assert_eq!(g.best.best_validation_loss, min);
    }

    #[test]
    fn history_is_json_lines() {
        let h = vec![
            EpochRecord {
                epoch: 1,
                train_loss: 1.0,
                validation_loss: 2.0,
                learning_rate: 0.1,
            };
            2
        ];
        let mut buf = Vec::new();
        write_history(&h, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back: EpochRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, h[0]);
    }

    #[test]
    fn schedule_samples_are_scaled() {
        let recs = toy_records(1);
        let s = Sample::from_record(&recs[0], Head::StartTimes, 2.0).unwrap();
        let sched: &Schedule = &recs[0].schedule();
        assert_eq!(s.starts[1], sched.starts[1] as f64 / 2.0);
    }
}
