//! `.fjs` benchmark files and line-delimited dataset records.
//!
//! The `.fjs` grammar: a header `J M [avg_flexibility]`, then exactly one
//! line per job holding the task count followed, per task, by `k` and `k`
//! pairs `machine duration` with 1-based machine ids. Blank lines are skipped.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::model::{check_feasibility, Alternative, Assignment, Instance, Schedule, SolveStatus, Time};

/// Parses an `.fjs` file. Machine ids are converted to 0-based.
pub fn parse_fjs(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_no, header) = lines.next().ok_or_else(|| ParseError {
        line: 1,
        token: 0,
        message: "empty input, expected header `J M [flexibility]`".into(),
    })?;
    let header_tokens: Vec<&str> = header.split_whitespace().collect();
    if header_tokens.len() < 2 || header_tokens.len() > 3 {
        return Err(ParseError {
            line: header_no,
            token: 0,
            message: format!("header needs 2 or 3 fields, found {}", header_tokens.len()),
        }
        .into());
    }
    let num_jobs = parse_count(header_tokens[0], header_no, 1)?;
    let num_machines = parse_count(header_tokens[1], header_no, 2)?;
    if let Some(flex) = header_tokens.get(2) {
        flex.parse::<f64>().map_err(|_| ParseError {
            line: header_no,
            token: 3,
            message: format!("flexibility `{flex}` is not a number"),
        })?;
    }
    if num_jobs == 0 || num_machines == 0 {
        return Err(ParseError {
            line: header_no,
            token: 0,
            message: "job and machine counts must be positive".into(),
        }
        .into());
    }

    let mut jobs = Vec::new();
    for j in 0..num_jobs {
        let Some((line_no, line)) = lines.next() else {
            return Err(ParseError {
                line: header_no,
                token: 0,
                message: format!("header declares {num_jobs} jobs but only {j} job lines follow"),
            }
            .into());
        };
        jobs.push(parse_job_line(line, line_no, num_machines)?);
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(ParseError {
            line: line_no,
            token: 1,
            message: format!("unexpected content after {num_jobs} job lines"),
        }
        .into());
    }
    Instance::new(num_machines, jobs)
}

/// Byte-level entry point; rejects non-UTF-8 input instead of panicking.
pub fn parse_fjs_bytes(bytes: &[u8]) -> Result<Instance> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        token: 0,
        message: "input is not valid UTF-8".into(),
    })?;
    parse_fjs(text)
}

fn parse_count(token: &str, line: usize, pos: usize) -> Result<usize, ParseError> {
    token.parse::<usize>().map_err(|_| ParseError {
        line,
        token: pos,
        message: format!("`{token}` is not a non-negative integer"),
    })
}

struct Tokens<'a> {
    tokens: Vec<&'a str>,
    pos: usize,
    line: usize,
}

impl<'a> Tokens<'a> {
    /// Next token with its 1-based position.
    fn next(&mut self, what: &str) -> Result<(&'a str, usize), ParseError> {
        let tok = self.tokens.get(self.pos).copied().ok_or_else(|| ParseError {
            line: self.line,
            token: self.pos + 1,
            message: format!("line ended early, expected {what}"),
        })?;
        self.pos += 1;
        Ok((tok, self.pos))
    }

    fn count(&mut self, what: &str) -> Result<(usize, usize), ParseError> {
        let (tok, pos) = self.next(what)?;
        Ok((parse_count(tok, self.line, pos)?, pos))
    }
}

fn parse_job_line(line: &str, line_no: usize, num_machines: usize) -> Result<Vec<Vec<Alternative>>> {
    let mut tokens = Tokens {
        tokens: line.split_whitespace().collect(),
        pos: 0,
        line: line_no,
    };
    let (num_tasks, _) = tokens.count("task count")?;
    let mut tasks = Vec::new();
    for _ in 0..num_tasks {
        let (k, _) = tokens.count("number of machine options")?;
        let mut alts = Vec::new();
        for _ in 0..k {
            let (machine, m_pos) = tokens.count("machine id")?;
            if machine == 0 || machine > num_machines {
                return Err(ParseError {
                    line: line_no,
                    token: m_pos,
                    message: format!("machine id {machine} outside 1..={num_machines}"),
                }
                .into());
            }
            let (d_tok, d_pos) = tokens.next("duration")?;
            let duration: Time = d_tok.parse().map_err(|_| ParseError {
                line: line_no,
                token: d_pos,
                message: format!("duration `{d_tok}` is not an integer"),
            })?;
            alts.push(Alternative {
                machine: machine - 1,
                duration,
            });
        }
        tasks.push(alts);
    }
    if tokens.pos != tokens.tokens.len() {
        return Err(ParseError {
            line: line_no,
            token: tokens.pos + 1,
            message: format!("{} trailing tokens after the declared tasks", tokens.tokens.len() - tokens.pos),
        }
        .into());
    }
    Ok(tasks)
}

/// Emits an `.fjs` file; the header's third field is the mean compatible-set size.
pub fn write_fjs(inst: &Instance) -> String {
    let mut out = format!(
        "{} {} {:.2}\n",
        inst.num_jobs(),
        inst.num_machines(),
        inst.flexibility()
    );
    for j in 0..inst.num_jobs() {
        let mut fields = vec![inst.tasks_in_job(j).to_string()];
        for n in inst.job_tasks(j) {
            let alts = inst.alternatives(n);
            fields.push(alts.len().to_string());
            for a in alts {
                fields.push((a.machine + 1).to_string());
                fields.push(a.duration.to_string());
            }
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_fjs(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_fjs_bytes(&bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    /// Solver label for the instance itself.
    #[default]
    GroundTruth,
    /// Scheduling label for a branched candidate assignment.
    Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub impacted_machine: usize,
    pub factor: f64,
    pub status: SolveStatus,
    /// Wall-clock solve time; omitted unless timings were requested, since it
    /// would break byte-identical regeneration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve_seconds: Option<f64>,
    /// Position of the perturbed instance in its generation run.
    pub instance_index: usize,
    #[serde(default)]
    pub kind: RecordKind,
}

/// One supervised sample: perturbed durations with assignment and start labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub tasks_per_job: Vec<usize>,
    /// Dense `N x M`, `null` where the machine is incompatible.
    pub durations: Vec<Vec<Option<Time>>>,
    pub assignment: Vec<usize>,
    pub starts: Vec<Time>,
    pub makespan: Time,
    pub meta: RecordMeta,
}

impl DatasetRecord {
    pub fn from_solution(inst: &Instance, assignment: &Assignment, schedule: &Schedule, meta: RecordMeta) -> Self {
        Self {
            tasks_per_job: inst.tasks_per_job(),
            durations: inst.dense_durations(),
            assignment: assignment.machines().to_vec(),
            starts: schedule.starts.clone(),
            makespan: schedule.makespan,
            meta,
        }
    }

    pub fn instance(&self) -> Result<Instance> {
        Instance::from_dense(&self.tasks_per_job, &self.durations)
    }

    pub fn assignment(&self) -> Assignment {
        Assignment::new(self.assignment.clone())
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            starts: self.starts.clone(),
            makespan: self.makespan,
        }
    }

    /// Assignment compatible, schedule violation-free, makespan consistent.
    pub fn verify(&self) -> Result<()> {
        let inst = self.instance()?;
        let a = self.assignment();
        let s = self.schedule();
        let report = check_feasibility(&inst, &a, &s)?;
        if !report.is_feasible() {
            return Err(Error::Infeasible(format!(
                "record schedule violates constraints by {}",
                report.total
            )));
        }
        let actual = crate::model::makespan(&inst, &a, &s)?;
        if actual != self.makespan {
            return Err(Error::Infeasible(format!(
                "record makespan {} but schedule completes at {actual}",
                self.makespan
            )));
        }
        Ok(())
    }
}

/// Serializes records one JSON object per line.
pub fn write_dataset(records: &[DatasetRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_records(records, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_records(records: &[DatasetRecord], w: &mut impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads records; with `strict`, every record must pass [`DatasetRecord::verify`].
pub fn read_dataset(path: impl AsRef<Path>, strict: bool) -> Result<Vec<DatasetRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let dataset_err = |message: String| Error::Dataset {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let record: DatasetRecord = serde_json::from_str(&line).map_err(|e| dataset_err(e.to_string()))?;
        if strict {
            record.verify().map_err(|e| dataset_err(e.to_string()))?;
        }
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO_JOBS: &str = "2 2 2\n2 2 1 3 2 4 1 1 2\n1 2 1 5 2 5\n";

    #[test]
    fn minimal_file() {
        let inst = parse_fjs("1 1 1\n1 1 1 5\n").unwrap();
        assert_eq!(inst.num_jobs(), 1);
        assert_eq!(inst.num_machines(), 1);
        assert_eq!(inst.duration(0, 0), Some(5));
    }

    #[test]
    fn two_job_decode() {
        let inst = parse_fjs(TWO_JOBS).unwrap();
        let a = |machine, duration| Alternative { machine, duration };
        assert_eq!(inst.alternatives(inst.task_index(0, 0)), &[a(0, 3), a(1, 4)]);
        assert_eq!(inst.alternatives(inst.task_index(0, 1)), &[a(0, 2)]);
        assert_eq!(inst.alternatives(inst.task_index(1, 0)), &[a(0, 5), a(1, 5)]);
    }

    #[test]
    fn truncated_pairs_are_rejected() {
        let err = parse_fjs("1 2 1\n1 2 1 3\n").unwrap_err();
        match err {
            Error::Parse(p) => {
                assert_eq!(p.line, 2);
                assert_eq!(p.token, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_tokens_name_their_position() {
        let Error::Parse(p) = parse_fjs("1 1\n1 1 x 5\n").unwrap_err() else { panic!() };
        assert_eq!((p.line, p.token), (2, 3));
        let Error::Parse(p) = parse_fjs("1 1\n1 1 2 5\n").unwrap_err() else { panic!() };
        assert!(p.message.contains("outside"));
        assert!(parse_fjs("1 1\n1 1 1 5 9\n").is_err());
        assert!(parse_fjs("2 1\n1 1 1 5\n").is_err());
        assert!(matches!(parse_fjs("1 1\n1 1 1 0\n"), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn flexibility_header_is_optional() {
        assert_eq!(parse_fjs("1 1\n1 1 1 5\n").unwrap(), parse_fjs("1 1 1\n1 1 1 5\n").unwrap());
    }

    #[test]
    fn write_round_trips() {
        for text in ["1 1 1\n1 1 1 5\n", TWO_JOBS] {
            let inst = parse_fjs(text).unwrap();
            assert_eq!(parse_fjs(&write_fjs(&inst)).unwrap(), inst);
        }
    }

    #[test]
    fn header_flexibility_is_mean_set_size() {
        let inst = parse_fjs(TWO_JOBS).unwrap();
        assert!(write_fjs(&inst).starts_with("2 2 1.67\n"));
        let inst = parse_fjs("1 1 1\n1 1 1 5\n").unwrap();
        assert!(write_fjs(&inst).starts_with("1 1 1.00\n"));
    }

    fn sample_record() -> DatasetRecord {
        let inst = parse_fjs(TWO_JOBS).unwrap();
        let a = Assignment::new(vec![1, 0, 0]);
        let s = Schedule::new(&inst, &a, vec![0, 5, 0]).unwrap();
        DatasetRecord::from_solution(
            &inst,
            &a,
            &s,
            RecordMeta {
                impacted_machine: 1,
                factor: 1.2345678901234567,
                status: SolveStatus::Optimal,
                solve_seconds: None,
                instance_index: 3,
                kind: RecordKind::GroundTruth,
            },
        )
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        write_dataset(&[], &path).unwrap();
        assert!(read_dataset(&path, true).unwrap().is_empty());

        let rec = sample_record();
        rec.verify().unwrap();
        write_dataset(std::slice::from_ref(&rec), &path).unwrap();
        assert_eq!(read_dataset(&path, true).unwrap(), vec![rec]);
    }

    #[test]
    fn strict_mode_rejects_infeasible_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let mut rec = sample_record();
        rec.starts = vec![0, 1, 0];
        write_dataset(&[sample_record(), rec], &path).unwrap();
        assert_eq!(read_dataset(&path, false).unwrap().len(), 2);
        match read_dataset(&path, true) {
            Err(Error::Dataset { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(&path, "{\"tasks_per_job\": 3}\n").unwrap();
        assert!(matches!(read_dataset(&path, false), Err(Error::Dataset { line: 1, .. })));
    }

    proptest! {
        #[test]
        fn parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            let _ = parse_fjs_bytes(&bytes);
        }

        #[test]
        fn parser_never_panics_on_numeric_noise(
            tokens in proptest::collection::vec(0u32..6, 0..40),
            breaks in proptest::collection::vec(any::<bool>(), 0..40),
        ) {
            let mut text = String::new();
            for (i, t) in tokens.iter().enumerate() {
                text.push_str(&t.to_string());
                text.push(if breaks.get(i).copied().unwrap_or(false) { '\n' } else { ' ' });
            }
            if let Ok(inst) = parse_fjs(&text) {
                prop_assert_eq!(parse_fjs(&write_fjs(&inst)).unwrap(), inst);
            }
        }

        #[test]
        fn random_instances_round_trip(
            jobs in proptest::collection::vec(
                proptest::collection::vec(
                    proptest::collection::btree_map(0usize..4, 1i64..50, 1..4), 1..4), 1..4)
        ) {
            let jobs = jobs.into_iter().map(|tasks| tasks.into_iter().map(|alts| {
                alts.into_iter().map(|(machine, duration)| Alternative { machine, duration }).collect()
            }).collect()).collect();
            let inst = Instance::new(4, jobs).unwrap();
            prop_assert_eq!(parse_fjs(&write_fjs(&inst)).unwrap(), inst);
        }
    }
}
