use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use ecgweak::classifier::{
    active_learning_run, build_training_set, train, BeatVector, EndModel, Supervision,
};
use ecgweak::eval::{metrics_csv, MetricsReport};
use ecgweak::ingest::{
    read_csv_record, read_wfdb_record, BeatClass, BeatCodeMap, EcgRecord, SplitLists,
};
use ecgweak::labelmodel::{fit_pooled, majority_vote, posterior, prob_labels_csv, ProbLabel};
use ecgweak::lfs::{to_csv, LfMatrix};
use ecgweak::pipeline::{label_records, process_record, record_beat_vectors, ProcessedRecord};
use ecgweak::synth::{generate_corpus, write_corpus};
use ecgweak::{par, Error, Execution};

use crate::args::*;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed {}", path.display()))
}

/// Directory entries with the given suffix, sorted by name.
fn files_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.is_file() && path.to_string_lossy().ends_with(suffix) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn split_lists(arg: &SplitArg) -> Result<SplitLists> {
    Ok(match &arg.split {
        Some(path) => SplitLists::load(path)?,
        None => SplitLists::default(),
    })
}

pub fn synth(args: &SynthArgs, exec: Execution) -> Result<()> {
    let corpus = args.corpus();
    let records = generate_corpus(&corpus, exec)?;
    create_dir(&args.out)?;
    let paths = write_corpus(&args.out, &records, &BeatCodeMap::default())?;
    write(&args.out.join("split.txt"), corpus.split_lists().to_text())?;
    write_json(&args.out.join("synth_config.json"), &corpus)?;
    log::info!("wrote {} records to {}", paths.len(), args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct Skipped {
    record: String,
    error: String,
    message: String,
}

#[derive(Serialize)]
struct PreprocessReport {
    processed: Vec<(String, usize)>,
    skipped: Vec<Skipped>,
}

fn skipped(record: String, err: &anyhow::Error) -> Skipped {
    Skipped {
        record,
        error: crate::error_kind(err).to_string(),
        message: format!("{err:#}"),
    }
}

pub fn preprocess(args: &PreprocessArgs, exec: Execution) -> Result<()> {
    if !args.data.is_dir() {
        return Err(Error::Io {
            path: args.data.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "data directory not found"),
        }
        .into());
    }
    let codes = BeatCodeMap::default();
    let mut inputs: Vec<(String, PathBuf, bool)> = Vec::new();
    if matches!(args.format, InputFormat::Csv | InputFormat::Auto) {
        for p in files_with_suffix(&args.data, ".csv")? {
            if !p.to_string_lossy().ends_with(".ann.csv") {
                inputs.push((stem(&p), p, false));
            }
        }
    }
    if matches!(args.format, InputFormat::Wfdb | InputFormat::Auto) {
        for p in files_with_suffix(&args.data, ".hea")? {
            inputs.push((stem(&p), p, true));
        }
    }
    inputs.sort();
    if inputs.is_empty() {
        bail!(Error::InvalidArgument(format!(
            "no records found in {}",
            args.data.display()
        )));
    }

    let config = args.config();
    let results = par::map(
        exec,
        &inputs,
        |(_, path, wfdb)| -> Result<ProcessedRecord> {
            let record: EcgRecord = if *wfdb {
                read_wfdb_record(path, args.channel, &args.annotator, &codes)?
            } else {
                read_csv_record(path, &codes)?
            };
            Ok(process_record(&record, &config)?)
        },
    );

    let records_dir = args.out.join("records");
    let filtered_dir = args.out.join("filtered");
    create_dir(&records_dir)?;
    create_dir(&filtered_dir)?;
    let mut report = PreprocessReport {
        processed: Vec::new(),
        skipped: Vec::new(),
    };
    for ((name, _, _), result) in inputs.iter().zip(results) {
        match result {
            Ok(mut rec) => {
                let mut text = String::with_capacity(rec.filtered.len() * 10);
                for v in &rec.filtered {
                    let _ = writeln!(text, "{v}");
                }
                write(&filtered_dir.join(format!("{name}.csv")), text)?;
                // segments are slices of the filtered signal; restored on load
                rec.filtered.clear();
                rec.beats
                    .iter_mut()
                    .for_each(|b| b.segment.waveform.clear());
                let json = serde_json::to_string(&rec)? + "\n";
                write(&records_dir.join(format!("{name}.json")), json)?;
                report.processed.push((name.clone(), rec.beats.len()));
            }
            Err(e) => {
                log::warn!("skipping {name}: {e:#}");
                report.skipped.push(skipped(name.clone(), &e));
            }
        }
    }
    write_json(&args.out.join("preprocess_report.json"), &report)?;
    write_json(&args.out.join("preprocess_config.json"), &config)?;
    if report.processed.is_empty() {
        bail!(Error::InvalidArgument(
            "every record failed preprocessing".into()
        ));
    }
    Ok(())
}

fn load_processed(dir: &Path) -> Result<Vec<ProcessedRecord>> {
    let paths = files_with_suffix(&dir.join("records"), ".json")?;
    if paths.is_empty() {
        bail!(Error::InvalidArgument(format!(
            "no processed records in {}",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| {
            let mut rec: ProcessedRecord = read_json(p)?;
            let signal = dir
                .join("filtered")
                .join(format!("{}.csv", rec.record_name));
            let text = fs::read_to_string(&signal)
                .with_context(|| format!("cannot read {}", signal.display()))?;
            rec.filtered = text
                .lines()
                .map(|l| l.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("malformed {}", signal.display()))?;
            for b in &mut rec.beats {
                let seg = &mut b.segment;
                let Some(w) = rec.filtered.get(seg.start..seg.end) else {
                    bail!(Error::InvalidArgument(format!(
                        "{}: segment outside the filtered signal",
                        rec.record_name
                    )));
                };
                seg.waveform = w.to_vec();
            }
            Ok(rec)
        })
        .collect()
}

/// Processed records split into DS1 and DS2, each in list order.
fn split_processed(
    records: Vec<ProcessedRecord>,
    split: &SplitArg,
) -> Result<(Vec<ProcessedRecord>, Vec<ProcessedRecord>)> {
    let names: Vec<String> = records.iter().map(|r| r.record_name.clone()).collect();
    let split = split_lists(split)?.split(&names)?;
    let mut by_name: HashMap<String, ProcessedRecord> = records
        .into_iter()
        .map(|r| (r.record_name.clone(), r))
        .collect();
    let mut take = |list: &[String]| -> Vec<ProcessedRecord> {
        list.iter().filter_map(|n| by_name.remove(n)).collect()
    };
    Ok((take(&split.ds1_records), take(&split.ds2_records)))
}

fn prob_labels(matrix: &LfMatrix, p: &[f64]) -> Vec<ProbLabel> {
    matrix
        .beats
        .iter()
        .zip(p)
        .map(|(&beat, &p_pos)| ProbLabel {
            patient: matrix.patient.clone(),
            beat,
            p_pos,
        })
        .collect()
}

pub fn label(args: &LabelArgs, exec: Execution) -> Result<()> {
    let records = load_processed(&args.processed)?;
    let names: Vec<String> = records.iter().map(|r| r.record_name.clone()).collect();
    let split = split_lists(&args.split)?.split(&names)?;
    let lf_config = args.lf_config();
    let labeled = label_records(&records, &lf_config, exec)?;
    let ds1: Vec<&LfMatrix> = labeled
        .iter()
        .filter(|(_, m)| split.ds1_records.contains(&m.patient))
        .map(|(_, m)| m)
        .collect();
    let params = fit_pooled(&ds1, &args.fit_config(exec))?;

    let matrices: Vec<&LfMatrix> = labeled.iter().map(|(_, m)| m).collect();
    let lm: Vec<Vec<ProbLabel>> = matrices
        .iter()
        .map(|m| prob_labels(m, &posterior(&params, m.view())))
        .collect();
    let mv: Vec<Vec<ProbLabel>> = matrices
        .iter()
        .map(|m| {
            let p: Vec<f64> = m.view().rows().map(majority_vote).collect();
            prob_labels(m, &p)
        })
        .collect();

    create_dir(&args.out)?;
    if args.per_patient {
        for sub in ["lf_matrix", "prob_labels", "majority_vote"] {
            create_dir(&args.out.join(sub))?;
        }
        for ((m, lm), mv) in matrices.iter().zip(&lm).zip(&mv) {
            let file = format!("{}.csv", m.patient);
            write(&args.out.join("lf_matrix").join(&file), to_csv(&[m]))?;
            write(
                &args.out.join("prob_labels").join(&file),
                prob_labels_csv(lm),
            )?;
            write(
                &args.out.join("majority_vote").join(&file),
                prob_labels_csv(mv),
            )?;
        }
    } else {
        write(&args.out.join("lf_matrix.csv"), to_csv(&matrices))?;
        write(
            &args.out.join("prob_labels.csv"),
            prob_labels_csv(&lm.concat()),
        )?;
        write(
            &args.out.join("majority_vote.csv"),
            prob_labels_csv(&mv.concat()),
        )?;
    }
    let thresholds: Vec<_> = labeled.iter().map(|(t, _)| t).collect();
    write_json(&args.out.join("thresholds.json"), &thresholds)?;
    write_json(&args.out.join("label_model.json"), &params)?;
    write_json(
        &args.out.join("label_config.json"),
        &(lf_config, args.fit_config(exec)),
    )?;
    Ok(())
}

type LabelTable = HashMap<(String, usize), f64>;

fn parse_prob_labels(text: &str, source: &Path, table: &mut LabelTable) -> Result<()> {
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse {
            location: format!("{} line {}", source.display(), i + 1),
            message: "expected patient,beat,p_pos".into(),
        };
        let mut f = line.split(',');
        let (Some(patient), Some(beat), Some(p), None) = (f.next(), f.next(), f.next(), f.next())
        else {
            bail!(bad());
        };
        let beat: usize = beat.parse().map_err(|_| bad())?;
        let p: f64 = p.parse().map_err(|_| bad())?;
        table.insert((patient.to_string(), beat), p);
    }
    Ok(())
}

/// Reads pooled or per-patient `<kind>` label files from a `label` output
/// directory.
fn load_labels(dir: &Path, kind: &str) -> Result<LabelTable> {
    let mut table = LabelTable::new();
    let pooled = dir.join(format!("{kind}.csv"));
    let paths = if pooled.is_file() {
        vec![pooled]
    } else {
        files_with_suffix(&dir.join(kind), ".csv")?
    };
    for p in paths {
        let text =
            fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
        parse_prob_labels(&text, &p, &mut table)?;
    }
    Ok(table)
}

fn lookup(table: &LabelTable, records: &[ProcessedRecord]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for rec in records {
        for beat in 0..rec.beats.len() {
            let p = table.get(&(rec.record_name.clone(), beat)).ok_or_else(|| {
                Error::InvalidArgument(format!("no label for {} beat {beat}", rec.record_name))
            })?;
            out.push(*p);
        }
    }
    Ok(out)
}

fn beat_vectors(records: &[ProcessedRecord], len: usize) -> Result<Vec<BeatVector>> {
    let mut out = Vec::new();
    for rec in records {
        out.extend(record_beat_vectors(rec, len)?);
    }
    Ok(out)
}

fn truth(records: &[ProcessedRecord]) -> Result<Vec<Option<BeatClass>>> {
    let t: Vec<Option<BeatClass>> = records
        .iter()
        .flat_map(|r| r.beats.iter().map(|b| b.truth))
        .collect();
    if let Some(r) = records
        .iter()
        .find(|r| r.beats.iter().any(|b| b.truth.is_none()))
    {
        bail!(Error::MissingGroundTruth(format!(
            "record {} has no annotations",
            r.record_name
        )));
    }
    Ok(t)
}

fn is_pvc(t: &[Option<BeatClass>]) -> Vec<bool> {
    t.iter().map(|t| *t == Some(BeatClass::Pvc)).collect()
}

pub fn train_model(args: &TrainArgs, exec: Execution) -> Result<()> {
    let (ds1, _) = split_processed(load_processed(&args.processed)?, &args.split)?;
    let xs = beat_vectors(&ds1, args.model.beat_len)?;
    let set = match args.mode {
        Mode::Weak => {
            let dir = args
                .labels
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("weak mode needs --labels".into()))?;
            let p = lookup(&load_labels(dir, "prob_labels")?, &ds1)?;
            build_training_set(&xs, Supervision::Weak(&p))?
        }
        Mode::Full => build_training_set(&xs, Supervision::Full(&truth(&ds1)?))?,
    };
    let config = args.model.train_config(!args.no_oversample, exec);
    let (model, report) = train(&set, &config)?;
    let name = match args.mode {
        Mode::Weak => "weak",
        Mode::Full => "full",
    };
    create_dir(&args.out)?;
    write_json(&args.out.join(format!("{name}.json")), &model)?;
    write_json(&args.out.join(format!("{name}_report.json")), &report)?;
    write_json(
        &args.out.join(format!("{name}_config.json")),
        &(args.mode, &config),
    )?;
    log::info!(
        "trained on {} DS1 beats, kept epoch {}",
        set.len(),
        report.selected_epoch
    );
    Ok(())
}

struct Holdout {
    x: Vec<BeatVector>,
    truth: Vec<bool>,
    patients: Vec<String>,
    records: Vec<ProcessedRecord>,
}

fn holdout(records: Vec<ProcessedRecord>, beat_len: usize) -> Result<Holdout> {
    Ok(Holdout {
        x: beat_vectors(&records, beat_len)?,
        truth: is_pvc(&truth(&records)?),
        patients: records
            .iter()
            .flat_map(|r| r.beats.iter().map(|_| r.record_name.clone()))
            .collect(),
        records,
    })
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    if args.models.is_empty() && args.labels.is_none() {
        bail!(Error::InvalidArgument(
            "nothing to evaluate: pass --model or --labels".into()
        ));
    }
    let (_, ds2) = split_processed(load_processed(&args.processed)?, &args.split)?;
    let test = holdout(ds2, args.beat_len)?;
    let mut reports = Vec::new();
    for path in &args.models {
        let model: EndModel = read_json(path)?;
        let p = model.predict_proba(&test.x);
        reports.push(MetricsReport::compute(
            &stem(path),
            &p,
            &test.truth,
            &test.patients,
        )?);
    }
    if let Some(dir) = &args.labels {
        for (name, kind) in [
            ("problabels", "prob_labels"),
            ("majority_vote", "majority_vote"),
        ] {
            let p = lookup(&load_labels(dir, kind)?, &test.records)?;
            reports.push(MetricsReport::compute(
                name,
                &p,
                &test.truth,
                &test.patients,
            )?);
        }
    }
    create_dir(&args.out)?;
    write_json(&args.out.join("metrics.json"), &reports)?;
    write(&args.out.join("metrics.csv"), metrics_csv(&reports))?;
    Ok(())
}

type CurveRow = [Option<f64>; 4];

fn curve_csv(rows: &[(usize, CurveRow)]) -> String {
    let mut out = String::from("labeled_count,tpr,tnr,ppv,acc\n");
    for (n, row) in rows {
        let _ = write!(out, "{n}");
        for v in row {
            match v {
                Some(v) => {
                    let _ = write!(out, ",{v:.6}");
                }
                None => out.push_str(",undefined"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn active(args: &ActiveArgs, exec: Execution) -> Result<()> {
    if args.seeds == 0 {
        bail!(Error::InvalidArgument("--seeds must be at least 1".into()));
    }
    let (ds1, ds2) = split_processed(load_processed(&args.processed)?, &args.split)?;
    let pool = beat_vectors(&ds1, args.model.beat_len)?;
    let pool_truth = is_pvc(&truth(&ds1)?);
    let test = holdout(ds2, args.model.beat_len)?;

    let runs: Vec<Result<Vec<(usize, CurveRow)>>> =
        par::map_range(exec, args.seeds as usize, |r| {
            let checkpoints =
                active_learning_run(&pool, &pool_truth, &args.config(r as u64, exec))?;
            checkpoints
                .iter()
                .map(|c| {
                    let p = c.model.predict_proba(&test.x);
                    let m = MetricsReport::compute("active", &p, &test.truth, &test.patients)?;
                    Ok((c.labeled_count, [m.tpr, m.tnr, m.ppv, m.acc]))
                })
                .collect()
        });
    let runs: Vec<Vec<(usize, CurveRow)>> = runs.into_iter().collect::<Result<_>>()?;

    let curves = args.out.join("curves");
    create_dir(&curves)?;
    for (r, rows) in runs.iter().enumerate() {
        write(&curves.join(format!("seed_{r}.csv")), curve_csv(rows))?;
    }
    let mean: Vec<(usize, CurveRow)> = (0..runs[0].len())
        .map(|i| {
            let mut row = [Some(0.0); 4];
            for (k, cell) in row.iter_mut().enumerate() {
                let vals: Option<Vec<f64>> = runs.iter().map(|run| run[i].1[k]).collect();
                *cell = vals.map(|v| v.iter().sum::<f64>() / v.len() as f64);
            }
            (runs[0][i].0, row)
        })
        .collect();
    write(&args.out.join("curve_mean.csv"), curve_csv(&mean))?;
    write_json(&args.out.join("active_config.json"), &args.config(0, exec))?;
    Ok(())
}
