//! The five subcommands.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use cofusion::datakit::{
    gen_splits_for_ids, load_cohort, read_clinical, save_cohort, synth_gen, Cohort, Grouping, SplitSet, SynthParams,
    DEFAULT_GRADE_NAMES,
};
use cofusion::genegraph::{read_edge_list, GeneGraph, HeaderMode};
use cofusion::netmodel::{load_checkpoint, save_checkpoint};
use cofusion::surveval::{evaluate, km_csv, km_curve, km_svg, risk_tertiles, EvalInput, MetricsReport, RiskGroup};
use cofusion::{Error, Result};

use crate::args::{EvalArgs, KmArgs, SplitsArgs, SynthArgs, TrainArgs};
use crate::config::{name_of, parse_name, ResolvedRun, RunConfig};
use crate::pipeline::{build_network, evaluate_rows, fit, holdout, network_config, prepare};

pub const EDGE_FILE: &str = "edges.tsv";
pub const TRUE_RISK_FILE: &str = "true_risk.csv";
pub const RUN_CONFIG_FILE: &str = "run_config.json";
pub const SUMMARY_FILE: &str = "train_summary.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const STANDARDIZER_FILE: &str = "standardizer.json";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const BEST_DIR: &str = "best";

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn bad(path: &Path, detail: impl std::fmt::Display) -> Error {
    Error::Data { source_name: path.display().to_string(), detail: detail.to_string() }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn require_out(out: Option<&Path>, command: &str) -> Result<PathBuf> {
    out.map(Path::to_path_buf).ok_or_else(|| Error::Usage(format!("{command} needs --out")))
}

fn default_grade_names() -> Vec<String> {
    DEFAULT_GRADE_NAMES.iter().map(|s| s.to_string()).collect()
}

pub fn synth(a: &SynthArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let out = require_out(out, "synth")?;
    let mut params = SynthParams::new(a.patients, a.genes, a.causal, a.censor, a.noise, seed);
    params.samples_per_patient = a.samples_per_patient;
    params.image_dim = a.image_dim;
    let s = synth_gen(&params)?;
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    save_cohort(&s.cohort, &out)?;
    write_text(&out.join(EDGE_FILE), &s.graph.to_edge_list())?;
    if a.write_risk {
        let mut text = String::from("sample_id,risk\n");
        for (sample, r) in s.cohort.samples().iter().zip(&s.true_risk) {
            text.push_str(&format!("{},{}\n", sample.sample_id, r));
        }
        write_text(&out.join(TRUE_RISK_FILE), &text)?;
    }
    info!(
        "wrote {} samples, {} genes, {} interactions to {}",
        s.cohort.len(),
        s.cohort.genes().len(),
        s.graph.edge_count(),
        out.display()
    );
    Ok(())
}

pub fn splits(a: &SplitsArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let out = require_out(out, "splits")?;
    let grouping: Grouping = a.group.parse()?;
    let records = read_clinical(&a.clinical, &default_grade_names())?;
    let sample_ids: Vec<String> = records.iter().map(|r| r.sample_id.clone()).collect();
    let patient_ids: Vec<String> = records.iter().map(|r| r.patient_id.clone()).collect();
    let set = gen_splits_for_ids(&sample_ids, &patient_ids, a.reps, a.train_frac, grouping, seed)?;
    write_text(&out, &set.to_json()?)?;
    info!("wrote {} repetitions to {}", set.repetitions.len(), out.display());
    Ok(())
}

fn read_splits(path: &Path) -> Result<SplitSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SplitSet::from_json(&text)
}

/// Everything a run reads from disk.
struct Inputs {
    cohort: Cohort,
    graph: Option<GeneGraph>,
    splits: SplitSet,
}

fn load_inputs(run: &ResolvedRun) -> Result<Inputs> {
    let (cohort, report) =
        load_cohort(run.expression.as_deref(), run.embeddings.as_deref(), &run.clinical, &run.grade_names)?;
    for (id, reason) in &report.rejected {
        warn!("dropped sample {id}: {reason}");
    }
    let graph = match &run.edge_list {
        Some(p) => Some(read_edge_list(p, HeaderMode::Auto)?),
        None => None,
    };
    Ok(Inputs { cohort, graph, splits: read_splits(&run.splits)? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub variant: String,
    pub schedule: String,
    pub preset: String,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub dropout: f64,
    pub seed: u64,
    pub rep: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    /// Split samples lacking a modality the variant needs.
    pub n_dropped: usize,
    pub survival_iterations: usize,
    pub grade_iterations: usize,
    pub skipped_iterations: usize,
    pub parameter_count: usize,
    pub best_epoch: Option<usize>,
    pub test: MetricsReport,
}

fn train_one(run: &ResolvedRun, inputs: &Inputs) -> Result<MetricsReport> {
    let rep = inputs.splits.repetition(run.rep)?;
    let profile = &run.profile;
    let prepared = prepare(&inputs.cohort, inputs.graph.as_ref(), run.variant, rep)?;
    if !prepared.dropped.is_empty() {
        warn!("{} split samples lack a modality of {}", prepared.dropped.len(), name_of(run.variant));
    }
    let config = network_config(&prepared, run.variant, profile.schedule, profile);
    let network = build_network(&prepared, config, profile.seed)?;
    let (fit_idx, val_idx) = holdout(&prepared, run.validation_frac, profile.seed)?;
    info!(
        "rep {}: training {} on {} samples ({} validation, {} test), {} parameters",
        run.rep,
        name_of(run.variant),
        fit_idx.len(),
        val_idx.len(),
        prepared.test_idx.len(),
        network.parameter_count()
    );
    let parameter_count = network.parameter_count();
    let outcome = fit(&prepared, network, profile, run.validation_frac)?;
    let test = evaluate_rows(&outcome.network, &prepared, &prepared.test_idx, run.ties, run.aggregation)?;

    let out = &run.out;
    write_text(&out.join(RUN_CONFIG_FILE), &to_json(&run.to_config())?)?;
    save_checkpoint(&outcome.network, profile.seed, &out.join(CHECKPOINT_DIR))?;
    if let Some((_, best)) = &outcome.best {
        save_checkpoint(best, profile.seed, &out.join(BEST_DIR))?;
    }
    write_text(&out.join(HISTORY_FILE), &outcome.history.to_csv())?;
    if let Some(st) = &prepared.standardizer {
        write_text(&out.join(STANDARDIZER_FILE), &to_json(st)?)?;
    }
    write_text(&out.join(METRICS_FILE), &to_json(&test)?)?;
    let (survival_iterations, grade_iterations) = outcome.history.task_counts();
    let summary = TrainSummary {
        variant: name_of(run.variant),
        schedule: profile.schedule.name().to_string(),
        preset: run.preset.clone(),
        epochs: profile.epochs,
        lr: profile.base_lr,
        weight_decay: profile.weight_decay,
        batch_size: profile.batch_size,
        dropout: profile.dropout_p,
        seed: profile.seed,
        rep: run.rep,
        n_train: fit_idx.len(),
        n_validation: val_idx.len(),
        n_test: prepared.test_idx.len(),
        n_dropped: prepared.dropped.len(),
        survival_iterations,
        grade_iterations,
        skipped_iterations: outcome.history.skipped(),
        parameter_count,
        best_epoch: outcome.best.as_ref().map(|(e, _)| *e),
        test: test.clone(),
    };
    write_text(&out.join(SUMMARY_FILE), &to_json(&summary)?)?;
    Ok(test)
}

/// Mean and population standard deviation over the repetitions that
/// produced the metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(MeanStd { mean, std: var.sqrt(), n: values.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub repetitions: usize,
    pub c_index: Option<MeanStd>,
    pub micro_auc: Option<MeanStd>,
    pub micro_ap: Option<MeanStd>,
    pub micro_f1: Option<MeanStd>,
    pub accuracy: Option<MeanStd>,
}

impl Aggregate {
    pub fn of(reports: &[MetricsReport]) -> Self {
        let pick =
            |f: fn(&MetricsReport) -> Option<f64>| MeanStd::of(&reports.iter().filter_map(f).collect::<Vec<_>>());
        Aggregate {
            repetitions: reports.len(),
            c_index: pick(|r| r.c_index),
            micro_auc: pick(|r| r.micro_auc),
            micro_ap: pick(|r| r.micro_ap),
            micro_f1: pick(|r| r.micro_f1),
            accuracy: pick(|r| r.accuracy),
        }
    }
}

pub fn train(a: &TrainArgs, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let base = match &a.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    let mut run = base.overridden(a, seed, out).resolve()?;
    fs::create_dir_all(&run.out).map_err(|e| Error::io(&run.out, e))?;
    run.out = fs::canonicalize(&run.out).map_err(|e| Error::io(&run.out, e))?;
    let inputs = load_inputs(&run)?;
    if !a.all_reps {
        inputs.splits.repetition(run.rep)?;
        let test = train_one(&run, &inputs)?;
        info!("test metrics: {}", serde_json::to_string(&test)?);
        return Ok(());
    }
    let mut reports = Vec::new();
    for rep in 0..inputs.splits.repetitions.len() {
        let mut one = run.clone();
        one.rep = rep;
        one.out = run.out.join(format!("rep_{rep:02}"));
        reports.push(train_one(&one, &inputs)?);
    }
    write_text(&run.out.join(AGGREGATE_FILE), &to_json(&Aggregate::of(&reports))?)?;
    Ok(())
}

/// Which part of the metric suite `eval` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSet {
    All,
    Survival,
    Grade,
}

impl std::str::FromStr for MetricSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(MetricSet::All),
            "survival" => Ok(MetricSet::Survival),
            "grade" => Ok(MetricSet::Grade),
            other => Err(Error::Config(format!("unknown metric set '{other}' (all, survival, grade)"))),
        }
    }
}

fn restrict(mut report: MetricsReport, metrics: MetricSet) -> MetricsReport {
    match metrics {
        MetricSet::All => {}
        MetricSet::Survival => {
            report.micro_auc = None;
            report.micro_ap = None;
            report.micro_f1 = None;
            report.accuracy = None;
            report.f1_per_class = None;
            report.confusion_matrix = None;
        }
        MetricSet::Grade => report.c_index = None,
    }
    report
}

/// Reads a `sample_id,risk` table.
pub fn read_risks(path: &Path) -> Result<HashMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(path, e))?;
    let headers = reader.headers().map_err(|e| bad(path, e))?.clone();
    if headers.len() != 2 || &headers[0] != "sample_id" || &headers[1] != "risk" {
        return Err(bad(path, "expected header sample_id,risk"));
    }
    let mut out = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| bad(path, format!("line {line}: {e}")))?;
        let risk: f64 = row[1].trim().parse().map_err(|_| bad(path, format!("line {line}: bad risk '{}'", &row[1])))?;
        if !risk.is_finite() {
            return Err(bad(path, format!("line {line}: non-finite risk")));
        }
        if out.insert(row[0].trim().to_string(), risk).is_some() {
            return Err(bad(path, format!("line {line}: duplicate sample '{}'", &row[0])));
        }
    }
    Ok(out)
}

fn eval_risks(a: &EvalArgs, risks_path: &Path, metrics: MetricSet) -> Result<MetricsReport> {
    if metrics == MetricSet::Grade {
        return Err(Error::Config("a risk file carries no grade probabilities".into()));
    }
    let clinical = a.clinical.as_deref().ok_or_else(|| Error::Usage("--risks needs --clinical".into()))?;
    let names = default_grade_names();
    let records = read_clinical(clinical, &names)?;
    let risks = read_risks(risks_path)?;
    let chosen: Vec<_> = match &a.split {
        Some(split) => {
            let set = read_splits(split)?;
            let by_id: HashMap<&str, usize> =
                records.iter().enumerate().map(|(i, r)| (r.sample_id.as_str(), i)).collect();
            set.repetition(a.rep.unwrap_or(0))?
                .test
                .iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|&i| &records[i])
                        .ok_or_else(|| bad(clinical, format!("split sample '{id}' not in clinical table")))
                })
                .collect::<Result<_>>()?
        }
        None => records.iter().collect(),
    };
    let mut r = Vec::with_capacity(chosen.len());
    for rec in &chosen {
        let v = risks
            .get(&rec.sample_id)
            .ok_or_else(|| bad(risks_path, format!("no risk for sample '{}'", rec.sample_id)))?;
        r.push(*v);
    }
    let patients: Vec<String> = chosen.iter().map(|c| c.patient_id.clone()).collect();
    let times: Vec<f64> = chosen.iter().map(|c| c.time).collect();
    let events: Vec<bool> = chosen.iter().map(|c| c.event).collect();
    let grades: Vec<usize> = chosen.iter().map(|c| c.grade).collect();
    let input = EvalInput {
        patient_ids: &patients,
        times: &times,
        events: &events,
        grades: &grades,
        risks: Some(&r),
        log_probs: None,
    };
    let aggregation = parse_name("aggregation", a.aggregation.as_deref().unwrap_or("sample"))?;
    let ties = parse_name("tie rule", a.ties.as_deref().unwrap_or("half"))?;
    evaluate(&input, names.len(), ties, aggregation)
}

fn eval_model(a: &EvalArgs, model: &Path, metrics: MetricSet) -> Result<MetricsReport> {
    let mut cfg = RunConfig::read(&model.join(RUN_CONFIG_FILE))?;
    if let Some(c) = &a.clinical {
        cfg.clinical = Some(c.clone());
    }
    if let Some(s) = &a.split {
        cfg.splits = Some(s.clone());
    }
    if let Some(r) = a.rep {
        cfg.rep = Some(r);
    }
    if a.aggregation.is_some() {
        cfg.aggregation = a.aggregation.clone();
    }
    if a.ties.is_some() {
        cfg.ties = a.ties.clone();
    }
    let run = cfg.resolve()?;
    let (network, _) = load_checkpoint(&model.join(CHECKPOINT_DIR))?;
    let heads = network.config().heads;
    if metrics == MetricSet::Survival && !heads.survival() {
        return Err(Error::Config("survival metrics requested from a model without a survival head".into()));
    }
    if metrics == MetricSet::Grade && !heads.grade() {
        return Err(Error::Config("grade metrics requested from a model without a grade head".into()));
    }
    if network.config().variant != run.variant {
        return Err(Error::Config("checkpoint variant differs from its run configuration".into()));
    }
    let inputs = load_inputs(&run)?;
    let prepared = prepare(&inputs.cohort, inputs.graph.as_ref(), run.variant, inputs.splits.repetition(run.rep)?)?;
    if prepared.mask.as_ref() != network.mask() {
        return Err(bad(model, "gene graph does not reproduce the checkpoint's mask"));
    }
    let st_path = model.join(STANDARDIZER_FILE);
    if let Some(st) = &prepared.standardizer {
        if st_path.exists() {
            let text = fs::read_to_string(&st_path).map_err(|e| Error::io(&st_path, e))?;
            if serde_json::from_str::<cofusion::datakit::Standardizer>(&text)? != *st {
                return Err(bad(&st_path, "training split does not reproduce the saved standardization"));
            }
        }
    }
    evaluate_rows(&network, &prepared, &prepared.test_idx, run.ties, run.aggregation)
}

pub fn eval(a: &EvalArgs, out: Option<&Path>) -> Result<()> {
    let metrics: MetricSet = a.metrics.parse()?;
    let report = match (&a.model, &a.risks) {
        (Some(model), _) => eval_model(a, model, metrics)?,
        (None, Some(risks)) => eval_risks(a, risks, metrics)?,
        (None, None) => return Err(Error::Usage("eval needs --model or --risks".into())),
    };
    let text = to_json(&restrict(report, metrics))?;
    match out {
        Some(path) => write_text(path, &text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::io(Path::new("<stdout>"), e)),
    }
}

pub fn km(a: &KmArgs, out: Option<&Path>) -> Result<()> {
    let out = require_out(out, "km")?;
    let records = read_clinical(&a.clinical, &default_grade_names())?;
    let risks = read_risks(&a.risks)?;
    let missing: Vec<&str> =
        records.iter().filter(|r| !risks.contains_key(&r.sample_id)).map(|r| r.sample_id.as_str()).collect();
    if !missing.is_empty() {
        return Err(bad(&a.risks, format!("{} clinical samples have no risk (first: {})", missing.len(), missing[0])));
    }
    let r: Vec<f64> = records.iter().map(|rec| risks[&rec.sample_id]).collect();
    let groups = risk_tertiles(&r)?;
    let mut curves = Vec::with_capacity(3);
    for g in RiskGroup::ALL {
        let members = groups.members(g);
        let times: Vec<f64> = members.iter().map(|&i| records[i].time).collect();
        let events: Vec<bool> = members.iter().map(|&i| records[i].event).collect();
        curves.push((g.name().to_string(), members.len(), km_curve(&times, &events)?));
    }
    write_text(&out, &km_csv(&curves))?;
    if let Some(svg) = &a.svg {
        write_text(svg, &km_svg(&curves)?)?;
    }
    Ok(())
}
