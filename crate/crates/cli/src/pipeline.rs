//! In-process train-and-evaluate pipeline shared by the commands.

use cofusion::datakit::{Cohort, Repetition, Standardizer};
use cofusion::genegraph::{build_adjacency, intersect_features, AdjacencyMask, GeneGraph};
use cofusion::netmodel::{Heads, Network, NetworkConfig, Variant};
use cofusion::numcore::RngStream;
use cofusion::surveval::{evaluate, Aggregation, EvalInput, MetricsReport, TieRule};
use cofusion::training::{train, Schedule, TrainOutcome, TrainingProfile};
use cofusion::{Error, Result};

/// Stream ids for weight initialization and the validation holdout; training
/// uses its own streams.
const INIT_STREAM: u64 = 7;
const HOLDOUT_STREAM: u64 = 8;

/// Cohort restricted to one variant's modalities and graph genes, with the
/// expression standardized on the training side.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub cohort: Cohort,
    pub mask: Option<AdjacencyMask>,
    pub standardizer: Option<Standardizer>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    /// Sample ids of the split that this variant could not use.
    pub dropped: Vec<String>,
}

pub fn heads_for(schedule: Schedule) -> Heads {
    schedule.required_heads()
}

/// Prepares the data for `variant` on one split repetition.
pub fn prepare(cohort: &Cohort, graph: Option<&GeneGraph>, variant: Variant, rep: &Repetition) -> Result<Prepared> {
    let (mut cohort, dropped) = cohort.for_variant(variant);
    let mut mask = None;
    if variant.uses_genes() {
        let graph = graph.ok_or_else(|| Error::Config("gene variants need an edge list".into()))?;
        let genes = intersect_features(graph, cohort.genes())?;
        cohort = cohort.select_genes(&genes)?;
        mask = Some(build_adjacency(&genes, graph));
    }
    let usable = |ids: &[String]| -> Vec<String> { ids.iter().filter(|id| !dropped.contains(id)).cloned().collect() };
    let train_idx = cohort.indices_of(&usable(&rep.train))?;
    let test_idx = cohort.indices_of(&usable(&rep.test))?;
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::Config("split leaves no usable samples on one side".into()));
    }
    let mut standardizer = None;
    if variant.uses_genes() {
        let st = Standardizer::fit(&cohort, &train_idx)?;
        cohort = st.apply(&cohort)?;
        standardizer = Some(st);
    }
    Ok(Prepared { cohort, mask, standardizer, train_idx, test_idx, dropped })
}

pub fn network_config(
    prepared: &Prepared,
    variant: Variant,
    schedule: Schedule,
    profile: &TrainingProfile,
) -> NetworkConfig {
    let cohort = &prepared.cohort;
    let mut cfg = NetworkConfig::new(variant, heads_for(schedule), cohort.genes().len(), cohort.grade_names().len())
        .with_image_dim(cohort.image_dim());
    cfg.dropout_p = profile.dropout_p;
    cfg
}

pub fn build_network(prepared: &Prepared, config: NetworkConfig, seed: u64) -> Result<Network> {
    let mut rng = RngStream::new(seed, INIT_STREAM);
    Network::assemble(config, prepared.mask.clone(), &mut rng)
}

/// Splits the training rows into fitting and validation rows, holding out
/// `round(frac × patients)` whole patients. `frac = 0` holds out nothing.
pub fn holdout(prepared: &Prepared, frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if frac == 0.0 {
        return Ok((prepared.train_idx.clone(), Vec::new()));
    }
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::Config(format!("validation fraction {frac} outside [0, 1)")));
    }
    let samples = prepared.cohort.samples();
    let mut patients: Vec<&str> = prepared.train_idx.iter().map(|&i| samples[i].patient_id.as_str()).collect();
    patients.sort_unstable();
    patients.dedup();
    let k = (frac * patients.len() as f64).round() as usize;
    if k == 0 || k == patients.len() {
        return Err(Error::Config(format!(
            "validation fraction {frac} over {} training patients leaves one side empty",
            patients.len()
        )));
    }
    RngStream::new(seed, HOLDOUT_STREAM).shuffle(&mut patients);
    let held: std::collections::BTreeSet<&str> = patients[..k].iter().copied().collect();
    Ok(prepared.train_idx.iter().partition(|&&i| !held.contains(samples[i].patient_id.as_str())))
}

/// Trains on the prepared training rows, keeping a best-by-validation copy
/// when `validation_frac > 0`.
pub fn fit(
    prepared: &Prepared,
    network: Network,
    profile: &TrainingProfile,
    validation_frac: f64,
) -> Result<TrainOutcome> {
    let set = prepared.cohort.training_set(network.config().variant)?;
    let (fit_idx, val_idx) = holdout(prepared, validation_frac, profile.seed)?;
    let validation = (!val_idx.is_empty()).then_some(val_idx.as_slice());
    train(network, &set, &fit_idx, validation, profile)
}

/// Metrics of `network` on the rows `idx` of the prepared cohort.
pub fn evaluate_rows(
    network: &Network,
    prepared: &Prepared,
    idx: &[usize],
    ties: TieRule,
    aggregation: Aggregation,
) -> Result<MetricsReport> {
    let set = prepared.cohort.training_set(network.config().variant)?.subset(idx)?;
    let out = network.predict(set.input())?;
    let risks: Option<Vec<f64>> = out.risk.map(|r| r.into_vec());
    let patients: Vec<String> = idx.iter().map(|&i| prepared.cohort.samples()[i].patient_id.clone()).collect();
    let input = EvalInput {
        patient_ids: &patients,
        times: &set.times,
        events: &set.events,
        grades: &set.grades,
        risks: risks.as_deref(),
        log_probs: out.log_probs.as_ref(),
    };
    evaluate(&input, prepared.cohort.grade_names().len(), ties, aggregation)
}

/// Prepare, build, train and evaluate on the test side in one call.
pub fn run_experiment(
    cohort: &Cohort,
    graph: Option<&GeneGraph>,
    rep: &Repetition,
    variant: Variant,
    profile: &TrainingProfile,
) -> Result<(MetricsReport, TrainOutcome)> {
    let prepared = prepare(cohort, graph, variant, rep)?;
    let config = network_config(&prepared, variant, profile.schedule, profile);
    let network = build_network(&prepared, config, profile.seed)?;
    let outcome = fit(&prepared, network, profile, 0.0)?;
    let report = evaluate_rows(&outcome.network, &prepared, &prepared.test_idx, TieRule::Half, Aggregation::Sample)?;
    Ok((report, outcome))
}
