//! Synthetic cohorts with a planted hazard and grade signal.
//!
//! Causal genes share a latent module factor, so they are co-expressed and
//! connected in the gene graph. The true risk is a fixed linear combination
//! of the causal genes; survival times are exponential with rate
//! proportional to `exp(risk)`, and the grade is the risk tertile. The image
//! embedding is a second, low-rank view of the same tumour: the module factor
//! and a few nuisance factors spread over all dimensions, plus noise.

use serde::{Deserialize, Serialize};

use super::cohort::{Cohort, Sample, DEFAULT_GRADE_NAMES};
use crate::error::{Error, Result};
use crate::genegraph::GeneGraph;
use crate::numcore::RngStream;
use crate::surveval::{risk_tertiles, RiskGroup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub patients: usize,
    pub genes: usize,
    pub causal: usize,
    pub censor_rate: f64,
    pub label_noise: f64,
    pub seed: u64,
    /// Regions of interest per patient; they share expression and labels
    /// and differ in image noise.
    pub samples_per_patient: usize,
    pub image_dim: usize,
    /// Standard deviation of the planted risk score.
    pub risk_scale: f64,
    /// Share of each causal gene's variance explained by the module factor.
    pub module_strength: f64,
    pub image_noise: f64,
    /// Nuisance factors in the image embedding that carry no signal.
    pub image_factors: usize,
    /// Share of each image dimension's signal variance due to the module factor.
    pub image_signal: f64,
    /// Random background edges, as a multiple of the gene count.
    pub background_edges_per_gene: f64,
    pub base_days: f64,
}

impl SynthParams {
    pub fn new(patients: usize, genes: usize, causal: usize, censor_rate: f64, label_noise: f64, seed: u64) -> Self {
        SynthParams {
            patients,
            genes,
            causal,
            censor_rate,
            label_noise,
            seed,
            samples_per_patient: 1,
            image_dim: 1000,
            risk_scale: 10.0,
            module_strength: 0.9,
            image_noise: 0.3,
            image_factors: 8,
            image_signal: 0.7,
            background_edges_per_gene: 2.0,
            base_days: 365.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.patients < 3 {
            return bad(format!("need at least 3 patients, got {}", self.patients));
        }
        if self.genes == 0 || self.causal == 0 {
            return bad("genes and causal genes must be positive".into());
        }
        if self.causal > self.genes {
            return bad(format!("{} causal genes exceed {} genes", self.causal, self.genes));
        }
        for (name, v) in [("censor rate", self.censor_rate), ("label noise", self.label_noise)] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1)"));
            }
        }
        if !(self.image_signal > 0.0 && self.image_signal <= 1.0) {
            return bad(format!("image signal share {} outside (0, 1]", self.image_signal));
        }
        if !(0.0..1.0).contains(&self.module_strength) {
            return bad(format!("module strength {} outside [0, 1)", self.module_strength));
        }
        if self.samples_per_patient == 0 {
            return bad("samples per patient must be positive".into());
        }
        if !(self.risk_scale > 0.0
            && self.image_noise >= 0.0
            && self.base_days > 0.0
            && self.background_edges_per_gene >= 0.0)
        {
            return bad("risk scale and base days must be positive; noise and edge density non-negative".into());
        }
        Ok(())
    }
}

/// Generated cohort plus the ground truth behind it.
#[derive(Debug, Clone)]
pub struct SynthCohort {
    pub cohort: Cohort,
    pub graph: GeneGraph,
    /// Planted risk per sample (row-aligned with the cohort).
    pub true_risk: Vec<f64>,
    pub causal_genes: Vec<String>,
}

const STREAM_GRAPH: u64 = 0;
const STREAM_EXPRESSION: u64 = 1;
const STREAM_RISK: u64 = 2;
const STREAM_SURVIVAL: u64 = 3;
const STREAM_GRADE: u64 = 4;
const STREAM_IMAGE: u64 = 5;

pub fn gene_symbol(i: usize) -> String {
    format!("G{:04}", i + 1)
}

pub fn synth_gen(params: &SynthParams) -> Result<SynthCohort> {
    params.validate()?;
    let (n, p, c) = (params.patients, params.genes, params.causal);
    let genes: Vec<String> = (0..p).map(gene_symbol).collect();

    // Causal genes sit at random positions and form a connected chain.
    let mut g_rng = RngStream::new(params.seed, STREAM_GRAPH);
    let mut positions: Vec<usize> = (0..p).collect();
    g_rng.shuffle(&mut positions);
    let mut causal_idx = positions[..c].to_vec();
    causal_idx.sort_unstable();
    let mut graph = GeneGraph::new();
    for g in &genes {
        graph.add_gene(g);
    }
    for pair in causal_idx.windows(2) {
        graph.add_edge(&genes[pair[0]], &genes[pair[1]]);
    }
    for _ in 0..c {
        let a = causal_idx[g_rng.index(c)];
        let b = causal_idx[g_rng.index(c)];
        graph.add_edge(&genes[a], &genes[b]);
    }
    let background = (params.background_edges_per_gene * p as f64).round() as usize;
    for _ in 0..background {
        let a = g_rng.index(p);
        let b = g_rng.index(p);
        graph.add_edge(&genes[a], &genes[b]);
    }

    // Expression: standard normal noise, with causal genes loading on one
    // module factor with a random sign each.
    let mut r_rng = RngStream::new(params.seed, STREAM_RISK);
    let signs: Vec<f64> = (0..c).map(|_| if r_rng.bernoulli(0.5) { 1.0 } else { -1.0 }).collect();
    let weights: Vec<f64> = signs.iter().map(|s| s * (0.5 + r_rng.uniform())).collect();
    let w_norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();

    let mut x_rng = RngStream::new(params.seed, STREAM_EXPRESSION);
    let load = params.module_strength.sqrt();
    let rest = (1.0 - params.module_strength).sqrt();
    let mut expression = vec![vec![0.0; p]; n];
    let mut risk = vec![0.0; n];
    let mut module = vec![0.0; n];
    for i in 0..n {
        let row = &mut expression[i];
        for v in row.iter_mut() {
            *v = x_rng.normal();
        }
        let f = x_rng.normal();
        module[i] = f;
        let mut score = 0.0;
        for (k, &g) in causal_idx.iter().enumerate() {
            row[g] = load * f * signs[k] + rest * row[g];
            score += row[g] * weights[k];
        }
        risk[i] = params.risk_scale * score / w_norm;
    }

    // Survival: T = base · Exp(1) · exp(−risk); a censored patient is observed
    // at a uniform fraction of their event time.
    let mut s_rng = RngStream::new(params.seed, STREAM_SURVIVAL);
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for &r in &risk {
        let t = params.base_days * s_rng.exponential() * (-r).exp();
        let censored = s_rng.bernoulli(params.censor_rate);
        times.push(if censored { t * s_rng.uniform() } else { t });
        events.push(!censored);
    }

    let tertiles = risk_tertiles(&risk)?;
    let mut k_rng = RngStream::new(params.seed, STREAM_GRADE);
    let grades: Vec<usize> = tertiles
        .labels
        .iter()
        .map(|g| {
            let true_class = match g {
                RiskGroup::Low => 0,
                RiskGroup::Mid => 1,
                RiskGroup::High => 2,
            };
            if k_rng.bernoulli(params.label_noise) {
                (true_class + 1 + k_rng.index(2)) % 3
            } else {
                true_class
            }
        })
        .collect();

    // Image embedding: random loadings of the module factor and the nuisance
    // factors, normalized so that each dimension has unit signal variance.
    let mut i_rng = RngStream::new(params.seed, STREAM_IMAGE);
    let d = params.image_dim;
    let r = params.image_factors + 1;
    let nuisance = if params.image_factors == 0 {
        0.0
    } else {
        ((1.0 - params.image_signal) / params.image_factors as f64).sqrt()
    };
    let loadings: Vec<f64> =
        (0..r * d).map(|j| i_rng.normal() * if j < d { params.image_signal.sqrt() } else { nuisance }).collect();
    let mut samples = Vec::with_capacity(n * params.samples_per_patient);
    let mut true_risk = Vec::with_capacity(n * params.samples_per_patient);
    for i in 0..n {
        let mut factors = vec![module[i]];
        factors.extend((0..params.image_factors).map(|_| i_rng.normal()));
        let mut base = vec![0.0; d];
        for (k, &z) in factors.iter().enumerate() {
            for (b, w) in base.iter_mut().zip(&loadings[k * d..(k + 1) * d]) {
                *b += z * w;
            }
        }
        for k in 0..params.samples_per_patient {
            let image = base.iter().map(|b| b + params.image_noise * i_rng.normal()).collect();
            let patient_id = format!("P{:04}", i + 1);
            samples.push(Sample {
                sample_id: format!("{patient_id}-{}", k + 1),
                patient_id,
                image: Some(image),
                expression: Some(expression[i].clone()),
                time: times[i],
                event: events[i],
                grade: grades[i],
            });
            true_risk.push(risk[i]);
        }
    }
    let cohort = Cohort::new(samples, genes.clone(), d, DEFAULT_GRADE_NAMES.iter().map(|s| s.to_string()).collect())?;
    Ok(SynthCohort { cohort, graph, true_risk, causal_genes: causal_idx.iter().map(|&i| genes[i].clone()).collect() })
}
