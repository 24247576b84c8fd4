//! Run configuration: a flat JSON document, overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use cofusion::datakit::DEFAULT_GRADE_NAMES;
use cofusion::netmodel::Variant;
use cofusion::surveval::{Aggregation, TieRule};
use cofusion::training::{Schedule, TrainingProfile};
use cofusion::{Error, Result};

use crate::args::TrainArgs;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub variant: Option<String>,
    pub schedule: Option<String>,
    pub preset: Option<String>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch_size: Option<usize>,
    pub dropout: Option<f64>,
    pub seed: Option<u64>,
    pub validation_frac: Option<f64>,
    pub data_dir: Option<PathBuf>,
    pub expression: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub clinical: Option<PathBuf>,
    pub edge_list: Option<PathBuf>,
    pub splits: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub rep: Option<usize>,
    pub grade_names: Option<Vec<String>>,
    pub aggregation: Option<String>,
    pub ties: Option<String>,
}

/// A configuration with every default applied and every file checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub variant: Variant,
    pub preset: String,
    pub profile: TrainingProfile,
    pub validation_frac: f64,
    pub expression: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub clinical: PathBuf,
    pub edge_list: Option<PathBuf>,
    pub splits: PathBuf,
    pub out: PathBuf,
    pub rep: usize,
    pub grade_names: Vec<String>,
    pub aggregation: Aggregation,
    pub ties: TieRule,
}

/// Parses a kebab-case enum name through its serde representation.
pub fn parse_name<T: DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(text.to_string()))
        .map_err(|_| Error::Config(format!("unknown {what} '{text}'")))
}

/// The kebab-case name of an enum value.
pub fn name_of<T: Serialize>(v: T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(str::to_string)).unwrap_or_default()
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Applies flag values on top of this configuration.
    pub fn overridden(mut self, a: &TrainArgs, seed: Option<u64>, out: Option<&Path>) -> Self {
        macro_rules! take {
            ($($field:ident),*) => { $( if a.$field.is_some() { self.$field = a.$field.clone(); } )* };
        }
        take!(
            variant,
            schedule,
            preset,
            epochs,
            lr,
            weight_decay,
            batch_size,
            dropout,
            validation_frac,
            data_dir,
            expression,
            embeddings,
            clinical,
            edge_list,
            splits,
            rep,
            aggregation,
            ties
        );
        if seed.is_some() {
            self.seed = seed;
        }
        if let Some(o) = out {
            self.out = Some(o.to_path_buf());
        }
        self
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        let variant: Variant = parse_name("variant", self.variant.as_deref().unwrap_or("fused"))?;
        let schedule: Schedule = match &self.schedule {
            Some(s) => s.parse()?,
            None => Schedule::Alternate,
        };
        let preset = self.preset.clone().unwrap_or_else(|| "mmmt-default".to_string());
        let mut profile = TrainingProfile::preset(&preset)?.with_schedule(schedule).with_seed(self.seed.unwrap_or(0));
        if let Some(v) = self.epochs {
            profile.epochs = v;
        }
        if let Some(v) = self.lr {
            profile.base_lr = v;
        }
        if let Some(v) = self.weight_decay {
            profile.weight_decay = v;
        }
        if let Some(v) = self.batch_size {
            profile.batch_size = v;
        }
        if let Some(v) = self.dropout {
            profile.dropout_p = v;
        }
        profile.validate()?;

        let in_dir = |name: &str| self.data_dir.as_ref().map(|d| d.join(name));
        let existing = |p: Option<PathBuf>| p.filter(|p| p.exists());
        let expression = self.expression.clone().or_else(|| existing(in_dir(cofusion::datakit::EXPRESSION_FILE)));
        let embeddings = self.embeddings.clone().or_else(|| existing(in_dir(cofusion::datakit::EMBEDDING_FILE)));
        let clinical = self
            .clinical
            .clone()
            .or_else(|| in_dir(cofusion::datakit::CLINICAL_FILE))
            .ok_or_else(|| Error::Config("no clinical table given (clinical or data_dir)".into()))?;
        let splits = self.splits.clone().ok_or_else(|| Error::Config("no split file given".into()))?;
        let out = self.out.clone().ok_or_else(|| Error::Config("no output directory given".into()))?;
        let name = name_of(variant);
        if variant.uses_genes() && expression.is_none() {
            return Err(Error::Config(format!("variant {name} needs an expression file")));
        }
        if variant.uses_genes() && self.edge_list.is_none() {
            return Err(Error::Config(format!("variant {name} needs an edge list")));
        }
        if variant.uses_image() && embeddings.is_none() {
            return Err(Error::Config(format!("variant {name} needs an embedding file")));
        }
        let expression = if variant.uses_genes() { expression } else { None };
        let embeddings = if variant.uses_image() { embeddings } else { None };
        let edge_list = if variant.uses_genes() { self.edge_list.clone() } else { None };
        let absolute = |p: &Path| -> Result<PathBuf> {
            fs::canonicalize(p).map_err(|_| Error::Config(format!("file {} does not exist", p.display())))
        };
        let validation_frac = self.validation_frac.unwrap_or(0.0);
        if !(0.0..1.0).contains(&validation_frac) {
            return Err(Error::Config(format!("validation fraction {validation_frac} outside [0, 1)")));
        }
        Ok(ResolvedRun {
            variant,
            preset,
            profile,
            validation_frac,
            expression: expression.as_deref().map(absolute).transpose()?,
            embeddings: embeddings.as_deref().map(absolute).transpose()?,
            clinical: absolute(&clinical)?,
            edge_list: edge_list.as_deref().map(absolute).transpose()?,
            splits: absolute(&splits)?,
            out,
            rep: self.rep.unwrap_or(0),
            aggregation: parse_name("aggregation", self.aggregation.as_deref().unwrap_or("sample"))?,
            ties: parse_name("tie rule", self.ties.as_deref().unwrap_or("half"))?,
            grade_names: self
                .grade_names
                .clone()
                .unwrap_or_else(|| DEFAULT_GRADE_NAMES.iter().map(|s| s.to_string()).collect()),
        })
    }
}

impl ResolvedRun {
    /// Fully populated configuration, as written next to the run's outputs.
    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            variant: Some(name_of(self.variant)),
            schedule: Some(self.profile.schedule.name().to_string()),
            preset: Some(self.preset.clone()),
            epochs: Some(self.profile.epochs),
            lr: Some(self.profile.base_lr),
            weight_decay: Some(self.profile.weight_decay),
            batch_size: Some(self.profile.batch_size),
            dropout: Some(self.profile.dropout_p),
            seed: Some(self.profile.seed),
            validation_frac: Some(self.validation_frac),
            data_dir: None,
            expression: self.expression.clone(),
            embeddings: self.embeddings.clone(),
            clinical: Some(self.clinical.clone()),
            edge_list: self.edge_list.clone(),
            splits: Some(self.splits.clone()),
            out: Some(self.out.clone()),
            rep: Some(self.rep),
            grade_names: Some(self.grade_names.clone()),
            aggregation: Some(name_of(self.aggregation)),
            ties: Some(name_of(self.ties)),
        }
    }
}
