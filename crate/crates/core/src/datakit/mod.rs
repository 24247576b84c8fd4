//! Cohort model, file formats, standardization, splits and synthetic data.

mod cohort;
mod io;
mod splits;
mod standardize;
mod synth;

pub use cohort::{Cohort, Sample, DEFAULT_GRADE_NAMES};
pub use io::{
    load_cohort, load_cohort_dir, read_clinical, save_cohort, ClinicalRecord, LoadReport, CLINICAL_COLUMNS,
    CLINICAL_FILE, EMBEDDING_FILE, EXPRESSION_FILE,
};
pub use splits::{gen_splits, gen_splits_for_ids, Grouping, Repetition, SplitSet};
pub use standardize::{standardize_expression, Standardizer};
pub use synth::{gene_symbol, synth_gen, SynthCohort, SynthParams};
