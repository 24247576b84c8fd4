//! Evaluation: concordance, Kaplan-Meier curves, risk tertiles and grade
//! classification metrics.

mod classify;
mod concordance;
mod km;
mod report;
mod stratify;

pub use classify::{accuracy_and_micro_f1, argmax_rows, confusion, micro_auc_ap, per_class_f1, ConfusionMatrix};
pub use concordance::{c_index, TieRule};
pub use km::{km_csv, km_curve, km_svg, KmCurve};
pub use report::{evaluate, Aggregation, EvalInput, MetricsReport};
pub use stratify::{percentile, risk_tertiles, RiskGroup, RiskGroups};
