//! Held-out evaluation: label hiding, stratified folds, ROC and pROC curves,
//! the signed-rank test, and the experiment protocols built on them.

mod experiments;
mod report;
mod roc;
mod split;
mod wilcoxon;

pub use experiments::{
    derive_seed, incidence_curve, incidence_from_scores, lambda_for, prescreen_pipeline, similarity_report,
    sweep_experiment, training_slices, Baseline, FoldAuc, IncidenceConfig, IncidenceCurve, IncidencePoint,
    PrescreenConfig, PrescreenResult, SimilarityConfig, SimilarityResult, SweepConfig, SweepResult, TrainingSlices,
};
pub use report::{fmt_f64, Block, ExperimentReport};
pub use roc::{proc_curve, roc_auc, trapezoid, ProcCurve, RocCurve};
pub use split::{hide_labels, stratified_kfold, stratified_kfold_by, Fold, HideResult};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, WILCOXON_EXACT_MAX};
