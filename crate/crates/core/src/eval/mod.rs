//! Cross-validation, metrics, correlation reports, the FFD→TRT cascade and
//! the four-model ensemble used for the submission's deviation columns.

mod cascade;
mod cv;
mod ensemble;
mod importance;
mod metrics;
pub mod pipeline;

pub use cascade::{cascade_train, trt_dataset, CascadeModels, CascadeOptions, LeakageTrace};
pub use cv::{
    cross_validate, cross_validate_with, kfold, EvalReport, FoldPlan, FoldReport, MeanBaseline,
};
pub use ensemble::{ensemble_std, spread, StdMode};
pub use importance::{feature_importance, importance_table, Importance};
pub use metrics::{mae, pearson, rmse};
pub use pipeline::{run_shared_task, Submission, SubmissionRow};
