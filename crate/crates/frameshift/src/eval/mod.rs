//! Evaluation: multi-label-aware confusion counting, macro/micro
//! precision/recall/F, inter-annotator agreement, and the baseline suite.

mod agreement;
mod baselines;
mod metrics;

pub use agreement::{agreement_macro_f, cohen_kappa};
pub use baselines::{
    baseline_majority, baseline_random, softmax_regression, tfidf_features, SoftmaxRegressionConfig,
    TfIdfVectorizer,
};
pub use metrics::{evaluate_model, prf, score, ClassMetrics, ConfusionCounts, EvalReport};
