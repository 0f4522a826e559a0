//! Cross-dataset generalization benchmark for drug response prediction.
//!
//! Fits dose-response curves into AUC tables, generates reproducible
//! splits, runs preprocess/train/infer model pipelines over every
//! source × target pair, and reduces the scores to the G, Ga, Gn and Gna
//! matrices. The guide in `book/` walks through each module.

pub mod baseline;
pub mod contract;
pub mod curves;
pub mod data;
pub mod metrics;
pub mod report;
pub mod scheduler;

// The guide's code blocks compile and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/curves.md")]
    mod curves {}
    #[doc = include_str!("../../../book/src/benchmark-data.md")]
    mod benchmark_data {}
    #[doc = include_str!("../../../book/src/stage-contract.md")]
    mod stage_contract {}
    #[doc = include_str!("../../../book/src/scheduler.md")]
    mod scheduler {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/report.md")]
    mod report {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
