//! Metrics, method comparison and scripted task replay.

pub mod compare;
pub mod metrics;
pub mod task;

pub use compare::{compare_methods, parse_methods, run_method, CompareOptions, Method, MetricReport};
pub use metrics::{nse, primitive_accuracy};
pub use task::{calibrate_task, replay_task, ReplayContext, TaskScript, TaskTrace};
