//! Configuration, execution and reporting behind the `dcvqe` command.

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::{Generator, Method, RunConfig, Task};
pub use pipeline::{execute, exit_code, run};
pub use report::{emit_report, Format, Record, RunReport};
