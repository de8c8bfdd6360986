//! Benchmark harness behind the `bench` binary: configuration, timing,
//! result rows and the CSV format.

pub mod cli;
pub mod config;
pub mod error;
pub mod rows;
pub mod suite;
pub mod timing;

pub use config::{BenchConfig, Precision};
pub use error::BenchError;
pub use rows::{Metric, ResultRow};
pub use timing::{Clock, FakeClock, SystemClock};
