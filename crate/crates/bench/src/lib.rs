//! Benchmark harness for the `mlatc` mapper: stream runs with per-frame
//! metrics, lockstep oracle checks, scaling-factor sweeps, regression fits,
//! map export and the closed-form analysis report.

pub mod analyze;
pub mod export;
pub mod fit;
pub mod oracle;
pub mod runner;
pub mod sweep;
pub mod table;
