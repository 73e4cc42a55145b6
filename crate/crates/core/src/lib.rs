//! Learning-rate-free optimizers, relative schedules, a desk-scale workload
//! suite, a trial harness, time-to-target scoring and a quasi-random
//! calibration pipeline.

pub mod calibration;
pub mod error;
pub mod harness;
pub mod io;
pub mod optim;
pub mod rng;
pub mod schedule;
pub mod scoring;
pub mod tensor;
pub mod workloads;

pub use error::{Error, Result};
