//! Simulation and numerics for extremes of stationary infinitely divisible
//! processes driven by null-recurrent renewal dynamics, with subexponential
//! tails in the Gumbel domain of attraction.
//!
//! * [`tail`]: tail families, quantile transforms, normalizing sequences.
//! * [`renewal`]: return-time law, wandering rates, zero-visit sets.
//! * [`regen`]: finite-resolution shifted stable regenerative sets.
//! * [`limit`]: the limiting random sup-measure and its closed-form laws.
//! * [`process`]: exact series simulation of paths and block maxima.
//! * [`stats`]: KS distances, slope fits, binomial intervals.
//! * [`harness`]: named experiments, seeding, result records.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod limit;
pub mod process;
pub mod regen;
pub mod renewal;
pub mod stats;
pub mod tail;

pub use error::{Error, Result};
pub use limit::{Interval, IntervalFamily, LimitMeasureSampler, LimitSupMeasureSample, SupValue};
pub use process::{EmpiricalSupMeasure, PathSample, PathSimulator};
pub use regen::{RegenSampler, RegenSetApprox};
pub use renewal::{McEstimate, ReturnLaw, VisitSampler, VisitSet, WanderingTable, Window};
pub use stats::{Sample, SlopeFit};
pub use tail::{NormalizingSequences, TailFamily, TailModel};
