//! Dependence analysis for two-process serial and parallel processing-time
//! models, exponential free-recall models, and Weibull fitting.

pub mod dist;
pub mod error;
pub mod mc;
pub mod numerics;
pub mod parallel;
pub mod recall;
pub mod report;
pub mod serial;
pub mod stats;

pub use dist::{Family, ProcessingTimeDistribution, TimeDistribution};
pub use error::{Error, Result};
pub use mc::{DEFAULT_SEED, TrialRecord};
pub use numerics::{Axis, GridResult, GridSpec};
pub use parallel::{ParallelTwoModel, StageSurvivalGrid, StageTrend, TrendClass};
pub use recall::{MleFit, RecallModel, RecallTrial};
pub use report::Sign;
pub use serial::{DependenceProfile, Process, SerialTwoModel};
