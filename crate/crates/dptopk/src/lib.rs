//! Differentially private top-k selection.
//!
//! The centerpiece is a joint exponential mechanism that samples an entire
//! length-k ranked sequence in one shot, in `O(dk log k + d log d)` time
//! instead of enumerating the `O(d^k)` sequence space. Alongside it:
//!
//! - [`pnf_joint`]: the same sampler driven by report-noisy-max with
//!   exponential noise (a permute-and-flip mechanism);
//! - [`peeling`]: the classic baselines, pure-DP permute-and-flip peeling and
//!   approximate-DP Gumbel peeling with concentrated-DP accounting;
//! - [`metrics`]: sequence error metrics and the joint mechanism's utility
//!   bound;
//! - [`oracle`]: exhaustive reference implementations for tiny instances,
//!   used to verify output distributions end to end;
//! - [`harness`]: a reproducible experiment runner behind the `dptopk` CLI.
//!
//! Randomness always flows through caller-supplied RNGs; [`rng::stream`]
//! derives independent reproducible streams for parallel trials.

pub mod counts;
pub mod error;
pub mod exec;
pub mod harness;
pub mod joint;
pub mod metrics;
pub mod noise;
pub mod oracle;
pub mod peeling;
pub mod pnf_joint;
pub mod rng;

pub use counts::{load_counts, load_counts_path, sort_counts, InputFormat, ItemCounts, SortedCounts};
pub use error::{Error, Result};
pub use joint::{run_joint, TopKSample};
pub use metrics::{evaluate, utility_bound, ErrorReport};
pub use peeling::{run_cdp_peel, run_pnf_peel, PrivacyBudget};
pub use pnf_joint::run_pnf_joint;
