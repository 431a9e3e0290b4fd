//! Selection of small, representative opinion slates from binary approval
//! data.
//!
//! Given a question with `m` candidate opinions, `n` users, and an `n x m`
//! 0/1 approval matrix, this crate picks a slate of `k` opinions under one of
//! several rules — baselines (random, engagement, group-aware bridging),
//! a farthest-point diversity rule, and greedy rules that come with
//! per-round assignment budgets so the slate can be audited for justified
//! representation. It also verifies those representation properties, scores
//! slates against a set of slate-quality metrics, and runs benchmark sweeps
//! across rules, slate sizes, and seeds.
//!
//! All randomized code paths draw from a ChaCha8 stream keyed by an explicit
//! seed, so every selector, sweep, and report is reproducible bit-for-bit.
//!
//! The main entry points:
//!
//! - [`model::Instance`] — a question bundled with its approval matrix,
//!   default slate size, and optional group partition and opinion texts.
//! - [`selectors::select`] — run one rule on one instance.
//! - [`verify::check_jr`] / [`verify::check_bjr_certificate`] — audit a
//!   slate.
//! - [`metrics::MetricsReport`] — score a slate.
//! - [`bench::run_benchmark`] / [`bench::run_epsilon_sweep`] — sweep many
//!   runs and write CSV/JSON results.
//! - [`data_io`] — canonical JSON instance files, CSV vote adapters,
//!   synthetic instance generation, and manifest-driven dataset fetching.

pub mod bench;
pub mod data_io;
pub mod distance;
pub mod error;
pub mod metrics;
pub mod model;
pub mod scoring;
pub mod selectors;
pub mod verify;

pub use error::{Error, Result};
