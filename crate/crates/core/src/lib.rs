//! # tastemap
//!
//! Musical taste analytics over listening logs: data-derived genre
//! taxonomies built from co-listening transitions, ecology-style diversity
//! and dissimilarity measures over taste profiles, and matched-pair
//! quasi-experiments that measure how tastes shift after a listener
//! relocates.
//!
//! The pipeline runs in stages:
//!
//! ```text
//! events.tsv ──► ingest ──► genres ──► profiles ──► experiments
//!                  │          │
//!                  └──────────┴── synth (planted ground truth) ──► score
//! ```
//!
//! * [`ingest`] parses event logs, samples days per period, filters listeners
//!   and infers modal and holiday locations.
//! * [`genres`] builds the artist transition matrix, correlation distances,
//!   clusterings and cluster diagnostics (AMI, completeness).
//! * [`metrics`] holds Rao-Stirling diversity, weighted UniFrac over a UPGMA
//!   genre tree, KL/Jensen-Shannon divergences and rarefaction curves.
//! * [`stats`] implements the t-tests, Mann-Whitney U, Pearson correlation and
//!   z-scores with self-contained special functions.
//! * [`experiments`] runs the region, short-term, long-term and age analyses.
//! * [`synth`] generates synthetic populations with known ground truth.

pub mod error;
pub mod experiments;
pub mod genres;
pub mod ingest;
pub mod io;
pub mod linkage;
pub mod metrics;
pub mod model;
pub mod profiles;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    AgeBucket, Gender, GenreTaxonomy, GenreTree, ListenEvent, ListenerMeta, PeriodId,
    ProfileWindow, RegionCode, RunConfig, SamplePeriod, TasteProfile,
};
