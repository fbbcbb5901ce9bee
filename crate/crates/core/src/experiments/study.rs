use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{
    detect_movers_short_term, infer_past_home, long_term_controls, long_term_diversity_test, long_term_shift_test,
    match_pairs, short_term_diversity_test, short_term_shift_test, variability_scale, Adjacency, LongTermShift,
    MatchOptions, MatchedPair, MoverRecord, RegionTable, Residence, ShiftOptions, ShiftTarget, ShortTermDiversity,
    ShortTermShift,
};
use crate::error::Result;
use crate::ingest::LocationSummary;
use crate::metrics::UniFrac;
use crate::model::{GenreTree, ListenerMeta, RegionCode};
use crate::profiles::ProfileSet;
use crate::stats::TestResult;

/// Settings shared by both quasi-experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions<'a> {
    pub seed: u64,
    /// Cap on pairs per origin region in every test.
    pub per_origin: Option<usize>,
    pub favorite_genre: bool,
    pub leave_self_out: bool,
    /// Keep residents who spent a holiday away from home out of the
    /// long-term control pool.
    pub strict_controls: bool,
    /// Borders for the long-term diversity test without neighboring moves.
    pub adjacency: Option<&'a Adjacency>,
}

impl Default for StudyOptions<'_> {
    fn default() -> Self {
        Self {
            seed: 0,
            per_origin: Some(1000),
            favorite_genre: false,
            leave_self_out: false,
            strict_controls: true,
            adjacency: None,
        }
    }
}

/// Counts from mover detection and matching.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub movers: usize,
    pub controls_available: usize,
    pub pairs: usize,
    pub unmatched: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortTermReport {
    pub matching: MatchSummary,
    pub diversity: ShortTermDiversity,
    pub toward_origin: ShortTermShift,
    pub toward_destination: ShortTermShift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTermReport {
    pub matching: MatchSummary,
    /// Month-to-month variability of non-movers used for normalizing.
    pub scale: Option<f64>,
    pub diversity: TestResult,
    /// Diversity test with moves between bordering regions left out.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diversity_non_adjacent: Option<TestResult>,
    pub shift: LongTermShift,
}

/// Everything the quasi-experiments read.
pub struct Study<'a> {
    pub profiles: &'a ProfileSet,
    pub locations: &'a [LocationSummary],
    pub eligible: &'a BTreeSet<String>,
    pub meta: &'a BTreeMap<String, ListenerMeta>,
    pub tree: &'a GenreTree,
    /// Genre distances for Rao-Stirling diversity.
    pub distances: &'a Array2<f64>,
}

struct Prepared {
    residence: Residence,
    regions: RegionTable,
    unifrac: UniFrac,
}

impl Study<'_> {
    fn prepare(&self) -> Result<Prepared> {
        let residence = Residence::from_locations(self.locations, self.eligible);
        let regions = RegionTable::build(self.profiles, &residence)?;
        Ok(Prepared {
            residence,
            regions,
            unifrac: UniFrac::new(self.tree),
        })
    }

    fn matched(
        &self,
        movers: &[MoverRecord],
        controls: &BTreeMap<String, RegionCode>,
        options: &StudyOptions<'_>,
    ) -> Result<(Vec<MatchedPair>, MatchSummary)> {
        let outcome = match_pairs(
            movers,
            controls,
            self.meta,
            Some(self.profiles),
            options.seed,
            MatchOptions {
                favorite_genre: options.favorite_genre,
            },
        )?;
        let summary = MatchSummary {
            movers: movers.len(),
            controls_available: controls.len(),
            pairs: outcome.pairs.len(),
            unmatched: outcome.unmatched,
            skipped: outcome.skipped,
        };
        log::info!(
            "{} movers, {} matched pairs, {} unmatched, {} skipped",
            summary.movers,
            summary.pairs,
            summary.unmatched,
            summary.skipped
        );
        Ok((outcome.pairs, summary))
    }

    /// Movers between P1 and P2, matched to stable residents of their
    /// origin.
    pub fn short_term(&self, options: StudyOptions<'_>) -> Result<ShortTermReport> {
        let prep = self.prepare()?;
        let movers = detect_movers_short_term(self.locations, self.eligible);
        let (pairs, matching) = self.matched(&movers, prep.residence.stable_residents(), &options)?;
        let shift = |target| {
            short_term_shift_test(
                &pairs,
                self.profiles,
                &prep.regions,
                &prep.residence,
                &prep.unifrac,
                target,
                ShiftOptions {
                    per_origin: options.per_origin,
                    seed: options.seed,
                    scale: None,
                    leave_self_out: options.leave_self_out,
                },
            )
        };
        Ok(ShortTermReport {
            diversity: short_term_diversity_test(&pairs, self.profiles, self.distances, options.per_origin, options.seed)?,
            toward_origin: shift(ShiftTarget::Origin)?,
            toward_destination: shift(ShiftTarget::Destination)?,
            matching,
        })
    }

    /// Listeners whose holidays point to a past home, matched to stable
    /// residents of that home that show no such sign.
    pub fn long_term(&self, options: StudyOptions<'_>) -> Result<LongTermReport> {
        let prep = self.prepare()?;
        let movers = infer_past_home(self.locations, self.eligible);
        let strict = options.strict_controls.then_some(self.locations);
        let controls = long_term_controls(&prep.residence, &movers, strict);
        let (pairs, matching) = self.matched(&movers, &controls, &options)?;
        let scale = match variability_scale(
            &controls,
            self.profiles,
            &prep.regions,
            &prep.residence,
            &prep.unifrac,
            options.leave_self_out,
        ) {
            Ok(s) => Some(s),
            Err(e) if e.is_degenerate() => {
                log::warn!("differences left unnormalized: {e}");
                None
            }
            Err(e) => return Err(e),
        };
        let diversity =
            long_term_diversity_test(&pairs, self.profiles, self.distances, None, options.per_origin, options.seed)?;
        // Optional refinement; too few non-bordering moves only drops it.
        let diversity_non_adjacent = match options.adjacency.map(|adj| {
            long_term_diversity_test(&pairs, self.profiles, self.distances, Some(adj), options.per_origin, options.seed)
        }) {
            Some(Err(e)) if e.is_degenerate() => {
                log::warn!("diversity test without bordering moves skipped: {e}");
                None
            }
            other => other.transpose()?,
        };
        let shift = long_term_shift_test(
            &pairs,
            self.profiles,
            &prep.regions,
            &prep.residence,
            &prep.unifrac,
            ShiftOptions {
                per_origin: options.per_origin,
                seed: options.seed,
                scale,
                leave_self_out: options.leave_self_out,
            },
        )?;
        Ok(LongTermReport {
            matching,
            scale,
            diversity,
            diversity_non_adjacent,
            shift,
        })
    }
}
