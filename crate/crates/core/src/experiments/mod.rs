//! Region profiles, relocation quasi-experiments and age analyses.
//!
//! Movers are found two ways. Short-term movers change modal region
//! between P1 and P2. Long-term movers stay put during P1 and P2 but spend
//! most holiday windows somewhere else, which is taken as their past home.
//! Each mover is matched to a control from the same origin, gender and age
//! bucket, and the matched pairs feed the diversity and shift tests.

mod adjacency;
mod ages;
mod quasi;
mod regions;
mod study;

pub use adjacency::Adjacency;
pub use ages::{age_at_release_matrix, song_age_distribution, AgeMatrix, SongAgeRow, ZAxis};
pub use quasi::{
    long_term_diversity_test, long_term_shift_test, short_term_diversity_test, short_term_shift_test,
    variability_scale, LongTermShift, PairShift, ShiftOptions, ShiftTarget, ShortTermDiversity, ShortTermShift,
};
pub use regions::{
    diversity_distributions, region_genre_zscores, region_profiles, region_profiles_by_group, RegionDiversity,
    RegionTable, RegionZ,
};
pub use study::{LongTermReport, MatchSummary, ShortTermReport, Study, StudyOptions};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{LocationSummary, Modal};
use crate::model::{substream, AgeBucket, Gender, ListenerMeta, PeriodId, ProfileWindow, RegionCode};
use crate::profiles::ProfileSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoverBasis {
    /// Modal region changed between P1 and P2.
    ModalShift,
    /// Past home inferred from holiday locations.
    HolidayInference,
}

impl MoverBasis {
    pub fn as_str(&self) -> &'static str {
        match self {
            MoverBasis::ModalShift => "modal_shift",
            MoverBasis::HolidayInference => "holiday_inference",
        }
    }
}

impl fmt::Display for MoverBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoverRecord {
    pub listener_id: String,
    pub origin: RegionCode,
    pub destination: RegionCode,
    pub basis: MoverBasis,
}

/// Where each listener lived in each window.
///
/// Period windows use that period's modal region. The aggregate window uses
/// the shared P1/P2 region and omits listeners whose region changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Residence {
    windows: [BTreeMap<String, RegionCode>; 4],
}

fn window_slot(w: ProfileWindow) -> usize {
    match w {
        ProfileWindow::Period(p) => p.index(),
        ProfileWindow::Aggregate => 3,
    }
}

impl Residence {
    /// Residence of the `eligible` listeners from their location summaries.
    pub fn from_locations(locations: &[LocationSummary], eligible: &BTreeSet<String>) -> Self {
        let mut r = Residence::default();
        for l in locations.iter().filter(|l| eligible.contains(&*l.listener_id)) {
            let id = l.listener_id.to_string();
            let periods = PeriodId::ALL.map(|p| l.modal_in(p));
            for (i, m) in periods.iter().enumerate() {
                if let Some(m) = m {
                    r.windows[i].insert(id.clone(), *m);
                }
            }
            if let (Some(a), Some(b)) = (periods[0], periods[1]) {
                if a == b {
                    r.windows[3].insert(id, a);
                }
            }
        }
        r
    }

    /// Set the region of `listener` in one window.
    pub fn set(&mut self, listener: &str, window: ProfileWindow, region: RegionCode) {
        self.windows[window_slot(window)].insert(listener.to_string(), region);
    }

    pub fn get(&self, listener: &str, window: ProfileWindow) -> Option<RegionCode> {
        self.windows[window_slot(window)].get(listener).copied()
    }

    pub fn window(&self, window: ProfileWindow) -> &BTreeMap<String, RegionCode> {
        &self.windows[window_slot(window)]
    }

    /// Listeners whose region is the same in P1 and P2, with that region.
    pub fn stable_residents(&self) -> &BTreeMap<String, RegionCode> {
        &self.windows[3]
    }
}

/// Listeners whose unambiguous modal region differs between P1 and P2.
pub fn detect_movers_short_term(locations: &[LocationSummary], eligible: &BTreeSet<String>) -> Vec<MoverRecord> {
    let mut out: Vec<MoverRecord> = locations
        .iter()
        .filter(|l| eligible.contains(&*l.listener_id))
        .filter_map(|l| {
            let a = l.modal_in(PeriodId::P1)?;
            let b = l.modal_in(PeriodId::P2)?;
            (a != b).then(|| MoverRecord {
                listener_id: l.listener_id.to_string(),
                origin: a,
                destination: b,
                basis: MoverBasis::ModalShift,
            })
        })
        .collect();
    out.sort_by(|x, y| x.listener_id.cmp(&y.listener_id));
    out
}

/// Past home from holiday locations: the region other than the current
/// home seen in at least two holiday windows. Only listeners with the same
/// modal region in P1 and P2 are considered.
pub fn infer_past_home(locations: &[LocationSummary], eligible: &BTreeSet<String>) -> Vec<MoverRecord> {
    let mut out: Vec<MoverRecord> = locations
        .iter()
        .filter(|l| eligible.contains(&*l.listener_id))
        .filter_map(|l| {
            let home = l.modal_in(PeriodId::P1)?;
            if l.modal_in(PeriodId::P2)? != home {
                return None;
            }
            past_home(home, l.holidays.iter().map(|(_, m)| *m)).map(|a| MoverRecord {
                listener_id: l.listener_id.to_string(),
                origin: a,
                destination: home,
                basis: MoverBasis::HolidayInference,
            })
        })
        .collect();
    out.sort_by(|x, y| x.listener_id.cmp(&y.listener_id));
    out
}

/// The unique most frequent non-home holiday region, if seen at least twice.
fn past_home(home: RegionCode, holidays: impl Iterator<Item = Modal>) -> Option<RegionCode> {
    let mut seen: BTreeMap<RegionCode, usize> = BTreeMap::new();
    for r in holidays.filter_map(|m| m.region()).filter(|&r| r != home) {
        *seen.entry(r).or_default() += 1;
    }
    let best = *seen.values().max()?;
    let mut top = seen.iter().filter(|(_, &c)| c == best);
    let (&region, _) = top.next()?;
    (best >= 2 && top.next().is_none()).then_some(region)
}

/// Matching key shared by a mover and its control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stratum {
    pub origin: RegionCode,
    pub gender: Gender,
    pub age_bucket: AgeBucket,
    pub favorite_genre: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub mover: String,
    pub control: String,
    pub stratum: Stratum,
    pub destination: RegionCode,
}

impl MatchedPair {
    pub fn origin(&self) -> RegionCode {
        self.stratum.origin
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchOptions {
    /// Also require the same most-streamed genre in P1.
    pub favorite_genre: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchOutcome {
    pub pairs: Vec<MatchedPair>,
    /// Movers left without a control in their stratum.
    pub unmatched: usize,
    /// Listeners skipped for lacking metadata or, in the favorite-genre
    /// variant, for a tied or empty favorite genre.
    pub skipped: usize,
}

/// Pair every mover with a control from the same stratum, drawn uniformly
/// without replacement. `controls` maps each candidate control to its home
/// region. Movers are visited in id order, so the result depends only on
/// the inputs and the seed.
pub fn match_pairs(
    movers: &[MoverRecord],
    controls: &BTreeMap<String, RegionCode>,
    meta: &BTreeMap<String, ListenerMeta>,
    profiles: Option<&ProfileSet>,
    seed: u64,
    options: MatchOptions,
) -> Result<MatchOutcome> {
    if options.favorite_genre && profiles.is_none() {
        return Err(Error::invalid("favorite-genre matching needs listener profiles"));
    }
    let mut skipped = 0usize;
    let key = |id: &str, origin: RegionCode| -> Option<Stratum> {
        let m = meta.get(id)?;
        let favorite_genre = if options.favorite_genre {
            Some(profiles?.get(id, ProfileWindow::Period(PeriodId::P1))?.favorite_genre()?)
        } else {
            None
        };
        Some(Stratum {
            origin,
            gender: m.gender,
            age_bucket: m.age_bucket,
            favorite_genre,
        })
    };
    let mover_ids: BTreeSet<&str> = movers.iter().map(|m| m.listener_id.as_str()).collect();
    let mut pool: BTreeMap<Stratum, Vec<&str>> = BTreeMap::new();
    for (id, &home) in controls {
        if mover_ids.contains(id.as_str()) {
            return Err(Error::invalid(format!("listener {id} is both a mover and a control")));
        }
        match key(id, home) {
            Some(s) => pool.entry(s).or_default().push(id),
            None => skipped += 1,
        }
    }
    if pool.is_empty() {
        return Err(Error::InsufficientData("no eligible controls in any stratum".into()));
    }
    let mut ordered: Vec<&MoverRecord> = movers.iter().collect();
    ordered.sort_by(|a, b| a.listener_id.cmp(&b.listener_id));
    let basis = ordered.first().map_or("none", |m| m.basis.as_str());
    let mut rng = substream(seed, &format!("match/{basis}"));
    let mut out = MatchOutcome::default();
    for m in ordered {
        let Some(stratum) = key(&m.listener_id, m.origin) else {
            skipped += 1;
            continue;
        };
        match pool.get_mut(&stratum) {
            Some(c) if !c.is_empty() => {
                let i = rng.random_range(0..c.len());
                // Keep the candidate order stable for the next draw.
                let control = c.remove(i);
                out.pairs.push(MatchedPair {
                    mover: m.listener_id.clone(),
                    control: control.to_string(),
                    stratum,
                    destination: m.destination,
                });
            }
            _ => out.unmatched += 1,
        }
    }
    out.skipped = skipped;
    if out.pairs.is_empty() && !movers.is_empty() {
        return Err(Error::InsufficientData(format!(
            "none of {} movers has a control in its stratum",
            movers.len()
        )));
    }
    log::info!(
        "matched {} pairs; {} movers unmatched, {} listeners skipped",
        out.pairs.len(),
        out.unmatched,
        out.skipped
    );
    Ok(out)
}

/// Controls for long-term movers: stable residents that are not movers.
/// With `locations`, residents seen away from home in any holiday window
/// are dropped too, since a past home may hide behind a single trip.
pub fn long_term_controls(
    residence: &Residence,
    movers: &[MoverRecord],
    locations: Option<&[LocationSummary]>,
) -> BTreeMap<String, RegionCode> {
    let movers: BTreeSet<&str> = movers.iter().map(|m| m.listener_id.as_str()).collect();
    let travelers: BTreeSet<&str> = locations
        .unwrap_or_default()
        .iter()
        .filter(|l| {
            let home = residence.stable_residents().get(&*l.listener_id);
            home.is_some_and(|h| l.holidays.iter().any(|(_, m)| m.region().is_some_and(|r| r != *h)))
        })
        .map(|l| &*l.listener_id)
        .collect();
    residence
        .stable_residents()
        .iter()
        .filter(|(l, _)| !movers.contains(l.as_str()) && !travelers.contains(l.as_str()))
        .map(|(l, r)| (l.clone(), *r))
        .collect()
}

/// Up to `per_origin` pairs from each origin region, drawn without
/// replacement; smaller regions contribute every pair. The result keeps the
/// input order.
pub fn stratified_sample(pairs: &[MatchedPair], per_origin: Option<usize>, seed: u64, task: &str) -> Vec<MatchedPair> {
    let Some(cap) = per_origin else {
        return pairs.to_vec();
    };
    let mut by_origin: BTreeMap<RegionCode, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        by_origin.entry(p.origin()).or_default().push(i);
    }
    let mut rng = substream(seed, &format!("sample/{task}"));
    let mut keep = Vec::new();
    for idx in by_origin.values() {
        if idx.len() <= cap {
            keep.extend_from_slice(idx);
        } else {
            keep.extend(rand::seq::index::sample(&mut rng, idx.len(), cap).into_iter().map(|j| idx[j]));
        }
    }
    keep.sort_unstable();
    keep.into_iter().map(|i| pairs[i].clone()).collect()
}
