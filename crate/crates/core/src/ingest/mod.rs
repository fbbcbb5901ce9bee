//! Event-log parsing, per-period aggregation, listener filtering and
//! location inference.

mod aggregate;
mod events;
mod files;

pub use aggregate::{
    aggregate_period, holiday_regions, modal, modal_region, Aggregator, LocationSummary, Modal,
    PeriodAggregate,
};
pub use events::{
    format_event, parse_event_line, parse_events, write_events, EventReader, LineOutcome, ParseStats, RawEvent,
    EVENT_HEADER,
};
pub use files::{
    for_each_aggregate, parse_meta, parse_tags, read_aggregates, read_eligibility, read_locations,
    read_sampled_days, write_aggregates, write_eligibility, write_locations, write_meta, write_sampled_days,
    write_tags, META_HEADER, TAG_HEADER,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HolidayWindow, ListenerMeta, PeriodId, SamplePeriod};

/// Why a listener was excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Exclusion {
    LowActivity(PeriodId),
    MissingDemographics,
    UnreliableLocation(PeriodId),
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exclusion::LowActivity(p) => write!(f, "low activity ({p})"),
            Exclusion::MissingDemographics => f.write_str("missing demographics"),
            Exclusion::UnreliableLocation(p) => write!(f, "unreliable location ({p})"),
        }
    }
}

impl FromStr for Exclusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "missing demographics" {
            return Ok(Exclusion::MissingDemographics);
        }
        let period = |prefix: &str| -> Option<PeriodId> {
            s.strip_prefix(prefix)?.strip_prefix(" (")?.strip_suffix(')')?.parse().ok()
        };
        if let Some(p) = period("low activity") {
            return Ok(Exclusion::LowActivity(p));
        }
        if let Some(p) = period("unreliable location") {
            return Ok(Exclusion::UnreliableLocation(p));
        }
        Err(Error::invalid(format!("unknown exclusion reason {s:?}")))
    }
}

/// Eligibility decision per listener, sorted by listener id.
pub type Eligibility = BTreeMap<String, Option<Exclusion>>;

/// Eligible listener ids.
pub fn eligible_set(e: &Eligibility) -> BTreeSet<String> {
    e.iter().filter(|(_, x)| x.is_none()).map(|(l, _)| l.clone()).collect()
}

/// Apply the activity, demographics and location filters. Reasons are
/// checked in that order and the first failing one is reported.
pub fn filter_listeners(
    aggregates: &[PeriodAggregate],
    locations: &[LocationSummary],
    meta: &BTreeMap<String, ListenerMeta>,
    min_streams: u64,
) -> Eligibility {
    let mut streams: BTreeMap<&str, [u64; 3]> = BTreeMap::new();
    for a in aggregates {
        streams.entry(&a.listener_id).or_default()[a.period.index()] += a.streams();
    }
    let loc: BTreeMap<&str, &LocationSummary> = locations.iter().map(|l| (&*l.listener_id, l)).collect();
    let everyone: BTreeSet<&str> = streams.keys().copied().chain(meta.keys().map(String::as_str)).collect();
    everyone
        .into_iter()
        .map(|l| {
            let s = streams.get(l).copied().unwrap_or_default();
            let low = PeriodId::ALL.into_iter().find(|p| s[p.index()] < min_streams);
            let reason = if let Some(p) = low {
                Some(Exclusion::LowActivity(p))
            } else if !meta.contains_key(l) {
                Some(Exclusion::MissingDemographics)
            } else {
                [PeriodId::P1, PeriodId::P2]
                    .into_iter()
                    .find(|&p| loc.get(l).and_then(|x| x.modal_in(p)).is_none())
                    .map(Exclusion::UnreliableLocation)
            };
            (l.to_string(), reason)
        })
        .collect()
}

/// Everything the ingest stage derives from one event log.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub aggregates: Vec<PeriodAggregate>,
    pub locations: Vec<LocationSummary>,
    pub stats: ParseStats,
}

/// Parse an event log and aggregate it in one pass.
pub fn ingest_events(
    path: &Path,
    periods: &[SamplePeriod],
    holidays: &[HolidayWindow],
    max_release_year: Option<i32>,
) -> Result<Ingested> {
    let mut reader = EventReader::open(path)?;
    if let Some(y) = max_release_year {
        reader = reader.with_max_release_year(y);
    }
    let mut agg = Aggregator::new(periods, holidays);
    let stats = reader.for_each(|e| agg.push(e))?;
    let (aggregates, locations) = agg.finish();
    log::info!(
        "ingested {} lines ({} malformed): {} listener-period aggregates",
        stats.lines,
        stats.malformed,
        aggregates.len()
    );
    Ok(Ingested {
        aggregates,
        locations,
        stats,
    })
}
