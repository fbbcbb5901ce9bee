use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::events::RawEvent;
use crate::error::{Error, Result};
use crate::model::{HolidayWindow, ListenEvent, PeriodId, RegionCode, SamplePeriod};

/// Streams of one listener on the sampled days of one period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodAggregate {
    pub listener_id: Arc<str>,
    pub period: PeriodId,
    pub artist_counts: BTreeMap<Arc<str>, u64>,
    pub region_counts: BTreeMap<RegionCode, u64>,
    pub release_year_counts: BTreeMap<i32, u64>,
}

impl PeriodAggregate {
    pub fn streams(&self) -> u64 {
        self.artist_counts.values().sum()
    }
}

/// Most frequent region of a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modal {
    Region(RegionCode),
    /// Tied top count.
    Ambiguous,
    /// No located streams at all.
    Absent,
}

impl Modal {
    pub fn region(&self) -> Option<RegionCode> {
        match self {
            Modal::Region(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Modal::Region(r) => r.as_str(),
            Modal::Ambiguous => "ambiguous",
            Modal::Absent => "absent",
        }
    }
}

impl fmt::Display for Modal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ambiguous" => Ok(Modal::Ambiguous),
            "absent" => Ok(Modal::Absent),
            other => other.parse().map(Modal::Region),
        }
    }
}

/// Strict plurality region; `None` when the top count is tied or there are
/// no located streams.
pub fn modal_region(region_counts: &BTreeMap<RegionCode, u64>) -> Option<RegionCode> {
    match modal(region_counts) {
        Modal::Region(r) => Some(r),
        _ => None,
    }
}

/// Like [`modal_region`] but distinguishing ties from empty input.
pub fn modal(region_counts: &BTreeMap<RegionCode, u64>) -> Modal {
    let mut best: Option<(RegionCode, u64)> = None;
    let mut tied = false;
    for (&r, &c) in region_counts {
        if c == 0 {
            continue;
        }
        match best {
            Some((_, b)) if c < b => {}
            Some((_, b)) if c == b => tied = true,
            _ => {
                best = Some((r, c));
                tied = false;
            }
        }
    }
    match best {
        None => Modal::Absent,
        Some(_) if tied => Modal::Ambiguous,
        Some((r, _)) => Modal::Region(r),
    }
}

/// Modal regions of one listener.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocationSummary {
    pub listener_id: Arc<str>,
    /// Indexed by `PeriodId::index()`. Empty periods are `Ambiguous`.
    pub modal: [Modal; 3],
    /// One entry per configured holiday window, in config order.
    pub holidays: Vec<(String, Modal)>,
}

impl LocationSummary {
    pub fn modal_in(&self, p: PeriodId) -> Option<RegionCode> {
        self.modal[p.index()].region()
    }
}

#[derive(Default)]
struct Cell {
    artists: HashMap<Arc<str>, u64>,
    regions: HashMap<RegionCode, u64>,
    years: HashMap<i32, u64>,
}

/// Streaming accumulator for period aggregates and holiday locations.
pub struct Aggregator {
    day_period: HashMap<NaiveDate, PeriodId>,
    holidays: Vec<HolidayWindow>,
    listeners: HashSet<Arc<str>>,
    artists: HashSet<Arc<str>>,
    cells: HashMap<(Arc<str>, PeriodId), Cell>,
    holiday_regions: HashMap<(Arc<str>, usize), BTreeMap<RegionCode, u64>>,
}

impl Aggregator {
    pub fn new(periods: &[SamplePeriod], holidays: &[HolidayWindow]) -> Self {
        let day_period = periods
            .iter()
            .flat_map(|p| p.sampled_days.iter().map(move |d| (*d, p.id)))
            .collect();
        Self {
            day_period,
            holidays: holidays.to_vec(),
            listeners: HashSet::new(),
            artists: HashSet::new(),
            cells: HashMap::new(),
            holiday_regions: HashMap::new(),
        }
    }

    fn intern(set: &mut HashSet<Arc<str>>, s: &str) -> Arc<str> {
        if let Some(a) = set.get(s) {
            return a.clone();
        }
        let a: Arc<str> = Arc::from(s);
        set.insert(a.clone());
        a
    }

    pub fn push(&mut self, e: &RawEvent<'_>) {
        let period = self.day_period.get(&e.date).copied();
        let holiday = self.holidays.iter().position(|h| h.contains(e.date));
        if period.is_none() && holiday.is_none() {
            return;
        }
        let listener = Self::intern(&mut self.listeners, e.listener_id);
        if let Some(p) = period {
            let artist = Self::intern(&mut self.artists, e.artist_id);
            let cell = self.cells.entry((listener.clone(), p)).or_default();
            *cell.artists.entry(artist).or_insert(0) += 1;
            if let Some(r) = e.region {
                *cell.regions.entry(r).or_insert(0) += 1;
            }
            if let Some(y) = e.release_year {
                *cell.years.entry(y).or_insert(0) += 1;
            }
        }
        if let (Some(h), Some(r)) = (holiday, e.region) {
            *self.holiday_regions.entry((listener, h)).or_default().entry(r).or_insert(0) += 1;
        }
    }

    pub fn push_event(&mut self, e: &ListenEvent) {
        self.push(&RawEvent {
            listener_id: &e.listener_id,
            timestamp: e.timestamp.timestamp(),
            date: e.date(),
            artist_id: &e.artist_id,
            release_year: e.release_year,
            region: e.region,
        });
    }

    /// Aggregates sorted by (listener, period) and one location summary per
    /// listener seen on a sampled or holiday day, sorted by listener.
    pub fn finish(self) -> (Vec<PeriodAggregate>, Vec<LocationSummary>) {
        let mut aggregates: Vec<PeriodAggregate> = self
            .cells
            .into_iter()
            .map(|((listener_id, period), c)| PeriodAggregate {
                listener_id,
                period,
                artist_counts: c.artists.into_iter().collect(),
                region_counts: c.regions.into_iter().collect(),
                release_year_counts: c.years.into_iter().collect(),
            })
            .collect();
        aggregates.sort_by(|a, b| (&a.listener_id, a.period).cmp(&(&b.listener_id, b.period)));
        let mut listeners: Vec<Arc<str>> = self.listeners.into_iter().collect();
        listeners.sort();
        let mut by_listener: HashMap<&str, [Modal; 3]> = HashMap::new();
        for a in &aggregates {
            let m = by_listener.entry(&a.listener_id).or_insert([Modal::Ambiguous; 3]);
            m[a.period.index()] = match modal(&a.region_counts) {
                Modal::Absent => Modal::Ambiguous,
                x => x,
            };
        }
        let locations = listeners
            .iter()
            .map(|l| LocationSummary {
                listener_id: l.clone(),
                modal: by_listener.get(&**l).copied().unwrap_or([Modal::Ambiguous; 3]),
                holidays: self
                    .holidays
                    .iter()
                    .enumerate()
                    .map(|(h, w)| {
                        let m = self
                            .holiday_regions
                            .get(&(l.clone(), h))
                            .map_or(Modal::Absent, modal);
                        (w.id.clone(), m)
                    })
                    .collect(),
            })
            .collect();
        (aggregates, locations)
    }
}

/// Per-listener aggregates of one period from in-memory events.
pub fn aggregate_period(events: &[ListenEvent], period: &SamplePeriod) -> BTreeMap<String, PeriodAggregate> {
    let mut agg = Aggregator::new(std::slice::from_ref(period), &[]);
    for e in events {
        agg.push_event(e);
    }
    agg.finish()
        .0
        .into_iter()
        .map(|a| (a.listener_id.to_string(), a))
        .collect()
}

/// Modal region per listener and holiday window.
pub fn holiday_regions(events: &[ListenEvent], holidays: &[HolidayWindow]) -> BTreeMap<String, Vec<(String, Modal)>> {
    let mut agg = Aggregator::new(&[], holidays);
    for e in events {
        agg.push_event(e);
    }
    agg.finish()
        .1
        .into_iter()
        .map(|l| (l.listener_id.to_string(), l.holidays))
        .collect()
}
