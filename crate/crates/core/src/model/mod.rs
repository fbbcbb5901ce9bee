//! Core domain types shared by every stage.

mod config;
mod rng;
mod taxonomy;
mod tree;

pub use config::{
    resolve_periods, validate_config, ConfigViolation, HolidayWindow, PeriodSpec, RunConfig,
};
pub use rng::{substream, substream_indexed};
pub use taxonomy::GenreTaxonomy;
pub use tree::{GenreTree, TreeNode};

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Two-letter uppercase region code (US state convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionCode([u8; 2]);

impl RegionCode {
    pub fn new(code: &str) -> Option<Self> {
        match code.as_bytes() {
            [a, b] if a.is_ascii_uppercase() && b.is_ascii_uppercase() => Some(Self([*a, *b])),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &str {
        // Both bytes are ASCII uppercase by construction.
        std::str::from_utf8(&self.0).expect("ascii region code")
    }
}

impl fmt::Display for RegionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegionCode::new(s).ok_or_else(|| Error::invalid(format!("invalid region code {s:?}")))
    }
}

impl Serialize for RegionCode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RegionCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        RegionCode::new(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid region {s:?}")))
    }
}

/// Self-reported gender code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
    X,
}

impl Gender {
    pub const ALL: [Gender; 3] = [Gender::M, Gender::F, Gender::X];

    pub fn as_str(&self) -> &'static str {
        match self {
            Gender::M => "M",
            Gender::F => "F",
            Gender::X => "X",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" => Ok(Gender::M),
            "F" => Ok(Gender::F),
            "X" => Ok(Gender::X),
            other => Err(Error::invalid(format!("invalid gender code {other:?}"))),
        }
    }
}

/// Five-year birth-year bucket, identified by its first year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct AgeBucket(i32);

impl AgeBucket {
    pub fn new(start_year: i32) -> Result<Self> {
        if start_year.rem_euclid(5) != 0 {
            return Err(Error::invalid(format!(
                "age bucket start {start_year} is not divisible by 5"
            )));
        }
        Ok(Self(start_year))
    }

    pub fn start_year(&self) -> i32 {
        self.0
    }

    /// Birth-year proxy: the middle year of the bucket.
    pub fn midpoint(&self) -> i32 {
        self.0 + 2
    }
}

impl TryFrom<i32> for AgeBucket {
    type Error = Error;

    fn try_from(v: i32) -> Result<Self> {
        AgeBucket::new(v)
    }
}

impl From<AgeBucket> for i32 {
    fn from(b: AgeBucket) -> i32 {
        b.0
    }
}

impl fmt::Display for AgeBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One of the three sample periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PeriodId {
    P1,
    P2,
    P3,
}

impl PeriodId {
    pub const ALL: [PeriodId; 3] = [PeriodId::P1, PeriodId::P2, PeriodId::P3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PeriodId::P1 => "P1",
            PeriodId::P2 => "P2",
            PeriodId::P3 => "P3",
        }
    }
}

impl fmt::Display for PeriodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PeriodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P1" => Ok(PeriodId::P1),
            "P2" => Ok(PeriodId::P2),
            "P3" => Ok(PeriodId::P3),
            other => Err(Error::invalid(format!("unknown period {other:?}"))),
        }
    }
}

/// A single stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListenEvent {
    pub listener_id: String,
    pub timestamp: DateTime<Utc>,
    pub artist_id: String,
    pub release_year: Option<i32>,
    pub region: Option<RegionCode>,
}

impl ListenEvent {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListenerMeta {
    pub listener_id: String,
    pub gender: Gender,
    pub age_bucket: AgeBucket,
}

/// A sample period with the days actually aggregated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePeriod {
    pub id: PeriodId,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Sorted, unique, all within `start..=end`.
    pub sampled_days: Vec<NaiveDate>,
}

impl SamplePeriod {
    pub fn new(id: PeriodId, start: NaiveDate, end: NaiveDate, mut days: Vec<NaiveDate>) -> Result<Self> {
        if start > end {
            return Err(Error::invalid(format!("{id}: start {start} after end {end}")));
        }
        days.sort_unstable();
        let before = days.len();
        days.dedup();
        if days.len() != before {
            return Err(Error::invalid(format!("{id}: duplicate sampled days")));
        }
        if let Some(d) = days.iter().find(|d| **d < start || **d > end) {
            return Err(Error::invalid(format!("{id}: sampled day {d} outside {start}..{end}")));
        }
        Ok(Self {
            id,
            start,
            end,
            sampled_days: days,
        })
    }

    pub fn is_sampled(&self, day: NaiveDate) -> bool {
        self.sampled_days.binary_search(&day).is_ok()
    }
}

/// Which time window a profile summarizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProfileWindow {
    Period(PeriodId),
    /// P1 through P3 combined.
    Aggregate,
}

impl ProfileWindow {
    pub const ALL: [ProfileWindow; 4] = [
        ProfileWindow::Period(PeriodId::P1),
        ProfileWindow::Period(PeriodId::P2),
        ProfileWindow::Period(PeriodId::P3),
        ProfileWindow::Aggregate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileWindow::Period(p) => p.as_str(),
            ProfileWindow::Aggregate => "aggregate",
        }
    }
}

impl fmt::Display for ProfileWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "aggregate" {
            Ok(ProfileWindow::Aggregate)
        } else {
            s.parse().map(ProfileWindow::Period)
        }
    }
}

impl Serialize for ProfileWindow {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ProfileWindow {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Stream counts over the K genres for one listener or region.
///
/// `total` is always the sum of `counts`; the fields are private so the
/// invariant cannot be broken after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct TasteProfile {
    owner_id: String,
    window: ProfileWindow,
    counts: Vec<u64>,
    total: u64,
}

#[derive(Deserialize)]
struct RawProfile {
    owner_id: String,
    window: ProfileWindow,
    counts: Vec<u64>,
    total: u64,
}

impl TryFrom<RawProfile> for TasteProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        let p = TasteProfile::new(raw.owner_id, raw.window, raw.counts);
        if p.total != raw.total {
            return Err(Error::Format {
                what: "taste profile",
                message: format!("total {} != sum of counts {}", raw.total, p.total),
            });
        }
        Ok(p)
    }
}

impl TasteProfile {
    pub fn new(owner_id: impl Into<String>, window: ProfileWindow, counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self {
            owner_id: owner_id.into(),
            window,
            counts,
            total,
        }
    }

    pub fn owner_id(&self) -> &str {
        &self.owner_id
    }

    pub fn window(&self) -> ProfileWindow {
        self.window
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Fractions per genre; all zeros when the profile is empty.
    pub fn normalized(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let t = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// Index of the most-streamed genre, or `None` on an empty profile or a
    /// tie for the maximum.
    pub fn favorite_genre(&self) -> Option<usize> {
        let max = *self.counts.iter().max()?;
        if max == 0 {
            return None;
        }
        let mut winners = self.counts.iter().enumerate().filter(|(_, &c)| c == max);
        let (first, _) = winners.next()?;
        match winners.next() {
            Some(_) => None,
            None => Some(first),
        }
    }

    /// Element-wise sum of profiles with the same K.
    pub fn sum<'a>(
        owner_id: impl Into<String>,
        window: ProfileWindow,
        k: usize,
        parts: impl IntoIterator<Item = &'a TasteProfile>,
    ) -> Result<Self> {
        let mut counts = vec![0u64; k];
        for p in parts {
            if p.k() != k {
                return Err(Error::invalid(format!(
                    "profile {} has {} genres, expected {k}",
                    p.owner_id,
                    p.k()
                )));
            }
            for (acc, c) in counts.iter_mut().zip(&p.counts) {
                *acc += c;
            }
        }
        Ok(TasteProfile::new(owner_id, window, counts))
    }
}
