use std::collections::BTreeSet;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{substream, PeriodId, SamplePeriod};
use crate::error::{Error, Result};

/// Run-wide settings. Read from a TOML file; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Days drawn per period when a period lists no explicit days.
    pub sampled_days_per_period: usize,
    /// Maximum gap between two streams counted as a succession.
    pub session_gap_minutes: u32,
    pub include_self_transitions: bool,
    /// Number of data-derived genres.
    pub k: usize,
    pub top_n_artists: usize,
    pub min_streams_per_profile: u64,
    /// Matched pairs sampled per origin region.
    pub pairs_per_stratum_sample: usize,
    pub periods: Vec<PeriodSpec>,
    pub holidays: Vec<HolidayWindow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodSpec {
    pub id: PeriodId,
    pub start: NaiveDate,
    pub end: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_days: Option<Vec<NaiveDate>>,
}

/// Five-day window centred on a home holiday.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolidayWindow {
    pub id: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl HolidayWindow {
    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }

    pub fn days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid default date")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sampled_days_per_period: 9,
            session_gap_minutes: 30,
            include_self_transitions: false,
            k: 200,
            top_n_artists: 10_000,
            min_streams_per_profile: 200,
            pairs_per_stratum_sample: 1000,
            periods: vec![
                PeriodSpec {
                    id: PeriodId::P1,
                    start: ymd(2017, 3, 1),
                    end: ymd(2017, 5, 31),
                    sampled_days: None,
                },
                PeriodSpec {
                    id: PeriodId::P2,
                    start: ymd(2017, 9, 1),
                    end: ymd(2017, 11, 30),
                    sampled_days: None,
                },
                PeriodSpec {
                    id: PeriodId::P3,
                    start: ymd(2017, 12, 1),
                    end: ymd(2018, 2, 28),
                    sampled_days: None,
                },
            ],
            holidays: vec![
                HolidayWindow {
                    id: "christmas-2016".into(),
                    start: ymd(2016, 12, 23),
                    end: ymd(2016, 12, 27),
                },
                HolidayWindow {
                    id: "thanksgiving-2017".into(),
                    start: ymd(2017, 11, 21),
                    end: ymd(2017, 11, 25),
                },
                HolidayWindow {
                    id: "christmas-2017".into(),
                    start: ymd(2017, 12, 23),
                    end: ymd(2017, 12, 27),
                },
            ],
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn period(&self, id: PeriodId) -> Option<&PeriodSpec> {
        self.periods.iter().find(|p| p.id == id)
    }

    /// Latest calendar year covered by the periods.
    pub fn last_year(&self) -> Option<i32> {
        use chrono::Datelike;
        self.periods.iter().map(|p| p.end.year()).max()
    }
}

/// One violated configuration constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigViolation(pub String);

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Every violated invariant of `config`, empty when valid.
pub fn validate_config(config: &RunConfig) -> Vec<ConfigViolation> {
    let mut out = Vec::new();
    let mut bad = |msg: String| out.push(ConfigViolation(msg));

    if config.k == 0 {
        bad("K must be positive".into());
    }
    if config.top_n_artists == 0 {
        bad("top_n_artists must be positive".into());
    }
    if config.min_streams_per_profile == 0 {
        bad("min_streams_per_profile must be positive".into());
    }
    if config.pairs_per_stratum_sample == 0 {
        bad("pairs_per_stratum_sample must be positive".into());
    }
    if config.session_gap_minutes == 0 {
        bad("session_gap_minutes must be positive".into());
    }
    if config.sampled_days_per_period == 0 {
        bad("sampled_days_per_period must be positive".into());
    }

    for id in PeriodId::ALL {
        match config.periods.iter().filter(|p| p.id == id).count() {
            0 => bad(format!("period {id} is not defined")),
            1 => {}
            n => bad(format!("period {id} is defined {n} times")),
        }
    }
    for p in &config.periods {
        if p.start > p.end {
            bad(format!("period {}: start {} is after end {}", p.id, p.start, p.end));
            continue;
        }
        let span = (p.end - p.start).num_days() as usize + 1;
        match &p.sampled_days {
            Some(days) => {
                let unique: BTreeSet<_> = days.iter().collect();
                if unique.len() != days.len() {
                    bad(format!("period {}: sampled days contain duplicates", p.id));
                }
                if days.is_empty() {
                    bad(format!("period {}: sampled day list is empty", p.id));
                }
                for d in days {
                    if *d < p.start || *d > p.end {
                        bad(format!("period {}: sampled day {d} outside {}..{}", p.id, p.start, p.end));
                    }
                }
            }
            None if config.sampled_days_per_period > span => bad(format!(
                "period {}: cannot sample {} days from a {span}-day range",
                p.id, config.sampled_days_per_period
            )),
            None => {}
        }
    }

    let mut ids = BTreeSet::new();
    for h in &config.holidays {
        if !ids.insert(h.id.as_str()) {
            bad(format!("holiday window {:?} is defined twice", h.id));
        }
        if h.days() != 5 {
            bad(format!(
                "holiday window {:?} spans {} days; windows must span exactly 5 days",
                h.id,
                h.days()
            ));
        }
    }
    for (i, a) in config.holidays.iter().enumerate() {
        for b in &config.holidays[i + 1..] {
            if a.start <= b.end && b.start <= a.end {
                bad(format!("holiday windows {:?} and {:?} overlap", a.id, b.id));
            }
        }
    }
    out
}

/// Materialize the three sample periods, drawing sampled days from the run
/// seed where the config does not list them. Days inside holiday windows are
/// never drawn, so holiday travel cannot shift a period's modal region.
pub fn resolve_periods(config: &RunConfig) -> Result<Vec<SamplePeriod>> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        let msgs: Vec<_> = violations.iter().map(|v| v.0.as_str()).collect();
        return Err(Error::Config(msgs.join("; ")));
    }
    let mut out = Vec::with_capacity(3);
    for id in PeriodId::ALL {
        let spec = config.period(id).expect("validated");
        let days = match &spec.sampled_days {
            Some(days) => days.clone(),
            None => {
                let candidates: Vec<NaiveDate> = spec
                    .start
                    .iter_days()
                    .take_while(|d| *d <= spec.end)
                    .filter(|d| !config.holidays.iter().any(|h| h.contains(*d)))
                    .collect();
                if candidates.len() < config.sampled_days_per_period {
                    return Err(Error::Config(format!(
                        "period {id}: only {} non-holiday days available",
                        candidates.len()
                    )));
                }
                let mut rng = substream(config.seed, &format!("sampled-days/{id}"));
                rand::seq::index::sample(&mut rng, candidates.len(), config.sampled_days_per_period)
                    .into_iter()
                    .map(|i| candidates[i])
                    .collect()
            }
        };
        out.push(SamplePeriod::new(id, spec.start, spec.end, days)?);
    }
    Ok(out)
}
