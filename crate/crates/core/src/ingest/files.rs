use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use chrono::NaiveDate;

use super::aggregate::{LocationSummary, Modal, PeriodAggregate};
use super::events::ParseStats;
use super::{Eligibility, Exclusion};
use crate::error::{Error, Result};
use crate::io::{self, read_tsv, Table};
use crate::model::{AgeBucket, Gender, ListenerMeta, PeriodId, SamplePeriod};

pub const META_HEADER: [&str; 3] = ["listener_id", "gender_code", "age_bucket_start"];
pub const TAG_HEADER: [&str; 2] = ["artist_id", "tag"];

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        line,
        message: message.into(),
    }
}

/// Listener metadata. Rows with a missing or invalid gender or age bucket
/// are left out (the listener then fails the demographics filter) and
/// counted as malformed; they never abort the run.
pub fn parse_meta(path: &Path) -> Result<(BTreeMap<String, ListenerMeta>, ParseStats)> {
    let mut stats = ParseStats::default();
    let mut out = BTreeMap::new();
    for (line, f) in read_tsv(path, &META_HEADER)? {
        stats.lines += 1;
        let parsed = match f.as_slice() {
            [id, g, a] if !id.is_empty() => g
                .parse::<Gender>()
                .ok()
                .zip(a.parse::<i32>().ok().and_then(|a| AgeBucket::new(a).ok()))
                .map(|(gender, age_bucket)| ListenerMeta {
                    listener_id: id.clone(),
                    gender,
                    age_bucket,
                }),
            _ => None,
        };
        match parsed {
            Some(m) if !out.contains_key(&m.listener_id) => {
                out.insert(m.listener_id.clone(), m);
            }
            _ => {
                stats.malformed += 1;
                stats.rejected += 1;
                if stats.samples.len() < 5 {
                    stats.samples.push(format!("line {line}: invalid or duplicate metadata"));
                }
            }
        }
    }
    Ok((out, stats))
}

pub fn write_meta<'a>(path: &Path, meta: impl IntoIterator<Item = &'a ListenerMeta>) -> Result<()> {
    let mut t = Table::tsv(META_HEADER);
    for m in meta {
        t.push(vec![
            m.listener_id.clone(),
            m.gender.to_string(),
            m.age_bucket.start_year().to_string(),
        ]);
    }
    t.write(path)
}

/// Artist tags. The first tag listed for an artist wins.
pub fn parse_tags(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (line, f) in read_tsv(path, &TAG_HEADER)? {
        match f.as_slice() {
            [a, t] if !a.is_empty() && !t.is_empty() => {
                out.entry(a.clone()).or_insert_with(|| t.clone());
            }
            _ => return Err(parse_err(path, line, "expected artist_id and tag")),
        }
    }
    Ok(out)
}

pub fn write_tags(path: &Path, tags: &BTreeMap<String, String>) -> Result<()> {
    let mut t = Table::tsv(TAG_HEADER);
    for (a, g) in tags {
        t.push(vec![a.clone(), g.clone()]);
    }
    t.write(path)
}

/// One JSON document per line, in the given order.
pub fn write_aggregates(path: &Path, aggregates: &[PeriodAggregate]) -> Result<()> {
    let mut w = io::create(path)?;
    for a in aggregates {
        serde_json::to_writer(&mut w, a).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    io::finish(w, path)
}

pub fn for_each_aggregate(path: &Path, mut f: impl FnMut(PeriodAggregate) -> Result<()>) -> Result<()> {
    for (i, line) in io::open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let a: PeriodAggregate = serde_json::from_str(&line).map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        f(a)?;
    }
    Ok(())
}

pub fn read_aggregates(path: &Path) -> Result<Vec<PeriodAggregate>> {
    let mut out = Vec::new();
    for_each_aggregate(path, |a| {
        out.push(a);
        Ok(())
    })?;
    Ok(out)
}

fn location_header(holidays: &[String]) -> Vec<String> {
    let mut h: Vec<String> = ["listener_id", "modal_P1", "modal_P2", "modal_P3"].map(String::from).to_vec();
    h.extend(holidays.iter().map(|id| format!("holiday:{id}")));
    h
}

pub fn write_locations(path: &Path, locations: &[LocationSummary], holiday_ids: &[String]) -> Result<()> {
    let mut t = Table::tsv(location_header(holiday_ids));
    for l in locations {
        let mut row = vec![l.listener_id.to_string()];
        row.extend(l.modal.iter().map(|m| m.to_string()));
        row.extend(l.holidays.iter().map(|(_, m)| m.to_string()));
        t.push(row);
    }
    t.write(path)
}

pub fn read_locations(path: &Path) -> Result<Vec<LocationSummary>> {
    let text = io::read_text(path)?;
    let first = text.lines().next().unwrap_or_default();
    let holiday_ids: Vec<String> = first
        .split('\t')
        .skip(4)
        .map(|h| {
            h.strip_prefix("holiday:")
                .map(String::from)
                .ok_or_else(|| parse_err(path, 1, format!("bad holiday column {h:?}")))
        })
        .collect::<Result<_>>()?;
    let header = location_header(&holiday_ids);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = Vec::new();
    for (line, f) in read_tsv(path, &header)? {
        if f.len() != header.len() {
            return Err(parse_err(path, line, "wrong number of fields"));
        }
        let m = |s: &str| s.parse::<Modal>().map_err(|e| parse_err(path, line, e.to_string()));
        out.push(LocationSummary {
            listener_id: Arc::from(f[0].as_str()),
            modal: [m(&f[1])?, m(&f[2])?, m(&f[3])?],
            holidays: holiday_ids
                .iter()
                .zip(&f[4..])
                .map(|(id, v)| Ok((id.clone(), m(v)?)))
                .collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

pub fn write_eligibility(path: &Path, e: &Eligibility) -> Result<()> {
    let mut t = Table::tsv(["listener_id", "eligible", "reason"]);
    for (l, x) in e {
        t.push(vec![
            l.clone(),
            x.is_none().to_string(),
            x.map(|r| r.to_string()).unwrap_or_default(),
        ]);
    }
    t.write(path)
}

pub fn read_eligibility(path: &Path) -> Result<Eligibility> {
    let mut out = BTreeMap::new();
    for (line, f) in read_tsv(path, &["listener_id", "eligible", "reason"])? {
        let reason = match f.as_slice() {
            [_, e, r] if e == "true" && r.is_empty() => None,
            [_, e, r] if e == "false" => {
                Some(r.parse::<Exclusion>().map_err(|e| parse_err(path, line, e.to_string()))?)
            }
            _ => return Err(parse_err(path, line, "bad eligibility row")),
        };
        out.insert(f[0].clone(), reason);
    }
    Ok(out)
}

pub fn write_sampled_days(path: &Path, periods: &[SamplePeriod]) -> Result<()> {
    let mut t = Table::tsv(["period", "start", "end", "sampled_day"]);
    for p in periods {
        for d in &p.sampled_days {
            t.push(vec![p.id.to_string(), p.start.to_string(), p.end.to_string(), d.to_string()]);
        }
    }
    t.write(path)
}

pub fn read_sampled_days(path: &Path) -> Result<Vec<SamplePeriod>> {
    let mut by_period: BTreeMap<PeriodId, (NaiveDate, NaiveDate, Vec<NaiveDate>)> = BTreeMap::new();
    for (line, f) in read_tsv(path, &["period", "start", "end", "sampled_day"])? {
        let bad = |m: String| parse_err(path, line, m);
        let [p, s, e, d] = f.as_slice() else {
            return Err(bad("expected 4 fields".into()));
        };
        let p: PeriodId = p.parse().map_err(|e: Error| bad(e.to_string()))?;
        let date = |x: &str| x.parse::<NaiveDate>().map_err(|e| bad(e.to_string()));
        let (s, e, d) = (date(s)?, date(e)?, date(d)?);
        let entry = by_period.entry(p).or_insert((s, e, Vec::new()));
        if (entry.0, entry.1) != (s, e) {
            return Err(bad(format!("inconsistent range for {p}")));
        }
        entry.2.push(d);
    }
    by_period
        .into_iter()
        .map(|(p, (s, e, days))| SamplePeriod::new(p, s, e, days))
        .collect()
}
