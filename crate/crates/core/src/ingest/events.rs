use std::io::{BufRead, BufReader, Write};
use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, NaiveDate, Utc};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{ListenEvent, RegionCode};

pub const EVENT_HEADER: [&str; 5] = ["listener_id", "timestamp", "artist_id", "release_year", "region_code"];

const MAX_SAMPLES: usize = 5;
const EARLIEST_RELEASE_YEAR: i32 = 1900;

/// One parsed event line borrowing from the line buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawEvent<'a> {
    pub listener_id: &'a str,
    /// Unix seconds, UTC.
    pub timestamp: i64,
    pub date: NaiveDate,
    pub artist_id: &'a str,
    pub release_year: Option<i32>,
    pub region: Option<RegionCode>,
}

impl RawEvent<'_> {
    pub fn to_event(&self) -> ListenEvent {
        ListenEvent {
            listener_id: self.listener_id.to_string(),
            timestamp: DateTime::from_timestamp(self.timestamp, 0).expect("parsed timestamp in range"),
            artist_id: self.artist_id.to_string(),
            release_year: self.release_year,
            region: self.region,
        }
    }
}

/// Outcome of parsing a single data line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineOutcome<'a> {
    Ok(RawEvent<'a>),
    /// Usable event with an unknown field; counts as malformed.
    Repaired(RawEvent<'a>, String),
    Rejected(String),
}

/// Counts of data lines read and malformed, with a few examples.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ParseStats {
    pub lines: usize,
    pub malformed: usize,
    /// Events skipped entirely (a subset of `malformed`).
    pub rejected: usize,
    pub samples: Vec<String>,
}

impl ParseStats {
    fn note(&mut self, line: usize, reason: &str) {
        self.malformed += 1;
        if self.samples.len() < MAX_SAMPLES {
            self.samples.push(format!("line {line}: {reason}"));
        }
    }

    /// Fail when more than 1% of data lines were malformed.
    pub fn check(&self, path: &Path) -> Result<()> {
        if self.malformed * 100 > self.lines {
            return Err(Error::TooManyMalformed {
                path: path.to_path_buf(),
                lines: self.lines,
                malformed: self.malformed,
                samples: self.samples.clone(),
            });
        }
        if self.malformed > 0 {
            log::warn!("{}: {} of {} lines malformed", path.display(), self.malformed, self.lines);
        }
        Ok(())
    }
}

fn parse_timestamp(s: &str) -> Option<i64> {
    let b = s.as_bytes();
    // Fast path for the canonical `YYYY-MM-DDTHH:MM:SSZ`.
    if b.len() == 20 && b[4] == b'-' && b[7] == b'-' && b[10] == b'T' && b[13] == b':' && b[16] == b':' && b[19] == b'Z' {
        let num = |r: std::ops::Range<usize>| -> Option<u32> {
            let mut v = 0u32;
            for &c in &b[r] {
                if !c.is_ascii_digit() {
                    return None;
                }
                v = v * 10 + u32::from(c - b'0');
            }
            Some(v)
        };
        let date = NaiveDate::from_ymd_opt(num(0..4)? as i32, num(5..7)?, num(8..10)?)?;
        let dt = date.and_hms_opt(num(11..13)?, num(14..16)?, num(17..19)?)?;
        return Some(dt.and_utc().timestamp());
    }
    DateTime::parse_from_rfc3339(s).ok().map(|d| d.with_timezone(&Utc).timestamp())
}

/// Parse one tab-separated event line (without the trailing newline).
pub fn parse_event_line(line: &str, max_release_year: i32) -> LineOutcome<'_> {
    let mut f = line.split('\t');
    let (Some(listener), Some(ts), Some(artist), Some(year), Some(region), None) =
        (f.next(), f.next(), f.next(), f.next(), f.next(), f.next())
    else {
        return LineOutcome::Rejected("expected 5 tab-separated fields".into());
    };
    if listener.is_empty() || artist.is_empty() {
        return LineOutcome::Rejected("empty listener or artist id".into());
    }
    let Some(timestamp) = parse_timestamp(ts) else {
        return LineOutcome::Rejected(format!("bad timestamp {ts:?}"));
    };
    let date = DateTime::from_timestamp(timestamp, 0).expect("in range").date_naive();
    let mut problem = None;
    let release_year = if year.is_empty() {
        None
    } else {
        match year.parse::<i32>() {
            Ok(y) if (EARLIEST_RELEASE_YEAR..=max_release_year).contains(&y) => Some(y),
            _ => {
                problem = Some(format!("bad release year {year:?}"));
                None
            }
        }
    };
    let region = if region.is_empty() {
        None
    } else {
        match RegionCode::new(region) {
            Some(r) => Some(r),
            None => {
                problem = Some(format!("bad region code {region:?}"));
                None
            }
        }
    };
    let ev = RawEvent {
        listener_id: listener,
        timestamp,
        date,
        artist_id: artist,
        release_year,
        region,
    };
    match problem {
        None => LineOutcome::Ok(ev),
        Some(p) => LineOutcome::Repaired(ev, p),
    }
}

fn current_year() -> i32 {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as i64);
    DateTime::from_timestamp(secs, 0).map_or(2100, |d| d.year())
}

/// Sequential reader over an event log.
pub struct EventReader {
    path: PathBuf,
    reader: BufReader<File>,
    buf: String,
    line_no: usize,
    max_release_year: i32,
    stats: ParseStats,
}

impl EventReader {
    /// Open `path` and check its header.
    pub fn open(path: &Path) -> Result<Self> {
        let mut reader = io::open(path)?;
        let mut buf = String::new();
        reader.read_line(&mut buf).map_err(|e| Error::io(path, e))?;
        let header: Vec<&str> = buf.trim_end_matches(['\n', '\r']).split('\t').collect();
        if header != EVENT_HEADER {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                message: format!("expected header {EVENT_HEADER:?}, found {header:?}"),
            });
        }
        Ok(Self {
            path: path.into(),
            reader,
            buf,
            line_no: 1,
            max_release_year: current_year(),
            stats: ParseStats::default(),
        })
    }

    pub fn with_max_release_year(mut self, year: i32) -> Self {
        self.max_release_year = year;
        self
    }

    pub fn stats(&self) -> &ParseStats {
        &self.stats
    }

    /// Visit every usable event in file order. Returns the parse statistics
    /// after applying the malformed-line limit.
    pub fn for_each(mut self, mut f: impl FnMut(&RawEvent<'_>)) -> Result<ParseStats> {
        loop {
            self.buf.clear();
            let n = self.reader.read_line(&mut self.buf).map_err(|e| Error::io(&self.path, e))?;
            if n == 0 {
                break;
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.is_empty() {
                continue;
            }
            self.stats.lines += 1;
            match parse_event_line(line, self.max_release_year) {
                LineOutcome::Ok(ev) => f(&ev),
                LineOutcome::Repaired(ev, why) => {
                    self.stats.note(self.line_no, &why);
                    f(&ev);
                }
                LineOutcome::Rejected(why) => {
                    self.stats.note(self.line_no, &why);
                    self.stats.rejected += 1;
                }
            }
        }
        self.stats.check(&self.path)?;
        Ok(self.stats)
    }
}

/// Read all events of a file into memory.
pub fn parse_events(path: &Path) -> Result<(Vec<ListenEvent>, ParseStats)> {
    let mut out = Vec::new();
    let stats = EventReader::open(path)?.for_each(|e| out.push(e.to_event()))?;
    Ok((out, stats))
}

/// Format one event as a data line.
pub fn format_event(
    out: &mut impl Write,
    listener: &str,
    timestamp: i64,
    artist: &str,
    release_year: Option<i32>,
    region: Option<RegionCode>,
) -> std::io::Result<()> {
    let ts = DateTime::from_timestamp(timestamp, 0).expect("timestamp in range");
    write!(out, "{listener}\t{}\t{artist}\t", ts.format("%Y-%m-%dT%H:%M:%SZ"))?;
    if let Some(y) = release_year {
        write!(out, "{y}")?;
    }
    out.write_all(b"\t")?;
    if let Some(r) = region {
        out.write_all(r.as_str().as_bytes())?;
    }
    out.write_all(b"\n")
}

pub fn write_events(path: &Path, events: &[ListenEvent]) -> Result<()> {
    let mut w = io::create(path)?;
    let res = (|| {
        writeln!(w, "{}", EVENT_HEADER.join("\t"))?;
        for e in events {
            format_event(&mut w, &e.listener_id, e.timestamp.timestamp(), &e.artist_id, e.release_year, e.region)?;
        }
        Ok(())
    })();
    res.map_err(|e| Error::io(path, e))?;
    io::finish(w, path)
}
