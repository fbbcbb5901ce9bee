use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveTime};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;

use super::{alias, poisson, MoverKind, Planted, Population, ReleaseSampler, SessionSampler, SynthConfig};
use crate::error::{Error, Result};
use crate::ingest::{format_event, write_meta, write_tags, EVENT_HEADER};
use crate::io::{self, write_text};
use crate::model::{substream, substream_indexed, PeriodId};

/// Paths written by [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedFiles {
    pub events: PathBuf,
    pub meta: PathBuf,
    pub tags: PathBuf,
    pub ground_truth: PathBuf,
    pub run_config: PathBuf,
    pub event_count: u64,
}

/// Listeners generated per parallel batch; bounds memory on large runs.
const BATCH: usize = 2048;

/// A day of activity with the region and preference that apply to it.
struct ActiveDay<'a> {
    date: NaiveDate,
    region: usize,
    pref: &'a WeightedAliasIndex<f64>,
    mean_streams: f64,
}

struct Shared<'a> {
    pop: &'a Population,
    sessions: SessionSampler,
    release: ReleaseSampler,
    artist_rank: Option<WeightedAliasIndex<f64>>,
}

impl Shared<'_> {
    fn config(&self) -> &SynthConfig {
        &self.pop.config
    }

    fn artist(&self, genre: usize, rng: &mut ChaCha8Rng) -> &str {
        let apg = self.config().artists_per_genre;
        let rank = match &self.artist_rank {
            Some(w) => w.sample(rng),
            None => rng.random_range(0..apg),
        };
        &self.pop.artists[genre * apg + rank]
    }

    fn located(&self, home: usize, rng: &mut ChaCha8Rng) -> usize {
        let n = self.pop.regions.len();
        if n > 1 && rng.random::<f64>() < self.config().location_noise {
            let r = rng.random_range(0..n - 1);
            if r >= home {
                r + 1
            } else {
                r
            }
        } else {
            home
        }
    }

    /// Every event of one listener, formatted, in time order.
    fn listener_events(&self, l: &Planted, out: &mut Vec<u8>) -> u64 {
        let c = self.config();
        let mut rng = substream_indexed(c.seed, "synth/events", l.index as u64);
        let before = alias(&l.before);
        let after = alias(&l.after);
        let move_date = self.pop.periods[PeriodId::P2.index()].start;
        let mut days: Vec<ActiveDay> = Vec::new();
        for period in &self.pop.periods {
            let pref = if l.moved_in(period.id) { &after } else { &before };
            let mean = c.streams_per_period / period.sampled_days.len().max(1) as f64;
            for &date in &period.sampled_days {
                days.push(ActiveDay {
                    date,
                    region: l.region_in(period.id),
                    pref,
                    mean_streams: mean,
                });
            }
        }
        let holiday_regions = self.pop.holiday_regions(l, &mut rng);
        for (h, region) in c.run.holidays.iter().zip(holiday_regions) {
            let moved = l.kind == MoverKind::LongTerm || (l.kind == MoverKind::ShortTerm && h.start >= move_date);
            let pref = if moved { &after } else { &before };
            let mean = c.holiday_streams / h.days() as f64;
            for date in h.start.iter_days().take_while(|d| *d <= h.end) {
                days.push(ActiveDay {
                    date,
                    region,
                    pref,
                    mean_streams: mean,
                });
            }
        }
        days.sort_by_key(|d| d.date);

        let birth = l.bucket.midpoint();
        let mut written = 0u64;
        for day in days {
            let n = poisson(&mut rng, day.mean_streams);
            if n == 0 {
                continue;
            }
            let plays = self.sessions.sample(day.pref, n, &mut rng);
            let sessions = plays.iter().filter(|p| p.1).count() as i64;
            // Fit the day into 06:00-24:00: plays 3 minutes apart (closer on
            // very busy days) and sessions separated by more than 30 minutes.
            let window = 18 * 3600 - 60;
            let gap_budget = (window - sessions * 31 * 60).max(0);
            let step = (gap_budget / n as i64).clamp(1, 180);
            let spare = window - step * n as i64;
            let max_gap = (spare / sessions.max(1)).max(31 * 60);
            let mut t = day.date.and_time(NaiveTime::from_hms_opt(6, 0, 0).expect("valid time")).and_utc().timestamp();
            for (i, (genre, starts)) in plays.into_iter().enumerate() {
                if starts && i > 0 {
                    t += rng.random_range(31 * 60..=max_gap);
                } else if i > 0 {
                    t += step;
                }
                let artist = self.artist(genre, &mut rng);
                let year = self.release.sample(birth, &mut rng);
                let region = self.located(day.region, &mut rng);
                format_event(out, &l.id, t, artist, Some(year), Some(self.pop.regions[region]))
                    .expect("writing to memory cannot fail");
                written += 1;
            }
        }
        written
    }
}

/// Write a synthetic dataset to `out_dir`: events.tsv, meta.tsv, tags.tsv,
/// ground_truth.json and run.toml. Output depends only on the config.
pub fn generate(config: &SynthConfig, out_dir: &Path) -> Result<GeneratedFiles> {
    let pop = Population::plant(config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = GeneratedFiles {
        events: out_dir.join("events.tsv"),
        meta: out_dir.join("meta.tsv"),
        tags: out_dir.join("tags.tsv"),
        ground_truth: out_dir.join("ground_truth.json"),
        run_config: out_dir.join("run.toml"),
        event_count: 0,
    };
    let latest = config.run.last_year().expect("validated config has periods");
    let shared = Shared {
        pop: &pop,
        sessions: SessionSampler::new(config),
        release: ReleaseSampler::new(config, latest),
        artist_rank: config.zipf_exponent.map(|s| {
            let w: Vec<f64> = (1..=config.artists_per_genre).map(|r| (r as f64).powf(-s)).collect();
            WeightedAliasIndex::new(w).expect("positive weights")
        }),
    };

    let mut w = io::create(&files.events)?;
    writeln!(w, "{}", EVENT_HEADER.join("\t")).map_err(|e| Error::io(&files.events, e))?;
    let mut count = 0u64;
    for batch in pop.listeners.chunks(BATCH) {
        let chunks: Vec<(Vec<u8>, u64)> = batch
            .par_iter()
            .map(|l| {
                let mut buf = Vec::with_capacity(64 * (config.streams_per_period as usize * 3 + 64));
                let n = shared.listener_events(l, &mut buf);
                (buf, n)
            })
            .collect();
        for (buf, n) in chunks {
            w.write_all(&buf).map_err(|e| Error::io(&files.events, e))?;
            count += n;
        }
    }
    io::finish(w, &files.events)?;

    write_meta(&files.meta, pop.meta().values())?;
    let mut rng = substream(config.seed, "synth/tags");
    let truth = pop.truth();
    let tags: BTreeMap<String, String> = truth
        .artist_genre
        .iter()
        .filter(|_| rng.random::<f64>() < config.tag_coverage)
        .map(|(a, g)| (a.clone(), format!("genre-{g:03}")))
        .collect();
    write_tags(&files.tags, &tags)?;
    write_text(&files.ground_truth, &truth.to_json())?;
    write_text(&files.run_config, &config.run_config().to_toml())?;
    log::info!(
        "wrote {count} events for {} listeners and {} artists to {}",
        pop.listeners.len(),
        pop.artists.len(),
        out_dir.display()
    );
    Ok(GeneratedFiles {
        event_count: count,
        ..files
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_events;

    #[test]
    fn events_are_ordered_and_reproducible() {
        let c = SynthConfig {
            regions: 2,
            genres: 3,
            artists_per_genre: 4,
            listeners_per_region: 5,
            streams_per_period: 60.0,
            zipf_exponent: Some(1.0),
            ..SynthConfig::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = generate(&c, a.path()).unwrap();
        generate(&c, b.path()).unwrap();
        for name in ["events.tsv", "meta.tsv", "tags.tsv", "ground_truth.json", "run.toml"] {
            let x = std::fs::read(a.path().join(name)).unwrap();
            let y = std::fs::read(b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name} differs between runs");
        }
        let (events, stats) = parse_events(&fa.events).unwrap();
        assert_eq!(stats.malformed, 0);
        assert_eq!(events.len() as u64, fa.event_count);
        for w in events.windows(2) {
            if w[0].listener_id == w[1].listener_id {
                assert!(w[0].timestamp < w[1].timestamp);
            }
        }
        let run = crate::model::RunConfig::from_toml(&std::fs::read_to_string(&fa.run_config).unwrap()).unwrap();
        assert_eq!(run.k, 3);
        assert_eq!(run.top_n_artists, 12);
    }
}
