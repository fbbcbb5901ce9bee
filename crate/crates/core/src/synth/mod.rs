//! Synthetic listener populations with planted structure.
//!
//! Regions get Dirichlet genre preferences. A listener mixes its region's
//! preference with a personal Dirichlet draw (weight `lambda` on the
//! region). Movers relocate to another region and shift their preference
//! toward it by the adoption rate `adoption`. Streams come in sessions
//! that mostly stay within one genre, so genres can be recovered from
//! artist successions.

mod generate;
mod score;

pub use generate::{generate, GeneratedFiles};
pub use score::{score_recovery, Detection, PipelineOutputs, RecoveryReport};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Gamma, Geometric, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{LocationSummary, Modal};
use crate::model::{
    resolve_periods, substream, substream_indexed, AgeBucket, Gender, ListenerMeta, PeriodId, RegionCode,
    RunConfig, SamplePeriod,
};
use crate::profiles::ProfileSet;

/// Region codes handed out in order.
const REGION_CODES: [&str; 51] = [
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "DC", "FL", "GA", "HI", "ID", "IL", "IN", "IA", "KS", "KY",
    "LA", "ME", "MD", "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM", "NY", "NC", "ND", "OH",
    "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY",
];

/// Parameters of a synthetic population. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub seed: u64,
    pub regions: usize,
    pub genres: usize,
    pub artists_per_genre: usize,
    pub listeners_per_region: usize,
    /// Dirichlet parameter of region preferences.
    pub region_concentration: f64,
    /// Dirichlet parameter of personal preferences.
    pub individual_concentration: f64,
    /// Weight of the region preference in a listener's preference.
    pub lambda: f64,
    pub mover_fraction: f64,
    /// Share of movers relocating between P1 and P2; the rest moved before P1.
    pub short_term_share: f64,
    /// Weight of the destination-based preference after a move.
    pub adoption: f64,
    /// Probability that a mover spends a post-move holiday at the origin.
    pub holiday_probability: f64,
    /// Poisson mean of streams per listener per period.
    pub streams_per_period: f64,
    /// Poisson mean of streams per listener per holiday window.
    pub holiday_streams: f64,
    pub mean_session_length: f64,
    /// Chance that a stream re-draws its genre within a session.
    pub genre_switch: f64,
    /// Zipf exponent of artist popularity within a genre; uniform if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zipf_exponent: Option<f64>,
    /// Share of artists that carry a genre tag.
    pub tag_coverage: f64,
    /// Share of sampled-day streams located in a random other region.
    pub location_noise: f64,
    pub first_age_bucket: i32,
    pub last_age_bucket: i32,
    /// Share of streams released around the listener's age `peak_age`.
    pub adolescence_weight: f64,
    /// Share of streams of recent releases.
    pub recency_weight: f64,
    pub peak_age: f64,
    pub peak_spread: f64,
    pub earliest_release: i32,
    /// Region preferences to plant instead of Dirichlet draws, one per region.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_preferences: Option<Vec<Vec<f64>>>,
    /// Periods, holidays and analysis settings written alongside the data.
    pub run: RunConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            regions: 10,
            genres: 20,
            artists_per_genre: 25,
            listeners_per_region: 300,
            region_concentration: 0.5,
            individual_concentration: 0.5,
            lambda: 0.7,
            mover_fraction: 0.2,
            short_term_share: 0.5,
            adoption: 0.5,
            holiday_probability: 0.8,
            streams_per_period: 300.0,
            holiday_streams: 30.0,
            mean_session_length: 8.0,
            genre_switch: 0.1,
            zipf_exponent: None,
            tag_coverage: 1.0,
            location_noise: 0.02,
            first_age_bucket: 1950,
            last_age_bucket: 2000,
            adolescence_weight: 0.5,
            recency_weight: 0.3,
            peak_age: 15.0,
            peak_spread: 2.5,
            earliest_release: 1950,
            region_preferences: None,
            run: RunConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("synth config serializes")
    }

    /// Constraint violations; empty when the config is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                v.push(msg.to_string());
            }
        };
        need((1..=REGION_CODES.len()).contains(&self.regions), "regions must be between 1 and 51");
        need(self.genres >= 2, "genres must be at least 2");
        need(self.artists_per_genre >= 1, "artists_per_genre must be positive");
        need(self.listeners_per_region >= 1, "listeners_per_region must be positive");
        need(self.region_concentration > 0.0, "region_concentration must be positive");
        need(self.individual_concentration > 0.0, "individual_concentration must be positive");
        for (name, x) in [
            ("lambda", self.lambda),
            ("mover_fraction", self.mover_fraction),
            ("short_term_share", self.short_term_share),
            ("adoption", self.adoption),
            ("holiday_probability", self.holiday_probability),
            ("genre_switch", self.genre_switch),
            ("tag_coverage", self.tag_coverage),
            ("location_noise", self.location_noise),
            ("adolescence_weight", self.adolescence_weight),
            ("recency_weight", self.recency_weight),
        ] {
            need((0.0..=1.0).contains(&x), &format!("{name} must lie in [0, 1]"));
        }
        need(self.adolescence_weight + self.recency_weight <= 1.0, "adolescence_weight + recency_weight must be at most 1");
        need(self.location_noise < 0.5, "location_noise must be below 0.5");
        need(self.mover_fraction == 0.0 || self.regions >= 2, "movers need at least 2 regions");
        need(self.streams_per_period > 0.0, "streams_per_period must be positive");
        need(self.holiday_streams > 0.0, "holiday_streams must be positive");
        need(self.mean_session_length >= 1.0, "mean_session_length must be at least 1");
        need(self.peak_spread > 0.0, "peak_spread must be positive");
        need(self.zipf_exponent.is_none_or(|s| s >= 0.0), "zipf_exponent must be non-negative");
        if let Some(prefs) = &self.region_preferences {
            need(prefs.len() == self.regions, "region_preferences needs one vector per region");
            need(
                prefs.iter().all(|p| {
                    p.len() == self.genres && p.iter().all(|x| x.is_finite() && *x >= 0.0) && p.iter().sum::<f64>() > 0.0
                }),
                "each region preference needs one non-negative weight per genre and positive mass",
            );
        }
        need(
            AgeBucket::new(self.first_age_bucket).is_ok()
                && AgeBucket::new(self.last_age_bucket).is_ok()
                && self.first_age_bucket <= self.last_age_bucket,
            "age bucket range is invalid",
        );
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            if self.streams_per_period < 200.0 {
                log::warn!(
                    "streams_per_period {} is below the 200 streams a profile needs to level out",
                    self.streams_per_period
                );
            }
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    pub fn listener_count(&self) -> usize {
        self.regions * self.listeners_per_region
    }

    pub fn artist_count(&self) -> usize {
        self.genres * self.artists_per_genre
    }

    /// Analysis settings matching this population.
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            k: self.genres,
            top_n_artists: self.artist_count(),
            ..self.run.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoverKind {
    Stayer,
    /// Relocated between P1 and P2.
    ShortTerm,
    /// Relocated before P1.
    LongTerm,
}

/// Planted facts about one listener.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListenerTruth {
    pub origin: RegionCode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub destination: Option<RegionCode>,
    pub kind: MoverKind,
    pub adoption: f64,
    pub gender: Gender,
    pub age_bucket: AgeBucket,
}

/// Everything planted in a synthetic dataset. Never read by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub seed: u64,
    pub id_tag: String,
    pub config: SynthConfig,
    pub artist_genre: BTreeMap<String, usize>,
    pub region_preferences: BTreeMap<RegionCode, Vec<f64>>,
    pub listeners: BTreeMap<String, ListenerTruth>,
}

impl GroundTruth {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ground truth serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            what: "ground truth",
            message: e.to_string(),
        })
    }
}

/// Short hex tag derived from the seed and embedded in every listener id.
pub fn id_tag(seed: u64) -> String {
    format!("{:06x}", substream(seed, "id-tag").random::<u32>() & 0xff_ffff)
}

fn dirichlet(rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("positive shape");
    loop {
        let x: Vec<f64> = (0..k).map(|_| g.sample(rng)).collect();
        let s: f64 = x.iter().sum();
        if s > 0.0 && s.is_finite() {
            return x.into_iter().map(|v| v / s).collect();
        }
    }
}

fn mix(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
}

/// One planted listener.
#[derive(Debug, Clone)]
pub(crate) struct Planted {
    pub index: usize,
    pub id: String,
    pub origin: usize,
    pub destination: Option<usize>,
    pub kind: MoverKind,
    pub gender: Gender,
    pub bucket: AgeBucket,
    /// Preference before a short-term move and in the absence of any move.
    pub before: Vec<f64>,
    /// Preference after the move.
    pub after: Vec<f64>,
}

impl Planted {
    /// Whether the listener lives at its destination during a period.
    pub fn moved_in(&self, p: PeriodId) -> bool {
        !matches!((self.kind, p), (MoverKind::Stayer, _) | (MoverKind::ShortTerm, PeriodId::P1))
    }

    /// Region of residence during a period.
    pub fn region_in(&self, p: PeriodId) -> usize {
        if self.moved_in(p) {
            self.destination.expect("movers have a destination")
        } else {
            self.origin
        }
    }

    pub fn preference_in(&self, p: PeriodId) -> &[f64] {
        if self.moved_in(p) {
            &self.after
        } else {
            &self.before
        }
    }

    /// Home before and after the move date.
    fn home(&self, after_move: bool) -> usize {
        match self.kind {
            MoverKind::Stayer => self.origin,
            MoverKind::ShortTerm if !after_move => self.origin,
            _ => self.destination.expect("movers have a destination"),
        }
    }
}

/// Region preferences, artists and listeners of a synthetic population.
pub(crate) struct Population {
    pub config: SynthConfig,
    pub tag: String,
    pub regions: Vec<RegionCode>,
    pub region_pref: Vec<Vec<f64>>,
    /// Artist ids, indexed by `genre * artists_per_genre + rank`.
    pub artists: Vec<String>,
    pub listeners: Vec<Planted>,
    pub periods: Vec<SamplePeriod>,
}

impl Population {
    pub fn plant(config: &SynthConfig) -> Result<Self> {
        config.validate()?;
        let run = config.run_config();
        let periods = resolve_periods(&run)?;
        let k = config.genres;
        let mut rng = substream(config.seed, "synth/regions");
        let regions: Vec<RegionCode> =
            REGION_CODES[..config.regions].iter().map(|c| c.parse().expect("valid code")).collect();
        let region_pref: Vec<Vec<f64>> = match &config.region_preferences {
            Some(prefs) => prefs
                .iter()
                .map(|p| {
                    let s: f64 = p.iter().sum();
                    p.iter().map(|x| x / s).collect()
                })
                .collect(),
            None => (0..config.regions).map(|_| dirichlet(&mut rng, k, config.region_concentration)).collect(),
        };

        let n_artists = config.artist_count();
        let mut ids: Vec<usize> = (0..n_artists).collect();
        let mut rng = substream(config.seed, "synth/artists");
        for i in (1..ids.len()).rev() {
            let j = rng.random_range(0..=i);
            ids.swap(i, j);
        }
        let width = n_artists.to_string().len().max(4);
        let artists: Vec<String> = ids.iter().map(|i| format!("ar{i:0width$}")).collect();

        let tag = id_tag(config.seed);
        let buckets: Vec<AgeBucket> = (config.first_age_bucket..=config.last_age_bucket)
            .step_by(5)
            .map(|y| AgeBucket::new(y).expect("validated"))
            .collect();
        let n = config.listener_count();
        let listeners: Vec<Planted> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream_indexed(config.seed, "synth/listener", i as u64);
                let origin = i / config.listeners_per_region;
                let personal = dirichlet(&mut rng, k, config.individual_concentration);
                let pref = |r: usize| mix(&personal, &region_pref[r], config.lambda);
                let mover = rng.random::<f64>() < config.mover_fraction;
                let (kind, destination) = if mover {
                    let kind = if rng.random::<f64>() < config.short_term_share {
                        MoverKind::ShortTerm
                    } else {
                        MoverKind::LongTerm
                    };
                    let mut d = rng.random_range(0..config.regions - 1);
                    if d >= origin {
                        d += 1;
                    }
                    (kind, Some(d))
                } else {
                    (MoverKind::Stayer, None)
                };
                let u: f64 = rng.random();
                let gender = if u < 0.48 {
                    Gender::F
                } else if u < 0.96 {
                    Gender::M
                } else {
                    Gender::X
                };
                let bucket = buckets[rng.random_range(0..buckets.len())];
                let before = pref(origin);
                let after = match destination {
                    Some(d) => mix(&before, &pref(d), config.adoption),
                    None => before.clone(),
                };
                Planted {
                    index: i,
                    id: format!("u{tag}-{i:06}"),
                    origin,
                    destination,
                    kind,
                    gender,
                    bucket,
                    before,
                    after,
                }
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            tag,
            regions,
            region_pref,
            artists,
            listeners,
            periods,
        })
    }

    pub fn meta(&self) -> BTreeMap<String, ListenerMeta> {
        self.listeners
            .iter()
            .map(|l| {
                (
                    l.id.clone(),
                    ListenerMeta {
                        listener_id: l.id.clone(),
                        gender: l.gender,
                        age_bucket: l.bucket,
                    },
                )
            })
            .collect()
    }

    pub fn truth(&self) -> GroundTruth {
        let apg = self.config.artists_per_genre;
        GroundTruth {
            seed: self.config.seed,
            id_tag: self.tag.clone(),
            config: self.config.clone(),
            artist_genre: self.artists.iter().enumerate().map(|(i, a)| (a.clone(), i / apg)).collect(),
            region_preferences: self.regions.iter().copied().zip(self.region_pref.iter().cloned()).collect(),
            listeners: self
                .listeners
                .iter()
                .map(|l| {
                    (
                        l.id.clone(),
                        ListenerTruth {
                            origin: self.regions[l.origin],
                            destination: l.destination.map(|d| self.regions[d]),
                            kind: l.kind,
                            adoption: if l.kind == MoverKind::Stayer { 0.0 } else { self.config.adoption },
                            gender: l.gender,
                            age_bucket: l.bucket,
                        },
                    )
                })
                .collect(),
        }
    }

    /// Holiday regions of a listener, one per configured window. A mover
    /// spends each holiday after its move at the origin with probability
    /// `holiday_probability`.
    pub fn holiday_regions(&self, l: &Planted, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let move_date = self.periods[PeriodId::P2.index()].start;
        self.config
            .run
            .holidays
            .iter()
            .map(|h| {
                let after = h.start >= move_date;
                let home = l.home(after);
                let away = l.kind == MoverKind::LongTerm || (l.kind == MoverKind::ShortTerm && after);
                if away && rng.random::<f64>() < self.config.holiday_probability {
                    l.origin
                } else {
                    home
                }
            })
            .collect()
    }
}

/// Draws genre sequences in sessions.
pub(crate) struct SessionSampler {
    session_len: Geometric,
    switch: f64,
}

impl SessionSampler {
    pub fn new(config: &SynthConfig) -> Self {
        Self {
            session_len: Geometric::new(1.0 / config.mean_session_length).expect("valid mean"),
            switch: config.genre_switch,
        }
    }

    /// `n` genres split into sessions; returns (genre, starts a session).
    pub fn sample(&self, pref: &WeightedAliasIndex<f64>, n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, bool)> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let len = 1 + self.session_len.sample(rng) as usize;
            let mut g = pref.sample(rng);
            for i in 0..len.min(n - out.len()) {
                if i > 0 && rng.random::<f64>() < self.switch {
                    g = pref.sample(rng);
                }
                out.push((g, i == 0));
            }
        }
        out
    }
}

pub(crate) fn alias(pref: &[f64]) -> WeightedAliasIndex<f64> {
    WeightedAliasIndex::new(pref.to_vec()).expect("preference has positive mass")
}

pub(crate) fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

/// Release year of one stream for a listener born around `birth`.
pub(crate) struct ReleaseSampler {
    peak: Normal<f64>,
    adolescence: f64,
    recency: f64,
    earliest: i32,
    latest: i32,
}

impl ReleaseSampler {
    pub fn new(config: &SynthConfig, latest: i32) -> Self {
        Self {
            peak: Normal::new(config.peak_age, config.peak_spread).expect("positive spread"),
            adolescence: config.adolescence_weight,
            recency: config.recency_weight,
            earliest: config.earliest_release.min(latest),
            latest,
        }
    }

    pub fn sample(&self, birth: i32, rng: &mut ChaCha8Rng) -> i32 {
        let u: f64 = rng.random();
        let y = if u < self.adolescence {
            birth + self.peak.sample(rng).round() as i32
        } else if u < self.adolescence + self.recency {
            // Exponential decay with a three-year mean age.
            self.latest - (-3.0 * (1.0 - rng.random::<f64>()).ln()).floor() as i32
        } else {
            rng.random_range(self.earliest..=self.latest)
        };
        y.clamp(self.earliest, self.latest)
    }
}

/// A population reduced to profiles over the planted genres, skipping the
/// event log. Locations are exact.
pub struct ProfilePopulation {
    pub truth: GroundTruth,
    pub profiles: ProfileSet,
    pub locations: Vec<LocationSummary>,
    pub meta: BTreeMap<String, ListenerMeta>,
    pub eligible: BTreeSet<String>,
}

/// Build planted-genre profiles directly from the session model. Listeners
/// with fewer than `min_streams` streams in any period are not eligible.
pub fn synthesize_profiles(config: &SynthConfig, min_streams: u64) -> Result<ProfilePopulation> {
    let pop = Population::plant(config)?;
    let k = config.genres;
    let sessions = SessionSampler::new(config);
    let rows: Vec<([Vec<u64>; 3], LocationSummary)> = pop
        .listeners
        .par_iter()
        .map(|l| {
            let mut rng = substream_indexed(config.seed, "synth/streams", l.index as u64);
            let counts = PeriodId::ALL.map(|p| {
                let days = pop.periods[p.index()].sampled_days.len().max(1);
                let pref = alias(l.preference_in(p));
                let mut c = vec![0u64; k];
                for _ in 0..days {
                    let n = poisson(&mut rng, config.streams_per_period / days as f64);
                    for (g, _) in sessions.sample(&pref, n, &mut rng) {
                        c[g] += 1;
                    }
                }
                c
            });
            let holidays = pop.holiday_regions(l, &mut rng);
            let region = |r: usize| Modal::Region(pop.regions[r]);
            let loc = LocationSummary {
                listener_id: Arc::from(l.id.as_str()),
                modal: PeriodId::ALL.map(|p| region(l.region_in(p))),
                holidays: config.run.holidays.iter().zip(holidays).map(|(h, r)| (h.id.clone(), region(r))).collect(),
            };
            (counts, loc)
        })
        .collect();
    let mut profiles = ProfileSet::new(k);
    let mut eligible = BTreeSet::new();
    let mut locations = Vec::with_capacity(rows.len());
    for (l, (counts, loc)) in pop.listeners.iter().zip(rows) {
        if counts.iter().all(|c| c.iter().sum::<u64>() >= min_streams) {
            eligible.insert(l.id.clone());
        }
        profiles.insert(&l.id, counts)?;
        locations.push(loc);
    }
    Ok(ProfilePopulation {
        truth: pop.truth(),
        meta: pop.meta(),
        profiles,
        locations,
        eligible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProfileWindow;

    fn small() -> SynthConfig {
        SynthConfig {
            regions: 3,
            genres: 4,
            artists_per_genre: 3,
            listeners_per_region: 20,
            mover_fraction: 0.5,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn planting_rules() {
        for adoption in [0.0, 1.0] {
            let c = SynthConfig {
                adoption,
                lambda: 1.0,
                ..small()
            };
            let pop = Population::plant(&c).unwrap();
            for l in pop.listeners.iter().filter(|l| l.kind != MoverKind::Stayer) {
                let d = l.destination.unwrap();
                assert_ne!(d, l.origin);
                let want = if adoption == 0.0 { &pop.region_pref[l.origin] } else { &pop.region_pref[d] };
                for (a, b) in l.after.iter().zip(want) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn deterministic_and_tagged() {
        let a = synthesize_profiles(&small(), 0).unwrap();
        let b = synthesize_profiles(&small(), 0).unwrap();
        assert_eq!(a.profiles, b.profiles);
        assert_eq!(a.truth, b.truth);
        let tag = id_tag(0);
        assert!(a.truth.listeners.keys().all(|id| id.contains(&tag)));
        assert_ne!(tag, id_tag(1));
        let p = a.profiles.get(a.profiles.listeners().next().unwrap(), ProfileWindow::Aggregate).unwrap();
        assert!(p.total() > 500);
        assert_eq!(GroundTruth::from_json(&a.truth.to_json()).unwrap(), a.truth);
    }

    #[test]
    fn holidays_follow_plant() {
        let c = SynthConfig {
            holiday_probability: 1.0,
            ..small()
        };
        let pop = synthesize_profiles(&c, 0).unwrap();
        for loc in &pop.locations {
            let t = &pop.truth.listeners[&*loc.listener_id];
            let origin = Modal::Region(t.origin);
            match t.kind {
                MoverKind::LongTerm => assert!(loc.holidays.iter().all(|(_, m)| *m == origin)),
                MoverKind::Stayer => assert!(loc.holidays.iter().all(|(_, m)| *m == origin)),
                MoverKind::ShortTerm => assert_eq!(loc.holidays[0].1, origin),
            }
        }
    }

    #[test]
    fn bad_config_is_rejected() {
        let c = SynthConfig {
            artists_per_genre: 0,
            lambda: 1.5,
            ..SynthConfig::default()
        };
        assert_eq!(c.violations().len(), 2);
        assert!(matches!(Population::plant(&c), Err(Error::Config(_))));
    }
}
