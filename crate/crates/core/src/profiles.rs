//! Listener taste profiles over data-derived genres.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::PeriodAggregate;
use crate::io::{fmt_num, read_csv, Table};
use crate::metrics::{rarefaction_curve, RarefactionMode};
use crate::model::{GenreTaxonomy, PeriodId, ProfileWindow, TasteProfile};

fn window_index(w: ProfileWindow) -> usize {
    match w {
        ProfileWindow::Period(p) => p.index(),
        ProfileWindow::Aggregate => 3,
    }
}

/// Per-listener profiles for P1, P2, P3 and the aggregate window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileSet {
    k: usize,
    listeners: BTreeMap<String, [TasteProfile; 4]>,
}

impl ProfileSet {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            listeners: BTreeMap::new(),
        }
    }

    /// Insert a listener's three period profiles; the aggregate is derived.
    pub fn insert(&mut self, listener: &str, periods: [Vec<u64>; 3]) -> Result<()> {
        if let Some(c) = periods.iter().find(|c| c.len() != self.k) {
            return Err(Error::invalid(format!("{listener}: profile has {} genres, expected {}", c.len(), self.k)));
        }
        let agg: Vec<u64> = (0..self.k).map(|g| periods.iter().map(|c| c[g]).sum()).collect();
        let [p1, p2, p3] = periods;
        let mk = |p, c| TasteProfile::new(listener, ProfileWindow::Period(p), c);
        self.listeners.insert(
            listener.to_string(),
            [
                mk(PeriodId::P1, p1),
                mk(PeriodId::P2, p2),
                mk(PeriodId::P3, p3),
                TasteProfile::new(listener, ProfileWindow::Aggregate, agg),
            ],
        );
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.listeners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.listeners.is_empty()
    }

    pub fn contains(&self, listener: &str) -> bool {
        self.listeners.contains_key(listener)
    }

    pub fn get(&self, listener: &str, window: ProfileWindow) -> Option<&TasteProfile> {
        self.listeners.get(listener).map(|w| &w[window_index(window)])
    }

    /// Like [`get`](Self::get) but a missing listener is an error.
    pub fn require(&self, listener: &str, window: ProfileWindow) -> Result<&TasteProfile> {
        self.get(listener, window)
            .ok_or_else(|| Error::IdMismatch(format!("no profile for listener {listener}")))
    }

    pub fn listeners(&self) -> impl Iterator<Item = &str> {
        self.listeners.keys().map(String::as_str)
    }

    /// Profiles of one window in listener order.
    pub fn window(&self, window: ProfileWindow) -> impl Iterator<Item = &TasteProfile> {
        let i = window_index(window);
        self.listeners.values().map(move |w| &w[i])
    }
}

/// Build profiles of the `eligible` listeners. Streams of artists outside the
/// taxonomy are not counted.
pub fn listener_profiles(
    aggregates: &[PeriodAggregate],
    taxonomy: &GenreTaxonomy,
    eligible: &BTreeSet<String>,
) -> Result<ProfileSet> {
    let k = taxonomy.k();
    let mut counts: BTreeMap<&str, [Vec<u64>; 3]> = eligible
        .iter()
        .map(|l| (l.as_str(), [vec![0; k], vec![0; k], vec![0; k]]))
        .collect();
    let (mut kept, mut dropped) = (0u64, 0u64);
    for a in aggregates {
        let Some(c) = counts.get_mut(&*a.listener_id) else {
            continue;
        };
        let row = &mut c[a.period.index()];
        for (artist, &n) in &a.artist_counts {
            match taxonomy.artist_to_genre.get(&**artist) {
                Some(&g) => {
                    row[g] += n;
                    kept += n;
                }
                None => dropped += n,
            }
        }
    }
    if kept + dropped > 0 {
        log::info!(
            "profiles: {} listeners, {:.1}% of streams from artists outside the taxonomy",
            counts.len(),
            100.0 * dropped as f64 / (kept + dropped) as f64
        );
    }
    let mut set = ProfileSet::new(k);
    for (l, c) in counts {
        set.insert(l, c)?;
    }
    Ok(set)
}

fn profile_header(k: usize) -> Vec<String> {
    let mut h = vec!["owner_id".to_string(), "window".to_string()];
    h.extend((0..k).map(|g| format!("g{g}")));
    h
}

/// Write profiles as CSV, one row per profile.
pub fn write_profiles<'a>(path: &Path, k: usize, profiles: impl IntoIterator<Item = &'a TasteProfile>) -> Result<()> {
    let mut t = Table::csv(profile_header(k));
    for p in profiles {
        let mut row = vec![p.owner_id().to_string(), p.window().to_string()];
        row.extend(p.counts().iter().map(u64::to_string));
        t.push(row);
    }
    t.write(path)
}

/// Read a profile CSV written by [`write_profiles`].
pub fn read_profiles(path: &Path) -> Result<Vec<TasteProfile>> {
    let text = crate::io::read_text(path)?;
    let k = text.lines().next().map_or(0, |h| h.split(',').count().saturating_sub(2));
    let header = profile_header(k);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = Vec::new();
    for (line, f) in read_csv(path, &header)? {
        let bad = |m: String| Error::Parse {
            path: path.into(),
            line,
            message: m,
        };
        if f.len() != k + 2 {
            return Err(bad(format!("expected {} fields", k + 2)));
        }
        let window: ProfileWindow = f[1].parse().map_err(|e: Error| bad(e.to_string()))?;
        let counts = f[2..]
            .iter()
            .map(|c| c.parse::<u64>().map_err(|e| bad(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        out.push(TasteProfile::new(f[0].clone(), window, counts));
    }
    Ok(out)
}

/// Reassemble a [`ProfileSet`] from period rows; aggregate rows are checked
/// against the sum of the periods.
pub fn profile_set_from(k: usize, profiles: &[TasteProfile]) -> Result<ProfileSet> {
    let mut periods: BTreeMap<&str, [Option<Vec<u64>>; 3]> = BTreeMap::new();
    let mut aggregates: BTreeMap<&str, &TasteProfile> = BTreeMap::new();
    for p in profiles {
        match p.window() {
            ProfileWindow::Period(id) => {
                periods.entry(p.owner_id()).or_default()[id.index()] = Some(p.counts().to_vec());
            }
            ProfileWindow::Aggregate => {
                aggregates.insert(p.owner_id(), p);
            }
        }
    }
    let mut set = ProfileSet::new(k);
    for (l, [a, b, c]) in periods {
        let (Some(a), Some(b), Some(c)) = (a, b, c) else {
            return Err(Error::invalid(format!("listener {l} lacks a profile for some period")));
        };
        set.insert(l, [a, b, c])?;
        if let Some(agg) = aggregates.get(l) {
            if set.get(l, ProfileWindow::Aggregate) != Some(*agg) {
                return Err(Error::invalid(format!("listener {l}: aggregate profile is not the sum of its periods")));
            }
        }
    }
    Ok(set)
}

/// One rarefaction row for one listener.
#[derive(Debug, Clone, PartialEq)]
pub struct ListenerRarefaction {
    pub listener_id: String,
    pub depth: usize,
    pub mean: f64,
    pub sd: f64,
}

/// Rarefaction curves of the aggregate profiles of up to `max_listeners`
/// listeners (the first ones in id order).
pub fn rarefaction_table(
    profiles: &ProfileSet,
    depths: &[usize],
    replicates: usize,
    seed: u64,
    max_listeners: usize,
    mode: RarefactionMode<'_>,
) -> Vec<ListenerRarefaction> {
    use rayon::prelude::*;
    let chosen: Vec<(usize, &TasteProfile)> =
        profiles.window(ProfileWindow::Aggregate).take(max_listeners).enumerate().collect();
    let per: Vec<Vec<ListenerRarefaction>> = chosen
        .par_iter()
        .map(|&(i, p)| {
            rarefaction_curve(p.counts(), depths, replicates, seed, i as u64, mode)
                .into_iter()
                .map(|r| ListenerRarefaction {
                    listener_id: p.owner_id().to_string(),
                    depth: r.depth,
                    mean: r.mean,
                    sd: r.sd,
                })
                .collect()
        })
        .collect();
    per.into_iter().flatten().collect()
}

pub fn write_rarefaction(path: &Path, rows: &[ListenerRarefaction]) -> Result<()> {
    let mut t = Table::csv(["listener_id", "depth", "mean", "sd"]);
    for r in rows {
        t.push(vec![r.listener_id.clone(), r.depth.to_string(), fmt_num(r.mean), fmt_num(r.sd)]);
    }
    t.write(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn taxonomy() -> GenreTaxonomy {
        let tree = crate::model::GenreTree::from_merges(2, &[(0, 1, 0.5)]).unwrap();
        GenreTaxonomy {
            artist_to_genre: [("a".to_string(), 0), ("b".to_string(), 1)].into_iter().collect(),
            genre_labels: vec!["x".into(), "y".into()],
            genre_distance: ndarray::array![[0.0, 1.0], [1.0, 0.0]],
            tree,
        }
    }

    fn agg(l: &str, p: PeriodId, counts: &[(&str, u64)]) -> PeriodAggregate {
        PeriodAggregate {
            listener_id: Arc::from(l),
            period: p,
            artist_counts: counts.iter().map(|(a, n)| (Arc::from(*a), *n)).collect(),
            region_counts: BTreeMap::new(),
            release_year_counts: BTreeMap::new(),
        }
    }

    #[test]
    fn builds_and_round_trips() {
        let aggs = vec![
            agg("u1", PeriodId::P1, &[("a", 3), ("b", 1), ("zz", 9)]),
            agg("u1", PeriodId::P3, &[("b", 2)]),
            agg("u2", PeriodId::P2, &[("a", 5)]),
        ];
        let eligible: BTreeSet<String> = ["u1".to_string()].into_iter().collect();
        let set = listener_profiles(&aggs, &taxonomy(), &eligible).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.get("u1", ProfileWindow::Period(PeriodId::P1)).unwrap().counts(), &[3, 1]);
        assert_eq!(set.get("u1", ProfileWindow::Period(PeriodId::P2)).unwrap().total(), 0);
        assert_eq!(set.get("u1", ProfileWindow::Aggregate).unwrap().counts(), &[3, 3]);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let all: Vec<&TasteProfile> = ProfileWindow::ALL.iter().flat_map(|w| set.window(*w)).collect();
        write_profiles(&path, 2, all.iter().copied()).unwrap();
        let back = read_profiles(&path).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(profile_set_from(2, &back).unwrap(), set);
    }
}
