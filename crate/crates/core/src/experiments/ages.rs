use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::PeriodAggregate;
use crate::io::{fmt_num, Table};
use crate::model::{AgeBucket, ListenerMeta};
use crate::stats::zscores;

/// Stream release-year counts per age bucket of the listeners in `eligible`
/// (all listeners with metadata when `None`).
fn year_counts_by_bucket(
    aggregates: &[PeriodAggregate],
    meta: &BTreeMap<String, ListenerMeta>,
    eligible: Option<&BTreeSet<String>>,
) -> BTreeMap<AgeBucket, BTreeMap<i32, u64>> {
    let mut out: BTreeMap<AgeBucket, BTreeMap<i32, u64>> = BTreeMap::new();
    for a in aggregates {
        if eligible.is_some_and(|e| !e.contains(&*a.listener_id)) {
            continue;
        }
        let Some(m) = meta.get(&*a.listener_id) else {
            continue;
        };
        let row = out.entry(m.age_bucket).or_default();
        for (&y, &n) in &a.release_year_counts {
            *row.entry(y).or_insert(0) += n;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongAgeRow {
    pub age_bucket: AgeBucket,
    /// Reference year minus release year, at least 0.
    pub song_age: i32,
    pub streams: u64,
    /// Share of the age group's streams.
    pub fraction: f64,
}

/// Distribution of song age per listener age group. The reference year
/// defaults to the latest release year present. Releases after the
/// reference year are counted at age 0.
pub fn song_age_distribution(
    aggregates: &[PeriodAggregate],
    meta: &BTreeMap<String, ListenerMeta>,
    eligible: Option<&BTreeSet<String>>,
    reference_year: Option<i32>,
) -> (Option<i32>, Vec<SongAgeRow>) {
    let by_bucket = year_counts_by_bucket(aggregates, meta, eligible);
    let latest = by_bucket.values().filter_map(|m| m.keys().next_back().copied()).max();
    let Some(reference) = reference_year.or(latest) else {
        return (None, Vec::new());
    };
    let mut clamped = 0u64;
    let mut rows = Vec::new();
    for (bucket, years) in by_bucket {
        let mut ages: BTreeMap<i32, u64> = BTreeMap::new();
        for (y, n) in years {
            let age = reference - y;
            if age < 0 {
                clamped += n;
            }
            *ages.entry(age.max(0)).or_insert(0) += n;
        }
        let total: u64 = ages.values().sum();
        if total == 0 {
            continue;
        }
        rows.extend(ages.into_iter().map(|(song_age, streams)| SongAgeRow {
            age_bucket: bucket,
            song_age,
            streams,
            fraction: streams as f64 / total as f64,
        }));
    }
    if clamped > 0 {
        log::warn!("{clamped} streams of songs released after {reference} counted at song age 0");
    }
    (Some(reference), rows)
}

/// Which way the age-at-release matrix is standardized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZAxis {
    /// Within each listener-age column, across release years.
    #[default]
    Column,
    /// Within each release-year row, across listener ages.
    Row,
}

/// Release year × listener age at release.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeMatrix {
    pub release_years: Vec<i32>,
    pub ages: Vec<i32>,
    pub counts: Vec<Vec<u64>>,
    /// Share of the release year's streams; `None` where masked.
    pub fractions: Vec<Vec<Option<f64>>>,
    pub z: Vec<Vec<Option<f64>>>,
    pub axis: ZAxis,
}

impl AgeMatrix {
    /// Listener age with the largest z-score in each row that has any
    /// unmasked cell.
    pub fn row_argmax(&self) -> Vec<(i32, i32)> {
        self.z
            .iter()
            .zip(&self.release_years)
            .filter_map(|(row, &y)| {
                let mut best: Option<(usize, f64)> = None;
                for (j, v) in row.iter().enumerate() {
                    if let Some(v) = *v {
                        if best.is_none_or(|(_, b)| v > b) {
                            best = Some((j, v));
                        }
                    }
                }
                best.map(|(j, _)| (y, self.ages[j]))
            })
            .collect()
    }

    pub fn unmasked_cells(&self) -> usize {
        self.z.iter().flatten().filter(|v| v.is_some()).count()
    }

    /// Wide CSV of z-scores; masked cells are empty.
    pub fn z_table(&self) -> Table {
        let mut header = vec!["release_year".to_string()];
        header.extend(self.ages.iter().map(|a| format!("age_{a}")));
        let mut t = Table::csv(header);
        for (y, row) in self.release_years.iter().zip(&self.z) {
            let mut r = vec![y.to_string()];
            r.extend(row.iter().map(|v| v.map(fmt_num).unwrap_or_default()));
            t.push(r);
        }
        t
    }

    /// Long CSV with counts, fractions and z-scores of every non-empty cell.
    pub fn long_table(&self) -> Table {
        let mut t = Table::csv(["release_year", "listener_age", "streams", "fraction", "z"]);
        for (i, y) in self.release_years.iter().enumerate() {
            for (j, a) in self.ages.iter().enumerate() {
                if self.counts[i][j] == 0 {
                    continue;
                }
                t.push(vec![
                    y.to_string(),
                    a.to_string(),
                    self.counts[i][j].to_string(),
                    self.fractions[i][j].map(fmt_num).unwrap_or_default(),
                    self.z[i][j].map(fmt_num).unwrap_or_default(),
                ]);
            }
        }
        t
    }
}

fn standardize(values: &[f64]) -> Vec<f64> {
    if values.len() < 2 {
        log::debug!("z-score of a single unmasked cell set to 0");
        return vec![0.0; values.len()];
    }
    zscores(values).unwrap_or_else(|_| vec![0.0; values.len()])
}

/// Share of each release year's streams by listener age at release, with
/// the birth year approximated by the age bucket midpoint. Cells with fewer
/// than `min_cell_streams` streams (and empty cells) are masked before
/// standardizing.
pub fn age_at_release_matrix(
    aggregates: &[PeriodAggregate],
    meta: &BTreeMap<String, ListenerMeta>,
    eligible: Option<&BTreeSet<String>>,
    min_cell_streams: u64,
    axis: ZAxis,
) -> AgeMatrix {
    let mut cells: BTreeMap<(i32, i32), u64> = BTreeMap::new();
    for (bucket, years) in year_counts_by_bucket(aggregates, meta, eligible) {
        for (y, n) in years {
            *cells.entry((y, y - bucket.midpoint())).or_insert(0) += n;
        }
    }
    let release_years: Vec<i32> = cells.keys().map(|k| k.0).collect::<BTreeSet<_>>().into_iter().collect();
    let ages: Vec<i32> = cells.keys().map(|k| k.1).collect::<BTreeSet<_>>().into_iter().collect();
    let col: BTreeMap<i32, usize> = ages.iter().enumerate().map(|(j, a)| (*a, j)).collect();
    let mut counts = vec![vec![0u64; ages.len()]; release_years.len()];
    for (i, y) in release_years.iter().enumerate() {
        for (&(_, a), &n) in cells.range((*y, i32::MIN)..=(*y, i32::MAX)) {
            counts[i][col[&a]] = n;
        }
    }
    let fractions: Vec<Vec<Option<f64>>> = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&n| (n > 0 && n >= min_cell_streams).then(|| n as f64 / total as f64))
                .collect()
        })
        .collect();
    let mut z = vec![vec![None; ages.len()]; release_years.len()];
    match axis {
        ZAxis::Column => {
            for j in 0..ages.len() {
                let idx: Vec<usize> = (0..release_years.len()).filter(|&i| fractions[i][j].is_some()).collect();
                let v: Vec<f64> = idx.iter().map(|&i| fractions[i][j].expect("unmasked")).collect();
                for (&i, s) in idx.iter().zip(standardize(&v)) {
                    z[i][j] = Some(s);
                }
            }
        }
        ZAxis::Row => {
            for (i, row) in fractions.iter().enumerate() {
                let idx: Vec<usize> = (0..ages.len()).filter(|&j| row[j].is_some()).collect();
                let v: Vec<f64> = idx.iter().map(|&j| row[j].expect("unmasked")).collect();
                for (&j, s) in idx.iter().zip(standardize(&v)) {
                    z[i][j] = Some(s);
                }
            }
        }
    }
    AgeMatrix {
        release_years,
        ages,
        counts,
        fractions,
        z,
        axis,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Gender, PeriodId};
    use std::sync::Arc;

    fn setup(rows: &[(&str, i32, &[(i32, u64)])]) -> (Vec<PeriodAggregate>, BTreeMap<String, ListenerMeta>) {
        let mut aggs = Vec::new();
        let mut meta = BTreeMap::new();
        for (id, bucket, years) in rows {
            aggs.push(PeriodAggregate {
                listener_id: Arc::from(*id),
                period: PeriodId::P1,
                artist_counts: BTreeMap::new(),
                region_counts: BTreeMap::new(),
                release_year_counts: years.iter().copied().collect(),
            });
            meta.insert(
                id.to_string(),
                ListenerMeta {
                    listener_id: id.to_string(),
                    gender: Gender::X,
                    age_bucket: AgeBucket::new(*bucket).unwrap(),
                },
            );
        }
        (aggs, meta)
    }

    #[test]
    fn song_age_tally() {
        let (aggs, meta) = setup(&[("a", 1990, &[(2018, 3), (2008, 1)]), ("b", 1990, &[(2018, 4)]), ("c", 1960, &[(2019, 2)])]);
        let (reference, rows) = song_age_distribution(&aggs, &meta, None, Some(2018));
        assert_eq!(reference, Some(2018));
        let got: Vec<(i32, i32, u64, f64)> =
            rows.iter().map(|r| (r.age_bucket.start_year(), r.song_age, r.streams, r.fraction)).collect();
        assert_eq!(got, vec![(1960, 0, 2, 1.0), (1990, 0, 7, 0.875), (1990, 10, 1, 0.125)]);
        assert_eq!(song_age_distribution(&aggs, &meta, None, None).0, Some(2019));
    }

    #[test]
    fn single_cell_degenerates() {
        let (aggs, meta) = setup(&[("a", 1990, &[(2000, 50)])]);
        let m = age_at_release_matrix(&aggs, &meta, None, 10, ZAxis::Column);
        assert_eq!(m.ages, vec![8]);
        assert_eq!(m.z, vec![vec![Some(0.0)]]);
        let masked = age_at_release_matrix(&aggs, &meta, None, 100, ZAxis::Column);
        assert_eq!(masked.unmasked_cells(), 0);
        assert!(masked.row_argmax().is_empty());
    }
}
