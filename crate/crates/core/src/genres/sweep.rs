use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::cluster::{cluster_kmeans, Dendrogram};
use super::scores::{adjusted_mutual_information, completeness};
use crate::error::{Error, Result};
use crate::metrics::{genre_distances, upgma, GenreCoConsumption};
use crate::model::GenreTaxonomy;

pub const UNKNOWN_GENRE: &str = "UNKNOWN";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    Agglomerative,
    Kmeans,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 2] = [ClusterMethod::Agglomerative, ClusterMethod::Kmeans];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClusterMethod::Agglomerative => "agglomerative",
            ClusterMethod::Kmeans => "kmeans",
        }
    }
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agglomerative" => Ok(ClusterMethod::Agglomerative),
            "kmeans" => Ok(ClusterMethod::Kmeans),
            other => Err(Error::invalid(format!("unknown clustering method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub method: ClusterMethod,
    pub ami: f64,
    pub completeness: f64,
}

/// Score clusterings at several cluster counts against reference tags.
///
/// All artists are clustered; scores use only artists with a tag. Rows are
/// ordered by k, then method.
pub fn sweep_cluster_counts(
    d: &Array2<f64>,
    reference: &[Option<String>],
    ks: &[usize],
    methods: &[ClusterMethod],
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if reference.len() != d.nrows() {
        return Err(Error::invalid(format!(
            "{} reference labels for {} artists",
            reference.len(),
            d.nrows()
        )));
    }
    if ks.is_empty() || methods.is_empty() {
        return Ok(Vec::new());
    }
    let tags: BTreeSet<&str> = reference.iter().flatten().map(String::as_str).collect();
    let class_of: BTreeMap<&str, usize> = tags.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let classes: Vec<Option<usize>> = reference.iter().map(|t| t.as_deref().map(|t| class_of[t])).collect();
    let labeled: Vec<usize> = (0..classes.len()).filter(|&i| classes[i].is_some()).collect();
    if labeled.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "cluster sweep needs at least 2 labeled artists, found {}",
            labeled.len()
        )));
    }
    let ref_labels: Vec<usize> = labeled.iter().map(|&i| classes[i].unwrap()).collect();
    let dendrogram = if methods.contains(&ClusterMethod::Agglomerative) {
        Some(Dendrogram::new(d)?)
    } else {
        None
    };
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut methods = methods.to_vec();
    methods.sort_unstable();
    methods.dedup();
    let mut out = Vec::new();
    for &k in &ks {
        for &m in &methods {
            let partition = match m {
                ClusterMethod::Agglomerative => dendrogram.as_ref().expect("built above").cut(k)?,
                ClusterMethod::Kmeans => cluster_kmeans(d, k, seed)?.labels,
            };
            let sub: Vec<usize> = labeled.iter().map(|&i| partition[i]).collect();
            out.push(SweepRow {
                k,
                method: m,
                ami: adjusted_mutual_information(&ref_labels, &sub)?,
                completeness: completeness(&classes, &partition)?,
            });
            log::info!("sweep k={k} {m}: done");
        }
    }
    Ok(out)
}

/// Name each cluster after its most common member tag (ties go to the
/// alphabetically first tag). Clusters without tags are `UNKNOWN`. Repeated
/// names get an ordinal suffix: `rock`, `rock 2`, ...
pub fn label_genres(partition: &[usize], tags: &[Option<String>]) -> Vec<String> {
    let k = partition.iter().max().map_or(0, |m| m + 1);
    let mut tallies: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); k];
    for (&c, t) in partition.iter().zip(tags) {
        if let Some(t) = t {
            *tallies[c].entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    tallies
        .iter()
        .map(|tally| {
            let base = tally
                .iter()
                .fold(None::<(&str, usize)>, |best, (&t, &n)| match best {
                    Some((_, bn)) if bn >= n => best,
                    _ => Some((t, n)),
                })
                .map_or(UNKNOWN_GENRE, |(t, _)| t)
                .to_string();
            let count = seen.entry(base.clone()).or_insert(0);
            *count += 1;
            if *count == 1 {
                base
            } else {
                format!("{base} {count}")
            }
        })
        .collect()
}

/// Assemble a taxonomy from an artist partition and the listener
/// co-consumption of the resulting genres.
pub fn derive_taxonomy(
    artists: &[String],
    partition: &[usize],
    tags: &BTreeMap<String, String>,
    co: &GenreCoConsumption,
) -> Result<GenreTaxonomy> {
    if artists.len() != partition.len() {
        return Err(Error::invalid("partition does not cover the artist list"));
    }
    let artist_tags: Vec<Option<String>> = artists.iter().map(|a| tags.get(a).cloned()).collect();
    let genre_labels = label_genres(partition, &artist_tags);
    if genre_labels.len() != co.k() {
        return Err(Error::invalid(format!(
            "{} genres but co-consumption covers {}",
            genre_labels.len(),
            co.k()
        )));
    }
    let genre_distance = genre_distances(co);
    let tree = upgma(&genre_distance)?;
    let tax = GenreTaxonomy {
        artist_to_genre: artists.iter().cloned().zip(partition.iter().copied()).collect(),
        genre_labels,
        genre_distance,
        tree,
    };
    tax.validate()?;
    Ok(tax)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Option<String> {
        Some(x.to_string())
    }

    #[test]
    fn labels_follow_plurality_and_number_duplicates() {
        let partition = [0, 0, 0, 0, 1, 1, 2];
        let tags = [s("rock"), s("rock"), s("rock"), s("jazz"), s("rock"), None, None];
        assert_eq!(label_genres(&partition, &tags), vec!["rock", "rock 2", "UNKNOWN"]);
        let tie = label_genres(&[0, 0], &[s("pop"), s("indie")]);
        assert_eq!(tie, vec!["indie"]);
    }

    #[test]
    fn sweep_edge_cases() {
        let d = Array2::from_shape_fn((4, 4), |(i, j)| if i == j { 0.0 } else { 1.0 });
        let tags = vec![s("a"), None, None, None];
        assert!(sweep_cluster_counts(&d, &tags, &[2], &ClusterMethod::ALL, 0).is_err());
        let tags = vec![s("a"), s("a"), s("b"), s("b")];
        assert!(sweep_cluster_counts(&d, &tags, &[], &ClusterMethod::ALL, 0).unwrap().is_empty());
    }

    #[test]
    fn planted_blocks_peak_at_true_count() {
        // 20 blocks of 5 artists; within-block distance grows with the block
        // index so the blocks are separable but not all equally tight.
        let n = 100;
        let d = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                0.0
            } else if i / 5 == j / 5 {
                0.05 + 0.01 * (i / 5) as f64
            } else {
                1.0 + 0.001 * ((i * 7 + j * 7) % 13) as f64
            }
        });
        let tags: Vec<Option<String>> = (0..n).map(|i| Some(format!("g{}", i / 5))).collect();
        let rows = sweep_cluster_counts(&d, &tags, &[5, 10, 20, 40], &[ClusterMethod::Agglomerative], 0).unwrap();
        let best = rows.iter().max_by(|a, b| a.ami.total_cmp(&b.ami)).unwrap();
        assert_eq!(best.k, 20);
        assert!((best.ami - 1.0).abs() < 1e-12);
        assert!(rows[3].completeness < 1.0);
    }
}
