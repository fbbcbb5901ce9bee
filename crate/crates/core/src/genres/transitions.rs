use std::collections::{BTreeSet, HashMap};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{ListenEvent, RunConfig};

/// Succession counts between the top-N artists.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    /// Top-N artist ids, by total streams descending then id.
    pub artists: Vec<String>,
    /// Total streams per artist in `artists` order.
    pub totals: Vec<u64>,
    /// `counts[[i, j]]`: successions artist i -> artist j.
    pub counts: Array2<u64>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.artists.len()
    }

    /// Row-normalized next-artist distribution; rows without outgoing
    /// transitions stay all zero.
    pub fn probabilities(&self) -> Array2<f64> {
        let mut p = self.counts.mapv(|c| c as f64);
        for mut row in p.rows_mut() {
            let s = row.sum();
            if s > 0.0 {
                row.mapv_inplace(|x| x / s);
            }
        }
        p
    }

    /// Rows with no outgoing transitions.
    pub fn zero_rows(&self) -> Vec<usize> {
        self.counts
            .rows()
            .into_iter()
            .enumerate()
            .filter(|(_, r)| r.iter().all(|&c| c == 0))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Streaming accumulator for [`TransitionMatrix`]. Events may arrive in any
/// order; they are sorted per listener by time before successions are
/// counted.
#[derive(Debug, Default)]
pub struct TransitionBuilder {
    listeners: HashMap<String, u32>,
    artists: HashMap<String, u32>,
    names: Vec<String>,
    records: Vec<(u32, i64, u32)>,
}

impl TransitionBuilder {
    pub fn new<S: Into<String>>(eligible: impl IntoIterator<Item = S>) -> Self {
        let listeners = eligible
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s.into(), i as u32))
            .collect();
        Self {
            listeners,
            ..Self::default()
        }
    }

    /// Record one stream; `timestamp` is in Unix seconds. Streams of
    /// listeners outside the eligible set are ignored.
    pub fn push(&mut self, listener: &str, timestamp: i64, artist: &str) {
        let Some(&l) = self.listeners.get(listener) else {
            return;
        };
        let a = match self.artists.get(artist) {
            Some(&a) => a,
            None => {
                let a = self.names.len() as u32;
                self.artists.insert(artist.to_string(), a);
                self.names.push(artist.to_string());
                a
            }
        };
        self.records.push((l, timestamp, a));
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn finish(self, top_n: usize, session_gap_minutes: u32, include_self: bool) -> Result<TransitionMatrix> {
        let Self { names, mut records, .. } = self;
        let distinct = names.len();
        if top_n > distinct {
            return Err(Error::InsufficientData(format!(
                "top_n_artists = {top_n} but only {distinct} distinct artists were streamed by eligible listeners"
            )));
        }
        // Rank artists by name so ordering never depends on input order.
        let mut by_name: Vec<u32> = (0..distinct as u32).collect();
        by_name.sort_by(|&a, &b| names[a as usize].cmp(&names[b as usize]));
        let mut name_rank = vec![0u32; distinct];
        for (r, &a) in by_name.iter().enumerate() {
            name_rank[a as usize] = r as u32;
        }
        let mut totals = vec![0u64; distinct];
        for r in records.iter_mut() {
            r.2 = name_rank[r.2 as usize];
            totals[r.2 as usize] += 1;
        }
        let mut order: Vec<u32> = (0..distinct as u32).collect();
        // Name rank breaks count ties, which is id order.
        order.sort_by(|&a, &b| totals[b as usize].cmp(&totals[a as usize]).then(a.cmp(&b)));
        order.truncate(top_n);
        let mut top_index = vec![u32::MAX; distinct];
        for (i, &a) in order.iter().enumerate() {
            top_index[a as usize] = i as u32;
        }
        records.sort_unstable();
        let gap = i64::from(session_gap_minutes) * 60;
        let mut counts = Array2::<u64>::zeros((top_n, top_n));
        for w in records.windows(2) {
            let (l0, t0, a0) = w[0];
            let (l1, t1, a1) = w[1];
            if l0 != l1 || t1 - t0 > gap {
                continue;
            }
            let (i, j) = (top_index[a0 as usize], top_index[a1 as usize]);
            if i == u32::MAX || j == u32::MAX || (i == j && !include_self) {
                continue;
            }
            counts[[i as usize, j as usize]] += 1;
        }
        Ok(TransitionMatrix {
            artists: order.iter().map(|&a| names[by_name[a as usize] as usize].clone()).collect(),
            totals: order.iter().map(|&a| totals[a as usize]).collect(),
            counts,
        })
    }
}

/// Transition matrix over the top `config.top_n_artists` artists.
pub fn build_transitions(
    events: &[ListenEvent],
    eligible: &BTreeSet<String>,
    config: &RunConfig,
) -> Result<TransitionMatrix> {
    let mut b = TransitionBuilder::new(eligible.iter().cloned());
    for e in events {
        b.push(&e.listener_id, e.timestamp.timestamp(), &e.artist_id);
    }
    b.finish(config.top_n_artists, config.session_gap_minutes, config.include_self_transitions)
}
