use ndarray::Array2;
use rand::Rng;

use super::rao_stirling;
use crate::model::substream_indexed;
use crate::stats::{mean, sample_sd};

#[derive(Debug, Clone, Copy)]
pub enum RarefactionMode<'a> {
    /// Number of distinct genres in the subsample.
    Unique,
    /// Rao-Stirling diversity of the subsample under the given distances.
    RaoStirling(&'a Array2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RarefactionRow {
    pub depth: usize,
    pub mean: f64,
    /// Sample standard deviation over replicates; 0 with one replicate.
    pub sd: f64,
}

/// Rarefaction curve of one listener from per-genre stream counts.
///
/// Each replicate draws one random ordering of the streams; the subsample
/// at depth n is its first n streams, so subsamples are nested and the
/// mean unique-genre curve is non-decreasing. Depths beyond the total are
/// skipped with a warning.
pub fn rarefaction_curve(
    counts: &[u64],
    depths: &[usize],
    replicates: usize,
    seed: u64,
    key: u64,
    mode: RarefactionMode<'_>,
) -> Vec<RarefactionRow> {
    let total: u64 = counts.iter().sum();
    let mut depths: Vec<usize> = depths.to_vec();
    depths.sort_unstable();
    depths.dedup();
    if let Some(&d) = depths.iter().find(|&&d| d as u64 > total) {
        log::debug!("rarefaction depth {d} exceeds {total} streams; skipping deeper points");
    }
    depths.retain(|&d| d > 0 && d as u64 <= total);
    let Some(&max_depth) = depths.last() else {
        return Vec::new();
    };
    let mut pool: Vec<u32> = Vec::with_capacity(total as usize);
    for (g, &c) in counts.iter().enumerate() {
        pool.extend(std::iter::repeat_n(g as u32, c as usize));
    }
    let k = counts.len();
    let mut rng = substream_indexed(seed, "rarefaction", key);
    let mut values = vec![Vec::with_capacity(replicates); depths.len()];
    let mut prefix = vec![0u64; k];
    for _ in 0..replicates.max(1) {
        prefix.iter_mut().for_each(|c| *c = 0);
        let mut distinct = 0usize;
        let mut next = 0;
        for pos in 0..max_depth {
            let j = rng.random_range(pos..pool.len());
            pool.swap(pos, j);
            let g = pool[pos] as usize;
            if prefix[g] == 0 {
                distinct += 1;
            }
            prefix[g] += 1;
            while next < depths.len() && depths[next] == pos + 1 {
                let v = match mode {
                    RarefactionMode::Unique => distinct as f64,
                    RarefactionMode::RaoStirling(d) => {
                        let n = (pos + 1) as f64;
                        let p: Vec<f64> = prefix.iter().map(|&c| c as f64 / n).collect();
                        rao_stirling(&p, d)
                    }
                };
                values[next].push(v);
                next += 1;
            }
        }
    }
    depths
        .iter()
        .zip(values)
        .map(|(&depth, v)| RarefactionRow {
            depth,
            mean: mean(&v),
            sd: if v.len() > 1 { sample_sd(&v) } else { 0.0 },
        })
        .collect()
}
