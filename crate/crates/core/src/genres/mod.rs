//! Data-derived genres: artist transitions, correlation distances,
//! clustering and cluster diagnostics.

mod cluster;
mod scores;
mod sweep;
mod transitions;

pub use cluster::{cluster_agglomerative, cluster_kmeans, Dendrogram, KMeansResult};
pub use scores::{adjusted_mutual_information, completeness};
pub use sweep::{
    derive_taxonomy, label_genres, sweep_cluster_counts, ClusterMethod, SweepRow, UNKNOWN_GENRE,
};
pub use transitions::{build_transitions, TransitionBuilder, TransitionMatrix};

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// One minus the Pearson correlation of `u` and `v`, clamped to [0, 2].
pub fn correlation_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!("vectors have lengths {} and {}", u.len(), v.len())));
    }
    if u.len() < 2 {
        return Err(Error::invalid("correlation needs at least two coordinates"));
    }
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (x, y) = (a - mu, b - mv);
        uv += x * y;
        uu += x * x;
        vv += y * y;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((1.0 - uv / (uu * vv).sqrt()).clamp(0.0, 2.0))
}

/// Pairwise correlation distances between the rows of `rows`.
///
/// Rows without variation cannot be correlated; they get distance 1 to
/// every other row and their indices are returned alongside the matrix.
pub fn row_correlation_distances(rows: &Array2<f64>) -> (Array2<f64>, Vec<usize>) {
    let n = rows.nrows();
    let m = rows.ncols();
    // Center and scale each row to unit norm once.
    let mut z = rows.to_owned();
    let mut constant = Vec::new();
    for (i, mut row) in z.axis_iter_mut(Axis(0)).enumerate() {
        let mean = if m > 0 { row.sum() / m as f64 } else { 0.0 };
        row.mapv_inplace(|x| x - mean);
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 && m >= 2 {
            row.mapv_inplace(|x| x / norm);
        } else {
            constant.push(i);
            row.fill(0.0);
        }
    }
    if !constant.is_empty() {
        log::warn!("{} constant rows get correlation distance 1 to all others", constant.len());
    }
    let is_const = {
        let mut v = vec![false; n];
        constant.iter().for_each(|&i| v[i] = true);
        v
    };
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = z.row(i);
            (i + 1..n)
                .map(|j| {
                    if is_const[i] || is_const[j] {
                        1.0
                    } else {
                        (1.0 - zi.dot(&z.row(j))).clamp(0.0, 2.0)
                    }
                })
                .collect()
        })
        .collect();
    let mut d = Array2::<f64>::zeros((n, n));
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    (d, constant)
}
