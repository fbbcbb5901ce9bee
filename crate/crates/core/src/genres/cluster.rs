use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linkage::{average_linkage, canonical_labels, cut, Merge};
use crate::model::substream;

const KMEANS_MAX_ITER: usize = 300;
const KMEANS_TOL: f64 = 1e-6;

/// Full average-linkage merge sequence, cut at any number of clusters.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn new(d: &Array2<f64>) -> Result<Self> {
        Ok(Self {
            n: d.nrows(),
            merges: average_linkage(d)?,
        })
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        check_k(k, self.n)?;
        cut(self.n, &self.merges, k)
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!("cluster count must be in 2..={n}, got {k}")));
    }
    Ok(())
}

/// Average-linkage clustering cut to exactly `k` clusters.
pub fn cluster_agglomerative(d: &Array2<f64>, k: usize) -> Result<Vec<usize>> {
    check_k(k, d.nrows())?;
    Dendrogram::new(d)?.cut(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Canonical labels (first-appearance order).
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    /// Number of empty-cluster re-seeds.
    pub reseeds: usize,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with k-means++ seeding on the rows of `rows`.
///
/// An empty cluster is re-seeded at the point farthest from its assigned
/// centroid (smallest index on ties).
pub fn cluster_kmeans(rows: &Array2<f64>, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = rows.nrows();
    check_k(k, n)?;
    let mut rng = substream(seed, &format!("kmeans/k={k}"));
    let mut centroids = Array2::<f64>::zeros((k, rows.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&rows.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(rows.row(i), rows.row(first))).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // Guard against rounding landing on a zero-weight tail.
            if closest[pick] == 0.0 {
                pick = closest.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&rows.row(pick));
        for (i, w) in closest.iter_mut().enumerate() {
            *w = w.min(sq_dist(rows.row(i), rows.row(pick)));
        }
    }

    let mut labels = vec![0usize; n];
    let mut iterations = 0;
    let mut reseeds = 0;
    loop {
        iterations += 1;
        let assign: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best = (0, f64::INFINITY);
                for c in 0..k {
                    let d = sq_dist(rows.row(i), centroids.row(c));
                    if d < best.1 {
                        best = (c, d);
                    }
                }
                best
            })
            .collect();
        for (l, a) in labels.iter_mut().zip(&assign) {
            *l = a.0;
        }
        let mut sums = Array2::<f64>::zeros(centroids.dim());
        let mut sizes = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums.row_mut(l).scaled_add(1.0, &rows.row(i));
            sizes[l] += 1;
        }
        let mut moved = 0.0f64;
        let mut taken = vec![false; n];
        for c in 0..k {
            let new = if sizes[c] > 0 {
                sums.row(c).mapv(|x| x / sizes[c] as f64)
            } else {
                reseeds += 1;
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold((usize::MAX, -1.0), |best, i| {
                        let d = assign[i].1;
                        if d > best.1 {
                            (i, d)
                        } else {
                            best
                        }
                    })
                    .0;
                taken[far] = true;
                rows.row(far).to_owned()
            };
            moved = moved.max(sq_dist(new.view(), centroids.row(c)).sqrt());
            centroids.row_mut(c).assign(&new);
        }
        if moved <= KMEANS_TOL || iterations >= KMEANS_MAX_ITER {
            break;
        }
    }
    let inertia = (0..n).map(|i| sq_dist(rows.row(i), centroids.row(labels[i]))).sum();
    Ok(KMeansResult {
        labels: canonical_labels(&labels),
        inertia,
        iterations,
        reseeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_distr::{Distribution, Normal};

    fn blocks() -> Array2<f64> {
        Array2::from_shape_fn((6, 6), |(i, j)| {
            if i == j {
                0.0
            } else if (i < 3) == (j < 3) {
                0.1 + 0.01 * ((i + j) % 3) as f64
            } else {
                0.9
            }
        })
    }

    #[test]
    fn agglomerative_recovers_blocks() {
        assert_eq!(cluster_agglomerative(&blocks(), 2).unwrap(), vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(cluster_agglomerative(&blocks(), 6).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert!(cluster_agglomerative(&blocks(), 1).is_err());
        assert!(cluster_agglomerative(&blocks(), 7).is_err());
    }

    #[test]
    fn kmeans_blobs() {
        let mut rng = substream(3, "blobs");
        let noise = Normal::new(0.0, 0.3).unwrap();
        let rows = Array2::from_shape_fn((100, 2), |(i, _)| {
            let centre = if i < 50 { 0.0 } else { 5.0 };
            centre + noise.sample(&mut rng)
        });
        let r = cluster_kmeans(&rows, 2, 9).unwrap();
        let agree = (0..100).filter(|&i| (r.labels[i] == r.labels[0]) == (i < 50)).count();
        assert!(agree >= 99, "{agree}");
        assert_eq!(r, cluster_kmeans(&rows, 2, 9).unwrap());
    }

    #[test]
    fn kmeans_edge_cases() {
        let rows = array![[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [2.0, 2.0]];
        let r = cluster_kmeans(&rows, 4, 1).unwrap();
        assert_eq!(r.labels, vec![0, 1, 2, 3]);
        assert_eq!(r.inertia, 0.0);
        let dup = array![[1.0, 1.0], [1.0, 1.0], [9.0, 9.0]];
        let r = cluster_kmeans(&dup, 2, 4).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_ne!(r.labels[0], r.labels[2]);
    }
}
