//! Average-linkage agglomeration shared by artist clustering and UPGMA.

use ndarray::Array2;

use crate::error::{Error, Result};

/// One agglomeration step. Items are nodes `0..n`; merge `m` creates node
/// `n + m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    /// Average distance between the two merged clusters.
    pub distance: f64,
    pub size: usize,
}

/// Check that `d` is square, symmetric, zero-diagonal, finite and
/// non-negative.
pub fn check_dissimilarity(d: &Array2<f64>) -> Result<()> {
    let (r, c) = d.dim();
    if r != c {
        return Err(Error::invalid(format!("distance matrix is {r}x{c}, not square")));
    }
    for i in 0..r {
        if d[[i, i]] != 0.0 {
            return Err(Error::invalid(format!("distance diagonal ({i},{i}) is {}", d[[i, i]])));
        }
        for j in 0..i {
            let x = d[[i, j]];
            if !x.is_finite() || x < 0.0 {
                return Err(Error::invalid(format!("distance ({i},{j}) = {x} is negative or not finite")));
            }
            if (x - d[[j, i]]).abs() > 1e-9 * x.abs().max(1.0) {
                return Err(Error::invalid(format!("distance matrix is asymmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Average-linkage (UPGMA) agglomeration of all `n` items.
///
/// At each step the closest pair of active clusters is merged; ties go to
/// the lexicographically smallest pair of slot indices. The merged cluster
/// keeps the lower slot.
pub fn average_linkage(d: &Array2<f64>) -> Result<Vec<Merge>> {
    check_dissimilarity(d)?;
    let n = d.nrows();
    if n == 0 {
        return Err(Error::invalid("cannot cluster zero items"));
    }
    // Symmetrize from the lower triangle so both halves agree bit for bit.
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..i {
            dist[i * n + j] = d[[i, j]];
            dist[j * n + i] = d[[i, j]];
        }
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node = (0..n).collect::<Vec<_>>();
    // Nearest active neighbor with a larger slot index.
    let mut nn = vec![usize::MAX; n];
    let mut nn_d = vec![f64::INFINITY; n];
    let scan = |i: usize, dist: &[f64], active: &[bool]| {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in i + 1..n {
            if active[j] && dist[i * n + j] < best.0 {
                best = (dist[i * n + j], j);
            }
        }
        best
    };
    for i in 0..n {
        let (bd, bj) = scan(i, &dist, &active);
        nn[i] = bj;
        nn_d[i] = bd;
    }
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for m in 0..n.saturating_sub(1) {
        let mut a = usize::MAX;
        let mut best = f64::INFINITY;
        for i in 0..n {
            if active[i] && nn[i] != usize::MAX && nn_d[i] < best {
                best = nn_d[i];
                a = i;
            }
        }
        let b = nn[a];
        merges.push(Merge {
            a: node[a],
            b: node[b],
            distance: best,
            size: size[a] + size[b],
        });
        let (sa, sb) = (size[a] as f64, size[b] as f64);
        for k in 0..n {
            if active[k] && k != a && k != b {
                let v = (sa * dist[a * n + k] + sb * dist[b * n + k]) / (sa + sb);
                dist[a * n + k] = v;
                dist[k * n + a] = v;
            }
        }
        active[b] = false;
        size[a] += size[b];
        node[a] = n + m;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            if i == a || nn[i] == a || nn[i] == b {
                let (bd, bj) = scan(i, &dist, &active);
                nn[i] = bj;
                nn_d[i] = bd;
            } else if i < a {
                let v = dist[i * n + a];
                if v < nn_d[i] || (v == nn_d[i] && a < nn[i]) {
                    nn[i] = a;
                    nn_d[i] = v;
                }
            }
        }
    }
    Ok(merges)
}

/// Flat partition into `k` clusters obtained by replaying the first
/// `n - k` merges. Labels are canonical (first-appearance order).
pub fn cut(n: usize, merges: &[Merge], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot cut {n} items into {k} clusters")));
    }
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (m, mg) in merges.iter().take(n - k).enumerate() {
        let new = n + m;
        parent[mg.a] = new;
        parent[mg.b] = new;
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(canonical_labels(&roots))
}

/// Relabel so that clusters are numbered in order of first appearance.
pub fn canonical_labels<T: Copy + Ord>(labels: &[T]) -> Vec<usize> {
    let mut seen = std::collections::BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = seen.len();
            *seen.entry(*l).or_insert(next)
        })
        .collect()
}
