use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linkage::canonical_labels;

struct Contingency {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    cells: BTreeMap<(usize, usize), usize>,
}

fn contingency(a: &[usize], b: &[usize]) -> Contingency {
    let a = canonical_labels(a);
    let b = canonical_labels(b);
    let mut rows = vec![0; a.iter().max().map_or(0, |m| m + 1)];
    let mut cols = vec![0; b.iter().max().map_or(0, |m| m + 1)];
    let mut cells = BTreeMap::new();
    for (&x, &y) in a.iter().zip(&b) {
        rows[x] += 1;
        cols[y] += 1;
        *cells.entry((x, y)).or_insert(0) += 1;
    }
    Contingency {
        n: a.len(),
        rows,
        cols,
        cells,
    }
}

fn entropy(sizes: &[usize], n: usize) -> f64 {
    let n = n as f64;
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Adjusted mutual information with the expected MI under the
/// hypergeometric model and the arithmetic mean of the two entropies.
///
/// Identical non-trivial partitions score 1. When the normalizer vanishes
/// (for instance a single-cluster partition) the score is 0.
pub fn adjusted_mutual_information(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("partitions cover {} and {} items", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::invalid("partitions are empty"));
    }
    let t = contingency(a, b);
    let (r, c) = (t.rows.len(), t.cols.len());
    if r > 1 && canonical_labels(a) == canonical_labels(b) {
        return Ok(1.0);
    }
    let n = t.n as f64;
    let mi: f64 = t
        .cells
        .iter()
        .map(|(&(i, j), &nij)| {
            let nij = nij as f64;
            nij / n * (n * nij / (t.rows[i] as f64 * t.cols[j] as f64)).ln()
        })
        .sum();
    let emi = expected_mi(&t);
    let h = 0.5 * (entropy(&t.rows, t.n) + entropy(&t.cols, t.n));
    let denom = h - emi;
    if r <= 1 || c <= 1 || denom.abs() < 1e-15 {
        return Ok(0.0);
    }
    Ok((mi - emi) / denom)
}

fn expected_mi(t: &Contingency) -> f64 {
    let n = t.n;
    let lf: Vec<f64> = {
        let mut v = vec![0.0; n + 1];
        for i in 1..=n {
            v[i] = v[i - 1] + (i as f64).ln();
        }
        v
    };
    let nf = n as f64;
    let mut emi = 0.0;
    for &ai in &t.rows {
        for &bj in &t.cols {
            let lo = (ai + bj).saturating_sub(n).max(1);
            let hi = ai.min(bj);
            let fixed = lf[ai] + lf[bj] + lf[n - ai] + lf[n - bj] - lf[n];
            for nij in lo..=hi {
                let x = nij as f64;
                let term = x / nf * (nf * x / (ai as f64 * bj as f64)).ln();
                let log_p = fixed - lf[nij] - lf[ai - nij] - lf[bj - nij] - lf[n + nij - ai - bj];
                emi += term * log_p.exp();
            }
        }
    }
    emi
}

/// Completeness of `clusters` against reference `classes`: 1 when every
/// class lies within a single cluster. Items without a class are ignored.
/// Returns 1 when the clustering of labeled items has zero entropy.
pub fn completeness(classes: &[Option<usize>], clusters: &[usize]) -> Result<f64> {
    if classes.len() != clusters.len() {
        return Err(Error::invalid(format!(
            "classes cover {} items, clusters {}",
            classes.len(),
            clusters.len()
        )));
    }
    let (cls, clu): (Vec<usize>, Vec<usize>) = classes
        .iter()
        .zip(clusters)
        .filter_map(|(c, &k)| c.map(|c| (c, k)))
        .unzip();
    if cls.is_empty() {
        return Ok(1.0);
    }
    let t = contingency(&cls, &clu);
    let h_k = entropy(&t.cols, t.n);
    if h_k == 0.0 {
        return Ok(1.0);
    }
    // H(K|C) = Σ_c p(c) H(K | C = c).
    let n = t.n as f64;
    let h_k_given_c: f64 = t
        .cells
        .iter()
        .map(|(&(i, _), &nij)| {
            let nij = nij as f64;
            -(nij / n) * (nij / t.rows[i] as f64).ln()
        })
        .sum();
    Ok((1.0 - h_k_given_c / h_k).clamp(0.0, 1.0))
}
