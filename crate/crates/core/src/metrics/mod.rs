//! Diversity and dissimilarity over genre profiles.

mod rarefaction;

pub use rarefaction::{rarefaction_curve, RarefactionMode, RarefactionRow};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::genres::row_correlation_distances;
use crate::linkage::average_linkage;
use crate::model::{GenreTree, TasteProfile};

/// Listener co-consumption counts between genres.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenreCoConsumption {
    /// `counts[[i, j]]`: listeners with at least one stream in both i and j.
    pub counts: Array2<u64>,
}

impl GenreCoConsumption {
    pub fn from_profiles<'a>(k: usize, profiles: impl IntoIterator<Item = &'a TasteProfile>) -> Result<Self> {
        let mut counts = Array2::<u64>::zeros((k, k));
        let mut present = Vec::with_capacity(k);
        for p in profiles {
            if p.k() != k {
                return Err(Error::invalid(format!(
                    "profile {} has {} genres, expected {k}",
                    p.owner_id(),
                    p.k()
                )));
            }
            present.clear();
            present.extend(p.counts().iter().enumerate().filter(|(_, &c)| c > 0).map(|(g, _)| g));
            for &i in &present {
                for &j in &present {
                    counts[[i, j]] += 1;
                }
            }
        }
        Ok(Self { counts })
    }

    pub fn k(&self) -> usize {
        self.counts.nrows()
    }
}

/// Correlation distances between co-consumption rows. Constant rows get
/// distance 1 to every other genre.
pub fn genre_distances(c: &GenreCoConsumption) -> Array2<f64> {
    let rows = c.counts.mapv(|x| x as f64);
    row_correlation_distances(&rows).0
}

/// UPGMA tree over a genre distance matrix. Merge heights are half the
/// average inter-cluster distance.
pub fn upgma(dist: &Array2<f64>) -> Result<GenreTree> {
    let merges = average_linkage(dist)?;
    let m: Vec<(usize, usize, f64)> = merges.iter().map(|m| (m.a, m.b, m.distance / 2.0)).collect();
    GenreTree::from_merges(dist.nrows(), &m)
}

/// Rao-Stirling diversity, the full ordered double sum of p_i p_j d(i,j).
pub fn rao_stirling(p: &[f64], d: &Array2<f64>) -> f64 {
    let k = p.len();
    let mut total = 0.0;
    for i in 0..k {
        if p[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..k {
            row += p[j] * d[[i, j]];
        }
        total += p[i] * row;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UniFracMode {
    /// Σ_e b_e |P_e − Q_e|.
    #[default]
    Raw,
    /// Raw value divided by Σ_i depth_i (p_i + q_i).
    DepthNormalized,
}

/// Precomputed tree traversal for repeated UniFrac evaluations.
#[derive(Debug, Clone)]
pub struct UniFrac {
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
    branch: Vec<f64>,
    leaf_of_genre: Vec<usize>,
    depth: Vec<f64>,
}

impl UniFrac {
    pub fn new(tree: &GenreTree) -> Self {
        let nodes = tree.nodes();
        Self {
            order: tree.postorder(),
            parent: nodes.iter().map(|n| n.parent).collect(),
            branch: nodes.iter().map(|n| n.branch_length).collect(),
            leaf_of_genre: (0..tree.leaf_count()).map(|g| tree.leaf_node(g)).collect(),
            depth: tree.leaf_depths(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_of_genre.len()
    }

    pub fn distance(&self, p: &[f64], q: &[f64], mode: UniFracMode) -> Result<f64> {
        let k = self.leaf_count();
        if p.len() != k || q.len() != k {
            return Err(Error::invalid(format!(
                "profiles have {} and {} genres but the tree has {k} leaves",
                p.len(),
                q.len()
            )));
        }
        // Signed mass difference below each node.
        let mut diff = vec![0.0f64; self.parent.len()];
        for g in 0..k {
            diff[self.leaf_of_genre[g]] = p[g] - q[g];
        }
        let mut total = 0.0;
        for &node in &self.order {
            if let Some(par) = self.parent[node] {
                total += self.branch[node] * diff[node].abs();
                diff[par] += diff[node];
            }
        }
        match mode {
            UniFracMode::Raw => Ok(total),
            UniFracMode::DepthNormalized => {
                let denom: f64 = (0..k).map(|g| self.depth[g] * (p[g] + q[g])).sum();
                Ok(if denom > 0.0 { total / denom } else { 0.0 })
            }
        }
    }
}

/// Raw weighted UniFrac between two normalized profiles.
pub fn weighted_unifrac(p: &[f64], q: &[f64], tree: &GenreTree) -> Result<f64> {
    UniFrac::new(tree).distance(p, q, UniFracMode::Raw)
}

pub fn weighted_unifrac_with(p: &[f64], q: &[f64], tree: &GenreTree, mode: UniFracMode) -> Result<f64> {
    UniFrac::new(tree).distance(p, q, mode)
}

/// Kullback-Leibler divergence in bits.
pub fn kl_divergence(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("KL divergence of distributions with different lengths"));
    }
    let mut total = 0.0;
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        if x > 0.0 {
            if y <= 0.0 {
                return Err(Error::InfiniteDivergence { index: i });
            }
            total += x * (x / y).log2();
        }
    }
    Ok(total.max(0.0))
}

/// Jensen-Shannon divergence in bits, in [0, 1].
pub fn jensen_shannon(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("JS divergence of distributions with different lengths"));
    }
    let mut total = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let m = 0.5 * (x + y);
        if x > 0.0 {
            total += 0.5 * x * (x / m).log2();
        }
        if y > 0.0 {
            total += 0.5 * y * (y / m).log2();
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn example_tree() -> GenreTree {
        upgma(&array![[0.0, 2.0, 4.0], [2.0, 0.0, 4.0], [4.0, 4.0, 0.0]]).unwrap()
    }

    #[test]
    fn upgma_example() {
        let t = example_tree();
        assert_eq!(t.to_newick(), "((0:1,1:1):1,2:2);");
        let two = upgma(&array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(two.nodes()[two.root()].height, 0.5);
        let eq = upgma(&Array2::from_shape_fn((5, 5), |(i, j)| if i == j { 0.0 } else { 0.7 })).unwrap();
        assert!(eq.is_ultrametric(1e-12));
        assert!(upgma(&array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
    }

    #[test]
    fn rao_stirling_examples() {
        let d = array![[0.0, 1.0], [1.0, 0.0]];
        assert_eq!(rao_stirling(&[1.0, 0.0], &d), 0.0);
        assert_eq!(rao_stirling(&[0.5, 0.5], &d), 0.5);
    }

    #[test]
    fn unifrac_examples() {
        let two = upgma(&array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(weighted_unifrac(&[1.0, 0.0], &[0.0, 1.0], &two).unwrap(), 1.0);
        let t = example_tree();
        let p = [1.0, 0.0, 0.0];
        let q = [1.0 / 3.0; 3];
        assert_eq!(weighted_unifrac(&p, &p, &t).unwrap(), 0.0);
        // Edges: A 1*2/3, B 1*1/3, C 2*1/3, AB 1*1/3.
        assert!((weighted_unifrac(&p, &q, &t).unwrap() - 2.0).abs() < 1e-12);
        // Depth 2 for every leaf, total mass 2.
        let norm = weighted_unifrac_with(&p, &q, &t, UniFracMode::DepthNormalized).unwrap();
        assert!((norm - 0.5).abs() < 1e-12);
        assert!(weighted_unifrac(&[1.0, 0.0], &p, &t).is_err());
    }

    #[test]
    fn divergence_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        let kl = kl_divergence(&[0.75, 0.25], &[0.5, 0.5]).unwrap();
        assert!((kl - 0.18872187554086717).abs() < 1e-12);
        assert!(matches!(
            kl_divergence(&[0.5, 0.5], &[1.0, 0.0]),
            Err(Error::InfiniteDivergence { index: 1 })
        ));
        assert_eq!(jensen_shannon(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(jensen_shannon(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        let js = jensen_shannon(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((js - 0.31127812445913283).abs() < 1e-12);
    }

    #[test]
    fn co_consumption_blocks() {
        // Two listener groups: one streams genres 0 and 1, the other 2 and 3.
        let mut profiles = Vec::new();
        for i in 0..3 {
            profiles.push(TasteProfile::new(format!("a{i}"), crate::ProfileWindow::Aggregate, vec![5, 2, 0, 0]));
            profiles.push(TasteProfile::new(format!("b{i}"), crate::ProfileWindow::Aggregate, vec![0, 0, 1, 9]));
        }
        let c = GenreCoConsumption::from_profiles(4, &profiles).unwrap();
        assert_eq!(c.counts.row(0).to_vec(), vec![3, 3, 0, 0]);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c.counts[[i, j]], c.counts[[j, i]]);
                assert!(c.counts[[i, i]] >= c.counts[[i, j]]);
            }
        }
        let d = genre_distances(&c);
        assert_eq!(d[[0, 1]], 0.0);
        assert!((d[[0, 2]] - 2.0).abs() < 1e-12);
        assert!((d[[1, 3]] - 2.0).abs() < 1e-12);
        let single = GenreCoConsumption::from_profiles(1, &[]).unwrap();
        assert_eq!(genre_distances(&single), array![[0.0]]);
    }
}
