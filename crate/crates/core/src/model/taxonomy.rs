use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::GenreTree;
use crate::error::{Error, Result};

/// Data-derived genres: artist assignment, labels, genre-genre distances and
/// the UPGMA tree over genres.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreTaxonomy {
    pub artist_to_genre: BTreeMap<String, usize>,
    pub genre_labels: Vec<String>,
    pub genre_distance: Array2<f64>,
    pub tree: GenreTree,
}

/// Canonical on-disk form. Fields are declared in sorted order so the JSON
/// keys come out sorted.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyDoc {
    artist_to_genre: BTreeMap<String, usize>,
    genre_distance: Vec<Vec<f64>>,
    genre_labels: Vec<String>,
    k: usize,
    tree: String,
}

impl GenreTaxonomy {
    pub fn k(&self) -> usize {
        self.genre_labels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        let bad = |m: String| Err(Error::Format {
            what: "taxonomy",
            message: m,
        });
        if self.genre_distance.dim() != (k, k) {
            return bad(format!("distance matrix is {:?}, expected {k}x{k}", self.genre_distance.dim()));
        }
        if self.tree.leaf_count() != k {
            return bad(format!("tree has {} leaves, expected {k}", self.tree.leaf_count()));
        }
        if let Some((a, g)) = self.artist_to_genre.iter().find(|(_, &g)| g >= k) {
            return bad(format!("artist {a} maps to genre {g} >= {k}"));
        }
        for i in 0..k {
            if self.genre_distance[[i, i]] != 0.0 {
                return bad(format!("distance diagonal {i} is not zero"));
            }
            for j in 0..k {
                let d = self.genre_distance[[i, j]];
                if !(0.0..=2.0).contains(&d) || d != self.genre_distance[[j, i]] {
                    return bad(format!("distance ({i},{j}) = {d} is out of range or asymmetric"));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = TaxonomyDoc {
            artist_to_genre: self.artist_to_genre.clone(),
            genre_distance: self.genre_distance.outer_iter().map(|r| r.to_vec()).collect(),
            genre_labels: self.genre_labels.clone(),
            k: self.k(),
            tree: self.tree.to_newick(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("taxonomy serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TaxonomyDoc = serde_json::from_str(text).map_err(|e| Error::Format {
            what: "taxonomy",
            message: e.to_string(),
        })?;
        let k = doc.k;
        if doc.genre_labels.len() != k || doc.genre_distance.iter().any(|r| r.len() != k) {
            return Err(Error::Format {
                what: "taxonomy",
                message: format!("labels or distance rows do not match k = {k}"),
            });
        }
        let flat: Vec<f64> = doc.genre_distance.into_iter().flatten().collect();
        let genre_distance = Array2::from_shape_vec((k, k), flat).map_err(|e| Error::Format {
            what: "taxonomy",
            message: e.to_string(),
        })?;
        let tax = GenreTaxonomy {
            artist_to_genre: doc.artist_to_genre,
            genre_labels: doc.genre_labels,
            genre_distance,
            tree: GenreTree::from_newick(&doc.tree)?,
        };
        tax.validate()?;
        Ok(tax)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn json_round_trip() {
        let tax = GenreTaxonomy {
            artist_to_genre: [("b".to_string(), 1), ("a".to_string(), 0)].into_iter().collect(),
            genre_labels: vec!["rock".into(), "jazz".into()],
            genre_distance: array![[0.0, 0.75], [0.75, 0.0]],
            tree: GenreTree::from_merges(2, &[(0, 1, 0.375)]).unwrap(),
        };
        let text = tax.to_json();
        let back = GenreTaxonomy::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(back.artist_to_genre, tax.artist_to_genre);
        // sorted keys
        let a = text.find("artist_to_genre").unwrap();
        let t = text.find("\"tree\"").unwrap();
        assert!(a < t);
    }

    #[test]
    fn rejects_out_of_range_genre() {
        let tax = GenreTaxonomy {
            artist_to_genre: [("a".to_string(), 5)].into_iter().collect(),
            genre_labels: vec!["x".into()],
            genre_distance: array![[0.0]],
            tree: GenreTree::from_merges(1, &[]).unwrap(),
        };
        assert!(GenreTaxonomy::from_json(&tax.to_json()).is_err());
    }
}
