use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::read_tsv;
use crate::model::RegionCode;

const US_STATES: &str = include_str!("../../data/us_state_adjacency.tsv");

/// Symmetric set of regions that share a border.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Adjacency {
    pairs: BTreeSet<(RegionCode, RegionCode)>,
}

impl Adjacency {
    /// Land borders between the US states and DC. Point contacts (Four
    /// Corners) are not borders.
    pub fn us_states() -> Self {
        Self::parse(US_STATES).expect("bundled adjacency list is valid")
    }

    /// Parse `region_a<TAB>region_b` lines after a header row.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = BTreeSet::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| Error::invalid(format!("adjacency line {}: expected two regions", i + 1)))?;
            pairs.insert(Self::key(a.parse()?, b.trim().parse()?));
        }
        Ok(Self { pairs })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut pairs = BTreeSet::new();
        for (line, f) in read_tsv(path, &["region_a", "region_b"])? {
            let [a, b] = f.as_slice() else {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    message: "expected two regions".into(),
                });
            };
            pairs.insert(Self::key(a.parse()?, b.parse()?));
        }
        Ok(Self { pairs })
    }

    fn key(a: RegionCode, b: RegionCode) -> (RegionCode, RegionCode) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn adjacent(&self, a: RegionCode, b: RegionCode) -> bool {
        self.pairs.contains(&Self::key(a, b))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_states() {
        let a = Adjacency::us_states();
        let rc = |s: &str| s.parse::<RegionCode>().unwrap();
        assert!(a.adjacent(rc("NY"), rc("PA")));
        assert!(a.adjacent(rc("PA"), rc("NY")));
        assert!(!a.adjacent(rc("CO"), rc("AZ")));
        assert!(!a.adjacent(rc("NY"), rc("CA")));
        assert_eq!(a.len(), 107);
    }
}
