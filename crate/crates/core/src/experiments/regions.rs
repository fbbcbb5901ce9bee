use std::collections::BTreeMap;

use ndarray::Array2;

use super::{window_slot, Residence};
use crate::error::{Error, Result};
use crate::metrics::rao_stirling;
use crate::model::{AgeBucket, Gender, ListenerMeta, ProfileWindow, RegionCode, TasteProfile};
use crate::profiles::ProfileSet;
use crate::stats::{mean, zscores};

/// Per region, the sum of its listeners' profiles in `window`. Regions
/// without listeners are absent; assigned listeners without a profile are
/// ignored.
pub fn region_profiles(
    profiles: &ProfileSet,
    assignment: &BTreeMap<String, RegionCode>,
    window: ProfileWindow,
) -> Result<BTreeMap<RegionCode, TasteProfile>> {
    let mut members: BTreeMap<RegionCode, Vec<&TasteProfile>> = BTreeMap::new();
    for (l, r) in assignment {
        if let Some(p) = profiles.get(l, window) {
            members.entry(*r).or_default().push(p);
        }
    }
    members
        .into_iter()
        .map(|(r, ps)| Ok((r, TasteProfile::sum(r.as_str(), window, profiles.k(), ps)?)))
        .collect()
}

/// Region profiles split by gender and age bucket.
pub fn region_profiles_by_group(
    profiles: &ProfileSet,
    assignment: &BTreeMap<String, RegionCode>,
    meta: &BTreeMap<String, ListenerMeta>,
    window: ProfileWindow,
) -> Result<BTreeMap<(RegionCode, Gender, AgeBucket), TasteProfile>> {
    let mut members: BTreeMap<(RegionCode, Gender, AgeBucket), Vec<&TasteProfile>> = BTreeMap::new();
    for (l, r) in assignment {
        if let (Some(p), Some(m)) = (profiles.get(l, window), meta.get(l)) {
            members.entry((*r, m.gender, m.age_bucket)).or_default().push(p);
        }
    }
    members
        .into_iter()
        .map(|((r, g, a), ps)| {
            let owner = format!("{r}/{g}/{}", a.start_year());
            Ok(((r, g, a), TasteProfile::sum(owner, window, profiles.k(), ps)?))
        })
        .collect()
}

/// Region profiles of every window with their normalized forms.
#[derive(Debug, Clone, Default)]
pub struct RegionTable {
    windows: [BTreeMap<RegionCode, (TasteProfile, Vec<f64>)>; 4],
}

impl RegionTable {
    pub fn build(profiles: &ProfileSet, residence: &Residence) -> Result<Self> {
        let mut t = RegionTable::default();
        for w in ProfileWindow::ALL {
            t.windows[window_slot(w)] = region_profiles(profiles, residence.window(w), w)?
                .into_iter()
                .map(|(r, p)| {
                    let n = p.normalized();
                    (r, (p, n))
                })
                .collect();
        }
        Ok(t)
    }

    pub fn profiles(&self, window: ProfileWindow) -> BTreeMap<RegionCode, TasteProfile> {
        self.windows[window_slot(window)].iter().map(|(r, (p, _))| (*r, p.clone())).collect()
    }

    pub fn get(&self, window: ProfileWindow, region: RegionCode) -> Option<&TasteProfile> {
        self.windows[window_slot(window)].get(&region).map(|(p, _)| p)
    }

    /// Normalized profile of a region; missing regions are an error.
    pub fn distribution(&self, window: ProfileWindow, region: RegionCode) -> Result<&[f64]> {
        self.windows[window_slot(window)]
            .get(&region)
            .map(|(_, n)| n.as_slice())
            .ok_or_else(|| Error::InsufficientData(format!("no {window} profile for region {region}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionZ {
    pub region: RegionCode,
    pub genre: usize,
    pub fraction: f64,
    pub z: f64,
}

/// Each region's stream fraction in each listed genre, z-scored across
/// regions. Rows are ordered by genre (as listed), then region.
pub fn region_genre_zscores(regions: &BTreeMap<RegionCode, TasteProfile>, genres: &[usize]) -> Result<Vec<RegionZ>> {
    if genres.is_empty() {
        return Ok(Vec::new());
    }
    if regions.len() < 2 {
        return Err(Error::InsufficientData(format!("z-scores across regions need 2, got {}", regions.len())));
    }
    let norm: Vec<(RegionCode, Vec<f64>)> = regions.iter().map(|(r, p)| (*r, p.normalized())).collect();
    let mut out = Vec::new();
    for &g in genres {
        if norm.iter().any(|(_, n)| g >= n.len()) {
            return Err(Error::invalid(format!("genre {g} out of range")));
        }
        let fractions: Vec<f64> = norm.iter().map(|(_, n)| n[g]).collect();
        let z = zscores(&fractions)?;
        out.extend(norm.iter().zip(fractions.iter().zip(z)).map(|((r, _), (&fraction, z))| RegionZ {
            region: *r,
            genre: g,
            fraction,
            z,
        }));
    }
    Ok(out)
}

/// Individual and pooled diversity of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDiversity {
    pub region: RegionCode,
    /// Rao-Stirling value of each member, in listener order.
    pub listeners: Vec<(String, f64)>,
    /// Minimum, lower quartile, median, upper quartile and maximum.
    pub quantiles: [f64; 5],
    pub mean: f64,
    /// Rao-Stirling value of the region's pooled profile.
    pub aggregate: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Distribution of individual Rao-Stirling diversity per region next to the
/// diversity of the region's pooled profile.
pub fn diversity_distributions(
    profiles: &ProfileSet,
    assignment: &BTreeMap<String, RegionCode>,
    window: ProfileWindow,
    distances: &Array2<f64>,
) -> Result<Vec<RegionDiversity>> {
    let pooled = region_profiles(profiles, assignment, window)?;
    let mut members: BTreeMap<RegionCode, Vec<(String, f64)>> = BTreeMap::new();
    for (l, r) in assignment {
        if let Some(p) = profiles.get(l, window) {
            members.entry(*r).or_default().push((l.clone(), rao_stirling(&p.normalized(), distances)));
        }
    }
    Ok(members
        .into_iter()
        .map(|(region, listeners)| {
            let mut v: Vec<f64> = listeners.iter().map(|(_, x)| *x).collect();
            v.sort_by(f64::total_cmp);
            RegionDiversity {
                region,
                quantiles: [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&v, q)),
                mean: mean(&v),
                aggregate: rao_stirling(&pooled[&region].normalized(), distances),
                listeners,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PeriodId;

    fn rc(s: &str) -> RegionCode {
        s.parse().unwrap()
    }

    fn set(rows: &[(&str, [u64; 2])]) -> ProfileSet {
        let mut s = ProfileSet::new(2);
        for (l, c) in rows {
            s.insert(l, [c.to_vec(), vec![0, 0], vec![0, 0]]).unwrap();
        }
        s
    }

    #[test]
    fn sums_and_conserves() {
        let s = set(&[("u1", [1, 0]), ("u2", [0, 2]), ("u3", [5, 5])]);
        let assign: BTreeMap<String, RegionCode> =
            [("u1".into(), rc("CO")), ("u2".into(), rc("CO")), ("u3".into(), rc("NY"))].into();
        let w = ProfileWindow::Period(PeriodId::P1);
        let r = region_profiles(&s, &assign, w).unwrap();
        assert_eq!(r[&rc("CO")].counts(), &[1, 2]);
        assert!(!r.contains_key(&rc("TX")));
        let total: Vec<u64> = (0..2).map(|g| r.values().map(|p| p.counts()[g]).sum()).collect();
        assert_eq!(total, vec![6, 7]);
    }

    #[test]
    fn zscore_examples() {
        let w = ProfileWindow::Aggregate;
        let regions: BTreeMap<RegionCode, TasteProfile> = [
            (rc("AA"), TasteProfile::new("AA", w, vec![1, 3])),
            (rc("BB"), TasteProfile::new("BB", w, vec![1, 1])),
        ]
        .into();
        let z = region_genre_zscores(&regions, &[0]).unwrap();
        assert!((z[0].z + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((z[1].z - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(region_genre_zscores(&regions, &[]).unwrap().is_empty());
        let same: BTreeMap<RegionCode, TasteProfile> = [
            (rc("AA"), TasteProfile::new("AA", w, vec![1, 1])),
            (rc("BB"), TasteProfile::new("BB", w, vec![2, 2])),
        ]
        .into();
        assert!(region_genre_zscores(&same, &[0, 1]).unwrap().iter().all(|r| r.z == 0.0));
    }

    #[test]
    fn identical_listeners_share_diversity() {
        let s = set(&[("u1", [1, 1]), ("u2", [2, 2]), ("u3", [4, 0])]);
        let assign: BTreeMap<String, RegionCode> =
            [("u1".into(), rc("CO")), ("u2".into(), rc("CO")), ("u3".into(), rc("NY"))].into();
        let d = ndarray::array![[0.0, 1.0], [1.0, 0.0]];
        let r = diversity_distributions(&s, &assign, ProfileWindow::Period(PeriodId::P1), &d).unwrap();
        assert_eq!(r[0].quantiles, [0.5; 5]);
        assert_eq!(r[0].aggregate, 0.5);
        assert_eq!(r[1].aggregate, r[1].listeners[0].1);
    }
}
