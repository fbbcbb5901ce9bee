use std::collections::BTreeMap;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stratified_sample, Adjacency, MatchedPair, RegionTable};
use crate::error::{Error, Result};
use crate::metrics::{rao_stirling, UniFrac, UniFracMode};
use crate::model::{PeriodId, ProfileWindow, RegionCode, TasteProfile};
use crate::profiles::ProfileSet;
use crate::stats::{mann_whitney_u, mean, one_sample_t_test, paired_t_test, sample_sd, Direction, TestResult};

const P1: ProfileWindow = ProfileWindow::Period(PeriodId::P1);
const P2: ProfileWindow = ProfileWindow::Period(PeriodId::P2);
const P3: ProfileWindow = ProfileWindow::Period(PeriodId::P3);
const AGG: ProfileWindow = ProfileWindow::Aggregate;

/// Distance from a listener profile to a region profile.
struct Dissimilarity<'a> {
    unifrac: &'a UniFrac,
    regions: &'a RegionTable,
    /// Remove the listener's own streams from its region's profile.
    leave_self_out: bool,
}

impl Dissimilarity<'_> {
    fn to_region(&self, p: &TasteProfile, window: ProfileWindow, region: RegionCode, member: bool) -> Result<f64> {
        let x = p.normalized();
        if member && self.leave_self_out {
            let pooled = self
                .regions
                .get(window, region)
                .ok_or_else(|| Error::InsufficientData(format!("no {window} profile for region {region}")))?;
            let rest: Vec<u64> = pooled.counts().iter().zip(p.counts()).map(|(a, b)| a - b).collect();
            let rest = TasteProfile::new(region.as_str(), window, rest);
            if rest.total() == 0 {
                return Err(Error::InsufficientData(format!(
                    "region {region} has no {window} streams besides {}",
                    p.owner_id()
                )));
            }
            return self.unifrac.distance(&x, &rest.normalized(), UniFracMode::Raw);
        }
        self.unifrac.distance(&x, self.regions.distribution(window, region)?, UniFracMode::Raw)
    }
}

/// Paired t-test, except that differences that are all exactly zero give
/// p = 1 with a note instead of a zero-variance error.
fn paired_or_null(diffs: &[f64], label: &str) -> Result<TestResult> {
    if diffs.len() >= 2 && diffs.iter().all(|&d| d == 0.0) {
        return Ok(TestResult {
            test: label.to_string(),
            statistic: 0.0,
            p_value: 1.0,
            n: diffs.len(),
            n2: None,
            df: Some(diffs.len() as f64 - 1.0),
            effect: 0.0,
            direction: Direction::None,
            notes: vec!["degenerate: every difference is exactly zero".into()],
        });
    }
    let mut r = paired_t_test(diffs)?;
    r.test = label.to_string();
    Ok(r)
}

fn profile<'a>(profiles: &'a ProfileSet, id: &str, w: ProfileWindow) -> Result<&'a TasteProfile> {
    profiles.require(id, w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortTermDiversity {
    pub p2_vs_p1: TestResult,
    pub p3_vs_p1: TestResult,
}

/// Change in Rao-Stirling diversity of movers minus that of their controls,
/// for P2 and for P3 relative to P1.
pub fn short_term_diversity_test(
    pairs: &[MatchedPair],
    profiles: &ProfileSet,
    distances: &Array2<f64>,
    per_origin: Option<usize>,
    seed: u64,
) -> Result<ShortTermDiversity> {
    let sample = stratified_sample(pairs, per_origin, seed, "short-term-diversity");
    let rs = |id: &str, w| -> Result<f64> { Ok(rao_stirling(&profile(profiles, id, w)?.normalized(), distances)) };
    let rows: Vec<[f64; 2]> = sample
        .par_iter()
        .map(|p| {
            let delta = |x: &str, w| -> Result<f64> { Ok(rs(x, w)? - rs(x, P1)?) };
            Ok([
                delta(&p.mover, P2)? - delta(&p.control, P2)?,
                delta(&p.mover, P3)? - delta(&p.control, P3)?,
            ])
        })
        .collect::<Result<_>>()?;
    let col = |i: usize| -> Vec<f64> { rows.iter().map(|r| r[i]).collect() };
    let mut a = paired_t_test(&col(0))?;
    a.test = "short-term diversity P2 vs P1 (paired t-test)".into();
    let mut b = paired_t_test(&col(1))?;
    b.test = "short-term diversity P3 vs P1 (paired t-test)".into();
    Ok(ShortTermDiversity {
        p2_vs_p1: a,
        p3_vs_p1: b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftTarget {
    Origin,
    Destination,
}

impl ShiftTarget {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShiftTarget::Origin => "origin",
            ShiftTarget::Destination => "destination",
        }
    }
}

/// Per-pair values behind a shift test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairShift {
    pub mover: String,
    pub control: String,
    pub origin: RegionCode,
    pub destination: RegionCode,
    pub mover_value: f64,
    pub control_value: f64,
    /// `mover_value - control_value`.
    pub difference: f64,
    /// `difference` divided by the variability scale, when one was given.
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortTermShift {
    pub target: ShiftTarget,
    pub result: TestResult,
    pub pairs: Vec<PairShift>,
}

/// Options shared by the shift tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftOptions {
    /// Cap on pairs per origin region.
    pub per_origin: Option<usize>,
    pub seed: u64,
    /// Month-to-month variability used to normalize per-pair differences.
    pub scale: Option<f64>,
    /// Exclude a listener's own streams from the profile of the region it
    /// belongs to when measuring its distance to that region.
    pub leave_self_out: bool,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        Self {
            per_origin: Some(1000),
            seed: 0,
            scale: None,
            leave_self_out: false,
        }
    }
}

/// `d(x_P2, t_P2) - d(x_P1, t_P1)` for one listener and target region.
fn period_shift(
    diss: &Dissimilarity<'_>,
    profiles: &ProfileSet,
    residence: &dyn Fn(&str, ProfileWindow) -> Option<RegionCode>,
    id: &str,
    target: RegionCode,
) -> Result<f64> {
    let at = |w: ProfileWindow| -> Result<f64> {
        let p = profile(profiles, id, w)?;
        diss.to_region(p, w, target, residence(id, w) == Some(target))
    };
    Ok(at(P2)? - at(P1)?)
}

/// Short-term shift toward the origin or destination region, movers
/// against their controls.
pub fn short_term_shift_test(
    pairs: &[MatchedPair],
    profiles: &ProfileSet,
    regions: &RegionTable,
    residence: &super::Residence,
    unifrac: &UniFrac,
    target: ShiftTarget,
    options: ShiftOptions,
) -> Result<ShortTermShift> {
    let sample = stratified_sample(pairs, options.per_origin, options.seed, "short-term-shift");
    let diss = Dissimilarity {
        unifrac,
        regions,
        leave_self_out: options.leave_self_out,
    };
    let res = |id: &str, w| residence.get(id, w);
    let rows: Vec<PairShift> = sample
        .par_iter()
        .map(|p| {
            let t = match target {
                ShiftTarget::Origin => p.origin(),
                ShiftTarget::Destination => p.destination,
            };
            let m = period_shift(&diss, profiles, &res, &p.mover, t)?;
            let n = period_shift(&diss, profiles, &res, &p.control, t)?;
            Ok(pair_shift(p, m, n, options.scale))
        })
        .collect::<Result<_>>()?;
    let diffs: Vec<f64> = rows.iter().map(|r| r.difference).collect();
    let mut result = paired_t_test(&diffs)?;
    result.test = format!("short-term shift toward {} (paired t-test)", target.as_str());
    Ok(ShortTermShift {
        target,
        result,
        pairs: rows,
    })
}

fn pair_shift(p: &MatchedPair, m: f64, n: f64, scale: Option<f64>) -> PairShift {
    let difference = m - n;
    PairShift {
        mover: p.mover.clone(),
        control: p.control.clone(),
        origin: p.origin(),
        destination: p.destination,
        mover_value: m,
        control_value: n,
        difference,
        normalized: scale.map(|s| difference / s),
    }
}

/// Standard deviation over non-movers of
/// `D(n,a|P2,P1) - D(n,a|P3,P2)`, with `a` the listener's home.
pub fn variability_scale(
    non_movers: &BTreeMap<String, RegionCode>,
    profiles: &ProfileSet,
    regions: &RegionTable,
    residence: &super::Residence,
    unifrac: &UniFrac,
    leave_self_out: bool,
) -> Result<f64> {
    let diss = Dissimilarity {
        unifrac,
        regions,
        leave_self_out,
    };
    let ids: Vec<(&String, &RegionCode)> = non_movers.iter().collect();
    let values: Vec<Option<f64>> = ids
        .par_iter()
        .map(|&(id, &home)| {
            if regions.get(P3, home).is_none() || !profiles.contains(id) {
                return Ok(None);
            }
            let at = |w: ProfileWindow| -> Result<f64> {
                diss.to_region(profile(profiles, id, w)?, w, home, residence.get(id, w) == Some(home))
            };
            let (d1, d2, d3) = (at(P1)?, at(P2)?, at(P3)?);
            Ok(Some((d2 - d1) - (d3 - d2)))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = values.into_iter().flatten().collect();
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "variability scale needs at least 2 non-movers, got {}",
            values.len()
        )));
    }
    let sd = sample_sd(&values);
    if !(sd > 0.0) {
        return Err(Error::Degenerate("non-mover month-to-month variability is zero".into()));
    }
    Ok(sd)
}

/// Mann-Whitney U on aggregate Rao-Stirling diversity of movers against
/// controls. With `adjacency`, pairs whose origin and destination share a
/// border are left out first.
pub fn long_term_diversity_test(
    pairs: &[MatchedPair],
    profiles: &ProfileSet,
    distances: &Array2<f64>,
    adjacency: Option<&Adjacency>,
    per_origin: Option<usize>,
    seed: u64,
) -> Result<TestResult> {
    let kept: Vec<MatchedPair> = match adjacency {
        Some(adj) => pairs
            .iter()
            .filter(|p| !adj.adjacent(p.origin(), p.destination))
            .cloned()
            .collect(),
        None => pairs.to_vec(),
    };
    if kept.is_empty() && !pairs.is_empty() {
        return Err(Error::InsufficientData(format!(
            "the shared-border filter removed all {} pairs",
            pairs.len()
        )));
    }
    let sample = stratified_sample(&kept, per_origin, seed, "long-term-diversity");
    let rs = |id: &str| -> Result<f64> { Ok(rao_stirling(&profile(profiles, id, AGG)?.normalized(), distances)) };
    let movers: Vec<f64> = sample.iter().map(|p| rs(&p.mover)).collect::<Result<_>>()?;
    let controls: Vec<f64> = sample.iter().map(|p| rs(&p.control)).collect::<Result<_>>()?;
    let mut r = mann_whitney_u(&movers, &controls)?;
    r.test = format!("long-term diversity, movers vs controls ({})", r.test);
    if adjacency.is_some() {
        r.notes.push(format!("{} pairs between bordering regions left out", pairs.len() - kept.len()));
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTermShift {
    /// One-sample t-test of `D(m,a,b)` against 0.
    pub movers: TestResult,
    /// Share of movers with `D(m,a,b) > 0`, i.e. closer to the past home.
    pub fraction_positive: f64,
    /// Paired t-test of `D(m,a,b) - D(n,a,b)`.
    pub paired: TestResult,
    /// Share of pairs with a negative paired difference (mover closer to
    /// the present home than its control).
    pub fraction_negative: f64,
    /// Mean of the normalized paired differences, when a scale was given.
    pub mean_normalized: Option<f64>,
    pub pairs: Vec<PairShift>,
}

/// `D(x,a,b) = d(x,b) - d(x,a)` on aggregate profiles.
fn between_homes(
    diss: &Dissimilarity<'_>,
    profiles: &ProfileSet,
    residence: &super::Residence,
    id: &str,
    a: RegionCode,
    b: RegionCode,
) -> Result<f64> {
    let p = profile(profiles, id, AGG)?;
    let home = residence.get(id, AGG);
    Ok(diss.to_region(p, AGG, b, home == Some(b))? - diss.to_region(p, AGG, a, home == Some(a))?)
}

/// Where long-term movers sit between their past and present homes, alone
/// and against their controls.
pub fn long_term_shift_test(
    pairs: &[MatchedPair],
    profiles: &ProfileSet,
    regions: &RegionTable,
    residence: &super::Residence,
    unifrac: &UniFrac,
    options: ShiftOptions,
) -> Result<LongTermShift> {
    let sample = stratified_sample(pairs, options.per_origin, options.seed, "long-term-shift");
    let diss = Dissimilarity {
        unifrac,
        regions,
        leave_self_out: options.leave_self_out,
    };
    let rows: Vec<PairShift> = sample
        .par_iter()
        .map(|p| {
            let (a, b) = (p.origin(), p.destination);
            let m = between_homes(&diss, profiles, residence, &p.mover, a, b)?;
            let n = between_homes(&diss, profiles, residence, &p.control, a, b)?;
            Ok(pair_shift(p, m, n, options.scale))
        })
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(Error::InsufficientData("no long-term pairs".into()));
    }
    let d: Vec<f64> = rows.iter().map(|r| r.mover_value).collect();
    let diffs: Vec<f64> = rows.iter().map(|r| r.difference).collect();
    let movers = if d.len() >= 2 && d.iter().all(|&x| x == 0.0) {
        paired_or_null(&d, "")?
    } else {
        one_sample_t_test(&d, 0.0)?
    };
    let movers = TestResult {
        test: "long-term mover position D(m,a,b) (one-sample t-test)".into(),
        ..movers
    };
    let paired = paired_or_null(&diffs, "long-term shift, movers vs controls (paired t-test)")?;
    let n = rows.len() as f64;
    let normalized: Vec<f64> = rows.iter().filter_map(|r| r.normalized).collect();
    Ok(LongTermShift {
        fraction_positive: d.iter().filter(|&&x| x > 0.0).count() as f64 / n,
        fraction_negative: diffs.iter().filter(|&&x| x < 0.0).count() as f64 / n,
        mean_normalized: (!normalized.is_empty()).then(|| mean(&normalized)),
        movers,
        paired,
        pairs: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{MoverBasis, Residence, Stratum};
    use super::*;
    use crate::model::{AgeBucket, Gender, GenreTree};

    fn rc(s: &str) -> RegionCode {
        s.parse().unwrap()
    }

    fn tree() -> GenreTree {
        GenreTree::from_merges(3, &[(0, 1, 0.5), (3, 2, 1.0)]).unwrap()
    }

    struct World {
        profiles: ProfileSet,
        residence: Residence,
        pairs: Vec<MatchedPair>,
    }

    /// Movers m_i from AA to BB and controls n_i living in AA.
    fn world() -> World {
        let mut profiles = ProfileSet::new(3);
        let mut residence = Residence::default();
        let mut pairs = Vec::new();
        for i in 0..6u64 {
            let m = format!("m{i}");
            let n = format!("n{i}");
            profiles
                .insert(&m, [vec![5 + i, 1, 1], vec![2, 1, 4 + i], vec![2, 2, 3 + i]])
                .unwrap();
            profiles
                .insert(&n, [vec![6, 1 + i, 1], vec![5 + i, 2, 1], vec![6, 1, 2 + i]])
                .unwrap();
            for w in ProfileWindow::ALL {
                residence.set(&n, w, rc("AA"));
            }
            residence.set(&m, P1, rc("AA"));
            residence.set(&m, P2, rc("BB"));
            residence.set(&m, P3, rc("BB"));
            pairs.push(MatchedPair {
                mover: m,
                control: n,
                stratum: Stratum {
                    origin: rc("AA"),
                    gender: Gender::F,
                    age_bucket: AgeBucket::new(1990).unwrap(),
                    favorite_genre: None,
                },
                destination: rc("BB"),
            });
        }
        // A resident of BB so that BB has a P1 profile.
        profiles.insert("r", [vec![1, 1, 9], vec![1, 1, 9], vec![1, 1, 9]]).unwrap();
        for w in ProfileWindow::ALL {
            residence.set("r", w, rc("BB"));
        }
        let _ = MoverBasis::ModalShift;
        World {
            profiles,
            residence,
            pairs,
        }
    }

    #[test]
    fn self_pairs_give_zero_differences() {
        let w = world();
        let selfs: Vec<MatchedPair> = w
            .pairs
            .iter()
            .map(|p| MatchedPair {
                control: p.mover.clone(),
                ..p.clone()
            })
            .collect();
        let regions = RegionTable::build(&w.profiles, &w.residence).unwrap();
        let uf = UniFrac::new(&tree());
        let d = ndarray::array![[0.0, 0.5, 1.0], [0.5, 0.0, 1.0], [1.0, 1.0, 0.0]];
        assert!(matches!(
            short_term_diversity_test(&selfs, &w.profiles, &d, None, 1),
            Err(Error::Degenerate(_))
        ));
        for target in [ShiftTarget::Origin, ShiftTarget::Destination] {
            let r = short_term_shift_test(&selfs, &w.profiles, &regions, &w.residence, &uf, target, ShiftOptions::default());
            assert!(matches!(r, Err(Error::Degenerate(_))));
        }
        let lt = long_term_shift_test(&selfs, &w.profiles, &regions, &w.residence, &uf, ShiftOptions::default()).unwrap();
        assert!(lt.pairs.iter().all(|p| p.difference == 0.0));
        assert_eq!(lt.paired.p_value, 1.0);
        assert!(!lt.paired.notes.is_empty());
    }

    #[test]
    fn swapping_homes_negates_position() {
        let w = world();
        let regions = RegionTable::build(&w.profiles, &w.residence).unwrap();
        let uf = UniFrac::new(&tree());
        let diss = Dissimilarity {
            unifrac: &uf,
            regions: &regions,
            leave_self_out: false,
        };
        for p in &w.pairs {
            let x = between_homes(&diss, &w.profiles, &w.residence, &p.mover, rc("AA"), rc("BB")).unwrap();
            let y = between_homes(&diss, &w.profiles, &w.residence, &p.mover, rc("BB"), rc("AA")).unwrap();
            assert_eq!(x, -y);
        }
    }

    #[test]
    fn variability_needs_two() {
        let w = world();
        let regions = RegionTable::build(&w.profiles, &w.residence).unwrap();
        let uf = UniFrac::new(&tree());
        let one: BTreeMap<String, RegionCode> = [("n0".to_string(), rc("AA"))].into();
        assert!(variability_scale(&one, &w.profiles, &regions, &w.residence, &uf, false).is_err());
        let two: BTreeMap<String, RegionCode> = [("n0".to_string(), rc("AA")), ("n1".to_string(), rc("AA"))].into();
        let s = variability_scale(&two, &w.profiles, &regions, &w.residence, &uf, false).unwrap();
        assert!(s.is_finite() && s > 0.0);
    }

    #[test]
    fn adjacency_filter_removing_everything_fails() {
        let w = world();
        let adj = Adjacency::parse("region_a\tregion_b\nAA\tBB\n").unwrap();
        let d = ndarray::array![[0.0, 0.5, 1.0], [0.5, 0.0, 1.0], [1.0, 1.0, 0.0]];
        assert!(long_term_diversity_test(&w.pairs, &w.profiles, &d, Some(&adj), None, 1).is_err());
        assert!(long_term_diversity_test(&w.pairs, &w.profiles, &d, None, None, 1).is_ok());
    }
}
