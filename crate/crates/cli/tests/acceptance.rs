//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances and sizes are pinned here.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;

use tastemap_core::experiments::{Study, StudyOptions};
use tastemap_core::genres::correlation_distance;
use tastemap_core::metrics::{
    genre_distances, jensen_shannon, rao_stirling, rarefaction_curve, upgma, GenreCoConsumption, RarefactionMode,
    UniFrac, UniFracMode,
};
use tastemap_core::model::{substream, GenreTree, ProfileWindow};
use tastemap_core::stats::{mann_whitney_u_with, MwuMethod};
use tastemap_core::synth::{synthesize_profiles, SynthConfig};

const METRIC_TOL: f64 = 1e-9;
const METRIC_CASES: usize = 1000;
const UPGMA_TOL: f64 = 1e-9;
const UPGMA_CASES: usize = 500;
const RAO_TOL: f64 = 1e-12;
const MWU_TOL: f64 = 0.02;
const NULL_REPLICATES: u64 = 200;
const NULL_MIN_PAIRS: usize = 500;
const NULL_RANGE: (f64, f64) = (0.02, 0.09);
const POWER_PAIRS: usize = 1000;
const POWER_REPLICATES: u64 = 20;
const POWER_P: f64 = 0.001;
const POWER_SHARE: f64 = 0.95;
const ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const GENRE_AMI: f64 = 0.9;
const RAREFACTION_SHARE: f64 = 0.9;
const ADOLESCENCE_SHARE: f64 = 0.9;
const PIPELINE_LIMIT: Duration = Duration::from_secs(600);
const GENRE_LIMIT: Duration = Duration::from_secs(180);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 metric axioms", metric_axioms),
        ("2 oracle equivalence", oracle_equivalence),
        ("3 null calibration", null_calibration),
        ("4 planted effect power and direction", planted_effect),
        ("5 genre recovery", genre_recovery),
        ("6 rarefaction consistency", rarefaction_consistency),
        ("7 adolescence signal", adolescence_signal),
        ("8 determinism", determinism),
        ("9 desk-scale performance", desk_scale),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = std::panic::catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked"));
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {name}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- helpers

fn distribution(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k)
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) })
        .collect();
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        w[0] = 1.0;
    } else {
        w.iter_mut().for_each(|x| *x /= s);
    }
    w
}

fn dissimilarity(rng: &mut impl Rng, k: usize) -> Array2<f64> {
    let mut d = Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..i {
            let v = rng.random_range(0.01..2.0);
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

fn tastemap(out: &Path, args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_tastemap"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(String::from_utf8_lossy(&o.stdout).into_owned())
    } else {
        Err(format!("tastemap {} failed: {}", args.join(" "), String::from_utf8_lossy(&o.stderr).trim()))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn write_synth_config(dir: &Path, text: &str) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let p = dir.join("synth.toml");
    std::fs::write(&p, text).unwrap();
    p
}

/// Synthesize, ingest and derive genres. Returns (data dir, output dir).
fn synth_ingest_genres(root: &Path, config: &str, extra: &[&str], genre_args: &[&str]) -> Result<(PathBuf, PathBuf), String> {
    let data = root.join("data");
    let out = root.join("out");
    let cfg = write_synth_config(root, config);
    let mut a = extra.to_vec();
    a.extend(["--config", s(&cfg), "synth"]);
    tastemap(&data, &a)?;
    let mut a = extra.to_vec();
    let run = data.join("run.toml");
    let events = data.join("events.tsv");
    let meta = data.join("meta.tsv");
    a.extend(["--config", s(&run), "ingest", "--events", s(&events), "--meta", s(&meta)]);
    tastemap(&out, &a)?;
    let tags = data.join("tags.tsv");
    let mut a = extra.to_vec();
    a.extend(["derive-genres", "--events", s(&events), "--tags", s(&tags)]);
    a.extend(genre_args);
    tastemap(&out, &a)?;
    Ok((data, out))
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(String::from)).collect())
        .collect()
}

// ------------------------------------------------------------- criterion 1

fn metric_axioms() -> Outcome {
    let start = Instant::now();
    let mut rng = substream(1, "acceptance/metric-axioms");
    let mut worst = 0.0f64;
    let mut bump = |v: f64| worst = worst.max(v);
    for _ in 0..METRIC_CASES {
        let k = rng.random_range(2..=12);
        let tree = upgma(&dissimilarity(&mut rng, k)).unwrap();
        let u = UniFrac::new(&tree);
        let (p, q, r) = (distribution(&mut rng, k), distribution(&mut rng, k), distribution(&mut rng, k));
        let d = |a: &[f64], b: &[f64]| u.distance(a, b, UniFracMode::Raw).unwrap();
        bump(d(&p, &p).abs());
        bump(-d(&p, &q));
        bump((d(&p, &q) - d(&q, &p)).abs());
        bump(d(&p, &r) - d(&p, &q) - d(&q, &r));
    }
    for _ in 0..METRIC_CASES {
        let k = rng.random_range(2..=12);
        let (p, q, r) = (distribution(&mut rng, k), distribution(&mut rng, k), distribution(&mut rng, k));
        let js = |a: &[f64], b: &[f64]| jensen_shannon(a, b).unwrap();
        let pq = js(&p, &q);
        bump(-pq);
        bump(pq - 1.0);
        bump((pq - js(&q, &p)).abs());
        let root = |a: &[f64], b: &[f64]| js(a, b).max(0.0).sqrt();
        bump(root(&p, &r) - root(&p, &q) - root(&q, &r));
    }
    for _ in 0..METRIC_CASES {
        let k = rng.random_range(2..=12);
        let d = dissimilarity(&mut rng, k);
        let mut point = vec![0.0; k];
        point[rng.random_range(0..k)] = 1.0;
        bump(rao_stirling(&point, &d).abs());
        let p = distribution(&mut rng, k);
        if p.iter().filter(|&&x| x > 0.0).count() >= 2 && rao_stirling(&p, &d) <= METRIC_TOL {
            bump(f64::INFINITY);
        }
    }
    for _ in 0..METRIC_CASES {
        let n = rng.random_range(3..30);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b, c, e) = (
            rng.random_range(0.1..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(0.1..10.0),
            rng.random_range(-10.0..10.0),
        );
        let Ok(base) = correlation_distance(&u, &v) else { continue };
        let u2: Vec<f64> = u.iter().map(|x| a * x + b).collect();
        let v2: Vec<f64> = v.iter().map(|x| c * x + e).collect();
        bump((correlation_distance(&u2, &v2).unwrap() - base).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= METRIC_TOL && elapsed < Duration::from_secs(60),
        format!("{METRIC_CASES} cases per property, worst violation {worst:.2e} (tol {METRIC_TOL:e}), {:.1}s", elapsed.as_secs_f64()),
    )
}

// ------------------------------------------------------------- criterion 2

fn naive_upgma(d: &Array2<f64>) -> BTreeMap<Vec<usize>, f64> {
    let mut clusters: Vec<Vec<usize>> = (0..d.nrows()).map(|i| vec![i]).collect();
    let mut merged = BTreeMap::new();
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let total: f64 = clusters[a].iter().flat_map(|&i| clusters[b].iter().map(move |&j| d[[i, j]])).sum();
                let mean = total / (clusters[a].len() * clusters[b].len()) as f64;
                if mean < best.0 {
                    best = (mean, a, b);
                }
            }
        }
        let (mean, a, b) = best;
        let taken = clusters.remove(b);
        clusters[a].extend(taken);
        clusters[a].sort_unstable();
        merged.insert(clusters[a].clone(), mean / 2.0);
    }
    merged
}

fn clades(tree: &GenreTree) -> BTreeMap<Vec<usize>, f64> {
    let nodes = tree.nodes();
    let mut leaves: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut out = BTreeMap::new();
    for i in tree.postorder() {
        let n = &nodes[i];
        let mut set: Vec<usize> = match n.leaf {
            Some(g) => vec![g],
            None => n.children.iter().flat_map(|&c| leaves[c].clone()).collect(),
        };
        set.sort_unstable();
        if n.leaf.is_none() {
            out.insert(set.clone(), n.height);
        }
        leaves[i] = set;
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let mut rng = substream(2, "acceptance/oracles");
    let mut topology_mismatches = 0;
    let mut height_err = 0.0f64;
    for _ in 0..UPGMA_CASES {
        let k = rng.random_range(2..=7);
        let d = dissimilarity(&mut rng, k);
        let got = clades(&upgma(&d).unwrap());
        let want = naive_upgma(&d);
        if got.keys().ne(want.keys()) {
            topology_mismatches += 1;
            continue;
        }
        for (c, h) in &want {
            height_err = height_err.max((got[c] - h).abs());
        }
    }
    let mut rao_err = 0.0f64;
    for _ in 0..500 {
        let k = rng.random_range(1..=30);
        let mut d = Array2::zeros((k, k));
        d.iter_mut().for_each(|x| *x = rng.random_range(0.0..2.0));
        let p = distribution(&mut rng, k);
        let mut want = 0.0;
        for i in 0..k {
            for j in 0..k {
                want += p[i] * p[j] * d[[i, j]];
            }
        }
        rao_err = rao_err.max((rao_stirling(&p, &d) - want).abs());
    }
    let mut mwu_err = 0.0f64;
    for _ in 0..500 {
        let shift = rng.random_range(0.0..1.5);
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0) + shift).collect();
        let exact = mann_whitney_u_with(&x, &y, MwuMethod::Exact).unwrap();
        let normal = mann_whitney_u_with(&x, &y, MwuMethod::Normal).unwrap();
        mwu_err = mwu_err.max((exact.p_value - normal.p_value).abs());
    }
    outcome(
        topology_mismatches == 0 && height_err <= UPGMA_TOL && rao_err <= RAO_TOL && mwu_err <= MWU_TOL,
        format!(
            "UPGMA {UPGMA_CASES} matrices: {topology_mismatches} topology mismatches, max height error {height_err:.1e}; \
             Rao-Stirling max error {rao_err:.1e}; Mann-Whitney n1=n2=12 max |exact-normal| {mwu_err:.4}"
        ),
    )
}

// --------------------------------------------------------- criteria 3 and 4

/// Population for the relocation experiments: 10 regions, 30% movers half
/// of them long-term, holidays at the past home with probability 0.8.
fn relocation_config(seed: u64, listeners_per_region: usize, adoption: f64) -> SynthConfig {
    SynthConfig {
        seed,
        regions: 10,
        listeners_per_region,
        mover_fraction: 0.3,
        short_term_share: 0.5,
        holiday_probability: 0.8,
        adoption,
        ..SynthConfig::default()
    }
}

struct LongTermRun {
    pairs: usize,
    p_value: f64,
    effect: f64,
    mean_normalized: f64,
}

/// Long-term shift test on a synthesized population, with the genre tree
/// derived from listener co-consumption as in the pipeline.
fn long_term_run(config: &SynthConfig, per_origin: Option<usize>) -> LongTermRun {
    let pop = synthesize_profiles(config, config.run.min_streams_per_profile).unwrap();
    let co = GenreCoConsumption::from_profiles(config.genres, pop.profiles.window(ProfileWindow::Aggregate)).unwrap();
    let distances = genre_distances(&co);
    let tree = upgma(&distances).unwrap();
    let study = Study {
        profiles: &pop.profiles,
        locations: &pop.locations,
        eligible: &pop.eligible,
        meta: &pop.meta,
        tree: &tree,
        distances: &distances,
    };
    let r = study
        .long_term(StudyOptions {
            seed: config.seed,
            per_origin,
            ..StudyOptions::default()
        })
        .unwrap();
    LongTermRun {
        pairs: r.shift.paired.n,
        p_value: r.shift.paired.p_value,
        effect: r.shift.paired.effect,
        mean_normalized: r.shift.mean_normalized.unwrap_or(f64::NAN),
    }
}

fn null_calibration() -> Outcome {
    let start = Instant::now();
    let mut rejected = 0;
    let mut min_pairs = usize::MAX;
    for rep in 0..NULL_REPLICATES {
        let r = long_term_run(&relocation_config(1000 + rep, 450, 0.0), None);
        min_pairs = min_pairs.min(r.pairs);
        rejected += usize::from(r.p_value < 0.05);
    }
    let rate = rejected as f64 / NULL_REPLICATES as f64;
    let elapsed = start.elapsed();
    outcome(
        (NULL_RANGE.0..=NULL_RANGE.1).contains(&rate) && min_pairs >= NULL_MIN_PAIRS && elapsed < PIPELINE_LIMIT,
        format!(
            "rejection rate at 0.05 over {NULL_REPLICATES} null replicates {rate:.3} (want {:?}), min pairs {min_pairs}",
            NULL_RANGE
        ),
    )
}

fn planted_effect() -> Outcome {
    let mut hits = 0;
    let mut pair_counts = Vec::new();
    for rep in 0..POWER_REPLICATES {
        let r = long_term_run(&relocation_config(2000 + rep, 1000, 0.75), Some(POWER_PAIRS / 10));
        pair_counts.push(r.pairs);
        hits += usize::from(r.p_value < POWER_P && r.effect < 0.0 && r.pairs == POWER_PAIRS);
    }
    let share = hits as f64 / POWER_REPLICATES as f64;
    let means: Vec<f64> = ALPHAS
        .iter()
        .map(|&alpha| {
            let total: f64 = (0..POWER_REPLICATES)
                .map(|rep| long_term_run(&relocation_config(3000 + rep, 450, alpha), None).mean_normalized)
                .sum();
            total / POWER_REPLICATES as f64
        })
        .collect();
    // The paired difference is mover minus control distance change toward
    // the present home, so stronger adoption drives it down.
    let monotone = means.windows(2).all(|w| w[1] < w[0]);
    outcome(
        share >= POWER_SHARE && monotone,
        format!(
            "alpha 0.75: {hits}/{POWER_REPLICATES} replicates with {POWER_PAIRS} pairs, p < {POWER_P} and destination-ward \
             (pairs {}..{}); mean normalized difference over alpha {ALPHAS:?}: {:?}",
            pair_counts.iter().min().unwrap(),
            pair_counts.iter().max().unwrap(),
            means.iter().map(|m| (m * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

// ------------------------------------------------------------- criterion 5

fn genre_recovery() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = "seed = 1\ngenres = 20\nlambda = 0.9\nlisteners_per_region = 300\n";
    let run = || -> Result<Outcome, String> {
        let (data, out) = synth_ingest_genres(dir.path(), config, &[], &["--sweep-k", "10,15,20,30,40"])?;
        let truth = data.join("ground_truth.json");
        let report: serde_json::Value = serde_json::from_str(&tastemap(&out, &["score", "--truth", s(&truth)])?).unwrap();
        let ami = report["genre_ami"].as_f64().unwrap_or(f64::NAN);
        let mut best: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for row in read_csv(&out.join("genres/sweep.csv")) {
            let a: f64 = row["ami"].parse().unwrap();
            let k: usize = row["k"].parse().unwrap();
            let e = best.entry(row["method"].clone()).or_insert((f64::MIN, 0));
            if a > e.0 {
                *e = (a, k);
            }
        }
        let argmax_ok = best.len() == 2 && best.values().all(|&(_, k)| k == 20);
        Ok(outcome(
            ami >= GENRE_AMI && argmax_ok,
            format!(
                "AMI vs plant at k=20 {ami:.4} (want >= {GENRE_AMI}); sweep argmax {:?}",
                best.iter().map(|(m, (a, k))| format!("{m}: k={k} ({a:.3})")).collect::<Vec<_>>()
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e))
}

// ------------------------------------------------------------- criterion 6

fn rarefaction_consistency() -> Outcome {
    // Listeners stream from the planted genres, so the taxonomy matches
    // their consumption exactly.
    let config = SynthConfig {
        seed: 4,
        regions: 5,
        listeners_per_region: 40,
        ..SynthConfig::default()
    };
    let pop = synthesize_profiles(&config, 0).unwrap();
    let mut shares = Vec::new();
    let mut monotone = true;
    let depths: Vec<usize> = (1..=60).map(|i| i * 10).collect();
    for (i, p) in pop.profiles.window(ProfileWindow::Aggregate).enumerate() {
        let total = p.total() as usize;
        let mut d = depths.clone();
        d.push(total);
        let rows = rarefaction_curve(p.counts(), &d, 20, config.seed, i as u64, RarefactionMode::Unique);
        monotone &= rows.windows(2).all(|w| w[0].mean <= w[1].mean);
        let asymptote = rows.last().unwrap().mean;
        let at200 = rows.iter().find(|r| r.depth == 200).unwrap().mean;
        shares.push(at200 / asymptote);
    }
    shares.sort_by(f64::total_cmp);
    let median = shares[shares.len() / 2];
    outcome(
        median >= RAREFACTION_SHARE && monotone,
        format!(
            "{} listeners: median share of asymptotic unique genres at 200 streams {median:.3} (want >= {RAREFACTION_SHARE}), \
             10th percentile {:.3}; curves monotone: {monotone}",
            shares.len(),
            shares[shares.len() / 10]
        ),
    )
}

// ------------------------------------------------------------- criterion 7

fn adolescence_signal() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = "seed = 2\nlisteners_per_region = 300\nadolescence_weight = 0.8\nrecency_weight = 0.1\npeak_age = 15\n";
    let run = || -> Result<Outcome, String> {
        let data = dir.path().join("data");
        let out = dir.path().join("out");
        let cfg = write_synth_config(dir.path(), config);
        tastemap(&data, &["--config", s(&cfg), "synth"])?;
        let (run, events, meta) = (data.join("run.toml"), data.join("events.tsv"), data.join("meta.tsv"));
        tastemap(&out, &["--config", s(&run), "ingest", "--events", s(&events), "--meta", s(&meta)])?;
        tastemap(&out, &["experiment", "ages", "--min-cell-streams", "10000"])?;
        let rows = read_csv(&out.join("experiments/age_argmax.csv"));
        let inside = rows
            .iter()
            .filter(|r| (10..=20).contains(&r["listener_age"].parse::<i32>().unwrap()))
            .count();
        let share = inside as f64 / rows.len().max(1) as f64;
        Ok(outcome(
            share >= ADOLESCENCE_SHARE && rows.len() >= 20,
            format!(
                "{inside}/{} unmasked release years peak at listener age 10-20 ({share:.3}, want >= {ADOLESCENCE_SHARE})",
                rows.len()
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e))
}

// ------------------------------------------------------------- criterion 8

fn full_pipeline(root: &Path, threads: &str, seed: &str) -> Result<PathBuf, String> {
    let config = "regions = 6\ngenres = 8\nartists_per_genre = 10\nlisteners_per_region = 60\n";
    let extra = ["--threads", threads, "--seed", seed];
    let (_, out) = synth_ingest_genres(root, config, &extra, &["--sweep-k", "4,8,12"])?;
    // Rao-Stirling curves first so the unique-genre table is the last write.
    let steps: [&[&str]; 6] = [
        &["profiles", "--rao-stirling"],
        &["profiles"],
        &["experiment", "short-term"],
        &["experiment", "long-term"],
        &["experiment", "regions"],
        &["experiment", "ages", "--min-cell-streams", "100"],
    ];
    for step in steps {
        let mut a = vec!["--threads", threads];
        a.extend(step);
        tastemap(&out, &a)?;
    }
    Ok(root.to_path_buf())
}

/// Every file under `root` except run manifests, which carry timings.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if !p.file_name().unwrap().to_string_lossy().starts_with("manifest") {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = || -> Result<Outcome, String> {
        let a = snapshot(&full_pipeline(&dir.path().join("a"), "1", "17")?);
        let b = snapshot(&full_pipeline(&dir.path().join("b"), "1", "17")?);
        let c = snapshot(&full_pipeline(&dir.path().join("c"), "8", "17")?);
        let d = snapshot(&full_pipeline(&dir.path().join("d"), "8", "18")?);
        let differing = |x: &BTreeMap<PathBuf, Vec<u8>>, y: &BTreeMap<PathBuf, Vec<u8>>| -> Vec<String> {
            x.keys()
                .chain(y.keys())
                .filter(|k| x.get(*k) != y.get(*k))
                .map(|k| k.display().to_string())
                .collect()
        };
        let (ab, ac) = (differing(&a, &b), differing(&a, &c));
        let seed_matters = !differing(&a, &d).is_empty();
        Ok(outcome(
            ab.is_empty() && ac.is_empty() && seed_matters && a.len() > 20,
            format!(
                "{} files compared; same seed differing: {ab:?}; threads 1 vs 8 differing: {ac:?}; another seed changes outputs: {seed_matters}",
                a.len()
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e))
}

// ------------------------------------------------------------- criterion 9

fn desk_scale() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    // 50 regions x 1000 listeners, 20 genres x 50 artists; short sampled
    // days keep the log near 5M events, so the profile minimum is lowered.
    let config = "seed = 9\nregions = 50\ngenres = 20\nartists_per_genre = 50\nlisteners_per_region = 1000\n\
                  streams_per_period = 30\nholiday_streams = 5\n\n[run]\nmin_streams_per_profile = 20\n";
    let run = || -> Result<Outcome, String> {
        let start = Instant::now();
        let data = dir.path().join("data");
        let out = dir.path().join("out");
        let cfg = write_synth_config(dir.path(), config);
        let synth = tastemap(&data, &["--config", s(&cfg), "synth"])?;
        let events: u64 = synth.split_whitespace().next().unwrap().parse().unwrap();
        let (run, ev, meta, tags) = (data.join("run.toml"), data.join("events.tsv"), data.join("meta.tsv"), data.join("tags.tsv"));
        tastemap(&out, &["--config", s(&run), "ingest", "--events", s(&ev), "--meta", s(&meta)])?;
        let genre_start = Instant::now();
        tastemap(&out, &["derive-genres", "--events", s(&ev), "--tags", s(&tags)])?;
        let genres = genre_start.elapsed();
        tastemap(&out, &["profiles"])?;
        for e in ["short-term", "long-term", "regions", "ages"] {
            tastemap(&out, &["experiment", e])?;
        }
        let total = start.elapsed();
        Ok(outcome(
            total < PIPELINE_LIMIT && genres < GENRE_LIMIT && (4_000_000..=6_000_000).contains(&events),
            format!(
                "50000 listeners, 1000 artists, {events} events: pipeline {:.1}s (limit {}s), genre derivation {:.1}s (limit {}s), {} worker threads",
                total.as_secs_f64(),
                PIPELINE_LIMIT.as_secs(),
                genres.as_secs_f64(),
                GENRE_LIMIT.as_secs(),
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e))
}
