use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use tastemap_core::experiments::{
    age_at_release_matrix, detect_movers_short_term, diversity_distributions, infer_past_home,
    region_genre_zscores, region_profiles, song_age_distribution, Adjacency, PairShift, Residence, Study,
    StudyOptions, ZAxis,
};
use tastemap_core::genres::{
    cluster_agglomerative, cluster_kmeans, derive_taxonomy, row_correlation_distances, sweep_cluster_counts,
    ClusterMethod, TransitionBuilder,
};
use tastemap_core::ingest::{
    eligible_set, filter_listeners, ingest_events, parse_meta, parse_tags, read_aggregates, read_eligibility,
    read_locations, write_aggregates, write_eligibility, write_locations, write_meta, write_sampled_days,
    EventReader, LocationSummary, PeriodAggregate,
};
use tastemap_core::io::{fmt_num, read_text, write_text, Table};
use tastemap_core::metrics::{GenreCoConsumption, RarefactionMode};
use tastemap_core::model::{resolve_periods, GenreTaxonomy, ListenerMeta, ProfileWindow, RunConfig, TasteProfile};
use tastemap_core::profiles::{
    listener_profiles, profile_set_from, rarefaction_table, read_profiles, write_profiles, write_rarefaction,
    ProfileSet,
};
use tastemap_core::synth::{generate, score_recovery, GroundTruth, PipelineOutputs, SynthConfig};
use tastemap_core::Error as CoreError;

use crate::manifest::ManifestBuilder;
use crate::{AgeArgs, Axis, Cli, Command, Experiment, GenreArgs, IngestArgs, LongTermArgs, Method, MissingInput};
use crate::{ProfileArgs, QuasiArgs, RegionArgs, ScoreArgs};

/// Fixed layout under `--out-dir`.
struct Layout {
    root: PathBuf,
}

impl Layout {
    fn dir(&self, stage: &str) -> PathBuf {
        self.root.join(stage)
    }

    fn file(&self, stage: &str, name: &str) -> PathBuf {
        self.root.join(stage).join(name)
    }

    fn create(&self, stage: &str) -> Result<PathBuf> {
        let d = self.dir(stage);
        std::fs::create_dir_all(&d).with_context(|| format!("cannot create {}", d.display()))?;
        Ok(d)
    }
}

fn require(path: &Path, hint: &'static str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(MissingInput {
            path: path.to_path_buf(),
            hint,
        }
        .into())
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub(crate) fn dispatch(cli: &Cli) -> Result<()> {
    let layout = Layout {
        root: cli.out_dir.clone(),
    };
    match &cli.command {
        Command::Synth => synth(cli),
        Command::Ingest(a) => ingest(cli, &layout, a),
        Command::DeriveGenres(a) => derive_genres(cli, &layout, a),
        Command::Profiles(a) => profiles(cli, &layout, a),
        Command::Experiment(e) => experiment(cli, &layout, e),
        Command::Score(a) => score(cli, &layout, a),
    }
}

fn synth_config(cli: &Cli) -> Result<SynthConfig> {
    let mut c = match &cli.config {
        Some(p) => {
            require(p, "synthetic population config")?;
            SynthConfig::from_toml(&read_text(p)?)?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    let v = c.violations();
    if !v.is_empty() {
        return Err(CoreError::Config(v.join("; ")).into());
    }
    Ok(c)
}

/// Run config from `--config`, else the one the ingest stage recorded,
/// else the defaults; `--seed` wins over all of them.
fn run_config(cli: &Cli, layout: &Layout) -> Result<(RunConfig, Option<PathBuf>)> {
    let recorded = layout.file("ingest", "run.toml");
    let source = match &cli.config {
        Some(p) => {
            require(p, "run config")?;
            Some(p.clone())
        }
        None if recorded.is_file() => Some(recorded),
        None => None,
    };
    let mut c = match &source {
        Some(p) => RunConfig::from_toml(&read_text(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    resolve_periods(&c)?;
    Ok((c, source))
}

fn synth(cli: &Cli) -> Result<()> {
    let config = synth_config(cli)?;
    if cli.dump_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let mut m = ManifestBuilder::new("synth", config.seed, config.to_toml());
    if let Some(p) = &cli.config {
        m.input(p)?;
    }
    let files = generate(&config, &cli.out_dir)?;
    m.lap("generate");
    for p in [&files.events, &files.meta, &files.tags, &files.ground_truth, &files.run_config] {
        m.output(p);
    }
    m.finish(&cli.out_dir)?;
    println!("{} events written to {}", files.event_count, cli.out_dir.display());
    Ok(())
}

fn ingest(cli: &Cli, layout: &Layout, a: &IngestArgs) -> Result<()> {
    let (config, source) = run_config(cli, layout)?;
    if cli.dump_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    require(&a.events, "event log")?;
    require(&a.meta, "listener metadata")?;
    let dir = layout.create("ingest")?;
    let mut m = ManifestBuilder::new("ingest", config.seed, config.to_toml());
    if let Some(p) = source {
        m.input(&p)?;
    }
    m.input(&a.events)?;
    m.input(&a.meta)?;
    let periods = resolve_periods(&config)?;
    let ing = ingest_events(&a.events, &periods, &config.holidays, config.last_year())?;
    m.lap("parse events");
    let (meta, meta_stats) = parse_meta(&a.meta)?;
    if meta_stats.malformed > 0 {
        log::warn!("{} metadata rows left out: {:?}", meta_stats.malformed, meta_stats.samples);
    }
    let eligibility = filter_listeners(&ing.aggregates, &ing.locations, &meta, config.min_streams_per_profile);
    let eligible = eligibility.values().filter(|x| x.is_none()).count();
    log::info!("{eligible} of {} listeners eligible", eligibility.len());
    let holiday_ids: Vec<String> = config.holidays.iter().map(|h| h.id.clone()).collect();
    let out = |name: &str| dir.join(name);
    write_aggregates(&out("aggregates.jsonl"), &ing.aggregates)?;
    write_locations(&out("locations.tsv"), &ing.locations, &holiday_ids)?;
    write_eligibility(&out("eligibility.tsv"), &eligibility)?;
    write_sampled_days(&out("sampled_days.tsv"), &periods)?;
    write_meta(&out("meta.tsv"), meta.values())?;
    write_text(&out("run.toml"), &config.to_toml())?;
    for name in ["aggregates.jsonl", "locations.tsv", "eligibility.tsv", "sampled_days.tsv", "meta.tsv", "run.toml"] {
        m.output(out(name));
    }
    m.lap("write");
    m.finish(&dir)?;
    println!(
        "{} events, {} listeners, {eligible} eligible",
        ing.stats.lines - ing.stats.malformed,
        eligibility.len()
    );
    Ok(())
}

/// Ingest artifacts the later stages share.
struct Ingested {
    aggregates: Vec<PeriodAggregate>,
    locations: Vec<LocationSummary>,
    eligible: BTreeSet<String>,
    meta: BTreeMap<String, ListenerMeta>,
}

fn load_eligible(layout: &Layout, m: &mut ManifestBuilder) -> Result<BTreeSet<String>> {
    let p = layout.file("ingest", "eligibility.tsv");
    require(&p, "run `ingest` first")?;
    m.input(&p)?;
    Ok(eligible_set(&read_eligibility(&p)?))
}

fn load_locations(layout: &Layout, m: &mut ManifestBuilder) -> Result<Vec<LocationSummary>> {
    let p = layout.file("ingest", "locations.tsv");
    require(&p, "run `ingest` first")?;
    m.input(&p)?;
    Ok(read_locations(&p)?)
}

fn load_meta(layout: &Layout, m: &mut ManifestBuilder) -> Result<BTreeMap<String, ListenerMeta>> {
    let p = layout.file("ingest", "meta.tsv");
    require(&p, "run `ingest` first")?;
    m.input(&p)?;
    Ok(parse_meta(&p)?.0)
}

fn load_aggregates(layout: &Layout, m: &mut ManifestBuilder) -> Result<Vec<PeriodAggregate>> {
    let p = layout.file("ingest", "aggregates.jsonl");
    require(&p, "run `ingest` first")?;
    m.input(&p)?;
    Ok(read_aggregates(&p)?)
}

fn load_ingested(layout: &Layout, m: &mut ManifestBuilder, aggregates: bool) -> Result<Ingested> {
    Ok(Ingested {
        eligible: load_eligible(layout, m)?,
        locations: load_locations(layout, m)?,
        meta: load_meta(layout, m)?,
        aggregates: if aggregates { load_aggregates(layout, m)? } else { Vec::new() },
    })
}

fn load_taxonomy(layout: &Layout, m: &mut ManifestBuilder) -> Result<GenreTaxonomy> {
    let p = layout.file("genres", "taxonomy.json");
    require(&p, "run `derive-genres` first")?;
    m.input(&p)?;
    Ok(GenreTaxonomy::from_json(&read_text(&p)?)?)
}

fn load_profiles(layout: &Layout, m: &mut ManifestBuilder, k: usize) -> Result<ProfileSet> {
    let p = layout.file("profiles", "listeners.csv");
    require(&p, "run `profiles` first")?;
    m.input(&p)?;
    Ok(profile_set_from(k, &read_profiles(&p)?)?)
}

fn method(m: Method) -> ClusterMethod {
    match m {
        Method::Agglomerative => ClusterMethod::Agglomerative,
        Method::Kmeans => ClusterMethod::Kmeans,
    }
}

/// Aggregate-window genre counts of each eligible listener under an
/// artist partition.
fn genre_counts(
    aggregates: &[PeriodAggregate],
    eligible: &BTreeSet<String>,
    artist_genre: &BTreeMap<&str, usize>,
    k: usize,
) -> Vec<TasteProfile> {
    let mut counts: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for a in aggregates.iter().filter(|a| eligible.contains(&*a.listener_id)) {
        let row = counts.entry(&a.listener_id).or_insert_with(|| vec![0; k]);
        for (artist, &n) in &a.artist_counts {
            if let Some(&g) = artist_genre.get(&**artist) {
                row[g] += n;
            }
        }
    }
    counts
        .into_iter()
        .map(|(l, c)| TasteProfile::new(l, ProfileWindow::Aggregate, c))
        .collect()
}

fn derive_genres(cli: &Cli, layout: &Layout, a: &GenreArgs) -> Result<()> {
    let (config, _) = run_config(cli, layout)?;
    if cli.dump_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let mut m = ManifestBuilder::new("derive-genres", config.seed, config.to_toml());
    require(&a.events, "event log")?;
    let eligible = load_eligible(layout, &mut m)?;
    let aggregates = load_aggregates(layout, &mut m)?;
    m.input(&a.events)?;
    let tags = match &a.tags {
        Some(p) => {
            require(p, "artist tags")?;
            m.input(p)?;
            parse_tags(p)?
        }
        None => BTreeMap::new(),
    };
    let dir = layout.create("genres")?;
    m.lap("load");

    let mut builder = TransitionBuilder::new(eligible.iter().cloned());
    EventReader::open(&a.events)?
        .with_max_release_year(config.last_year().expect("validated"))
        .for_each(|e| builder.push(e.listener_id, e.timestamp, e.artist_id))?;
    let transitions = builder.finish(config.top_n_artists, config.session_gap_minutes, config.include_self_transitions)?;
    m.lap("transitions");
    let n = transitions.n();
    if config.k > n {
        return Err(CoreError::Config(format!("K = {} exceeds the {n} artists with transitions", config.k)).into());
    }
    let (distances, constant) = row_correlation_distances(&transitions.probabilities());
    if !constant.is_empty() {
        log::warn!("{} artists without outgoing transitions", constant.len());
    }
    m.lap("distances");

    let reference: Vec<Option<String>> = transitions.artists.iter().map(|a| tags.get(a).cloned()).collect();
    let sweep_path = dir.join("sweep.csv");
    let mut sweep = Table::csv(["k", "method", "ami", "completeness"]);
    if reference.iter().flatten().count() >= 2 && !a.sweep_k.is_empty() {
        let ks: Vec<usize> = a.sweep_k.iter().copied().filter(|&k| k >= 1 && k <= n).collect();
        let methods: Vec<ClusterMethod> = a.sweep_methods.iter().map(|&x| method(x)).collect();
        for r in sweep_cluster_counts(&distances, &reference, &ks, &methods, config.seed)? {
            sweep.push(vec![r.k.to_string(), r.method.to_string(), fmt_num(r.ami), fmt_num(r.completeness)]);
        }
    } else {
        log::warn!("cluster sweep skipped: fewer than 2 tagged artists");
    }
    sweep.write(&sweep_path)?;
    m.output(&sweep_path);
    m.lap("sweep");

    let partition = match a.method {
        Method::Agglomerative => cluster_agglomerative(&distances, config.k)?,
        Method::Kmeans => cluster_kmeans(&distances, config.k, config.seed)?.labels,
    };
    let artist_genre: BTreeMap<&str, usize> =
        transitions.artists.iter().map(String::as_str).zip(partition.iter().copied()).collect();
    let listener_genres = genre_counts(&aggregates, &eligible, &artist_genre, config.k);
    let co = GenreCoConsumption::from_profiles(config.k, &listener_genres)?;
    let taxonomy = derive_taxonomy(&transitions.artists, &partition, &tags, &co)?;
    m.lap("taxonomy");
    let tax_path = dir.join("taxonomy.json");
    let tree_path = dir.join("tree.nwk");
    write_text(&tax_path, &taxonomy.to_json())?;
    write_text(&tree_path, &format!("{}\n", taxonomy.tree.to_newick()))?;
    m.output(&tax_path);
    m.output(&tree_path);
    m.finish(&dir)?;
    println!("{} artists in {} genres", n, config.k);
    Ok(())
}

fn profiles(cli: &Cli, layout: &Layout, a: &ProfileArgs) -> Result<()> {
    let (config, _) = run_config(cli, layout)?;
    if cli.dump_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let mut m = ManifestBuilder::new("profiles", config.seed, config.to_toml());
    let taxonomy = load_taxonomy(layout, &mut m)?;
    let ing = load_ingested(layout, &mut m, true)?;
    let dir = layout.create("profiles")?;
    let set = listener_profiles(&ing.aggregates, &taxonomy, &ing.eligible)?;
    m.lap("listener profiles");
    let k = taxonomy.k();
    let listeners_path = dir.join("listeners.csv");
    let rows: Vec<&TasteProfile> = set
        .listeners()
        .flat_map(|l| ProfileWindow::ALL.map(|w| set.get(l, w).expect("every window present")))
        .collect();
    write_profiles(&listeners_path, k, rows)?;
    m.output(&listeners_path);

    let residence = Residence::from_locations(&ing.locations, &ing.eligible);
    let mut regions: Vec<TasteProfile> = Vec::new();
    for w in ProfileWindow::ALL {
        regions.extend(region_profiles(&set, residence.window(w), w)?.into_values());
    }
    regions.sort_by(|x, y| x.owner_id().cmp(y.owner_id()).then(x.window().cmp(&y.window())));
    let regions_path = dir.join("regions.csv");
    write_profiles(&regions_path, k, &regions)?;
    m.output(&regions_path);
    m.lap("region profiles");

    let mode = if a.rao_stirling {
        RarefactionMode::RaoStirling(&taxonomy.genre_distance)
    } else {
        RarefactionMode::Unique
    };
    let curves = rarefaction_table(&set, &a.depths, a.replicates, config.seed, a.rarefaction_listeners, mode);
    let rare_path = dir.join("rarefaction.csv");
    write_rarefaction(&rare_path, &curves)?;
    m.output(&rare_path);
    m.lap("rarefaction");
    m.finish(&dir)?;
    println!("{} listener profiles over {k} genres", set.len());
    Ok(())
}

fn experiment(cli: &Cli, layout: &Layout, e: &Experiment) -> Result<()> {
    let (config, _) = run_config(cli, layout)?;
    if cli.dump_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    match e {
        Experiment::ShortTerm(a) => short_term(&config, layout, a),
        Experiment::LongTerm(a) => long_term(&config, layout, a),
        Experiment::Regions(a) => regions(&config, layout, a),
        Experiment::Ages(a) => ages(&config, layout, a),
    }
}

fn study_options<'a>(config: &RunConfig, a: &QuasiArgs) -> StudyOptions<'a> {
    let per_origin = match a.per_origin {
        Some(0) => None,
        Some(n) => Some(n),
        None => Some(config.pairs_per_stratum_sample),
    };
    StudyOptions {
        seed: config.seed,
        per_origin,
        favorite_genre: a.favorite_genre,
        leave_self_out: a.leave_self_out,
        ..StudyOptions::default()
    }
}

fn pair_table(rows: impl IntoIterator<Item = (String, PairShift)>) -> Table {
    let mut t = Table::csv([
        "test",
        "mover",
        "control",
        "origin",
        "destination",
        "mover_value",
        "control_value",
        "difference",
        "normalized",
    ]);
    for (test, p) in rows {
        t.push(vec![
            test,
            p.mover,
            p.control,
            p.origin.to_string(),
            p.destination.to_string(),
            fmt_num(p.mover_value),
            fmt_num(p.control_value),
            fmt_num(p.difference),
            p.normalized.map(fmt_num).unwrap_or_default(),
        ]);
    }
    t
}

struct Inputs {
    manifest: ManifestBuilder,
    taxonomy: GenreTaxonomy,
    profiles: ProfileSet,
    ing: Ingested,
    dir: PathBuf,
}

fn quasi_inputs(config: &RunConfig, layout: &Layout, command: &str) -> Result<Inputs> {
    let mut m = ManifestBuilder::new(command, config.seed, config.to_toml());
    let taxonomy = load_taxonomy(layout, &mut m)?;
    let profiles = load_profiles(layout, &mut m, taxonomy.k())?;
    let ing = load_ingested(layout, &mut m, false)?;
    let dir = layout.create("experiments")?;
    m.lap("load");
    Ok(Inputs {
        manifest: m,
        taxonomy,
        profiles,
        ing,
        dir,
    })
}

fn short_term(config: &RunConfig, layout: &Layout, a: &QuasiArgs) -> Result<()> {
    let Inputs {
        manifest: mut m,
        taxonomy,
        profiles,
        ing,
        dir,
    } = quasi_inputs(config, layout, "experiment short-term")?;
    let study = Study {
        profiles: &profiles,
        locations: &ing.locations,
        eligible: &ing.eligible,
        meta: &ing.meta,
        tree: &taxonomy.tree,
        distances: &taxonomy.genre_distance,
    };
    let mut report = study.short_term(study_options(config, a))?;
    m.lap("short-term");
    let pairs = pair_table(
        std::mem::take(&mut report.toward_origin.pairs)
            .into_iter()
            .map(|p| ("toward_origin".to_string(), p))
            .chain(
                std::mem::take(&mut report.toward_destination.pairs)
                    .into_iter()
                    .map(|p| ("toward_destination".to_string(), p)),
            ),
    );
    let report_path = dir.join("short_term.json");
    let pairs_path = dir.join("short_term_pairs.csv");
    write_text(&report_path, &json(&report))?;
    pairs.write(&pairs_path)?;
    m.output(&report_path);
    m.output(&pairs_path);
    m.finish_as(&dir.join("manifest_short_term.json"))?;
    println!(
        "{} pairs; toward origin p = {}, toward destination p = {}",
        report.matching.pairs,
        fmt_num(report.toward_origin.result.p_value),
        fmt_num(report.toward_destination.result.p_value)
    );
    Ok(())
}

fn long_term(config: &RunConfig, layout: &Layout, a: &LongTermArgs) -> Result<()> {
    let Inputs {
        manifest: mut m,
        taxonomy,
        profiles,
        ing,
        dir,
    } = quasi_inputs(config, layout, "experiment long-term")?;
    let adjacency = match (&a.adjacency, a.no_adjacency) {
        (_, true) => None,
        (Some(p), _) => {
            require(p, "region adjacency")?;
            m.input(p)?;
            Some(Adjacency::from_file(p)?)
        }
        (None, false) => Some(Adjacency::us_states()),
    };
    let study = Study {
        profiles: &profiles,
        locations: &ing.locations,
        eligible: &ing.eligible,
        meta: &ing.meta,
        tree: &taxonomy.tree,
        distances: &taxonomy.genre_distance,
    };
    let options = StudyOptions {
        strict_controls: !a.lenient_controls,
        adjacency: adjacency.as_ref(),
        ..study_options(config, &a.quasi)
    };
    let mut report = study.long_term(options)?;
    m.lap("long-term");
    let pairs = pair_table(
        std::mem::take(&mut report.shift.pairs)
            .into_iter()
            .map(|p| ("long_term_shift".to_string(), p)),
    );
    let report_path = dir.join("long_term.json");
    let pairs_path = dir.join("long_term_pairs.csv");
    write_text(&report_path, &json(&report))?;
    pairs.write(&pairs_path)?;
    m.output(&report_path);
    m.output(&pairs_path);
    m.finish_as(&dir.join("manifest_long_term.json"))?;
    println!(
        "{} pairs; paired shift p = {}, {:.1}% of movers closer to their present home than their control",
        report.matching.pairs,
        fmt_num(report.shift.paired.p_value),
        100.0 * report.shift.fraction_negative
    );
    Ok(())
}

fn regions(config: &RunConfig, layout: &Layout, a: &RegionArgs) -> Result<()> {
    let Inputs {
        manifest: mut m,
        taxonomy,
        profiles,
        ing,
        dir,
    } = quasi_inputs(config, layout, "experiment regions")?;
    let residence = Residence::from_locations(&ing.locations, &ing.eligible);
    let w = ProfileWindow::Aggregate;
    let pooled = region_profiles(&profiles, residence.window(w), w)?;
    let genres = match &a.genres {
        Some(g) => g.clone(),
        None => {
            let mut totals: Vec<(u64, usize)> = (0..taxonomy.k())
                .map(|g| (pooled.values().map(|p| p.counts()[g]).sum(), g))
                .collect();
            totals.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
            totals.into_iter().take(6).map(|(_, g)| g).collect()
        }
    };
    let z = region_genre_zscores(&pooled, &genres)?;
    let mut zt = Table::csv(["genre", "label", "region", "fraction", "z"]);
    for r in &z {
        zt.push(vec![
            r.genre.to_string(),
            taxonomy.genre_labels[r.genre].clone(),
            r.region.to_string(),
            fmt_num(r.fraction),
            fmt_num(r.z),
        ]);
    }
    let div = diversity_distributions(&profiles, residence.window(w), w, &taxonomy.genre_distance)?;
    let mut dt = Table::csv(["region", "listeners", "min", "q25", "median", "q75", "max", "mean", "aggregate"]);
    let mut lt = Table::csv(["region", "listener_id", "rao_stirling"]);
    for r in &div {
        let mut row = vec![r.region.to_string(), r.listeners.len().to_string()];
        row.extend(r.quantiles.iter().map(|&q| fmt_num(q)));
        row.push(fmt_num(r.mean));
        row.push(fmt_num(r.aggregate));
        dt.push(row);
        for (l, v) in &r.listeners {
            lt.push(vec![r.region.to_string(), l.clone(), fmt_num(*v)]);
        }
    }
    m.lap("regions");
    for (t, name) in [(&zt, "regions_z.csv"), (&dt, "region_diversity.csv"), (&lt, "region_diversity_listeners.csv")] {
        let p = dir.join(name);
        t.write(&p)?;
        m.output(p);
    }
    m.finish_as(&dir.join("manifest_regions.json"))?;
    println!("{} regions, {} genres mapped", pooled.len(), genres.len());
    Ok(())
}

fn ages(config: &RunConfig, layout: &Layout, a: &AgeArgs) -> Result<()> {
    let mut m = ManifestBuilder::new("experiment ages", config.seed, config.to_toml());
    let ing = load_ingested(layout, &mut m, true)?;
    let dir = layout.create("experiments")?;
    m.lap("load");
    let (reference, rows) = song_age_distribution(&ing.aggregates, &ing.meta, Some(&ing.eligible), a.reference_year);
    let mut st = Table::csv(["age_bucket", "song_age", "streams", "fraction"]);
    for r in &rows {
        st.push(vec![
            r.age_bucket.start_year().to_string(),
            r.song_age.to_string(),
            r.streams.to_string(),
            fmt_num(r.fraction),
        ]);
    }
    let axis = match a.axis {
        Axis::Column => ZAxis::Column,
        Axis::Row => ZAxis::Row,
    };
    let matrix = age_at_release_matrix(&ing.aggregates, &ing.meta, Some(&ing.eligible), a.min_cell_streams, axis);
    let mut at = Table::csv(["release_year", "listener_age"]);
    for (y, age) in matrix.row_argmax() {
        at.push(vec![y.to_string(), age.to_string()]);
    }
    m.lap("ages");
    for (t, name) in [
        (&st, "song_ages.csv"),
        (&matrix.z_table(), "age_matrix.csv"),
        (&matrix.long_table(), "age_matrix_cells.csv"),
        (&at, "age_argmax.csv"),
    ] {
        let p = dir.join(name);
        t.write(&p)?;
        m.output(p);
    }
    m.finish_as(&dir.join("manifest_ages.json"))?;
    match reference {
        Some(y) => println!(
            "song ages measured from {y}; {} of {} age-matrix cells unmasked",
            matrix.unmasked_cells(),
            matrix.release_years.len() * matrix.ages.len()
        ),
        None => println!("no streams with a release year"),
    }
    Ok(())
}

fn score(cli: &Cli, layout: &Layout, a: &ScoreArgs) -> Result<()> {
    require(&a.truth, "ground truth written by `synth`")?;
    let truth = GroundTruth::from_json(&read_text(&a.truth)?)?;
    if cli.dump_config {
        print!("{}", truth.config.to_toml());
        return Ok(());
    }
    let mut m = ManifestBuilder::new("score", truth.seed, truth.config.to_toml());
    m.input(&a.truth)?;
    let tax_path = layout.file("genres", "taxonomy.json");
    let taxonomy = if tax_path.is_file() { Some(load_taxonomy(layout, &mut m)?) } else { None };
    let have_ingest = layout.file("ingest", "eligibility.tsv").is_file() && layout.file("ingest", "locations.tsv").is_file();
    let (eligible, locations) = if have_ingest {
        (Some(load_eligible(layout, &mut m)?), load_locations(layout, &mut m)?)
    } else {
        (None, Vec::new())
    };
    let short = eligible.as_ref().map(|e| detect_movers_short_term(&locations, e));
    let long = eligible.as_ref().map(|e| infer_past_home(&locations, e));
    let lt_path = layout.file("experiments", "long_term.json");
    let mean_normalized = if lt_path.is_file() {
        m.input(&lt_path)?;
        let v: serde_json::Value = serde_json::from_str(&read_text(&lt_path)?).context("long_term.json")?;
        v.pointer("/shift/mean_normalized").and_then(|x| x.as_f64())
    } else {
        None
    };
    if taxonomy.is_none() && eligible.is_none() {
        return Err(MissingInput {
            path: tax_path,
            hint: "nothing to score; run the pipeline first",
        }
        .into());
    }
    let report = score_recovery(
        &truth,
        PipelineOutputs {
            taxonomy: taxonomy.as_ref(),
            considered: eligible.as_ref(),
            short_term_movers: short.as_deref(),
            long_term_movers: long.as_deref(),
            mean_normalized_difference: mean_normalized,
        },
    )?;
    let dir = layout.create("score")?;
    let p = dir.join("recovery.json");
    write_text(&p, &report.to_json())?;
    m.output(&p);
    m.lap("score");
    m.finish(&dir)?;
    print!("{}", report.to_json());
    Ok(())
}
