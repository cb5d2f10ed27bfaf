use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use elo_rcc::datasets::{self, ColumnMapping};
use elo_rcc::evaluation::REPORT_CSV_HEADER;
use elo_rcc::persist::{load_model, save_model};
use elo_rcc::rcc::argmax;
use elo_rcc::rng::derived;
use elo_rcc::{
    run_cv, Dataset, EloConfig, FoldSplit, Generator, MEloConfig, Model, ModelSpec, PlayerId, RccConfig, ReportRow,
};
use serde::Serialize;

use crate::config::{ConfigError, GeneratorKind, RunConfig};

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("writing {}", path.display()))?;
    tmp.write_all(bytes).with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path).map_err(|e| e.error).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `rps.csv` -> `rps.<suffix>`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Serialize)]
struct GenerateMetadata<'a> {
    generator: &'a str,
    n: usize,
    seed: u64,
    n_players: usize,
}

pub fn generate(kind: GeneratorKind, n: usize, seed: u64, out: &Path) -> Result<()> {
    let generator = Generator::from(kind);
    let dataset = generator.generate(n, seed)?;
    datasets::save_matches(&dataset, out)?;
    datasets::save_player_names(&dataset, sidecar(out, "players.csv"))?;
    let meta = GenerateMetadata {
        generator: generator.name(),
        n,
        seed,
        n_players: dataset.n_players(),
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    write_atomic(&sidecar(out, "meta.json"), text.as_bytes())?;
    eprintln!("wrote {} matches between {} players to {}", dataset.len(), dataset.n_players(), out.display());
    Ok(())
}

fn layered(config: Option<&Path>, flags: RunConfig) -> Result<RunConfig> {
    Ok(match config {
        Some(path) => flags.over(RunConfig::from_file(path)?),
        None => flags,
    })
}

/// Loads or generates the dataset named by the configuration; returns it with
/// a short label.
fn resolve_dataset(run: &RunConfig) -> Result<(Dataset, String)> {
    match (&run.dataset, run.generator) {
        (Some(path), None) => {
            let d = datasets::load_matches(path, run.players.as_deref())?;
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((d, label))
        }
        (None, Some(g)) => {
            let g = Generator::from(g);
            Ok((g.generate(run.n.unwrap_or(crate::config::DEFAULT_N), run.seed())?, g.name().to_string()))
        }
        (Some(_), Some(_)) => bail!(ConfigError("give either a dataset file or a generator, not both".into())),
        (None, None) => bail!(ConfigError("no dataset: pass --dataset <csv> or --generator <rps|acg>".into())),
    }
}

fn resolve_folds(run: &RunConfig, dataset: &Dataset) -> Result<FoldSplit> {
    Ok(match &run.folds_file {
        Some(path) => datasets::load_folds(path, dataset.len())?,
        None => datasets::make_folds(dataset, run.n_folds(), run.seed())?,
    })
}

#[derive(Serialize)]
struct EvaluationOutput<'a> {
    dataset: &'a str,
    model: &'a str,
    param: String,
    spec: &'a ModelSpec,
    epochs: usize,
    folds: usize,
    seed: u64,
    n_players: usize,
    n_matches: usize,
    report: &'a elo_rcc::AccuracyReport,
}

fn csv_bytes(rows: &[ReportRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(REPORT_CSV_HEADER).expect("in-memory write");
    for row in rows {
        w.write_record(row.csv_fields()).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn evaluate(config: Option<&Path>, flags: RunConfig, out: Option<&Path>, csv_out: Option<&Path>, save_folds: Option<&Path>) -> Result<()> {
    let run = layered(config, flags)?;
    let spec = run.model_spec()?;
    let epochs = run.epochs()?;
    let (dataset, label) = resolve_dataset(&run)?;
    let folds = resolve_folds(&run, &dataset)?;
    if let Some(path) = save_folds {
        datasets::save_folds(&folds, path)?;
    }
    let report = run_cv(&dataset, &folds, &spec, epochs, run.seed())?;
    let output = EvaluationOutput {
        dataset: &label,
        model: spec.name(),
        param: spec.param_label(),
        spec: &spec,
        epochs,
        folds: folds.k(),
        seed: run.seed(),
        n_players: dataset.n_players(),
        n_matches: dataset.len(),
        report: &report,
    };
    let mut text = serde_json::to_string_pretty(&output)?;
    text.push('\n');
    print!("{text}");
    if let Some(path) = out {
        write_atomic(path, text.as_bytes())?;
    }
    if let Some(path) = csv_out {
        let row = ReportRow {
            dataset: label.clone(),
            model: spec.name().into(),
            param: spec.param_label(),
            report,
        };
        write_atomic(path, &csv_bytes(&[row]))?;
    }
    Ok(())
}

pub fn train(config: Option<&Path>, flags: RunConfig, out: &Path) -> Result<()> {
    let run = layered(config, flags)?;
    let spec = run.model_spec()?;
    let epochs = run.epochs()?;
    let (dataset, _) = resolve_dataset(&run)?;
    let mut rng = derived(run.seed(), &[u64::MAX]);
    let mut model = spec.build(dataset.n_players(), &mut rng)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for epoch in 0..epochs {
        use rand::seq::SliceRandom;
        order.sort_unstable();
        order.shuffle(&mut derived(run.seed(), &[u64::MAX, epoch as u64]));
        for &k in &order {
            model.observe(&dataset.matches[k], &mut rng)?;
        }
    }
    save_model(&model, Some(&dataset.player_names), out)?;
    eprintln!("trained {} on {} matches for {epochs} epochs; state in {}", spec.name(), dataset.len(), out.display());
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Table {
    T1,
    T2,
}

pub struct ReproduceArgs {
    pub table: Table,
    pub out_dir: PathBuf,
    pub n: usize,
    pub epochs: usize,
    pub n_folds: usize,
    pub seed: u64,
    pub only: Vec<String>,
    pub external: Vec<(&'static str, Option<PathBuf>, Option<PathBuf>)>,
}

/// Model columns of each table.
pub fn table_models(table: Table) -> Vec<ModelSpec> {
    match table {
        Table::T1 => vec![
            ModelSpec::Elo(EloConfig::with_k(16.0)),
            ModelSpec::MElo2(MEloConfig::default()),
            ModelSpec::Elo(EloConfig::with_k(0.1)),
            ModelSpec::EloRcc(RccConfig::with_m(81)),
        ],
        Table::T2 => [3, 9, 27].map(|m| ModelSpec::EloRcc(RccConfig::with_m(m))).to_vec(),
    }
}

pub fn reproduce(args: ReproduceArgs) -> Result<()> {
    let wanted = |name: &str| args.only.is_empty() || args.only.iter().any(|o| o == name);
    let mut sources: Vec<(String, Dataset, FoldSplit)> = Vec::new();
    for g in [Generator::Rps, Generator::Acg] {
        if wanted(g.name()) {
            let d = g.generate(args.n, args.seed)?;
            let folds = datasets::make_folds(&d, args.n_folds, args.seed)?;
            sources.push((g.name().to_string(), d, folds));
        }
    }
    for (name, matches, folds) in &args.external {
        match matches {
            Some(path) if wanted(name) => {
                let d = datasets::load_matches(path, None)?;
                let split = match folds {
                    Some(f) => datasets::load_folds(f, d.len())?,
                    None => datasets::make_folds(&d, args.n_folds, args.seed)?,
                };
                sources.push((name.to_string(), d, split));
            }
            Some(_) => {}
            None if wanted(name) && !args.only.is_empty() => {
                bail!(ConfigError(format!("--only {name} requires --{name} <matches.csv>")))
            }
            None => eprintln!("skipping {name}: no match file supplied"),
        }
    }

    let mut rows = Vec::new();
    for (name, dataset, folds) in &sources {
        for spec in table_models(args.table) {
            let report = run_cv(dataset, folds, &spec, args.epochs, args.seed)
                .with_context(|| format!("{name} / {} {}", spec.name(), spec.param_label()))?;
            eprintln!(
                "{name:<12} {:<8} {:<7} train {:6.2} ± {:4.2}  test {:6.2} ± {:4.2}",
                spec.name(),
                spec.param_label(),
                report.mean_train,
                report.std_train,
                report.mean_test,
                report.std_test
            );
            rows.push(ReportRow {
                dataset: name.clone(),
                model: spec.name().into(),
                param: spec.param_label(),
                report,
            });
        }
    }
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let file = match args.table {
        Table::T1 => "t1.csv",
        Table::T2 => "t2.csv",
    };
    let path = args.out_dir.join(file);
    write_atomic(&path, &csv_bytes(&rows))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn player_label(names: Option<&[String]>, p: usize) -> String {
    names.map_or_else(|| format!("#{p}"), |n| n[p].clone())
}

pub fn inspect(path: &Path, used_only: bool) -> Result<()> {
    let saved = load_model(path)?;
    let names = saved.player_names.as_deref();
    let model = &saved.model;
    let n = model.n_players();
    let mut out = String::new();
    use std::fmt::Write as _;

    let kind = match model {
        Model::Elo(_) => "elo",
        Model::EloRcc(_) => "elo-rcc",
        Model::MElo2(_) => "melo2",
    };
    writeln!(out, "model: {kind}, {n} players")?;
    let ratings = model.ratings().as_slice();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ratings[b].total_cmp(&ratings[a]).then(a.cmp(&b)));

    match model {
        Model::EloRcc(state) => {
            writeln!(out, "\n{:>5}  {:<24} {:>10}  {:>4}  {:>6}", "rank", "player", "rating", "cat", "p(cat)")?;
            for (rank, &p) in order.iter().enumerate() {
                let best = state.best_category(PlayerId(p));
                let dist = state.distribution(PlayerId(p));
                writeln!(out, "{:>5}  {:<24} {:>10.3}  {:>4}  {:>6.3}", rank + 1, player_label(names, p), ratings[p], best, dist[best])?;
            }
            let m = state.n_categories();
            let cats: Vec<usize> = if used_only {
                let mut used: Vec<usize> = (0..n).map(|p| argmax(state.distribution(PlayerId(p)).iter().copied())).collect();
                used.sort_unstable();
                used.dedup();
                used
            } else {
                (0..m).collect()
            };
            writeln!(out, "\ncounter table ({m}x{m}{}):", if used_only { ", used categories" } else { "" })?;
            write!(out, "{:>6}", "")?;
            for c in &cats {
                write!(out, " {:>8}", c)?;
            }
            writeln!(out)?;
            for &a in &cats {
                write!(out, "{a:>6}")?;
                for &b in &cats {
                    write!(out, " {:>8.4}", state.table().get(a, b))?;
                }
                writeln!(out)?;
            }
        }
        Model::MElo2(state) => {
            writeln!(out, "\n{:>5}  {:<24} {:>10}  {:>9} {:>9}", "rank", "player", "rating", "c0", "c1")?;
            for (rank, &p) in order.iter().enumerate() {
                let c = state.cyc[p];
                writeln!(out, "{:>5}  {:<24} {:>10.3}  {:>9.4} {:>9.4}", rank + 1, player_label(names, p), ratings[p], c[0], c[1])?;
            }
        }
        Model::Elo(_) => {
            writeln!(out, "\n{:>5}  {:<24} {:>10}", "rank", "player", "rating")?;
            for (rank, &p) in order.iter().enumerate() {
                writeln!(out, "{:>5}  {:<24} {:>10.3}", rank + 1, player_label(names, p), ratings[p])?;
            }
        }
    }
    print!("{out}");
    Ok(())
}

pub fn convert(input: &Path, output: &Path, col_i: String, col_j: String, col_outcome: String, delimiter: &str) -> Result<()> {
    let delimiter = match delimiter {
        "tab" | "\\t" => b'\t',
        d if d.len() == 1 => d.as_bytes()[0],
        d => return Err(anyhow!(ConfigError(format!("delimiter must be a single byte, got {d:?}")))),
    };
    let mapping = ColumnMapping {
        player_i: col_i,
        player_j: col_j,
        outcome: col_outcome,
        delimiter,
    };
    let rows = datasets::convert_matches(input, &mapping, output)?;
    eprintln!("converted {rows} matches into {}", output.display());
    Ok(())
}
