mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mission_intent::eval::{
    rank_features_with, summary_table, write_ranking_csv, write_reports_csv, Discretization, EvalReport,
};
use mission_intent::experiment::{run_experiment, ExperimentConfig};
use mission_intent::features::{featurize_corpus, read_feature_csv, write_feature_csv, FeatureRow};
use mission_intent::ingest::convert::{convert, ConvertError};
use mission_intent::ingest::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use mission_intent::ingest::{parse_labels, IngestError, LogCorpus};
use mission_intent::learn::{
    balance, compare_granularity, default_grid, fit, grid_search, GranularityComparison, LearnError, Model,
};
use mission_intent::logmodel::validate_mission;
use mission_intent::{Algorithm, Granularity, IntentLabel, LabeledDataset};

use config::{resolve, ConfigFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    FeatureCsv(#[from] mission_intent::features::FeatureCsvError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Convert(ConvertError::NoInput(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "mission-intent",
    version,
    about = "Search mission intent classification"
)]
struct Cli {
    /// Settings file with `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert an annotated AOL-style log into queries/clicks/labels TSVs.
    Convert {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a labelled synthetic corpus as TSVs.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Missions per intent class.
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute the 22 interaction features for every unit.
    Featurize {
        dir: PathBuf,
        #[arg(long)]
        granularity: Option<Granularity>,
        /// CSV destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip malformed missions instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Cross-validate classifiers on a feature CSV.
    Experiment {
        features: PathBuf,
        /// Label file overriding the CSV label column, keyed by unit id.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        cv: CvArgs,
        /// Attach the information-gain ranking to each report.
        #[arg(long)]
        ig: bool,
        /// JSON destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one CSV row per report.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Rank features by information gain.
    Rank {
        features: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// `mdl` or `equal-frequency`.
        #[arg(long)]
        discretization: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune on the whole feature CSV and save the fitted model as JSON.
    Train {
        features: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// One of dt, lr, svm, rf.
        #[arg(long)]
        algorithm: Algorithm,
        /// Undersample to equal class sizes before fitting.
        #[arg(long)]
        balanced: bool,
        #[arg(long)]
        inner_folds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label every row of a feature CSV with a saved model.
    Predict {
        model: PathBuf,
        features: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate on missions and on logical sessions side by side.
    Compare {
        dir: PathBuf,
        #[command(flatten)]
        cv: CvArgs,
        #[arg(long)]
        lenient: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CvArgs {
    /// Comma-separated subset of dt,lr,svm,rf.
    #[arg(long)]
    algorithms: Option<String>,
    /// Undersample training folds to equal class sizes.
    #[arg(long)]
    balanced: bool,
    /// Run both the natural and the balanced regime.
    #[arg(long, conflicts_with = "balanced")]
    both_regimes: bool,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    inner_folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Unit granularity recorded in the reports.
    #[arg(long)]
    granularity: Option<Granularity>,
}

struct Resolved {
    algorithms: Vec<Algorithm>,
    regimes: Vec<bool>,
    folds: usize,
    inner_folds: usize,
    seed: u64,
    granularity: Granularity,
}

fn parse_algorithms(raw: &str) -> Result<Vec<Algorithm>, CliError> {
    let mut out = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let a: Algorithm = part.parse().map_err(CliError::Usage)?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no algorithms selected".into()));
    }
    Ok(out)
}

impl CvArgs {
    fn resolve(&self, cfg: &ConfigFile) -> Result<Resolved, CliError> {
        let algorithms = match self.algorithms.as_deref().or(cfg.raw("algorithms")) {
            Some(raw) => parse_algorithms(raw)?,
            None => Algorithm::ALL.to_vec(),
        };
        let regimes = if self.both_regimes {
            vec![false, true]
        } else if self.balanced {
            vec![true]
        } else {
            match cfg.raw("balanced") {
                None | Some("false") => vec![false],
                Some("true") => vec![true],
                Some("both") => vec![false, true],
                Some(other) => {
                    return Err(CliError::Usage(format!(
                        "config key `balanced`: expected true, false or both, got `{other}`"
                    )))
                }
            }
        };
        let folds = resolve(self.folds, cfg, "folds", 10)?;
        let inner_folds = resolve(self.inner_folds, cfg, "inner_folds", 3)?;
        if folds < 2 || inner_folds < 2 {
            return Err(CliError::Usage("fold counts must be at least 2".into()));
        }
        Ok(Resolved {
            algorithms,
            regimes,
            folds,
            inner_folds,
            seed: resolve(self.seed, cfg, "seed", 42)?,
            granularity: resolve(self.granularity, cfg, "granularity", Granularity::Mission)?,
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            fs::write(path, bytes).map_err(io_err(path))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

/// Reads the TSV trio, reporting absent optional files and structural
/// problems on stderr.
fn load_corpus(dir: &Path, lenient: bool) -> Result<LogCorpus, CliError> {
    let (corpus, missing) = LogCorpus::read_tsv_dir(dir)?;
    for file in missing {
        match file {
            mission_intent::ingest::CLICK_FILE => eprintln!(
                "warning: {file} not found in {}; browsing features use zero clicks",
                dir.display()
            ),
            _ => eprintln!("warning: {file} not found in {}", dir.display()),
        }
    }
    let mut bad = Vec::new();
    for mission in corpus.missions() {
        for v in validate_mission(mission) {
            eprintln!(
                "{}: mission {}: {v}",
                if lenient { "warning" } else { "error" },
                mission.id
            );
            bad.push(mission.id.clone());
        }
    }
    if bad.is_empty() {
        return Ok(corpus);
    }
    if !lenient {
        return Err(CliError::Failed(format!(
            "{} structural violation(s); rerun with --lenient to skip those missions",
            bad.len()
        )));
    }
    bad.dedup();
    eprintln!("warning: skipping {} malformed mission(s)", bad.len());
    Ok(LogCorpus::from_missions(
        corpus.missions().filter(|m| !bad.contains(&m.id)).cloned(),
    ))
}

fn read_rows(features: &Path, labels: Option<&Path>) -> Result<Vec<FeatureRow>, CliError> {
    let file = fs::File::open(features).map_err(io_err(features))?;
    let mut rows = read_feature_csv(std::io::BufReader::new(file))?;
    if let Some(path) = labels {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let map = parse_labels(std::io::BufReader::new(file))?;
        for row in &mut rows {
            if let Some(label) = map.get(&row.unit_id) {
                row.label = Some(*label);
            }
        }
    }
    Ok(rows)
}

fn labeled(rows: Vec<FeatureRow>, granularity: Granularity) -> Result<LabeledDataset, CliError> {
    let unusable = rows
        .iter()
        .filter(|r| r.label.is_none_or(IntentLabel::is_ambiguous))
        .count();
    if unusable > 0 {
        eprintln!("note: {unusable} unlabeled or ambiguous row(s) left out");
    }
    let data = LabeledDataset::from_feature_rows(rows, granularity)?;
    if data.is_empty() {
        return Err(CliError::Failed("no labeled rows".into()));
    }
    Ok(data)
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let jobs = resolve(cli.jobs, &cfg, "jobs", 0usize)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| CliError::Failed(e.to_string()))?;

    match cli.command {
        Command::Convert { input, out } => {
            let corpus = convert(&input)?;
            corpus.write_tsv_dir(&out)?;
            println!("{}", corpus.stats());
        }
        Command::Synth { out, per_class, seed } => {
            let per_class = resolve(per_class, &cfg, "per_class", 30)?;
            let seed = resolve(seed, &cfg, "seed", 42)?;
            let corpus = generate_synthetic_corpus(&SyntheticSpec::balanced(per_class, seed));
            corpus.write_tsv_dir(&out)?;
            println!("{}", corpus.stats());
        }
        Command::Featurize {
            dir,
            granularity,
            out,
            lenient,
        } => {
            let granularity = resolve(granularity, &cfg, "granularity", Granularity::Mission)?;
            let lenient = lenient || resolve(None, &cfg, "lenient", false)?;
            let corpus = load_corpus(&dir, lenient)?;
            let rows = featurize_corpus(&corpus, granularity);
            let mut buf = Vec::new();
            write_feature_csv(&mut buf, &rows)?;
            write_output(out.as_deref(), &buf)?;
            eprintln!("{} {} row(s)", rows.len(), granularity.as_str());
        }
        Command::Experiment {
            features,
            labels,
            cv,
            ig,
            out,
            csv,
        } => {
            let r = cv.resolve(&cfg)?;
            let data = labeled(read_rows(&features, labels.as_deref())?, r.granularity)?;
            let config = ExperimentConfig {
                algorithms: r.algorithms,
                regimes: r.regimes,
                folds: r.folds,
                inner_folds: r.inner_folds,
                seed: r.seed,
                information_gain: ig,
            };
            let reports = run_experiment(&data, &config)?;
            if out.is_some() {
                print!("{}", summary_table(&reports));
            } else {
                eprint!("{}", summary_table(&reports));
            }
            write_output(out.as_deref(), &to_json(&reports))?;
            if let Some(path) = csv {
                write_report_rows(&path, &reports)?;
            }
        }
        Command::Rank {
            features,
            labels,
            discretization,
            out,
        } => {
            let method = match discretization.as_deref().or(cfg.raw("discretization")) {
                None | Some("mdl") => Discretization::Mdl,
                Some("equal-frequency" | "equal_frequency" | "ef") => Discretization::EqualFrequency(10),
                Some(other) => {
                    return Err(CliError::Usage(format!(
                        "unknown discretization `{other}` (mdl|equal-frequency)"
                    )))
                }
            };
            let data = labeled(read_rows(&features, labels.as_deref())?, Granularity::Mission)?;
            let ranking = rank_features_with(&data, method);
            let mut buf = Vec::new();
            write_ranking_csv(&mut buf, &ranking).map_err(io_err(Path::new("<buffer>")))?;
            write_output(out.as_deref(), &buf)?;
        }
        Command::Train {
            features,
            labels,
            algorithm,
            balanced,
            inner_folds,
            seed,
            out,
        } => {
            let seed = resolve(seed, &cfg, "seed", 42)?;
            let inner_folds = resolve(inner_folds, &cfg, "inner_folds", 3)?;
            if inner_folds < 2 {
                return Err(CliError::Usage("fold counts must be at least 2".into()));
            }
            let mut data = labeled(read_rows(&features, labels.as_deref())?, Granularity::Mission)?;
            if balanced || resolve(None, &cfg, "balanced", false)? {
                data = balance(&data, seed);
            }
            let spec = grid_search(&default_grid(algorithm), &data, inner_folds, seed)?;
            let model = fit(&spec, &data)?;
            eprintln!("{} {} on {} row(s)", algorithm, spec.params, data.len());
            let mut json = model.to_json();
            json.push('\n');
            write_output(out.as_deref(), json.as_bytes())?;
        }
        Command::Predict { model, features, out } => {
            let text = fs::read_to_string(&model).map_err(io_err(&model))?;
            let model = Model::from_json(&text)?;
            let rows = read_rows(&features, None)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| CliError::Failed(e.to_string());
            w.write_record(["unit_id", "predicted", "label"])
                .map_err(csv_err)?;
            let (mut scored, mut hits) = (0usize, 0usize);
            for row in &rows {
                let predicted = model.predict(&row.features);
                if let Some(truth) = row.label.and_then(IntentLabel::intent) {
                    scored += 1;
                    hits += usize::from(truth == predicted);
                }
                let label = row.label.map(|l| l.to_string()).unwrap_or_default();
                w.write_record([row.unit_id.as_str(), predicted.as_str(), label.as_str()])
                    .map_err(csv_err)?;
            }
            let buf = w.into_inner().map_err(|e| CliError::Failed(e.to_string()))?;
            write_output(out.as_deref(), &buf)?;
            if scored > 0 {
                eprintln!(
                    "accuracy {:.3} on {scored} labeled row(s)",
                    hits as f64 / scored as f64
                );
            }
        }
        Command::Compare {
            dir,
            cv,
            lenient,
            out,
        } => {
            let r = cv.resolve(&cfg)?;
            let lenient = lenient || resolve(None, &cfg, "lenient", false)?;
            let corpus = load_corpus(&dir, lenient)?;
            let mut pairs: Vec<GranularityComparison> = Vec::new();
            for &balanced in &r.regimes {
                for &algorithm in &r.algorithms {
                    let cv = mission_intent::learn::CvConfig {
                        folds: r.folds,
                        inner_folds: r.inner_folds,
                        balanced,
                        seed: r.seed,
                    };
                    pairs.push(compare_granularity(&corpus, &default_grid(algorithm), &cv)?);
                }
            }
            let table = comparison_table(&pairs);
            if out.is_some() {
                print!("{table}");
            } else {
                eprint!("{table}");
            }
            write_output(out.as_deref(), &to_json(&pairs))?;
        }
    }
    Ok(())
}

fn write_report_rows(path: &Path, reports: &[EvalReport]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_reports_csv(&mut buf, reports).map_err(|e| CliError::Failed(e.to_string()))?;
    write_output(Some(path), &buf)
}

fn comparison_table(pairs: &[GranularityComparison]) -> String {
    let mut out = format!(
        "{:<11}{:<6}{:<17}{:>7}{:>10}{:>8}\n",
        "regime", "algo", "unit", "rows", "w-F1", "Accu"
    );
    for pair in pairs {
        for report in [&pair.mission, &pair.logical_session] {
            out.push_str(&format!(
                "{:<11}{:<6}{:<17}{:>7}{:>10.3}{:>8.3}\n",
                if report.config.balanced {
                    "balanced"
                } else {
                    "unbalanced"
                },
                report.config.algorithm.short_name(),
                report.config.granularity.as_str(),
                report.units,
                report.metrics.weighted.f1,
                report.metrics.accuracy
            ));
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
