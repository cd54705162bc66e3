//! End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per
//! criterion and exits non-zero if any criterion fails.
//!
//! Criterion 2 needs the public Webis-SMC-12 corpus; point
//! `WEBIS_SMC12_PATH` at the extracted file or directory to enable it.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mission_intent::eval::{information_gain_of, metrics_from_matrix, ConfusionMatrix, Discretization};
use mission_intent::features::{char_ngram_cosine, extract_all, levenshtein};
use mission_intent::ingest::synthetic::{generate_synthetic_corpus, random_mission, SyntheticSpec};
use mission_intent::ingest::{assemble_corpus, parse_query_log, LabelMap};
use mission_intent::learn::{cross_validate, default_grid, stratified_folds, CvConfig};
use mission_intent::{seed, Algorithm, FeatureVector, Granularity, Intent, LabeledDataset};
use rand::Rng;
use serde_json::Value;

const EXAMPLE_LOG: &str = include_str!("../../core/tests/fixtures/example_log.tsv");
const BIN: &str = env!("CARGO_BIN_EXE_mission-intent");

enum Outcome {
    Pass(String),
    Skip(String),
}

type Check = Result<Outcome, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Run {
    let out = Command::new(BIN).args(args).output().expect("run cli");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn cli_ok(args: &[&str]) -> Result<Run, String> {
    let run = cli(args);
    ensure!(
        run.code == 0,
        "`{}` exited {}: {}",
        args.join(" "),
        run.code,
        run.stderr.trim()
    );
    Ok(run)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn c1_example_log() -> Check {
    let started = Instant::now();
    let queries = parse_query_log(EXAMPLE_LOG.as_bytes()).map_err(|e| e.to_string())?;
    let corpus = assemble_corpus(queries, vec![], &LabelMap::new()).map_err(|e| e.to_string())?;
    let stats = corpus.stats();
    ensure!(stats.missions == 3, "missions {}", stats.missions);
    ensure!(
        stats.logical_sessions == 8,
        "logical sessions {}",
        stats.logical_sessions
    );
    let m1 = corpus.mission("M1").ok_or("no M1")?;
    let sessions: Vec<&str> = m1.sessions.iter().map(|s| s.id.as_str()).collect();
    ensure!(
        sessions == ["L1", "L2", "L3", "L5", "L8"],
        "M1 sessions {sessions:?}"
    );
    ensure!(
        m1.physical_session_ids().len() == 4,
        "M1 physical sessions {:?}",
        m1.physical_session_ids()
    );
    let v = extract_all(m1);
    ensure!(v.mission.m_queries == 8.0, "m_queries {}", v.mission.m_queries);
    ensure!(
        v.mission.m_duration_incl_break == 98694.0,
        "m_duration_incl_break {}",
        v.mission.m_duration_incl_break
    );
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("queries.tsv"), EXAMPLE_LOG).map_err(|e| e.to_string())?;
    let missions = cli_ok(&["featurize", p(dir.path()), "--granularity", "mission"])?;
    let sessions = cli_ok(&["featurize", p(dir.path()), "--granularity", "logical"])?;
    ensure!(missions.stdout.lines().count() == 4, "mission csv rows");
    ensure!(sessions.stdout.lines().count() == 9, "session csv rows");
    ensure!(
        missions.stderr.contains("zero clicks"),
        "no warning about missing clicks"
    );
    Ok(Outcome::Pass(format!(
        "3 missions, 8 logical sessions, M1 = 5 sessions over 4 physical, 8 queries, 98694 s ({elapsed:?})"
    )))
}

fn c2_corpus_stats() -> Check {
    let Some(path) = std::env::var_os("WEBIS_SMC12_PATH") else {
        return Ok(Outcome::Skip(
            "WEBIS_SMC12_PATH not set; criterion 1 stands in".into(),
        ));
    };
    if !Path::new(&path).exists() {
        return Ok(Outcome::Skip(format!(
            "{} not found; criterion 1 stands in",
            path.to_string_lossy()
        )));
    }
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    let run = cli_ok(&["convert", path.to_str().unwrap(), "--out", p(out.path())])?;
    let elapsed = started.elapsed();
    let expected = "8840 queries / 127 users / 2881 logical sessions / 1378 missions";
    ensure!(run.stdout.trim() == expected, "got `{}`", run.stdout.trim());
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(Outcome::Pass(format!("{expected} ({elapsed:?})")))
}

fn c3_synthetic_experiment(work: &Path) -> Check {
    let corpus = work.join("synthetic");
    let features = work.join("features.csv");
    let reports = work.join("reports.json");
    let table = work.join("reports.csv");
    cli_ok(&["synth", "--out", p(&corpus), "--per-class", "30", "--seed", "42"])?;
    cli_ok(&["featurize", p(&corpus), "--out", p(&features)])?;
    let run = cli_ok(&[
        "experiment",
        p(&features),
        "--both-regimes",
        "--folds",
        "10",
        "--out",
        p(&reports),
        "--csv",
        p(&table),
    ])?;
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&reports).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let list = json.as_array().ok_or("reports are not a list")?;
    ensure!(list.len() == 8, "{} reports", list.len());
    let mut accuracies = Vec::new();
    for r in list {
        let algo = r["config"]["algorithm"].as_str().unwrap_or("?");
        let balanced = r["config"]["balanced"].as_bool().unwrap_or(false);
        let acc = r["metrics"]["accuracy"].as_f64().ok_or("missing accuracy")?;
        ensure!(r["units"] == 90, "{algo}: units {}", r["units"]);
        for class in ["informational", "navigational", "transactional"] {
            for m in ["precision", "recall", "f1"] {
                ensure!(
                    r["metrics"]["per_class"][class][m].is_f64(),
                    "{algo}: missing {class} {m}"
                );
            }
        }
        if !balanced {
            ensure!(acc >= 0.9, "{algo} unbalanced accuracy {acc:.3}");
            accuracies.push(format!("{algo}={acc:.3}"));
        }
    }
    let csv = std::fs::read_to_string(&table).map_err(|e| e.to_string())?;
    ensure!(csv.lines().count() == 9, "csv rows");
    ensure!(
        csv.starts_with("algorithm,balanced,granularity,seed,folds,nav_p"),
        "csv header"
    );
    ensure!(
        run.stdout.contains("Weighted") && run.stdout.contains("balanced"),
        "summary table"
    );
    Ok(Outcome::Pass(format!(
        "pooled 10-fold accuracy {}",
        accuracies.join(" ")
    )))
}

fn oracle_levenshtein(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

fn oracle_cosine(a: &str, b: &str, n: usize) -> f64 {
    let grams = |s: &str| -> BTreeMap<String, f64> {
        let chars: Vec<char> = s.chars().collect();
        let mut m = BTreeMap::new();
        let mut i = 0;
        while i + n <= chars.len() {
            *m.entry(chars[i..i + n].iter().collect::<String>()).or_insert(0.0) += 1.0;
            i += 1;
        }
        m
    };
    if a.chars().count() < n || b.chars().count() < n {
        return if a == b { 1.0 } else { 0.0 };
    }
    let (ga, gb) = (grams(a), grams(b));
    let mut dot = 0.0;
    for (g, x) in &ga {
        if let Some(y) = gb.get(g) {
            dot += x * y;
        }
    }
    let na: f64 = ga.values().map(|x| x * x).sum();
    let nb: f64 = gb.values().map(|x| x * x).sum();
    dot / (na * nb).sqrt()
}

fn random_string(rng: &mut impl Rng) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'd', ' ', 'é', 'x', '.'];
    let len = rng.random_range(0..=12);
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())])
        .collect()
}

fn c4_string_oracles() -> Check {
    let mut rng = seed::rng(4, &[]);
    for _ in 0..1_000 {
        let (a, b) = (random_string(&mut rng), random_string(&mut rng));
        let ca: Vec<char> = a.chars().collect();
        let cb: Vec<char> = b.chars().collect();
        ensure!(
            levenshtein(&a, &b) == oracle_levenshtein(&ca, &cb),
            "levenshtein({a:?}, {b:?})"
        );
    }
    let mut rng = seed::rng(4, &[1]);
    for _ in 0..1_000 {
        let (a, b) = (random_string(&mut rng), random_string(&mut rng));
        for n in [3, 4] {
            let got = char_ngram_cosine(&a, &b, n);
            let want = oracle_cosine(&a, &b, n);
            ensure!(
                (got - want).abs() <= 1e-12,
                "cosine{n}({a:?}, {b:?}) = {got} vs {want}"
            );
        }
    }
    let d = levenshtein("footbal lisbon", "football lisbon");
    ensure!(d == 1, "footbal/football distance {d}");
    Ok(Outcome::Pass(
        "1000 pairs each match the oracles; footbal/football = 1".into(),
    ))
}

fn explicit_violations(v: &FeatureVector) -> Vec<&'static str> {
    let g = |n: &str| v.get(n).unwrap();
    let mut out = Vec::new();
    if !(g("q_min") <= g("q_avg") && g("q_avg") <= g("q_max")) {
        out.push("q ordering");
    }
    if g("b_click") != g("b_unique") + g("b_revisit") {
        out.push("click split");
    }
    for n in ["q_cos3", "q_cos4", "b_cos3", "b_cos4"] {
        if !(0.0..=1.0).contains(&g(n)) {
            out.push("similarity range");
        }
    }
    if g("m_duration_excl_break") > g("m_duration_incl_break") {
        out.push("durations");
    }
    if g("m_queries") < g("m_logical") {
        out.push("queries vs sessions");
    }
    out
}

fn c5_feature_invariants() -> Check {
    let mut rng = seed::rng(5, &[]);
    let mut units = 0usize;
    let mut violations = 0usize;
    for i in 0..10_000 {
        let mission = random_mission(&mut rng, i);
        let v = extract_all(&mission);
        violations += explicit_violations(&v).len() + v.invariant_violations().len();
        units += 1;
        for s in &mission.sessions {
            let v = extract_all(s);
            violations += explicit_violations(&v).len() + v.invariant_violations().len();
            units += 1;
        }
    }
    ensure!(violations == 0, "{violations} violations");
    Ok(Outcome::Pass(format!(
        "10000 missions ({units} units), 0 violations"
    )))
}

fn c6_metrics_algebra() -> Check {
    let mut rng = seed::rng(6, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut counts = [[0u64; 3]; 3];
        for row in counts.iter_mut() {
            for c in row.iter_mut() {
                *c = rng.random_range(0..40);
            }
        }
        counts[0][0] += 1;
        let m = metrics_from_matrix(&ConfusionMatrix::from_counts(counts)).map_err(|e| e.to_string())?;
        worst = worst.max((m.weighted.recall - m.accuracy).abs());
    }
    ensure!(worst <= 1e-12, "weighted recall differs from accuracy by {worst}");
    let m = metrics_from_matrix(&ConfusionMatrix::from_counts([[5, 0, 0], [0, 3, 0], [0, 0, 2]]))
        .map_err(|e| e.to_string())?;
    let mut all = vec![m.accuracy, m.weighted.precision, m.weighted.recall, m.weighted.f1];
    for c in Intent::ALL {
        let x = m.per_class.get(c);
        all.extend([x.precision, x.recall, x.f1]);
    }
    ensure!(all.iter().all(|&x| x == 1.0), "diagonal matrix metrics {all:?}");
    Ok(Outcome::Pass(format!(
        "max |weighted recall - accuracy| = {worst:e}; diagonal gives 1.0"
    )))
}

fn c7_information_gain() -> Check {
    let half: Vec<Intent> = (0..100)
        .map(|i| {
            if i < 50 {
                Intent::Informational
            } else {
                Intent::Transactional
            }
        })
        .collect();
    let perfect: Vec<f64> = (0..100).map(|i| if i < 50 { -1.0 } else { 3.0 }).collect();
    let ig_perfect = information_gain_of(&perfect, &half, Discretization::Mdl);
    ensure!(
        (ig_perfect - 1.0).abs() <= 1e-9,
        "perfect feature IG {ig_perfect}"
    );
    let constant = information_gain_of(&[2.5; 100], &half, Discretization::Mdl);
    ensure!(constant == 0.0, "constant feature IG {constant}");

    let sizes = [454usize, 275, 184];
    let mut labels = Vec::new();
    for (c, &n) in sizes.iter().enumerate() {
        labels.extend(std::iter::repeat_n(Intent::from_index(c).unwrap(), n));
    }
    let index: Vec<f64> = labels.iter().map(|l| l.index() as f64).collect();
    let total: f64 = sizes.iter().sum::<usize>() as f64;
    let h: f64 = sizes
        .iter()
        .map(|&n| n as f64 / total)
        .map(|p| -p * p.log2())
        .sum();
    let ig = information_gain_of(&index, &labels, Discretization::Mdl);
    ensure!((ig - h).abs() <= 1e-3, "class-index IG {ig} vs H {h}");
    Ok(Outcome::Pass(format!(
        "perfect = {ig_perfect:.9}, constant = 0, class index = {ig:.5} (H = {h:.5})"
    )))
}

fn c8_cv_hygiene() -> Check {
    let corpus = generate_synthetic_corpus(&SyntheticSpec {
        informational: 40,
        navigational: 25,
        transactional: 15,
        seed: 8,
    });
    let data = LabeledDataset::from_corpus(&corpus, Granularity::Mission).map_err(|e| e.to_string())?;
    let labels = data.labels();
    let totals = data.class_counts();
    let seed = 8;
    let folds = stratified_folds(&labels, 10, seed).map_err(|e| e.to_string())?;
    let mut seen = vec![0u32; labels.len()];
    for fold in &folds {
        for &i in fold {
            seen[i] += 1;
        }
        for c in Intent::ALL {
            let here = fold.iter().filter(|&&i| labels[i] == c).count() as f64;
            let share = totals[c.index()] as f64 / 10.0;
            ensure!(
                (here - share).abs() <= 1.0,
                "fold has {here} of {c}, expected about {share}"
            );
        }
    }
    ensure!(seen.iter().all(|&s| s == 1), "folds do not partition the rows");

    let grid = &default_grid(Algorithm::DecisionTree)[..2];
    let plain = cross_validate(
        grid,
        &data,
        &CvConfig {
            seed,
            ..CvConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let balanced = cross_validate(
        grid,
        &data,
        &CvConfig {
            seed,
            balanced: true,
            ..CvConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    for (f, fold) in folds.iter().enumerate() {
        let mut expected = [0usize; 3];
        for &i in fold {
            expected[labels[i].index()] += 1;
        }
        let b = &balanced.folds[f];
        ensure!(
            b.test_counts == expected,
            "fold {f}: balanced test counts {:?} vs {expected:?}",
            b.test_counts
        );
        ensure!(
            plain.folds[f].test_counts == expected,
            "fold {f}: test counts differ"
        );
        let m = *b.fitted_counts.iter().min().unwrap();
        ensure!(
            b.fitted_counts.iter().all(|&c| c == m),
            "fold {f}: fitted counts {:?}",
            b.fitted_counts
        );
        ensure!(
            b.train_counts
                .iter()
                .zip(expected)
                .zip(totals)
                .all(|((t, e), n)| t + e == n),
            "fold {f}: training rows overlap the test fold"
        );
    }
    for (report, name) in [(&plain, "unbalanced"), (&balanced, "balanced")] {
        ensure!(
            report.units == labels.len(),
            "{name}: {} predictions",
            report.units
        );
        for (i, pred) in report.predictions.iter().enumerate() {
            ensure!(
                folds[pred.fold].binary_search(&i).is_ok(),
                "{name}: row {i} tested outside its fold"
            );
        }
    }
    Ok(Outcome::Pass(
        "10 disjoint exhaustive folds, ±1 stratification, test folds untouched by balancing".into(),
    ))
}

fn c9_determinism(work: &Path) -> Check {
    let features = work.join("features.csv");
    ensure!(features.exists(), "criterion 3 did not produce features");
    let mut outputs = Vec::new();
    for (jobs, name) in [("1", "det1.json"), ("4", "det2.json"), ("1", "det3.json")] {
        let out = work.join(name);
        cli_ok(&[
            "experiment",
            p(&features),
            "--both-regimes",
            "--seed",
            "7",
            "--jobs",
            jobs,
            "--out",
            p(&out),
        ])?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure!(outputs[0] == outputs[1], "--jobs 1 and --jobs 4 differ");
    ensure!(outputs[0] == outputs[2], "two runs with --jobs 1 differ");
    Ok(Outcome::Pass(format!(
        "3 runs, {} bytes each, byte-identical across --jobs 1/4",
        outputs[0].len()
    )))
}

fn keys(v: &Value) -> Vec<String> {
    v.as_object()
        .map(|o| o.keys().cloned().collect())
        .unwrap_or_default()
}

fn c10_granularity(work: &Path) -> Check {
    let corpus = work.join("synthetic");
    let out = work.join("compare.json");
    cli_ok(&["compare", p(&corpus), "--algorithms", "lr,dt", "--out", p(&out)])?;
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&out).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let pairs = json.as_array().ok_or("compare output is not a list")?;
    ensure!(pairs.len() == 2, "{} pairs", pairs.len());
    let mut summary = Vec::new();
    for pair in pairs {
        let (m, s) = (&pair["mission"], &pair["logical_session"]);
        ensure!(keys(m) == keys(s), "report schemas differ");
        ensure!(
            keys(&m["metrics"]) == keys(&s["metrics"]),
            "metric schemas differ"
        );
        ensure!(m["config"]["granularity"] == "mission", "mission granularity tag");
        ensure!(
            s["config"]["granularity"] == "logical_session",
            "session granularity tag"
        );
        let (mu, su) = (m["units"].as_u64().unwrap_or(0), s["units"].as_u64().unwrap_or(0));
        ensure!(mu <= su, "mission rows {mu} > session rows {su}");
        summary.push(format!(
            "{} {mu}/{su} rows",
            m["config"]["algorithm"].as_str().unwrap_or("?")
        ));
    }
    Ok(Outcome::Pass(format!(
        "paired reports with identical schema: {}",
        summary.join(", ")
    )))
}

fn main() {
    let work = tempfile::tempdir().expect("tempdir");
    let criteria: Vec<Criterion> = vec![
        ("1 example log structure", Box::new(c1_example_log)),
        ("2 corpus statistics", Box::new(c2_corpus_stats)),
        (
            "3 synthetic classification",
            Box::new(|| c3_synthetic_experiment(work.path())),
        ),
        ("4 string similarity oracles", Box::new(c4_string_oracles)),
        ("5 feature invariants", Box::new(c5_feature_invariants)),
        ("6 metrics algebra", Box::new(c6_metrics_algebra)),
        ("7 information gain", Box::new(c7_information_gain)),
        ("8 cross-validation hygiene", Box::new(c8_cv_hygiene)),
        ("9 determinism", Box::new(|| c9_determinism(work.path()))),
        (
            "10 granularity comparison",
            Box::new(|| c10_granularity(work.path())),
        ),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let started = Instant::now();
        match check() {
            Ok(Outcome::Pass(detail)) => {
                println!("PASS  criterion {name}: {detail} [{:.1?}]", started.elapsed())
            }
            Ok(Outcome::Skip(why)) => println!("SKIP  criterion {name}: {why}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
