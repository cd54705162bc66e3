//! The 22 interaction features computed for a mission (or, for the baseline,
//! a single logical session), grouped as query, mission and browsing
//! features.
//!
//! Choices worth knowing when comparing numbers:
//!
//! * Pairwise query features (`q_cos3`, `q_cos4`, `q_lehv`) average over
//!   consecutive queries in time order across the whole unit. A unit with a
//!   single query gets similarity 1.0 and distance 0.
//! * Durations span queries *and* clicks. `m_duration_excl_break` is the
//!   length of the union of the logical sessions' time spans, which is the sum
//!   of the session spans whenever sessions do not overlap.
//! * `b_cos3`/`b_cos4` average over every (query, clicked domain) pair and are
//!   0 for click-free units.
//! * The log has no explicit result-page views, so `b_serps` counts one page
//!   per query plus one return to the page for every click after a query's
//!   first.
//! * Text comparisons are on lowercased strings.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::LogCorpus;
use crate::logmodel::{ClickEvent, IntentLabel, LogicalSession, Mission, QueryRecord, Timestamp};

pub mod text;

pub use text::{char_ngram_cosine, levenshtein, tokenize};

pub const FEATURE_COUNT: usize = 22;

/// Feature names in their canonical column order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "q_min",
    "q_max",
    "q_avg",
    "q_unique",
    "q_cos3",
    "q_cos4",
    "q_lehv",
    "m_queries",
    "m_logical",
    "m_duration_incl_break",
    "m_duration_excl_break",
    "m_avg_incl_break",
    "m_avg_excl_break",
    "b_click",
    "b_unique",
    "b_revisit",
    "b_revisitunique",
    "b_clickrate",
    "b_cos3",
    "b_cos4",
    "b_avg_serps",
    "b_serps",
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryFeatures {
    pub q_min: f64,
    pub q_max: f64,
    pub q_avg: f64,
    pub q_unique: f64,
    pub q_cos3: f64,
    pub q_cos4: f64,
    pub q_lehv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionFeatures {
    pub m_queries: f64,
    pub m_logical: f64,
    /// Seconds.
    pub m_duration_incl_break: f64,
    /// Seconds.
    pub m_duration_excl_break: f64,
    pub m_avg_incl_break: f64,
    pub m_avg_excl_break: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrowsingFeatures {
    pub b_click: f64,
    pub b_unique: f64,
    pub b_revisit: f64,
    pub b_revisitunique: f64,
    pub b_clickrate: f64,
    pub b_cos3: f64,
    pub b_cos4: f64,
    pub b_avg_serps: f64,
    pub b_serps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub query: QueryFeatures,
    pub mission: MissionFeatures,
    pub browsing: BrowsingFeatures,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        let q = &self.query;
        let m = &self.mission;
        let b = &self.browsing;
        [
            q.q_min,
            q.q_max,
            q.q_avg,
            q.q_unique,
            q.q_cos3,
            q.q_cos4,
            q.q_lehv,
            m.m_queries,
            m.m_logical,
            m.m_duration_incl_break,
            m.m_duration_excl_break,
            m.m_avg_incl_break,
            m.m_avg_excl_break,
            b.b_click,
            b.b_unique,
            b.b_revisit,
            b.b_revisitunique,
            b.b_clickrate,
            b.b_cos3,
            b.b_cos4,
            b.b_avg_serps,
            b.b_serps,
        ]
    }

    pub fn from_array(v: [f64; FEATURE_COUNT]) -> Self {
        FeatureVector {
            query: QueryFeatures {
                q_min: v[0],
                q_max: v[1],
                q_avg: v[2],
                q_unique: v[3],
                q_cos3: v[4],
                q_cos4: v[5],
                q_lehv: v[6],
            },
            mission: MissionFeatures {
                m_queries: v[7],
                m_logical: v[8],
                m_duration_incl_break: v[9],
                m_duration_excl_break: v[10],
                m_avg_incl_break: v[11],
                m_avg_excl_break: v[12],
            },
            browsing: BrowsingFeatures {
                b_click: v[13],
                b_unique: v[14],
                b_revisit: v[15],
                b_revisitunique: v[16],
                b_clickrate: v[17],
                b_cos3: v[18],
                b_cos4: v[19],
                b_avg_serps: v[20],
                b_serps: v[21],
            },
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.to_array()[i])
    }

    /// Names of the invariants this vector breaks; empty for every vector
    /// produced by [`extract_all`].
    pub fn invariant_violations(&self) -> Vec<&'static str> {
        let q = &self.query;
        let m = &self.mission;
        let b = &self.browsing;
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let mut out = Vec::new();
        if !(q.q_min <= q.q_avg && q.q_avg <= q.q_max) {
            out.push("q_min <= q_avg <= q_max");
        }
        for (name, value) in [
            ("q_cos3 in [0,1]", q.q_cos3),
            ("q_cos4 in [0,1]", q.q_cos4),
            ("b_cos3 in [0,1]", b.b_cos3),
            ("b_cos4 in [0,1]", b.b_cos4),
            ("b_clickrate in [0,1]", b.b_clickrate),
        ] {
            if !unit(value) {
                out.push(name);
            }
        }
        if m.m_duration_excl_break > m.m_duration_incl_break {
            out.push("m_duration_excl_break <= m_duration_incl_break");
        }
        if b.b_click != b.b_unique + b.b_revisit {
            out.push("b_click = b_unique + b_revisit");
        }
        if b.b_revisitunique > b.b_unique.min(b.b_revisit) {
            out.push("b_revisitunique <= min(b_unique, b_revisit)");
        }
        if !(m.m_queries >= m.m_logical && m.m_logical >= 1.0) {
            out.push("m_queries >= m_logical >= 1");
        }
        if (b.b_serps - m.m_queries * b.b_avg_serps).abs() > 1e-9 * b.b_serps.max(1.0) {
            out.push("b_serps = m_queries * b_avg_serps");
        }
        if self.to_array().iter().any(|x| !x.is_finite()) {
            out.push("all features finite");
        }
        out
    }
}

/// The unit a feature vector describes.
#[derive(Debug, Clone, Copy)]
pub enum Unit<'a> {
    Mission(&'a Mission),
    Session(&'a LogicalSession),
}

impl<'a> Unit<'a> {
    pub fn id(&self) -> &'a str {
        match self {
            Unit::Mission(m) => &m.id,
            Unit::Session(s) => &s.id,
        }
    }

    pub fn sessions(&self) -> &'a [LogicalSession] {
        match self {
            Unit::Mission(m) => &m.sessions,
            Unit::Session(s) => std::slice::from_ref(*s),
        }
    }

    /// Query records in time order across all sessions of the unit.
    fn queries(&self) -> Vec<&'a QueryRecord> {
        let mut records: Vec<&QueryRecord> = self.sessions().iter().flat_map(|s| s.queries.iter()).collect();
        records.sort_by_key(|r| (r.query.timestamp, r.query.seq));
        records
    }

    fn clicks(&self) -> Vec<(&'a QueryRecord, &'a ClickEvent)> {
        let mut clicks: Vec<_> = self
            .sessions()
            .iter()
            .flat_map(|s| s.queries.iter())
            .flat_map(|r| r.clicks.iter().map(move |c| (r, c)))
            .collect();
        clicks.sort_by_key(|(_, c)| (c.timestamp, c.seq));
        clicks
    }
}

impl<'a> From<&'a Mission> for Unit<'a> {
    fn from(m: &'a Mission) -> Self {
        Unit::Mission(m)
    }
}

impl<'a> From<&'a LogicalSession> for Unit<'a> {
    fn from(s: &'a LogicalSession) -> Self {
        Unit::Session(s)
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> Option<f64> {
    let n = values.len();
    (n > 0).then(|| values.sum::<f64>() / n as f64)
}

pub fn extract_query_features(unit: Unit<'_>) -> QueryFeatures {
    let records = unit.queries();
    let lowered: Vec<String> = records.iter().map(|r| r.query.text.to_lowercase()).collect();
    let term_lists: Vec<Vec<String>> = records.iter().map(|r| tokenize(&r.query.text)).collect();
    let lengths: Vec<usize> = term_lists.iter().map(Vec::len).collect();
    let unique: BTreeSet<&str> = term_lists.iter().flatten().map(String::as_str).collect();

    let pairs = || lowered.windows(2).map(|w| (w[0].as_str(), w[1].as_str()));
    let n_pairs = lowered.len().saturating_sub(1);
    let pair_mean = |f: &dyn Fn(&str, &str) -> f64, default: f64| {
        let values: Vec<f64> = pairs().map(|(a, b)| f(a, b)).collect();
        debug_assert_eq!(values.len(), n_pairs);
        mean(values.into_iter()).unwrap_or(default)
    };

    QueryFeatures {
        q_min: lengths.iter().copied().min().unwrap_or(0) as f64,
        q_max: lengths.iter().copied().max().unwrap_or(0) as f64,
        q_avg: mean(lengths.iter().map(|&l| l as f64)).unwrap_or(0.0),
        q_unique: unique.len() as f64,
        q_cos3: pair_mean(&|a, b| char_ngram_cosine(a, b, 3), 1.0),
        q_cos4: pair_mean(&|a, b| char_ngram_cosine(a, b, 4), 1.0),
        q_lehv: pair_mean(&|a, b| levenshtein(a, b) as f64, 0.0),
    }
}

fn span(times: impl Iterator<Item = Timestamp>) -> Option<(Timestamp, Timestamp)> {
    times.fold(None, |acc, t| match acc {
        None => Some((t, t)),
        Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
    })
}

fn session_times(session: &LogicalSession) -> impl Iterator<Item = Timestamp> + '_ {
    session
        .queries
        .iter()
        .flat_map(|r| std::iter::once(r.query.timestamp).chain(r.clicks.iter().map(|c| c.timestamp)))
}

pub fn extract_mission_features(unit: Unit<'_>) -> MissionFeatures {
    let sessions = unit.sessions();
    let queries: usize = sessions.iter().map(|s| s.queries.len()).sum();

    let incl = span(sessions.iter().flat_map(session_times)).map_or(0, |(lo, hi)| hi.since(lo));

    let mut intervals: Vec<(Timestamp, Timestamp)> =
        sessions.iter().filter_map(|s| span(session_times(s))).collect();
    intervals.sort();
    let mut excl = 0i64;
    let mut current: Option<(Timestamp, Timestamp)> = None;
    for (lo, hi) in intervals {
        current = match current {
            Some((clo, chi)) if lo <= chi => Some((clo, chi.max(hi))),
            Some((clo, chi)) => {
                excl += chi.since(clo);
                Some((lo, hi))
            }
            None => Some((lo, hi)),
        };
    }
    if let Some((clo, chi)) = current {
        excl += chi.since(clo);
    }

    let per_query = |d: i64| {
        if queries > 0 {
            d as f64 / queries as f64
        } else {
            0.0
        }
    };
    MissionFeatures {
        m_queries: queries as f64,
        m_logical: sessions.len() as f64,
        m_duration_incl_break: incl as f64,
        m_duration_excl_break: excl as f64,
        m_avg_incl_break: per_query(incl),
        m_avg_excl_break: per_query(excl),
    }
}

pub fn extract_browsing_features(unit: Unit<'_>) -> BrowsingFeatures {
    let records = unit.queries();
    let clicks = unit.clicks();
    let queries = records.len();

    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut revisits = 0usize;
    for (_, click) in &clicks {
        let count = seen.entry(click.domain.as_str()).or_insert(0);
        if *count > 0 {
            revisits += 1;
        }
        *count += 1;
    }
    let revisited_domains = seen.values().filter(|&&c| c >= 2).count();
    let clicked_queries = records.iter().filter(|r| !r.clicks.is_empty()).count();

    let similarity = |n: usize| {
        mean(clicks.iter().map(|(record, click)| {
            char_ngram_cosine(&record.query.text.to_lowercase(), &click.domain.to_lowercase(), n)
        }))
        .unwrap_or(0.0)
    };

    let serps = queries
        + records
            .iter()
            .map(|r| r.clicks.len().saturating_sub(1))
            .sum::<usize>();
    let per_query = |x: usize| {
        if queries > 0 {
            x as f64 / queries as f64
        } else {
            0.0
        }
    };

    BrowsingFeatures {
        b_click: clicks.len() as f64,
        b_unique: seen.len() as f64,
        b_revisit: revisits as f64,
        b_revisitunique: revisited_domains as f64,
        b_clickrate: per_query(clicked_queries),
        b_cos3: similarity(3),
        b_cos4: similarity(4),
        b_avg_serps: per_query(serps),
        b_serps: serps as f64,
    }
}

pub fn extract_all<'a>(unit: impl Into<Unit<'a>>) -> FeatureVector {
    let unit = unit.into();
    FeatureVector {
        query: extract_query_features(unit),
        mission: extract_mission_features(unit),
        browsing: extract_browsing_features(unit),
    }
}

/// Classification unit granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Mission,
    LogicalSession,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Mission => "mission",
            Granularity::LogicalSession => "logical_session",
        }
    }
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mission" | "missions" => Ok(Granularity::Mission),
            "logical" | "logical_session" | "logical-session" | "session" => Ok(Granularity::LogicalSession),
            other => Err(format!("unknown granularity `{other}` (mission|logical)")),
        }
    }
}

/// One row of a feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub unit_id: String,
    /// Mission label; logical sessions inherit their mission's label.
    pub label: Option<IntentLabel>,
    pub features: FeatureVector,
}

/// Featurizes every unit of the corpus at the given granularity, in mission
/// id order (and session order within a mission).
pub fn featurize_corpus(corpus: &LogCorpus, granularity: Granularity) -> Vec<FeatureRow> {
    let missions: Vec<&Mission> = corpus.missions().collect();
    missions
        .par_iter()
        .flat_map_iter(|m| -> Vec<FeatureRow> {
            match granularity {
                Granularity::Mission => vec![FeatureRow {
                    unit_id: m.id.clone(),
                    label: m.label,
                    features: extract_all(*m),
                }],
                Granularity::LogicalSession => m
                    .sessions
                    .iter()
                    .map(|s| FeatureRow {
                        unit_id: s.id.clone(),
                        label: m.label,
                        features: extract_all(s),
                    })
                    .collect(),
            }
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureCsvError {
    #[error("feature csv header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("feature csv row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn csv_header() -> Vec<&'static str> {
    let mut header = vec!["unit_id", "label"];
    header.extend(FEATURE_NAMES);
    header
}

/// Writes rows as CSV with `\n` line endings; numbers use the shortest
/// representation that parses back to the same value.
pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureRow]) -> Result<(), FeatureCsvError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(csv_header())?;
    for row in rows {
        let mut record = vec![
            row.unit_id.clone(),
            row.label.map(|l| l.to_string()).unwrap_or_default(),
        ];
        record.extend(row.features.to_array().iter().map(|x| x.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>, FeatureCsvError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != csv_header() {
        return Err(FeatureCsvError::Header {
            expected: csv_header().join(","),
            found: header.join(","),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = i + 2;
        let err = |message: String| FeatureCsvError::Row { row: row_no, message };
        let label = match record.get(1).unwrap_or("").trim() {
            "" => None,
            raw => Some(raw.parse::<IntentLabel>().map_err(|e| err(e.to_string()))?),
        };
        let mut values = [0.0; FEATURE_COUNT];
        for (j, value) in values.iter_mut().enumerate() {
            let raw = record.get(j + 2).unwrap_or("");
            *value = raw
                .trim()
                .parse::<f64>()
                .map_err(|_| err(format!("{}: invalid number `{raw}`", FEATURE_NAMES[j])))?;
        }
        rows.push(FeatureRow {
            unit_id: record.get(0).unwrap_or("").to_string(),
            label,
            features: FeatureVector::from_array(values),
        });
    }
    Ok(rows)
}
