//! One-shot converter from AOL-style annotated logs (the layout of the
//! session/mission annotated AOL sample) into the query/click/label TSV trio.
//!
//! Input files are tab-separated with a header row. Columns are matched by
//! name, ignoring case and any non-alphanumeric characters:
//!
//! | role              | accepted names                                   | required |
//! |-------------------|--------------------------------------------------|----------|
//! | user              | `AnonID`, `UserID`, `User`                       | yes      |
//! | query text        | `Query`                                          | yes      |
//! | query time        | `QueryTime`, `Time`, `Timestamp`                 | yes      |
//! | mission           | `Mission`, `MissionID`                           | yes      |
//! | logical session   | `LogicalSession`, `LogicalSessionID`, `Session`, `SessionID` | yes |
//! | physical session  | `PhysicalSession`, `PhysicalSessionID`           | no       |
//! | result rank       | `ItemRank`, `Rank`                               | no       |
//! | clicked url       | `ClickURL`, `URL`                                | no       |
//! | click time        | `ClickTime`                                      | no       |
//! | label             | `Label`, `Intent`                                | no       |
//!
//! Rows sharing `(user, query, query time)` are one query; every row with a
//! clicked URL adds one click to it. Without a click-time column, clicks are
//! stamped with their query's time. Without a physical-session column,
//! physical sessions are cut at gaps longer than [`PHYSICAL_SESSION_GAP_SECS`].
//! Mission or session ids reused by several users are qualified as
//! `user/id` so that they stay unique.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::ingest::{assemble_corpus, IngestError, LabelMap, LogCorpus};
use crate::logmodel::{domain_of, ClickEvent, IntentLabel, QueryEvent, Timestamp};

pub const PHYSICAL_SESSION_GAP_SECS: i64 = 30 * 60;

#[derive(Debug, thiserror::Error)]
pub enum ConvertError {
    #[error("no input files found at {0}")]
    NoInput(String),
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: &'static str },
    #[error("{file} line {line}: {message}")]
    Row {
        file: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Role {
    User,
    Query,
    Time,
    Mission,
    Logical,
    Physical,
    Rank,
    Url,
    ClickTime,
    Label,
}

fn role_of(name: &str) -> Option<Role> {
    let key: String = name
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect();
    Some(match key.as_str() {
        "anonid" | "userid" | "user" => Role::User,
        "query" => Role::Query,
        "querytime" | "time" | "timestamp" => Role::Time,
        "mission" | "missionid" => Role::Mission,
        "logicalsession" | "logicalsessionid" | "session" | "sessionid" => Role::Logical,
        "physicalsession" | "physicalsessionid" => Role::Physical,
        "itemrank" | "rank" => Role::Rank,
        "clickurl" | "url" => Role::Url,
        "clicktime" => Role::ClickTime,
        "label" | "intent" => Role::Label,
        _ => return None,
    })
}

struct RawRow {
    user: String,
    query: String,
    time: Timestamp,
    mission: String,
    logical: String,
    physical: Option<String>,
    rank: Option<u32>,
    url: Option<String>,
    click_time: Option<Timestamp>,
    label: Option<IntentLabel>,
}

/// Lists the input files: `path` itself, or the non-hidden regular files of a
/// directory in name order.
pub fn input_files(path: &Path) -> Result<Vec<PathBuf>, ConvertError> {
    let io_err = |source| ConvertError::Io {
        path: path.display().to_string(),
        source,
    };
    let meta = fs::metadata(path).map_err(io_err)?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if !hidden && entry.file_type().map_err(io_err)?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(ConvertError::NoInput(path.display().to_string()));
    }
    Ok(files)
}

fn read_rows(path: &Path, rows: &mut Vec<RawRow>) -> Result<(), ConvertError> {
    let file_name = path.display().to_string();
    let io_err = |source| ConvertError::Io {
        path: file_name.clone(),
        source,
    };
    let reader = BufReader::new(fs::File::open(path).map_err(io_err)?);
    let mut lines = reader.lines();
    let Some(header) = lines.next() else {
        return Ok(());
    };
    let header = header.map_err(io_err)?;
    let mut columns: HashMap<Role, usize> = HashMap::new();
    for (i, name) in header.trim_end_matches('\r').split('\t').enumerate() {
        if let Some(role) = role_of(name) {
            columns.entry(role).or_insert(i);
        }
    }
    for (role, column) in [
        (Role::User, "user"),
        (Role::Query, "query"),
        (Role::Time, "query time"),
        (Role::Mission, "mission"),
        (Role::Logical, "logical session"),
    ] {
        if !columns.contains_key(&role) {
            return Err(ConvertError::MissingColumn {
                file: file_name.clone(),
                column,
            });
        }
    }

    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(io_err)?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        let get = |role: Role| -> Option<&str> {
            columns
                .get(&role)
                .and_then(|&c| cells.get(c))
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
        };
        let row_err = |message: String| ConvertError::Row {
            file: file_name.clone(),
            line: line_no,
            message,
        };
        let required = |role: Role, what: &str| get(role).ok_or_else(|| row_err(format!("missing {what}")));
        let parse_time = |raw: &str| {
            raw.parse::<Timestamp>()
                .map_err(|_| row_err(format!("invalid timestamp `{raw}`")))
        };
        let rank = match get(Role::Rank) {
            None => None,
            Some(raw) => match raw.parse::<u32>() {
                Ok(r) if r >= 1 => Some(r),
                _ => return Err(row_err(format!("invalid rank `{raw}`"))),
            },
        };
        let label = match get(Role::Label) {
            None => None,
            Some(raw) => Some(
                raw.parse::<IntentLabel>()
                    .map_err(|_| row_err(format!("unknown label `{raw}`")))?,
            ),
        };
        rows.push(RawRow {
            user: required(Role::User, "user")?.to_string(),
            query: required(Role::Query, "query")?.to_string(),
            time: parse_time(required(Role::Time, "query time")?)?,
            mission: required(Role::Mission, "mission")?.to_string(),
            logical: required(Role::Logical, "logical session")?.to_string(),
            physical: get(Role::Physical).map(str::to_string),
            rank,
            url: get(Role::Url).map(str::to_string),
            click_time: get(Role::ClickTime).map(parse_time).transpose()?,
            label,
        });
    }
    Ok(())
}

/// Ids used by more than one user.
fn shared_ids<'a>(pairs: impl Iterator<Item = (&'a str, &'a str)>) -> Vec<String> {
    let mut owners: BTreeMap<&str, &str> = BTreeMap::new();
    let mut shared = Vec::new();
    for (id, user) in pairs {
        match owners.get(id) {
            Some(owner) if *owner != user => shared.push(id.to_string()),
            Some(_) => {}
            None => {
                owners.insert(id, user);
            }
        }
    }
    shared.sort();
    shared.dedup();
    shared
}

/// Reads annotated logs at `input` (file or directory) and assembles a corpus.
pub fn convert(input: &Path) -> Result<LogCorpus, ConvertError> {
    let mut rows = Vec::new();
    for file in input_files(input)? {
        read_rows(&file, &mut rows)?;
    }

    let shared_missions = shared_ids(rows.iter().map(|r| (r.mission.as_str(), r.user.as_str())));
    let shared_sessions = shared_ids(rows.iter().map(|r| (r.logical.as_str(), r.user.as_str())));
    let qualify = |shared: &[String], id: &str, user: &str| {
        if shared.binary_search_by(|s| s.as_str().cmp(id)).is_ok() {
            format!("{user}/{id}")
        } else {
            id.to_string()
        }
    };

    let mut queries: Vec<QueryEvent> = Vec::new();
    let mut clicks: Vec<ClickEvent> = Vec::new();
    let mut labels = LabelMap::new();
    let mut query_index: HashMap<(String, String, Timestamp), usize> = HashMap::new();
    for row in &rows {
        let mission_id = qualify(&shared_missions, &row.mission, &row.user);
        let key = (row.user.clone(), row.query.clone(), row.time);
        let index = *query_index.entry(key).or_insert_with(|| {
            queries.push(QueryEvent {
                user_id: row.user.clone(),
                text: row.query.clone(),
                timestamp: row.time,
                mission_id: mission_id.clone(),
                logical_session_id: qualify(&shared_sessions, &row.logical, &row.user),
                physical_session_id: row.physical.clone().unwrap_or_default(),
                seq: queries.len(),
            });
            queries.len() - 1
        });
        if let Some(url) = &row.url {
            clicks.push(ClickEvent {
                query_index: index,
                url: url.clone(),
                timestamp: row.click_time.unwrap_or(row.time).max(row.time),
                rank: row.rank.unwrap_or(1),
                rank_imputed: row.rank.is_none(),
                domain: domain_of(url),
                seq: clicks.len(),
            });
        }
        if let Some(label) = row.label {
            match labels.get(&mission_id) {
                Some(&existing) if existing != label => {
                    return Err(IngestError::LabelConflict {
                        mission_id,
                        first: existing,
                        second: label,
                    }
                    .into())
                }
                _ => {
                    labels.insert(mission_id, label);
                }
            }
        }
    }

    assign_physical_sessions(&mut queries);
    Ok(assemble_corpus(queries, clicks, &labels)?)
}

/// Fills empty physical-session ids by cutting each user's query stream at
/// inactivity gaps.
fn assign_physical_sessions(queries: &mut [QueryEvent]) {
    let mut by_user: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, q) in queries.iter().enumerate() {
        if q.physical_session_id.is_empty() {
            by_user.entry(q.user_id.clone()).or_default().push(i);
        }
    }
    for (user, mut indices) in by_user {
        indices.sort_by_key(|&i| (queries[i].timestamp, i));
        let mut session = 0;
        let mut last: Option<Timestamp> = None;
        for i in indices {
            let t = queries[i].timestamp;
            if let Some(prev) = last {
                if t.since(prev) > PHYSICAL_SESSION_GAP_SECS {
                    session += 1;
                }
            }
            last = Some(t);
            queries[i].physical_session_id = format!("{user}/P{}", session + 1);
        }
    }
}
