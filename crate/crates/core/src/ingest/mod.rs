//! Readers and writers for the tab-separated query, click and label logs, and
//! assembly of parsed events into missions.
//!
//! All three files start with a fixed header line. Readers accept `\r\n`
//! line endings; writers always emit `\n`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::logmodel::{
    domain_of, ClickEvent, IntentLabel, LogicalSession, Mission, QueryEvent, QueryRecord, Timestamp,
};

pub mod convert;
pub mod synthetic;

pub const QUERY_HEADER: &str =
    "user_id\tquery\ttimestamp\tmission_id\tlogical_session_id\tphysical_session_id";
pub const CLICK_HEADER: &str = "user_id\tquery_timestamp\turl\tclick_timestamp\trank";
pub const LABEL_HEADER: &str = "mission_id\tlabel";

pub const QUERY_FILE: &str = "queries.tsv";
pub const CLICK_FILE: &str = "clicks.tsv";
pub const LABEL_FILE: &str = "labels.tsv";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{file}: expected header `{expected}`, found `{found}`")]
    Header {
        file: &'static str,
        expected: &'static str,
        found: String,
    },
    #[error("{file} line {line}: expected {expected} columns, found {found}")]
    Columns {
        file: &'static str,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{file} line {line}: invalid timestamp `{value}`")]
    Timestamp {
        file: &'static str,
        line: usize,
        value: String,
    },
    #[error("{file} line {line}: empty query text")]
    EmptyQuery { file: &'static str, line: usize },
    #[error("{file} line {line}: empty {field}")]
    EmptyField {
        file: &'static str,
        line: usize,
        field: &'static str,
    },
    #[error("{file} line {line}: invalid rank `{value}` (must be an integer >= 1)")]
    Rank {
        file: &'static str,
        line: usize,
        value: String,
    },
    #[error("{file} line {line}: no query by user `{user_id}` at {query_timestamp}")]
    DanglingClick {
        file: &'static str,
        line: usize,
        user_id: String,
        query_timestamp: String,
    },
    #[error("{file} line {line}: unknown label `{value}`")]
    UnknownLabel {
        file: &'static str,
        line: usize,
        value: String,
    },
    #[error("mission {mission_id} labeled both {first} and {second}")]
    LabelConflict {
        mission_id: String,
        first: IntentLabel,
        second: IntentLabel,
    },
    #[error("mission {mission_id} contains events of several users: {users:?}")]
    MixedUsers { mission_id: String, users: Vec<String> },
    #[error("logical session {session_id} appears in missions {first} and {second}")]
    SharedSession {
        session_id: String,
        first: String,
        second: String,
    },
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, IngestError>;

/// Yields `(line_number, content)` for every line after the header, with
/// trailing `\r` removed and blank lines skipped. Returns `None` for an input
/// with no lines at all.
fn data_lines<R: BufRead>(
    reader: R,
    file: &'static str,
    header: &'static str,
) -> Result<Option<Vec<(usize, String)>>> {
    let mut lines = reader.lines();
    let first = match lines.next() {
        None => return Ok(None),
        Some(line) => line?,
    };
    let first = first.trim_end_matches('\r').trim_start_matches('\u{feff}');
    if first != header {
        return Err(IngestError::Header {
            file,
            expected: header,
            found: first.to_string(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 2, line.to_string()));
    }
    Ok(Some(out))
}

fn columns<'a>(line: &'a str, file: &'static str, line_no: usize, expected: usize) -> Result<Vec<&'a str>> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != expected {
        return Err(IngestError::Columns {
            file,
            line: line_no,
            expected,
            found: cols.len(),
        });
    }
    Ok(cols)
}

fn timestamp(value: &str, file: &'static str, line: usize) -> Result<Timestamp> {
    value.parse().map_err(|_| IngestError::Timestamp {
        file,
        line,
        value: value.to_string(),
    })
}

fn non_empty<'a>(value: &'a str, file: &'static str, line: usize, field: &'static str) -> Result<&'a str> {
    if value.trim().is_empty() {
        Err(IngestError::EmptyField { file, line, field })
    } else {
        Ok(value)
    }
}

/// Parses a query log. Identifiers and query text are kept verbatim; `seq`
/// records the event's position in the file.
pub fn parse_query_log<R: BufRead>(reader: R) -> Result<Vec<QueryEvent>> {
    const FILE: &str = QUERY_FILE;
    let Some(lines) = data_lines(reader, FILE, QUERY_HEADER)? else {
        return Ok(Vec::new());
    };
    let mut out = Vec::with_capacity(lines.len());
    for (line_no, line) in lines {
        let cols = columns(&line, FILE, line_no, 6)?;
        if cols[1].trim().is_empty() {
            return Err(IngestError::EmptyQuery {
                file: FILE,
                line: line_no,
            });
        }
        out.push(QueryEvent {
            user_id: non_empty(cols[0], FILE, line_no, "user_id")?.to_string(),
            text: cols[1].to_string(),
            timestamp: timestamp(cols[2], FILE, line_no)?,
            mission_id: non_empty(cols[3], FILE, line_no, "mission_id")?.to_string(),
            logical_session_id: non_empty(cols[4], FILE, line_no, "logical_session_id")?.to_string(),
            physical_session_id: cols[5].to_string(),
            seq: out.len(),
        });
    }
    Ok(out)
}

/// Parses a click log and links every click to its parent query through the
/// `(user_id, query_timestamp)` key. When several queries share a key the
/// earliest one in file order wins. An empty rank column is read as rank 1
/// and flagged via [`ClickEvent::rank_imputed`].
pub fn parse_click_log<R: BufRead>(reader: R, queries: &[QueryEvent]) -> Result<Vec<ClickEvent>> {
    const FILE: &str = CLICK_FILE;
    let Some(lines) = data_lines(reader, FILE, CLICK_HEADER)? else {
        return Ok(Vec::new());
    };
    let mut index: HashMap<(&str, Timestamp), usize> = HashMap::new();
    for (i, q) in queries.iter().enumerate() {
        index.entry((q.user_id.as_str(), q.timestamp)).or_insert(i);
    }
    let mut out = Vec::with_capacity(lines.len());
    for (line_no, line) in lines {
        let cols = columns(&line, FILE, line_no, 5)?;
        let query_ts = timestamp(cols[1], FILE, line_no)?;
        let query_index = *index
            .get(&(cols[0], query_ts))
            .ok_or_else(|| IngestError::DanglingClick {
                file: FILE,
                line: line_no,
                user_id: cols[0].to_string(),
                query_timestamp: cols[1].to_string(),
            })?;
        let url = non_empty(cols[2], FILE, line_no, "url")?;
        let click_ts = timestamp(cols[3], FILE, line_no)?;
        let (rank, rank_imputed) = match cols[4].trim() {
            "" => (1, true),
            raw => match raw.parse::<i64>() {
                Ok(r) if r >= 1 && r <= u32::MAX as i64 => (r as u32, false),
                _ => {
                    return Err(IngestError::Rank {
                        file: FILE,
                        line: line_no,
                        value: raw.to_string(),
                    })
                }
            },
        };
        out.push(ClickEvent {
            query_index,
            url: url.to_string(),
            timestamp: click_ts,
            rank,
            rank_imputed,
            domain: domain_of(url),
            seq: out.len(),
        });
    }
    Ok(out)
}

pub type LabelMap = BTreeMap<String, IntentLabel>;

/// Parses a label file. Repeating a mission with the same label is allowed;
/// repeating it with a different label is a conflict.
pub fn parse_labels<R: BufRead>(reader: R) -> Result<LabelMap> {
    const FILE: &str = LABEL_FILE;
    let Some(lines) = data_lines(reader, FILE, LABEL_HEADER)? else {
        return Ok(LabelMap::new());
    };
    let mut out = LabelMap::new();
    for (line_no, line) in lines {
        let cols = columns(&line, FILE, line_no, 2)?;
        let mission_id = non_empty(cols[0], FILE, line_no, "mission_id")?;
        let label: IntentLabel = cols[1].parse().map_err(|_| IngestError::UnknownLabel {
            file: FILE,
            line: line_no,
            value: cols[1].to_string(),
        })?;
        match out.get(mission_id) {
            Some(&existing) if existing != label => {
                return Err(IngestError::LabelConflict {
                    mission_id: mission_id.to_string(),
                    first: existing,
                    second: label,
                })
            }
            Some(_) => {}
            None => {
                out.insert(mission_id.to_string(), label);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CorpusStats {
    pub queries: usize,
    pub users: usize,
    pub logical_sessions: usize,
    pub missions: usize,
}

impl std::fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} queries / {} users / {} logical sessions / {} missions",
            self.queries, self.users, self.logical_sessions, self.missions
        )
    }
}

/// Missions keyed by id, with corpus-level counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LogCorpus {
    missions: BTreeMap<String, Mission>,
    stats: CorpusStats,
    unmatched_labels: Vec<String>,
}

impl LogCorpus {
    pub fn from_missions(missions: impl IntoIterator<Item = Mission>) -> Self {
        let missions: BTreeMap<String, Mission> = missions.into_iter().map(|m| (m.id.clone(), m)).collect();
        let stats = compute_stats(missions.values());
        LogCorpus {
            missions,
            stats,
            unmatched_labels: Vec::new(),
        }
    }

    pub fn missions(&self) -> impl Iterator<Item = &Mission> {
        self.missions.values()
    }

    pub fn mission(&self, id: &str) -> Option<&Mission> {
        self.missions.get(id)
    }

    pub fn len(&self) -> usize {
        self.missions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missions.is_empty()
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    pub fn recompute_stats(&self) -> CorpusStats {
        compute_stats(self.missions.values())
    }

    /// Label entries whose mission id is not in the corpus.
    pub fn unmatched_labels(&self) -> &[String] {
        &self.unmatched_labels
    }

    pub fn labels(&self) -> LabelMap {
        self.missions
            .values()
            .filter_map(|m| m.label.map(|l| (m.id.clone(), l)))
            .collect()
    }

    /// Flattens the corpus back into query and click event lists, missions in
    /// id order and events chronological within each mission. Click
    /// `query_index` values point into the returned query list.
    pub fn to_events(&self) -> (Vec<QueryEvent>, Vec<ClickEvent>) {
        let mut queries = Vec::with_capacity(self.stats.queries);
        let mut clicks = Vec::new();
        for mission in self.missions.values() {
            let mut records: Vec<&QueryRecord> = mission.query_records().collect();
            records.sort_by_key(|r| (r.query.timestamp, r.query.seq));
            for record in records {
                let index = queries.len();
                let mut q = record.query.clone();
                q.seq = index;
                queries.push(q);
                for click in &record.clicks {
                    let mut c = click.clone();
                    c.query_index = index;
                    c.seq = clicks.len();
                    clicks.push(c);
                }
            }
        }
        (queries, clicks)
    }

    /// Writes `queries.tsv`, `clicks.tsv` and `labels.tsv` into `dir`.
    pub fn write_tsv_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| IngestError::File {
            path: dir.display().to_string(),
            source,
        })?;
        let (queries, clicks) = self.to_events();
        let mut buf = Vec::new();
        write_query_log(&mut buf, &queries)?;
        write_file(&dir.join(QUERY_FILE), &buf)?;
        buf.clear();
        write_click_log(&mut buf, &queries, &clicks)?;
        write_file(&dir.join(CLICK_FILE), &buf)?;
        buf.clear();
        write_labels(&mut buf, &self.labels())?;
        write_file(&dir.join(LABEL_FILE), &buf)?;
        Ok(())
    }

    /// Reads the TSV trio from `dir`. A missing click or label file is
    /// treated as empty; the returned list names the files that were absent.
    pub fn read_tsv_dir(dir: &Path) -> Result<(LogCorpus, Vec<&'static str>)> {
        let mut missing = Vec::new();
        let queries = parse_query_log(open(&dir.join(QUERY_FILE))?)?;
        let click_path = dir.join(CLICK_FILE);
        let clicks = if click_path.exists() {
            parse_click_log(open(&click_path)?, &queries)?
        } else {
            missing.push(CLICK_FILE);
            Vec::new()
        };
        let label_path = dir.join(LABEL_FILE);
        let labels = if label_path.exists() {
            parse_labels(open(&label_path)?)?
        } else {
            missing.push(LABEL_FILE);
            LabelMap::new()
        };
        Ok((assemble_corpus(queries, clicks, &labels)?, missing))
    }
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|source| IngestError::File {
            path: path.display().to_string(),
            source,
        })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| IngestError::File {
        path: path.display().to_string(),
        source,
    })
}

fn compute_stats<'a>(missions: impl Iterator<Item = &'a Mission>) -> CorpusStats {
    let mut stats = CorpusStats::default();
    let mut users = BTreeSet::new();
    for m in missions {
        stats.missions += 1;
        stats.logical_sessions += m.sessions.len();
        stats.queries += m.query_count();
        users.insert(m.user_id.as_str());
    }
    stats.users = users.len();
    stats
}

/// Groups events into missions and logical sessions, orders everything
/// chronologically and attaches labels.
///
/// Queries are ordered by `(timestamp, seq)` inside a session, clicks by
/// `(timestamp, seq)` under their query, and sessions by start time then id.
pub fn assemble_corpus(
    queries: Vec<QueryEvent>,
    clicks: Vec<ClickEvent>,
    labels: &LabelMap,
) -> Result<LogCorpus> {
    let mut click_lists: Vec<Vec<ClickEvent>> = vec![Vec::new(); queries.len()];
    for click in clicks {
        let slot = click_lists
            .get_mut(click.query_index)
            .ok_or_else(|| IngestError::DanglingClick {
                file: CLICK_FILE,
                line: click.seq + 2,
                user_id: String::new(),
                query_timestamp: format!("query #{}", click.query_index),
            })?;
        slot.push(click);
    }

    // mission id -> session id -> records
    let mut grouped: BTreeMap<String, BTreeMap<String, Vec<QueryRecord>>> = BTreeMap::new();
    let mut session_owner: HashMap<String, String> = HashMap::new();
    for (query, mut clicks) in queries.into_iter().zip(click_lists) {
        match session_owner.get(&query.logical_session_id) {
            Some(owner) if *owner != query.mission_id => {
                return Err(IngestError::SharedSession {
                    session_id: query.logical_session_id.clone(),
                    first: owner.clone(),
                    second: query.mission_id.clone(),
                })
            }
            Some(_) => {}
            None => {
                session_owner.insert(query.logical_session_id.clone(), query.mission_id.clone());
            }
        }
        clicks.sort_by_key(|c| (c.timestamp, c.seq));
        grouped
            .entry(query.mission_id.clone())
            .or_default()
            .entry(query.logical_session_id.clone())
            .or_default()
            .push(QueryRecord { query, clicks });
    }

    let mut missions = BTreeMap::new();
    for (mission_id, sessions) in grouped {
        let mut users: Vec<String> = sessions
            .values()
            .flatten()
            .map(|r| r.query.user_id.clone())
            .collect();
        users.sort();
        users.dedup();
        if users.len() != 1 {
            return Err(IngestError::MixedUsers { mission_id, users });
        }
        let mut sessions: Vec<LogicalSession> = sessions
            .into_iter()
            .map(|(id, mut queries)| {
                queries.sort_by_key(|r| (r.query.timestamp, r.query.seq));
                LogicalSession { id, queries }
            })
            .collect();
        sessions.sort_by(|a, b| (a.start(), &a.id).cmp(&(b.start(), &b.id)));
        let label = labels.get(&mission_id).copied();
        missions.insert(
            mission_id.clone(),
            Mission {
                id: mission_id,
                user_id: users.remove(0),
                sessions,
                label,
            },
        );
    }

    let unmatched_labels = labels
        .keys()
        .filter(|id| !missions.contains_key(*id))
        .cloned()
        .collect();
    let stats = compute_stats(missions.values());
    Ok(LogCorpus {
        missions,
        stats,
        unmatched_labels,
    })
}

pub fn write_query_log<W: Write>(mut out: W, queries: &[QueryEvent]) -> io::Result<()> {
    writeln!(out, "{QUERY_HEADER}")?;
    for q in queries {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            q.user_id, q.text, q.timestamp, q.mission_id, q.logical_session_id, q.physical_session_id
        )?;
    }
    Ok(())
}

/// Writes clicks; `queries` must be the list their `query_index` refers to.
pub fn write_click_log<W: Write>(
    mut out: W,
    queries: &[QueryEvent],
    clicks: &[ClickEvent],
) -> io::Result<()> {
    writeln!(out, "{CLICK_HEADER}")?;
    for c in clicks {
        let parent = queries.get(c.query_index).ok_or_else(|| {
            io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("click references missing query #{}", c.query_index),
            )
        })?;
        let rank = if c.rank_imputed {
            String::new()
        } else {
            c.rank.to_string()
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            parent.user_id, parent.timestamp, c.url, c.timestamp, rank
        )?;
    }
    Ok(())
}

pub fn write_labels<W: Write>(mut out: W, labels: &LabelMap) -> io::Result<()> {
    writeln!(out, "{LABEL_HEADER}")?;
    for (mission, label) in labels {
        writeln!(out, "{mission}\t{label}")?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::logmodel::validate_mission;

    /// The twelve-row example log: three missions, eight logical sessions,
    /// five physical sessions.
    pub(crate) const EXAMPLE_LOG: &str = "\
user_id\tquery\ttimestamp\tmission_id\tlogical_session_id\tphysical_session_id
u1\tancient turkey\t2012-12-20 20:02:44\tM1\tL1\tP1
u1\thistory istanbul\t2012-12-20 20:24:17\tM1\tL1\tP1
u1\tistanbul archeology\t2012-12-21 12:02:54\tM1\tL2\tP2
u1\tistanbul archeology\t2012-12-21 18:31:21\tM1\tL3\tP3
u1\tweather new york\t2012-12-21 18:45:23\tM2\tL4\tP3
u1\tconstantinople\t2012-12-21 18:45:36\tM1\tL5\tP3
u1\tfootbal lisbon\t2012-12-21 19:14:01\tM3\tL6\tP3
u1\tfootball lisbon\t2012-12-21 19:14:11\tM3\tL6\tP3
u1\tbenfica vs sporting\t2012-12-21 20:23:04\tM3\tL7\tP4
u1\tderby eterno\t2012-12-21 22:42:48\tM1\tL8\tP5
u1\tconstantinople\t2012-12-21 23:09:02\tM1\tL8\tP5
u1\tconstantinople\t2012-12-21 23:27:38\tM1\tL8\tP5
";

    pub(crate) fn example_corpus() -> LogCorpus {
        let queries = parse_query_log(EXAMPLE_LOG.as_bytes()).unwrap();
        assemble_corpus(queries, vec![], &LabelMap::new()).unwrap()
    }

    #[test]
    fn parses_first_row() {
        let q = &parse_query_log(EXAMPLE_LOG.as_bytes()).unwrap()[0];
        assert_eq!(q.text, "ancient turkey");
        assert_eq!(q.user_id, "u1");
        assert_eq!(q.mission_id, "M1");
        assert_eq!(q.logical_session_id, "L1");
        assert_eq!(q.physical_session_id, "P1");
        assert_eq!(q.timestamp.to_string(), "2012-12-20 20:02:44");
    }

    #[test]
    fn empty_input_gives_empty_list() {
        assert!(parse_query_log(&b""[..]).unwrap().is_empty());
        assert!(parse_query_log(format!("{QUERY_HEADER}\n").as_bytes())
            .unwrap()
            .is_empty());
        assert!(parse_labels(&b""[..]).unwrap().is_empty());
    }

    #[test]
    fn crlf_is_accepted() {
        let input = EXAMPLE_LOG.replace('\n', "\r\n");
        assert_eq!(parse_query_log(input.as_bytes()).unwrap().len(), 12);
    }

    #[test]
    fn bad_calendar_date_reports_line() {
        let input = format!(
            "{QUERY_HEADER}\nu1\tq\t2012-12-20 20:02:44\tM\tL\tP\nu1\tq\t2012-13-40 99:00:00\tM\tL\tP\n"
        );
        match parse_query_log(input.as_bytes()) {
            Err(IngestError::Timestamp { line, value, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(value, "2012-13-40 99:00:00");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors() {
        let missing_col = format!("{QUERY_HEADER}\nu1\tq\t2012-12-20 20:02:44\tM\tL\n");
        assert!(matches!(
            parse_query_log(missing_col.as_bytes()),
            Err(IngestError::Columns {
                line: 2,
                expected: 6,
                found: 5,
                ..
            })
        ));
        assert!(matches!(
            parse_query_log(&b"user\tquery\n"[..]),
            Err(IngestError::Header { .. })
        ));
        let empty_query = format!("{QUERY_HEADER}\nu1\t  \t2012-12-20 20:02:44\tM\tL\tP\n");
        assert!(matches!(
            parse_query_log(empty_query.as_bytes()),
            Err(IngestError::EmptyQuery { line: 2, .. })
        ));
    }

    fn example_queries() -> Vec<QueryEvent> {
        parse_query_log(EXAMPLE_LOG.as_bytes()).unwrap()
    }

    #[test]
    fn clicks_link_and_derive_domain() {
        let queries = example_queries();
        let log = format!(
            "{CLICK_HEADER}\nu1\t2012-12-21 18:45:36\thttp://www.greyhound.com/fares\t2012-12-21 18:45:50\t2\n\
             u1\t2012-12-21 18:45:36\thttp://en.wikipedia.org/wiki/Constantinople\t2012-12-21 18:46:10\t\n"
        );
        let clicks = parse_click_log(log.as_bytes(), &queries).unwrap();
        assert_eq!(clicks.len(), 2);
        assert_eq!(clicks[0].query_index, 5);
        assert_eq!(clicks[0].domain, "greyhound.com");
        assert_eq!(clicks[0].rank, 2);
        assert!(!clicks[0].rank_imputed);
        assert_eq!(clicks[1].domain, "en.wikipedia.org");
        assert_eq!(clicks[1].rank, 1);
        assert!(clicks[1].rank_imputed);
    }

    #[test]
    fn click_errors() {
        let queries = example_queries();
        let dangling =
            format!("{CLICK_HEADER}\nu9\t2012-12-21 18:45:36\thttp://a.com\t2012-12-21 18:45:50\t1\n");
        assert!(matches!(
            parse_click_log(dangling.as_bytes(), &queries),
            Err(IngestError::DanglingClick { line: 2, .. })
        ));
        let rank0 =
            format!("{CLICK_HEADER}\nu1\t2012-12-21 18:45:36\thttp://a.com\t2012-12-21 18:45:50\t0\n");
        assert!(matches!(
            parse_click_log(rank0.as_bytes(), &queries),
            Err(IngestError::Rank { .. })
        ));
        assert!(parse_click_log(&b""[..], &queries).unwrap().is_empty());
    }

    #[test]
    fn labels() {
        let ok = format!("{LABEL_HEADER}\nM1\tinformational\nM2\tAMBIGUOUS\nM1\tInformational\n");
        let map = parse_labels(ok.as_bytes()).unwrap();
        assert_eq!(map["M1"], IntentLabel::Informational);
        assert_eq!(map["M2"], IntentLabel::Ambiguous);

        let conflict = format!("{LABEL_HEADER}\nM1\tinformational\nM1\tnavigational\n");
        assert!(matches!(
            parse_labels(conflict.as_bytes()),
            Err(IngestError::LabelConflict { .. })
        ));
        let unknown = format!("{LABEL_HEADER}\nM1\tshopping\n");
        assert!(matches!(
            parse_labels(unknown.as_bytes()),
            Err(IngestError::UnknownLabel { line: 2, .. })
        ));
    }

    #[test]
    fn example_log_structure() {
        let corpus = example_corpus();
        assert_eq!(corpus.len(), 3);
        assert_eq!(
            corpus.stats(),
            CorpusStats {
                queries: 12,
                users: 1,
                logical_sessions: 8,
                missions: 3
            }
        );
        let m1 = corpus.mission("M1").unwrap();
        let ids: Vec<&str> = m1.sessions.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["L1", "L2", "L3", "L5", "L8"]);
        assert_eq!(m1.physical_session_ids(), ["P1", "P2", "P3", "P5"]);
        assert_eq!(m1.query_count(), 8);
        let seqs: Vec<usize> = m1.query_records().map(|r| r.query.seq + 1).collect();
        assert_eq!(seqs, [1, 2, 3, 4, 6, 10, 11, 12]);
        assert!(validate_mission(m1).is_empty());
    }

    #[test]
    fn labels_attach_and_unmatched_are_kept() {
        let mut labels = LabelMap::new();
        labels.insert("M1".into(), IntentLabel::Informational);
        labels.insert("M9".into(), IntentLabel::Navigational);
        let corpus = assemble_corpus(example_queries(), vec![], &labels).unwrap();
        assert_eq!(
            corpus.mission("M1").unwrap().label,
            Some(IntentLabel::Informational)
        );
        assert_eq!(corpus.mission("M2").unwrap().label, None);
        assert_eq!(corpus.unmatched_labels(), ["M9".to_string()]);
    }

    #[test]
    fn mixed_users_rejected() {
        let mut queries = example_queries();
        queries[1].user_id = "u2".into();
        assert!(matches!(
            assemble_corpus(queries, vec![], &LabelMap::new()),
            Err(IngestError::MixedUsers { .. })
        ));
    }

    #[test]
    fn session_shared_by_missions_rejected() {
        let mut queries = example_queries();
        queries[4].logical_session_id = "L3".into();
        assert!(matches!(
            assemble_corpus(queries, vec![], &LabelMap::new()),
            Err(IngestError::SharedSession { .. })
        ));
    }

    #[test]
    fn tsv_round_trip() {
        let corpus = example_corpus();
        let (queries, clicks) = corpus.to_events();
        let mut qbuf = Vec::new();
        write_query_log(&mut qbuf, &queries).unwrap();
        let mut cbuf = Vec::new();
        write_click_log(&mut cbuf, &queries, &clicks).unwrap();
        let q2 = parse_query_log(&qbuf[..]).unwrap();
        let c2 = parse_click_log(&cbuf[..], &q2).unwrap();
        let again = assemble_corpus(q2, c2, &corpus.labels()).unwrap();
        assert_eq!(again.stats(), corpus.stats());
        for (a, b) in corpus.missions().zip(again.missions()) {
            assert_eq!(a.id, b.id);
            let ea: Vec<_> = a.events().iter().map(|e| e.timestamp()).collect();
            let eb: Vec<_> = b.events().iter().map(|e| e.timestamp()).collect();
            assert_eq!(ea, eb);
        }
    }
}
