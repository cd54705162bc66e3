//! Query-log vocabulary: queries, clicks, logical sessions, missions and
//! intent labels.
//!
//! A *physical session* is a block of activity separated by inactivity; a
//! *logical session* is a run of consecutive queries inside one physical
//! session that serve a single information need; a *mission* groups the
//! logical sessions (possibly non-contiguous) that share one information need.
//! Missions are the unit we classify.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

/// The three target classes, in their fixed tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intent {
    Informational,
    Navigational,
    Transactional,
}

impl Intent {
    pub const ALL: [Intent; 3] = [Intent::Informational, Intent::Navigational, Intent::Transactional];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Intent> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::Informational => "informational",
            Intent::Navigational => "navigational",
            Intent::Transactional => "transactional",
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Intent {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.parse::<IntentLabel>()?.intent() {
            Some(intent) => Ok(intent),
            None => Err(UnknownLabel(s.to_string())),
        }
    }
}

/// A label as it appears in an annotation file. `Ambiguous` is kept so that
/// such missions can be reported, but it is never a training target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntentLabel {
    Informational,
    Navigational,
    Transactional,
    Ambiguous,
}

impl IntentLabel {
    pub fn intent(self) -> Option<Intent> {
        match self {
            IntentLabel::Informational => Some(Intent::Informational),
            IntentLabel::Navigational => Some(Intent::Navigational),
            IntentLabel::Transactional => Some(Intent::Transactional),
            IntentLabel::Ambiguous => None,
        }
    }

    pub fn is_ambiguous(self) -> bool {
        self == IntentLabel::Ambiguous
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IntentLabel::Ambiguous => "ambiguous",
            other => other.intent().map(Intent::as_str).unwrap_or_default(),
        }
    }
}

impl From<Intent> for IntentLabel {
    fn from(intent: Intent) -> Self {
        match intent {
            Intent::Informational => IntentLabel::Informational,
            Intent::Navigational => IntentLabel::Navigational,
            Intent::Transactional => IntentLabel::Transactional,
        }
    }
}

impl fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown intent label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for IntentLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "informational" => Ok(IntentLabel::Informational),
            "navigational" => Ok(IntentLabel::Navigational),
            "transactional" => Ok(IntentLabel::Transactional),
            "ambiguous" => Ok(IntentLabel::Ambiguous),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

/// Seconds since the Unix epoch. Log timestamps carry no zone and are
/// treated as UTC; sub-second parts are truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid timestamp `{0}` (expected YYYY-MM-DD HH:MM:SS)")]
pub struct InvalidTimestamp(pub String);

impl Timestamp {
    pub fn seconds(self) -> i64 {
        self.0
    }

    /// Seconds elapsed from `earlier` to `self`.
    pub fn since(self, earlier: Timestamp) -> i64 {
        self.0 - earlier.0
    }

    pub fn offset(self, seconds: i64) -> Timestamp {
        Timestamp(self.0 + seconds)
    }
}

impl FromStr for Timestamp {
    type Err = InvalidTimestamp;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        NaiveDateTime::parse_from_str(trimmed, "%Y-%m-%d %H:%M:%S%.f")
            .map(|dt| Timestamp(dt.and_utc().timestamp()))
            .map_err(|_| InvalidTimestamp(s.to_string()))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match DateTime::from_timestamp(self.0, 0) {
            Some(dt) => write!(f, "{}", dt.naive_utc().format(TIMESTAMP_FORMAT)),
            None => write!(f, "@{}", self.0),
        }
    }
}

/// One submitted query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryEvent {
    pub user_id: String,
    pub text: String,
    pub timestamp: Timestamp,
    pub mission_id: String,
    pub logical_session_id: String,
    pub physical_session_id: String,
    /// Position in the source file, used to break timestamp ties.
    pub seq: usize,
}

/// One click on a result page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickEvent {
    /// Index of the parent query in the query list the click was linked against.
    pub query_index: usize,
    pub url: String,
    pub timestamp: Timestamp,
    /// 1-based position on the result page.
    pub rank: u32,
    /// The source had no rank for this click; `rank` holds the default of 1.
    pub rank_imputed: bool,
    pub domain: String,
    pub seq: usize,
}

impl ClickEvent {
    pub fn new(
        query_index: usize,
        url: impl Into<String>,
        timestamp: Timestamp,
        rank: u32,
        seq: usize,
    ) -> Self {
        let url = url.into();
        let domain = domain_of(&url);
        ClickEvent {
            query_index,
            url,
            timestamp,
            rank,
            rank_imputed: false,
            domain,
            seq,
        }
    }
}

/// Lowercased URL host with a leading `www.` removed. URLs that do not parse
/// (or have no host) keep their raw text.
pub fn domain_of(url: &str) -> String {
    match url::Url::parse(url.trim()) {
        Ok(parsed) => match parsed.host_str() {
            Some(host) => {
                let host = host.to_lowercase();
                match host.strip_prefix("www.") {
                    Some(rest) if !rest.is_empty() => rest.to_string(),
                    _ => host,
                }
            }
            None => url.to_string(),
        },
        Err(_) => url.to_string(),
    }
}

/// A query together with the clicks made from its result page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query: QueryEvent,
    pub clicks: Vec<ClickEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalSession {
    pub id: String,
    pub queries: Vec<QueryRecord>,
}

impl LogicalSession {
    pub fn query_count(&self) -> usize {
        self.queries.len()
    }

    fn timestamps(&self) -> impl Iterator<Item = Timestamp> + '_ {
        self.queries.iter().flat_map(|record| {
            std::iter::once(record.query.timestamp).chain(record.clicks.iter().map(|c| c.timestamp))
        })
    }

    /// Earliest query or click time.
    pub fn start(&self) -> Option<Timestamp> {
        self.timestamps().min()
    }

    /// Latest query or click time.
    pub fn end(&self) -> Option<Timestamp> {
        self.timestamps().max()
    }

    pub fn physical_session_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .queries
            .iter()
            .map(|r| r.query.physical_session_id.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mission {
    pub id: String,
    pub user_id: String,
    pub sessions: Vec<LogicalSession>,
    pub label: Option<IntentLabel>,
}

/// An entry of a mission's chronological event stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event<'a> {
    Query(&'a QueryEvent),
    Click(&'a ClickEvent),
}

impl Event<'_> {
    pub fn timestamp(&self) -> Timestamp {
        match self {
            Event::Query(q) => q.timestamp,
            Event::Click(c) => c.timestamp,
        }
    }

    fn order_key(&self) -> (Timestamp, u8, usize) {
        match self {
            Event::Query(q) => (q.timestamp, 0, q.seq),
            Event::Click(c) => (c.timestamp, 1, c.seq),
        }
    }
}

impl Mission {
    pub fn query_count(&self) -> usize {
        self.sessions.iter().map(LogicalSession::query_count).sum()
    }

    pub fn click_count(&self) -> usize {
        self.query_records().map(|r| r.clicks.len()).sum()
    }

    pub fn query_records(&self) -> impl Iterator<Item = &QueryRecord> {
        self.sessions.iter().flat_map(|s| s.queries.iter())
    }

    pub fn intent(&self) -> Option<Intent> {
        self.label.and_then(IntentLabel::intent)
    }

    pub fn physical_session_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .sessions
            .iter()
            .flat_map(LogicalSession::physical_session_ids)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// All queries and clicks ordered by time. Ties keep source order, with a
    /// query placed before clicks stamped at the same second.
    pub fn events(&self) -> Vec<Event<'_>> {
        let mut events: Vec<Event<'_>> = self
            .query_records()
            .flat_map(|r| std::iter::once(Event::Query(&r.query)).chain(r.clicks.iter().map(Event::Click)))
            .collect();
        events.sort_by_key(Event::order_key);
        events
    }
}

/// Which structural rule a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    NoSessions,
    EmptySession,
    EmptyQuery,
    QueryOrdering,
    ClickOrdering,
    ClickRank,
    ClickDomain,
    UserMismatch,
    MissionMismatch,
    SessionMismatch,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::NoSessions => "mission has no logical sessions",
            Rule::EmptySession => "logical session has no queries",
            Rule::EmptyQuery => "query text is empty",
            Rule::QueryOrdering => "queries out of chronological order",
            Rule::ClickOrdering => "click precedes its query",
            Rule::ClickRank => "click rank below 1",
            Rule::ClickDomain => "click domain does not match its url",
            Rule::UserMismatch => "event user differs from mission user",
            Rule::MissionMismatch => "query tagged with another mission",
            Rule::SessionMismatch => "query tagged with another logical session",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule.as_str(), self.detail)
    }
}

/// Checks every structural invariant of a mission; an empty result means the
/// mission is well formed.
pub fn validate_mission(mission: &Mission) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |rule: Rule, detail: String| out.push(Violation { rule, detail });

    if mission.sessions.is_empty() {
        push(Rule::NoSessions, format!("mission {}", mission.id));
    }
    for session in &mission.sessions {
        if session.queries.is_empty() {
            push(
                Rule::EmptySession,
                format!("mission {} session {}", mission.id, session.id),
            );
        }
        for pair in session.queries.windows(2) {
            let (a, b) = (&pair[0].query, &pair[1].query);
            if (a.timestamp, a.seq).cmp(&(b.timestamp, b.seq)) == Ordering::Greater {
                push(
                    Rule::QueryOrdering,
                    format!("session {}: `{}` after `{}`", session.id, a.text, b.text),
                );
            }
        }
        for record in &session.queries {
            let q = &record.query;
            if q.text.trim().is_empty() {
                push(Rule::EmptyQuery, format!("query #{} at {}", q.seq, q.timestamp));
            }
            if q.user_id != mission.user_id {
                push(
                    Rule::UserMismatch,
                    format!(
                        "query `{}` by {} in mission of {}",
                        q.text, q.user_id, mission.user_id
                    ),
                );
            }
            if q.mission_id != mission.id {
                push(
                    Rule::MissionMismatch,
                    format!("query `{}` tagged {} inside {}", q.text, q.mission_id, mission.id),
                );
            }
            if q.logical_session_id != session.id {
                push(
                    Rule::SessionMismatch,
                    format!(
                        "query `{}` tagged {} inside {}",
                        q.text, q.logical_session_id, session.id
                    ),
                );
            }
            for click in &record.clicks {
                if click.timestamp < q.timestamp {
                    push(
                        Rule::ClickOrdering,
                        format!(
                            "click on {} at {} precedes query `{}` at {}",
                            click.url, click.timestamp, q.text, q.timestamp
                        ),
                    );
                }
                if click.rank < 1 {
                    push(
                        Rule::ClickRank,
                        format!("click on {} has rank {}", click.url, click.rank),
                    );
                }
                if click.domain != domain_of(&click.url) {
                    push(
                        Rule::ClickDomain,
                        format!("click on {} has domain {}", click.url, click.domain),
                    );
                }
            }
        }
    }
    out
}
