//! Seeded synthetic query logs with known intent labels.
//!
//! Each class follows a behavioural template:
//!
//! * navigational: one logical session of one or two short queries naming a
//!   site, usually one click on that site's domain.
//! * informational: one to three logical sessions of reformulated topical
//!   queries, one to three clicks per query on reference sites, with revisits.
//! * transactional: one or two logical sessions of shopping or booking
//!   queries; clicks land on store domains that partially echo the query.
//!
//! The query-to-domain similarity is high for navigational, intermediate for
//! transactional and near zero for informational missions, while the other
//! signals overlap between classes.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ingest::LogCorpus;
use crate::logmodel::{
    ClickEvent, Intent, IntentLabel, LogicalSession, Mission, QueryEvent, QueryRecord, Timestamp,
};
use crate::seed::{self, stream};

/// 2012-12-01 00:00:00 UTC
const EPOCH: i64 = 1_354_320_000;
const MISSION_STRIDE: i64 = 3 * 86_400;

const SITES: &[&str] = &[
    "greyhound",
    "facebook",
    "youtube",
    "craigslist",
    "myspace",
    "mapquest",
    "hotmail",
    "netflix",
    "paypal",
    "southwest",
    "imdb",
    "espn",
    "weather",
    "pandora",
    "linkedin",
    "twitter",
    "nytimes",
    "bankofamerica",
    "chase",
    "verizon",
    "comcast",
    "usps",
    "fedex",
    "ikea",
    "lufthansa",
    "ryanair",
    "dell",
    "apple",
    "nasa",
    "cnn",
];

const SITE_SUFFIXES: &[&str] = &["", "", "com", "login", "home", "online"];

const TOPICS: &[&[&str]] = &[
    &[
        "ancient",
        "turkey",
        "history",
        "istanbul",
        "archeology",
        "byzantine",
        "ottoman",
        "empire",
    ],
    &[
        "symptoms",
        "diabetes",
        "type",
        "insulin",
        "diet",
        "causes",
        "treatment",
        "blood",
    ],
    &[
        "how",
        "volcano",
        "eruption",
        "lava",
        "magma",
        "formation",
        "plates",
        "tectonic",
    ],
    &[
        "french",
        "revolution",
        "causes",
        "napoleon",
        "bastille",
        "timeline",
        "louis",
        "king",
    ],
    &[
        "photosynthesis",
        "plants",
        "chlorophyll",
        "light",
        "energy",
        "process",
        "carbon",
        "leaves",
    ],
    &[
        "global",
        "warming",
        "climate",
        "change",
        "effects",
        "greenhouse",
        "gases",
        "ice",
    ],
    &[
        "roman",
        "architecture",
        "aqueduct",
        "colosseum",
        "arches",
        "concrete",
        "temples",
        "rome",
    ],
    &[
        "black", "holes", "gravity", "event", "horizon", "stars", "collapse", "hawking",
    ],
    &[
        "renaissance",
        "painting",
        "artists",
        "florence",
        "leonardo",
        "perspective",
        "fresco",
        "style",
    ],
    &[
        "world",
        "war",
        "causes",
        "treaty",
        "versailles",
        "alliances",
        "trenches",
        "battles",
    ],
];

const REFERENCE_SITES: &[&str] = &[
    "http://en.wikipedia.org/wiki/Article",
    "http://www.britannica.com/topic",
    "http://www.answers.com/q",
    "http://www.about.com/od",
    "http://www.howstuffworks.com/x.htm",
    "http://www.encyclopedia.com/doc",
    "http://www.bbc.co.uk/science",
    "http://www.infoplease.com/ipa",
    "http://www.jstor.org/stable",
    "http://scholar.google.com/scholar",
];

const PRODUCTS: &[&str] = &[
    "shoes",
    "laptop",
    "tickets",
    "flights",
    "hotel",
    "camera",
    "guitar",
    "phone",
    "books",
    "furniture",
    "tires",
    "perfume",
    "watches",
    "jeans",
    "printer",
];

const SHOP_VERBS: &[&str] = &["buy", "cheap", "order", "discount", "book", "best price", "sale"];
const SHOP_EXTRAS: &[&str] = &[
    "online",
    "deals",
    "free shipping",
    "coupon",
    "near me",
    "2012",
    "store",
];
const SHOP_PREFIXES: &[&str] = &["", "buy", "the", "discount", "my"];
const SHOP_SUFFIXES: &[&str] = &["direct", "depot", "outlet", "world", "express", "4less"];

/// How many missions of each class to generate, and the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub informational: usize,
    pub navigational: usize,
    pub transactional: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn balanced(per_class: usize, seed: u64) -> Self {
        SyntheticSpec {
            informational: per_class,
            navigational: per_class,
            transactional: per_class,
            seed,
        }
    }

    fn count(&self, intent: Intent) -> usize {
        match intent {
            Intent::Informational => self.informational,
            Intent::Navigational => self.navigational,
            Intent::Transactional => self.transactional,
        }
    }
}

/// Builds a labeled corpus. Classes are interleaved in generation order and
/// every mission belongs to its own time window, so no two queries of a user
/// share a timestamp.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> LogCorpus {
    let rounds = Intent::ALL.iter().map(|&c| spec.count(c)).max().unwrap_or(0);
    let mut missions = Vec::new();
    let mut index = 0usize;
    for round in 0..rounds {
        for intent in Intent::ALL {
            if round >= spec.count(intent) {
                continue;
            }
            let mut rng = seed::rng(spec.seed, &[stream::SYNTHETIC, index as u64]);
            let mut builder = MissionBuilder::new(index);
            match intent {
                Intent::Navigational => navigational(&mut rng, &mut builder),
                Intent::Informational => informational(&mut rng, &mut builder),
                Intent::Transactional => transactional(&mut rng, &mut builder),
            }
            missions.push(builder.finish(Some(IntentLabel::from(intent))));
            index += 1;
        }
    }
    LogCorpus::from_missions(missions)
}

/// A structurally valid mission with arbitrary content, for fuzzing feature
/// invariants: random session and query counts, duplicate and punctuated
/// queries, timestamp ties, repeated and unparsable click targets.
pub fn random_mission(rng: &mut ChaCha8Rng, index: usize) -> Mission {
    const WORDS: &[&str] = &[
        "a",
        "istanbul",
        "Istanbul",
        "bus",
        "greyhound",
        "x",
        "c++",
        "new-york",
        "ab",
        "é",
        "über",
        "what's",
        "2012",
        "q",
        "constantinople",
        "lisbon",
        "footbal",
        "football",
    ];
    const URLS: &[&str] = &[
        "http://www.greyhound.com/fares",
        "https://Greyhound.com",
        "http://istanbul.org/x",
        "http://en.wikipedia.org/wiki/Istanbul",
        "not a url",
        "http://www.ab.com",
        "ftp://files.example.net/a",
        "http://localhost",
    ];
    let mut builder = MissionBuilder::new(index);
    let sessions = rng.random_range(1..=4);
    for s in 0..sessions {
        if s > 0 {
            builder.advance(rng.random_range(0..=50_000));
        }
        builder.open_session();
        for _ in 0..rng.random_range(1..=5) {
            builder.advance(rng.random_range(0..=600));
            let terms = rng.random_range(1..=4);
            let text: Vec<&str> = (0..terms).map(|_| *WORDS.choose(rng).unwrap()).collect();
            let sep = if rng.random_bool(0.2) { "  " } else { " " };
            builder.query(&text.join(sep));
            for _ in 0..rng.random_range(0..=4) {
                let delay = rng.random_range(0..=300);
                builder.click(URLS.choose(rng).unwrap(), delay, rng.random_range(1..=10));
            }
        }
    }
    builder.finish(None)
}

struct MissionBuilder {
    mission_id: String,
    user_id: String,
    now: i64,
    sessions: Vec<LogicalSession>,
}

impl MissionBuilder {
    fn new(index: usize) -> Self {
        MissionBuilder {
            mission_id: format!("S{index:05}"),
            user_id: format!("u{:04}", index / 3),
            now: EPOCH + index as i64 * MISSION_STRIDE,
            sessions: Vec::new(),
        }
    }

    fn advance(&mut self, seconds: i64) {
        self.now += seconds;
    }

    fn open_session(&mut self) {
        let n = self.sessions.len() + 1;
        self.sessions.push(LogicalSession {
            id: format!("{}-L{n}", self.mission_id),
            queries: Vec::new(),
        });
    }

    fn query(&mut self, text: &str) {
        let seq = self.sessions.iter().map(|s| s.queries.len()).sum();
        let physical = format!("{}-P{}", self.mission_id, self.sessions.len());
        let session = self.sessions.last_mut().expect("open_session first");
        session.queries.push(QueryRecord {
            query: QueryEvent {
                user_id: self.user_id.clone(),
                text: text.to_string(),
                timestamp: Timestamp(self.now),
                mission_id: self.mission_id.clone(),
                logical_session_id: session.id.clone(),
                physical_session_id: physical,
                seq,
            },
            clicks: Vec::new(),
        });
    }

    /// Clicks on `url` `delay` seconds after the current query; the clock
    /// moves to the click.
    fn click(&mut self, url: &str, delay: i64, rank: u32) {
        let seq = self
            .sessions
            .iter()
            .flat_map(|s| s.queries.iter())
            .map(|r| r.clicks.len())
            .sum();
        let record = self
            .sessions
            .last_mut()
            .and_then(|s| s.queries.last_mut())
            .expect("query first");
        let at = record
            .clicks
            .last()
            .map_or(record.query.timestamp, |c| c.timestamp)
            .offset(delay);
        record.clicks.push(ClickEvent::new(0, url, at, rank, seq));
        self.now = self.now.max(at.seconds());
    }

    fn finish(self, label: Option<IntentLabel>) -> Mission {
        Mission {
            id: self.mission_id,
            user_id: self.user_id,
            sessions: self.sessions,
            label,
        }
    }
}

fn navigational(rng: &mut ChaCha8Rng, b: &mut MissionBuilder) {
    let site = *SITES.choose(rng).unwrap();
    b.open_session();
    let queries = if rng.random_bool(0.7) { 1 } else { 2 };
    for q in 0..queries {
        if q > 0 {
            b.advance(rng.random_range(5..=60));
        }
        let suffix = *SITE_SUFFIXES.choose(rng).unwrap();
        let text = if suffix.is_empty() {
            site.to_string()
        } else {
            format!("{site} {suffix}")
        };
        b.query(&text);
        let clicks = if rng.random_bool(0.85) { 1 } else { 2 };
        for _ in 0..clicks {
            let path = ["", "/", "/index.html", "/login"].choose(rng).unwrap();
            let delay = rng.random_range(3..=90);
            b.click(
                &format!("http://www.{site}.com{path}"),
                delay,
                rng.random_range(1..=2),
            );
        }
    }
}

fn informational(rng: &mut ChaCha8Rng, b: &mut MissionBuilder) {
    let topic = *TOPICS.choose(rng).unwrap();
    let sessions = rng.random_range(1..=3);
    let mut visited: Vec<&str> = Vec::new();
    for s in 0..sessions {
        if s > 0 {
            b.advance(rng.random_range(3_600..=60_000));
        }
        b.open_session();
        for _ in 0..rng.random_range(1..=4) {
            b.advance(rng.random_range(20..=400));
            let terms = rng.random_range(2..=5);
            let words: Vec<&str> = topic.choose_multiple(rng, terms).copied().collect();
            b.query(&words.join(" "));
            for _ in 0..rng.random_range(1..=3) {
                let url = if !visited.is_empty() && rng.random_bool(0.3) {
                    *visited.choose(rng).unwrap()
                } else {
                    *REFERENCE_SITES.choose(rng).unwrap()
                };
                visited.push(url);
                let delay = rng.random_range(10..=300);
                b.click(url, delay, rng.random_range(1..=10));
            }
        }
    }
}

fn transactional(rng: &mut ChaCha8Rng, b: &mut MissionBuilder) {
    let product = *PRODUCTS.choose(rng).unwrap();
    let shop = format!(
        "http://www.{}{}{}.com/",
        SHOP_PREFIXES.choose(rng).unwrap(),
        product,
        SHOP_SUFFIXES.choose(rng).unwrap()
    );
    let sessions = if rng.random_bool(0.6) { 1 } else { 2 };
    for s in 0..sessions {
        if s > 0 {
            b.advance(rng.random_range(1_800..=40_000));
        }
        b.open_session();
        for _ in 0..rng.random_range(1..=3) {
            b.advance(rng.random_range(15..=240));
            let mut words = vec![*SHOP_VERBS.choose(rng).unwrap(), product];
            if rng.random_bool(0.6) {
                words.push(SHOP_EXTRAS.choose(rng).unwrap());
            }
            b.query(&words.join(" "));
            for _ in 0..rng.random_range(1..=2) {
                let delay = rng.random_range(10..=240);
                b.click(&shop, delay, rng.random_range(1..=5));
            }
        }
    }
}
