//! Column-format corpora from a tagger, chunker or dependency parser, and the
//! positional / structural feature templates extracted from them.
//!
//! Every preprocessing level declares 39 feature types. Out-of-sentence
//! positions fire with the reserved instance [`NULL`], so every positional
//! type fires once per target occurrence. Word-valued features use lemmas.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead};
use std::str::FromStr;

use thiserror::Error;

use crate::featurespace::EventBag;

/// Instance emitted for positions outside the sentence.
pub const NULL: &str = "<NULL>";

pub const DEFAULT_MAX_SENTENCE_LEN: usize = 200;
pub const RELATION_COUNT: usize = 14;
pub const DEFAULT_COORDINATION: &str = "conj";

/// RASP-style grammatical relations used when a corpus declares none.
pub const DEFAULT_RELATIONS: [&str; RELATION_COUNT] = [
    "ncsubj", "xsubj", "csubj", "dobj", "obj2", "iobj", "xcomp", "ccomp", "ncmod", "xmod", "cmod",
    "detmod", "aux", "conj",
];

const TAGGER_POS: [i32; 9] = [-4, -3, -2, -1, 0, 1, 2, 3, 4];
const TAGGER_WORD: [i32; 8] = [-4, -3, -2, -1, 1, 2, 3, 4];
const TAGGER_BITAG: [(i32, i32); 16] = [
    (-4, -1),
    (-4, 0),
    (-3, -2),
    (-3, -1),
    (-3, 0),
    (-2, -1),
    (-2, 0),
    (-1, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
];
const TAGGER_BIWORD: [(i32, i32); 6] = [(-3, -2), (-3, -1), (-2, -1), (1, 2), (1, 3), (2, 3)];

const CHUNKER_POS: [i32; 7] = [-3, -2, -1, 0, 1, 2, 3];
const CHUNKER_WORD: [i32; 6] = [-3, -2, -1, 1, 2, 3];
const CHUNKER_CHUNK: [i32; 9] = [-4, -3, -2, -1, 0, 1, 2, 3, 4];
const CHUNKER_HEAD: [i32; 6] = [-3, -2, -1, 1, 2, 3];
const CHUNKER_BICHUNK: [(i32, i32); 6] = [(-2, -1), (-2, 0), (-1, 0), (0, 1), (0, 2), (1, 2)];

const PARSER_POS: [i32; 5] = [-2, -1, 0, 1, 2];
const PARSER_WORD: [i32; 4] = [-2, -1, 1, 2];

pub const MOD_HEAD: &str = "mod_head";
pub const MOD_CHUNK: &str = "mod_chunk";
pub const HEAD_MOD_WORD: &str = "head_mod_word";
pub const HEAD_MOD_POS: &str = "head_mod_pos";
pub const HEAD_MOD_WORD_POS: &str = "head_mod_word_pos";
pub const CONJ_WORD: &str = "conj_word";
pub const CONJ_POS: &str = "conj_pos";

#[derive(Debug, Error)]
pub enum SyntaxError {
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: empty lemma or POS tag")]
    EmptyField { line: usize },

    #[error("line {line}: invalid chunk label {label:?}")]
    ChunkLabel { line: usize, label: String },

    #[error("line {line}: malformed dependency line")]
    MalformedDependency { line: usize },

    #[error("line {line}: dependency index {index} out of range for a {len}-token sentence")]
    IndexOutOfRange { line: usize, index: usize, len: usize },

    #[error("line {line}: relation header must declare {RELATION_COUNT} distinct labels, found {found}")]
    RelationHeader { line: usize, found: usize },

    #[error("line {line}: relation header after corpus data")]
    LateHeader { line: usize },

    #[error("relation {0:?} is not in the declared inventory")]
    UnknownRelation(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Tagged,
    Chunked,
    Parsed,
}

impl Level {
    fn columns(self) -> usize {
        match self {
            Level::Chunked => 4,
            Level::Tagged | Level::Parsed => 3,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Tagged => "tagged",
            Level::Chunked => "chunked",
            Level::Parsed => "parsed",
        })
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tagged" => Ok(Level::Tagged),
            "chunked" => Ok(Level::Chunked),
            "parsed" => Ok(Level::Parsed),
            _ => Err(format!("unknown preprocessing level {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: String,
    /// BIO chunk label such as `B-NP`; only for chunked corpora.
    pub chunk: Option<String>,
}

impl Token {
    pub fn new(surface: &str, lemma: &str, pos: &str) -> Self {
        Token {
            surface: surface.to_owned(),
            lemma: lemma.to_lowercase(),
            pos: pos.to_owned(),
            chunk: None,
        }
    }

    pub fn chunked(surface: &str, lemma: &str, pos: &str, chunk: &str) -> Self {
        Token {
            chunk: Some(chunk.to_owned()),
            ..Token::new(surface, lemma, pos)
        }
    }
}

/// A typed head-dependent tuple. Indices are 0-based token positions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dependency {
    pub relation: String,
    pub head: usize,
    pub dependent: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub deps: Option<Vec<Dependency>>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens, deps: None }
    }

    pub fn with_deps(tokens: Vec<Token>, deps: Vec<Dependency>) -> Self {
        Sentence {
            tokens,
            deps: Some(deps),
        }
    }
}

/// The dependency relation labels of a parsed corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationInventory {
    labels: Vec<String>,
    coordination: String,
}

impl Default for RelationInventory {
    fn default() -> Self {
        RelationInventory {
            labels: DEFAULT_RELATIONS.iter().map(|s| s.to_string()).collect(),
            coordination: DEFAULT_COORDINATION.to_owned(),
        }
    }
}

impl RelationInventory {
    /// An inventory of exactly [`RELATION_COUNT`] distinct labels.
    pub fn new<I, S>(labels: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if labels.len() != RELATION_COUNT || distinct.len() != RELATION_COUNT {
            return None;
        }
        Some(RelationInventory {
            labels,
            coordination: DEFAULT_COORDINATION.to_owned(),
        })
    }

    pub fn with_coordination(mut self, label: impl Into<String>) -> Self {
        self.coordination = label.into();
        self
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coordination(&self) -> &str {
        &self.coordination
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub level: Level,
    pub relations: RelationInventory,
    pub sentences: Vec<Sentence>,
    /// Sentences dropped for exceeding the length bound.
    pub skipped: usize,
}

/// Streaming reader over a column-format corpus.
///
/// Token lines are `surface<TAB>lemma<TAB>pos`, with a fourth `chunk_bio`
/// column for chunked corpora. Parsed corpora follow each sentence's tokens
/// with `#DEP<TAB>relation<TAB>head<TAB>dependent` lines (1-based indices).
/// A blank line ends a sentence. An optional leading `#RELATIONS a,b,...`
/// header declares the relation inventory.
pub struct SentenceReader<R> {
    lines: std::iter::Enumerate<io::Lines<R>>,
    level: Level,
    max_len: usize,
    relations: RelationInventory,
    started: bool,
    skipped: usize,
    done: bool,
}

impl<R: BufRead> SentenceReader<R> {
    pub fn new(reader: R, level: Level) -> Self {
        SentenceReader {
            lines: reader.lines().enumerate(),
            level,
            max_len: DEFAULT_MAX_SENTENCE_LEN,
            relations: RelationInventory::default(),
            started: false,
            skipped: 0,
            done: false,
        }
    }

    pub fn max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    pub fn relations(&self) -> &RelationInventory {
        &self.relations
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    fn parse_token(&self, line: &str, lineno: usize) -> Result<Token, SyntaxError> {
        let fields: Vec<&str> = line.split('\t').collect();
        let expected = self.level.columns();
        if fields.len() != expected {
            return Err(SyntaxError::ColumnCount {
                line: lineno,
                expected,
                found: fields.len(),
            });
        }
        if fields[1].is_empty() || fields[2].is_empty() {
            return Err(SyntaxError::EmptyField { line: lineno });
        }

        let mut token = Token::new(fields[0], fields[1], fields[2]);
        if self.level == Level::Chunked {
            let label = fields[3];
            let valid = label == "O"
                || ((label.starts_with("B-") || label.starts_with("I-")) && label.len() > 2);
            if !valid {
                return Err(SyntaxError::ChunkLabel {
                    line: lineno,
                    label: label.to_owned(),
                });
            }
            token.chunk = Some(label.to_owned());
        }
        Ok(token)
    }

    fn parse_dependency(line: &str, lineno: usize) -> Result<(Dependency, usize), SyntaxError> {
        let fields: Vec<&str> = line.split('\t').collect();
        let malformed = || SyntaxError::MalformedDependency { line: lineno };
        if fields.len() != 4 || fields[1].is_empty() {
            return Err(malformed());
        }
        let head: usize = fields[2].parse().map_err(|_| malformed())?;
        let dependent: usize = fields[3].parse().map_err(|_| malformed())?;
        Ok((
            Dependency {
                relation: fields[1].to_owned(),
                head,
                dependent,
            },
            lineno,
        ))
    }

    fn finish(
        &mut self,
        tokens: Vec<Token>,
        deps: Vec<(Dependency, usize)>,
    ) -> Result<Option<Sentence>, SyntaxError> {
        let len = tokens.len();
        let mut resolved = Vec::with_capacity(deps.len());
        for (dep, lineno) in deps {
            for index in [dep.head, dep.dependent] {
                if index == 0 || index > len {
                    return Err(SyntaxError::IndexOutOfRange {
                        line: lineno,
                        index,
                        len,
                    });
                }
            }
            resolved.push(Dependency {
                head: dep.head - 1,
                dependent: dep.dependent - 1,
                ..dep
            });
        }

        if len > self.max_len {
            log::warn!("skipping sentence of {len} tokens (bound {})", self.max_len);
            self.skipped += 1;
            return Ok(None);
        }

        Ok(Some(Sentence {
            tokens,
            deps: (self.level == Level::Parsed).then_some(resolved),
        }))
    }
}

impl<R: BufRead> Iterator for SentenceReader<R> {
    type Item = Result<Sentence, SyntaxError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }

        let mut tokens = Vec::new();
        let mut deps = Vec::new();
        loop {
            let Some((idx, line)) = self.lines.next() else {
                self.done = true;
                if tokens.is_empty() && deps.is_empty() {
                    return None;
                }
                return self.finish(tokens, deps).transpose().or_else(|| self.next());
            };
            let lineno = idx + 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            let line = line.trim_end_matches('\r');

            let result = if line.trim().is_empty() {
                if tokens.is_empty() && deps.is_empty() {
                    continue;
                }
                match self.finish(std::mem::take(&mut tokens), std::mem::take(&mut deps)) {
                    Ok(Some(sentence)) => return Some(Ok(sentence)),
                    Ok(None) => continue,
                    Err(e) => Err(e),
                }
            } else if let Some(rest) = line.strip_prefix("#RELATIONS") {
                if self.started {
                    Err(SyntaxError::LateHeader { line: lineno })
                } else {
                    let labels: Vec<&str> = rest
                        .trim()
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .collect();
                    match RelationInventory::new(labels.iter().copied()) {
                        Some(inv) => {
                            self.relations = inv;
                            continue;
                        }
                        None => Err(SyntaxError::RelationHeader {
                            line: lineno,
                            found: labels.len(),
                        }),
                    }
                }
            } else if line.starts_with("#DEP") && self.level == Level::Parsed {
                Self::parse_dependency(line, lineno).map(|d| deps.push(d))
            } else if line.starts_with('#') {
                continue;
            } else {
                self.started = true;
                self.parse_token(line, lineno).map(|t| tokens.push(t))
            };

            if let Err(e) = result {
                self.done = true;
                return Some(Err(e));
            }
        }
    }
}

/// Read a whole corpus into memory.
pub fn parse_corpus<R: BufRead>(reader: R, level: Level, max_len: usize) -> Result<Corpus, SyntaxError> {
    let mut sentences_reader = SentenceReader::new(reader, level).max_len(max_len);
    let mut sentences = Vec::new();
    for sentence in sentences_reader.by_ref() {
        sentences.push(sentence?);
    }
    Ok(Corpus {
        level,
        relations: sentences_reader.relations().clone(),
        skipped: sentences_reader.skipped(),
        sentences,
    })
}

fn at<'a, F>(tokens: &'a [Token], i: usize, offset: i32, field: F) -> &'a str
where
    F: Fn(&'a Token) -> &'a str,
{
    let pos = i as i64 + offset as i64;
    if pos < 0 || pos >= tokens.len() as i64 {
        NULL
    } else {
        field(&tokens[pos as usize])
    }
}

fn lemma(t: &Token) -> &str {
    &t.lemma
}

fn pos(t: &Token) -> &str {
    &t.pos
}

fn single(prefix: &str, offset: i32) -> String {
    format!("{prefix}[{offset}]")
}

fn pair(prefix: &str, (a, b): (i32, i32)) -> String {
    format!("{prefix}[{a},{b}]")
}

/// The declared feature types of a preprocessing level, in template order.
pub fn feature_types(level: Level, relations: &RelationInventory) -> Vec<String> {
    let mut types = Vec::with_capacity(39);
    match level {
        Level::Tagged => {
            types.extend(TAGGER_POS.iter().map(|&o| single("pos", o)));
            types.extend(TAGGER_WORD.iter().map(|&o| single("word", o)));
            types.extend(TAGGER_BITAG.iter().map(|&p| pair("bitag", p)));
            types.extend(TAGGER_BIWORD.iter().map(|&p| pair("biword", p)));
        }
        Level::Chunked => {
            types.extend(
                [MOD_HEAD, MOD_CHUNK, HEAD_MOD_WORD, HEAD_MOD_POS, HEAD_MOD_WORD_POS].map(String::from),
            );
            types.extend(CHUNKER_POS.iter().map(|&o| single("pos", o)));
            types.extend(CHUNKER_WORD.iter().map(|&o| single("word", o)));
            types.extend(CHUNKER_CHUNK.iter().map(|&o| single("chunk", o)));
            types.extend(CHUNKER_HEAD.iter().map(|&o| single("chunk_head", o)));
            types.extend(CHUNKER_BICHUNK.iter().map(|&p| pair("bichunk", p)));
        }
        Level::Parsed => {
            types.extend(PARSER_POS.iter().map(|&o| single("pos", o)));
            types.extend(PARSER_WORD.iter().map(|&o| single("word", o)));
            types.extend([CONJ_WORD, CONJ_POS].map(String::from));
            types.extend(relations.labels().iter().map(|r| format!("head[{r}]")));
            types.extend(relations.labels().iter().map(|r| format!("mod[{r}]")));
        }
    }
    types
}

/// Per-occurrence feature set; each (type, instance) counts once per
/// occurrence of the target.
type OccurrenceFeatures = BTreeSet<(String, String)>;

fn record(bag: &mut EventBag, lexeme: &str, features: OccurrenceFeatures) {
    for (ftype, instance) in features {
        bag.add(lexeme, &ftype, &instance);
    }
    bag.add_occurrences(lexeme, 1);
}

fn tagger_occurrence(tokens: &[Token], i: usize) -> OccurrenceFeatures {
    let mut f = OccurrenceFeatures::new();
    for &o in &TAGGER_POS {
        f.insert((single("pos", o), at(tokens, i, o, pos).to_owned()));
    }
    for &o in &TAGGER_WORD {
        f.insert((single("word", o), at(tokens, i, o, lemma).to_owned()));
    }
    for &(a, b) in &TAGGER_BITAG {
        let value = format!("{}+{}", at(tokens, i, a, pos), at(tokens, i, b, pos));
        f.insert((pair("bitag", (a, b)), value));
    }
    for &(a, b) in &TAGGER_BIWORD {
        let value = format!("{}+{}", at(tokens, i, a, lemma), at(tokens, i, b, lemma));
        f.insert((pair("biword", (a, b)), value));
    }
    f
}

/// Tagger-level features for every occurrence of a target lemma.
pub fn extract_tagger_features<'a, I>(sentences: I, targets: &BTreeSet<String>) -> EventBag
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut bag = EventBag::new();
    for sentence in sentences {
        for (i, token) in sentence.tokens.iter().enumerate() {
            if targets.contains(&token.lemma) {
                record(&mut bag, &token.lemma, tagger_occurrence(&sentence.tokens, i));
            }
        }
    }
    bag
}

/// A chunk, or a single token outside any chunk (label `O`).
#[derive(Clone, Debug, PartialEq, Eq)]
struct Unit {
    label: String,
    start: usize,
    end: usize,
    chunk: bool,
}

fn chunk_units(tokens: &[Token]) -> (Vec<Unit>, Vec<usize>) {
    let mut units: Vec<Unit> = Vec::new();
    let mut unit_of = Vec::with_capacity(tokens.len());
    for (i, token) in tokens.iter().enumerate() {
        let label = token.chunk.as_deref().unwrap_or("O");
        let (kind, chunk_type) = match label.split_once('-') {
            Some((k, t)) if k == "B" || k == "I" => (k, t),
            _ => ("O", "O"),
        };

        let continues = kind == "I"
            && units
                .last()
                .is_some_and(|u| u.chunk && u.label == chunk_type && u.end == i);
        if continues {
            units.last_mut().unwrap().end = i + 1;
        } else {
            units.push(Unit {
                label: chunk_type.to_owned(),
                start: i,
                end: i + 1,
                chunk: kind != "O",
            });
        }
        unit_of.push(units.len() - 1);
    }
    (units, unit_of)
}

fn chunker_occurrence(tokens: &[Token], units: &[Unit], unit_of: &[usize], i: usize) -> OccurrenceFeatures {
    let mut f = OccurrenceFeatures::new();
    let u = unit_of[i];
    let unit = &units[u];

    if unit.chunk && unit.end - unit.start > 1 {
        let head = unit.end - 1;
        if i == head {
            for m in &tokens[unit.start..head] {
                f.insert((HEAD_MOD_WORD.to_owned(), m.lemma.clone()));
                f.insert((HEAD_MOD_POS.to_owned(), m.pos.clone()));
                f.insert((HEAD_MOD_WORD_POS.to_owned(), format!("{}/{}", m.lemma, m.pos)));
            }
        } else {
            f.insert((MOD_HEAD.to_owned(), tokens[head].lemma.clone()));
            f.insert((MOD_CHUNK.to_owned(), unit.label.clone()));
        }
    }

    for &o in &CHUNKER_POS {
        f.insert((single("pos", o), at(tokens, i, o, pos).to_owned()));
    }
    for &o in &CHUNKER_WORD {
        f.insert((single("word", o), at(tokens, i, o, lemma).to_owned()));
    }

    let unit_at = |o: i32| -> Option<&Unit> {
        let idx = u as i64 + o as i64;
        (idx >= 0 && idx < units.len() as i64).then(|| &units[idx as usize])
    };
    let label_at = |o: i32| unit_at(o).map_or(NULL, |x| x.label.as_str());

    for &o in &CHUNKER_CHUNK {
        f.insert((single("chunk", o), label_at(o).to_owned()));
    }
    for &o in &CHUNKER_HEAD {
        let head = unit_at(o).map_or(NULL, |x| tokens[x.end - 1].lemma.as_str());
        f.insert((single("chunk_head", o), head.to_owned()));
    }
    for &(a, b) in &CHUNKER_BICHUNK {
        f.insert((pair("bichunk", (a, b)), format!("{}+{}", label_at(a), label_at(b))));
    }
    f
}

/// Chunker-level features. A chunk's head is its final token; every other
/// token of the chunk is a modifier of it. Chunk positions count chunks (and
/// unchunked tokens) relative to the target's own chunk.
pub fn extract_chunker_features<'a, I>(sentences: I, targets: &BTreeSet<String>) -> EventBag
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut bag = EventBag::new();
    for sentence in sentences {
        let tokens = &sentence.tokens;
        if !tokens.iter().any(|t| targets.contains(&t.lemma)) {
            continue;
        }
        let (units, unit_of) = chunk_units(tokens);
        for (i, token) in tokens.iter().enumerate() {
            if targets.contains(&token.lemma) {
                record(&mut bag, &token.lemma, chunker_occurrence(tokens, &units, &unit_of, i));
            }
        }
    }
    bag
}

fn parser_occurrence(
    tokens: &[Token],
    deps: &[Dependency],
    relations: &RelationInventory,
    i: usize,
) -> OccurrenceFeatures {
    let mut f = OccurrenceFeatures::new();
    for &o in &PARSER_POS {
        f.insert((single("pos", o), at(tokens, i, o, pos).to_owned()));
    }
    for &o in &PARSER_WORD {
        f.insert((single("word", o), at(tokens, i, o, lemma).to_owned()));
    }

    let coordination = relations.coordination();
    let mut partners = BTreeSet::new();
    for dep in deps {
        if dep.dependent == i {
            f.insert((format!("head[{}]", dep.relation), tokens[dep.head].lemma.clone()));
        }
        if dep.head == i {
            f.insert((format!("mod[{}]", dep.relation), tokens[dep.dependent].lemma.clone()));
        }

        if dep.relation == coordination {
            if dep.head == i {
                partners.insert(dep.dependent);
            } else if dep.dependent == i {
                partners.insert(dep.head);
                // Co-conjuncts attached to the same coordinator.
                partners.extend(
                    deps.iter()
                        .filter(|d| d.relation == coordination && d.head == dep.head)
                        .map(|d| d.dependent),
                );
            }
        }
    }
    partners.remove(&i);
    for p in partners {
        f.insert((CONJ_WORD.to_owned(), tokens[p].lemma.clone()));
        f.insert((CONJ_POS.to_owned(), tokens[p].pos.clone()));
    }
    f
}

/// Dependency-parser-level features: local POS and word context,
/// coordination partners, and the head (resp. modifier) of every typed
/// dependency the target takes part in.
pub fn extract_parser_features<'a, I>(
    sentences: I,
    targets: &BTreeSet<String>,
    relations: &RelationInventory,
) -> Result<EventBag, SyntaxError>
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut bag = EventBag::new();
    for sentence in sentences {
        let deps = sentence.deps.as_deref().unwrap_or(&[]);
        if let Some(bad) = deps.iter().find(|d| !relations.contains(&d.relation)) {
            return Err(SyntaxError::UnknownRelation(bad.relation.clone()));
        }
        for (i, token) in sentence.tokens.iter().enumerate() {
            if targets.contains(&token.lemma) {
                record(&mut bag, &token.lemma, parser_occurrence(&sentence.tokens, deps, relations, i));
            }
        }
    }
    Ok(bag)
}

/// Dispatch on the corpus level.
pub fn extract_features(corpus: &Corpus, targets: &BTreeSet<String>) -> Result<EventBag, SyntaxError> {
    match corpus.level {
        Level::Tagged => Ok(extract_tagger_features(&corpus.sentences, targets)),
        Level::Chunked => Ok(extract_chunker_features(&corpus.sentences, targets)),
        Level::Parsed => extract_parser_features(&corpus.sentences, targets, &corpus.relations),
    }
}

/// Count of events per feature type, for inventory checks.
pub fn type_histogram(bag: &EventBag) -> BTreeMap<String, u64> {
    let mut hist = BTreeMap::new();
    for (_, (ftype, _), n) in bag.iter() {
        *hist.entry(ftype.clone()).or_insert(0) += n;
    }
    hist
}
