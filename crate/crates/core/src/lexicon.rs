//! Seed lexicons, lexical-type inventories and majority-class defaults.
//!
//! A seed lexicon maps lemmas onto the leaf lexical types of a grammar. It is
//! read from a tab-separated file with one `lexeme<TAB>word_class<TAB>type`
//! entry per line; lines starting with `#` are comments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    MalformedLine { line: usize, found: usize },

    #[error("line {line}: {source}")]
    WordClass {
        line: usize,
        #[source]
        source: UnknownWordClass,
    },

    #[error("line {line}: invalid lexeme {lexeme:?} (empty or contains whitespace)")]
    InvalidLexeme { line: usize, lexeme: String },

    #[error("line {line}: empty lexical type name")]
    EmptyTypeName { line: usize },

    #[error("lexical type {name} declared under both {first} and {second}")]
    ConflictingWordClass {
        name: String,
        first: WordClass,
        second: WordClass,
    },

    #[error("no entries for word class {0}")]
    NoEntries(WordClass),

    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("unknown word class tag {0:?}")]
pub struct UnknownWordClass(pub String);

/// The four open word classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordClass {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl WordClass {
    pub const ALL: [WordClass; 4] = [
        WordClass::Noun,
        WordClass::Verb,
        WordClass::Adjective,
        WordClass::Adverb,
    ];

    /// Tag used in lexicon, ontology and report files.
    pub fn tag(self) -> &'static str {
        match self {
            WordClass::Noun => "noun",
            WordClass::Verb => "verb",
            WordClass::Adjective => "adj",
            WordClass::Adverb => "adv",
        }
    }

    /// Single-letter code used by cluster lexicons (`N`, `V`, `A`, `R`).
    pub fn from_cluster_code(code: &str) -> Result<WordClass, UnknownWordClass> {
        match code {
            "N" => Ok(WordClass::Noun),
            "V" => Ok(WordClass::Verb),
            "A" => Ok(WordClass::Adjective),
            "R" => Ok(WordClass::Adverb),
            _ => Err(UnknownWordClass(code.to_owned())),
        }
    }

    /// Short label used when rendering derivational transformations.
    pub fn short_label(self) -> &'static str {
        match self {
            WordClass::Noun => "N",
            WordClass::Verb => "V",
            WordClass::Adjective => "Adj",
            WordClass::Adverb => "Adv",
        }
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for WordClass {
    type Err = UnknownWordClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noun" => Ok(WordClass::Noun),
            "verb" => Ok(WordClass::Verb),
            "adj" => Ok(WordClass::Adjective),
            "adv" => Ok(WordClass::Adverb),
            _ => Err(UnknownWordClass(s.to_owned())),
        }
    }
}

/// A leaf lexical type, e.g. `n_intr_le`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LexicalType {
    pub name: String,
    pub word_class: WordClass,
}

impl LexicalType {
    pub fn new(name: impl Into<String>, word_class: WordClass) -> Self {
        LexicalType {
            name: name.into(),
            word_class,
        }
    }
}

impl fmt::Display for LexicalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LexicalEntry {
    pub lexeme: String,
    pub ltype: LexicalType,
}

impl LexicalEntry {
    pub fn new(lexeme: impl Into<String>, ltype: LexicalType) -> Self {
        LexicalEntry {
            lexeme: lexeme.into(),
            ltype,
        }
    }

    pub fn word_class(&self) -> WordClass {
        self.ltype.word_class
    }
}

/// Normalise a lexeme: lowercase, and reject empty or multiword forms.
pub fn normalize_lexeme(raw: &str) -> Option<String> {
    let lexeme = raw.trim().to_lowercase();
    if lexeme.is_empty() || lexeme.chars().any(char::is_whitespace) {
        None
    } else {
        Some(lexeme)
    }
}

/// Gold lexicon used as training and evaluation substrate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeedLexicon {
    entries: BTreeSet<LexicalEntry>,
    word_classes: BTreeMap<String, BTreeSet<WordClass>>,
    inventory: BTreeMap<String, LexicalType>,
    duplicates: usize,
}

impl SeedLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Read a lexicon from a line stream.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, LexiconError> {
        let mut lexicon = SeedLexicon::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }

            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 3 {
                return Err(LexiconError::MalformedLine {
                    line: lineno,
                    found: fields.len(),
                });
            }

            let lexeme = normalize_lexeme(fields[0]).ok_or_else(|| LexiconError::InvalidLexeme {
                line: lineno,
                lexeme: fields[0].to_owned(),
            })?;
            let word_class: WordClass = fields[1]
                .trim()
                .parse()
                .map_err(|source| LexiconError::WordClass {
                    line: lineno,
                    source,
                })?;
            let name = fields[2].trim();
            if name.is_empty() {
                return Err(LexiconError::EmptyTypeName { line: lineno });
            }

            if !lexicon.insert(LexicalEntry::new(lexeme, LexicalType::new(name, word_class)))? {
                lexicon.duplicates += 1;
            }
        }

        if lexicon.duplicates > 0 {
            log::warn!("collapsed {} duplicate lexicon lines", lexicon.duplicates);
        }

        Ok(lexicon)
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        Self::read(text.as_bytes())
    }

    /// Build a lexicon from already-normalised entries.
    pub fn from_entries<I>(entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = LexicalEntry>,
    {
        let mut lexicon = SeedLexicon::new();
        for entry in entries {
            if !lexicon.insert(entry)? {
                lexicon.duplicates += 1;
            }
        }
        Ok(lexicon)
    }

    /// Insert an entry. Returns `false` if the entry was already present.
    pub fn insert(&mut self, entry: LexicalEntry) -> Result<bool, LexiconError> {
        match self.inventory.get(&entry.ltype.name) {
            Some(known) if known.word_class != entry.ltype.word_class => {
                return Err(LexiconError::ConflictingWordClass {
                    name: entry.ltype.name.clone(),
                    first: known.word_class,
                    second: entry.ltype.word_class,
                });
            }
            Some(_) => {}
            None => {
                self.inventory
                    .insert(entry.ltype.name.clone(), entry.ltype.clone());
            }
        }

        self.word_classes
            .entry(entry.lexeme.clone())
            .or_default()
            .insert(entry.ltype.word_class);
        Ok(self.entries.insert(entry))
    }

    /// Serialise in the seed lexicon file format, sorted by entry.
    pub fn write<W: Write>(&self, mut writer: W) -> io::Result<()> {
        for entry in &self.entries {
            writeln!(
                writer,
                "{}\t{}\t{}",
                entry.lexeme, entry.ltype.word_class, entry.ltype.name
            )?;
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("lexicon is UTF-8")
    }

    pub fn entries(&self) -> &BTreeSet<LexicalEntry> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of input lines collapsed as duplicates.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn lexemes(&self) -> impl Iterator<Item = &str> {
        self.word_classes.keys().map(String::as_str)
    }

    pub fn lexeme_set(&self) -> BTreeSet<String> {
        self.word_classes.keys().cloned().collect()
    }

    pub fn contains_lexeme(&self, lexeme: &str) -> bool {
        self.word_classes.contains_key(lexeme)
    }

    pub fn word_classes(&self, lexeme: &str) -> Option<&BTreeSet<WordClass>> {
        self.word_classes.get(lexeme)
    }

    pub fn word_class_map(&self) -> &BTreeMap<String, BTreeSet<WordClass>> {
        &self.word_classes
    }

    pub fn lexical_type(&self, name: &str) -> Option<&LexicalType> {
        self.inventory.get(name)
    }

    pub fn inventory(&self) -> impl Iterator<Item = &LexicalType> {
        self.inventory.values()
    }

    pub fn entries_for<'a>(&'a self, lexeme: &'a str) -> impl Iterator<Item = &'a LexicalEntry> + 'a {
        self.entries
            .iter()
            .filter(move |e| e.lexeme == lexeme)
    }

    /// Lexical types of a lexeme.
    pub fn types_of(&self, lexeme: &str) -> BTreeSet<&LexicalType> {
        let start = LexicalEntry::new(lexeme, LexicalType::new("", WordClass::Noun));
        self.entries
            .range(start..)
            .take_while(|e| e.lexeme == lexeme)
            .map(|e| &e.ltype)
            .collect()
    }

    pub fn has_entry(&self, lexeme: &str, ltype: &LexicalType) -> bool {
        self.entries.contains(&LexicalEntry::new(lexeme, ltype.clone()))
    }

    /// Number of entries per lexical type.
    pub fn type_counts(&self) -> BTreeMap<&LexicalType, usize> {
        let mut counts = BTreeMap::new();
        for entry in &self.entries {
            *counts.entry(&entry.ltype).or_insert(0) += 1;
        }
        counts
    }

    /// Lexical types with at least `min_entries` entries.
    pub fn filter_inventory(&self, min_entries: usize) -> BTreeSet<LexicalType> {
        self.type_counts()
            .into_iter()
            .filter(|&(_, count)| count >= min_entries)
            .map(|(ltype, _)| ltype.clone())
            .collect()
    }

    /// The lexicon restricted to entries whose type is in `inventory`.
    pub fn restrict_to(&self, inventory: &BTreeSet<LexicalType>) -> SeedLexicon {
        Self::from_entries(
            self.entries
                .iter()
                .filter(|e| inventory.contains(&e.ltype))
                .cloned(),
        )
        .expect("subset of a consistent lexicon is consistent")
    }

    /// The lexicon restricted to the given lexemes.
    pub fn restrict_lexemes<F>(&self, mut keep: F) -> SeedLexicon
    where
        F: FnMut(&str) -> bool,
    {
        Self::from_entries(self.entries.iter().filter(|e| keep(&e.lexeme)).cloned())
            .expect("subset of a consistent lexicon is consistent")
    }

    /// Most frequent lexical type of a word class. Ties go to the
    /// lexicographically smallest name.
    pub fn majority_default(&self, word_class: WordClass) -> Result<LexicalType, LexiconError> {
        self.type_counts()
            .into_iter()
            .filter(|(ltype, _)| ltype.word_class == word_class)
            .max_by(|(a, ca), (b, cb)| ca.cmp(cb).then_with(|| b.name.cmp(&a.name)))
            .map(|(ltype, _)| ltype.clone())
            .ok_or(LexiconError::NoEntries(word_class))
    }

    /// Majority defaults for every word class present in the lexicon.
    pub fn defaults(&self) -> Defaults {
        Defaults(
            WordClass::ALL
                .iter()
                .filter_map(|&wc| self.majority_default(wc).ok().map(|t| (wc, t)))
                .collect(),
        )
    }
}

/// Majority-class fallback type per word class.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Defaults(pub BTreeMap<WordClass, LexicalType>);

impl Defaults {
    pub fn get(&self, word_class: WordClass) -> Option<&LexicalType> {
        self.0.get(&word_class)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&WordClass, &LexicalType)> {
        self.0.iter()
    }

    pub fn is_complete(&self) -> bool {
        WordClass::ALL.iter().all(|wc| self.0.contains_key(wc))
    }

    /// Default entries of `lexeme` for the given classes.
    pub fn entries_for(&self, lexeme: &str, classes: &BTreeSet<WordClass>) -> BTreeSet<LexicalEntry> {
        classes
            .iter()
            .filter_map(|wc| self.get(*wc))
            .map(|t| LexicalEntry::new(lexeme, t.clone()))
            .collect()
    }
}
