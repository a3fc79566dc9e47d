//! WordNet-style ontology and semantic-neighbour voting.
//!
//! A sense's semantic neighbours are its synonyms plus the members of its
//! direct hypernym and hyponym synsets. Each sense votes for the lexical
//! type most common among its neighbours in the training lexicon; a
//! lexeme's entries are the union of its senses' votes.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead};

use thiserror::Error;

use crate::lexicon::{normalize_lexeme, Defaults, LexicalEntry, LexicalType, SeedLexicon, UnknownWordClass, WordClass};

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("synset line {line}: expected `id<TAB>word_class<TAB>lemmas`")]
    MalformedSynset { line: usize },

    #[error("edge line {line}: expected `child<TAB>parent`")]
    MalformedEdge { line: usize },

    #[error("synset line {line}: {source}")]
    WordClass {
        line: usize,
        #[source]
        source: UnknownWordClass,
    },

    #[error("duplicate synset id {0:?}")]
    DuplicateSynset(String),

    #[error("edge line {line}: unknown synset {id:?}")]
    DanglingEdge { line: usize, id: String },

    #[error("edge line {line}: {child:?} and {parent:?} belong to different word classes")]
    CrossClassEdge { line: usize, child: String, parent: String },

    #[error("edge line {line}: self-loop on {id:?}")]
    SelfLoop { line: usize, id: String },

    #[error("unknown synset {0:?}")]
    UnknownSense(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Synset {
    pub word_class: WordClass,
    pub members: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ontology {
    synsets: BTreeMap<String, Synset>,
    hypernyms: BTreeMap<String, BTreeSet<String>>,
    hyponyms: BTreeMap<String, BTreeSet<String>>,
    senses: BTreeMap<(String, WordClass), Vec<String>>,
}

impl Ontology {
    /// Load synsets (`id<TAB>word_class<TAB>lemma lemma ...`) and hypernym
    /// edges (`child<TAB>parent`).
    pub fn read<S: BufRead, E: BufRead>(synsets: S, edges: E) -> Result<Self, OntologyError> {
        let mut onto = Ontology::default();

        for (idx, line) in synsets.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields[0].is_empty() {
                return Err(OntologyError::MalformedSynset { line: lineno });
            }
            let word_class: WordClass = fields[1]
                .parse()
                .map_err(|source| OntologyError::WordClass { line: lineno, source })?;
            let mut members: Vec<String> = Vec::new();
            for m in fields[2].split_whitespace().filter_map(normalize_lexeme) {
                if !members.contains(&m) {
                    members.push(m);
                }
            }
            onto.add_synset(fields[0], word_class, members)?;
        }

        for (idx, line) in edges.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(OntologyError::MalformedEdge { line: lineno });
            }
            onto.add_edge(fields[0], fields[1], lineno)?;
        }

        Ok(onto)
    }

    pub fn parse(synsets: &str, edges: &str) -> Result<Self, OntologyError> {
        Self::read(synsets.as_bytes(), edges.as_bytes())
    }

    pub fn add_synset(&mut self, id: &str, word_class: WordClass, members: Vec<String>) -> Result<(), OntologyError> {
        if self.synsets.contains_key(id) {
            return Err(OntologyError::DuplicateSynset(id.to_owned()));
        }
        for m in &members {
            self.senses
                .entry((m.clone(), word_class))
                .or_default()
                .push(id.to_owned());
        }
        self.synsets.insert(id.to_owned(), Synset { word_class, members });
        Ok(())
    }

    fn add_edge(&mut self, child: &str, parent: &str, line: usize) -> Result<(), OntologyError> {
        let class_of = |id: &str| {
            self.synsets
                .get(id)
                .map(|s| s.word_class)
                .ok_or_else(|| OntologyError::DanglingEdge { line, id: id.to_owned() })
        };
        let (cc, pc) = (class_of(child)?, class_of(parent)?);
        if child == parent {
            return Err(OntologyError::SelfLoop { line, id: child.to_owned() });
        }
        if cc != pc {
            return Err(OntologyError::CrossClassEdge {
                line,
                child: child.to_owned(),
                parent: parent.to_owned(),
            });
        }
        self.hypernyms
            .entry(child.to_owned())
            .or_default()
            .insert(parent.to_owned());
        self.hyponyms
            .entry(parent.to_owned())
            .or_default()
            .insert(child.to_owned());
        Ok(())
    }

    pub fn synset(&self, id: &str) -> Option<&Synset> {
        self.synsets.get(id)
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn hypernyms(&self, id: &str) -> impl Iterator<Item = &str> {
        self.hypernyms.get(id).into_iter().flatten().map(String::as_str)
    }

    pub fn hyponyms(&self, id: &str) -> impl Iterator<Item = &str> {
        self.hyponyms.get(id).into_iter().flatten().map(String::as_str)
    }

    /// Senses of a lemma in a word class, in file order.
    pub fn senses(&self, lemma: &str, word_class: WordClass) -> &[String] {
        self.senses
            .get(&(lemma.to_owned(), word_class))
            .map_or(&[], Vec::as_slice)
    }

    /// Synonyms, direct hypernym members and direct hyponym members of a
    /// sense, minus the target itself.
    pub fn semantic_neighbours(&self, sense: &str, target: &str) -> Result<BTreeSet<String>, OntologyError> {
        let synset = self
            .synsets
            .get(sense)
            .ok_or_else(|| OntologyError::UnknownSense(sense.to_owned()))?;
        let mut neighbours: BTreeSet<String> = synset.members.iter().cloned().collect();
        for related in self.hypernyms(sense).chain(self.hyponyms(sense)) {
            neighbours.extend(self.synsets[related].members.iter().cloned());
        }
        neighbours.remove(target);
        Ok(neighbours)
    }
}

/// Neighbour voting against a fixed training lexicon.
pub struct Voter<'a> {
    onto: &'a Ontology,
    train: &'a SeedLexicon,
    defaults: &'a Defaults,
    type_frequency: BTreeMap<&'a LexicalType, usize>,
}

impl<'a> Voter<'a> {
    pub fn new(onto: &'a Ontology, train: &'a SeedLexicon, defaults: &'a Defaults) -> Self {
        Voter {
            onto,
            train,
            defaults,
            type_frequency: train.type_counts(),
        }
    }

    /// The type a sense votes for: most frequent among the neighbours'
    /// types of the sense's class, ties to the globally more frequent type,
    /// then the smaller name.
    pub fn sense_vote(&self, sense: &str, lexeme: &str, word_class: WordClass) -> Option<LexicalType> {
        let neighbours = self.onto.semantic_neighbours(sense, lexeme).ok()?;
        let mut votes: BTreeMap<&LexicalType, usize> = BTreeMap::new();
        for n in &neighbours {
            for ltype in self.train.types_of(n) {
                if ltype.word_class == word_class {
                    *votes.entry(ltype).or_insert(0) += 1;
                }
            }
        }
        votes
            .into_iter()
            .max_by(|(a, va), (b, vb)| {
                va.cmp(vb)
                    .then_with(|| self.global(a).cmp(&self.global(b)))
                    .then_with(|| b.name.cmp(&a.name))
            })
            .map(|(t, _)| t.clone())
    }

    fn global(&self, ltype: &LexicalType) -> usize {
        self.type_frequency.get(ltype).copied().unwrap_or(0)
    }

    pub fn vote_entries(&self, lexeme: &str, classes: &BTreeSet<WordClass>) -> BTreeSet<LexicalEntry> {
        let mut entries = BTreeSet::new();
        let mut silent = BTreeSet::new();
        for &wc in classes {
            let before = entries.len();
            for sense in self.onto.senses(lexeme, wc) {
                if let Some(t) = self.sense_vote(sense, lexeme, wc) {
                    entries.insert(LexicalEntry::new(lexeme, t));
                }
            }
            if entries.len() == before {
                silent.insert(wc);
            }
        }
        entries.extend(self.defaults.entries_for(lexeme, &silent));
        entries
    }
}

pub fn vote_entries(
    onto: &Ontology,
    lexeme: &str,
    classes: &BTreeSet<WordClass>,
    train: &SeedLexicon,
    defaults: &Defaults,
) -> BTreeSet<LexicalEntry> {
    Voter::new(onto, train, defaults).vote_entries(lexeme, classes)
}
