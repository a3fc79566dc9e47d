//! Wiring of the feature extractors, classifiers and voting into the
//! acquisition methods that cross-validation and the CLI run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eval::{AcquisitionMethod, Baseline, EvalError, Predictor};
use crate::featurespace::{
    select_instances, vectorize, FeatureMatrix, SelectionConfig, SparseVector, DEFAULT_PER_TYPE_CAP,
    DEFAULT_TOTAL_CAP,
};
use crate::knn::{ClassifierSuite, TrainConfig};
use crate::lexicon::{LexicalEntry, LexicalType, SeedLexicon, WordClass};
use crate::morph::{
    build_ngram_space, default_prefixes, derivational_events, ngram_events, ClusterLexicon, NgramConfig,
};
use crate::ontology::{Ontology, Voter};
use crate::syntax::{extract_features, Corpus, Level};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ngram,
    Deriv,
    SyntaxTagged,
    SyntaxChunked,
    SyntaxParsed,
    Ontology,
    Baseline,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Ngram,
        Method::Deriv,
        Method::SyntaxTagged,
        Method::SyntaxChunked,
        Method::SyntaxParsed,
        Method::Ontology,
        Method::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ngram => "ngram",
            Method::Deriv => "deriv",
            Method::SyntaxTagged => "syntax-tagged",
            Method::SyntaxChunked => "syntax-chunked",
            Method::SyntaxParsed => "syntax-parsed",
            Method::Ontology => "ontology",
            Method::Baseline => "baseline",
        }
    }

    pub fn level(self) -> Option<Level> {
        match self {
            Method::SyntaxTagged => Some(Level::Tagged),
            Method::SyntaxChunked => Some(Level::Chunked),
            Method::SyntaxParsed => Some(Level::Parsed),
            _ => None,
        }
    }

    /// Whether the method trains k-NN classifiers over a feature matrix.
    pub fn uses_features(self) -> bool {
        !matches!(self, Method::Ontology | Method::Baseline)
    }

    pub fn required_resource(self) -> Option<&'static str> {
        match self {
            Method::Ngram | Method::Baseline => None,
            Method::Deriv => Some("clusters"),
            Method::SyntaxTagged | Method::SyntaxChunked | Method::SyntaxParsed => Some("corpus"),
            Method::Ontology => Some("ontology"),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown method {0:?}")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMethod(s.to_owned()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub ngram: NgramConfig,
    pub per_type_cap: usize,
    pub total_cap: usize,
    pub train: TrainConfig,
    pub prefixes: Vec<String>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            ngram: NgramConfig::default(),
            per_type_cap: DEFAULT_PER_TYPE_CAP,
            total_cap: DEFAULT_TOTAL_CAP,
            train: TrainConfig::default(),
            prefixes: default_prefixes(),
        }
    }
}

/// Method inputs beyond the seed lexicon.
#[derive(Clone, Debug, Default)]
pub struct Resources {
    /// Word list for the n-gram space; the lexicon's lexemes when absent.
    pub word_list: Option<Vec<String>>,
    pub clusters: Option<ClusterLexicon>,
    pub corpus: Option<Corpus>,
    pub ontology: Option<Ontology>,
}

fn mismatch(method: Method, message: impl Into<String>) -> Error {
    Error::ResourceMismatch {
        method: method.name().to_owned(),
        message: message.into(),
    }
}

impl Resources {
    /// Check that `method` has what it needs.
    pub fn check(&self, method: Method) -> Result<(), Error> {
        let missing = match method {
            Method::Deriv => self.clusters.is_none(),
            Method::SyntaxTagged | Method::SyntaxChunked | Method::SyntaxParsed => self.corpus.is_none(),
            Method::Ontology => self.ontology.is_none(),
            Method::Ngram | Method::Baseline => false,
        };
        if missing {
            return Err(mismatch(
                method,
                format!("missing {}", method.required_resource().unwrap_or("resource")),
            ));
        }
        if let (Some(level), Some(corpus)) = (method.level(), &self.corpus) {
            if corpus.level != level {
                return Err(mismatch(method, format!("corpus is {}, need {level}", corpus.level)));
            }
        }
        Ok(())
    }
}

/// Extract the feature matrix of a feature-based method.
///
/// Saturation is measured over the lexicon's lexemes; vectors are produced
/// for every lexicon lexeme and every extra target that has in-space events.
pub fn extract_matrix(
    method: Method,
    lexicon: &SeedLexicon,
    targets: &BTreeMap<String, BTreeSet<WordClass>>,
    resources: &Resources,
    params: &Params,
) -> Result<FeatureMatrix, Error> {
    if !method.uses_features() {
        return Err(mismatch(method, "method has no feature matrix"));
    }
    resources.check(method)?;

    let mut all: BTreeMap<String, BTreeSet<WordClass>> = lexicon.word_class_map().clone();
    for (lexeme, classes) in targets {
        all.entry(lexeme.clone()).or_default().extend(classes.iter().copied());
    }
    let population = lexicon.lexeme_set();

    let (space, events) = match method {
        Method::Ngram => {
            let words: Vec<String> = match &resources.word_list {
                Some(list) => list.clone(),
                None => lexicon.lexemes().map(str::to_owned).collect(),
            };
            let space = build_ngram_space(&words, &params.ngram)?;
            let events = ngram_events(all.keys().map(String::as_str), &params.ngram)?;
            (space, events)
        }
        Method::Deriv => {
            let clusters = resources.clusters.as_ref().expect("checked");
            let events = derivational_events(&all, clusters, &params.prefixes);
            (select_instances(&events, &population, &selection(params)), events)
        }
        _ => {
            let corpus = resources.corpus.as_ref().expect("checked");
            let target_set: BTreeSet<String> = all.keys().cloned().collect();
            let events = extract_features(corpus, &target_set)?;
            (select_instances(&events, &population, &selection(params)), events)
        }
    };

    let vectors = vectorize(&events, &space, events.occurrences())?;
    log::info!(
        "{method}: {} feature instances, {} vectors",
        space.len(),
        vectors.len()
    );
    Ok(FeatureMatrix { space, vectors })
}

fn selection(params: &Params) -> SelectionConfig {
    SelectionConfig {
        per_type_cap: params.per_type_cap,
        total_cap: params.total_cap,
        min_freq: 1,
    }
}

/// k-NN classifier suite over a fixed feature matrix.
pub struct KnnMethod {
    method: Method,
    matrix: FeatureMatrix,
    config: TrainConfig,
}

impl KnnMethod {
    pub fn new(method: Method, matrix: FeatureMatrix, config: TrainConfig) -> Self {
        KnnMethod { method, matrix, config }
    }

    pub fn matrix(&self) -> &FeatureMatrix {
        &self.matrix
    }

    pub fn train_suite(&self, train: &SeedLexicon) -> Result<ClassifierSuite, EvalError> {
        let inventory: BTreeSet<LexicalType> = train.inventory().cloned().collect();
        ClassifierSuite::train(
            &self.matrix.vectors,
            self.matrix.space.n_dims(),
            train,
            &inventory,
            &self.config,
        )
        .map(|s| s.with_fingerprint(self.matrix.space.fingerprint()))
        .map_err(|e| EvalError::Method {
            method: self.method.name().to_owned(),
            message: e.to_string(),
        })
    }
}

/// A trained suite plus the vectors it predicts from.
pub struct SuitePredictor<'a> {
    pub suite: ClassifierSuite,
    pub vectors: &'a BTreeMap<String, SparseVector>,
}

impl Predictor for SuitePredictor<'_> {
    fn predict(&self, lexeme: &str, classes: &BTreeSet<WordClass>) -> BTreeSet<LexicalEntry> {
        match self.vectors.get(lexeme) {
            Some(v) => self.suite.predict_entries(lexeme, v, classes),
            None => self.suite.predict_entries(lexeme, &SparseVector::empty(lexeme), classes),
        }
    }
}

impl AcquisitionMethod for KnnMethod {
    fn name(&self) -> &str {
        self.method.name()
    }

    fn fit<'a>(&'a self, train: &SeedLexicon) -> Result<Box<dyn Predictor + 'a>, EvalError> {
        Ok(Box::new(SuitePredictor {
            suite: self.train_suite(train)?,
            vectors: &self.matrix.vectors,
        }))
    }
}

/// Semantic-neighbour voting over an ontology.
pub struct OntologyMethod {
    ontology: Ontology,
}

impl OntologyMethod {
    pub fn new(ontology: Ontology) -> Self {
        OntologyMethod { ontology }
    }
}

pub struct OntologyPredictor<'a> {
    ontology: &'a Ontology,
    train: SeedLexicon,
    defaults: crate::lexicon::Defaults,
}

impl<'a> OntologyPredictor<'a> {
    pub fn new(ontology: &'a Ontology, train: SeedLexicon) -> Self {
        let defaults = train.defaults();
        OntologyPredictor {
            ontology,
            train,
            defaults,
        }
    }
}

impl Predictor for OntologyPredictor<'_> {
    fn predict(&self, lexeme: &str, classes: &BTreeSet<WordClass>) -> BTreeSet<LexicalEntry> {
        Voter::new(self.ontology, &self.train, &self.defaults).vote_entries(lexeme, classes)
    }
}

impl AcquisitionMethod for OntologyMethod {
    fn name(&self) -> &str {
        Method::Ontology.name()
    }

    fn fit<'a>(&'a self, train: &SeedLexicon) -> Result<Box<dyn Predictor + 'a>, EvalError> {
        Ok(Box::new(OntologyPredictor::new(&self.ontology, train.clone())))
    }
}

/// Build a runnable method. Feature-based methods extract their matrix over
/// the whole lexicon up front.
pub fn build_method(
    method: Method,
    lexicon: &SeedLexicon,
    resources: Resources,
    params: &Params,
) -> Result<Box<dyn AcquisitionMethod>, Error> {
    resources.check(method)?;
    Ok(match method {
        Method::Baseline => Box::new(Baseline),
        Method::Ontology => Box::new(OntologyMethod::new(resources.ontology.expect("checked"))),
        _ => {
            let matrix = extract_matrix(method, lexicon, &BTreeMap::new(), &resources, params)?;
            Box::new(KnnMethod::new(method, matrix, params.train))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("svm".parse::<Method>().is_err());
    }

    #[test]
    fn missing_resources() {
        let lex = SeedLexicon::parse("dog\tnoun\tn_intr_le\n").unwrap();
        for m in [Method::Deriv, Method::SyntaxTagged, Method::Ontology] {
            assert!(matches!(
                build_method(m, &lex, Resources::default(), &Params::default()),
                Err(Error::ResourceMismatch { .. })
            ));
        }
        assert!(build_method(Method::Baseline, &lex, Resources::default(), &Params::default()).is_ok());
    }

    #[test]
    fn corpus_level_must_match() {
        let corpus = crate::syntax::parse_corpus("the\tthe\tDT\n\n".as_bytes(), Level::Tagged, 200).unwrap();
        let res = Resources {
            corpus: Some(corpus),
            ..Resources::default()
        };
        assert!(res.check(Method::SyntaxTagged).is_ok());
        assert!(res.check(Method::SyntaxChunked).is_err());
    }
}
