//! Deep lexical acquisition: predicting the lexical types of unknown lexemes
//! for a precision grammar from morphological, syntactic and ontological
//! evidence.
//!
//! Every feature-based method shares one design: extract feature events,
//! select a capped feature space by saturation, vectorise lexemes with raw
//! and relative counts, and train one binary k-NN classifier per lexical
//! type with a majority-type fallback per word class.

pub mod eval;
pub mod featurespace;
pub mod knn;
pub mod lexicon;
pub mod morph;
pub mod ontology;
pub mod pipeline;
pub mod syntax;

pub use eval::{cross_validate, stratified_folds, type_prf, token_accuracy, EvaluationReport, Prf, TreebankFreqs};
pub use featurespace::{FeatureMatrix, FeatureSpace, SparseVector};
pub use knn::ClassifierSuite;
pub use lexicon::{Defaults, LexicalEntry, LexicalType, SeedLexicon, WordClass};
pub use pipeline::{build_method, extract_matrix, Method, Params, Resources};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Lexicon(#[from] lexicon::LexiconError),

    #[error(transparent)]
    Morph(#[from] morph::MorphError),

    #[error(transparent)]
    Syntax(#[from] syntax::SyntaxError),

    #[error(transparent)]
    Feature(#[from] featurespace::FeatureError),

    #[error(transparent)]
    Knn(#[from] knn::KnnError),

    #[error(transparent)]
    Ontology(#[from] ontology::OntologyError),

    #[error(transparent)]
    Eval(#[from] eval::EvalError),

    #[error("method {method}: {message}")]
    ResourceMismatch { method: String, message: String },
}
