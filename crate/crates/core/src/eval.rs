//! Stratified cross-validation, type precision/recall/F-score and
//! treebank-weighted token accuracy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io::{self, BufRead};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{Defaults, LexicalEntry, LexicalType, SeedLexicon, WordClass};

pub const DEFAULT_FOLDS: usize = 10;

/// Definition of token accuracy, carried in every report.
pub const TOKEN_ACCURACY_NOTE: &str = "token accuracy = treebank token mass of correctly hypothesised gold entries / token mass of all gold entries in the fold; unattested entries earn no credit";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),

    #[error("{folds} folds requested for only {lexemes} lexemes")]
    TooFewLexemes { folds: usize, lexemes: usize },

    #[error("gold entries carry zero treebank frequency")]
    ZeroFrequency,

    #[error("frequency line {line}: {message}")]
    FreqFormat { line: usize, message: String },

    #[error("method {method}: {message}")]
    Method { method: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldAssignment {
    pub n_folds: usize,
    pub fold_of: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_lexemes(&self, fold: usize) -> impl Iterator<Item = &str> {
        self.fold_of
            .iter()
            .filter(move |(_, &f)| f == fold)
            .map(|(l, _)| l.as_str())
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in self.fold_of.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Assign lexemes to `n` folds. Types are visited rarest first; each type's
/// unassigned lexemes, shuffled by `seed`, go one at a time to the fold with
/// the fewest lexemes of that type (then the smallest fold), subject to fold
/// sizes staying within one of each other.
pub fn stratified_folds(lexicon: &SeedLexicon, n: usize, seed: u64) -> Result<FoldAssignment, EvalError> {
    if n < 2 {
        return Err(EvalError::TooFewFolds(n));
    }
    let total = lexicon.word_class_map().len();
    if total < n {
        return Err(EvalError::TooFewLexemes {
            folds: n,
            lexemes: total,
        });
    }

    let mut by_type: BTreeMap<&LexicalType, Vec<&str>> = BTreeMap::new();
    for entry in lexicon.entries() {
        by_type.entry(&entry.ltype).or_default().push(&entry.lexeme);
    }
    let mut types: Vec<(&LexicalType, Vec<&str>)> = by_type.into_iter().collect();
    types.sort_by(|(ta, la), (tb, lb)| la.len().cmp(&lb.len()).then_with(|| ta.cmp(tb)));

    let base = total / n;
    let extra = total % n;
    let mut sizes = vec![0usize; n];
    let mut full = 0usize;
    let mut fold_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for (_, lexemes) in types {
        let mut type_count = vec![0usize; n];
        for l in &lexemes {
            if let Some(&f) = fold_of.get(*l) {
                type_count[f] += 1;
            }
        }
        let mut pending: Vec<&str> = lexemes.into_iter().filter(|l| !fold_of.contains_key(*l)).collect();
        pending.sort_unstable();
        pending.dedup();
        pending.shuffle(&mut rng);

        for lexeme in pending {
            let fold = (0..n)
                .filter(|&f| sizes[f] < base || (sizes[f] == base && full < extra))
                .min_by_key(|&f| (type_count[f], sizes[f], f))
                .expect("total capacity equals the lexeme count");
            if sizes[fold] == base {
                full += 1;
            }
            sizes[fold] += 1;
            type_count[fold] += 1;
            fold_of.insert(lexeme.to_owned(), fold);
        }
    }

    Ok(FoldAssignment { n_folds: n, fold_of })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

impl Prf {
    pub fn from_precision_recall(precision: f64, recall: f64) -> Prf {
        let fscore = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            fscore,
        }
    }
}

/// Type-level precision, recall and F-score of hypothesised against gold
/// entries. Precision is 1 for an empty hypothesis, recall 1 for an empty
/// gold set.
pub fn type_prf(hypothesised: &BTreeSet<LexicalEntry>, gold: &BTreeSet<LexicalEntry>) -> Prf {
    let correct = hypothesised.intersection(gold).count() as f64;
    let precision = if hypothesised.is_empty() {
        1.0
    } else {
        correct / hypothesised.len() as f64
    };
    let recall = if gold.is_empty() {
        1.0
    } else {
        correct / gold.len() as f64
    };
    Prf::from_precision_recall(precision, recall)
}

/// Token counts of gold entries in a held-out treebank.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreebankFreqs {
    counts: BTreeMap<LexicalEntry, u64>,
}

impl TreebankFreqs {
    /// Build from counts. Entries must exist in `gold`.
    pub fn new(counts: BTreeMap<LexicalEntry, u64>, gold: &SeedLexicon) -> Result<Self, EvalError> {
        if let Some(bad) = counts.keys().find(|e| !gold.entries().contains(*e)) {
            return Err(EvalError::FreqFormat {
                line: 0,
                message: format!("{} / {} is not a gold entry", bad.lexeme, bad.ltype.name),
            });
        }
        Ok(TreebankFreqs { counts })
    }

    /// Read `lexeme<TAB>lexical_type<TAB>count` lines.
    pub fn read<R: BufRead>(reader: R, gold: &SeedLexicon) -> Result<Self, EvalError> {
        let mut counts = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| EvalError::FreqFormat { line: lineno, message };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            }
            let lexeme = fields[0].trim().to_lowercase();
            let ltype = gold
                .lexical_type(fields[1].trim())
                .ok_or_else(|| err(format!("unknown lexical type {:?}", fields[1])))?;
            let count: u64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad count {:?}", fields[2])))?;
            let entry = LexicalEntry::new(lexeme, ltype.clone());
            if !gold.entries().contains(&entry) {
                return Err(err(format!("{} / {} is not a gold entry", entry.lexeme, entry.ltype.name)));
            }
            *counts.entry(entry).or_insert(0) += count;
        }
        Ok(TreebankFreqs { counts })
    }

    pub fn get(&self, entry: &LexicalEntry) -> u64 {
        self.counts.get(entry).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Share of the gold token mass covered by correct hypotheses.
pub fn token_accuracy(
    hypothesised: &BTreeSet<LexicalEntry>,
    gold: &BTreeSet<LexicalEntry>,
    freqs: &TreebankFreqs,
) -> Result<f64, EvalError> {
    let mass: u64 = gold.iter().map(|e| freqs.get(e)).sum();
    if mass == 0 {
        return Err(EvalError::ZeroFrequency);
    }
    let covered: u64 = gold
        .iter()
        .filter(|e| hypothesised.contains(*e))
        .map(|e| freqs.get(e))
        .sum();
    Ok(covered as f64 / mass as f64)
}

/// Predicts entries for lexemes pre-identified with word classes.
pub trait Predictor: Sync {
    fn predict(&self, lexeme: &str, classes: &BTreeSet<WordClass>) -> BTreeSet<LexicalEntry>;
}

/// A lexical acquisition method that can be trained on a lexicon.
pub trait AcquisitionMethod: Sync {
    fn name(&self) -> &str;

    fn fit<'a>(&'a self, train: &SeedLexicon) -> Result<Box<dyn Predictor + 'a>, EvalError>;
}

/// Majority-class baseline: the default type of every pre-identified class.
#[derive(Clone, Copy, Debug, Default)]
pub struct Baseline;

impl Predictor for Defaults {
    fn predict(&self, lexeme: &str, classes: &BTreeSet<WordClass>) -> BTreeSet<LexicalEntry> {
        self.entries_for(lexeme, classes)
    }
}

impl AcquisitionMethod for Baseline {
    fn name(&self) -> &str {
        "baseline"
    }

    fn fit<'a>(&'a self, train: &SeedLexicon) -> Result<Box<dyn Predictor + 'a>, EvalError> {
        Ok(Box::new(train.defaults()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FoldLabel {
    Fold(usize),
    Mean(MeanTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanTag {
    Mean,
}

impl fmt::Display for FoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoldLabel::Fold(i) => write!(f, "{i}"),
            FoldLabel::Mean(_) => f.write_str("mean"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    /// `all` or a word-class tag.
    pub word_class: String,
    pub fold: FoldLabel,
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    pub token_accuracy: Option<f64>,
    pub n_hypothesised: usize,
    pub n_gold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub notes: BTreeMap<String, String>,
    pub rows: Vec<ReportRow>,
}

impl EvaluationReport {
    pub fn new(rows: Vec<ReportRow>) -> Self {
        EvaluationReport {
            notes: BTreeMap::from([("token_accuracy".to_owned(), TOKEN_ACCURACY_NOTE.to_owned())]),
            rows,
        }
    }

    pub fn to_json(&self) -> Result<String, EvalError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let header = [
            "method", "class", "fold", "precision", "recall", "fscore", "token_acc", "n_hyp", "n_gold",
        ];
        let cells: Vec<[String; 9]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.method.clone(),
                    r.word_class.clone(),
                    r.fold.to_string(),
                    format!("{:.4}", r.precision),
                    format!("{:.4}", r.recall),
                    format!("{:.4}", r.fscore),
                    r.token_accuracy.map_or_else(|| "-".to_owned(), |t| format!("{t:.4}")),
                    r.n_hypothesised.to_string(),
                    r.n_gold.to_string(),
                ]
            })
            .collect();

        let mut widths = header.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }

        let mut out = String::new();
        let line = |out: &mut String, row: &[&str]| {
            for (i, (c, w)) in row.iter().zip(widths).enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                if i < 3 {
                    let _ = write!(out, "{c:<w$}");
                } else {
                    let _ = write!(out, "{c:>w$}");
                }
            }
            let trimmed = out.trim_end().len();
            out.truncate(trimmed);
            out.push('\n');
        };
        line(&mut out, &header);
        for row in &cells {
            line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        for (key, note) in &self.notes {
            let _ = writeln!(out, "# {key}: {note}");
        }
        out
    }

    pub fn mean_row(&self, method: &str, word_class: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| {
            r.method == method && r.word_class == word_class && matches!(r.fold, FoldLabel::Mean(_))
        })
    }
}

/// Score one set of predictions, overall and per word class present in
/// `classes`.
pub fn score_predictions(
    method: &str,
    fold: FoldLabel,
    hypothesised: &BTreeSet<LexicalEntry>,
    gold: &BTreeSet<LexicalEntry>,
    freqs: Option<&TreebankFreqs>,
    classes: &BTreeSet<WordClass>,
) -> Vec<ReportRow> {
    let row = |label: &str, h: &BTreeSet<LexicalEntry>, g: &BTreeSet<LexicalEntry>| {
        let prf = type_prf(h, g);
        ReportRow {
            method: method.to_owned(),
            word_class: label.to_owned(),
            fold,
            precision: prf.precision,
            recall: prf.recall,
            fscore: prf.fscore,
            token_accuracy: freqs.and_then(|f| token_accuracy(h, g, f).ok()),
            n_hypothesised: h.len(),
            n_gold: g.len(),
        }
    };

    let mut rows = vec![row("all", hypothesised, gold)];
    for &wc in classes {
        let pick = |s: &BTreeSet<LexicalEntry>| -> BTreeSet<LexicalEntry> {
            s.iter().filter(|e| e.word_class() == wc).cloned().collect()
        };
        rows.push(row(wc.tag(), &pick(hypothesised), &pick(gold)));
    }
    rows
}

fn mean_rows(method: &str, fold_rows: &[ReportRow]) -> Vec<ReportRow> {
    let mut groups: Vec<(&str, Vec<&ReportRow>)> = Vec::new();
    for r in fold_rows {
        match groups.iter_mut().find(|(wc, _)| *wc == r.word_class) {
            Some((_, rows)) => rows.push(r),
            None => groups.push((&r.word_class, vec![r])),
        }
    }

    groups
        .into_iter()
        .map(|(wc, rows)| {
            let n = rows.len() as f64;
            let precision = rows.iter().map(|r| r.precision).sum::<f64>() / n;
            let recall = rows.iter().map(|r| r.recall).sum::<f64>() / n;
            let prf = Prf::from_precision_recall(precision, recall);
            let token: Vec<f64> = rows.iter().filter_map(|r| r.token_accuracy).collect();
            ReportRow {
                method: method.to_owned(),
                word_class: wc.to_owned(),
                fold: FoldLabel::Mean(MeanTag::Mean),
                precision: prf.precision,
                recall: prf.recall,
                fscore: prf.fscore,
                token_accuracy: (!token.is_empty()).then(|| token.iter().sum::<f64>() / token.len() as f64),
                n_hypothesised: rows.iter().map(|r| r.n_hypothesised).sum(),
                n_gold: rows.iter().map(|r| r.n_gold).sum(),
            }
        })
        .collect()
}

/// n-fold stratified cross-validation of `method` over `lexicon`.
///
/// For every fold the method is trained on the out-of-fold lexemes and
/// predicts entries for the in-fold lexemes, given their gold word classes.
/// Mean rows average precision and recall over folds; their F-score is the
/// harmonic mean of the averaged precision and recall.
pub fn cross_validate(
    method: &dyn AcquisitionMethod,
    lexicon: &SeedLexicon,
    freqs: Option<&TreebankFreqs>,
    n: usize,
    seed: u64,
) -> Result<EvaluationReport, EvalError> {
    let folds = stratified_folds(lexicon, n, seed)?;
    let classes: BTreeSet<WordClass> = lexicon.entries().iter().map(|e| e.word_class()).collect();

    let per_fold: Vec<Vec<ReportRow>> = (0..n)
        .into_par_iter()
        .map(|fold| {
            let train = lexicon.restrict_lexemes(|l| folds.fold_of[l] != fold);
            let predictor = method.fit(&train)?;

            let mut hypothesised = BTreeSet::new();
            let mut gold = BTreeSet::new();
            for lexeme in folds.fold_lexemes(fold) {
                let wcs = lexicon.word_classes(lexeme).expect("fold lexemes come from the lexicon");
                hypothesised.extend(predictor.predict(lexeme, wcs));
                gold.extend(lexicon.entries_for(lexeme).cloned());
            }
            Ok(score_predictions(
                method.name(),
                FoldLabel::Fold(fold),
                &hypothesised,
                &gold,
                freqs,
                &classes,
            ))
        })
        .collect::<Result<_, EvalError>>()?;

    let fold_rows: Vec<ReportRow> = per_fold.into_iter().flatten().collect();
    let mut rows = fold_rows.clone();
    rows.extend(mean_rows(method.name(), &fold_rows));
    Ok(EvaluationReport::new(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(lexeme: &str, t: &str) -> LexicalEntry {
        LexicalEntry::new(lexeme, LexicalType::new(t, WordClass::Noun))
    }

    fn set(es: &[LexicalEntry]) -> BTreeSet<LexicalEntry> {
        es.iter().cloned().collect()
    }

    #[test]
    fn prf_identity_and_half() {
        let g = set(&[entry("a", "x"), entry("b", "x")]);
        let p = type_prf(&g, &g);
        assert_eq!((p.precision, p.recall, p.fscore), (1.0, 1.0, 1.0));

        let h = set(&[entry("a", "x"), entry("b", "y")]);
        let p = type_prf(&h, &g);
        assert_eq!((p.precision, p.recall, p.fscore), (0.5, 0.5, 0.5));
    }

    #[test]
    fn harmonic_mean() {
        let p = Prf::from_precision_recall(0.75, 0.6);
        assert!((p.fscore - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(Prf::from_precision_recall(0.0, 0.0).fscore, 0.0);
    }

    #[test]
    fn empty_sets() {
        let p = type_prf(&BTreeSet::new(), &BTreeSet::new());
        assert_eq!((p.precision, p.recall), (1.0, 1.0));
    }

    fn freq_fixture() -> (SeedLexicon, TreebankFreqs) {
        let lex = SeedLexicon::parse("dog\tnoun\tn_intr_le\nrun\tverb\tv_np_trans_le\n").unwrap();
        let freqs = TreebankFreqs::read("dog\tn_intr_le\t90\nrun\tv_np_trans_le\t10\n".as_bytes(), &lex).unwrap();
        (lex, freqs)
    }

    #[test]
    fn token_accuracy_cases() {
        let (lex, freqs) = freq_fixture();
        let gold = lex.entries().clone();
        let dog_only = set(&[entry("dog", "n_intr_le")]);
        assert!((token_accuracy(&dog_only, &gold, &freqs).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(token_accuracy(&gold, &gold, &freqs).unwrap(), 1.0);
        assert_eq!(token_accuracy(&BTreeSet::new(), &gold, &freqs).unwrap(), 0.0);
        assert!(matches!(
            token_accuracy(&gold, &BTreeSet::new(), &freqs),
            Err(EvalError::ZeroFrequency)
        ));
    }

    #[test]
    fn freqs_reject_non_gold_entries() {
        let (lex, _) = freq_fixture();
        assert!(TreebankFreqs::read("cat\tn_intr_le\t3\n".as_bytes(), &lex).is_err());
    }

    fn one_type(n: usize) -> SeedLexicon {
        SeedLexicon::from_entries((0..n).map(|i| entry(&format!("w{i:02}"), "x"))).unwrap()
    }

    #[test]
    fn ten_lexemes_ten_folds() {
        let folds = stratified_folds(&one_type(10), 10, 7).unwrap();
        assert_eq!(folds.sizes(), vec![1; 10]);
    }

    #[test]
    fn one_positive_per_fold() {
        let mut entries: Vec<LexicalEntry> = (0..10).map(|i| entry(&format!("x{i}"), "x_le")).collect();
        entries.extend((0..10).map(|i| entry(&format!("y{i}"), "y_le")));
        let lex = SeedLexicon::from_entries(entries).unwrap();
        let folds = stratified_folds(&lex, 10, 3).unwrap();
        for f in 0..10 {
            let xs = folds.fold_lexemes(f).filter(|l| l.starts_with('x')).count();
            assert_eq!(xs, 1, "fold {f}");
        }
    }

    #[test]
    fn folds_are_reproducible() {
        let lex = one_type(37);
        assert_eq!(stratified_folds(&lex, 10, 11).unwrap(), stratified_folds(&lex, 10, 11).unwrap());
        assert!(matches!(stratified_folds(&lex, 40, 1), Err(EvalError::TooFewLexemes { .. })));
        assert!(matches!(stratified_folds(&lex, 1, 1), Err(EvalError::TooFewFolds(1))));
    }

    #[test]
    fn baseline_report() {
        let mut entries: Vec<LexicalEntry> = (0..30).map(|i| entry(&format!("a{i}"), "a_le")).collect();
        entries.extend((0..10).map(|i| entry(&format!("b{i}"), "b_le")));
        let lex = SeedLexicon::from_entries(entries).unwrap();
        let report = cross_validate(&Baseline, &lex, None, 10, 1).unwrap();
        let mean = report.mean_row("baseline", "all").unwrap();
        assert!((mean.recall - 0.75).abs() < 1e-12);
        assert!((mean.precision - 0.75).abs() < 1e-12);
        assert_eq!(mean.n_gold, 40);

        let json = report.to_json().unwrap();
        assert!(json.contains("\"fold\": \"mean\""));
        assert_eq!(EvaluationReport::from_json(&json).unwrap(), report);
        assert!(report.to_table().starts_with("method"));
    }
}
