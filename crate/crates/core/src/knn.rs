//! Memory-based binary classification and the per-type classifier suite.
//!
//! Each lexical type gets its own IB1-style k-NN classifier over the top
//! ranked feature dimensions. Distances are gain-ratio weighted sums of
//! absolute value differences, each scaled by the feature's min-max range
//! over the instance base. All instances tied at the k-th distance vote.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::featurespace::{rank_features, take_top, SparseVector, DEFAULT_TOP_N};
use crate::lexicon::{Defaults, LexicalEntry, LexicalType, SeedLexicon, WordClass};

pub const DEFAULT_K: usize = 9;
const MODEL_MAGIC: &str = "#deeplex-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum KnnError {
    #[error("instance base is empty")]
    EmptyBase,

    #[error("k must be at least 1")]
    ZeroK,

    #[error("no lexical types to train")]
    EmptyInventory,

    #[error("no training lexemes")]
    EmptyTrainingSet,

    #[error("model line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Stored training instances restricted to the selected dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceBase {
    /// Selected value dimensions.
    dims: Vec<usize>,
    /// Gain-ratio weight per selected dimension.
    weights: Vec<f64>,
    mins: Vec<f64>,
    maxs: Vec<f64>,
    instances: Vec<Instance>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub lexeme: String,
    /// Values over the selected dimensions, in `dims` order.
    pub values: Vec<f64>,
    pub label: bool,
}

impl InstanceBase {
    /// Build an instance base; scaling bounds are computed from the instances.
    pub fn new(dims: Vec<usize>, weights: Vec<f64>, instances: Vec<Instance>) -> Self {
        assert_eq!(dims.len(), weights.len(), "one weight per selected dimension");
        assert!(
            instances.iter().all(|i| i.values.len() == dims.len()),
            "instances must cover exactly the selected dimensions"
        );
        let mut mins = vec![f64::INFINITY; dims.len()];
        let mut maxs = vec![f64::NEG_INFINITY; dims.len()];
        for inst in &instances {
            for (f, &v) in inst.values.iter().enumerate() {
                mins[f] = mins[f].min(v);
                maxs[f] = maxs[f].max(v);
            }
        }
        if instances.is_empty() {
            mins.fill(0.0);
            maxs.fill(0.0);
        }
        InstanceBase {
            dims,
            weights,
            mins,
            maxs,
            instances,
        }
    }

    /// Restrict sparse vectors to `dims` and store them.
    pub fn from_vectors(dims: Vec<usize>, weights: Vec<f64>, labelled: &[(&SparseVector, bool)]) -> Self {
        let instances = labelled
            .iter()
            .map(|(v, label)| Instance {
                lexeme: v.lexeme.clone(),
                values: dims.iter().map(|&d| v.dim(d)).collect(),
                label: *label,
            })
            .collect();
        Self::new(dims, weights, instances)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Project a query onto the selected dimensions.
    pub fn project(&self, query: &SparseVector) -> Vec<f64> {
        self.dims.iter().map(|&d| query.dim(d)).collect()
    }

    /// Weighted, range-scaled distance. Features with zero range contribute
    /// nothing.
    #[allow(clippy::needless_range_loop)]
    pub fn distance(&self, query: &[f64], instance: &Instance) -> f64 {
        let mut total = 0.0;
        for f in 0..self.dims.len() {
            let range = self.maxs[f] - self.mins[f];
            if range > 0.0 {
                total += self.weights[f] * ((query[f] - instance.values[f]).abs() / range);
            }
        }
        total
    }

    /// Classify a projected query. Returns the label and the fraction of
    /// positive votes among the neighbours.
    pub fn classify_projected(&self, query: &[f64], k: usize) -> Result<(bool, f64), KnnError> {
        if k == 0 {
            return Err(KnnError::ZeroK);
        }
        if self.instances.is_empty() {
            return Err(KnnError::EmptyBase);
        }

        let mut distances: Vec<f64> = self
            .instances
            .iter()
            .map(|inst| self.distance(query, inst))
            .collect();

        let cutoff = if k >= distances.len() {
            f64::INFINITY
        } else {
            let mut scratch = distances.clone();
            let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        };

        let (mut positive, mut votes) = (0usize, 0usize);
        for (d, inst) in distances.drain(..).zip(&self.instances) {
            if d <= cutoff {
                votes += 1;
                positive += inst.label as usize;
            }
        }
        let negative = votes - positive;
        Ok((positive > negative, positive as f64 / votes as f64))
    }

    pub fn classify(&self, query: &SparseVector, k: usize) -> Result<(bool, f64), KnnError> {
        self.classify_projected(&self.project(query), k)
    }
}

/// Binary classifier for one lexical type.
#[derive(Clone, Debug, PartialEq)]
pub enum Classifier {
    Trained(InstanceBase),
    /// Training labels were all one class; always predicts negative.
    DegenerateNegative,
}

impl Classifier {
    pub fn classify(&self, query: &SparseVector, k: usize) -> Result<(bool, f64), KnnError> {
        match self {
            Classifier::Trained(base) => base.classify(query, k),
            Classifier::DegenerateNegative => Ok((false, 0.0)),
        }
    }
}

/// One binary classifier per lexical type plus majority-class defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierSuite {
    pub classifiers: BTreeMap<LexicalType, Classifier>,
    pub defaults: Defaults,
    pub k: usize,
    /// Fingerprint of the feature space the suite was trained on.
    pub space_fingerprint: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainConfig {
    pub k: usize,
    pub n_features: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: DEFAULT_K,
            n_features: DEFAULT_TOP_N,
        }
    }
}

impl ClassifierSuite {
    /// Train one classifier per type in `inventory`.
    ///
    /// The instances of a type's classifier are the training lexemes
    /// pre-identified with that type's word class; a lexeme is positive when
    /// it has an entry of the type. Lexemes without a vector train on the
    /// empty vector.
    pub fn train(
        vectors: &BTreeMap<String, SparseVector>,
        n_dims: usize,
        lexicon: &SeedLexicon,
        inventory: &BTreeSet<LexicalType>,
        config: &TrainConfig,
    ) -> Result<ClassifierSuite, KnnError> {
        if inventory.is_empty() {
            return Err(KnnError::EmptyInventory);
        }
        if lexicon.is_empty() {
            return Err(KnnError::EmptyTrainingSet);
        }
        if config.k == 0 {
            return Err(KnnError::ZeroK);
        }

        let empties: BTreeMap<&str, SparseVector> = lexicon
            .lexemes()
            .filter(|l| !vectors.contains_key(*l))
            .map(|l| (l, SparseVector::empty(l)))
            .collect();
        let vector_of = |l: &str| vectors.get(l).unwrap_or_else(|| &empties[l]);

        let classifiers = inventory
            .par_iter()
            .map(|ltype| {
                let labelled: Vec<(&SparseVector, bool)> = lexicon
                    .word_class_map()
                    .iter()
                    .filter(|(_, classes)| classes.contains(&ltype.word_class))
                    .map(|(lexeme, _)| (vector_of(lexeme), lexicon.has_entry(lexeme, ltype)))
                    .collect();
                (ltype.clone(), train_one(&labelled, n_dims, config.n_features))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect();

        Ok(ClassifierSuite {
            classifiers,
            defaults: lexicon.defaults(),
            k: config.k,
            space_fingerprint: String::new(),
        })
    }

    pub fn with_fingerprint(mut self, fingerprint: impl Into<String>) -> Self {
        self.space_fingerprint = fingerprint.into();
        self
    }

    /// Predict entries for a lexeme pre-identified with `classes`. Any class
    /// without a positive classifier falls back to its default type.
    pub fn predict_entries(
        &self,
        lexeme: &str,
        vector: &SparseVector,
        classes: &BTreeSet<WordClass>,
    ) -> BTreeSet<LexicalEntry> {
        let mut entries = BTreeSet::new();
        let mut covered = BTreeSet::new();
        for (ltype, classifier) in &self.classifiers {
            if !classes.contains(&ltype.word_class) {
                continue;
            }
            let positive = classifier
                .classify(vector, self.k)
                .map(|(label, _)| label)
                .unwrap_or(false);
            if positive {
                covered.insert(ltype.word_class);
                entries.insert(LexicalEntry::new(lexeme, ltype.clone()));
            }
        }

        let uncovered: BTreeSet<WordClass> = classes.difference(&covered).copied().collect();
        entries.extend(self.defaults.entries_for(lexeme, &uncovered));
        entries
    }

    /// Write the line-based model file.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{MODEL_MAGIC}\t{MODEL_VERSION}")?;
        writeln!(w, "#k\t{}", self.k)?;
        writeln!(w, "#space\t{}", self.space_fingerprint)?;
        for (wc, ltype) in self.defaults.iter() {
            writeln!(w, "#default\t{wc}\t{}", ltype.name)?;
        }
        for (ltype, classifier) in &self.classifiers {
            match classifier {
                Classifier::DegenerateNegative => {
                    writeln!(w, "#classifier\t{}\t{}\tdegenerate", ltype.name, ltype.word_class)?;
                }
                Classifier::Trained(base) => {
                    writeln!(
                        w,
                        "#classifier\t{}\t{}\ttrained\t{}",
                        ltype.name,
                        ltype.word_class,
                        base.instances.len()
                    )?;
                    write_row(&mut w, "#dims", base.dims.iter())?;
                    write_row(&mut w, "#weights", base.weights.iter())?;
                    write_row(&mut w, "#mins", base.mins.iter())?;
                    write_row(&mut w, "#maxs", base.maxs.iter())?;
                    for inst in &base.instances {
                        let label = if inst.label { "+" } else { "-" };
                        write!(w, "{label}\t{}", inst.lexeme)?;
                        for (f, v) in inst.values.iter().enumerate() {
                            if *v != 0.0 {
                                write!(w, "\t{f}:{v}")?;
                            }
                        }
                        writeln!(w)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<ClassifierSuite, KnnError> {
        let err = |line: usize, message: &str| KnnError::Format {
            line,
            message: message.to_owned(),
        };

        let mut lines = reader.lines().enumerate().peekable();
        match lines.next() {
            Some((_, Ok(first))) if first == format!("{MODEL_MAGIC}\t{MODEL_VERSION}") => {}
            Some((_, Err(e))) => return Err(e.into()),
            _ => return Err(err(1, "not a model file of a supported version")),
        }

        let mut k = DEFAULT_K;
        let mut fingerprint = String::new();
        let mut defaults = BTreeMap::new();
        let mut classifiers = BTreeMap::new();

        while let Some((idx, line)) = lines.next() {
            let line = line?;
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "#k" if fields.len() == 2 => {
                    k = fields[1].parse().map_err(|_| err(lineno, "bad k"))?;
                }
                "#space" if fields.len() == 2 => fingerprint = fields[1].to_owned(),
                "#default" if fields.len() == 3 => {
                    let wc: WordClass = fields[1].parse().map_err(|_| err(lineno, "bad word class"))?;
                    defaults.insert(wc, LexicalType::new(fields[2], wc));
                }
                "#classifier" if fields.len() >= 4 => {
                    let wc: WordClass = fields[2].parse().map_err(|_| err(lineno, "bad word class"))?;
                    let ltype = LexicalType::new(fields[1], wc);
                    if fields[3] == "degenerate" {
                        classifiers.insert(ltype, Classifier::DegenerateNegative);
                        continue;
                    }
                    let n: usize = fields
                        .get(4)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(lineno, "bad instance count"))?;

                    let mut row = |name: &str| -> Result<Vec<String>, KnnError> {
                        match lines.next() {
                            Some((i, Ok(l))) => {
                                let mut parts = l.split('\t');
                                if parts.next() != Some(name) {
                                    return Err(err(i + 1, &format!("expected {name}")));
                                }
                                Ok(parts.map(str::to_owned).collect())
                            }
                            Some((_, Err(e))) => Err(e.into()),
                            None => Err(err(lineno, "truncated classifier")),
                        }
                    };
                    let dims: Vec<usize> = parse_all(&row("#dims")?).ok_or_else(|| err(lineno, "bad dims"))?;
                    let weights: Vec<f64> =
                        parse_all(&row("#weights")?).ok_or_else(|| err(lineno, "bad weights"))?;
                    let mins: Vec<f64> = parse_all(&row("#mins")?).ok_or_else(|| err(lineno, "bad mins"))?;
                    let maxs: Vec<f64> = parse_all(&row("#maxs")?).ok_or_else(|| err(lineno, "bad maxs"))?;
                    if weights.len() != dims.len() || mins.len() != dims.len() || maxs.len() != dims.len() {
                        return Err(err(lineno, "dimension count mismatch"));
                    }

                    let mut instances = Vec::with_capacity(n);
                    for _ in 0..n {
                        let Some((i, l)) = lines.next() else {
                            return Err(err(lineno, "truncated instance list"));
                        };
                        let l = l?;
                        let mut parts = l.split('\t');
                        let label = match parts.next() {
                            Some("+") => true,
                            Some("-") => false,
                            _ => return Err(err(i + 1, "bad instance label")),
                        };
                        let lexeme = parts.next().ok_or_else(|| err(i + 1, "missing lexeme"))?.to_owned();
                        let mut values = vec![0.0; dims.len()];
                        for cell in parts {
                            let (f, v) = cell.split_once(':').ok_or_else(|| err(i + 1, "bad value"))?;
                            let f: usize = f.parse().map_err(|_| err(i + 1, "bad value index"))?;
                            if f >= dims.len() {
                                return Err(err(i + 1, "value index out of range"));
                            }
                            values[f] = v.parse().map_err(|_| err(i + 1, "bad value"))?;
                        }
                        instances.push(Instance { lexeme, values, label });
                    }
                    classifiers.insert(
                        ltype,
                        Classifier::Trained(InstanceBase {
                            dims,
                            weights,
                            mins,
                            maxs,
                            instances,
                        }),
                    );
                }
                _ if line.is_empty() => {}
                _ => return Err(err(lineno, "unrecognised line")),
            }
        }

        Ok(ClassifierSuite {
            classifiers,
            defaults: Defaults(defaults),
            k,
            space_fingerprint: fingerprint,
        })
    }
}

fn write_row<W: Write, T: std::fmt::Display>(
    w: &mut W,
    name: &str,
    values: impl Iterator<Item = T>,
) -> io::Result<()> {
    write!(w, "{name}")?;
    for v in values {
        write!(w, "\t{v}")?;
    }
    writeln!(w)
}

fn parse_all<T: std::str::FromStr>(cells: &[String]) -> Option<Vec<T>> {
    cells.iter().map(|c| c.parse().ok()).collect()
}

fn train_one(labelled: &[(&SparseVector, bool)], n_dims: usize, n_features: usize) -> Classifier {
    match rank_features(labelled, n_dims) {
        Ok(ranking) => {
            let dims = take_top(&ranking, n_features);
            let weights = dims.iter().map(|&d| ranking.scores[d]).collect();
            Classifier::Trained(InstanceBase::from_vectors(dims, weights, labelled))
        }
        Err(_) => Classifier::DegenerateNegative,
    }
}
