//! Feature spaces, per-lexeme sparse vectors and gain-ratio feature ranking.
//!
//! Feature events are collected per lexeme into an [`EventBag`]. A
//! [`FeatureSpace`] keeps, for every feature type, the instances with the
//! highest saturation (share of lexicon lexemes for which the instance is
//! non-zero), capped per type and overall. Every selected instance yields two
//! value dimensions: the raw count (dimension `2 * id`) and the relative
//! occurrence over all token instances of the lexeme (dimension `2 * id + 1`).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_PER_TYPE_CAP: usize = 50;
pub const DEFAULT_TOTAL_CAP: usize = 3900;
pub const DEFAULT_TOP_N: usize = 100;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("lexeme {0:?} has feature events but no recorded occurrences")]
    NoOccurrences(String),

    #[error("lexeme {lexeme:?}: raw count {raw} exceeds its {occurrences} occurrences")]
    CountExceedsOccurrences {
        lexeme: String,
        raw: u64,
        occurrences: u64,
    },

    #[error("ranking needs at least two lexemes with both label values")]
    DegenerateLabels,

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A single observation of a feature instance for a lexeme.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureEvent {
    pub lexeme: String,
    pub ftype: String,
    pub instance: String,
}

impl FeatureEvent {
    pub fn new(lexeme: impl Into<String>, ftype: impl Into<String>, instance: impl Into<String>) -> Self {
        FeatureEvent {
            lexeme: lexeme.into(),
            ftype: ftype.into(),
            instance: instance.into(),
        }
    }
}

/// `(feature type, instance)`.
pub type FeatureKey = (String, String);

/// Multiset of feature events, grouped by lexeme, plus the number of token
/// occurrences observed for each lexeme.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventBag {
    counts: BTreeMap<String, BTreeMap<FeatureKey, u64>>,
    occurrences: BTreeMap<String, u64>,
}

impl EventBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, lexeme: &str, ftype: &str, instance: &str) {
        self.add_n(lexeme, ftype, instance, 1);
    }

    pub fn add_n(&mut self, lexeme: &str, ftype: &str, instance: &str, n: u64) {
        if n == 0 {
            return;
        }
        let per_lexeme = match self.counts.get_mut(lexeme) {
            Some(m) => m,
            None => self.counts.entry(lexeme.to_owned()).or_default(),
        };
        *per_lexeme
            .entry((ftype.to_owned(), instance.to_owned()))
            .or_insert(0) += n;
    }

    pub fn push(&mut self, event: &FeatureEvent) {
        self.add(&event.lexeme, &event.ftype, &event.instance);
    }

    pub fn add_occurrences(&mut self, lexeme: &str, n: u64) {
        *self.occurrences.entry(lexeme.to_owned()).or_insert(0) += n;
    }

    /// Sum another bag into this one.
    pub fn merge(&mut self, other: EventBag) {
        for (lexeme, features) in other.counts {
            let mine = self.counts.entry(lexeme).or_default();
            for (key, n) in features {
                *mine.entry(key).or_insert(0) += n;
            }
        }
        for (lexeme, n) in other.occurrences {
            *self.occurrences.entry(lexeme).or_insert(0) += n;
        }
    }

    pub fn count(&self, lexeme: &str, ftype: &str, instance: &str) -> u64 {
        self.counts
            .get(lexeme)
            .and_then(|m| m.get(&(ftype.to_owned(), instance.to_owned())))
            .copied()
            .unwrap_or(0)
    }

    pub fn lexeme_features(&self, lexeme: &str) -> Option<&BTreeMap<FeatureKey, u64>> {
        self.counts.get(lexeme)
    }

    pub fn lexemes(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn occurrences(&self) -> &BTreeMap<String, u64> {
        &self.occurrences
    }

    /// Iterate `(lexeme, (ftype, instance), count)` in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &FeatureKey, u64)> {
        self.counts
            .iter()
            .flat_map(|(lex, m)| m.iter().map(move |(k, n)| (lex.as_str(), k, *n)))
    }

    /// Total number of events, counting multiplicity.
    pub fn total(&self) -> u64 {
        self.iter().map(|(_, _, n)| n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// The set of feature types that fired at least once.
    pub fn ftypes(&self) -> BTreeSet<&str> {
        self.iter().map(|(_, (ftype, _), _)| ftype.as_str()).collect()
    }

    /// Events restricted to a set of lexemes.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> EventBag {
        EventBag {
            counts: self
                .counts
                .iter()
                .filter(|(l, _)| keep.contains(*l))
                .map(|(l, m)| (l.clone(), m.clone()))
                .collect(),
            occurrences: self
                .occurrences
                .iter()
                .filter(|(l, _)| keep.contains(*l))
                .map(|(l, n)| (l.clone(), *n))
                .collect(),
        }
    }
}

/// A selected feature instance with its selection statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureInstance {
    pub ftype: String,
    pub instance: String,
    /// Number of lexemes (out of the selection population) with a non-zero value.
    pub support: usize,
    /// Total event count.
    pub frequency: u64,
}

/// Candidate statistics, ordered best first: higher support, then higher
/// frequency, then feature type and instance.
pub(crate) fn selection_order(a: &FeatureInstance, b: &FeatureInstance) -> std::cmp::Ordering {
    b.support
        .cmp(&a.support)
        .then_with(|| b.frequency.cmp(&a.frequency))
        .then_with(|| a.ftype.cmp(&b.ftype))
        .then_with(|| a.instance.cmp(&b.instance))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSpace {
    instances: Vec<FeatureInstance>,
    index: HashMap<FeatureKey, usize>,
    population: usize,
    per_type_cap: usize,
    total_cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelectionConfig {
    pub per_type_cap: usize,
    pub total_cap: usize,
    /// Minimum total event count an instance needs to be considered.
    pub min_freq: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            per_type_cap: DEFAULT_PER_TYPE_CAP,
            total_cap: DEFAULT_TOTAL_CAP,
            min_freq: 1,
        }
    }
}

impl FeatureSpace {
    /// Build a space from candidates, applying the per-type and total caps by
    /// selection order. Ids follow the final selection order.
    pub fn from_candidates(
        mut candidates: Vec<FeatureInstance>,
        population: usize,
        per_type_cap: usize,
        total_cap: usize,
    ) -> FeatureSpace {
        candidates.sort_by(selection_order);

        let mut per_type: HashMap<String, usize> = HashMap::new();
        let mut instances = Vec::new();
        for cand in candidates {
            if instances.len() >= total_cap {
                break;
            }
            let seen = per_type.entry(cand.ftype.clone()).or_insert(0);
            if *seen >= per_type_cap {
                continue;
            }
            *seen += 1;
            instances.push(cand);
        }

        Self::from_instances(instances, population, per_type_cap, total_cap)
    }

    fn from_instances(
        instances: Vec<FeatureInstance>,
        population: usize,
        per_type_cap: usize,
        total_cap: usize,
    ) -> FeatureSpace {
        let index = instances
            .iter()
            .enumerate()
            .map(|(id, f)| ((f.ftype.clone(), f.instance.clone()), id))
            .collect();
        FeatureSpace {
            instances,
            index,
            population,
            per_type_cap,
            total_cap,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Number of value dimensions (two per instance).
    pub fn n_dims(&self) -> usize {
        2 * self.instances.len()
    }

    pub fn instances(&self) -> &[FeatureInstance] {
        &self.instances
    }

    pub fn id_of(&self, ftype: &str, instance: &str) -> Option<usize> {
        self.index.get(&(ftype.to_owned(), instance.to_owned())).copied()
    }

    pub fn get(&self, id: usize) -> Option<&FeatureInstance> {
        self.instances.get(id)
    }

    pub fn per_type_cap(&self) -> usize {
        self.per_type_cap
    }

    pub fn total_cap(&self) -> usize {
        self.total_cap
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn saturation(&self, id: usize) -> f64 {
        if self.population == 0 {
            0.0
        } else {
            self.instances[id].support as f64 / self.population as f64
        }
    }

    /// Number of selected instances per feature type.
    pub fn type_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for f in &self.instances {
            *counts.entry(f.ftype.as_str()).or_insert(0) += 1;
        }
        counts
    }

    /// SHA-256 over the ordered `(ftype, instance)` list.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for f in &self.instances {
            hasher.update(f.ftype.as_bytes());
            hasher.update([0x1f]);
            hasher.update(f.instance.as_bytes());
            hasher.update([0x1e]);
        }
        hasher.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Select, for every feature type, the `per_type_cap` instances of highest
/// saturation over `lexicon_lexemes`, then truncate to `total_cap`.
pub fn select_instances(
    events: &EventBag,
    lexicon_lexemes: &BTreeSet<String>,
    config: &SelectionConfig,
) -> FeatureSpace {
    let mut stats: HashMap<&FeatureKey, (usize, u64)> = HashMap::new();
    for (lexeme, features) in &events.counts {
        let in_lexicon = lexicon_lexemes.contains(lexeme);
        for (key, &n) in features {
            let entry = stats.entry(key).or_insert((0, 0));
            entry.1 += n;
            if in_lexicon {
                entry.0 += 1;
            }
        }
    }

    let candidates = stats
        .into_iter()
        .filter(|&(_, (support, freq))| support > 0 && freq >= config.min_freq)
        .map(|((ftype, instance), (support, frequency))| FeatureInstance {
            ftype: ftype.clone(),
            instance: instance.clone(),
            support,
            frequency,
        })
        .collect();

    FeatureSpace::from_candidates(
        candidates,
        lexicon_lexemes.len(),
        config.per_type_cap,
        config.total_cap,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureValue {
    pub raw: u64,
    pub rel: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    pub lexeme: String,
    /// Feature id to value pair. Absent ids are zero.
    pub values: BTreeMap<usize, FeatureValue>,
    pub occurrences: u64,
}

impl SparseVector {
    pub fn empty(lexeme: impl Into<String>) -> Self {
        SparseVector {
            lexeme: lexeme.into(),
            values: BTreeMap::new(),
            occurrences: 0,
        }
    }

    /// Value of a dimension: `2 * id` is the raw count, `2 * id + 1` the
    /// relative occurrence.
    pub fn dim(&self, dim: usize) -> f64 {
        match self.values.get(&(dim / 2)) {
            Some(v) if dim.is_multiple_of(2) => v.raw as f64,
            Some(v) => v.rel,
            None => 0.0,
        }
    }

    /// Non-zero dimensions in increasing order.
    pub fn nonzero_dims(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .filter(|(_, v)| v.raw > 0)
            .flat_map(|(&id, v)| [(2 * id, v.raw as f64), (2 * id + 1, v.rel)])
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Project events onto a feature space. Lexemes without any in-space event
/// get no vector.
pub fn vectorize(
    events: &EventBag,
    space: &FeatureSpace,
    occurrences: &BTreeMap<String, u64>,
) -> Result<BTreeMap<String, SparseVector>, FeatureError> {
    let mut vectors = BTreeMap::new();
    for (lexeme, features) in &events.counts {
        let occ = occurrences.get(lexeme).copied().unwrap_or(0);
        if occ == 0 {
            return Err(FeatureError::NoOccurrences(lexeme.clone()));
        }

        let mut values = BTreeMap::new();
        for ((ftype, instance), &raw) in features {
            let Some(id) = space.id_of(ftype, instance) else {
                continue;
            };
            if raw > occ {
                return Err(FeatureError::CountExceedsOccurrences {
                    lexeme: lexeme.clone(),
                    raw,
                    occurrences: occ,
                });
            }
            values.insert(
                id,
                FeatureValue {
                    raw,
                    rel: raw as f64 / occ as f64,
                },
            );
        }

        if !values.is_empty() {
            vectors.insert(
                lexeme.clone(),
                SparseVector {
                    lexeme: lexeme.clone(),
                    values,
                    occurrences: occ,
                },
            );
        }
    }
    Ok(vectors)
}

/// Dimensions ordered by gain ratio, best first.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRanking {
    pub order: Vec<usize>,
    /// Score per dimension, indexed by dimension.
    pub scores: Vec<f64>,
}

fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Gain ratio of a binary feature against a binary label, from the
/// contingency counts. A feature with zero split information scores 0.
pub fn gain_ratio(total: usize, positives: usize, present: usize, present_positive: usize) -> f64 {
    let n = total as f64;
    let label_entropy = entropy(&[positives as f64, (total - positives) as f64]);

    let absent = total - present;
    let absent_positive = positives - present_positive;
    let present_negative = present - present_positive;
    let absent_negative = absent - absent_positive;

    let conditional = (present as f64 / n)
        * entropy(&[present_positive as f64, present_negative as f64])
        + (absent as f64 / n) * entropy(&[absent_positive as f64, absent_negative as f64]);

    let split_info = entropy(&[present as f64, absent as f64]);
    if split_info <= 0.0 {
        return 0.0;
    }
    ((label_entropy - conditional) / split_info).max(0.0)
}

/// Rank every value dimension `0..n_dims` by the gain ratio of its binarised
/// value (non-zero raw count vs zero) against `labels`.
pub fn rank_features(
    vectors: &[(&SparseVector, bool)],
    n_dims: usize,
) -> Result<FeatureRanking, FeatureError> {
    let total = vectors.len();
    let positives = vectors.iter().filter(|(_, l)| *l).count();
    if total < 2 || positives == 0 || positives == total {
        return Err(FeatureError::DegenerateLabels);
    }

    let n_ids = n_dims.div_ceil(2);
    let mut present = vec![0usize; n_ids];
    let mut present_positive = vec![0usize; n_ids];
    for (vector, label) in vectors {
        for (&id, value) in &vector.values {
            if id < n_ids && value.raw > 0 {
                present[id] += 1;
                if *label {
                    present_positive[id] += 1;
                }
            }
        }
    }

    let scores: Vec<f64> = (0..n_dims)
        .map(|dim| gain_ratio(total, positives, present[dim / 2], present_positive[dim / 2]))
        .collect();

    let mut order: Vec<usize> = (0..n_dims).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    Ok(FeatureRanking { order, scores })
}

/// The first `min(n, |ranking|)` dimensions.
pub fn take_top(ranking: &FeatureRanking, n: usize) -> Vec<usize> {
    ranking.order.iter().take(n).copied().collect()
}

/// A feature space together with the vectors projected onto it.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub space: FeatureSpace,
    pub vectors: BTreeMap<String, SparseVector>,
}

impl FeatureMatrix {
    pub fn vector(&self, lexeme: &str) -> Option<&SparseVector> {
        self.vectors.get(lexeme)
    }

    /// Write the sparse matrix file: `#FEATURE id<TAB>ftype<TAB>instance`
    /// header lines followed by `lexeme<TAB>id:raw:rel ...` data lines.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "#SPACE\t{}\t{}\t{}",
            self.space.population, self.space.per_type_cap, self.space.total_cap
        )?;
        for (id, f) in self.space.instances.iter().enumerate() {
            writeln!(
                w,
                "#FEATURE {id}\t{}\t{}\t{}\t{}",
                f.ftype, f.instance, f.support, f.frequency
            )?;
        }
        for (lexeme, vector) in &self.vectors {
            write!(w, "{lexeme}\t")?;
            let mut first = true;
            for (id, v) in &vector.values {
                if !first {
                    w.write_all(b" ")?;
                }
                first = false;
                write!(w, "{id}:{}:{}", v.raw, v.rel)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<FeatureMatrix, FeatureError> {
        let fmt_err = |line: usize, message: &str| FeatureError::Format {
            line,
            message: message.to_owned(),
        };

        let mut population = 0;
        let mut per_type_cap = DEFAULT_PER_TYPE_CAP;
        let mut total_cap = DEFAULT_TOTAL_CAP;
        let mut instances = Vec::new();
        let mut vectors = BTreeMap::new();

        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#SPACE\t") {
                let parts: Vec<&str> = rest.split('\t').collect();
                if parts.len() != 3 {
                    return Err(fmt_err(lineno, "expected 3 fields after #SPACE"));
                }
                let num = |s: &str| s.parse::<usize>().map_err(|_| fmt_err(lineno, "bad number"));
                population = num(parts[0])?;
                per_type_cap = num(parts[1])?;
                total_cap = num(parts[2])?;
            } else if let Some(rest) = line.strip_prefix("#FEATURE ") {
                let parts: Vec<&str> = rest.split('\t').collect();
                if parts.len() < 3 {
                    return Err(fmt_err(lineno, "expected id, ftype and instance"));
                }
                let id: usize = parts[0].parse().map_err(|_| fmt_err(lineno, "bad feature id"))?;
                if id != instances.len() {
                    return Err(fmt_err(lineno, "feature ids must be dense and ordered"));
                }
                let support = parts.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
                let frequency = parts.get(4).and_then(|s| s.parse().ok()).unwrap_or(0);
                instances.push(FeatureInstance {
                    ftype: parts[1].to_owned(),
                    instance: parts[2].to_owned(),
                    support,
                    frequency,
                });
            } else if line.starts_with('#') {
                continue;
            } else {
                let (lexeme, data) = line
                    .split_once('\t')
                    .ok_or_else(|| fmt_err(lineno, "expected lexeme<TAB>values"))?;
                let mut values = BTreeMap::new();
                let mut occurrences = 0;
                for cell in data.split_whitespace() {
                    let mut parts = cell.split(':');
                    let (Some(id), Some(raw), Some(rel), None) =
                        (parts.next(), parts.next(), parts.next(), parts.next())
                    else {
                        return Err(fmt_err(lineno, "expected id:raw:rel"));
                    };
                    let id: usize = id.parse().map_err(|_| fmt_err(lineno, "bad feature id"))?;
                    if id >= instances.len() {
                        return Err(fmt_err(lineno, "feature id outside the declared space"));
                    }
                    let raw: u64 = raw.parse().map_err(|_| fmt_err(lineno, "bad raw count"))?;
                    let rel: f64 = rel.parse().map_err(|_| fmt_err(lineno, "bad relative value"))?;
                    if occurrences == 0 && rel > 0.0 {
                        occurrences = (raw as f64 / rel).round() as u64;
                    }
                    values.insert(id, FeatureValue { raw, rel });
                }
                vectors.insert(
                    lexeme.to_owned(),
                    SparseVector {
                        lexeme: lexeme.to_owned(),
                        values,
                        occurrences,
                    },
                );
            }
        }

        Ok(FeatureMatrix {
            space: FeatureSpace::from_instances(instances, population, per_type_cap, total_cap),
            vectors,
        })
    }
}
