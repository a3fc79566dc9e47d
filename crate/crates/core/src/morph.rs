//! Morphology-based features: character n-grams over word lists and
//! derivational transformations over a cluster lexicon.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, BufRead};

use thiserror::Error;

use crate::featurespace::{EventBag, FeatureInstance, FeatureSpace};
use crate::lexicon::{normalize_lexeme, UnknownWordClass, WordClass};

pub const NGRAM_FTYPE: &str = "ngram";
pub const DERIV_FTYPE: &str = "deriv";

pub const DEFAULT_PREFIXES: [&str; 8] = ["un", "re", "de", "dis", "anti", "non", "in", "im"];

const START: char = '^';
const END: char = '$';

#[derive(Debug, Error)]
pub enum MorphError {
    #[error("cannot take n-grams of an empty lemma")]
    EmptyLemma,

    #[error("invalid n-gram range {n_min}..={n_max}")]
    InvalidRange { n_min: usize, n_max: usize },

    #[error("line {line}: malformed cluster member {member:?}")]
    MalformedMember { line: usize, member: String },

    #[error("line {line}: {source}")]
    WordClass {
        line: usize,
        #[source]
        source: UnknownWordClass,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// All contiguous substrings of length `n_min..=n_max`, with multiplicity.
/// With `sentinels`, the lemma is wrapped in `^` and `$` first.
pub fn char_ngrams(
    lemma: &str,
    n_min: usize,
    n_max: usize,
    sentinels: bool,
) -> Result<BTreeMap<String, usize>, MorphError> {
    if n_min == 0 || n_min > n_max {
        return Err(MorphError::InvalidRange { n_min, n_max });
    }
    if lemma.is_empty() {
        return Err(MorphError::EmptyLemma);
    }

    let mut chars: Vec<char> = Vec::with_capacity(lemma.len() + 2);
    if sentinels {
        chars.push(START);
    }
    chars.extend(lemma.chars());
    if sentinels {
        chars.push(END);
    }

    let mut grams = BTreeMap::new();
    for n in n_min..=n_max.min(chars.len()) {
        for window in chars.windows(n) {
            *grams.entry(window.iter().collect::<String>()).or_insert(0) += 1;
        }
    }
    Ok(grams)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NgramConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub sentinels: bool,
    pub min_freq: u64,
    pub cap: usize,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig {
            n_min: 1,
            n_max: 6,
            sentinels: false,
            min_freq: 3,
            cap: 3900,
        }
    }
}

/// Build the character n-gram space over a word list:
///
/// 1. count every n-gram over all lemmas;
/// 2. drop n-grams with frequency below `min_freq`;
/// 3. drop n-grams whose frequency equals that of a longer surviving n-gram
///    containing them, visiting lengths longest first;
/// 4. keep the `cap` n-grams of highest saturation.
pub fn build_ngram_space(words: &[String], config: &NgramConfig) -> Result<FeatureSpace, MorphError> {
    let mut frequency: HashMap<String, u64> = HashMap::new();
    let mut support: HashMap<String, usize> = HashMap::new();
    let mut population = 0;
    for word in words.iter().filter(|w| !w.is_empty()) {
        population += 1;
        for (gram, n) in char_ngrams(word, config.n_min, config.n_max, config.sentinels)? {
            *frequency.entry(gram.clone()).or_insert(0) += n as u64;
            *support.entry(gram).or_insert(0) += 1;
        }
    }

    let mut frequent: Vec<(&String, u64)> = frequency
        .iter()
        .filter(|&(_, &f)| f >= config.min_freq)
        .map(|(g, &f)| (g, f))
        .collect();
    frequent.sort_by(|(a, _), (b, _)| {
        b.chars()
            .count()
            .cmp(&a.chars().count())
            .then_with(|| a.cmp(b))
    });

    // Frequencies of surviving n-grams that contain a given string.
    let mut covering: HashMap<String, BTreeSet<u64>> = HashMap::new();
    let mut survivors = Vec::new();
    for (gram, freq) in frequent {
        if covering.get(gram).is_some_and(|fs| fs.contains(&freq)) {
            continue;
        }
        let chars: Vec<char> = gram.chars().collect();
        for len in 1..chars.len() {
            for window in chars.windows(len) {
                covering
                    .entry(window.iter().collect())
                    .or_default()
                    .insert(freq);
            }
        }
        survivors.push(FeatureInstance {
            ftype: NGRAM_FTYPE.to_owned(),
            instance: gram.clone(),
            support: support[gram],
            frequency: freq,
        });
    }

    Ok(FeatureSpace::from_candidates(
        survivors,
        population,
        config.cap,
        config.cap,
    ))
}

/// N-gram events for a set of lemmas. A lemma's occurrence count is the total
/// number of n-grams it yields, so relative values are shares of the lemma's
/// n-gram multiset.
pub fn ngram_events<'a, I>(lemmas: I, config: &NgramConfig) -> Result<EventBag, MorphError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut bag = EventBag::new();
    let distinct: BTreeSet<&str> = lemmas.into_iter().filter(|l| !l.is_empty()).collect();
    for lemma in distinct {
        let grams = char_ngrams(lemma, config.n_min, config.n_max, config.sentinels)?;
        let total: usize = grams.values().sum();
        for (gram, n) in grams {
            bag.add_n(lemma, NGRAM_FTYPE, &gram, n as u64);
        }
        bag.add_occurrences(lemma, total as u64);
    }
    Ok(bag)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AffixSite {
    Prefix,
    Suffix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EditAction {
    Remove,
    Add,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EditOp {
    pub site: AffixSite,
    pub action: EditAction,
    pub affix: String,
}

impl EditOp {
    fn new(site: AffixSite, action: EditAction, affix: &str) -> Self {
        EditOp {
            site,
            action,
            affix: affix.to_owned(),
        }
    }

    fn mirrored(&self) -> EditOp {
        EditOp {
            site: self.site,
            action: match self.action {
                EditAction::Add => EditAction::Remove,
                EditAction::Remove => EditAction::Add,
            },
            affix: self.affix.clone(),
        }
    }
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.action {
            EditAction::Add => '+',
            EditAction::Remove => '-',
        };
        let marker = match self.site {
            AffixSite::Prefix => START,
            AffixSite::Suffix => END,
        };
        write!(f, "{sign}{}{marker}", self.affix)
    }
}

/// Affix rewrite from one (lemma, class) pair onto a sister lexeme.
///
/// Ops are kept in canonical order: removals before additions, prefix
/// before suffix. Rendered as e.g. `N -ment$ -> N +r$`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transformation {
    pub src_class: WordClass,
    pub tgt_class: WordClass,
    pub ops: Vec<EditOp>,
}

impl Transformation {
    fn canonical(src_class: WordClass, tgt_class: WordClass, mut ops: Vec<EditOp>) -> Self {
        ops.sort_by_key(|op| (op.action, op.site));
        Transformation {
            src_class,
            tgt_class,
            ops,
        }
    }

    /// Rewrite `source` with the edit ops. `None` if a removed affix is not
    /// present.
    pub fn apply(&self, source: &str) -> Option<String> {
        let mut word = source.to_owned();
        for op in &self.ops {
            word = match (op.action, op.site) {
                (EditAction::Remove, AffixSite::Prefix) => word.strip_prefix(op.affix.as_str())?.to_owned(),
                (EditAction::Remove, AffixSite::Suffix) => word.strip_suffix(op.affix.as_str())?.to_owned(),
                (EditAction::Add, AffixSite::Prefix) => format!("{}{word}", op.affix),
                (EditAction::Add, AffixSite::Suffix) => format!("{word}{}", op.affix),
            };
        }
        Some(word)
    }

    /// The transformation mapping the target back onto the source.
    pub fn inverse(&self) -> Transformation {
        Self::canonical(
            self.tgt_class,
            self.src_class,
            self.ops.iter().map(EditOp::mirrored).collect(),
        )
    }
}

impl fmt::Display for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.src_class.short_label())?;
        for op in self.ops.iter().filter(|op| op.action == EditAction::Remove) {
            write!(f, " {op}")?;
        }
        write!(f, " -> {}", self.tgt_class.short_label())?;
        for op in self.ops.iter().filter(|op| op.action == EditAction::Add) {
            write!(f, " {op}")?;
        }
        Ok(())
    }
}

/// Align two lemmas on their longest common contiguous stem and return the
/// prefix/suffix edits rewriting `a` into `b`. `None` when the lemmas share
/// no character.
///
/// When several stem positions tie, the choice depends only on the unordered
/// pair of lemmas, so `align_edit_ops(b, a)` is the inverse of
/// `align_edit_ops(a, b)`.
pub fn align_edit_ops(a: (&str, WordClass), b: (&str, WordClass)) -> Option<Transformation> {
    let ac: Vec<char> = a.0.chars().collect();
    let bc: Vec<char> = b.0.chars().collect();

    // Longest common substring ending at (i, j).
    let mut best = 0;
    let mut ends: Vec<(usize, usize)> = Vec::new();
    let mut prev = vec![0usize; bc.len() + 1];
    let mut cur = vec![0usize; bc.len() + 1];
    for i in 1..=ac.len() {
        for j in 1..=bc.len() {
            cur[j] = if ac[i - 1] == bc[j - 1] { prev[j - 1] + 1 } else { 0 };
            if cur[j] > best {
                best = cur[j];
                ends.clear();
            }
            if cur[j] == best && best > 0 {
                ends.push((i, j));
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    if best == 0 {
        return None;
    }

    let text = |cs: &[char]| cs.iter().collect::<String>();
    let split = |(i, j): (usize, usize)| {
        let (sa, sb) = (i - best, j - best);
        (
            (sa, sb),
            (text(&ac[..sa]), text(&ac[i..])),
            (text(&bc[..sb]), text(&bc[j..])),
        )
    };
    let unordered = |x: &String, y: &String| {
        if x <= y {
            (x.clone(), y.clone())
        } else {
            (y.clone(), x.clone())
        }
    };

    let ((_, (a_pre, a_suf), (b_pre, b_suf)), _) = ends
        .into_iter()
        .map(split)
        .map(|parts| {
            let ((sa, sb), (ap, asuf), (bp, bsuf)) = &parts;
            let key = (
                sa + sb,
                sa.abs_diff(*sb),
                unordered(ap, bp),
                unordered(asuf, bsuf),
            );
            (parts.clone(), key)
        })
        .min_by(|(_, ka), (_, kb)| ka.cmp(kb))?;

    let mut ops = Vec::new();
    if !a_pre.is_empty() {
        ops.push(EditOp::new(AffixSite::Prefix, EditAction::Remove, &a_pre));
    }
    if !a_suf.is_empty() {
        ops.push(EditOp::new(AffixSite::Suffix, EditAction::Remove, &a_suf));
    }
    if !b_pre.is_empty() {
        ops.push(EditOp::new(AffixSite::Prefix, EditAction::Add, &b_pre));
    }
    if !b_suf.is_empty() {
        ops.push(EditOp::new(AffixSite::Suffix, EditAction::Add, &b_suf));
    }

    Some(Transformation::canonical(a.1, b.1, ops))
}

/// Clusters of derivationally related (lemma, word class) pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterLexicon {
    clusters: Vec<Vec<(String, WordClass)>>,
    by_lemma: BTreeMap<String, Vec<usize>>,
}

impl ClusterLexicon {
    pub fn new(clusters: Vec<Vec<(String, WordClass)>>) -> Self {
        let mut by_lemma: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let clusters: Vec<_> = clusters.into_iter().filter(|c| !c.is_empty()).collect();
        for (idx, cluster) in clusters.iter().enumerate() {
            for (lemma, _) in cluster {
                let ids = by_lemma.entry(lemma.clone()).or_default();
                if ids.last() != Some(&idx) {
                    ids.push(idx);
                }
            }
        }
        ClusterLexicon { clusters, by_lemma }
    }

    /// Read one cluster per line, members written `lemma_C` with C one of
    /// `N`, `V`, `A`, `R`.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, MorphError> {
        let mut clusters = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cluster = Vec::new();
            for member in line.split_whitespace() {
                let malformed = || MorphError::MalformedMember {
                    line: lineno,
                    member: member.to_owned(),
                };
                let (lemma, code) = member.rsplit_once('_').ok_or_else(malformed)?;
                let lemma = normalize_lexeme(lemma).ok_or_else(malformed)?;
                let class = WordClass::from_cluster_code(code)
                    .map_err(|source| MorphError::WordClass { line: lineno, source })?;
                if !cluster.contains(&(lemma.clone(), class)) {
                    cluster.push((lemma, class));
                }
            }
            clusters.push(cluster);
        }
        Ok(Self::new(clusters))
    }

    pub fn parse(text: &str) -> Result<Self, MorphError> {
        Self::read(text.as_bytes())
    }

    pub fn clusters(&self) -> &[Vec<(String, WordClass)>] {
        &self.clusters
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.by_lemma.contains_key(lemma)
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Find the cluster lemma standing in for `lexeme`: the lexeme itself,
    /// else its dehyphenated form, else that form with a known prefix
    /// stripped (longest prefix first), else the closest member by edit
    /// distance (ties to the lexicographically smallest).
    pub fn resolve(&self, lexeme: &str, prefixes: &[String]) -> Option<String> {
        if self.is_empty() {
            return None;
        }
        if self.contains(lexeme) {
            return Some(lexeme.to_owned());
        }

        let dehyphenated: String = lexeme.chars().filter(|&c| c != '-').collect();
        if self.contains(&dehyphenated) {
            return Some(dehyphenated);
        }

        let mut by_length: Vec<&String> = prefixes.iter().collect();
        by_length.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b)));
        for prefix in by_length {
            if let Some(rest) = dehyphenated.strip_prefix(prefix.as_str()) {
                if !rest.is_empty() && self.contains(rest) {
                    return Some(rest.to_owned());
                }
            }
        }

        let mut best: Option<(usize, &String)> = None;
        for lemma in self.by_lemma.keys() {
            let d = strsim::levenshtein(lexeme, lemma);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, lemma));
            }
        }
        best.map(|(_, lemma)| lemma.clone())
    }
}

/// Derivational transformations of `lexeme` against every sister lexeme in
/// its cluster(s). Source members are restricted to `word_class_hint` when
/// any member matches it.
pub fn derivational_features(
    lexeme: &str,
    clusters: &ClusterLexicon,
    word_class_hint: &BTreeSet<WordClass>,
    prefixes: &[String],
) -> Vec<Transformation> {
    let Some(lemma) = clusters.resolve(lexeme, prefixes) else {
        return Vec::new();
    };
    let ids = &clusters.by_lemma[&lemma];

    let own_classes: BTreeSet<WordClass> = ids
        .iter()
        .flat_map(|&i| clusters.clusters[i].iter())
        .filter(|(l, _)| *l == lemma)
        .map(|&(_, c)| c)
        .collect();
    let hinted: BTreeSet<WordClass> = own_classes.intersection(word_class_hint).copied().collect();
    let sources = if hinted.is_empty() { own_classes } else { hinted };

    let mut out = Vec::new();
    for &idx in ids {
        let cluster = &clusters.clusters[idx];
        for (src_lemma, src_class) in cluster {
            if *src_lemma != lemma || !sources.contains(src_class) {
                continue;
            }
            for (sister, sister_class) in cluster {
                if sister == src_lemma && sister_class == src_class {
                    continue;
                }
                if let Some(t) = align_edit_ops((src_lemma, *src_class), (sister, *sister_class)) {
                    out.push(t);
                }
            }
        }
    }
    out
}

/// Derivational events for each lexeme; a lexeme's occurrence count is the
/// number of transformations it yields.
pub fn derivational_events(
    lexemes: &BTreeMap<String, BTreeSet<WordClass>>,
    clusters: &ClusterLexicon,
    prefixes: &[String],
) -> EventBag {
    let mut bag = EventBag::new();
    for (lexeme, hint) in lexemes {
        let transformations = derivational_features(lexeme, clusters, hint, prefixes);
        if transformations.is_empty() {
            continue;
        }
        for t in &transformations {
            bag.add(lexeme, DERIV_FTYPE, &t.to_string());
        }
        bag.add_occurrences(lexeme, transformations.len() as u64);
    }
    bag
}

pub fn default_prefixes() -> Vec<String> {
    DEFAULT_PREFIXES.iter().map(|s| s.to_string()).collect()
}
