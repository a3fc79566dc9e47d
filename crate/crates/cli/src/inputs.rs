use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use deeplex::morph::ClusterLexicon;
use deeplex::ontology::Ontology;
use deeplex::syntax::{parse_corpus, Level};
use deeplex::{FeatureMatrix, Method, Resources, SeedLexicon, TreebankFreqs, WordClass};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Marks failures in loading or validating inputs; these exit with code 2.
#[derive(Debug)]
pub struct InvalidInput;

impl fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid input")
    }
}

impl std::error::Error for InvalidInput {}

#[derive(Clone, Debug, Serialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads every input once, hashing it for the run manifest.
#[derive(Default)]
pub struct Loader {
    pub records: BTreeMap<String, InputRecord>,
}

impl Loader {
    fn bytes(&mut self, name: &str, path: Option<&Path>) -> Result<Vec<u8>> {
        let path = path
            .with_context(|| format!("no {name} configured"))
            .context(InvalidInput)?;
        let data = std::fs::read(path)
            .with_context(|| format!("reading {name} {}", path.display()))
            .context(InvalidInput)?;
        self.records.insert(
            name.to_owned(),
            InputRecord {
                path: path.to_owned(),
                sha256: sha256_hex(&data),
            },
        );
        Ok(data)
    }

    /// The seed lexicon restricted to types with at least `min_entries`
    /// entries.
    pub fn lexicon(&mut self, config: &ExperimentConfig) -> Result<SeedLexicon> {
        let data = self.bytes("lexicon", config.lexicon.as_deref())?;
        let full = SeedLexicon::read(data.as_slice())
            .context("parsing lexicon")
            .context(InvalidInput)?;
        let inventory = full.filter_inventory(config.min_entries);
        if inventory.is_empty() {
            return Err(anyhow::anyhow!(
                "no lexical type has {} or more entries",
                config.min_entries
            ))
            .context(InvalidInput);
        }
        let lexicon = full.restrict_to(&inventory);
        log::info!(
            "lexicon: {} entries, {} of {} types kept",
            lexicon.len(),
            inventory.len(),
            full.inventory().count()
        );
        Ok(lexicon)
    }

    /// Load the resources `method` uses.
    pub fn resources(&mut self, config: &ExperimentConfig, method: Method) -> Result<Resources> {
        let mut res = Resources::default();
        match method {
            Method::Ngram => {
                if config.word_list.is_some() {
                    let data = self.bytes("word_list", config.word_list.as_deref())?;
                    let text = String::from_utf8(data).context("word list is not UTF-8").context(InvalidInput)?;
                    res.word_list = Some(
                        text.lines()
                            .filter_map(deeplex::lexicon::normalize_lexeme)
                            .collect(),
                    );
                }
            }
            Method::Deriv => {
                let data = self.bytes("clusters", config.clusters.as_deref())?;
                res.clusters = Some(
                    ClusterLexicon::read(data.as_slice())
                        .context("parsing clusters")
                        .context(InvalidInput)?,
                );
            }
            Method::SyntaxTagged | Method::SyntaxChunked | Method::SyntaxParsed => {
                let level: Level = method.level().expect("syntax method");
                let data = self.bytes("corpus", config.corpus.as_deref())?;
                let corpus = parse_corpus(data.as_slice(), level, config.max_sentence_len)
                    .context("parsing corpus")
                    .context(InvalidInput)?;
                if corpus.skipped > 0 {
                    log::warn!("{} over-long sentences skipped", corpus.skipped);
                }
                res.corpus = Some(corpus);
            }
            Method::Ontology => {
                let synsets = self.bytes("synsets", config.synsets.as_deref())?;
                let edges = self.bytes("hypernyms", config.hypernyms.as_deref())?;
                res.ontology = Some(
                    Ontology::read(synsets.as_slice(), edges.as_slice())
                        .context("parsing ontology")
                        .context(InvalidInput)?,
                );
            }
            Method::Baseline => {}
        }
        res.check(method).context(InvalidInput)?;
        Ok(res)
    }

    pub fn freqs(&mut self, config: &ExperimentConfig, gold: &SeedLexicon) -> Result<Option<TreebankFreqs>> {
        if config.freqs.is_none() {
            return Ok(None);
        }
        let data = self.bytes("freqs", config.freqs.as_deref())?;
        let freqs = TreebankFreqs::read(data.as_slice(), gold)
            .context("parsing treebank frequencies")
            .context(InvalidInput)?;
        Ok(Some(freqs))
    }

    /// Prediction targets: `lexeme<TAB>word_class` lines.
    pub fn targets(&mut self, config: &ExperimentConfig) -> Result<BTreeMap<String, BTreeSet<WordClass>>> {
        if config.targets.is_none() {
            return Ok(BTreeMap::new());
        }
        let data = self.bytes("targets", config.targets.as_deref())?;
        parse_targets(&data).context(InvalidInput)
    }

    pub fn matrix(&mut self, config: &ExperimentConfig) -> Result<FeatureMatrix> {
        let data = self.bytes("matrix", config.matrix.as_deref())?;
        FeatureMatrix::read(data.as_slice())
            .context("parsing feature matrix")
            .context(InvalidInput)
    }

    pub fn model(&mut self, config: &ExperimentConfig) -> Result<deeplex::ClassifierSuite> {
        let data = self.bytes("model", config.model.as_deref())?;
        deeplex::ClassifierSuite::read(data.as_slice())
            .context("parsing model")
            .context(InvalidInput)
    }
}

fn parse_targets(data: &[u8]) -> Result<BTreeMap<String, BTreeSet<WordClass>>> {
    let text = std::str::from_utf8(data).context("targets file is not UTF-8")?;
    let mut targets: BTreeMap<String, BTreeSet<WordClass>> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((lexeme, class)) = line.split_once('\t') else {
            bail!("targets line {}: expected lexeme<TAB>word_class", idx + 1);
        };
        let lexeme = deeplex::lexicon::normalize_lexeme(lexeme)
            .with_context(|| format!("targets line {}: bad lexeme {lexeme:?}", idx + 1))?;
        let class: WordClass = class
            .trim()
            .parse()
            .with_context(|| format!("targets line {}", idx + 1))?;
        targets.entry(lexeme).or_default().insert(class);
    }
    Ok(targets)
}
