use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use deeplex::featurespace::{DEFAULT_PER_TYPE_CAP, DEFAULT_TOTAL_CAP};
use deeplex::knn::{TrainConfig, DEFAULT_K};
use deeplex::morph::{default_prefixes, NgramConfig};
use deeplex::syntax::DEFAULT_MAX_SENTENCE_LEN;
use deeplex::{Method, Params};
use serde::{Deserialize, Serialize};

/// One experiment: method, inputs, hyperparameters and output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Option<Method>,
    pub seed: u64,
    pub out: Option<PathBuf>,

    pub lexicon: Option<PathBuf>,
    pub word_list: Option<PathBuf>,
    pub clusters: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub synsets: Option<PathBuf>,
    pub hypernyms: Option<PathBuf>,
    pub freqs: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub model: Option<PathBuf>,

    pub k: usize,
    pub top_n: usize,
    pub per_type_cap: usize,
    pub total_cap: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub min_freq: u64,
    pub sentinels: bool,
    pub n_folds: usize,
    /// Lexical types with fewer training entries are dropped.
    pub min_entries: usize,
    pub max_sentence_len: usize,
    pub prefixes: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: None,
            seed: 0,
            out: None,
            lexicon: None,
            word_list: None,
            clusters: None,
            corpus: None,
            synsets: None,
            hypernyms: None,
            freqs: None,
            targets: None,
            matrix: None,
            model: None,
            k: DEFAULT_K,
            top_n: deeplex::featurespace::DEFAULT_TOP_N,
            per_type_cap: DEFAULT_PER_TYPE_CAP,
            total_cap: DEFAULT_TOTAL_CAP,
            n_min: 1,
            n_max: 6,
            min_freq: 3,
            sentinels: false,
            n_folds: 10,
            min_entries: 10,
            max_sentence_len: DEFAULT_MAX_SENTENCE_LEN,
            prefixes: default_prefixes(),
        }
    }
}

impl ExperimentConfig {
    /// Layer a TOML file (if any), then `key=value` overrides, over the
    /// defaults.
    pub fn load(path: Option<&Path>, overrides: &[(String, toml::Value)]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let table: toml::Table = text.parse().with_context(|| format!("parsing config {}", p.display()))?;
                relative_to(table, p.parent().unwrap_or(Path::new(".")))
            }
            None => toml::Table::new(),
        };
        for (key, value) in overrides {
            table.insert(key.clone(), value.clone());
        }
        let config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .context("invalid configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            bail!("k must be positive");
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            bail!("need 1 <= n_min <= n_max, got {}..{}", self.n_min, self.n_max);
        }
        if self.per_type_cap == 0 || self.total_cap == 0 {
            bail!("feature caps must be positive");
        }
        if self.n_folds < 2 {
            bail!("n_folds must be at least 2");
        }
        Ok(())
    }

    pub fn method(&self) -> Result<Method> {
        self.method.context("no method configured (use --method)")
    }

    pub fn params(&self) -> Params {
        Params {
            ngram: NgramConfig {
                n_min: self.n_min,
                n_max: self.n_max,
                sentinels: self.sentinels,
                min_freq: self.min_freq,
                cap: self.total_cap,
            },
            per_type_cap: self.per_type_cap,
            total_cap: self.total_cap,
            train: TrainConfig {
                k: self.k,
                n_features: self.top_n,
            },
            prefixes: self.prefixes.clone(),
        }
    }
}

const PATH_KEYS: [&str; 11] = [
    "out", "lexicon", "word_list", "clusters", "corpus", "synsets", "hypernyms", "freqs", "targets", "matrix",
    "model",
];

/// Paths in a config file are relative to the file.
fn relative_to(mut table: toml::Table, base: &Path) -> toml::Table {
    for key in PATH_KEYS {
        if let Some(toml::Value::String(s)) = table.get_mut(key) {
            let p = Path::new(s.as_str());
            if p.is_relative() {
                *s = base.join(p).to_string_lossy().into_owned();
            }
        }
    }
    table
}

/// Parse a `key=value` override. Values that are not valid TOML are taken as
/// strings.
pub fn parse_override(raw: &str) -> Result<(String, toml::Value), String> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {raw:?}"))?;
    let key = key.trim().to_owned();
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_owned()));
    Ok((key, parsed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_experiment_settings() {
        let c = ExperimentConfig::default();
        assert_eq!(
            (c.k, c.top_n, c.per_type_cap, c.total_cap, c.n_min, c.n_max, c.min_freq, c.n_folds),
            (9, 100, 50, 3900, 1, 6, 3, 10)
        );
    }

    #[test]
    fn overrides_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "method = \"ngram\"\nk = 5\nlexicon = \"lex.tsv\"\n").unwrap();
        let c = ExperimentConfig::load(Some(&path), &[parse_override("k=3").unwrap()]).unwrap();
        assert_eq!(c.k, 3);
        assert_eq!(c.method, Some(Method::Ngram));
        assert_eq!(c.lexicon.unwrap(), dir.path().join("lex.tsv"));
    }

    #[test]
    fn bare_strings_and_unknown_keys() {
        assert_eq!(
            parse_override("method=syntax-tagged").unwrap().1,
            toml::Value::String("syntax-tagged".into())
        );
        assert!(ExperimentConfig::load(None, &[parse_override("kk=1").unwrap()]).is_err());
        assert!(ExperimentConfig::load(None, &[parse_override("k=0").unwrap()]).is_err());
    }
}
