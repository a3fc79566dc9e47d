//! `deeplex`: batch driver for lexical acquisition experiments.

mod config;
mod inputs;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use deeplex::eval::{cross_validate, EvaluationReport, Predictor};
use deeplex::pipeline::{build_method, extract_matrix, OntologyPredictor, SuitePredictor};
use deeplex::{ClassifierSuite, LexicalEntry, LexicalType, Method, SeedLexicon};
use serde::Serialize;

use config::{parse_override, ExperimentConfig};
use inputs::{sha256_hex, InputRecord, InvalidInput, Loader};

#[derive(Parser, Debug)]
#[command(name = "deeplex", version, about = "Deep lexical acquisition experiments")]
struct Cli {
    /// TOML file of experiment settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    method: Option<String>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Override a setting, e.g. `--set lexicon=lex.tsv --set k=5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true, value_parser = parse_override)]
    overrides: Vec<(String, toml::Value)>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract the feature matrix of a feature-based method.
    Extract,
    /// Train a classifier suite on an extracted matrix.
    Train {
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Predict entries for `lexeme<TAB>word_class` targets.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        targets: Option<PathBuf>,
    },
    /// Stratified cross-validation over the seed lexicon.
    Xval,
    /// Print report files as one table.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

impl Cli {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        let mut flag = |key: &str, value: toml::Value| overrides.push((key.to_owned(), value));
        if let Some(seed) = self.seed {
            flag("seed", toml::Value::Integer(seed as i64));
        }
        if let Some(out) = &self.out {
            flag("out", path_value(out));
        }
        if let Some(method) = &self.method {
            flag("method", toml::Value::String(method.clone()));
        }
        match &self.command {
            Command::Train { matrix: Some(p) } => flag("matrix", path_value(p)),
            Command::Predict { model, matrix, targets } => {
                for (key, p) in [("model", model), ("matrix", matrix), ("targets", targets)] {
                    if let Some(p) = p {
                        flag(key, path_value(p));
                    }
                }
            }
            _ => {}
        }
        ExperimentConfig::load(self.config.as_deref(), &overrides).context(InvalidInput)
    }
}

fn path_value(p: &Path) -> toml::Value {
    toml::Value::String(p.to_string_lossy().into_owned())
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    inputs: &'a BTreeMap<String, InputRecord>,
    outputs: BTreeMap<&'a str, String>,
    timestamp: u64,
}

const MANIFEST: &str = "manifest.json";

/// Write `files` and the manifest into the output directory. Each file goes
/// through a temporary file and an atomic rename; the manifest comes last.
fn commit(
    config: &ExperimentConfig,
    command: &'static str,
    loader: &Loader,
    files: &[(&str, Vec<u8>)],
) -> Result<PathBuf> {
    let dir = config
        .out
        .clone()
        .context("no output directory configured (use --out)")
        .context(InvalidInput)?;
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let manifest = RunManifest {
        tool: "deeplex",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        inputs: &loader.records,
        outputs: files.iter().map(|(name, data)| (*name, sha256_hex(data))).collect(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let mut manifest_json = serde_json::to_vec_pretty(&manifest)?;
    manifest_json.push(b'\n');

    let mut staged = Vec::new();
    for (name, data) in files.iter().map(|(n, d)| (*n, d.as_slice())).chain([(MANIFEST, manifest_json.as_slice())]) {
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        tmp.write_all(data)?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, target) in staged {
        tmp.persist(&target)
            .with_context(|| format!("writing {}", target.display()))?;
    }
    Ok(dir)
}

fn require_features(method: Method) -> Result<()> {
    if !method.uses_features() {
        return Err(anyhow::anyhow!("method {method} has no feature matrix")).context(InvalidInput);
    }
    Ok(())
}

fn cmd_extract(config: &ExperimentConfig) -> Result<()> {
    let method = config.method().context(InvalidInput)?;
    require_features(method)?;
    let mut loader = Loader::default();
    let lexicon = loader.lexicon(config)?;
    let resources = loader.resources(config, method)?;
    let targets = loader.targets(config)?;

    let matrix = extract_matrix(method, &lexicon, &targets, &resources, &config.params())?;
    let mut buf = Vec::new();
    matrix.write(&mut buf)?;
    let dir = commit(config, "extract", &loader, &[("matrix.tsv", buf)])?;
    eprintln!(
        "{} feature instances, {} vectors -> {}",
        matrix.space.len(),
        matrix.vectors.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_train(config: &ExperimentConfig) -> Result<()> {
    let method = config.method().context(InvalidInput)?;
    require_features(method)?;
    let mut loader = Loader::default();
    let lexicon = loader.lexicon(config)?;
    let matrix = loader.matrix(config)?;

    let inventory: BTreeSet<LexicalType> = lexicon.inventory().cloned().collect();
    let suite = ClassifierSuite::train(
        &matrix.vectors,
        matrix.space.n_dims(),
        &lexicon,
        &inventory,
        &config.params().train,
    )?
    .with_fingerprint(matrix.space.fingerprint());

    let mut buf = Vec::new();
    suite.write(&mut buf)?;
    let dir = commit(config, "train", &loader, &[("model.txt", buf)])?;
    eprintln!("{} classifiers -> {}", suite.classifiers.len(), dir.display());
    Ok(())
}

fn cmd_predict(config: &ExperimentConfig) -> Result<()> {
    let method = config.method().context(InvalidInput)?;
    let mut loader = Loader::default();
    if config.targets.is_none() {
        return Err(anyhow::anyhow!("no targets configured (use --targets)")).context(InvalidInput);
    }
    let targets = loader.targets(config)?;

    let entries: BTreeSet<LexicalEntry> = if method.uses_features() {
        let suite = loader.model(config)?;
        let matrix = loader.matrix(config)?;
        if suite.space_fingerprint != matrix.space.fingerprint() {
            return Err(anyhow::anyhow!(
                "model was trained on a different feature space than {}",
                config.matrix.as_deref().unwrap_or(Path::new("?")).display()
            ))
            .context(InvalidInput);
        }
        let predictor = SuitePredictor {
            suite,
            vectors: &matrix.vectors,
        };
        predict_all(&predictor, &targets)
    } else {
        let lexicon = loader.lexicon(config)?;
        match method {
            Method::Ontology => {
                let resources = loader.resources(config, method)?;
                let ontology = resources.ontology.expect("loaded for ontology");
                predict_all(&OntologyPredictor::new(&ontology, lexicon), &targets)
            }
            _ => predict_all(&lexicon.defaults(), &targets),
        }
    };

    let out = SeedLexicon::from_entries(entries)?;
    let dir = commit(config, "predict", &loader, &[("entries.tsv", out.to_tsv().into_bytes())])?;
    eprintln!("{} entries for {} targets -> {}", out.len(), targets.len(), dir.display());
    Ok(())
}

fn predict_all(
    predictor: &dyn Predictor,
    targets: &BTreeMap<String, BTreeSet<deeplex::WordClass>>,
) -> BTreeSet<LexicalEntry> {
    targets
        .iter()
        .flat_map(|(lexeme, classes)| predictor.predict(lexeme, classes))
        .collect()
}

fn cmd_xval(config: &ExperimentConfig) -> Result<()> {
    let method = config.method().context(InvalidInput)?;
    let mut loader = Loader::default();
    let lexicon = loader.lexicon(config)?;
    let resources = loader.resources(config, method)?;
    let freqs = loader.freqs(config, &lexicon)?;
    if config.out.is_none() {
        return Err(anyhow::anyhow!("no output directory configured (use --out)")).context(InvalidInput);
    }

    let runner = build_method(method, &lexicon, resources, &config.params())?;
    let report = cross_validate(runner.as_ref(), &lexicon, freqs.as_ref(), config.n_folds, config.seed)?;

    let files = [
        ("report.json", report.to_json()?.into_bytes()),
        ("report.txt", report.to_table().into_bytes()),
    ];
    let dir = commit(config, "xval", &loader, &files)?;
    if let Some(mean) = report.mean_row(method.name(), "all") {
        eprintln!(
            "{method}: P={:.4} R={:.4} F={:.4} -> {}",
            mean.precision,
            mean.recall,
            mean.fscore,
            dir.display()
        );
    }
    Ok(())
}

fn cmd_report(paths: &[PathBuf]) -> Result<()> {
    let mut rows = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .context(InvalidInput)?;
        let report = EvaluationReport::from_json(&text)
            .with_context(|| format!("parsing {}", path.display()))
            .context(InvalidInput)?;
        rows.extend(report.rows);
    }
    print!("{}", EvaluationReport::new(rows).to_table());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let config = cli.experiment()?;
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(anyhow::anyhow!("--jobs must be positive")).context(InvalidInput);
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match &cli.command {
        Command::Extract => cmd_extract(&config),
        Command::Train { .. } => cmd_train(&config),
        Command::Predict { .. } => cmd_predict(&config),
        Command::Xval => cmd_xval(&config),
        Command::Report { reports } => cmd_report(reports),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("deeplex: {err:#}");
            if err.downcast_ref::<InvalidInput>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
