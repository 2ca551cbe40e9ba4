//! The `topicmetrics` command line.
//!
//! Every subcommand reads files and writes files; the parsed arguments are
//! echoed into each artifact as its `run_config`. Exit codes: 0 success,
//! 1 usage error, 2 data or contract error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::classify::{evaluate, ClassifierSpec, EvalResult, ResultsFile};
use crate::coherence::{
    coherence_score, fit_model, sweep, CoherenceConfig, KRange, Measure, ModelSpec, SweepResult,
};
use crate::corpus::{
    build_doc_term_matrix, corpus_stats, load_corpus, parse_stopwords, Corpus, CorpusFormat,
    PreprocessOptions, Weighting,
};
use crate::embedding::{encode_emb1, load_embeddings, lsa_embed, reduce_dim, DEFAULT_LSA_DIM};
use crate::features::{
    combine_features, one_hot_topics, sentiment_features, FeatureKind, FeatureMatrix, Lexicon,
    SentimentSource,
};
use crate::report::{point_biserial, render_report, ComparisonRow, ReportFormat};
use crate::seed::derive_seed;
use crate::topics::{top_keywords, ModelFile, ModelKind, TopicModelResult};
use crate::{Error, Result};

#[derive(Debug, Parser, Serialize)]
#[command(name = "topicmetrics", version, about = "Topic vs. sentiment metrics for stance classification")]
pub struct Cli {
    /// Base seed; each stage derives its own seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Tokenize a corpus (JSONL or CSV) into a tokenized JSONL corpus.
    Prep(PrepArgs),
    /// Produce document embeddings in EMB1 format.
    Embed {
        #[command(subcommand)]
        method: EmbedMethod,
    },
    /// Fit topic models.
    Topics {
        #[command(subcommand)]
        action: TopicsAction,
    },
    /// Score topic coherence.
    Coherence {
        #[command(subcommand)]
        action: CoherenceAction,
    },
    /// Cross-validate a stance classifier on one feature set.
    Classify(ClassifyArgs),
    /// Render a comparison report from results files.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PrepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Stopword file (one token per line); defaults to the built-in English list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Skip Porter stemming.
    #[arg(long)]
    pub no_stem: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum EmbedMethod {
    /// Truncated-SVD embeddings of the TF-IDF matrix.
    Lsa {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Embedding dimension (capped by the matrix rank bound).
        #[arg(long, default_value_t = DEFAULT_LSA_DIM)]
        dim: usize,
    },
    /// Validate externally produced EMB1 embeddings against a corpus.
    Load {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Optionally reduce to this many dimensions with PCA.
        #[arg(long)]
        reduce_dim: Option<usize>,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct ModelOptions {
    /// Gibbs sweeps for LDA.
    #[arg(long, default_value_t = 1000)]
    pub lda_iterations: usize,
    /// LDA document-topic prior; defaults to 50/K.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// LDA topic-word prior.
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    /// Maximum multiplicative-update iterations for NMF.
    #[arg(long, default_value_t = 200)]
    pub nmf_iterations: usize,
    /// EMB1 embeddings for the cluster model; LSA embeddings are used if absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

impl ModelOptions {
    fn spec(&self, kind: ModelKind) -> ModelSpec {
        match ModelSpec::default_for(kind) {
            ModelSpec::Lda { .. } => {
                ModelSpec::Lda { alpha: self.alpha, beta: self.beta, iterations: self.lda_iterations }
            }
            ModelSpec::Nmf(mut p) => {
                p.iterations = self.nmf_iterations;
                ModelSpec::Nmf(p)
            }
            ModelSpec::Cluster => ModelSpec::Cluster,
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum TopicsAction {
    /// Fit one model at one K and write the model JSON.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_parser = parse::<ModelKind>)]
        model: ModelKind,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        top_n: usize,
        #[arg(long, default_value = "npmi", value_parser = parse::<Measure>)]
        measure: Measure,
        #[command(flatten)]
        options: ModelOptions,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum CoherenceAction {
    /// Fit every (model, K) configuration and write the sweep CSV.
    Sweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        k_min: usize,
        #[arg(long)]
        k_max: usize,
        #[arg(long, default_value_t = 1)]
        step: usize,
        #[arg(long, default_value = "npmi", value_parser = parse::<Measure>)]
        measure: Measure,
        #[arg(long, value_delimiter = ',', default_value = "lda,nmf,cluster", value_parser = parse::<ModelKind>)]
        models: Vec<ModelKind>,
        #[arg(long, default_value_t = 10)]
        top_n: usize,
        #[arg(long, default_value_t = 10)]
        window: usize,
        #[command(flatten)]
        options: ModelOptions,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    /// Tokenized corpus with stance labels.
    #[arg(long)]
    pub input: PathBuf,
    /// Topic model JSON (required for topic and combined features).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_parser = parse::<FeatureKind>)]
    pub features: FeatureKind,
    #[arg(long, default_value = "logistic", value_parser = parse::<ClassifierSpec>)]
    pub classifier: ClassifierSpec,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Fraction of documents used for training; the rest is held out.
    #[arg(long, default_value_t = 0.8)]
    pub train_ratio: f64,
    /// Sentiment lexicon (`token<TAB>polarity`); the corpus sentiment column is used if absent.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Dataset label carried into the results and the report.
    #[arg(long, default_value = "dataset")]
    pub dataset: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Results JSON files; one row per dataset needs topic, sentiment and combined results.
    #[arg(long, num_args = 1.., required = true)]
    pub results: Vec<PathBuf>,
    /// Sweep CSV for the coherence section.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    #[arg(long, default_value = "markdown", value_parser = parse::<ReportFormat>)]
    pub format: ReportFormat,
    #[arg(long)]
    pub output: PathBuf,
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parse `args` (including the program name) and run. Never panics on bad input.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let run_config = serde_json::to_value(cli).expect("arguments serialize");
    let seed = cli.seed;
    match &cli.command {
        Command::Prep(a) => prep(a, &run_config),
        Command::Embed { method } => embed(method, seed, &run_config),
        Command::Topics {
            action: TopicsAction::Fit { input, output, model, k, top_n, measure, options },
        } => {
            let corpus = read_tokenized(input)?;
            let embeddings =
                options.embeddings.as_deref().map(|p| load_embeddings(p, corpus.len())).transpose()?;
            let spec = options.spec(*model);
            let context = format!("model={model} k={k}");
            let fitted = fit_model(
                &spec,
                &corpus,
                *k,
                embeddings.as_ref(),
                derive_seed(seed, &format!("{model}:{k}")),
            )
            .map_err(|e| e.context(context.clone()))?;
            let config = CoherenceConfig { measure: *measure, top_n: *top_n, ..CoherenceConfig::default() };
            let keywords = top_keywords(&fitted, (*top_n).min(fitted.vocabulary.len()))?;
            let score = coherence_score(&keywords, &corpus, &config).map_err(|e| e.context(context))?;
            log::info!("{model} K={k}: {measure} coherence {score:.4}");
            let mut file = fitted.to_file();
            file.coherence = Some(score);
            file.run_config = Some(run_config);
            let json = serde_json::to_string(&file).expect("finite values serialize");
            write_atomic(output, format!("{json}\n").as_bytes())
        }
        Command::Coherence {
            action:
                CoherenceAction::Sweep {
                    input,
                    output,
                    k_min,
                    k_max,
                    step,
                    measure,
                    models,
                    top_n,
                    window,
                    options,
                },
        } => {
            let corpus = read_tokenized(input)?;
            let embeddings =
                options.embeddings.as_deref().map(|p| load_embeddings(p, corpus.len())).transpose()?;
            let specs: Vec<ModelSpec> = models.iter().map(|&m| options.spec(m)).collect();
            let config = CoherenceConfig {
                measure: *measure,
                top_n: *top_n,
                window: *window,
                ..CoherenceConfig::default()
            };
            let ks = KRange { min: *k_min, max: *k_max, step: *step };
            let result = sweep(&corpus, &specs, ks, &config, seed, embeddings.as_ref())?;
            let mut buf = Vec::new();
            result.write_csv(&mut buf, Some(&run_config)).map_err(|e| Error::io(output, e))?;
            write_atomic(output, &buf)
        }
        Command::Classify(a) => classify(a, seed, run_config),
        Command::Report(a) => report(a, &run_config),
    }
}

fn prep(a: &PrepArgs, run_config: &Value) -> Result<()> {
    let mut corpus = load_corpus(&a.input, CorpusFormat::from_path(&a.input))?;
    let mut options = PreprocessOptions { stem: !a.no_stem, ..PreprocessOptions::default() };
    if let Some(path) = &a.stopwords {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        options.stopwords = parse_stopwords(&text);
    }
    corpus.preprocess(&options);
    let stats = corpus_stats(&corpus)?;
    log::info!(
        "{} documents, {} tokens per document, {} terms",
        stats.n_docs,
        stats.display_avg_tokens(),
        corpus.vocabulary.len()
    );
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf, Some(run_config))?;
    write_atomic(&a.output, &buf)
}

fn embed(method: &EmbedMethod, seed: u64, run_config: &Value) -> Result<()> {
    let (emb, output) = match method {
        EmbedMethod::Lsa { input, output, dim } => {
            let corpus = read_tokenized(input)?;
            let tfidf = build_doc_term_matrix(&corpus, Weighting::Tfidf, 1)?;
            let dim = (*dim).min(tfidf.rows()).min(tfidf.cols());
            (lsa_embed(&tfidf, dim, derive_seed(seed, "lsa"))?, output)
        }
        EmbedMethod::Load { input, embeddings, output, reduce_dim: target } => {
            let corpus = load_corpus(input, CorpusFormat::from_path(input))?;
            let emb = load_embeddings(embeddings, corpus.len())?;
            let emb = match target {
                Some(t) => reduce_dim(&emb, *t, derive_seed(seed, "reduce"))?,
                None => emb,
            };
            (emb, output)
        }
    };
    write_atomic(output, &encode_emb1(&emb))?;
    let sidecar = sidecar_path(output);
    let json = serde_json::to_string_pretty(&serde_json::json!({ "run_config": run_config }))
        .expect("json serializes");
    write_atomic(&sidecar, format!("{json}\n").as_bytes())
}

/// `<output>.config.json`: EMB1 has no room for metadata.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

fn classify(a: &ClassifyArgs, seed: u64, run_config: Value) -> Result<()> {
    let corpus = read_tokenized(&a.input)?;
    let y = corpus.stances()?;
    let lexicon = a.lexicon.as_deref().map(Lexicon::load).transpose()?;
    let source = || match &lexicon {
        Some(lex) => SentimentSource::Lexicon(lex),
        None => SentimentSource::Column,
    };
    let topic_model = match &a.model {
        Some(path) => Some(read_model(path, corpus.len())?),
        None => None,
    };
    let topic = |what: &str| -> Result<FeatureMatrix> {
        let (model, _) = topic_model
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("{what} features need --model")))?;
        one_hot_topics(&model.assignments, model.k)
    };
    let x = match a.features {
        FeatureKind::Topic => topic("topic")?,
        FeatureKind::Sentiment => sentiment_features(&corpus, source())?,
        FeatureKind::Combined => {
            combine_features(&topic("combined")?, &sentiment_features(&corpus, source())?)?
        }
    };
    let label = format!("{}:{}", a.features, a.classifier);
    let result = evaluate(&x, &y, &a.classifier, a.train_ratio, a.folds, derive_seed(seed, "classify"))
        .map_err(|e| e.context(format!("features={} classifier={}", a.features, a.classifier)))?;
    log::info!(
        "{label}: CV F1 {:.4} ± {:.4}, held-out F1 {:.4}",
        result.cv.mean,
        result.cv.std,
        result.test_f1
    );
    let corr = sentiment_features(&corpus, source())
        .ok()
        .and_then(|s| point_biserial(&y, s.values.column(0).as_slice()?).ok());
    let results = ResultsFile {
        dataset: a.dataset.clone(),
        feature_kind: a.features,
        classifier: a.classifier.name().to_string(),
        folds: result.cv.folds,
        mean: result.cv.mean,
        std: result.cv.std,
        seed,
        test_f1: Some(result.test_f1),
        corr_stance_sentiment: corr,
        topic_coherence: topic_model.and_then(|(_, c)| c),
        run_config: Some(run_config),
    };
    let json = serde_json::to_string_pretty(&results).expect("finite values serialize");
    write_atomic(&a.output, format!("{json}\n").as_bytes())
}

fn report(a: &ReportArgs, run_config: &Value) -> Result<()> {
    // (dataset, classifier) -> feature kind -> results
    let mut cells: BTreeMap<(String, String), BTreeMap<String, ResultsFile>> = BTreeMap::new();
    for path in &a.results {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: ResultsFile = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("malformed results file {}: {e}", path.display())))?;
        cells
            .entry((r.dataset.clone(), r.classifier.clone()))
            .or_default()
            .insert(r.feature_kind.to_string(), r);
    }
    let mut rows = Vec::new();
    for ((dataset, classifier), by_kind) in &cells {
        let get = |kind: &str| -> Result<EvalResult> {
            let r = by_kind.get(kind).ok_or_else(|| {
                Error::InvalidInput(format!("{dataset} ({classifier}) has no {kind} results"))
            })?;
            Ok(EvalResult { folds: r.folds.clone(), mean: r.mean, std: r.std })
        };
        let corr = by_kind.values().find_map(|r| r.corr_stance_sentiment);
        let coherence = by_kind
            .values()
            .filter_map(|r| r.topic_coherence)
            .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))));
        let label = if cells.keys().filter(|(d, _)| d == dataset).count() > 1 {
            format!("{dataset} ({classifier})")
        } else {
            dataset.clone()
        };
        rows.push(ComparisonRow::new(
            label,
            &get("topic")?,
            &get("sentiment")?,
            &get("combined")?,
            corr,
            coherence,
        ));
    }
    let sweep = match &a.sweep {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Some(SweepResult::read_csv(&text)?)
        }
        None => None,
    };
    let body = render_report(&rows, sweep.as_ref(), a.format)?;
    let header = match a.format {
        ReportFormat::Markdown => format!("<!-- run_config: {run_config} -->\n"),
        ReportFormat::Csv => format!("# run_config: {run_config}\n"),
    };
    write_atomic(&a.output, format!("{header}{body}").as_bytes())
}

/// A corpus with tokens; raw corpora are tokenized with the default options.
fn read_tokenized(path: &Path) -> Result<Corpus> {
    let mut corpus = load_corpus(path, CorpusFormat::from_path(path))?;
    if corpus.documents.iter().all(|d| d.tokens.is_empty()) {
        log::warn!("{} has no tokens; preprocessing with default options", path.display());
        corpus.preprocess(&PreprocessOptions::default());
    }
    Ok(corpus)
}

/// The model and its stored coherence.
fn read_model(path: &Path, n_docs: usize) -> Result<(TopicModelResult, Option<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("malformed model file {}: {e}", path.display())))?;
    let model = TopicModelResult::from_file(&file)?;
    if model.assignments.len() != n_docs {
        return Err(Error::DimensionMismatch(format!(
            "model has {} documents, corpus has {n_docs}",
            model.assignments.len()
        )));
    }
    Ok((model, file.coherence))
}

/// Write via a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
