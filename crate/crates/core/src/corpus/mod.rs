//! Corpus loading, text preprocessing, vocabulary and document-term matrices.

mod dtm;
pub mod porter;
mod preprocess;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{ensure, Error, Result};

pub use dtm::{build_doc_term_matrix, DocTermMatrix, Weighting};
pub use preprocess::{
    default_stopwords, is_clean_token, is_emoji, is_punctuation, parse_stopwords, preprocess_text,
    PreprocessOptions,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(rename = "text")]
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stance: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<f64>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { id: id.into(), raw_text: text.into(), tokens: Vec::new(), stance: None, sentiment: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
}

impl Vocabulary {
    /// Build from tokenized documents. Terms are sorted lexicographically.
    pub fn from_documents<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for tokens in docs {
            let unique: HashSet<&str> = tokens.iter().map(String::as_str).collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        Self::from_counts(df.into_iter().map(|(t, c)| (t.to_string(), c)))
    }

    fn from_counts(entries: impl IntoIterator<Item = (String, usize)>) -> Self {
        let mut vocab = Vocabulary::default();
        for (term, df) in entries {
            vocab.index.insert(term.clone(), vocab.terms.len());
            vocab.terms.push(term);
            vocab.doc_freq.push(df);
        }
        vocab
    }

    /// Keep only terms whose document frequency is at least `min_df`.
    pub fn filtered(&self, min_df: usize) -> Self {
        Self::from_counts(
            self.terms
                .iter()
                .zip(&self.doc_freq)
                .filter(|(_, &df)| df >= min_df)
                .map(|(t, &df)| (t.clone(), df)),
        )
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.doc_freq[i])
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guess from the file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub avg_tokens: f64,
}

impl CorpusStats {
    /// Average tokens at display precision (one decimal).
    pub fn display_avg_tokens(&self) -> String {
        format!("{:.1}", self.avg_tokens)
    }
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &documents {
            ensure!(seen.insert(d.id.as_str()), InvalidInput, "duplicate document id {:?}", d.id);
        }
        let vocabulary = Vocabulary::from_documents(documents.iter().map(|d| d.tokens.as_slice()));
        Ok(Self { documents, vocabulary })
    }

    /// Build a corpus directly from token lists (ids are the row numbers).
    pub fn from_tokens(tokens: Vec<Vec<String>>) -> Self {
        let docs = tokens
            .into_iter()
            .enumerate()
            .map(|(i, t)| Document { raw_text: t.join(" "), tokens: t, ..Document::new(i.to_string(), "") })
            .collect();
        Corpus::new(docs).expect("row ids are unique")
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Tokenize every document and rebuild the vocabulary.
    pub fn preprocess(&mut self, options: &PreprocessOptions) {
        for d in &mut self.documents {
            d.tokens = preprocess_text(&d.raw_text, options);
        }
        self.rebuild_vocabulary();
    }

    pub fn rebuild_vocabulary(&mut self) {
        self.vocabulary = Vocabulary::from_documents(self.documents.iter().map(|d| d.tokens.as_slice()));
    }

    pub fn stances(&self) -> Result<Vec<u8>> {
        self.documents
            .iter()
            .map(|d| {
                d.stance
                    .ok_or_else(|| Error::InvalidInput(format!("document {:?} has no stance label", d.id)))
            })
            .collect()
    }

    pub fn token_lists(&self) -> Vec<&[String]> {
        self.documents.iter().map(|d| d.tokens.as_slice()).collect()
    }

    /// Write the corpus (with tokens) as JSONL, optionally preceded by a
    /// `{"run_config": ...}` header line.
    pub fn write_jsonl<W: Write>(&self, mut out: W, run_config: Option<&Value>) -> Result<()> {
        let io = |e| Error::io("<output>", e);
        if let Some(cfg) = run_config {
            writeln!(out, "{}", serde_json::json!({ "run_config": cfg })).map_err(io)?;
        }
        for d in &self.documents {
            let line = serde_json::to_string(d).expect("documents serialize");
            writeln!(out, "{line}").map_err(io)?;
        }
        Ok(())
    }
}

pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    ensure!(!corpus.is_empty(), InvalidInput, "empty corpus");
    let total: usize = corpus.documents.iter().map(|d| d.tokens.len()).sum();
    Ok(CorpusStats { n_docs: corpus.len(), avg_tokens: total as f64 / corpus.len() as f64 })
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file), path),
        CorpusFormat::Csv => read_csv(file),
    }
}

pub fn read_jsonl<R: BufRead>(reader: R, path: &Path) -> Result<Corpus> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: line_no, msg: format!("malformed JSON ({e})") })?;
        let Value::Object(obj) = value else {
            return Err(parse_err(line_no, "record is not a JSON object"));
        };
        if obj.len() == 1 && obj.contains_key("run_config") {
            continue;
        }
        let text = match obj.get("text") {
            Some(Value::String(s)) => s.clone(),
            _ => return Err(parse_err(line_no, "missing text field")),
        };
        let id = match obj.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            None => (docs.len()).to_string(),
            _ => return Err(parse_err(line_no, "id must be a string")),
        };
        let stance = match obj.get("stance") {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => Some(check_stance(n.as_f64(), line_no)?),
            Some(_) => return Err(parse_err(line_no, "stance must be a number")),
        };
        let sentiment = match obj.get("sentiment") {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => Some(check_sentiment(n.as_f64(), line_no)?),
            Some(_) => return Err(parse_err(line_no, "sentiment must be a number")),
        };
        let tokens = match obj.get("tokens") {
            None | Some(Value::Null) => Vec::new(),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|_| parse_err(line_no, "tokens must be a list of strings"))?,
        };
        docs.push(Document { id, raw_text: text, tokens, stance, sentiment });
    }
    Corpus::new(docs)
}

fn read_csv<R: std::io::Read>(reader: R) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, &format!("bad CSV header ({e})")))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let text_col = col("text").ok_or_else(|| parse_err(1, "missing text column"))?;
    let (id_col, stance_col, sent_col) = (col("id"), col("stance"), col("sentiment"));
    let mut docs = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, &format!("malformed CSV record ({e})"))
        })?;
        let line_no = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let cell = |c: Option<usize>| c.and_then(|c| record.get(c)).map(str::trim).filter(|s| !s.is_empty());
        let number = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| parse_err(line_no, &format!("{what} is not a number")))
        };
        let text = record.get(text_col).ok_or_else(|| parse_err(line_no, "missing text field"))?.to_string();
        let stance = match cell(stance_col) {
            Some(s) => Some(check_stance(Some(number(s, "stance")?), line_no)?),
            None => None,
        };
        let sentiment = match cell(sent_col) {
            Some(s) => Some(check_sentiment(Some(number(s, "sentiment")?), line_no)?),
            None => None,
        };
        docs.push(Document {
            id: cell(id_col).map(str::to_string).unwrap_or_else(|| docs.len().to_string()),
            raw_text: text,
            tokens: Vec::new(),
            stance,
            sentiment,
        });
    }
    Corpus::new(docs)
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse { line, msg: msg.to_string() }
}

fn check_stance(v: Option<f64>, line: usize) -> Result<u8> {
    match v {
        Some(0.0) => Ok(0),
        Some(1.0) => Ok(1),
        _ => Err(parse_err(line, "stance out of range")),
    }
}

fn check_sentiment(v: Option<f64>, line: usize) -> Result<f64> {
    match v {
        Some(x) if (-1.0..=1.0).contains(&x) => Ok(x),
        _ => Err(parse_err(line, "sentiment out of range")),
    }
}
