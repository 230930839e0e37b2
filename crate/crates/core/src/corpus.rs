//! Labeled sarcasm corpus: loading, class balancing and stratified splitting.
//!
//! All sampling goes through [`ChaCha20Rng`] seeded with `seed_from_u64`, so a
//! given seed reproduces the same balanced corpus and split assignment on any
//! platform. Text is never normalized; emojis, links, case and newlines are
//! kept exactly as read.

use std::collections::HashSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Binary class label. Serialized as the integers `0` / `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NotSarcastic = 0,
    Sarcastic = 1,
}

impl Label {
    pub fn from_u8(value: u8) -> Option<Label> {
        match value {
            0 => Some(Label::NotSarcastic),
            1 => Some(Label::Sarcastic),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_sarcastic(self) -> bool {
        self == Label::Sarcastic
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = u8::deserialize(deserializer)?;
        Label::from_u8(raw)
            .ok_or_else(|| serde::de::Error::custom(format!("label must be 0 or 1, got {raw}")))
    }
}

/// Which official file an example came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginSplit {
    OrigTrain,
    OrigTest,
}

impl OriginSplit {
    pub fn as_str(self) -> &'static str {
        match self {
            OriginSplit::OrigTrain => "orig_train",
            OriginSplit::OrigTest => "orig_test",
        }
    }
}

impl fmt::Display for OriginSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}` (expected train, val or test)")),
        }
    }
}

/// One labeled text. Field order here is the on-disk key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text_source: String,
    pub text_target: Option<String>,
    pub label: Label,
    pub origin_split: OriginSplit,
    pub split: Option<Split>,
}

impl Example {
    /// Text handed to a classifier: the translation when present, else the source.
    pub fn classification_text(&self) -> &str {
        self.text_target.as_deref().unwrap_or(&self.text_source)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub sarcastic: usize,
    pub not_sarcastic: usize,
}

impl ClassCounts {
    pub fn of<'a>(examples: impl IntoIterator<Item = &'a Example>) -> Self {
        let mut counts = ClassCounts::default();
        for example in examples {
            match example.label {
                Label::Sarcastic => counts.sarcastic += 1,
                Label::NotSarcastic => counts.not_sarcastic += 1,
            }
        }
        counts
    }

    pub fn total(&self) -> usize {
        self.sarcastic + self.not_sarcastic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetadata {
    pub source: String,
    pub seed: Option<u64>,
    pub counts: ClassCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_ratios: Option<SplitRatios>,
}

/// An ordered, validated collection of examples.
///
/// Ids are unique, texts non-empty, and `metadata.counts` always matches the
/// examples. The value is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    examples: Vec<Example>,
    metadata: CorpusMetadata,
}

impl Corpus {
    pub fn new(examples: Vec<Example>, source: impl Into<String>, seed: Option<u64>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(examples.len());
        for example in &examples {
            if !seen.insert(example.id.as_str()) {
                return Err(Error::DuplicateId(example.id.clone()));
            }
            if example.text_source.is_empty() {
                return Err(Error::InvalidExample(format!(
                    "`{}` has empty source text",
                    example.id
                )));
            }
        }
        let counts = ClassCounts::of(&examples);
        Ok(Corpus {
            examples,
            metadata: CorpusMetadata {
                source: source.into(),
                seed,
                counts,
                split_ratios: None,
            },
        })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn metadata(&self) -> &CorpusMetadata {
        &self.metadata
    }

    pub fn counts(&self) -> ClassCounts {
        self.metadata.counts
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Example> {
        self.examples.iter().find(|e| e.id == id)
    }

    /// Examples assigned to `split`, in corpus order.
    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &Example> {
        self.examples.iter().filter(move |e| e.split == Some(split))
    }

    /// Replace examples while keeping source/seed metadata. Used by stages that
    /// fill in translations.
    pub fn with_examples(&self, examples: Vec<Example>) -> Result<Self> {
        let mut out = Corpus::new(examples, self.metadata.source.clone(), self.metadata.seed)?;
        out.metadata.split_ratios = self.metadata.split_ratios;
        Ok(out)
    }

    /// One JSON object per line, `\n` terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for example in &self.examples {
            out.push_str(&serde_json::to_string(example).expect("example serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str, source: impl Into<String>) -> Result<Self> {
        let mut examples = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let example: Example = serde_json::from_str(line).map_err(|e| Error::MalformedRow {
                path: PathBuf::from("<corpus>"),
                line: idx as u64 + 1,
                message: e.to_string(),
            })?;
            examples.push(example);
        }
        Corpus::new(examples, source, None)
    }

    /// Writes `path` (examples) and the metadata sidecar next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl().as_bytes())?;
        let meta = serde_json::to_string_pretty(&self.metadata)? + "\n";
        write_atomic(&metadata_path(path), meta.as_bytes())
    }

    /// Loads a corpus written by [`Corpus::save`]. The sidecar is optional;
    /// counts are always recomputed from the examples.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut examples = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let example: Example = serde_json::from_str(line).map_err(|e| Error::MalformedRow {
                path: path.to_path_buf(),
                line: idx as u64 + 1,
                message: e.to_string(),
            })?;
            examples.push(example);
        }
        let meta_path = metadata_path(path);
        let (source, seed, ratios) = if meta_path.exists() {
            let raw = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
            let meta: CorpusMetadata = serde_json::from_str(&raw)?;
            (meta.source, meta.seed, meta.split_ratios)
        } else {
            (path.display().to_string(), None, None)
        };
        let mut corpus = Corpus::new(examples, source, seed)?;
        corpus.metadata.split_ratios = ratios;
        Ok(corpus)
    }
}

/// `corpus.jsonl` -> `corpus.meta.json`
pub fn metadata_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    {
        let mut file = BufWriter::new(File::create(&tmp).map_err(|e| Error::io(&tmp, e))?);
        file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        file.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Loads the official English train/test files into one corpus.
///
/// Ids are synthesized as `<origin_split>:<row index>` (0-based data rows).
pub fn load_isarcasm(train_path: &Path, test_path: &Path) -> Result<Corpus> {
    let mut examples = load_labeled_file(train_path, OriginSplit::OrigTrain)?;
    examples.extend(load_labeled_file(test_path, OriginSplit::OrigTest)?);
    let corpus = Corpus::new(examples, "isarcasmeval-en", None)?;
    log::info!(
        "loaded {} examples ({} sarcastic / {} non-sarcastic)",
        corpus.len(),
        corpus.counts().sarcastic,
        corpus.counts().not_sarcastic
    );
    Ok(corpus)
}

/// Reads one CSV or JSONL file with `text` and `sarcastic` fields. The format
/// is chosen by file extension.
pub fn load_labeled_file(path: &Path, origin: OriginSplit) -> Result<Vec<Example>> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let rows = match ext.as_deref() {
        Some("csv") => read_csv_rows(path)?,
        Some("jsonl") | Some("ndjson") => read_jsonl_rows(path)?,
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    };
    rows.into_iter()
        .enumerate()
        .map(|(idx, row)| {
            if row.text.is_empty() {
                return Err(Error::MalformedRow {
                    path: path.to_path_buf(),
                    line: row.line,
                    message: "empty text".into(),
                });
            }
            Ok(Example {
                id: format!("{origin}:{idx}"),
                text_source: row.text,
                text_target: None,
                label: row.label,
                origin_split: origin,
                split: None,
            })
        })
        .collect()
}

struct RawRow {
    line: u64,
    text: String,
    label: Label,
}

fn parse_label_field(raw: &str) -> Option<Label> {
    match raw.trim() {
        "0" => Some(Label::NotSarcastic),
        "1" => Some(Label::Sarcastic),
        _ => None,
    }
}

fn read_csv_rows(path: &Path) -> Result<Vec<RawRow>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(bytes.as_slice());
    let malformed = |line: u64, message: String| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    // The upstream train file names its text column `tweet`.
    let text_col = headers
        .iter()
        .position(|h| h == "text")
        .or_else(|| headers.iter().position(|h| h == "tweet"))
        .ok_or_else(|| malformed(1, "missing `text` column".into()))?;
    let label_col = headers
        .iter()
        .position(|h| h == "sarcastic")
        .ok_or_else(|| malformed(1, "missing `sarcastic` column".into()))?;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let text = record.get(text_col).unwrap_or_default().to_string();
        let raw_label = record.get(label_col).unwrap_or_default();
        let label = parse_label_field(raw_label)
            .ok_or_else(|| malformed(line, format!("`sarcastic` must be 0 or 1, got `{raw_label}`")))?;
        rows.push(RawRow { line, text, label });
    }
    Ok(rows)
}

fn read_jsonl_rows(path: &Path) -> Result<Vec<RawRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::MalformedRow {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let text = value
            .get("text")
            .and_then(|t| t.as_str())
            .ok_or_else(|| malformed("missing string field `text`".into()))?
            .to_string();
        let label = match value.get("sarcastic") {
            Some(serde_json::Value::Number(n)) => n.as_u64().and_then(|v| u8::try_from(v).ok()).and_then(Label::from_u8),
            Some(serde_json::Value::Bool(b)) => Some(if *b { Label::Sarcastic } else { Label::NotSarcastic }),
            Some(serde_json::Value::String(s)) => parse_label_field(s),
            _ => None,
        }
        .ok_or_else(|| malformed("`sarcastic` must be 0 or 1".into()))?;
        rows.push(RawRow {
            line: line_no,
            text,
            label,
        });
    }
    Ok(rows)
}

/// Keeps every sarcastic example and samples the same number of non-sarcastic
/// examples uniformly without replacement. Retained examples keep their input
/// order.
pub fn merge_and_balance(corpus: &Corpus, seed: u64) -> Result<Corpus> {
    let counts = corpus.counts();
    if counts.sarcastic == 0 || counts.not_sarcastic < counts.sarcastic {
        return Err(Error::CannotBalance {
            sarcastic: counts.sarcastic,
            not_sarcastic: counts.not_sarcastic,
        });
    }
    let negatives: Vec<usize> = corpus
        .examples
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.label.is_sarcastic())
        .map(|(i, _)| i)
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut keep = vec![false; corpus.len()];
    for pick in index::sample(&mut rng, negatives.len(), counts.sarcastic) {
        keep[negatives[pick]] = true;
    }
    let examples = corpus
        .examples
        .iter()
        .zip(&keep)
        .filter(|(e, kept)| e.label.is_sarcastic() || **kept)
        .map(|(e, _)| Example { split: None, ..e.clone() })
        .collect();
    Corpus::new(examples, corpus.metadata.source.clone(), Some(seed))
}

/// Fractions of the corpus assigned to train, validation and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let ratios = SplitRatios { train, val, test };
        ratios.validate()?;
        Ok(ratios)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("train", self.train), ("val", self.val), ("test", self.test)] {
            if !r.is_finite() || r <= 0.0 {
                return Err(Error::InvalidRatios(format!("{name} ratio must be positive, got {r}")));
            }
        }
        let sum = self.train + self.val + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidRatios(format!("ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Split sizes for `n` examples: validation and test receive
    /// `floor(n * ratio)`, train takes the rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
        let val = floor(self.val);
        let test = floor(self.test);
        (n.saturating_sub(val + test), val, test)
    }
}

/// Assigns every example of a balanced corpus to train/val/test, keeping each
/// split within one example of 50/50. Example order is unchanged.
pub fn stratified_split(corpus: &Corpus, ratios: SplitRatios, seed: u64) -> Result<Corpus> {
    ratios.validate()?;
    let counts = corpus.counts();
    if counts.sarcastic.abs_diff(counts.not_sarcastic) > 1 {
        return Err(Error::Unbalanced {
            sarcastic: counts.sarcastic,
            not_sarcastic: counts.not_sarcastic,
        });
    }
    let (train_n, val_n, test_n) = ratios.sizes(corpus.len());
    for (name, size) in [("train", train_n), ("val", val_n), ("test", test_n)] {
        if size == 0 {
            return Err(Error::EmptySplit(name));
        }
    }

    let mut positives: Vec<usize> = Vec::with_capacity(counts.sarcastic);
    let mut negatives: Vec<usize> = Vec::with_capacity(counts.not_sarcastic);
    for (i, e) in corpus.examples.iter().enumerate() {
        if e.label.is_sarcastic() {
            positives.push(i);
        } else {
            negatives.push(i);
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);

    // Odd-sized splits give their extra example to whichever class has more
    // left, sarcastic on a tie. Train absorbs the remainder of both classes.
    let mut pos_left = positives.len();
    let mut neg_left = negatives.len();
    let mut quota = |size: usize| -> Result<(usize, usize)> {
        let half = size / 2;
        let (pos, neg) = if size % 2 == 0 {
            (half, half)
        } else if pos_left >= neg_left {
            (half + 1, half)
        } else {
            (half, half + 1)
        };
        if pos > pos_left || neg > neg_left {
            return Err(Error::EmptySplit("train"));
        }
        pos_left -= pos;
        neg_left -= neg;
        Ok((pos, neg))
    };
    let (val_pos, val_neg) = quota(val_n)?;
    let (test_pos, test_neg) = quota(test_n)?;

    let mut assignment = vec![Split::Train; corpus.len()];
    for (pool, n_val, n_test) in [(&positives, val_pos, test_pos), (&negatives, val_neg, test_neg)] {
        for &i in &pool[..n_val] {
            assignment[i] = Split::Val;
        }
        for &i in &pool[n_val..n_val + n_test] {
            assignment[i] = Split::Test;
        }
    }

    let examples = corpus
        .examples
        .iter()
        .zip(assignment)
        .map(|(e, split)| Example {
            split: Some(split),
            ..e.clone()
        })
        .collect();
    let mut out = Corpus::new(examples, corpus.metadata.source.clone(), Some(seed))?;
    out.metadata.split_ratios = Some(ratios);
    Ok(out)
}
