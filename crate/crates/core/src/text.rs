//! Documents, clusters and the chronological sentence ordering.
//!
//! Input arrives pre-segmented: every document is a list of sentence
//! strings. Sentences are addressed either by `(doc_id, index_in_doc)` or
//! by a 1-based global position obtained by concatenating the documents of
//! a cluster in chronological order.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{MeadError, Result};

/// 1-based position of a sentence within its cluster's global ordering.
pub type Position = usize;

/// A word occurrence: the fragment as it appeared and its normalized form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub norm: String,
}

/// Splits text on every run of non-alphanumeric characters and lowercases
/// the fragments. Digits are kept; nothing is stemmed or stopped.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|frag| !frag.is_empty())
        .map(|frag| Token {
            surface: frag.to_string(),
            norm: frag.to_lowercase(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub doc_id: String,
    /// 1-based index within the containing document.
    pub index_in_doc: usize,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(doc_id: impl Into<String>, index_in_doc: usize, text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Sentence {
            doc_id: doc_id.into(),
            index_in_doc,
            text,
            tokens,
        }
    }

    pub fn norms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.norm.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub source: String,
    pub timestamp: DateTime<Utc>,
    pub sentences: Vec<Sentence>,
}

impl Document {
    /// Builds a document from raw sentence strings, numbering them from 1.
    pub fn new<S: AsRef<str>>(
        doc_id: impl Into<String>,
        source: impl Into<String>,
        timestamp: DateTime<Utc>,
        sentences: &[S],
    ) -> Self {
        let doc_id = doc_id.into();
        let sentences = sentences
            .iter()
            .enumerate()
            .map(|(i, s)| Sentence::new(doc_id.clone(), i + 1, s.as_ref()))
            .collect();
        Document {
            doc_id,
            source: source.into(),
            timestamp,
            sentences,
        }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }
}

/// An event cluster: documents in chronological order.
///
/// Construction validates the document set and sorts it by timestamp,
/// breaking ties by `doc_id`. Afterwards the cluster is immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    cluster_id: String,
    documents: Vec<Document>,
    // offsets[i] = number of sentences in documents[..i]
    offsets: Vec<usize>,
    n: usize,
}

impl Cluster {
    pub fn new(cluster_id: impl Into<String>, mut documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(MeadError::EmptyCluster);
        }
        let mut seen = HashSet::new();
        for doc in &documents {
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(MeadError::DuplicateDocument(doc.doc_id.clone()));
            }
            if doc.sentences.is_empty() {
                return Err(MeadError::EmptyDocument {
                    doc_id: doc.doc_id.clone(),
                });
            }
        }
        documents.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        let mut offsets = Vec::with_capacity(documents.len());
        let mut n = 0;
        for doc in &documents {
            offsets.push(n);
            n += doc.sentences.len();
        }
        Ok(Cluster {
            cluster_id: cluster_id.into(),
            documents,
            offsets,
            n,
        })
    }

    pub fn cluster_id(&self) -> &str {
        &self.cluster_id
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    /// Number of documents.
    pub fn d(&self) -> usize {
        self.documents.len()
    }

    /// Total number of sentences.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sentences in global order; the i-th item has position i + 1.
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flat_map(|d| d.sentences.iter())
    }

    pub fn sentence(&self, position: Position) -> Option<&Sentence> {
        let (doc, idx) = self.locate(position)?;
        self.documents[doc].sentences.get(idx)
    }

    /// The document containing the given sentence.
    pub fn document_of(&self, sentence: &Sentence) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == sentence.doc_id)
    }

    pub fn position_of(&self, doc_id: &str, index_in_doc: usize) -> Option<Position> {
        let i = self.documents.iter().position(|d| d.doc_id == doc_id)?;
        if index_in_doc == 0 || index_in_doc > self.documents[i].sentences.len() {
            return None;
        }
        Some(self.offsets[i] + index_in_doc)
    }

    fn locate(&self, position: Position) -> Option<(usize, usize)> {
        if position == 0 || position > self.n {
            return None;
        }
        let doc = self.offsets.partition_point(|&off| off < position) - 1;
        Some((doc, position - 1 - self.offsets[doc]))
    }
}

/// Global position → `(doc_id, index_in_doc)` for positions 1..=n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalIndex {
    entries: Vec<(String, usize)>,
}

impl GlobalIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, position: Position) -> Option<(&str, usize)> {
        position
            .checked_sub(1)
            .and_then(|i| self.entries.get(i))
            .map(|(doc, idx)| (doc.as_str(), *idx))
    }

    /// `(position, doc_id, index_in_doc)` triples in order.
    pub fn iter(&self) -> impl Iterator<Item = (Position, &str, usize)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (doc, idx))| (i + 1, doc.as_str(), *idx))
    }
}

pub fn global_order(cluster: &Cluster) -> GlobalIndex {
    GlobalIndex {
        entries: cluster
            .sentences()
            .map(|s| (s.doc_id.clone(), s.index_in_doc))
            .collect(),
    }
}

/// On-disk form of a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterFile {
    pub cluster_id: String,
    pub documents: Vec<DocumentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub source: String,
    pub timestamp: DateTime<Utc>,
    pub sentences: Vec<String>,
}

impl From<&Document> for DocumentRecord {
    fn from(doc: &Document) -> Self {
        DocumentRecord {
            doc_id: doc.doc_id.clone(),
            source: doc.source.clone(),
            timestamp: doc.timestamp,
            sentences: doc.sentences.iter().map(|s| s.text.clone()).collect(),
        }
    }
}

impl From<&DocumentRecord> for Document {
    fn from(rec: &DocumentRecord) -> Self {
        Document::new(
            rec.doc_id.clone(),
            rec.source.clone(),
            rec.timestamp,
            &rec.sentences,
        )
    }
}

impl From<&Cluster> for ClusterFile {
    fn from(cluster: &Cluster) -> Self {
        ClusterFile {
            cluster_id: cluster.cluster_id.clone(),
            documents: cluster.documents.iter().map(DocumentRecord::from).collect(),
        }
    }
}

impl ClusterFile {
    pub fn into_cluster(self) -> Result<Cluster> {
        let docs = self.documents.iter().map(Document::from).collect();
        Cluster::new(self.cluster_id, docs)
    }
}

/// Deserializes JSON, reporting the offending path on failure.
pub(crate) fn from_json_str<T: serde::de::DeserializeOwned>(json: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(json);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        MeadError::parse(path, err.into_inner().to_string())
    })
}

pub fn parse_cluster_str(json: &str) -> Result<Cluster> {
    from_json_str::<ClusterFile>(json)?.into_cluster()
}

pub fn parse_cluster<R: Read>(mut reader: R) -> Result<Cluster> {
    let mut buf = String::new();
    reader
        .read_to_string(&mut buf)
        .map_err(|e| MeadError::parse(".", e.to_string()))?;
    parse_cluster_str(&buf)
}

pub fn read_cluster(path: impl AsRef<Path>) -> Result<Cluster> {
    let path = path.as_ref();
    let json = std::fs::read_to_string(path).map_err(|e| MeadError::io(path, e))?;
    parse_cluster_str(&json)
}

pub fn cluster_to_json(cluster: &Cluster) -> String {
    serde_json::to_string_pretty(&ClusterFile::from(cluster)).expect("cluster serializes")
}
