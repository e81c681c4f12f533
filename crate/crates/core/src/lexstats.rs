//! Background IDF statistics, cluster centroids and incremental
//! document-to-cluster assignment.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MeadError, Result};
use crate::text::{Cluster, Document};

/// Lower bound applied to IDF values so that ubiquitous terms keep a
/// strictly positive weight.
pub const IDF_FLOOR: f64 = 0.001;

/// Document frequencies from a background collection.
///
/// `idf(w) = log2(n_docs / df(w))`, floored at [`IDF_FLOOR`]; terms never
/// seen in the background get `log2(n_docs + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdfModel {
    n_docs: u64,
    df: BTreeMap<String, u64>,
}

impl IdfModel {
    pub fn from_parts(n_docs: u64, df: BTreeMap<String, u64>) -> Result<Self> {
        if n_docs == 0 {
            return Err(MeadError::EmptyBackground);
        }
        if let Some((term, &f)) = df.iter().find(|(_, &f)| f == 0 || f > n_docs) {
            return Err(MeadError::InvalidParameter(format!(
                "document frequency {f} for `{term}` outside 1..={n_docs}"
            )));
        }
        Ok(IdfModel { n_docs, df })
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn df(&self, term: &str) -> Option<u64> {
        self.df.get(term).copied()
    }

    pub fn default_idf(&self) -> f64 {
        ((self.n_docs + 1) as f64).log2()
    }

    pub fn idf(&self, term: &str) -> f64 {
        match self.df.get(term) {
            Some(&df) => (self.n_docs as f64 / df as f64).log2().max(IDF_FLOOR),
            None => self.default_idf(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("idf model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let raw: IdfModel = crate::text::from_json_str(json)?;
        IdfModel::from_parts(raw.n_docs, raw.df)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| MeadError::io(path, e))?;
        IdfModel::from_json(&json)
    }
}

pub fn build_idf<'a, I>(background: I) -> Result<IdfModel>
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut n_docs = 0u64;
    let mut df: BTreeMap<String, u64> = BTreeMap::new();
    for doc in background {
        n_docs += 1;
        let terms: BTreeSet<&str> = doc.tokens().map(|t| t.norm.as_str()).collect();
        for term in terms {
            *df.entry(term.to_string()).or_default() += 1;
        }
    }
    IdfModel::from_parts(n_docs, df)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentroidEntry {
    /// Average occurrences per document across the cluster.
    pub count: f64,
    pub idf: f64,
    pub weight: f64,
}

/// Pseudo-document of the terms whose `count * idf` reaches the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub cluster_id: String,
    pub entries: BTreeMap<String, CentroidEntry>,
    pub threshold: f64,
}

impl Centroid {
    pub fn weight(&self, term: &str) -> f64 {
        self.entries.get(term).map_or(0.0, |e| e.weight)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries by descending weight, ties by term.
    pub fn ranked(&self) -> Vec<(&str, &CentroidEntry)> {
        let mut rows: Vec<_> = self.entries.iter().map(|(t, e)| (t.as_str(), e)).collect();
        rows.sort_by(|a, b| b.1.weight.total_cmp(&a.1.weight).then_with(|| a.0.cmp(b.0)));
        rows
    }

    /// `term,count,idf,weight` rows sorted by weight descending.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,count,idf,weight\n");
        for (term, e) in self.ranked() {
            out.push_str(&format!(
                "{},{:.4},{:.4},{:.4}\n",
                term, e.count, e.idf, e.weight
            ));
        }
        out
    }
}

pub fn build_centroid(cluster: &Cluster, idf: &IdfModel, threshold: f64) -> Centroid {
    let mut totals: HashMap<&str, u64> = HashMap::new();
    for tok in cluster.documents().iter().flat_map(Document::tokens) {
        *totals.entry(tok.norm.as_str()).or_default() += 1;
    }
    let d = cluster.d() as f64;
    let entries = totals
        .into_iter()
        .filter_map(|(term, total)| {
            let count = total as f64 / d;
            let idf = idf.idf(term);
            let weight = count * idf;
            (weight >= threshold).then(|| (term.to_string(), CentroidEntry { count, idf, weight }))
        })
        .collect();
    Centroid {
        cluster_id: cluster.cluster_id().to_string(),
        entries,
        threshold,
    }
}

/// `count * idf` vector of a single document.
pub fn document_vector(doc: &Document, idf: &IdfModel) -> HashMap<String, f64> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for tok in doc.tokens() {
        *counts.entry(tok.norm.as_str()).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(term, c)| (term.to_string(), c as f64 * idf.idf(term)))
        .collect()
}

pub fn cosine_to_centroid(vector: &HashMap<String, f64>, centroid: &Centroid) -> f64 {
    let dot: f64 = vector
        .iter()
        .map(|(term, w)| w * centroid.weight(term))
        .sum();
    let norm_v = vector.values().map(|w| w * w).sum::<f64>().sqrt();
    let norm_c = centroid
        .entries
        .values()
        .map(|e| e.weight * e.weight)
        .sum::<f64>()
        .sqrt();
    if norm_v == 0.0 || norm_c == 0.0 {
        0.0
    } else {
        dot / (norm_v * norm_c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Assignment {
    Existing { cluster_id: String, similarity: f64 },
    New,
}

/// Assigns `doc` to the most similar centroid if that similarity reaches
/// `sim_threshold`. Ties go to the earlier centroid in the list.
pub fn assign_document(
    centroids: &[Centroid],
    doc: &Document,
    idf: &IdfModel,
    sim_threshold: f64,
) -> Assignment {
    let vector = document_vector(doc, idf);
    let mut best: Option<(&Centroid, f64)> = None;
    for c in centroids {
        let sim = cosine_to_centroid(&vector, c);
        if best.map_or(true, |(_, b)| sim > b) {
            best = Some((c, sim));
        }
    }
    match best {
        Some((c, sim)) if sim > 0.0 && sim >= sim_threshold => Assignment::Existing {
            cluster_id: c.cluster_id.clone(),
            similarity: sim,
        },
        _ => Assignment::New,
    }
}

/// Single-pass clusterer: documents are offered one at a time and each
/// insertion recomputes the receiving cluster's centroid from scratch.
#[derive(Debug)]
pub struct IncrementalClusterer<'a> {
    idf: &'a IdfModel,
    sim_threshold: f64,
    centroid_threshold: f64,
    clusters: Vec<(String, Vec<Document>)>,
    centroids: Vec<Centroid>,
}

impl<'a> IncrementalClusterer<'a> {
    pub fn new(idf: &'a IdfModel, sim_threshold: f64, centroid_threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sim_threshold) {
            return Err(MeadError::InvalidParameter(format!(
                "similarity threshold {sim_threshold} outside [0, 1]"
            )));
        }
        Ok(IncrementalClusterer {
            idf,
            sim_threshold,
            centroid_threshold,
            clusters: Vec::new(),
            centroids: Vec::new(),
        })
    }

    /// Inserts a document and returns the id of the cluster receiving it.
    pub fn insert(&mut self, doc: Document) -> Result<String> {
        let slot = match assign_document(&self.centroids, &doc, self.idf, self.sim_threshold) {
            Assignment::Existing { cluster_id, .. } => self
                .clusters
                .iter()
                .position(|(id, _)| *id == cluster_id)
                .expect("centroid ids mirror clusters"),
            Assignment::New => {
                let id = format!("cluster-{:03}", self.clusters.len() + 1);
                self.clusters.push((id, Vec::new()));
                self.centroids.push(Centroid {
                    cluster_id: String::new(),
                    entries: BTreeMap::new(),
                    threshold: self.centroid_threshold,
                });
                self.clusters.len() - 1
            }
        };
        let (id, docs) = &mut self.clusters[slot];
        docs.push(doc);
        let cluster = Cluster::new(id.clone(), docs.clone())?;
        self.centroids[slot] = build_centroid(&cluster, self.idf, self.centroid_threshold);
        Ok(id.clone())
    }

    pub fn centroids(&self) -> &[Centroid] {
        &self.centroids
    }

    pub fn into_clusters(self) -> Result<Vec<Cluster>> {
        self.clusters
            .into_iter()
            .map(|(id, docs)| Cluster::new(id, docs))
            .collect()
    }
}
