//! Centroid-based sentence scoring and extract selection.
//!
//! Every sentence gets a base score `w_c * C + w_p * P + w_f * F` where
//! `C` sums centroid weights over the sentence's tokens, `P` rewards early
//! positions within a document, and `F` measures overlap with the
//! document's first sentence. The extract keeps the `round(n * r)` best
//! sentences and lists them in cluster order. Optionally, sentences that
//! repeat words of better-ranked extract members are penalized and the
//! selection is recomputed until it stops changing.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{MeadError, Result};
use crate::lexstats::Centroid;
use crate::text::{Cluster, Position, Sentence};

/// Iteration cap for [`redundancy_rerank`].
pub const MAX_RERANK_ITERATIONS: usize = 100;

/// Default cap on the number of subsets [`enumerate_extracts`] will yield.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub w_c: f64,
    pub w_p: f64,
    pub w_f: f64,
}

impl ScoreWeights {
    pub fn new(w_c: f64, w_p: f64, w_f: f64) -> Result<Self> {
        let all = [w_c, w_p, w_f];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(MeadError::InvalidParameter(format!(
                "score weights must be finite and non-negative, got ({w_c}, {w_p}, {w_f})"
            )));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(MeadError::InvalidParameter(
                "at least one score weight must be positive".into(),
            ));
        }
        Ok(ScoreWeights { w_c, w_p, w_f })
    }

    pub fn pure_centroid() -> Self {
        ScoreWeights { w_c: 1.0, w_p: 0.0, w_f: 0.0 }
    }

    pub fn lead_centroid() -> Self {
        ScoreWeights { w_c: 1.0, w_p: 1.0, w_f: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub position: Position,
    pub c: f64,
    pub p: f64,
    pub f: f64,
    pub base: f64,
    pub penalty: f64,
    #[serde(rename = "final")]
    pub final_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extract {
    pub cluster_id: String,
    pub r: f64,
    pub k: usize,
    /// Global positions, strictly ascending.
    pub selected: Vec<Position>,
    /// Scores of the selected sentences, in the same order as `selected`.
    pub scores: Vec<SentenceScore>,
}

impl Extract {
    pub fn positions(&self) -> BTreeSet<Position> {
        self.selected.iter().copied().collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("extract serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let ex: Extract = crate::text::from_json_str(json)?;
        if ex.selected.windows(2).any(|w| w[0] >= w[1]) || ex.selected.contains(&0) {
            return Err(MeadError::parse(
                "selected",
                "positions must be 1-based and strictly ascending",
            ));
        }
        Ok(ex)
    }

    /// One sentence per line, in cluster order.
    pub fn render(&self, cluster: &Cluster) -> String {
        let mut out = String::new();
        for &p in &self.selected {
            if let Some(s) = cluster.sentence(p) {
                out.push_str(&format!("[{} {}/{}] {}\n", p, s.doc_id, s.index_in_doc, s.text));
            }
        }
        out
    }
}

/// Number of sentences kept at compression rate `r`: `n * r` rounded half
/// up, at least 1 and at most `n`.
pub fn compression_size(n: usize, r: f64) -> Result<usize> {
    check_rate(r)?;
    // the epsilon absorbs representation error such as 0.7 * 30 = 21.000000000000004
    let k = (n as f64 * r + 0.5 + 1e-9).floor() as usize;
    Ok(k.clamp(1, n.max(1)))
}

pub(crate) fn check_rate(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(MeadError::InvalidParameter(format!(
            "compression rate {r} outside (0, 1]"
        )))
    }
}

/// Positions (1-based, ascending) of the `k` largest values; ties favour
/// the earlier position.
pub fn top_k_positions(values: &[f64], k: usize) -> Vec<Position> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut chosen: Vec<Position> = order.into_iter().take(k).map(|i| i + 1).collect();
    chosen.sort_unstable();
    chosen
}

pub fn centroid_value(sentence: &Sentence, centroid: &Centroid) -> f64 {
    sentence.norms().map(|t| centroid.weight(t)).sum()
}

/// Linear positional credit: `c_max` for the first sentence of a document
/// down to `c_max / n_d` for its last.
pub fn positional_value(sentence: &Sentence, cluster: &Cluster, c_max: f64) -> f64 {
    let n_d = cluster
        .document_of(sentence)
        .map_or(1, |d| d.sentences.len())
        .max(1) as f64;
    let j = sentence.index_in_doc as f64;
    (n_d - j + 1.0) / n_d * c_max
}

fn term_counts(sentence: &Sentence) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for t in sentence.norms() {
        *counts.entry(t).or_insert(0) += 1;
    }
    counts
}

/// Inner product of the sentence's term counts with those of the first
/// sentence of its document.
pub fn first_sentence_overlap(sentence: &Sentence, cluster: &Cluster) -> f64 {
    let Some(first) = cluster
        .document_of(sentence)
        .and_then(|d| d.sentences.first())
    else {
        return 0.0;
    };
    let first = term_counts(first);
    term_counts(sentence)
        .iter()
        .map(|(t, c)| c * first.get(t).copied().unwrap_or(0))
        .sum::<usize>() as f64
}

pub fn score_sentences(
    cluster: &Cluster,
    centroid: &Centroid,
    weights: &ScoreWeights,
) -> Result<Vec<SentenceScore>> {
    if centroid.cluster_id != cluster.cluster_id() {
        return Err(MeadError::ClusterMismatch {
            expected: cluster.cluster_id().to_string(),
            found: centroid.cluster_id.clone(),
        });
    }
    let weights = ScoreWeights::new(weights.w_c, weights.w_p, weights.w_f)?;
    let c: Vec<f64> = cluster.sentences().map(|s| centroid_value(s, centroid)).collect();
    let c_max = c.iter().copied().fold(0.0, f64::max);
    Ok(cluster
        .sentences()
        .zip(c)
        .enumerate()
        .map(|(i, (s, c))| {
            let p = positional_value(s, cluster, c_max);
            let f = first_sentence_overlap(s, cluster);
            let base = weights.w_c * c + weights.w_p * p + weights.w_f * f;
            SentenceScore {
                position: i + 1,
                c,
                p,
                f,
                base,
                penalty: 0.0,
                final_score: base,
            }
        })
        .collect())
}

fn build_extract(
    cluster: &Cluster,
    r: f64,
    k: usize,
    selected: Vec<Position>,
    scores: &[SentenceScore],
) -> Extract {
    Extract {
        cluster_id: cluster.cluster_id().to_string(),
        r,
        k,
        scores: selected.iter().map(|&p| scores[p - 1]).collect(),
        selected,
    }
}

fn check_scores(cluster: &Cluster, scores: &[SentenceScore]) -> Result<()> {
    if scores.len() != cluster.n() {
        return Err(MeadError::InvalidParameter(format!(
            "{} scores for a cluster of {} sentences",
            scores.len(),
            cluster.n()
        )));
    }
    Ok(())
}

/// Selects the `k` sentences with the highest final score.
pub fn extract(cluster: &Cluster, scores: &[SentenceScore], r: f64) -> Result<Extract> {
    check_scores(cluster, scores)?;
    let k = compression_size(cluster.n(), r)?;
    let finals: Vec<f64> = scores.iter().map(|s| s.final_score).collect();
    Ok(build_extract(cluster, r, k, top_k_positions(&finals, k), scores))
}

/// Occurrence-matched overlap ratio of two token sequences:
/// `2 * Σ_w min(m_w, n_w) / (|a| + |b|)`.
pub fn overlap_ratio<T: AsRef<str>>(a: &[T], b: &[T]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(MeadError::EmptySentence);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in a {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut shared = 0usize;
    for t in b {
        if let Some(c) = counts.get_mut(t.as_ref()) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    Ok(2.0 * shared as f64 / (a.len() + b.len()) as f64)
}

pub fn word_overlap(s1: &Sentence, s2: &Sentence) -> Result<f64> {
    let a: Vec<&str> = s1.norms().collect();
    let b: Vec<&str> = s2.norms().collect();
    overlap_ratio(&a, &b)
}

/// Iteratively penalizes redundant sentences and reselects until the
/// extract stops changing.
///
/// Each round, every sentence `s` receives
/// `w_R * max{ overlap(s, t) : t in the current extract, t ranked above s }`
/// where ranking is by base score (earlier position on ties) and `w_R` is
/// the maximum base score. Final scores are `base - penalty` and the next
/// extract is the top `k` by final score. The loop stops at the first
/// selection already seen, or after [`MAX_RERANK_ITERATIONS`] rounds.
pub fn redundancy_rerank(cluster: &Cluster, scores: &[SentenceScore], r: f64) -> Result<Extract> {
    redundancy_rerank_counted(cluster, scores, r).map(|(ex, _)| ex)
}

/// [`redundancy_rerank`] together with the number of rescoring rounds run.
pub fn redundancy_rerank_counted(
    cluster: &Cluster,
    scores: &[SentenceScore],
    r: f64,
) -> Result<(Extract, usize)> {
    check_scores(cluster, scores)?;
    let n = cluster.n();
    let k = compression_size(n, r)?;
    let tokens: Vec<Vec<&str>> = cluster.sentences().map(|s| s.norms().collect()).collect();
    let base: Vec<f64> = scores.iter().map(|s| s.base).collect();
    let w_r = base.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // rank[i] = place of sentence i in the base ordering (0 = best)
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| base[b].total_cmp(&base[a]).then(a.cmp(&b)));
    let mut rank = vec![0usize; n];
    for (place, &i) in order.iter().enumerate() {
        rank[i] = place;
    }

    let mut overlap_cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut overlap = |a: usize, b: usize| -> f64 {
        let key = (a.min(b), a.max(b));
        *overlap_cache
            .entry(key)
            .or_insert_with(|| overlap_ratio(&tokens[a], &tokens[b]).unwrap_or(0.0))
    };

    let mut current: Vec<SentenceScore> = scores
        .iter()
        .map(|s| SentenceScore {
            penalty: 0.0,
            final_score: s.base,
            ..*s
        })
        .collect();
    let mut selected = top_k_positions(&base, k);
    let mut seen: HashSet<Vec<Position>> = HashSet::from([selected.clone()]);
    let mut rounds = 0;

    while rounds < MAX_RERANK_ITERATIONS {
        rounds += 1;
        let members: Vec<usize> = selected.iter().map(|p| p - 1).collect();
        let mut next = current.clone();
        for (i, score) in next.iter_mut().enumerate() {
            let worst = members
                .iter()
                .filter(|&&t| t != i && rank[t] < rank[i])
                .map(|&t| overlap(i, t))
                .fold(0.0, f64::max);
            score.penalty = w_r * worst;
            score.final_score = score.base - score.penalty;
        }
        let finals: Vec<f64> = next.iter().map(|s| s.final_score).collect();
        let reselected = top_k_positions(&finals, k);
        current = next;
        if !seen.insert(reselected.clone()) {
            selected = reselected;
            break;
        }
        selected = reselected;
    }
    Ok((build_extract(cluster, r, k, selected, &current), rounds))
}

/// Lead baseline: the first `round(n * r / d)` sentences of every
/// document, trimmed or extended at the end of the cluster to exactly `k`.
pub fn lead_baseline(cluster: &Cluster, r: f64) -> Result<Extract> {
    let n = cluster.n();
    let k = compression_size(n, r)?;
    let d = cluster.d() as f64;
    let per_doc = (n as f64 * r / d + 0.5 + 1e-9).floor() as usize;

    let mut chosen: BTreeSet<Position> = BTreeSet::new();
    for doc in cluster.documents() {
        for s in doc.sentences.iter().take(per_doc) {
            chosen.extend(cluster.position_of(&doc.doc_id, s.index_in_doc));
        }
    }
    while chosen.len() > k {
        chosen.pop_last();
    }
    'fill: for doc in cluster.documents().iter().rev() {
        for s in &doc.sentences {
            if chosen.len() >= k {
                break 'fill;
            }
            chosen.extend(cluster.position_of(&doc.doc_id, s.index_in_doc));
        }
    }

    let scores: Vec<SentenceScore> = cluster
        .sentences()
        .enumerate()
        .map(|(i, s)| {
            let p = positional_value(s, cluster, 1.0);
            SentenceScore {
                position: i + 1,
                c: 0.0,
                p,
                f: 0.0,
                base: p,
                penalty: 0.0,
                final_score: p,
            }
        })
        .collect();
    Ok(build_extract(cluster, r, k, chosen.into_iter().collect(), &scores))
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Lexicographic iterator over the `k`-subsets of `1..=n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<Position>>,
}

impl Iterator for Combinations {
    type Item = Vec<Position>;

    fn next(&mut self) -> Option<Self::Item> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        // rightmost slot that can still advance
        match (0..k).rev().find(|&i| next[i] < self.n - (k - 1 - i)) {
            Some(i) => {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
            }
            None => self.current = None,
        }
        Some(out)
    }
}

pub fn enumerate_extracts(n: usize, k: usize, cap: u64) -> Result<Combinations> {
    if k == 0 || k > n {
        return Err(MeadError::KOutOfRange { k, n });
    }
    if binomial(n, k) > cap {
        return Err(MeadError::EnumerationCap { n, k, cap });
    }
    Ok(Combinations {
        n,
        current: Some((1..=k).collect()),
    })
}
