//! Utility-based summary evaluation.
//!
//! Judges score every sentence of a cluster from 0 to 10. A judge's own
//! extract at size `k` is its `k` highest-utility sentences, and any
//! extract is scored against a judge by the fraction of that judge's best
//! achievable utility it captures. From this follow:
//!
//! * the cross-judge matrix `J[i][j]` (judge i's extract scored by judge j),
//!   per-judge agreement and the mean agreement `J`;
//! * the random baseline `R`, the expected score of a uniformly random
//!   extract;
//! * a system's score `S` (mean over judges) and its normalized score
//!   `D = (S - R) / (J - R)`.
//!
//! Subsumption annotations make the credit redundancy-aware: an extract
//! member linked to an already credited member earns only `E` times its
//! utility.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MeadError, Result};
use crate::summarizer::{
    check_rate, compression_size, enumerate_extracts, top_k_positions, DEFAULT_ENUMERATION_CAP,
};
use crate::text::{from_json_str, Position};

pub const MAX_UTILITY: u8 = 10;

pub type PositionSet = BTreeSet<Position>;

/// Per-sentence utilities assigned by one judge; index `i` holds position
/// `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityAnnotation {
    pub judge_id: String,
    pub cluster_id: String,
    pub utilities: Vec<u8>,
}

impl UtilityAnnotation {
    pub fn new(
        judge_id: impl Into<String>,
        cluster_id: impl Into<String>,
        utilities: Vec<u8>,
    ) -> Result<Self> {
        let ann = UtilityAnnotation {
            judge_id: judge_id.into(),
            cluster_id: cluster_id.into(),
            utilities,
        };
        ann.validate()?;
        Ok(ann)
    }

    fn validate(&self) -> Result<()> {
        if self.utilities.is_empty() {
            return Err(MeadError::parse("utilities", "no sentences annotated"));
        }
        if let Some(i) = self.utilities.iter().position(|&u| u > MAX_UTILITY) {
            return Err(MeadError::parse(
                format!("utilities[{i}]"),
                format!("utility {} outside 0..=10", self.utilities[i]),
            ));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.utilities.len()
    }

    pub fn utility(&self, position: Position) -> u32 {
        position
            .checked_sub(1)
            .and_then(|i| self.utilities.get(i))
            .map_or(0, |&u| u as u32)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let ann: UtilityAnnotation = from_json_str(json)?;
        ann.validate()?;
        Ok(ann)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| MeadError::io(path, e))?;
        UtilityAnnotation::from_json(&json)
    }
}

/// For each position, the positions one judge says subsume it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsumptionAnnotation {
    pub judge_id: String,
    pub cluster_id: String,
    pub subsumers: BTreeMap<Position, BTreeSet<Position>>,
}

impl SubsumptionAnnotation {
    pub fn new(
        judge_id: impl Into<String>,
        cluster_id: impl Into<String>,
        subsumers: BTreeMap<Position, BTreeSet<Position>>,
    ) -> Result<Self> {
        let ann = SubsumptionAnnotation {
            judge_id: judge_id.into(),
            cluster_id: cluster_id.into(),
            subsumers,
        };
        ann.validate()?;
        Ok(ann)
    }

    fn validate(&self) -> Result<()> {
        for (&a, bs) in &self.subsumers {
            if a == 0 || bs.contains(&0) {
                return Err(MeadError::parse(
                    format!("subsumers.{a}"),
                    "positions are 1-based",
                ));
            }
            if bs.contains(&a) {
                return Err(MeadError::parse(
                    format!("subsumers.{a}"),
                    "a sentence cannot subsume itself",
                ));
            }
        }
        Ok(())
    }

    /// Subsumers of `position`; empty when none were marked.
    pub fn of(&self, position: Position) -> BTreeSet<Position> {
        self.subsumers.get(&position).cloned().unwrap_or_default()
    }

    pub fn max_position(&self) -> Position {
        self.subsumers
            .iter()
            .flat_map(|(a, bs)| std::iter::once(*a).chain(bs.iter().copied()))
            .max()
            .unwrap_or(0)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let ann: SubsumptionAnnotation = from_json_str(json)?;
        ann.validate()?;
        Ok(ann)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| MeadError::io(path, e))?;
        SubsumptionAnnotation::from_json(&json)
    }
}

/// Consensus subsumption edges `a → b` (b subsumes a).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsumptionGraph {
    pub cluster_id: String,
    pub edges: BTreeSet<(Position, Position)>,
    pub agreement_threshold: usize,
}

impl SubsumptionGraph {
    /// True if either `a → b` or `b → a` is an edge.
    pub fn linked(&self, a: Position, b: Position) -> bool {
        self.edges.contains(&(a, b)) || self.edges.contains(&(b, a))
    }
}

/// How intermediate quantities are carried between stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Every reported quantity (each `J[i][j]`, each per-judge score, `J_i`,
    /// `J`, `S`, `R`) is rounded half-up to three decimals before it feeds
    /// the next stage, as in published three-decimal tables.
    #[default]
    Table,
    /// Full floating-point precision throughout.
    Exact,
}

impl Precision {
    fn apply(self, x: f64) -> f64 {
        match self {
            Precision::Table => round3(x),
            Precision::Exact => x,
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = MeadError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Precision::Table),
            "exact" => Ok(Precision::Exact),
            other => Err(MeadError::InvalidParameter(format!(
                "unknown precision `{other}` (expected table|exact)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomMode {
    Enumerate,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub r: f64,
    /// Credit factor for sentences whose subsumption partner is already
    /// credited.
    pub e: f64,
    pub agreement_threshold: usize,
    pub precision: Precision,
    /// Also apply the subsumption discount to the judges' own maxima.
    pub discount_judge_max: bool,
    pub random_mode: RandomMode,
    pub enumeration_cap: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            r: 0.5,
            e: 1.0,
            agreement_threshold: 3,
            precision: Precision::Table,
            discount_judge_max: false,
            random_mode: RandomMode::ClosedForm,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        check_rate(self.r)?;
        check_e(self.e)?;
        if self.agreement_threshold == 0 {
            return Err(MeadError::InvalidParameter(
                "agreement threshold must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_e(e: f64) -> Result<()> {
    if (0.0..=1.0).contains(&e) {
        Ok(())
    } else {
        Err(MeadError::InvalidParameter(format!("E = {e} outside [0, 1]")))
    }
}

/// Rounds half-up to three decimals.
pub fn round3(x: f64) -> f64 {
    // nudge by a relative epsilon so that e.g. 0.8825 stored as 0.88249999… rounds up
    let scaled = x * 1000.0;
    (scaled + scaled.abs() * 1e-12 + 0.5).floor() / 1000.0
}

pub fn judge_extract(annotation: &UtilityAnnotation, k: usize) -> Result<PositionSet> {
    let n = annotation.n();
    if k == 0 || k > n {
        return Err(MeadError::KOutOfRange { k, n });
    }
    let values: Vec<f64> = annotation.utilities.iter().map(|&u| u as f64).collect();
    Ok(top_k_positions(&values, k).into_iter().collect())
}

pub fn max_utility(annotation: &UtilityAnnotation, k: usize) -> Result<u32> {
    Ok(judge_extract(annotation, k)?
        .iter()
        .map(|&p| annotation.utility(p))
        .sum())
}

/// Utility credited to `extract` by one judge. With a subsumption graph,
/// members are visited in ascending position and a member linked to an
/// already credited member earns `e` times its utility.
pub fn extract_utility(
    extract: &PositionSet,
    annotation: &UtilityAnnotation,
    graph: Option<&SubsumptionGraph>,
    e: f64,
) -> f64 {
    let Some(graph) = graph else {
        return extract.iter().map(|&p| annotation.utility(p) as f64).sum();
    };
    let mut credited: Vec<Position> = Vec::with_capacity(extract.len());
    let mut total = 0.0;
    for &a in extract {
        let u = annotation.utility(a) as f64;
        if credited.iter().any(|&b| graph.linked(a, b)) {
            total += e * u;
        } else {
            total += u;
        }
        credited.push(a);
    }
    total
}

fn check_judges(annotations: &[UtilityAnnotation]) -> Result<usize> {
    let first = annotations.first().ok_or(MeadError::TooFewJudges(0))?;
    for ann in &annotations[1..] {
        if ann.cluster_id != first.cluster_id {
            return Err(MeadError::AnnotationMismatch(format!(
                "judge `{}` annotates cluster `{}`, judge `{}` annotates `{}`",
                first.judge_id, first.cluster_id, ann.judge_id, ann.cluster_id
            )));
        }
        if ann.n() != first.n() {
            return Err(MeadError::AnnotationMismatch(format!(
                "judge `{}` rates {} sentences, judge `{}` rates {}",
                first.judge_id,
                first.n(),
                ann.judge_id,
                ann.n()
            )));
        }
    }
    Ok(first.n())
}

fn nonzero_max(annotation: &UtilityAnnotation, k: usize) -> Result<f64> {
    match max_utility(annotation, k)? {
        0 => Err(MeadError::ZeroUtilityJudge(annotation.judge_id.clone())),
        m => Ok(m as f64),
    }
}

fn cross_judge_matrix_with(
    annotations: &[UtilityAnnotation],
    r: f64,
    precision: Precision,
) -> Result<Vec<Vec<f64>>> {
    if annotations.len() < 2 {
        return Err(MeadError::TooFewJudges(annotations.len()));
    }
    let n = check_judges(annotations)?;
    let k = compression_size(n, r)?;
    let maxima = annotations
        .iter()
        .map(|a| nonzero_max(a, k))
        .collect::<Result<Vec<_>>>()?;
    let extracts = annotations
        .iter()
        .map(|a| judge_extract(a, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(extracts
        .iter()
        .enumerate()
        .map(|(i, ext)| {
            annotations
                .iter()
                .zip(&maxima)
                .enumerate()
                .map(|(j, (ann, max))| {
                    if i == j {
                        1.0
                    } else {
                        precision.apply(extract_utility(ext, ann, None, 1.0) / max)
                    }
                })
                .collect()
        })
        .collect())
}

/// `J[i][j]`: judge i's own extract scored against judge j's utilities.
/// Not symmetric in general.
pub fn cross_judge_matrix(annotations: &[UtilityAnnotation], r: f64) -> Result<Vec<Vec<f64>>> {
    cross_judge_matrix_with(annotations, r, Precision::Exact)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_cross_judge_with(matrix: &[Vec<f64>], precision: Precision) -> (Vec<f64>, f64) {
    let per_judge: Vec<f64> = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let others: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| *v)
                .collect();
            precision.apply(mean(&others))
        })
        .collect();
    let overall = precision.apply(mean(&per_judge));
    (per_judge, overall)
}

/// Per-judge agreement (row means without the diagonal) and their mean.
pub fn mean_cross_judge(matrix: &[Vec<f64>]) -> (Vec<f64>, f64) {
    mean_cross_judge_with(matrix, Precision::Exact)
}

/// Score of `extract` against each judge, as a fraction of that judge's
/// maximum at the extract's size.
pub fn per_judge_performance(
    extract: &PositionSet,
    annotations: &[UtilityAnnotation],
    graph: Option<&SubsumptionGraph>,
    e: f64,
) -> Result<Vec<f64>> {
    per_judge_performance_with(extract, annotations, graph, e, false)
}

fn per_judge_performance_with(
    extract: &PositionSet,
    annotations: &[UtilityAnnotation],
    graph: Option<&SubsumptionGraph>,
    e: f64,
    discount_judge_max: bool,
) -> Result<Vec<f64>> {
    let n = check_judges(annotations)?;
    if let Some(&p) = extract.iter().find(|&&p| p == 0 || p > n) {
        return Err(MeadError::InvalidParameter(format!(
            "extract position {p} outside 1..={n}"
        )));
    }
    let k = extract.len();
    annotations
        .iter()
        .map(|ann| {
            let max = match (discount_judge_max, graph) {
                (true, Some(_)) => {
                    let own = judge_extract(ann, k)?;
                    let m = extract_utility(&own, ann, graph, e);
                    if m == 0.0 {
                        return Err(MeadError::ZeroUtilityJudge(ann.judge_id.clone()));
                    }
                    m
                }
                _ => nonzero_max(ann, k)?,
            };
            Ok(extract_utility(extract, ann, graph, e) / max)
        })
        .collect()
}

/// Mean over judges of [`per_judge_performance`].
pub fn system_performance(
    extract: &PositionSet,
    annotations: &[UtilityAnnotation],
    graph: Option<&SubsumptionGraph>,
    e: f64,
) -> Result<f64> {
    Ok(mean(&per_judge_performance(extract, annotations, graph, e)?))
}

/// Expected performance of a uniformly random extract of `round(n * r)`
/// sentences.
///
/// The closed form uses linearity of expectation: a random `k`-subset
/// collects `k * mean(u_j)` utility from judge j on average.
pub fn random_performance(
    annotations: &[UtilityAnnotation],
    r: f64,
    mode: RandomMode,
    cap: u64,
) -> Result<f64> {
    let n = check_judges(annotations)?;
    let k = compression_size(n, r)?;
    match mode {
        RandomMode::ClosedForm => {
            let per_judge = annotations
                .iter()
                .map(|ann| {
                    let max = nonzero_max(ann, k)?;
                    let avg = ann.utilities.iter().map(|&u| u as f64).sum::<f64>() / n as f64;
                    Ok(k as f64 * avg / max)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(mean(&per_judge))
        }
        RandomMode::Enumerate => {
            let maxima = annotations
                .iter()
                .map(|a| nonzero_max(a, k))
                .collect::<Result<Vec<_>>>()?;
            let mut scores = Vec::new();
            for subset in enumerate_extracts(n, k, cap)? {
                let s = annotations
                    .iter()
                    .zip(&maxima)
                    .map(|(ann, max)| {
                        subset.iter().map(|&p| ann.utility(p) as f64).sum::<f64>() / max
                    })
                    .sum::<f64>()
                    / annotations.len() as f64;
                scores.push(s);
            }
            Ok(pairwise_sum(&scores) / scores.len() as f64)
        }
    }
}

fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// `D = (S - R) / (J - R)`; only defined when the judges beat chance.
pub fn normalized_performance(s: f64, mean_j: f64, random: f64) -> Result<f64> {
    if mean_j <= random {
        return Err(MeadError::ChanceAgreement { mean_j, random });
    }
    Ok((s - random) / (mean_j - random))
}

/// Precision and recall of `system` against `ideal`.
pub fn precision_recall(system: &PositionSet, ideal: &PositionSet) -> (f64, f64) {
    let hit = system.intersection(ideal).count() as f64;
    let ratio = |total: usize| if total == 0 { 0.0 } else { hit / total as f64 };
    (ratio(system.len()), ratio(ideal.len()))
}

/// Fraction of the `n` positions on which `system` and `ideal` make the
/// same include/exclude decision.
pub fn percent_agreement(system: &PositionSet, ideal: &PositionSet, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let agree = (1..=n)
        .filter(|p| system.contains(p) == ideal.contains(p))
        .count();
    agree as f64 / n as f64
}

/// Majority extract: positions ranked by how many judges put them in their
/// own `k`-extract, then by summed utility, then by position.
pub fn ideal_extract(annotations: &[UtilityAnnotation], k: usize) -> Result<PositionSet> {
    let n = check_judges(annotations)?;
    let mut votes = vec![0usize; n];
    let mut summed = vec![0u32; n];
    for ann in annotations {
        for p in judge_extract(ann, k)? {
            votes[p - 1] += 1;
        }
        for (i, &u) in ann.utilities.iter().enumerate() {
            summed[i] += u as u32;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        votes[b]
            .cmp(&votes[a])
            .then(summed[b].cmp(&summed[a]))
            .then(a.cmp(&b))
    });
    Ok(order.into_iter().take(k).map(|i| i + 1).collect())
}

/// Keeps the edges `a → b` marked by at least `threshold` judges.
pub fn csis_consensus(annotations: &[SubsumptionAnnotation], threshold: usize) -> SubsumptionGraph {
    let mut support: BTreeMap<(Position, Position), usize> = BTreeMap::new();
    for ann in annotations {
        for (&a, bs) in &ann.subsumers {
            for &b in bs {
                *support.entry((a, b)).or_default() += 1;
            }
        }
    }
    SubsumptionGraph {
        cluster_id: annotations
            .first()
            .map(|a| a.cluster_id.clone())
            .unwrap_or_default(),
        edges: support
            .into_iter()
            .filter(|(_, c)| *c >= threshold)
            .map(|(edge, _)| edge)
            .collect(),
        agreement_threshold: threshold,
    }
}

/// Agreement on one sentence: how many judges chose the most frequent
/// answer, and whether that answer was a subsumption (`plus`) or none
/// (`minus`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentenceTally {
    pub position: Position,
    pub modal: BTreeSet<Position>,
    pub plus: Option<usize>,
    pub minus: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CsisTally {
    pub judges: usize,
    pub rows: Vec<SentenceTally>,
    /// agreement level → (sentences with a `+` mode, sentences with a `-` mode)
    pub histogram: BTreeMap<usize, (usize, usize)>,
}

impl CsisTally {
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("position,modal,plus,minus\n");
        for row in &self.rows {
            let modal = row
                .modal
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.position,
                modal,
                opt(row.plus),
                opt(row.minus)
            ));
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("judges_agreeing,plus,minus\n");
        for (level, (plus, minus)) in self.histogram.iter().rev() {
            out.push_str(&format!("{level},{plus},{minus}\n"));
        }
        out
    }
}

/// Tallies subsumption agreement for positions `1..=n` (extended to cover
/// every annotated position). On a tie between answers, a subsumption
/// beats no subsumption, and smaller position sets beat larger ones.
pub fn csis_agreement_tally(annotations: &[SubsumptionAnnotation], n: usize) -> CsisTally {
    let n = annotations
        .iter()
        .map(SubsumptionAnnotation::max_position)
        .fold(n, usize::max);
    let judges = annotations.len();
    let mut histogram: BTreeMap<usize, (usize, usize)> =
        (1..=judges).map(|level| (level, (0, 0))).collect();
    let mut rows = Vec::with_capacity(n);
    for position in 1..=n {
        let mut answers: BTreeMap<BTreeSet<Position>, usize> = BTreeMap::new();
        for ann in annotations {
            *answers.entry(ann.of(position)).or_default() += 1;
        }
        let Some((modal, count)) = answers
            .into_iter()
            .max_by(|(sa, ca), (sb, cb)| {
                ca.cmp(cb)
                    .then((!sa.is_empty()).cmp(&!sb.is_empty()))
                    .then(sb.cmp(sa))
            })
        else {
            continue;
        };
        let entry = histogram.entry(count).or_default();
        let (plus, minus) = if modal.is_empty() {
            entry.1 += 1;
            (None, Some(count))
        } else {
            entry.0 += 1;
            (Some(count), None)
        };
        rows.push(SentenceTally { position, modal, plus, minus });
    }
    CsisTally { judges, rows, histogram }
}

/// Mean cross-judge agreement at each compression rate.
pub fn agreement_curve(
    annotations: &[UtilityAnnotation],
    r_grid: &[f64],
    precision: Precision,
) -> Result<Vec<(f64, f64)>> {
    r_grid
        .iter()
        .map(|&r| {
            let matrix = cross_judge_matrix_with(annotations, r, precision)?;
            Ok((r, mean_cross_judge_with(&matrix, precision).1))
        })
        .collect()
}

pub fn agreement_curve_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("r,mean_J\n");
    for (r, j) in curve {
        out.push_str(&format!("{:.2},{:.3}\n", r, round3(*j)));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub cluster_id: String,
    pub judges: Vec<String>,
    pub r: f64,
    pub k: usize,
    #[serde(rename = "E")]
    pub e: f64,
    pub precision: Precision,
    #[serde(rename = "J_matrix")]
    pub j_matrix: Vec<Vec<f64>>,
    #[serde(rename = "J_per_judge")]
    pub j_per_judge: Vec<f64>,
    #[serde(rename = "mean_J")]
    pub mean_j: f64,
    #[serde(rename = "R")]
    pub random: f64,
    #[serde(rename = "S")]
    pub s: BTreeMap<String, f64>,
    #[serde(rename = "D")]
    pub d: BTreeMap<String, f64>,
    #[serde(rename = "S_csis", skip_serializing_if = "Option::is_none")]
    pub s_csis: Option<BTreeMap<String, f64>>,
    #[serde(rename = "D_csis", skip_serializing_if = "Option::is_none")]
    pub d_csis: Option<BTreeMap<String, f64>>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Judge agreement table followed by one row per system. Values are
    /// rounded to three decimals.
    pub fn to_csv(&self) -> String {
        let fmt = |x: f64| format!("{:.3}", round3(x));
        let mut out = String::from("judge");
        for j in &self.judges {
            out.push_str(&format!(",{j}"));
        }
        out.push_str(",overall\n");
        for (i, row) in self.j_matrix.iter().enumerate() {
            out.push_str(&self.judges[i]);
            for v in row {
                out.push(',');
                out.push_str(&fmt(*v));
            }
            out.push(',');
            out.push_str(&fmt(self.j_per_judge[i]));
            out.push('\n');
        }
        out.push('\n');
        out.push_str("system,r,S,R,J,D");
        if self.s_csis.is_some() {
            out.push_str(",S_csis,D_csis");
        }
        out.push('\n');
        for (label, s) in &self.s {
            out.push_str(&format!(
                "{},{:.2},{},{},{},{}",
                label,
                self.r,
                fmt(*s),
                fmt(self.random),
                fmt(self.mean_j),
                fmt(self.d[label])
            ));
            if let (Some(sc), Some(dc)) = (&self.s_csis, &self.d_csis) {
                out.push_str(&format!(",{},{}", fmt(sc[label]), fmt(dc[label])));
            }
            out.push('\n');
        }
        out
    }
}

/// Scores each labelled system extract and normalizes against the judges.
pub fn evaluate(
    annotations: &[UtilityAnnotation],
    systems: &[(String, PositionSet)],
    graph: Option<&SubsumptionGraph>,
    config: &EvalConfig,
) -> Result<EvalReport> {
    config.validate()?;
    let precision = config.precision;
    let n = check_judges(annotations)?;
    let k = compression_size(n, config.r)?;
    let j_matrix = cross_judge_matrix_with(annotations, config.r, precision)?;
    let (j_per_judge, mean_j) = mean_cross_judge_with(&j_matrix, precision);
    let random = precision.apply(random_performance(
        annotations,
        config.r,
        config.random_mode,
        config.enumeration_cap,
    )?);
    if mean_j <= random {
        return Err(MeadError::ChanceAgreement { mean_j, random });
    }

    let score = |extract: &PositionSet, graph: Option<&SubsumptionGraph>| -> Result<f64> {
        let per_judge =
            per_judge_performance_with(extract, annotations, graph, config.e, config.discount_judge_max)?;
        let per_judge: Vec<f64> = per_judge.into_iter().map(|v| precision.apply(v)).collect();
        Ok(precision.apply(mean(&per_judge)))
    };

    let mut s = BTreeMap::new();
    let mut d = BTreeMap::new();
    let mut s_csis = graph.map(|_| BTreeMap::new());
    let mut d_csis = graph.map(|_| BTreeMap::new());
    for (label, extract) in systems {
        let plain = score(extract, None)?;
        s.insert(label.clone(), plain);
        d.insert(label.clone(), normalized_performance(plain, mean_j, random)?);
        if let (Some(sc), Some(dc)) = (s_csis.as_mut(), d_csis.as_mut()) {
            let adjusted = score(extract, graph)?;
            sc.insert(label.clone(), adjusted);
            dc.insert(label.clone(), normalized_performance(adjusted, mean_j, random)?);
        }
    }

    Ok(EvalReport {
        cluster_id: annotations[0].cluster_id.clone(),
        judges: annotations.iter().map(|a| a.judge_id.clone()).collect(),
        r: config.r,
        k,
        e: config.e,
        precision,
        j_matrix,
        j_per_judge,
        mean_j,
        random,
        s,
        d,
        s_csis,
        d_csis,
    })
}
