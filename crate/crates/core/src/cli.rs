//! Batch commands behind the `mead` binary.
//!
//! Each command reads its inputs, writes deterministic output files into an
//! output directory and returns the in-memory result so callers (and
//! tests) can inspect it without re-parsing.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{MeadError, Result};
use crate::evaluation::{
    agreement_curve, agreement_curve_csv, csis_agreement_tally, csis_consensus, evaluate,
    EvalConfig, EvalReport, PositionSet, Precision, RandomMode, SubsumptionAnnotation,
    UtilityAnnotation,
};
use crate::lexstats::{build_centroid, build_idf, IdfModel, IncrementalClusterer};
use crate::summarizer::{
    extract, lead_baseline, redundancy_rerank, score_sentences, Extract, ScoreWeights,
    DEFAULT_ENUMERATION_CAP,
};
use crate::text::{cluster_to_json, read_cluster, Cluster, ClusterFile, Document};

/// Process exit code for a command result.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_evaluation_precondition() => 3,
        Err(_) => 2,
    }
}

/// Parameters shared by all commands. Loaded from a `key = value` file and
/// overridden by command-line flags; both routes go through [`RunConfig::set`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub weights: ScoreWeights,
    pub r: f64,
    pub r_grid: Option<Vec<f64>>,
    pub e: f64,
    pub centroid_threshold: f64,
    pub sim_threshold: f64,
    pub agreement_threshold: usize,
    pub redundancy: bool,
    pub enumeration_cap: u64,
    pub precision: Precision,
    pub discount_judge_max: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            weights: ScoreWeights::pure_centroid(),
            r: 0.2,
            r_grid: None,
            e: 1.0,
            centroid_threshold: 0.0,
            sim_threshold: 0.1,
            agreement_threshold: 3,
            redundancy: false,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            precision: Precision::Table,
            discount_judge_max: false,
            seed: 0,
        }
    }
}

fn invalid(key: &str, value: &str, expected: &str) -> MeadError {
    MeadError::InvalidParameter(format!("{key} = `{value}`: expected {expected}"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| invalid(key, value, "a number"))
}

fn parse_unit(key: &str, value: &str) -> Result<f64> {
    let v = parse_f64(key, value)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(invalid(key, value, "a number in [0, 1]"))
    }
}

fn parse_rate(key: &str, value: &str) -> Result<f64> {
    let v = parse_f64(key, value)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(invalid(key, value, "a compression rate in (0, 1]"))
    }
}

/// Parses `start:end:step` into an inclusive grid, e.g. `0.1:0.9:0.1`.
pub fn parse_grid(value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').collect();
    let [start, end, step] = parts[..] else {
        return Err(invalid("r_grid", value, "start:end:step"));
    };
    let start = parse_rate("r_grid", start)?;
    let end = parse_rate("r_grid", end)?;
    let step = parse_f64("r_grid", step)?;
    if step <= 0.0 || end < start {
        return Err(invalid("r_grid", value, "start <= end and a positive step"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "weights" => {
                let parts = value
                    .split(',')
                    .map(|v| parse_f64("weights", v.trim()))
                    .collect::<Result<Vec<_>>>()?;
                let [w_c, w_p, w_f] = parts[..] else {
                    return Err(invalid("weights", value, "wc,wp,wf"));
                };
                self.weights = ScoreWeights::new(w_c, w_p, w_f)?;
            }
            "preset" => {
                self.weights = match value {
                    "pure-centroid" => ScoreWeights::pure_centroid(),
                    "lead-centroid" => ScoreWeights::lead_centroid(),
                    _ => return Err(invalid("preset", value, "pure-centroid|lead-centroid")),
                }
            }
            "r" => {
                self.r = parse_rate("r", value)?;
                self.r_grid = None;
            }
            "r_grid" | "r-grid" => self.r_grid = Some(parse_grid(value)?),
            "E" | "e" => self.e = parse_unit("E", value)?,
            "centroid_threshold" | "centroid-threshold" => {
                let v = parse_f64(key, value)?;
                if v < 0.0 {
                    return Err(invalid(key, value, "a non-negative number"));
                }
                self.centroid_threshold = v;
            }
            "sim_threshold" | "sim-threshold" => self.sim_threshold = parse_unit(key, value)?,
            "agreement_threshold" | "agreement-threshold" => {
                self.agreement_threshold = value
                    .parse()
                    .ok()
                    .filter(|&v: &usize| v >= 1)
                    .ok_or_else(|| invalid(key, value, "an integer >= 1"))?;
            }
            "redundancy" => {
                self.redundancy = match value {
                    "on" => true,
                    "off" => false,
                    _ => return Err(invalid(key, value, "on|off")),
                }
            }
            "enumeration_cap" | "enumeration-cap" => {
                self.enumeration_cap = value
                    .parse()
                    .map_err(|_| invalid(key, value, "a positive integer"))?;
            }
            "precision" => self.precision = value.parse()?,
            "discount_judge_max" | "discount-judge-max" => {
                self.discount_judge_max = match value {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err(invalid(key, value, "on|off")),
                }
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| invalid(key, value, "an unsigned integer"))?
            }
            other => {
                return Err(MeadError::InvalidParameter(format!(
                    "unknown configuration key `{other}`"
                )))
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                MeadError::parse(format!("line {}", lineno + 1), "expected key = value")
            })?;
            config.set(key, value)?;
        }
        Ok(config)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| MeadError::io(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn to_config_string(&self) -> String {
        let w = &self.weights;
        let mut out = String::new();
        let _ = writeln!(out, "weights = {},{},{}", w.w_c, w.w_p, w.w_f);
        let _ = writeln!(out, "r = {}", self.r);
        if let Some(grid) = &self.r_grid {
            // written as an explicit list-free grid only when it is regular
            if let Some(spec) = grid_spec(grid) {
                let _ = writeln!(out, "r_grid = {spec}");
            }
        }
        let _ = writeln!(out, "E = {}", self.e);
        let _ = writeln!(out, "centroid_threshold = {}", self.centroid_threshold);
        let _ = writeln!(out, "sim_threshold = {}", self.sim_threshold);
        let _ = writeln!(out, "agreement_threshold = {}", self.agreement_threshold);
        let _ = writeln!(out, "redundancy = {}", if self.redundancy { "on" } else { "off" });
        let _ = writeln!(out, "enumeration_cap = {}", self.enumeration_cap);
        let _ = writeln!(
            out,
            "precision = {}",
            match self.precision {
                Precision::Table => "table",
                Precision::Exact => "exact",
            }
        );
        let _ = writeln!(
            out,
            "discount_judge_max = {}",
            if self.discount_judge_max { "on" } else { "off" }
        );
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }

    /// Compression rates to run: the grid if one is set, else `[r]`.
    pub fn rates(&self) -> Vec<f64> {
        self.r_grid.clone().unwrap_or_else(|| vec![self.r])
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            r: self.r,
            e: self.e,
            agreement_threshold: self.agreement_threshold,
            precision: self.precision,
            discount_judge_max: self.discount_judge_max,
            random_mode: RandomMode::ClosedForm,
            enumeration_cap: self.enumeration_cap,
        }
    }
}

fn grid_spec(grid: &[f64]) -> Option<String> {
    match grid {
        [] => None,
        [only] => Some(format!("{only}:{only}:1")),
        [first, second, ..] => {
            let step = ((second - first) * 1e9).round() / 1e9;
            let last = grid[grid.len() - 1];
            (parse_grid(&format!("{first}:{last}:{step}")).ok()? == grid)
                .then(|| format!("{first}:{last}:{step}"))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| MeadError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| MeadError::io(path, e))
}

/// `*.json` files of a directory in name order, or the path itself.
fn json_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| MeadError::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        files.sort();
        Ok(files)
    } else if path.exists() {
        Ok(vec![path.to_path_buf()])
    } else {
        Err(MeadError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ))
    }
}

fn read_documents(inputs: &[PathBuf]) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for input in inputs {
        for file in json_files(input)? {
            let json = fs::read_to_string(&file).map_err(|e| MeadError::io(&file, e))?;
            let parsed: ClusterFile = crate::text::from_json_str(&json)?;
            docs.extend(parsed.documents.iter().map(Document::from));
        }
    }
    Ok(docs)
}

/// Builds an IDF model from every document in the cluster files under
/// `corpus_dir` and writes it to `out`.
pub fn cmd_idf(corpus_dir: &Path, out: &Path) -> Result<IdfModel> {
    let docs = read_documents(&[corpus_dir.to_path_buf()])?;
    let model = build_idf(&docs)?;
    write_file(out, &(model.to_json() + "\n"))?;
    Ok(model)
}

/// Streams the documents of the input files in chronological order through
/// the incremental clusterer and writes one cluster file per cluster.
pub fn cmd_cluster(
    inputs: &[PathBuf],
    idf: &IdfModel,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<Cluster>> {
    let mut docs = read_documents(inputs)?;
    docs.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.doc_id.cmp(&b.doc_id)));
    let mut clusterer =
        IncrementalClusterer::new(idf, config.sim_threshold, config.centroid_threshold)?;
    for doc in docs {
        clusterer.insert(doc)?;
    }
    let clusters = clusterer.into_clusters()?;
    fs::create_dir_all(out_dir).map_err(|e| MeadError::io(out_dir, e))?;
    for cluster in &clusters {
        let path = out_dir.join(format!("{}.json", cluster.cluster_id()));
        write_file(&path, &(cluster_to_json(cluster) + "\n"))?;
    }
    Ok(clusters)
}

/// Summarizes one cluster at every configured compression rate.
pub fn summarize_cluster(cluster: &Cluster, idf: &IdfModel, config: &RunConfig) -> Result<Vec<Extract>> {
    let centroid = build_centroid(cluster, idf, config.centroid_threshold);
    let scores = score_sentences(cluster, &centroid, &config.weights)?;
    config
        .rates()
        .into_iter()
        .map(|r| {
            if config.redundancy {
                redundancy_rerank(cluster, &scores, r)
            } else {
                extract(cluster, &scores, r)
            }
        })
        .collect()
}

pub fn extract_file_stem(extract: &Extract) -> String {
    format!("{}_r{:03}", extract.cluster_id, (extract.r * 100.0).round() as u32)
}

/// Writes `<cluster>_rNNN.json` and `.txt` per rate plus the centroid CSV.
pub fn cmd_summarize(
    cluster_path: &Path,
    idf: &IdfModel,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<Extract>> {
    let cluster = read_cluster(cluster_path)?;
    let extracts = summarize_cluster(&cluster, idf, config)?;
    let centroid = build_centroid(&cluster, idf, config.centroid_threshold);
    write_file(
        &out_dir.join(format!("{}_centroid.csv", cluster.cluster_id())),
        &centroid.to_csv(),
    )?;
    for ex in &extracts {
        let stem = extract_file_stem(ex);
        write_file(&out_dir.join(format!("{stem}.json")), &(ex.to_json() + "\n"))?;
        write_file(&out_dir.join(format!("{stem}.txt")), &ex.render(&cluster))?;
    }
    Ok(extracts)
}

/// A system to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSource {
    /// An extract file written by `summarize`.
    ExtractFile(PathBuf),
    /// Explicit 1-based positions.
    Positions { label: String, positions: PositionSet },
    /// Lead baseline over a cluster file at the configured rate.
    Lead(PathBuf),
    /// Uniform random selection; scored by its expectation, so `S = R`.
    Random,
}

/// Parses `1,4` or `label=1,4`.
pub fn parse_positions(spec: &str) -> Result<(String, PositionSet)> {
    let (label, list) = match spec.split_once('=') {
        Some((label, list)) => (label.trim().to_string(), list),
        None => (String::new(), spec),
    };
    let positions = list
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .filter(|&p| p >= 1)
                .ok_or_else(|| invalid("positions", spec, "comma-separated 1-based positions"))
        })
        .collect::<Result<PositionSet>>()?;
    let label = if label.is_empty() {
        format!(
            "{{{}}}",
            positions.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
        )
    } else {
        label
    };
    Ok((label, positions))
}

fn read_utility_annotations(paths: &[PathBuf]) -> Result<Vec<UtilityAnnotation>> {
    paths.iter().map(UtilityAnnotation::read).collect()
}

/// Evaluates the given systems against utility annotations (and optional
/// subsumption annotations) and writes `report.json` and `report.csv`.
pub fn cmd_evaluate(
    systems: &[SystemSource],
    annotation_paths: &[PathBuf],
    subsumption_paths: &[PathBuf],
    config: &RunConfig,
    out_dir: &Path,
) -> Result<EvalReport> {
    let annotations = read_utility_annotations(annotation_paths)?;
    if annotations.len() < 2 {
        return Err(MeadError::TooFewJudges(annotations.len()));
    }
    let subsumptions = subsumption_paths
        .iter()
        .map(SubsumptionAnnotation::read)
        .collect::<Result<Vec<_>>>()?;
    let graph = (!subsumptions.is_empty())
        .then(|| csis_consensus(&subsumptions, config.agreement_threshold));

    let mut labelled: Vec<(String, PositionSet)> = Vec::new();
    let mut include_random = false;
    for source in systems {
        match source {
            SystemSource::ExtractFile(path) => {
                let json = fs::read_to_string(path).map_err(|e| MeadError::io(path, e))?;
                let ex = Extract::from_json(&json)?;
                labelled.push((extract_file_stem(&ex), ex.positions()));
            }
            SystemSource::Positions { label, positions } => {
                labelled.push((label.clone(), positions.clone()))
            }
            SystemSource::Lead(path) => {
                let cluster = read_cluster(path)?;
                let ex = lead_baseline(&cluster, config.r)?;
                labelled.push(("lead".to_string(), ex.positions()));
            }
            SystemSource::Random => include_random = true,
        }
    }

    let mut report = evaluate(&annotations, &labelled, graph.as_ref(), &config.eval_config())?;
    if include_random {
        report.s.insert("random".into(), report.random);
        report.d.insert("random".into(), 0.0);
        if let (Some(s), Some(d)) = (report.s_csis.as_mut(), report.d_csis.as_mut()) {
            s.insert("random".into(), report.random);
            d.insert("random".into(), 0.0);
        }
    }
    write_file(&out_dir.join("report.json"), &(report.to_json() + "\n"))?;
    write_file(&out_dir.join("report.csv"), &report.to_csv())?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgreementMode {
    Cbsu,
    Csis,
}

/// Agreement tables: the `(r, mean_J)` curve for utility annotations, or
/// per-sentence and histogram subsumption tallies. Returns the CSV text
/// written (tables separated by a blank line).
pub fn cmd_agreement(
    paths: &[PathBuf],
    mode: AgreementMode,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<String> {
    match mode {
        AgreementMode::Cbsu => {
            let annotations = read_utility_annotations(paths)?;
            if annotations.len() < 2 {
                return Err(MeadError::TooFewJudges(annotations.len()));
            }
            let grid = config.r_grid.clone().unwrap_or_else(|| {
                parse_grid("0.1:0.9:0.1").expect("default grid parses")
            });
            let curve = agreement_curve(&annotations, &grid, config.precision)?;
            let csv = agreement_curve_csv(&curve);
            write_file(&out_dir.join("agreement_cbsu.csv"), &csv)?;
            Ok(csv)
        }
        AgreementMode::Csis => {
            let annotations = paths
                .iter()
                .map(SubsumptionAnnotation::read)
                .collect::<Result<Vec<_>>>()?;
            if annotations.len() < 2 {
                return Err(MeadError::TooFewJudges(annotations.len()));
            }
            let clusters: BTreeSet<&str> =
                annotations.iter().map(|a| a.cluster_id.as_str()).collect();
            if clusters.len() > 1 {
                return Err(MeadError::AnnotationMismatch(format!(
                    "subsumption annotations span clusters {clusters:?}"
                )));
            }
            let tally = csis_agreement_tally(&annotations, 0);
            let rows = tally.rows_csv();
            let hist = tally.histogram_csv();
            write_file(&out_dir.join("agreement_csis.csv"), &rows)?;
            write_file(&out_dir.join("agreement_csis_histogram.csv"), &hist)?;
            Ok(format!("{rows}\n{hist}"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip() {
        let mut cfg = RunConfig::default();
        cfg.set("preset", "lead-centroid").unwrap();
        cfg.set("r_grid", "0.1:0.9:0.1").unwrap();
        cfg.set("E", "0.5").unwrap();
        cfg.set("redundancy", "on").unwrap();
        cfg.set("precision", "exact").unwrap();
        let text = cfg.to_config_string();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn config_parse_comments_and_errors() {
        let cfg = RunConfig::parse("# experiment\nweights = 1, 0.5, 0\n\nr = 0.3 # trailing\n").unwrap();
        assert_eq!(cfg.weights, ScoreWeights::new(1.0, 0.5, 0.0).unwrap());
        assert_eq!(cfg.rates(), vec![0.3]);
        assert!(RunConfig::parse("r 0.3").is_err());
        assert!(RunConfig::parse("r = 0").is_err());
        assert!(RunConfig::parse("E = 2").is_err());
        assert!(RunConfig::parse("weights = 0,0,0").is_err());
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("agreement_threshold = 0").is_err());
    }

    #[test]
    fn grids() {
        let grid = parse_grid("0.1:0.9:0.1").unwrap();
        assert_eq!(grid, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        assert_eq!(parse_grid("0.5:0.5:0.1").unwrap(), vec![0.5]);
        assert!(parse_grid("0.5:0.1:0.1").is_err());
        assert!(parse_grid("0.1:0.9").is_err());
    }

    #[test]
    fn positions_spec() {
        let (label, set) = parse_positions("1,4").unwrap();
        assert_eq!(label, "{1,4}");
        assert_eq!(set, BTreeSet::from([1, 4]));
        assert_eq!(parse_positions("mine=2, 3").unwrap().0, "mine");
        assert!(parse_positions("0,1").is_err());
        assert!(parse_positions("a").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(())), 0);
        assert_eq!(exit_code(&Err(MeadError::EmptyBackground)), 2);
        assert_eq!(
            exit_code(&Err(MeadError::ChanceAgreement { mean_j: 0.5, random: 0.6 })),
            3
        );
    }
}
