//! Acceptance criteria. Run with `cargo test --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use mead::evaluation::{
    cross_judge_matrix, csis_agreement_tally, evaluate, extract_utility, mean_cross_judge,
    normalized_performance, percent_agreement, precision_recall, random_performance, round3,
    system_performance, EvalConfig, Precision, RandomMode, SubsumptionAnnotation,
    SubsumptionGraph, UtilityAnnotation,
};
use mead::lexstats::{build_centroid, build_idf, IdfModel};
use mead::summarizer::{
    compression_size, extract, overlap_ratio, redundancy_rerank_counted, score_sentences,
    top_k_positions, ScoreWeights, SentenceScore, MAX_RERANK_ITERATIONS,
};
use mead::text::{read_cluster, Cluster, Document};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

type Outcome = Result<String, String>;

fn check(cond: bool, detail: impl Into<String>) -> Outcome {
    if cond {
        Ok(detail.into())
    } else {
        Err(detail.into())
    }
}

/// Equal to `expected` within one unit in the third decimal after rounding.
fn close3(value: f64, expected: f64) -> bool {
    let a = (round3(value) * 1000.0).round() as i64;
    let b = (expected * 1000.0).round() as i64;
    (a - b).abs() <= 1
}

fn set(ps: &[usize]) -> BTreeSet<usize> {
    ps.iter().copied().collect()
}

fn table5() -> Vec<UtilityAnnotation> {
    (1..=3)
        .map(|j| UtilityAnnotation::read(format!("{FIXTURES}/table5/judge{j}.json")).unwrap())
        .collect()
}

fn table_config() -> EvalConfig {
    EvalConfig { r: 0.5, precision: Precision::Table, ..EvalConfig::default() }
}

fn worked_example_agreement() -> Outcome {
    let anns = table5();
    let start = Instant::now();
    let report = evaluate(&anns, &[], None, &table_config()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let rows = [[1.000, 1.000, 0.765], [1.000, 1.000, 0.765], [0.722, 0.789, 1.000]];
    let per_judge = [0.883, 0.883, 0.756];
    let mut ok = true;
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            ok &= close3(report.j_matrix[i][j], v);
        }
        ok &= close3(report.j_per_judge[i], per_judge[i]);
    }
    ok &= close3(report.mean_j, 0.841);

    // unrounded arithmetic stays within the same tolerance for the matrix
    let exact = cross_judge_matrix(&anns, 0.5).map_err(|e| e.to_string())?;
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            ok &= close3(exact[i][j], v);
        }
    }
    let (exact_per_judge, exact_mean) = mean_cross_judge(&exact);
    for (i, &v) in per_judge.iter().enumerate() {
        ok &= close3(exact_per_judge[i], v);
    }
    ok &= close3(exact_mean, 0.841);
    ok &= elapsed < Duration::from_millis(1);
    check(
        ok,
        format!(
            "J rows {:?}, J_i {:?}, J = {:.3} (exact {:.4}), {:?}",
            report.j_matrix, report.j_per_judge, report.mean_j, exact_mean, elapsed
        ),
    )
}

fn enumeration_scores() -> Outcome {
    let anns = table5();
    let systems = [[1, 2], [1, 3], [1, 4], [2, 3], [2, 4], [3, 4]];
    let expected = [0.922, 0.627, 0.833, 0.631, 0.837, 0.543];
    let labelled: Vec<(String, BTreeSet<usize>)> =
        systems.iter().map(|s| (format!("{}{}", s[0], s[1]), set(s))).collect();
    let report = evaluate(&anns, &labelled, None, &table_config()).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut got = Vec::new();
    for ((label, _), want) in labelled.iter().zip(expected) {
        let s = report.s[label];
        let exact = system_performance(&labelled.iter().find(|l| &l.0 == label).unwrap().1, &anns, None, 1.0)
            .map_err(|e| e.to_string())?;
        ok &= close3(s, want) && close3(exact, want);
        got.push(round3(s));
    }
    let enumerated = random_performance(&anns, 0.5, RandomMode::Enumerate, 1_000_000).map_err(|e| e.to_string())?;
    let closed = random_performance(&anns, 0.5, RandomMode::ClosedForm, 1_000_000).map_err(|e| e.to_string())?;
    ok &= close3(enumerated, 0.732) && close3(closed, 0.732) && close3(report.random, 0.732);
    check(ok, format!("S = {got:?}, R = {:.3}", enumerated))
}

fn normalization() -> Outcome {
    let anns = table5();
    let labelled = vec![
        ("14".to_string(), set(&[1, 4])),
        ("24".to_string(), set(&[2, 4])),
        ("12".to_string(), set(&[1, 2])),
    ];
    let report = evaluate(&anns, &labelled, None, &table_config()).map_err(|e| e.to_string())?;
    let d14 = report.d["14"];
    let d24 = report.d["24"];
    let d12 = report.d["12"];
    let direct = normalized_performance(0.833, 0.841, 0.732).map_err(|e| e.to_string())?;
    check(
        close3(d14, 0.927) && close3(d24, 0.963) && d12 > 1.0 && close3(direct, 0.927),
        format!("D(14) = {d14:.3}, D(24) = {d24:.3}, D(12) = {d12:.3}"),
    )
}

fn legacy_metrics() -> Outcome {
    let ideal = set(&[1, 2]);
    let sys1 = set(&[1, 3]);
    let sys2 = set(&[3, 4]);
    let (p1, r1) = precision_recall(&sys1, &ideal);
    let (p2, r2) = precision_recall(&sys2, &ideal);
    let a1 = percent_agreement(&sys1, &ideal, 10);
    let a2 = percent_agreement(&sys2, &ideal, 10);
    // Table 4: four sentences with ideal utilities 10, 9, 8, 7
    let utilities = UtilityAnnotation::new("ideal", "t4", vec![10, 9, 8, 7]).unwrap();
    let u_ideal = extract_utility(&ideal, &utilities, None, 1.0);
    let u1 = extract_utility(&sys1, &utilities, None, 1.0);
    let u2 = extract_utility(&sys2, &utilities, None, 1.0);
    let (t4p1, t4r1) = precision_recall(&sys1, &ideal);
    check(
        (p1, r1, p2, r2) == (0.5, 0.5, 0.0, 0.0)
            && (a1, a2) == (0.8, 0.6)
            && (u1, u2, u_ideal) == (18.0, 15.0, 19.0)
            && (t4p1, t4r1) == (0.5, 0.5),
        format!("P/R {p1}/{r1} vs {p2}/{r2}; agreement {a1} vs {a2}; utility {u1}/{u_ideal} vs {u2}/{u_ideal}"),
    )
}

fn csis_credit() -> Outcome {
    // Table 7 in cluster order: article 1 = positions 1..4, article 2 = 5..8, article 3 = 9..12
    let ann = UtilityAnnotation::new("j", "t7", vec![10, 8, 2, 5, 10, 9, 3, 6, 5, 8, 4, 9]).unwrap();
    let graph = SubsumptionGraph {
        cluster_id: "t7".into(),
        edges: BTreeSet::from([(5, 1), (11, 12), (12, 11)]),
        agreement_threshold: 1,
    };
    let extract = set(&[1, 5]);
    let full = extract_utility(&extract, &ann, Some(&graph), 1.0);
    let none = extract_utility(&extract, &ann, Some(&graph), 0.0);
    check(full == 20.0 && none == 10.0, format!("E=1 → {full}, E=0 → {none}"))
}

fn csis_tallies() -> Outcome {
    let anns: Vec<SubsumptionAnnotation> = (1..=5)
        .map(|j| SubsumptionAnnotation::read(format!("{FIXTURES}/table8/judge{j}.json")).unwrap())
        .collect();
    let tally = csis_agreement_tally(&anns, 0);
    let signed: Vec<i64> = tally.rows[..7]
        .iter()
        .map(|r| match (r.plus, r.minus) {
            (Some(p), None) => p as i64,
            (None, Some(m)) => -(m as i64),
            _ => 0,
        })
        .collect();
    check(signed == [3, 3, -4, 4, -2, -4, -4], format!("{signed:?}"))
}

fn closed_form_random() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let judges = rng.gen_range(2..=6);
        let k = rng.gen_range(1..=n);
        let r = k as f64 / n as f64;
        let anns: Vec<UtilityAnnotation> = (0..judges)
            .map(|j| {
                let mut u: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=10)).collect();
                if u.iter().all(|&x| x == 0) {
                    u[rng.gen_range(0..n)] = rng.gen_range(1..=10);
                }
                UtilityAnnotation::new(format!("j{j}"), "c", u).unwrap()
            })
            .collect();
        assert_eq!(compression_size(n, r).unwrap(), k);
        let en = random_performance(&anns, r, RandomMode::Enumerate, 1_000_000).map_err(|e| e.to_string())?;
        let cf = random_performance(&anns, r, RandomMode::ClosedForm, 1_000_000).map_err(|e| e.to_string())?;
        worst = worst.max((en - cf).abs());
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-12 && elapsed < Duration::from_secs(5),
        format!("max |enumerate - closed form| = {worst:e} over 200 instances in {elapsed:?}"),
    )
}

fn flat_scores(values: &[f64]) -> Vec<SentenceScore> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| SentenceScore {
            position: i + 1,
            c: v,
            p: 0.0,
            f: 0.0,
            base: v,
            penalty: 0.0,
            final_score: v,
        })
        .collect()
}

fn single_doc(sentences: &[String]) -> Cluster {
    let ts = Utc.with_ymd_and_hms(2000, 1, 1, 0, 0, 0).unwrap();
    Cluster::new("rand", vec![Document::new("d", "AP", ts, sentences)]).unwrap()
}

fn redundancy_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vocab: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let mut ok = true;

    for _ in 0..1000 {
        let len = rng.gen_range(1..=15);
        let s: Vec<&str> = (0..len).map(|_| vocab[rng.gen_range(0..20)].as_str()).collect();
        let t: Vec<&str> = (0..rng.gen_range(1..=15)).map(|_| vocab[rng.gen_range(20..40)].as_str()).collect();
        ok &= overlap_ratio(&s, &s).unwrap() == 1.0;
        ok &= overlap_ratio(&s, &t).unwrap() == 0.0;
    }

    let mut max_rounds = 0;
    for case in 0..1000 {
        let n = rng.gen_range(1..=30);
        let sentences: Vec<String> = (0..n)
            .map(|_| {
                (0..rng.gen_range(1..=6))
                    .map(|_| vocab[rng.gen_range(0..8)].as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let cluster = single_doc(&sentences);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let scores = flat_scores(&values);
        let r = rng.gen_range(0.05..=1.0);
        let (ex, rounds) = redundancy_rerank_counted(&cluster, &scores, r).unwrap();
        max_rounds = max_rounds.max(rounds);
        ok &= rounds <= MAX_RERANK_ITERATIONS && ex.selected.len() == ex.k;

        // k = 1 never penalizes the top sentence
        let r1 = 1.0 / (2.0 * n as f64 + 1.0);
        ok &= redundancy_rerank_counted(&cluster, &scores, r1).unwrap().0.selected
            == extract(&cluster, &scores, r1).unwrap().selected;

        if case < 200 {
            let disjoint: Vec<String> = (0..n).map(|i| format!("only{i} solo{i}")).collect();
            let cluster = single_doc(&disjoint);
            ok &= redundancy_rerank_counted(&cluster, &scores, r).unwrap().0
                == extract(&cluster, &scores, r).unwrap();
        }
    }
    check(ok, format!("overlap identities hold; rerank max rounds {max_rounds}"))
}

fn sample_centroid() -> Outcome {
    let n_docs: u64 = 1 << 20;
    let rows = [("belgium", 15.5, 4.96), ("gia", 7.5, 8.39), ("algerian", 6.0, 6.36)];
    let df: BTreeMap<String, u64> = rows
        .iter()
        .map(|(w, _, idf)| (w.to_string(), (n_docs as f64 / 2f64.powf(*idf)).round() as u64))
        .collect();
    let model = IdfModel::from_parts(n_docs, df).unwrap();
    let text = |w: &str, times: usize| vec![w; times].join(" ");
    let ts = Utc.with_ymd_and_hms(1999, 5, 1, 0, 0, 0).unwrap();
    let cluster = Cluster::new(
        "A",
        vec![
            Document::new("a1", "AFP", ts, &[text("belgium", 16), text("gia", 8), text("algerian", 6)]),
            Document::new("a2", "UPI", ts, &[text("belgium", 15), text("gia", 7), text("algerian", 6)]),
        ],
    )
    .unwrap();
    let mut ok = true;
    let mut previous: Option<BTreeSet<String>> = None;
    for threshold in [0.0, 30.0, 40.0, 63.0, 70.0, 80.0] {
        let c = build_centroid(&cluster, &model, threshold);
        let keys: BTreeSet<String> = c.entries.keys().cloned().collect();
        if let Some(prev) = &previous {
            ok &= keys.is_subset(prev);
        }
        previous = Some(keys);
    }
    let centroid = build_centroid(&cluster, &model, 10.0);
    let belgium = centroid.entries["belgium"].weight;
    ok &= (belgium - 76.86).abs() <= 0.05;
    ok &= (centroid.entries["gia"].count - 7.5).abs() < 1e-12;
    check(ok, format!("weight(belgium) = {belgium:.3}; thresholds monotone"))
}

fn appendix_cluster_and_idf() -> (Cluster, IdfModel) {
    let cluster = read_cluster(format!("{FIXTURES}/algeria_cluster.json")).unwrap();
    let mut docs = Vec::new();
    for name in ["algeria.json", "background_a.json", "background_b.json"] {
        docs.extend(read_cluster(format!("{FIXTURES}/background/{name}")).unwrap().documents().iter().cloned());
    }
    (cluster, build_idf(&docs).unwrap())
}

fn desk_run() -> Outcome {
    let (cluster, idf) = appendix_cluster_and_idf();
    let centroid = build_centroid(&cluster, &idf, 0.0);
    let mut ok = cluster.n() == 20 && cluster.d() == 2;
    let mut lead_at_10 = Vec::new();
    for weights in [ScoreWeights::pure_centroid(), ScoreWeights::lead_centroid()] {
        for step in 1..=9 {
            let r = step as f64 / 10.0;
            let run = || {
                let scores = score_sentences(&cluster, &centroid, &weights).unwrap();
                extract(&cluster, &scores, r).unwrap()
            };
            let a = run();
            let b = run();
            ok &= a == b && a.selected.len() == compression_size(20, r).unwrap();
            if step == 1 && weights == ScoreWeights::lead_centroid() {
                lead_at_10 = a.selected.clone();
            }
        }
    }
    // first sentences of the two articles sit at positions 1 and 12
    ok &= lead_at_10.contains(&1) || lead_at_10.contains(&12);
    check(ok, format!("lead+centroid at 10% selects {lead_at_10:?}"))
}

/// Synthetic clusters whose judge utilities follow the density of the
/// cluster's own topic words, with a mild lead bias.
fn synthetic_comparison() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let general: Vec<String> = (0..60).map(|i| format!("gen{i}")).collect();
    let ts = |h: u32| Utc.with_ymd_and_hms(2000, 1, 1, h, 0, 0).unwrap();

    struct Synthetic {
        cluster: Cluster,
        utilities: Vec<Vec<u8>>,
    }
    let mut synthetic = Vec::new();
    let mut all_docs = Vec::new();
    for c in 0..20 {
        let topic: Vec<String> = (0..10).map(|i| format!("topic{c}x{i}")).collect();
        let d = rng.gen_range(2..=5);
        let mut docs = Vec::new();
        let mut densities = Vec::new();
        for doc in 0..d {
            let n_d = rng.gen_range(5..=12);
            let mut sentences = Vec::new();
            for j in 0..n_d {
                let lead = 1.0 - 0.5 * j as f64 / n_d as f64;
                let density = rng.gen_range(0.0..0.6) * lead;
                let len = rng.gen_range(6..=14);
                let words: Vec<&str> = (0..len)
                    .map(|_| {
                        if rng.gen_bool(density) {
                            topic[rng.gen_range(0..topic.len())].as_str()
                        } else {
                            general[rng.gen_range(0..general.len())].as_str()
                        }
                    })
                    .collect();
                let topical = words.iter().filter(|w| w.starts_with("topic")).count() as f64;
                densities.push(topical / len as f64);
                sentences.push(words.join(" "));
            }
            docs.push(Document::new(format!("c{c}d{doc}"), "SYN", ts(doc as u32), &sentences));
        }
        let utilities: Vec<Vec<u8>> = (0..3)
            .map(|_| {
                densities
                    .iter()
                    .map(|dens| (dens / 0.6 * 10.0 + rng.gen_range(-1.5..1.5)).round().clamp(0.0, 10.0) as u8)
                    .collect()
            })
            .collect();
        all_docs.extend(docs.iter().cloned());
        synthetic.push(Synthetic { cluster: Cluster::new(format!("syn{c}"), docs).unwrap(), utilities });
    }
    let idf = build_idf(&all_docs).unwrap();
    let config = EvalConfig { precision: Precision::Exact, ..EvalConfig::default() };

    let (mut mead_d, mut random_d) = (Vec::new(), Vec::new());
    let mut skipped = 0;
    for syn in &synthetic {
        let anns: Vec<UtilityAnnotation> = syn
            .utilities
            .iter()
            .enumerate()
            .map(|(j, u)| UtilityAnnotation::new(format!("j{j}"), syn.cluster.cluster_id(), u.clone()).unwrap())
            .collect();
        let centroid = build_centroid(&syn.cluster, &idf, 0.0);
        let scores = score_sentences(&syn.cluster, &centroid, &ScoreWeights::lead_centroid()).unwrap();
        for step in 1..=9 {
            let r = step as f64 / 10.0;
            let mead_extract = extract(&syn.cluster, &scores, r).unwrap().positions();
            let k = compression_size(syn.cluster.n(), r).unwrap();
            let noise: Vec<f64> = (0..syn.cluster.n()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let random_extract: BTreeSet<usize> = top_k_positions(&noise, k).into_iter().collect();
            let systems = vec![("mead".to_string(), mead_extract), ("random".to_string(), random_extract)];
            match evaluate(&anns, &systems, None, &EvalConfig { r, ..config.clone() }) {
                Ok(report) => {
                    mead_d.push(report.d["mead"]);
                    random_d.push(report.d["random"]);
                }
                Err(_) => skipped += 1,
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m, r) = (mean(&mead_d), mean(&random_d));
    check(
        !mead_d.is_empty() && m >= r,
        format!("mean D lead+centroid = {m:.3}, random scores = {r:.3} over {} runs ({skipped} skipped, J <= R)", mead_d.len()),
    )
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("worked example: J matrix, J_i, mean J (Table 5 → Table 6)", worked_example_agreement),
        ("enumeration: S over all 2-subsets and R", enumeration_scores),
        ("normalization: D({14}), D({24}), D({12}) > 1", normalization),
        ("legacy metrics: P&R, percent agreement, utility credit", legacy_metrics),
        ("CSIS credit with E = 1 and E = 0", csis_credit),
        ("subsumption agreement tallies A1-1..A1-7", csis_tallies),
        ("closed-form R equals enumeration on 200 instances", closed_form_random),
        ("redundancy overlap and rerank properties", redundancy_properties),
        ("sample centroid weight and threshold monotonicity", sample_centroid),
        ("end-to-end desk run over the appendix articles", desk_run),
        ("synthetic corpus: lead+centroid D >= random-score D", synthetic_comparison),
    ];
    let mut failures = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                println!("FAIL  {name}: {detail}");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
