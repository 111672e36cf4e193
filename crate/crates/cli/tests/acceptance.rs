//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use et4el::category::{expand_category, CategoryVocab, PrepositionList};
use et4el::eval::{default_buckets, typing_metrics};
use et4el::linker::{link, score_candidates, EntityCategoryIndex, LinkConfig};
use et4el::prior::{CandidateSet, PriorTable};
use et4el::typing::{FeatureVector, Featurizer, LabelSet, TypePosterior, TypingModel};
use et4el::{io, synth};
use et4el_cli::stages::{files, pipeline, PipelineArgs};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn vocab(n: usize) -> CategoryVocab {
    CategoryVocab::new((0..n).map(|i| format!("c{i}")).collect()).unwrap()
}

fn posterior(p: &[f64]) -> TypePosterior {
    TypePosterior { probs: p.to_vec() }
}

fn candidates(items: &[(&str, f64)]) -> CandidateSet {
    CandidateSet::new(
        "m",
        items.iter().map(|(e, p)| (e.to_string(), *p)).collect(),
    )
}

// ---------------------------------------------------------------- 1

fn big_bang() -> Outcome {
    // Big_Bang owns categories 0 and 1, Big_Bang_Theory owns 2 and 3.
    let t = posterior(&[0.875, 0.875, 0.5, 0.1]);
    let mut index = EntityCategoryIndex::new();
    index.insert("Big_Bang", vec![0, 1]);
    index.insert("Big_Bang_Theory", vec![2, 3]);
    // The prior alone would pick the TV show.
    let set = candidates(&[("Big_Bang", 0.3), ("Big_Bang_Theory", 0.7)]);

    let start = Instant::now();
    let p = link(&t, &set, &index, &LinkConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let score = |e: &str| p.scores.iter().find(|(c, _)| c == e).map(|(_, s)| *s);
    ensure!(
        score("Big_Bang") == Some(1.75),
        "Big_Bang scored {:?}",
        score("Big_Bang")
    );
    ensure!(
        score("Big_Bang_Theory") == Some(0.6),
        "Big_Bang_Theory scored {:?}",
        score("Big_Bang_Theory")
    );
    ensure!(
        p.chosen == "Big_Bang" && !p.used_backoff,
        "chose {} (backoff {})",
        p.chosen,
        p.used_backoff
    );
    ensure!(elapsed < Duration::from_millis(1), "link took {elapsed:?}");
    Ok(format!("1.75 vs 0.6 -> Big_Bang in {elapsed:?}"))
}

// ---------------------------------------------------------------- 2

fn expansion_golden() -> Outcome {
    let preps = PrepositionList::default();
    let set = |items: &[&str]| items.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    let cities = "Cities in New York (state)";
    let places = "Populated places established in 1624";

    let a = expand_category(cities, &preps);
    let b = expand_category(places, &preps);
    ensure!(
        a == set(&["Cities", "in New York (state)", cities]),
        "{cities:?} -> {a:?}"
    );
    ensure!(
        b == set(&["Populated", "places", "established", "in 1624", places]),
        "{places:?} -> {b:?}"
    );
    let originals = set(&[cities, places]);
    let added: BTreeSet<String> = a
        .union(&b)
        .filter(|c| !originals.contains(*c))
        .cloned()
        .collect();
    let listed = set(&[
        "Cities",
        "in New York (state)",
        "Populated",
        "places",
        "established",
        "in 1624",
    ]);
    ensure!(added == listed, "new categories {added:?}");
    Ok("both examples match exactly".into())
}

// ---------------------------------------------------------------- 3

/// Random posterior, index and candidate set: at most 50 categories and 10
/// candidates; some candidates have no categories or no index entry.
fn random_instance(
    rng: &mut ChaCha8Rng,
) -> (
    TypePosterior,
    EntityCategoryIndex,
    CandidateSet,
    Vec<Vec<bool>>,
) {
    let n = rng.gen_range(1..=50);
    let k = rng.gen_range(1..=10);
    let t = posterior(&(0..n).map(|_| rng.gen::<f64>()).collect::<Vec<_>>());
    let mut index = EntityCategoryIndex::new();
    let mut member = Vec::new();
    let mut cands = Vec::new();
    for c in 0..k {
        let name = format!("E{c}");
        let owns: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        if rng.gen_bool(0.9) {
            index.insert(
                name.clone(),
                (0..n as u32).filter(|&j| owns[j as usize]).collect(),
            );
            member.push(owns);
        } else {
            member.push(vec![false; n]);
        }
        cands.push((name, rng.gen::<f64>()));
    }
    (t, index, CandidateSet::new("m", cands), member)
}

fn scoring_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for case in 0..1_000 {
        let (t, index, set, member) = random_instance(&mut rng);
        let got = score_candidates(&t, &set, &index);
        ensure!(
            got.len() == set.len(),
            "case {case}: {} scores for {} candidates",
            got.len(),
            set.len()
        );
        for (e, s) in &got {
            let c: usize = e[1..].parse().unwrap();
            let mut want = 0.0;
            for (j, &owned) in member[c].iter().enumerate() {
                if owned {
                    want += t.probs[j];
                }
            }
            worst = worst.max((s - want).abs());
            ensure!(
                (s - want).abs() <= 1e-12,
                "case {case}: {e} scored {s}, oracle {want}"
            );
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("1000 instances, max |diff| {worst:e}, {elapsed:?}"))
}

// ---------------------------------------------------------------- 4

/// Dense copy of a small model's parameters: `w[k][j]` and `b[k]`.
struct Dense {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Summed binary cross-entropy plus `l2 / 2 * ||W||^2`, written out directly.
fn dense_loss(p: &Dense, batch: &[(FeatureVector, LabelSet)], l2: f64) -> f64 {
    let mut loss = 0.0;
    for (x, labels) in batch {
        for k in 0..p.b.len() {
            let mut z = p.b[k];
            for (j, v) in x.iter() {
                z += p.w[k][j as usize] * v;
            }
            let y = if labels.contains(&(k as u32)) {
                1.0
            } else {
                0.0
            };
            loss += softplus(z) - y * z;
        }
    }
    let sq: f64 = p.w.iter().flatten().map(|w| w * w).sum();
    loss + 0.5 * l2 * sq
}

fn gradient_check() -> Outcome {
    const STEP: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = rng.gen_range(1..=5);
        let dim = rng.gen_range(2..=12u32);
        let l2 = if rng.gen_bool(0.5) {
            rng.gen_range(0.0..0.5)
        } else {
            0.0
        };
        let mut model = TypingModel::new(vocab(n), Featurizer::new(dim, 0).unwrap());
        let mut dense = Dense {
            w: vec![vec![0.0; dim as usize]; n],
            b: vec![0.0; n],
        };
        for k in 0..n {
            dense.b[k] = rng.gen_range(-1.0..1.0);
            model.set_bias(k as u32, dense.b[k]);
            for j in 0..dim {
                let w = rng.gen_range(-1.0..1.0);
                dense.w[k][j as usize] = w;
                model.set_weight(k as u32, j, w);
            }
        }
        let batch: Vec<(FeatureVector, LabelSet)> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let x = FeatureVector::from_pairs(
                    (0..rng.gen_range(1..=4))
                        .map(|_| (rng.gen_range(0..dim), rng.gen_range(-2.0..2.0))),
                )
                .unwrap();
                let y: LabelSet = (0..n as u32).filter(|_| rng.gen_bool(0.4)).collect();
                (x, y)
            })
            .collect();

        let lg = model.loss_and_grad(&batch, l2).map_err(|e| e.to_string())?;
        let base = dense_loss(&dense, &batch, l2);
        ensure!(
            (lg.loss() - base).abs() <= 1e-9 * base.abs().max(1.0),
            "case {case}: loss {} vs oracle {base}",
            lg.loss()
        );

        // Analytic and numeric gradients over every parameter.
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for k in 0..n {
            let saved = dense.b[k];
            dense.b[k] = saved + STEP;
            let up = dense_loss(&dense, &batch, l2);
            dense.b[k] = saved - STEP;
            let down = dense_loss(&dense, &batch, l2);
            dense.b[k] = saved;
            analytic.push(lg.grad.bias[k]);
            numeric.push((up - down) / (2.0 * STEP));
            for j in 0..dim as usize {
                let saved = dense.w[k][j];
                dense.w[k][j] = saved + STEP;
                let up = dense_loss(&dense, &batch, l2);
                dense.w[k][j] = saved - STEP;
                let down = dense_loss(&dense, &batch, l2);
                dense.w[k][j] = saved;
                analytic.push(lg.grad.columns.get(&(j as u32)).map_or(0.0, |c| c[k]));
                numeric.push((up - down) / (2.0 * STEP));
            }
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = norm(&analytic) + norm(&numeric);
        let rel = if scale == 0.0 { 0.0 } else { diff / scale };
        worst = worst.max(rel);
        ensure!(rel <= 1e-4, "case {case}: relative error {rel:e}");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "100 models, max relative error {worst:e}, {elapsed:?}"
    ))
}

// ---------------------------------------------------------------- 5

fn prior_reproduction() -> Outcome {
    let mut table = PriorTable::new();
    table.add("Ant", "Ant", 960);
    table.add("Ant", "Apache_Ant", 8);
    table.add("Ant", "Ant_(band)", 32);
    let p_ant = table.probability("Ant", "Ant");
    let p_apache = table.probability("Ant", "Apache_Ant");
    ensure!(p_ant == 0.96, "p(Ant|Ant) = {p_ant}");
    ensure!(p_apache == 0.008, "p(Apache_Ant|Ant) = {p_apache}");
    let set = table.candidates("Ant", 0.05);
    ensure!(
        !set.contains("Apache_Ant"),
        "Apache_Ant survived clipping: {set:?}"
    );
    ensure!(set.entities().collect::<Vec<_>>() == ["Ant"], "{set:?}");
    Ok("0.96 / 0.008, Apache_Ant clipped at 0.05".into())
}

// ---------------------------------------------------------------- 6

fn synthetic_end_to_end() -> Outcome {
    let config = synth::SynthConfig::default();
    ensure!(
        config.train_sentences == 5_000 && config.categories == 50 && config.test_examples() == 300,
        "unexpected fixture shape {config:?}"
    );
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path();
    let corpus = synth::generate(&config).map_err(|e| e.to_string())?;
    corpus.write(data).map_err(|e| e.to_string())?;

    let start = Instant::now();
    let mut args = PipelineArgs::new(
        data.join(synth::ARTICLES_FILE),
        data.join(synth::CATEGORIES_FILE),
        data.join(synth::TEST_FILE),
        data.join("work"),
    );
    args.anchor_counts = vec![data.join(synth::ANCHORS_FILE)];
    args.seed = 13;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let report = pool
        .install(|| pipeline(&args))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    // Test mention-entity pairs never occur as training anchors.
    let links =
        io::read_mentions(&data.join("work").join(files::LINKS)).map_err(|e| e.to_string())?;
    let seen: BTreeSet<(&str, Option<&str>)> = links
        .iter()
        .map(|l| (l.mention.as_str(), l.entity.as_deref()))
        .collect();
    ensure!(
        corpus
            .test
            .iter()
            .all(|t| !seen.contains(&(t.mention.as_str(), t.entity.as_deref()))),
        "a test pair occurs in training"
    );
    ensure!(
        report.examples == 300,
        "{} evaluated examples",
        report.examples
    );
    let (acc, mfe) = (
        report.linking_accuracy,
        report.most_frequent_entity_accuracy,
    );
    ensure!(mfe <= 0.60, "most-frequent-entity baseline {mfe}");
    ensure!(acc >= 0.90 && acc > mfe, "accuracy {acc} vs baseline {mfe}");
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!(
        "accuracy {acc:.3} vs most-frequent-entity {mfe:.3}, {elapsed:?}"
    ))
}

// ---------------------------------------------------------------- 7

fn et4el(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_et4el"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let data = root.join("data");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    et4el(&[
        "synth",
        "--out",
        &s(&data),
        "--train-sentences",
        "1500",
        "--test-surfaces",
        "30",
    ])?;
    for run in ["a", "b"] {
        let work = root.join(run);
        et4el(&[
            "pipeline",
            "--articles",
            &s(&data.join(synth::ARTICLES_FILE)),
            "--categories",
            &s(&data.join(synth::CATEGORIES_FILE)),
            "--test",
            &s(&data.join(synth::TEST_FILE)),
            "--anchor-counts",
            &s(&data.join(synth::ANCHORS_FILE)),
            "--work-dir",
            &s(&work),
            "--seed",
            "13",
            "--workers",
            "1",
        ])?;
    }
    let outputs = [
        files::MODEL,
        files::PREDICTIONS,
        files::REPORT,
        files::REPORT_TEXT,
    ];
    for name in outputs {
        let a = std::fs::read(root.join("a").join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(root.join("b").join(name)).map_err(|e| e.to_string())?;
        ensure!(!a.is_empty(), "{name} is empty");
        ensure!(a == b, "{name} differs between runs");
    }
    Ok(format!("{} identical across two runs", outputs.join(", ")))
}

// ---------------------------------------------------------------- 8

fn metric_fixture() -> Outcome {
    // Ids are rank - 1. A = rank 1, B = rank 2, F = rank 50 (never used),
    // C = rank 150, D = rank 600, E = rank 10002.
    let (a, b, c, d, e) = (0u32, 1u32, 149u32, 599u32, 10_001u32);
    let v = vocab(10_002);
    let post = |on: &[u32]| {
        let mut p = vec![0.1; v.len()];
        p[49] = 0.4999;
        for &i in on {
            p[i as usize] = 0.9;
        }
        p
    };
    let mut third = post(&[]);
    third[e as usize] = 0.5;
    let predictions = vec![
        posterior(&post(&[a, c, d])),
        posterior(&post(&[a, b])),
        posterior(&third),
        posterior(&post(&[a])),
    ];
    let golds: Vec<LabelSet> = vec![vec![a, b, c], vec![a, d], vec![b, e], vec![c]];
    let m = typing_metrics(&predictions, &golds, &v, 0.5, &default_buckets())
        .map_err(|e| e.to_string())?;

    // A: tp 2 fp 1 fn 0. B: tp 0 fp 1 fn 2. C: tp 1 fp 0 fn 1.
    // D: tp 0 fp 1 fn 1. E: tp 1 fp 0 fn 0.
    let f1 = |p: f64, r: f64| {
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    };
    let expected: [(&str, usize, f64, f64, f64); 5] = [
        ("total", 5, 8.0 / 15.0, 0.5, 16.0 / 31.0),
        ("1-100", 2, 1.0 / 3.0, 0.5, 0.4),
        ("101-500", 1, 1.0, 0.5, 2.0 / 3.0),
        ("501-10000", 1, 0.0, 0.0, 0.0),
        ("10001+", 1, 1.0, 1.0, 1.0),
    ];
    ensure!(
        m.buckets.len() == expected.len(),
        "{} buckets",
        m.buckets.len()
    );
    for (row, (label, cats, p, r, f)) in m.buckets.iter().zip(expected) {
        ensure!(
            f1(p, r) == f || (f1(p, r) - f).abs() < 1e-15,
            "bad fixture for {label}"
        );
        ensure!(row.label == label && row.categories == cats, "{row:?}");
        for (name, got, want) in [
            ("P", row.precision, p),
            ("R", row.recall, r),
            ("F1", row.f1, f),
        ] {
            ensure!(
                (got - want).abs() <= 1e-15,
                "{label} {name}: {got} vs {want}"
            );
        }
    }
    ensure!(
        !m.per_category.contains_key("c49"),
        "never-occurring category was scored"
    );
    Ok("5 bucket rows match hand-computed P/R/F1".into())
}

// ---------------------------------------------------------------- 9

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    // Adding a category never lowers a candidate's score and leaves the others alone.
    for case in 0..200 {
        let (t, mut index, set, _) = random_instance(&mut rng);
        let before = score_candidates(&t, &set, &index);
        let target = format!("E{}", rng.gen_range(0..set.len()));
        let mut ids = index.get(&target).unwrap_or_default().to_vec();
        ids.push(rng.gen_range(0..t.len() as u32));
        index.insert(target.clone(), ids);
        let after = score_candidates(&t, &set, &index);
        for ((e, s0), (_, s1)) in before.iter().zip(&after) {
            ensure!(
                if *e == target { s1 >= s0 } else { s1 == s0 },
                "monotonicity case {case}: {e} {s0} -> {s1}"
            );
        }
    }

    // Scaling every posterior by the same positive factor keeps the argmax.
    let exact = LinkConfig {
        backoff_min_cats: 0,
        tie_eps: 0.0,
        ..Default::default()
    };
    for case in 0..200 {
        let (t, index, set, _) = random_instance(&mut rng);
        let c = rng.gen_range(0.01..=1.0);
        let scaled = posterior(&t.probs.iter().map(|p| p * c).collect::<Vec<_>>());
        let a = link(&t, &set, &index, &exact).map_err(|e| e.to_string())?;
        let b = link(&scaled, &set, &index, &exact).map_err(|e| e.to_string())?;
        ensure!(
            a.chosen == b.chosen,
            "scaling case {case}: {} vs {}",
            a.chosen,
            b.chosen
        );
    }

    // A higher threshold keeps a subset of the candidates.
    for case in 0..200 {
        let mut table = PriorTable::new();
        for e in 0..rng.gen_range(1..12) {
            table.add("m", &format!("E{e}"), rng.gen_range(1..100));
        }
        let lo = rng.gen_range(0.0..0.5);
        let hi = rng.gen_range(lo..=1.0);
        let small = table.candidates("m", hi);
        let large = table.candidates("m", lo);
        ensure!(
            small.entities().all(|e| large.contains(e)),
            "threshold case {case}"
        );
        ensure!(
            small.candidates.iter().all(|(_, p)| *p >= hi),
            "threshold case {case}: below {hi}"
        );
    }

    // Accumulation merges associatively and matches a single pass.
    for case in 0..200 {
        let shard = |rng: &mut ChaCha8Rng| -> Vec<(String, String)> {
            (0..rng.gen_range(0..20))
                .map(|_| {
                    (
                        format!("m{}", rng.gen_range(0..4)),
                        format!("E{}", rng.gen_range(0..5)),
                    )
                })
                .collect()
        };
        let (x, y, z) = (shard(&mut rng), shard(&mut rng), shard(&mut rng));
        let acc = |v: &[(String, String)]| PriorTable::accumulate(v.iter().map(|(m, e)| (m, e)));
        let left = acc(&x).merge(acc(&y)).merge(acc(&z));
        let right = acc(&x).merge(acc(&y).merge(acc(&z)));
        let all: Vec<_> = x.iter().chain(&y).chain(&z).cloned().collect();
        ensure!(left == right && left == acc(&all), "merge case {case}");
    }
    Ok("4 properties x 200 instances".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("big bang over big bang theory", big_bang),
        ("category expansion golden tests", expansion_golden),
        ("scoring oracle equivalence", scoring_oracle),
        ("gradient check", gradient_check),
        ("prior reproduction", prior_reproduction),
        ("synthetic end-to-end benchmark", synthetic_end_to_end),
        ("pipeline determinism", determinism),
        ("typing metric correctness", metric_fixture),
        ("invariant suite", invariants),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .map(String::as_str)
                .or(p.downcast_ref::<&str>().copied())
                .unwrap_or("unknown payload");
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
