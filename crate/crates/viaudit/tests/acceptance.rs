//! Acceptance suite: one test per criterion, each printing a pass line and
//! holding to its runtime budget.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use viaudit::analyze;
use viaudit::inject::{self, ContentAnalysis, ErrorCategory, ErrorTaxonomy, Label};
use viaudit::select::{self, RankKey, Rational, WeightScheme};
use viaudit::tagparse::{
    parse_annotated, strip_tags, verify_word_preservation, AnnotatedResponse, Segment, SegmentKind,
};

fn finish(name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < budget,
        "{name} exceeded its runtime budget: {elapsed:?} >= {budget:?}"
    );
    println!("acceptance {name}: PASS in {elapsed:?}");
}

const WORDS: [&str; 12] = [
    "alpha", "beta", "gamma,", "delta.", "red", "cat", "42", "tree", "light,", "soft", "era.",
    "stamp",
];

fn random_segments(rng: &mut ChaCha8Rng) -> Vec<Segment> {
    let n = rng.random_range(0..8usize);
    (0..n)
        .map(|_| {
            let kind = match rng.random_range(0..3u8) {
                0 => SegmentKind::Plain,
                1 => SegmentKind::Infer,
                _ => SegmentKind::Know,
            };
            let words = rng.random_range(0..4usize);
            let text = (0..words)
                .map(|_| WORDS[rng.random_range(0..WORDS.len())])
                .collect::<Vec<_>>()
                .join(" ");
            Segment::new(kind, text)
        })
        .collect()
}

#[test]
fn criterion_1_annotation_grammar() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let a = AnnotatedResponse::new(random_segments(&mut rng)).unwrap();
        let tagged = a.to_tagged_string();
        let reparsed = parse_annotated(&tagged).unwrap();
        assert_eq!(reparsed, a, "round-trip failed for {tagged:?}");
        assert_eq!(reparsed.to_tagged_string(), tagged);
        let concat: String = a.segments().iter().map(|s| s.text.as_str()).collect();
        assert_eq!(strip_tags(&a), concat);
    }

    let ex1 = parse_annotated(
        "The lighting in the room is soft, <INFER>creating a cozy atmosphere</INFER>. \
         <INFER>The design suggests it is from the Victorian era</INFER>.",
    )
    .unwrap();
    let kinds: Vec<SegmentKind> = ex1.segments().iter().map(|s| s.kind).collect();
    assert_eq!(
        kinds,
        vec![
            SegmentKind::Plain,
            SegmentKind::Infer,
            SegmentKind::Plain,
            SegmentKind::Infer,
            SegmentKind::Plain
        ]
    );
    assert_eq!(
        ex1.segments_of_kind(SegmentKind::Infer),
        vec!["creating a cozy atmosphere", "The design suggests it is from the Victorian era"]
    );

    let ex2 = parse_annotated(
        "This is a 1976 postage stamp from Hungary, <KNOW>a country in Central Europe</KNOW>.",
    )
    .unwrap();
    assert_eq!(
        ex2.segments(),
        &[
            Segment::new(SegmentKind::Plain, "This is a 1976 postage stamp from Hungary, "),
            Segment::new(SegmentKind::Know, "a country in Central Europe"),
            Segment::new(SegmentKind::Plain, "."),
        ]
    );

    let ex3 = parse_annotated("The image shows a can of Coca-Cola.").unwrap();
    assert_eq!(
        ex3.segments(),
        &[Segment::new(SegmentKind::Plain, "The image shows a can of Coca-Cola.")]
    );

    finish("1 (annotation grammar)", started, Duration::from_secs(1));
}

#[test]
fn criterion_2_word_preservation() {
    let started = Instant::now();

    let original = "The lighting in the room is soft, creating a cozy atmosphere. \
                    The design suggests it is from the Victorian era.";
    let marked = "The lighting in the room is soft, <INFER>creating a cozy atmosphere</INFER>. \
                  <INFER>The design suggests it is from the Victorian era</INFER>.";
    let report = verify_word_preservation(original, &parse_annotated(marked).unwrap());
    assert!(report.pass, "documented pair diverged: {:?}", report.divergence);

    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for round in 0..500 {
        let n_tokens = rng.random_range(3..30usize);
        let tokens: Vec<&str> =
            (0..n_tokens).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
        let original = tokens.join(" ");

        let mutate_at = rng.random_range(0..n_tokens);
        let mut mutated = tokens.clone();
        mutated[mutate_at] = "MUTATED";

        // Wrap random non-overlapping runs of the mutated token stream.
        let mut segments: Vec<Segment> = Vec::new();
        let mut i = 0usize;
        while i < mutated.len() {
            let run = rng.random_range(1..=3usize).min(mutated.len() - i);
            let text = mutated[i..i + run].join(" ");
            let kind = match rng.random_range(0..3u8) {
                0 => SegmentKind::Plain,
                1 => SegmentKind::Infer,
                _ => SegmentKind::Know,
            };
            if !segments.is_empty() {
                segments.push(Segment::new(SegmentKind::Plain, " "));
            }
            segments.push(Segment::new(kind, text));
            i += run;
        }
        let annotated = AnnotatedResponse::new(segments).unwrap();
        let report = verify_word_preservation(&original, &annotated);
        assert!(!report.pass, "round {round}: mutation not detected");
        let divergence = report.divergence.expect("failing report carries divergence");
        assert_eq!(divergence.index, mutate_at, "round {round}");
        assert_eq!(divergence.annotated.as_deref(), Some("MUTATED"), "round {round}");
    }

    finish("2 (word preservation)", started, Duration::from_secs(1));
}

#[test]
fn criterion_3_cascade_statistics() {
    let started = Instant::now();
    let draws = 100_000usize;

    let fraction_of = |analysis: ContentAnalysis, category: ErrorCategory, seed: u64| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0usize;
        for _ in 0..draws {
            if inject::choose_category(analysis, &mut rng) == category {
                hits += 1;
            }
        }
        hits as f64 / draws as f64
    };

    let knowledge = fraction_of(
        ContentAnalysis { contains_reasoning: true, contains_knowledge: true },
        ErrorCategory::Knowledge,
        301,
    );
    assert!((knowledge - 0.8).abs() < 0.005, "knowledge fraction {knowledge}");

    let reasoning = fraction_of(
        ContentAnalysis { contains_reasoning: true, contains_knowledge: false },
        ErrorCategory::Reasoning,
        302,
    );
    assert!((reasoning - 0.6).abs() < 0.005, "reasoning fraction {reasoning}");

    let consistency = fraction_of(
        ContentAnalysis { contains_reasoning: false, contains_knowledge: false },
        ErrorCategory::Consistency,
        303,
    );
    assert_eq!(consistency, 1.0, "no-flag inputs must always take the default branch");

    // Consistency subtype uniformity: chi-square over the 5 subtypes.
    let taxonomy = ErrorTaxonomy::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(304);
    let mut counts = std::collections::HashMap::<&str, usize>::new();
    let subtype_draws = 50_000usize;
    for _ in 0..subtype_draws {
        let subtype = inject::choose_consistency_subtype(&taxonomy, &mut rng);
        *counts.entry(subtype.code.as_str()).or_default() += 1;
    }
    assert_eq!(counts.len(), 5);
    let expected = subtype_draws as f64 / 5.0;
    let chi2: f64 = counts
        .values()
        .map(|&obs| {
            let diff = obs as f64 - expected;
            diff * diff / expected
        })
        .sum();
    // p > 0.01 for df = 4 means chi2 below the 99th-percentile point.
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let critical = ChiSquared::new(4.0).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= critical {critical}");

    finish("3 (cascade statistics)", started, Duration::from_secs(5));
}

fn random_audit_record(rng: &mut ChaCha8Rng, id: String) -> viaudit::corpus::AuditRecord {
    use viaudit::corpus::{AuditRecord, Explanations, Provenance};
    let (s_l, s_k, s_v) = (
        rng.random_range(1..=5u8),
        rng.random_range(1..=5u8),
        rng.random_range(1..=5u8),
    );
    AuditRecord {
        id,
        s_l,
        s_k,
        s_v,
        overall: (s_l + s_k + s_v) as f64 / 3.0,
        explanations: Explanations::default(),
        annotated_response: String::new(),
        visual_summary: String::new(),
        provenance: Provenance::default(),
    }
}

#[test]
fn criterion_4_aggregation_and_selection() {
    let started = Instant::now();
    let weights = WeightScheme::default();

    // Every integer triple aggregates to the exact mean.
    for s_l in 1..=5u8 {
        for s_k in 1..=5u8 {
            for s_v in 1..=5u8 {
                let got = select::aggregate(s_l, s_k, s_v, &weights).unwrap();
                let want = Rational::new((s_l + s_k + s_v) as i128, 3);
                assert_eq!(got, want, "mean mismatch at ({s_l},{s_k},{s_v})");
            }
        }
    }

    // Top-100 of 1,000 random records vs a full-sort oracle on integer keys.
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let records: Vec<_> =
        (0..1000).map(|i| random_audit_record(&mut rng, format!("r{i:04}"))).collect();
    let selected = select::rank_and_select(&records, &weights, 100).unwrap();
    let mut oracle: Vec<(i32, u8, u8, &str)> = records
        .iter()
        .map(|r| ((r.s_l + r.s_k + r.s_v) as i32, r.s_l, r.s_v, r.id.as_str()))
        .collect();
    oracle.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then_with(|| b.1.cmp(&a.1))
            .then_with(|| b.2.cmp(&a.2))
            .then_with(|| a.3.cmp(b.3))
    });
    let oracle_top: Vec<&str> = oracle.iter().take(100).map(|e| e.3).collect();
    assert_eq!(selected, oracle_top);

    // Argmax invariance: positive scaling of every overall preserves order.
    for case in 0..10_000 {
        let n = rng.random_range(2..14usize);
        let ids: Vec<String> = (0..n).map(|j| format!("c{case}x{j}")).collect();
        let keys: Vec<RankKey> = (0..n)
            .map(|j| RankKey {
                overall: Rational::new(rng.random_range(3..=15i64) as i128, 3),
                s_l: rng.random_range(1..=5u8),
                s_v: rng.random_range(1..=5u8),
                id: &ids[j],
            })
            .collect();
        let scale = Rational::new(rng.random_range(1..40i64) as i128, rng.random_range(1..40i64) as i128);
        let scaled: Vec<RankKey> = keys
            .iter()
            .cloned()
            .map(|mut k| {
                k.overall *= scale;
                k
            })
            .collect();
        assert_eq!(select::sorted_ids(keys), select::sorted_ids(scaled), "case {case}");
    }

    // Monotonicity: raising one record's s_l never lowers its rank.
    for case in 0..10_000 {
        let n = rng.random_range(2..12usize);
        let mut records: Vec<_> =
            (0..n).map(|j| random_audit_record(&mut rng, format!("m{case}x{j}"))).collect();
        let target = rng.random_range(0..n);
        if records[target].s_l == 5 {
            records[target].s_l = 4;
        }
        let id = records[target].id.clone();
        let before = select::rank_and_select(&records, &weights, n).unwrap();
        let before_pos = before.iter().position(|x| *x == id).unwrap();
        records[target].s_l += 1;
        let after = select::rank_and_select(&records, &weights, n).unwrap();
        let after_pos = after.iter().position(|x| *x == id).unwrap();
        assert!(after_pos <= before_pos, "case {case}: rank worsened {before_pos} -> {after_pos}");
    }

    finish("4 (aggregation and selection)", started, Duration::from_secs(5));
}

/// Two-term KL evaluation used as the independent oracle.
fn jsd_oracle(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    let kl = |x: &[f64]| -> f64 {
        x.iter()
            .zip(&m)
            .filter(|(xi, _)| **xi > 0.0)
            .map(|(xi, mi)| xi * (xi / mi).log2())
            .sum()
    };
    0.5 * kl(p) + 0.5 * kl(q)
}

fn auc_oracle(labels: &[Label], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, li) in labels.iter().enumerate() {
        if *li != Label::Pristine {
            continue;
        }
        for (j, lj) in labels.iter().enumerate() {
            if *lj != Label::Injected {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

#[test]
fn criterion_5_statistics_oracles() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(505);

    // JSD against the direct two-term KL evaluation.
    let edges: Vec<f64> = (0..=8).map(|i| 1.0 + 0.5 * i as f64).collect();
    for round in 0..1000 {
        let raw_p: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let raw_q: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let norm = |raw: &[f64]| {
            let total: f64 = raw.iter().sum();
            raw.iter().map(|x| x / total).collect::<Vec<f64>>()
        };
        let p = norm(&raw_p);
        let q = norm(&raw_q);
        let dist_p = analyze::ScoreDistribution { edges: edges.clone(), masses: p.clone() };
        let dist_q = analyze::ScoreDistribution { edges: edges.clone(), masses: q.clone() };
        let got = analyze::js_divergence(&dist_p, &dist_q).unwrap();
        let want = jsd_oracle(&p, &q);
        assert!((got - want).abs() < 1e-12, "round {round}: {got} vs {want}");
    }

    let p = analyze::histogram(&[1.25, 2.25, 3.25], 8).unwrap();
    assert_eq!(analyze::js_divergence(&p, &p).unwrap(), 0.0);
    let lo = analyze::histogram(&[1.2, 1.4], 8).unwrap();
    let hi = analyze::histogram(&[4.8, 5.0], 8).unwrap();
    let disjoint = analyze::js_divergence(&lo, &hi).unwrap();
    assert!((disjoint - 1.0).abs() < 1e-12, "disjoint JSD {disjoint}");

    // AUC against exhaustive pair enumeration for every size up to 200.
    for n in 2..=200usize {
        let mut labels = vec![Label::Pristine, Label::Injected];
        for _ in 2..n {
            labels.push(if rng.random::<bool>() { Label::Pristine } else { Label::Injected });
        }
        let scores: Vec<f64> =
            (0..n).map(|_| rng.random_range(3..=15i32) as f64 / 3.0).collect();
        let got = analyze::auc(&labels, &scores).unwrap();
        let want = auc_oracle(&labels, &scores);
        assert!((got - want).abs() < 1e-12, "n={n}: {got} vs {want}");
    }

    let labels = vec![Label::Pristine, Label::Pristine, Label::Injected, Label::Injected];
    assert_eq!(analyze::auc(&labels, &[5.0, 4.5, 2.0, 1.0]).unwrap(), 1.0);
    assert_eq!(analyze::auc(&labels, &[3.0, 3.0, 3.0, 3.0]).unwrap(), 0.5);

    finish("5 (statistics oracles)", started, Duration::from_secs(10));
}

fn run_cli(args: &[&str]) -> std::process::Output {
    let exe = env!("CARGO_BIN_EXE_viaudit");
    let output = std::process::Command::new(exe).args(args).output().expect("binary runs");
    assert!(
        output.status.success(),
        "viaudit {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn read_bytes(path: &std::path::Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {path:?}: {e}"))
}

#[test]
fn criterion_6_end_to_end_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let image_dir = dir.path().join("images");
    std::fs::create_dir(&image_dir).unwrap();

    let fixtures = common::fixture_samples(20, Some(&image_dir));
    let corpus_path = dir.path().join("corpus.jsonl");
    viaudit::corpus::write_jsonl(common::samples_of(&fixtures), &corpus_path).unwrap();

    let mut script = viaudit::backend::MockScript::new("unscripted");
    common::add_audit_entries(&mut script, &fixtures);
    common::add_inject_entries(&mut script, &fixtures);
    let script_path = dir.path().join("script.json");
    script.save(&script_path).unwrap();

    let corpus = corpus_path.to_str().unwrap();
    let mock = script_path.to_str().unwrap();

    let audit_out: Vec<std::path::PathBuf> = ["a1", "a2", "a8"]
        .iter()
        .map(|tag| dir.path().join(format!("audit_{tag}.jsonl")))
        .collect();
    for (out, conc) in audit_out.iter().zip(["1", "1", "8"]) {
        run_cli(&[
            "audit",
            "--corpus",
            corpus,
            "--out",
            out.to_str().unwrap(),
            "--mock-script",
            mock,
            "--seed",
            "7",
            "--concurrency",
            conc,
        ]);
    }
    let first_audit = read_bytes(&audit_out[0]);
    assert!(!first_audit.is_empty());
    assert_eq!(first_audit, read_bytes(&audit_out[1]), "audit repeat differs");
    assert_eq!(first_audit, read_bytes(&audit_out[2]), "audit conc=8 differs");
    let first_manifest = read_bytes(&viaudit::cli::manifest_path(&audit_out[0]));
    assert_eq!(first_manifest, read_bytes(&viaudit::cli::manifest_path(&audit_out[1])));
    assert_eq!(first_manifest, read_bytes(&viaudit::cli::manifest_path(&audit_out[2])));
    let manifest: serde_json::Value = serde_json::from_slice(&first_manifest).unwrap();
    assert_eq!(manifest["counts"]["failed"], 0, "manifest: {manifest}");
    assert_eq!(manifest["counts"]["succeeded"], 20);

    let inject_out: Vec<std::path::PathBuf> = ["i1", "i2", "i8"]
        .iter()
        .map(|tag| dir.path().join(format!("bench_{tag}.jsonl")))
        .collect();
    for (out, conc) in inject_out.iter().zip(["1", "1", "8"]) {
        run_cli(&[
            "inject",
            "--corpus",
            corpus,
            "--out",
            out.to_str().unwrap(),
            "--mock-script",
            mock,
            "--seed",
            "7",
            "--challenge-fraction",
            "0.6",
            "--concurrency",
            conc,
        ]);
    }
    let first_bench = read_bytes(&inject_out[0]);
    assert!(!first_bench.is_empty());
    assert_eq!(first_bench, read_bytes(&inject_out[1]), "inject repeat differs");
    assert_eq!(first_bench, read_bytes(&inject_out[2]), "inject conc=8 differs");
    let bench_manifest: serde_json::Value =
        serde_json::from_slice(&read_bytes(&viaudit::cli::manifest_path(&inject_out[0]))).unwrap();
    assert_eq!(bench_manifest["counts"]["reverted"], 0, "manifest: {bench_manifest}");
    let injected = bench_manifest["counts"]["injected"].as_u64().unwrap();
    assert!(injected > 0, "expected some injected samples");

    finish("6 (end-to-end determinism)", started, Duration::from_secs(10));
}

#[test]
fn criterion_7_default_rule_enforcement() {
    let started = Instant::now();
    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    runtime.block_on(async {
        use std::sync::Arc;
        use viaudit::assess::{assess, vision_messages, AxisSelection};
        use viaudit::backend::{Client, MockBackend, MockScript};
        use viaudit::corpus::{Sample, StepAttempts};
        use viaudit::decompose::DecomposedSample;

        let dir = tempfile::tempdir().unwrap();
        let image = dir.path().join("img.png");
        std::fs::write(&image, b"png").unwrap();
        let sample = Sample {
            id: "tagfree".into(),
            image_ref: image.to_string_lossy().into_owned(),
            instruction: "Describe.".into(),
            response: "A gray cup sits on a wooden desk.".into(),
        };
        let decomposed = DecomposedSample {
            sample_id: sample.id.clone(),
            annotated: parse_annotated(&sample.response).unwrap(),
            draft: sample.response.clone(),
            visual_summary: sample.response.clone(),
            attempts: StepAttempts::default(),
            fallback_tagging: false,
            warnings: Vec::new(),
            raw: viaudit::decompose::RawCompletions::default(),
        };
        let mut script = MockScript::new("unscripted");
        script.add(
            &vision_messages(&sample, &decomposed.visual_summary),
            "Score: 4\nExplanation: matches the image.",
        );
        let mock = Arc::new(MockBackend::from_script(script));
        let client = Client::new(mock.clone(), 4);

        let assessment = assess(
            &sample,
            &decomposed,
            &client,
            &WeightScheme::default(),
            AxisSelection::default(),
        )
        .await
        .unwrap();

        assert_eq!(mock.calls(), 1, "exactly one backend call (vision) expected");
        assert_eq!(
            (assessment.scores.s_l, assessment.scores.s_k, assessment.scores.s_v),
            (2, 2, 4)
        );
        assert_eq!(assessment.defaulted_axes, vec!["logic", "knowledge"]);
    });
    finish("7 (default-rule enforcement)", started, Duration::from_secs(1));
}

#[test]
fn criterion_8_synthetic_separation() {
    let started = Instant::now();
    use rand_distr::{Distribution, Normal};

    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let pristine_dist = Normal::new(4.2, 0.6).unwrap();
    let injected_dist = Normal::new(3.0, 0.6).unwrap();
    let taxonomy = ErrorTaxonomy::builtin();
    let all_codes: Vec<String> = [
        ErrorCategory::Consistency,
        ErrorCategory::Reasoning,
        ErrorCategory::Knowledge,
    ]
    .iter()
    .flat_map(|c| taxonomy.subtypes(*c).iter().map(|s| s.code.clone()))
    .collect();

    // Discretize a draw onto the 13 reachable overall values (axis sums
    // 3..=15 over 3), then decompose the sum into three axis scores.
    let discretize = |x: f64| -> u8 { ((x * 3.0).round() as i32).clamp(3, 15) as u8 };
    let axes_of = |sum: u8| -> (u8, u8, u8) {
        let base = sum / 3;
        let rem = sum % 3;
        (base + u8::from(rem >= 1), base + u8::from(rem >= 2), base)
    };

    let n_per_class = 2000usize;
    let mut records = Vec::with_capacity(2 * n_per_class);
    for i in 0..n_per_class {
        for (label, dist) in [(Label::Pristine, &pristine_dist), (Label::Injected, &injected_dist)]
        {
            let sum = discretize(dist.sample(&mut rng));
            let (s_l, s_k, s_v) = axes_of(sum);
            assert_eq!(s_l + s_k + s_v, sum);
            let subtype = match label {
                Label::Injected => Some(all_codes[i % all_codes.len()].clone()),
                Label::Pristine => None,
            };
            records.push(analyze::LabeledRecord {
                id: format!("{label:?}{i}"),
                label,
                category: subtype.as_ref().map(|c| c.split('_').next().unwrap().to_owned()),
                subtype,
                reverted: false,
                s_l,
                s_k,
                s_v,
                overall: sum as f64 / 3.0,
            });
        }
    }

    let report = analyze::discrimination_report(&records, 8).unwrap();

    // Independent oracle recomputes both metrics from the raw draws.
    let labels: Vec<Label> = records.iter().map(|r| r.label).collect();
    let scores: Vec<f64> = records.iter().map(|r| r.overall).collect();
    let brute_auc = auc_oracle(&labels, &scores);
    assert!(
        (report.auc - brute_auc).abs() < 1e-9,
        "auc {} vs oracle {brute_auc}",
        report.auc
    );

    let bin_of = |s: f64| -> usize { (((s - 1.0) / 0.5) as usize).min(7) };
    let mut p_counts = [0usize; 8];
    let mut q_counts = [0usize; 8];
    for r in &records {
        match r.label {
            Label::Pristine => p_counts[bin_of(r.overall)] += 1,
            Label::Injected => q_counts[bin_of(r.overall)] += 1,
        }
    }
    let to_masses =
        |counts: &[usize; 8]| counts.map(|c| c as f64 / n_per_class as f64).to_vec();
    let oracle_jsd = jsd_oracle(&to_masses(&p_counts), &to_masses(&q_counts));
    assert!(
        (report.js_divergence - oracle_jsd).abs() < 1e-9,
        "jsd {} vs oracle {oracle_jsd}",
        report.js_divergence
    );

    // Shaped as designed: pristine sits above injected.
    assert!(report.auc > 0.8, "separation collapsed: auc {}", report.auc);
    assert!(report.js_divergence > 0.2, "jsd {}", report.js_divergence);
    assert_eq!(report.per_subtype.len(), all_codes.len());

    finish("8 (synthetic separation)", started, Duration::from_secs(10));
}
