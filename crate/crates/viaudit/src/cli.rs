//! Command-line surface: decompose | assess | audit | inject | select |
//! analyze, with resumable batch execution and deterministic outputs.
//!
//! Every command writes its result file plus a `<out>.manifest.json`
//! recording tool version, seed, model ids, weight scheme, and counts.
//! Per-sample failures are listed in the manifest and do not fail the
//! process; only fatal errors (bad config, unreadable corpus) exit nonzero.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context as _};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analyze::{self, LabeledRecord};
use crate::assess::{self, Assessment};
use crate::backend::Client;
use crate::batch::{self, Checkpoint, CheckpointWriter};
use crate::config::{FileConfig, Overrides, RunConfig};
use crate::corpus::{self, AuditRecord, Provenance, Sample};
use crate::decompose::{self, DecomposedRecord, DecomposedSample};
use crate::inject::{self, BenchmarkRecord, ErrorTaxonomy, InjectStats, Label};
use crate::select;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "viaudit",
    version,
    about = "Audit image-instruction-response corpora: decompose, score, inject defects, select, analyze"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML config file with backend profiles and defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Global seed for all random draws; recorded in every manifest.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker-pool bound for per-sample pipelines.
    #[arg(long, global = true)]
    pub concurrency: Option<usize>,

    /// Scripted backend table for offline runs (replaces both backends).
    #[arg(long, global = true)]
    pub mock_script: Option<PathBuf>,

    /// Aggregation weights as `l,k,v` (decimals or fractions).
    #[arg(long, global = true)]
    pub weights: Option<String>,

    /// Subset of `logic,knowledge,vision` to judge.
    #[arg(long, global = true)]
    pub axes: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run Phase 1 only, producing per-sample decomposition artifacts.
    Decompose {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Skip samples with persisted success records.
        #[arg(long)]
        resume: bool,
    },
    /// Run Phase 2 over existing decomposition artifacts.
    Assess {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Decomposition artifacts from a prior `decompose` run.
        #[arg(long)]
        decomposed: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        resume: bool,
    },
    /// Full audit: decompose then assess each sample.
    Audit {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        resume: bool,
    },
    /// Build a labeled benchmark by controlled defect injection.
    Inject {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Share of samples routed through defect injection.
        #[arg(long)]
        challenge_fraction: Option<f64>,
        #[arg(long)]
        resume: bool,
    },
    /// Rank audited samples and emit the top-k ids.
    Select {
        /// Audit records produced by `audit` or `assess`.
        #[arg(long)]
        audit: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        top_k: usize,
    },
    /// Compute discrimination statistics over an audited benchmark.
    Analyze {
        /// Audit records over the benchmark corpus.
        #[arg(long)]
        audit: PathBuf,
        /// Labeled benchmark produced by `inject`.
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV of (bin_center, pristine_mass, injected_mass).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        bins: Option<usize>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureEntry {
    pub id: String,
    pub step: String,
    pub error: String,
}

/// Sidecar metadata written next to every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub weights: String,
    pub axes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decompose_model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assess_model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub challenge_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taxonomy_version: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    pub sampling_override: bool,
    pub counts: BTreeMap<String, u64>,
    pub failures: Vec<FailureEntry>,
}

impl Manifest {
    fn new(command: &str, config: &RunConfig) -> Self {
        Manifest {
            tool_version: TOOL_VERSION.to_owned(),
            command: command.to_owned(),
            seed: config.seed,
            weights: config.weights.describe(),
            axes: config.axes.names().iter().map(|s| s.to_string()).collect(),
            decompose_model: None,
            assess_model: None,
            challenge_fraction: None,
            taxonomy_version: None,
            top_k: None,
            bins: None,
            sampling_override: false,
            counts: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    fn count(&mut self, key: &str, value: u64) {
        self.counts.insert(key.to_owned(), value);
    }

    fn write(&self, out: &Path) -> anyhow::Result<PathBuf> {
        let path = manifest_path(out);
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, json.as_bytes())
            .with_context(|| format!("writing manifest {path:?}"))?;
        Ok(path)
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.manifest.json", out.display()))
}

pub fn checkpoint_path(out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.checkpoint.jsonl", out.display()))
}

pub async fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => Some(FileConfig::load(path)?),
        None => None,
    };
    let (challenge_fraction, command) = (cli_challenge_fraction(&cli.command), cli.command);
    let overrides = Overrides {
        seed: cli.seed,
        concurrency: cli.concurrency,
        challenge_fraction,
        weights: cli.weights,
        axes: cli.axes,
        mock_script: cli.mock_script,
    };
    let config = RunConfig::resolve(file, overrides)?;

    match command {
        Command::Decompose { corpus, out, resume } => {
            cmd_decompose(&config, corpus, &out, resume).await
        }
        Command::Assess { corpus, decomposed, out, resume } => {
            cmd_assess(&config, corpus, &decomposed, &out, resume).await
        }
        Command::Audit { corpus, out, resume } => cmd_audit(&config, corpus, &out, resume).await,
        Command::Inject { corpus, out, resume, .. } => {
            cmd_inject(&config, corpus, &out, resume).await
        }
        Command::Select { audit, out, top_k } => cmd_select(&config, &audit, &out, top_k),
        Command::Analyze { audit, benchmark, out, csv, bins } => {
            cmd_analyze(&config, &audit, &benchmark, &out, csv.as_deref(), bins)
        }
    }
}

fn cli_challenge_fraction(command: &Command) -> Option<f64> {
    match command {
        Command::Inject { challenge_fraction, .. } => *challenge_fraction,
        _ => None,
    }
}

fn corpus_path(config: &RunConfig, flag: Option<PathBuf>) -> anyhow::Result<PathBuf> {
    flag.or_else(|| config.corpus.clone())
        .ok_or_else(|| anyhow::anyhow!("no corpus given: pass --corpus or set it in the config"))
}

fn load_samples(path: &Path) -> anyhow::Result<Vec<Sample>> {
    corpus::load_corpus_vec(path).with_context(|| format!("loading corpus {path:?}"))
}

type CheckpointedSamples<T> = (Vec<(Sample, Option<T>)>, Arc<CheckpointWriter>, u64);

/// Pairs each sample with its checkpointed result, if any. Without
/// `--resume` any stale checkpoint is removed so the run starts fresh.
fn prepare_checkpoint<T: serde::de::DeserializeOwned>(
    out: &Path,
    resume: bool,
    samples: &[Sample],
) -> anyhow::Result<CheckpointedSamples<T>> {
    let cp_path = checkpoint_path(out);
    let mut checkpoint: Checkpoint<T> = if resume {
        Checkpoint::load(&cp_path).with_context(|| format!("reading checkpoint {cp_path:?}"))?
    } else {
        match std::fs::remove_file(&cp_path) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e).with_context(|| format!("clearing checkpoint {cp_path:?}")),
        }
        Checkpoint::empty()
    };
    let mut resumed = 0u64;
    let paired: Vec<(Sample, Option<T>)> = samples
        .iter()
        .map(|s| {
            let prior = checkpoint.take(&s.id);
            if prior.is_some() {
                resumed += 1;
            }
            (s.clone(), prior)
        })
        .collect();
    let writer = Arc::new(CheckpointWriter::append_to(&cp_path)?);
    Ok((paired, writer, resumed))
}

fn split_results<T>(
    results: Vec<Result<T, FailureEntry>>,
) -> (Vec<T>, Vec<FailureEntry>) {
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(value) => ok.push(value),
            Err(failure) => failures.push(failure),
        }
    }
    (ok, failures)
}

async fn cmd_decompose(
    config: &RunConfig,
    corpus: Option<PathBuf>,
    out: &Path,
    resume: bool,
) -> anyhow::Result<()> {
    let corpus = corpus_path(config, corpus)?;
    let samples = load_samples(&corpus)?;
    let client = config.text_client()?;
    let (paired, writer, resumed) = prepare_checkpoint::<DecomposedRecord>(out, resume, &samples)?;

    let retries = config.validation_retries;
    let results = batch::run_ordered(paired, config.concurrency, |_, (sample, prior)| {
        let client = client.clone();
        let writer = writer.clone();
        async move {
            if let Some(record) = prior {
                return Ok(Ok(record));
            }
            match decompose::decompose(&sample, &client, retries).await {
                Ok(d) => {
                    let record = d.to_record();
                    writer.record(&sample.id, &record)?;
                    Ok(Ok(record))
                }
                Err(e) => Ok(Err(FailureEntry {
                    id: sample.id.clone(),
                    step: e.step.to_string(),
                    error: e.to_string(),
                })),
            }
        }
    })
    .await;
    let (records, failures) = split_results(flatten_io(results)?);

    let mut manifest = Manifest::new("decompose", config);
    manifest.decompose_model = Some(client.model_id());
    manifest.sampling_override = client.sampling_override();
    manifest.count("total", samples.len() as u64);
    manifest.count("succeeded", records.len() as u64);
    manifest.count("failed", failures.len() as u64);
    manifest.count("resumed", resumed);
    manifest.count(
        "fallback_tagging",
        records.iter().filter(|r| r.fallback_tagging).count() as u64,
    );
    manifest.failures = failures;

    corpus::write_jsonl(records, out)?;
    manifest.write(out)?;
    Ok(())
}

/// Checkpoint write errors are disk problems, not per-sample failures;
/// they abort the run.
fn flatten_io<T>(
    results: Vec<Result<Result<T, FailureEntry>, std::io::Error>>,
) -> anyhow::Result<Vec<Result<T, FailureEntry>>> {
    results
        .into_iter()
        .collect::<Result<Vec<_>, std::io::Error>>()
        .context("checkpoint write failed")
}

fn audit_record(
    sample: &Sample,
    decomposed: &DecomposedSample,
    assessment: Assessment,
    text_model: String,
    judge_model: String,
    sampling_override: bool,
) -> AuditRecord {
    AuditRecord {
        id: sample.id.clone(),
        s_l: assessment.scores.s_l,
        s_k: assessment.scores.s_k,
        s_v: assessment.scores.s_v,
        overall: assessment.scores.overall,
        explanations: assessment.explanations,
        annotated_response: decomposed.annotated.to_tagged_string(),
        visual_summary: decomposed.visual_summary.clone(),
        provenance: Provenance {
            tool_version: TOOL_VERSION.to_owned(),
            decompose_model: text_model,
            assess_model: judge_model,
            defaulted_axes: assessment.defaulted_axes,
            fallback_tagging: decomposed.fallback_tagging,
            sampling_override,
            empty_visual_summary: assessment.empty_visual_summary,
            attempts: decomposed.attempts,
        },
    }
}

fn require_vision(client: &Client) -> anyhow::Result<()> {
    if !client.vision_capable() {
        bail!("assessment requires a vision-capable backend profile (set vision = true)");
    }
    Ok(())
}

fn audit_manifest_counts(manifest: &mut Manifest, records: &[AuditRecord]) {
    let defaulted = |axis: &str| {
        records
            .iter()
            .filter(|r| r.provenance.defaulted_axes.iter().any(|a| a == axis))
            .count() as u64
    };
    manifest.count("defaulted_logic", defaulted("logic"));
    manifest.count("defaulted_knowledge", defaulted("knowledge"));
    manifest.count("defaulted_vision", defaulted("vision"));
    manifest.count(
        "fallback_tagging",
        records.iter().filter(|r| r.provenance.fallback_tagging).count() as u64,
    );
}

async fn cmd_audit(
    config: &RunConfig,
    corpus: Option<PathBuf>,
    out: &Path,
    resume: bool,
) -> anyhow::Result<()> {
    let corpus = corpus_path(config, corpus)?;
    let samples = load_samples(&corpus)?;
    let text_client = config.text_client()?;
    let judge_client = config.judge_client()?;
    require_vision(&judge_client)?;
    let (paired, writer, resumed) = prepare_checkpoint::<AuditRecord>(out, resume, &samples)?;

    let retries = config.validation_retries;
    let weights = config.weights.clone();
    let axes = config.axes;
    let results = batch::run_ordered(paired, config.concurrency, |_, (sample, prior)| {
        let text_client = text_client.clone();
        let judge_client = judge_client.clone();
        let writer = writer.clone();
        let weights = weights.clone();
        async move {
            if let Some(record) = prior {
                return Ok(Ok(record));
            }
            let decomposed = match decompose::decompose(&sample, &text_client, retries).await {
                Ok(d) => d,
                Err(e) => {
                    return Ok(Err(FailureEntry {
                        id: sample.id.clone(),
                        step: e.step.to_string(),
                        error: e.to_string(),
                    }))
                }
            };
            let assessment =
                match assess::assess(&sample, &decomposed, &judge_client, &weights, axes).await {
                    Ok(a) => a,
                    Err(e) => {
                        return Ok(Err(FailureEntry {
                            id: sample.id.clone(),
                            step: format!("assess:{}", e.axis),
                            error: e.to_string(),
                        }))
                    }
                };
            let record = audit_record(
                &sample,
                &decomposed,
                assessment,
                text_client.model_id(),
                judge_client.model_id(),
                text_client.sampling_override() || judge_client.sampling_override(),
            );
            writer.record(&sample.id, &record)?;
            Ok(Ok(record))
        }
    })
    .await;
    let (records, failures) = split_results(flatten_io(results)?);

    let mut manifest = Manifest::new("audit", config);
    manifest.decompose_model = Some(text_client.model_id());
    manifest.assess_model = Some(judge_client.model_id());
    manifest.sampling_override =
        text_client.sampling_override() || judge_client.sampling_override();
    manifest.count("total", samples.len() as u64);
    manifest.count("succeeded", records.len() as u64);
    manifest.count("failed", failures.len() as u64);
    manifest.count("resumed", resumed);
    audit_manifest_counts(&mut manifest, &records);
    manifest.failures = failures;

    corpus::write_records(records, out)?;
    manifest.write(out)?;
    Ok(())
}

async fn cmd_assess(
    config: &RunConfig,
    corpus: Option<PathBuf>,
    decomposed_path: &Path,
    out: &Path,
    resume: bool,
) -> anyhow::Result<()> {
    let corpus = corpus_path(config, corpus)?;
    let samples = load_samples(&corpus)?;
    let judge_client = config.judge_client()?;
    require_vision(&judge_client)?;

    let decomposed_records: Vec<DecomposedRecord> = corpus::read_jsonl(decomposed_path)
        .with_context(|| format!("loading decomposition artifacts {decomposed_path:?}"))?;
    let mut by_id: std::collections::HashMap<String, DecomposedRecord> = decomposed_records
        .into_iter()
        .map(|r| (r.id.clone(), r))
        .collect();

    let (paired, writer, resumed) = prepare_checkpoint::<AuditRecord>(out, resume, &samples)?;
    let weights = config.weights.clone();
    let axes = config.axes;

    // Join corpus order with artifacts before fan-out so missing
    // decompositions fail cleanly per sample.
    let mut jobs = Vec::with_capacity(paired.len());
    for (sample, prior) in paired {
        let decomposed = by_id.remove(&sample.id);
        jobs.push((sample, prior, decomposed));
    }

    let results =
        batch::run_ordered(jobs, config.concurrency, |_, (sample, prior, decomposed)| {
            let judge_client = judge_client.clone();
            let writer = writer.clone();
            let weights = weights.clone();
            async move {
                if let Some(record) = prior {
                    return Ok(Ok(record));
                }
                let failure = |step: &str, error: String| FailureEntry {
                    id: sample.id.clone(),
                    step: step.to_owned(),
                    error,
                };
                let Some(record) = decomposed else {
                    return Ok(Err(failure("join", "no decomposition artifact".into())));
                };
                let decomposed = match DecomposedSample::from_record(record) {
                    Ok(d) => d,
                    Err(e) => return Ok(Err(failure("join", e.to_string()))),
                };
                let assessment =
                    match assess::assess(&sample, &decomposed, &judge_client, &weights, axes).await
                    {
                        Ok(a) => a,
                        Err(e) => {
                            return Ok(Err(failure(&format!("assess:{}", e.axis), e.to_string())))
                        }
                    };
                let record = audit_record(
                    &sample,
                    &decomposed,
                    assessment,
                    String::new(),
                    judge_client.model_id(),
                    judge_client.sampling_override(),
                );
                writer.record(&sample.id, &record)?;
                Ok(Ok(record))
            }
        })
        .await;
    let (records, failures) = split_results(flatten_io(results)?);

    let mut manifest = Manifest::new("assess", config);
    manifest.assess_model = Some(judge_client.model_id());
    manifest.sampling_override = judge_client.sampling_override();
    manifest.count("total", samples.len() as u64);
    manifest.count("succeeded", records.len() as u64);
    manifest.count("failed", failures.len() as u64);
    manifest.count("resumed", resumed);
    manifest.count("unmatched_artifacts", by_id.len() as u64);
    audit_manifest_counts(&mut manifest, &records);
    manifest.failures = failures;

    corpus::write_records(records, out)?;
    manifest.write(out)?;
    Ok(())
}

async fn cmd_inject(
    config: &RunConfig,
    corpus: Option<PathBuf>,
    out: &Path,
    resume: bool,
) -> anyhow::Result<()> {
    let corpus = corpus_path(config, corpus)?;
    let samples = load_samples(&corpus)?;
    let client = config.text_client()?;
    let taxonomy = match &config.taxonomy {
        Some(path) => ErrorTaxonomy::from_path(path)?,
        None => ErrorTaxonomy::builtin(),
    };
    let (paired, writer, resumed) = prepare_checkpoint::<BenchmarkRecord>(out, resume, &samples)?;

    let retries = config.validation_retries;
    let seed = config.seed;
    let fraction = config.challenge_fraction;
    let taxonomy_ref = &taxonomy;
    let results = batch::run_ordered(paired, config.concurrency, |_, (sample, prior)| {
        let client = client.clone();
        let writer = writer.clone();
        async move {
            if let Some(record) = prior {
                return Ok(record);
            }
            let record = inject::benchmark_record(
                &sample,
                fraction,
                seed,
                taxonomy_ref,
                &client,
                retries,
            )
            .await;
            writer.record(&sample.id, &record)?;
            Ok(record)
        }
    })
    .await;
    let records: Vec<BenchmarkRecord> =
        results.into_iter().collect::<Result<_, std::io::Error>>()
            .context("checkpoint write failed")?;

    let mut stats = InjectStats::default();
    for record in &records {
        match (record.label, &record.revert_reason) {
            (Label::Injected, _) => stats.injected += 1,
            (Label::Pristine, Some(_)) => stats.reverted += 1,
            (Label::Pristine, None) => stats.pristine += 1,
        }
    }

    let mut manifest = Manifest::new("inject", config);
    manifest.decompose_model = Some(client.model_id());
    manifest.sampling_override = client.sampling_override();
    manifest.challenge_fraction = Some(fraction);
    manifest.taxonomy_version = Some(taxonomy.version.clone());
    manifest.count("total", records.len() as u64);
    manifest.count("pristine", stats.pristine as u64);
    manifest.count("injected", stats.injected as u64);
    manifest.count("reverted", stats.reverted as u64);
    manifest.count("resumed", resumed);

    corpus::write_jsonl(records, out)?;
    manifest.write(out)?;
    Ok(())
}

fn cmd_select(config: &RunConfig, audit: &Path, out: &Path, top_k: usize) -> anyhow::Result<()> {
    let records: Vec<AuditRecord> =
        corpus::read_jsonl(audit).with_context(|| format!("loading audit records {audit:?}"))?;
    let ids = select::rank_and_select(&records, &config.weights, top_k)?;

    let mut manifest = Manifest::new("select", config);
    manifest.top_k = Some(top_k);
    manifest.count("total", records.len() as u64);
    manifest.count("selected", ids.len() as u64);

    let mut body = ids.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    std::fs::write(out, body).with_context(|| format!("writing id list {out:?}"))?;
    manifest.write(out)?;
    Ok(())
}

fn cmd_analyze(
    config: &RunConfig,
    audit: &Path,
    benchmark: &Path,
    out: &Path,
    csv: Option<&Path>,
    bins: Option<usize>,
) -> anyhow::Result<()> {
    let audits: Vec<AuditRecord> =
        corpus::read_jsonl(audit).with_context(|| format!("loading audit records {audit:?}"))?;
    let bench: Vec<BenchmarkRecord> = corpus::read_jsonl(benchmark)
        .with_context(|| format!("loading benchmark {benchmark:?}"))?;
    let labels: std::collections::HashMap<&str, &BenchmarkRecord> =
        bench.iter().map(|b| (b.id.as_str(), b)).collect();

    let mut records = Vec::with_capacity(audits.len());
    for a in &audits {
        let Some(b) = labels.get(a.id.as_str()) else {
            bail!("audit record {} has no benchmark line; wrong file pair?", a.id);
        };
        records.push(LabeledRecord {
            id: a.id.clone(),
            label: b.label,
            category: b.category.map(|c| c.as_str().to_owned()),
            subtype: b.subtype.clone(),
            reverted: b.revert_reason.is_some(),
            s_l: a.s_l,
            s_k: a.s_k,
            s_v: a.s_v,
            overall: a.overall,
        });
    }

    let bins = bins.unwrap_or(analyze::DEFAULT_BINS);
    let report = analyze::discrimination_report(&records, bins)?;
    std::fs::write(out, serde_json::to_string_pretty(&report).expect("report serializes"))
        .with_context(|| format!("writing report {out:?}"))?;
    if let Some(csv_path) = csv {
        std::fs::write(csv_path, analyze::histogram_csv(&report))
            .with_context(|| format!("writing csv {csv_path:?}"))?;
    }

    let mut manifest = Manifest::new("analyze", config);
    manifest.bins = Some(bins);
    manifest.count("audited", audits.len() as u64);
    manifest.count("benchmark_lines", bench.len() as u64);
    manifest.count("pristine", report.n_pristine as u64);
    manifest.count("injected", report.n_injected as u64);
    manifest.count("reverted_excluded", report.n_reverted_excluded as u64);
    manifest.write(out)?;
    Ok(())
}
