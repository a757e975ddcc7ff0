//! Phase 1 of an audit: per-sample decomposition through three sequential
//! model calls — semantic tagging, visual distillation, fluent synthesis.
//!
//! No image is attached at this phase; all three prompts are text-only.
//! The steps within one sample are strictly sequential (each consumes the
//! previous output); distinct samples run concurrently.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ChatMessage, Client};
use crate::corpus::{Sample, StepAttempts};
use crate::prompts;
use crate::tagparse::{
    self, contains_tag_token, parse_annotated, strip_required_prefix, strip_tags,
    AnnotatedResponse,
};

/// Validation retries per step beyond the first attempt. Greedy decoding
/// means retries only help against transport-level nondeterminism, so the
/// budget stays small instead of looping on systematic model errors.
pub const DEFAULT_VALIDATION_RETRIES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepName {
    Tagging,
    Distillation,
    Synthesis,
}

impl std::fmt::Display for StepName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepName::Tagging => "tagging",
            StepName::Distillation => "distillation",
            StepName::Synthesis => "synthesis",
        })
    }
}

#[derive(Debug, Error)]
pub enum StepErrorKind {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("completion still contains tag tokens after {attempts} attempt(s)")]
    ResidualTags { attempts: u32 },
    #[error("empty completion after {attempts} attempt(s)")]
    EmptyCompletion { attempts: u32 },
    #[error("missing required prefix after {attempts} attempt(s): {last}")]
    MissingPrefix { attempts: u32, last: String },
}

#[derive(Debug, Error)]
#[error("step {step} failed: {kind}")]
pub struct DecomposeError {
    pub step: StepName,
    #[source]
    pub kind: StepErrorKind,
}

/// Raw accepted completion per step, kept for audit. `None` when the step
/// was skipped or fell back without an accepted output.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RawCompletions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tagging: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distillation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<String>,
}

impl RawCompletions {
    pub fn is_empty(&self) -> bool {
        self.tagging.is_none() && self.distillation.is_none() && self.synthesis.is_none()
    }
}

/// All Phase 1 artifacts for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedSample {
    pub sample_id: String,
    pub annotated: AnnotatedResponse,
    pub draft: String,
    pub visual_summary: String,
    pub attempts: StepAttempts,
    /// True when tagging fell back to an all-plain annotation after
    /// exhausting validation retries.
    pub fallback_tagging: bool,
    pub warnings: Vec<String>,
    pub raw: RawCompletions,
}

/// Wire form of [`DecomposedSample`]; the annotation is stored as tagged
/// text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedRecord {
    pub id: String,
    pub annotated: String,
    pub draft: String,
    pub visual_summary: String,
    pub attempts: StepAttempts,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback_tagging: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "RawCompletions::is_empty")]
    pub raw: RawCompletions,
}

impl DecomposedSample {
    pub fn to_record(&self) -> DecomposedRecord {
        DecomposedRecord {
            id: self.sample_id.clone(),
            annotated: self.annotated.to_tagged_string(),
            draft: self.draft.clone(),
            visual_summary: self.visual_summary.clone(),
            attempts: self.attempts,
            fallback_tagging: self.fallback_tagging,
            warnings: self.warnings.clone(),
            raw: self.raw.clone(),
        }
    }

    pub fn from_record(record: DecomposedRecord) -> Result<Self, tagparse::TagParseError> {
        Ok(DecomposedSample {
            sample_id: record.id,
            annotated: parse_annotated(&record.annotated)?,
            draft: record.draft,
            visual_summary: record.visual_summary,
            attempts: record.attempts,
            fallback_tagging: record.fallback_tagging,
            warnings: record.warnings,
            raw: record.raw,
        })
    }
}

pub fn tagging_messages(sample: &Sample) -> Vec<ChatMessage> {
    vec![ChatMessage::user(prompts::semantic_tagging(&sample.response))]
}

pub fn distillation_messages(sample: &Sample, annotated: &AnnotatedResponse) -> Vec<ChatMessage> {
    vec![ChatMessage::user(prompts::visual_distillation(
        &sample.instruction,
        &annotated.to_tagged_string(),
    ))]
}

pub fn synthesis_messages(sample: &Sample, draft: &str) -> Vec<ChatMessage> {
    vec![ChatMessage::user(prompts::fluent_synthesis(&sample.instruction, draft))]
}

#[derive(Debug)]
pub struct TaggingOutcome {
    pub annotated: AnnotatedResponse,
    pub attempts: u32,
    pub fallback: bool,
    pub raw: Option<String>,
}

/// Step 1: wraps inferences and knowledge claims in tags. A completion is
/// accepted when the prefix is present, the tags parse, and no word was
/// added, deleted, or rephrased. Over-tagging is fine — tag placement
/// quality is judged downstream, wording is the hard constraint. After the
/// retry budget the sample degrades to an all-plain annotation instead of
/// failing.
pub async fn semantic_tagging(
    sample: &Sample,
    client: &Client,
    validation_retries: u32,
) -> Result<TaggingOutcome, BackendError> {
    let messages = tagging_messages(sample);
    let mut attempts = 0;
    while attempts <= validation_retries {
        attempts += 1;
        let completion = client.complete(&messages).await?;
        let text = completion.text.trim();
        let body = match strip_required_prefix(text, tagparse::MARKED_RESPONSE_PREFIX) {
            Ok(body) => body,
            Err(e) => {
                log::debug!("sample {}: tagging attempt {attempts} rejected: {e}", sample.id);
                continue;
            }
        };
        let annotated = match parse_annotated(body) {
            Ok(annotated) => annotated,
            Err(e) => {
                log::debug!("sample {}: tagging attempt {attempts} rejected: {e}", sample.id);
                continue;
            }
        };
        let report = tagparse::verify_word_preservation(&sample.response, &annotated);
        if !report.pass {
            log::debug!(
                "sample {}: tagging attempt {attempts} altered wording at {:?}",
                sample.id,
                report.divergence
            );
            continue;
        }
        return Ok(TaggingOutcome { annotated, attempts, fallback: false, raw: Some(completion.text) });
    }
    log::warn!("sample {}: tagging fell back to all-plain after {attempts} attempts", sample.id);
    Ok(TaggingOutcome {
        annotated: AnnotatedResponse::from_plain(&sample.response),
        attempts,
        fallback: true,
        raw: None,
    })
}

#[derive(Debug)]
pub struct DistillationOutcome {
    pub draft: String,
    pub attempts: u32,
    pub warnings: Vec<String>,
    pub raw: Option<String>,
}

/// Step 2: rewrites or removes tagged segments, leaving image-grounded
/// text. Residual tag tokens are a hard failure after retries; a plain
/// segment missing verbatim from the draft is only a recorded warning.
pub async fn visual_distillation(
    sample: &Sample,
    annotated: &AnnotatedResponse,
    client: &Client,
    validation_retries: u32,
) -> Result<DistillationOutcome, StepErrorKind> {
    if !annotated.has_tags() {
        return Ok(DistillationOutcome {
            draft: strip_tags(annotated),
            attempts: 0,
            warnings: Vec::new(),
            raw: None,
        });
    }
    let messages = distillation_messages(sample, annotated);
    let mut attempts = 0;
    let mut last_rejection: Option<StepErrorKind> = None;
    while attempts <= validation_retries {
        attempts += 1;
        let completion = client.complete(&messages).await?;
        let text = completion.text.trim();
        let body = match strip_required_prefix(text, tagparse::CLEANED_RESPONSE_PREFIX) {
            Ok(body) => body,
            Err(e) => {
                last_rejection = Some(StepErrorKind::MissingPrefix {
                    attempts,
                    last: e.head.clone(),
                });
                continue;
            }
        };
        if contains_tag_token(body) {
            last_rejection = Some(StepErrorKind::ResidualTags { attempts });
            continue;
        }
        let warnings = plain_preservation_warnings(annotated, body);
        return Ok(DistillationOutcome {
            draft: body.to_owned(),
            attempts,
            warnings,
            raw: Some(completion.text),
        });
    }
    Err(match last_rejection {
        Some(StepErrorKind::MissingPrefix { last, .. }) => {
            StepErrorKind::MissingPrefix { attempts, last }
        }
        _ => StepErrorKind::ResidualTags { attempts },
    })
}

fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn plain_preservation_warnings(annotated: &AnnotatedResponse, draft: &str) -> Vec<String> {
    let draft_norm = normalize_ws(draft);
    let mut warnings = Vec::new();
    for plain in annotated.segments_of_kind(crate::tagparse::SegmentKind::Plain) {
        let plain_norm = normalize_ws(plain);
        if !plain_norm.is_empty() && !draft_norm.contains(&plain_norm) {
            warnings.push(format!("plain segment not preserved verbatim in draft: {plain_norm:?}"));
        }
    }
    warnings
}

#[derive(Debug)]
pub struct SynthesisOutcome {
    pub visual_summary: String,
    pub attempts: u32,
    pub raw: Option<String>,
}

/// Step 3: reorganizes the draft into one fluent visual paragraph. An empty
/// draft short-circuits to an empty summary without a model call.
pub async fn fluent_synthesis(
    sample: &Sample,
    draft: &str,
    client: &Client,
    validation_retries: u32,
) -> Result<SynthesisOutcome, StepErrorKind> {
    if draft.trim().is_empty() {
        return Ok(SynthesisOutcome { visual_summary: String::new(), attempts: 0, raw: None });
    }
    let messages = synthesis_messages(sample, draft);
    let mut attempts = 0;
    let mut saw_prefix_failure: Option<String> = None;
    while attempts <= validation_retries {
        attempts += 1;
        let completion = client.complete(&messages).await?;
        let text = completion.text.trim();
        let body = match strip_required_prefix(text, tagparse::VISUAL_SUMMARY_PREFIX) {
            Ok(body) => body,
            Err(e) => {
                saw_prefix_failure = Some(e.head.clone());
                continue;
            }
        };
        if body.is_empty() {
            saw_prefix_failure = None;
            continue;
        }
        return Ok(SynthesisOutcome {
            visual_summary: body.to_owned(),
            attempts,
            raw: Some(completion.text),
        });
    }
    Err(match saw_prefix_failure {
        Some(last) => StepErrorKind::MissingPrefix { attempts, last },
        None => StepErrorKind::EmptyCompletion { attempts },
    })
}

/// Runs the three steps in order for one sample. A failure in any step
/// fails the whole sample with the step name and cause; other samples are
/// unaffected.
pub async fn decompose(
    sample: &Sample,
    client: &Client,
    validation_retries: u32,
) -> Result<DecomposedSample, DecomposeError> {
    let tagging = semantic_tagging(sample, client, validation_retries)
        .await
        .map_err(|e| DecomposeError { step: StepName::Tagging, kind: e.into() })?;
    let distillation = visual_distillation(sample, &tagging.annotated, client, validation_retries)
        .await
        .map_err(|kind| DecomposeError { step: StepName::Distillation, kind })?;
    let synthesis = fluent_synthesis(sample, &distillation.draft, client, validation_retries)
        .await
        .map_err(|kind| DecomposeError { step: StepName::Synthesis, kind })?;
    Ok(DecomposedSample {
        sample_id: sample.id.clone(),
        annotated: tagging.annotated,
        draft: distillation.draft,
        visual_summary: synthesis.visual_summary,
        attempts: StepAttempts {
            tagging: tagging.attempts,
            distillation: distillation.attempts,
            synthesis: synthesis.attempts,
        },
        fallback_tagging: tagging.fallback,
        warnings: distillation.warnings,
        raw: RawCompletions {
            tagging: tagging.raw,
            distillation: distillation.raw,
            synthesis: synthesis.raw,
        },
    })
}
