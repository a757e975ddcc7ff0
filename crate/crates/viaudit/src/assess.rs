//! Phase 2 of an audit: rubric scoring of the decomposed sample along
//! logical coherence (s_l), factual accuracy (s_k), and image-text
//! consistency (s_v).
//!
//! The logic and knowledge axes default to score 2 locally when the
//! annotation has no matching tagged segments — the rubric states those
//! defaults unconditionally, so no judge call is spent on them. The vision
//! axis is always judged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ChatMessage, Client};
use crate::corpus::{Explanations, Sample};
use crate::decompose::DecomposedSample;
use crate::prompts;
use crate::select::{aggregate_f64, SelectError, WeightScheme};
use crate::tagparse::{AnnotatedResponse, SegmentKind};

pub const DEFAULT_SEGMENTLESS_SCORE: u8 = 2;
pub const DEFAULT_LOGIC_EXPLANATION: &str =
    "No <INFER> segments present; score defaulted to 2 without a judge call.";
pub const DEFAULT_KNOWLEDGE_EXPLANATION: &str =
    "No <KNOW> segments present; score defaulted to 2 without a judge call.";
pub const SKIPPED_AXIS_EXPLANATION: &str =
    "Axis excluded by the axis selector; score defaulted to 2 without a judge call.";

/// One axis judgment. `defaulted` marks scores produced by a local rule
/// with no backend call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgment {
    pub score: u8,
    pub explanation: String,
    pub defaulted: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JudgmentParseError {
    #[error("no score line found in judge output: {head:?}")]
    NoScore { head: String },
    #[error("judge score {score} outside 1..=5")]
    OutOfRange { score: i64 },
    #[error("judge score {raw:?} is not an integer")]
    NotAnInteger { raw: String },
}

/// Extracts the first `Score: <integer>` and the explanation body from a
/// judge completion. When no `Explanation:` label exists the remaining text
/// around the score line is the explanation. Out-of-range scores are
/// errors, never clamped — a mis-parsed judgment must not silently enter
/// corpus statistics.
pub fn parse_judgment(text: &str) -> Result<Judgment, JudgmentParseError> {
    let score_re = regex::Regex::new(r"(?i)score\s*\**\s*:\s*\**\s*(-?\d+(?:\.\d+)?)")
        .expect("static regex compiles");
    let caps = score_re.captures(text).ok_or_else(|| JudgmentParseError::NoScore {
        head: text.chars().take(80).collect(),
    })?;
    let raw = caps.get(1).expect("capture group 1 exists");
    if raw.as_str().contains('.') {
        return Err(JudgmentParseError::NotAnInteger { raw: raw.as_str().to_owned() });
    }
    let score: i64 = raw
        .as_str()
        .parse()
        .map_err(|_| JudgmentParseError::NotAnInteger { raw: raw.as_str().to_owned() })?;
    if !(1..=5).contains(&score) {
        return Err(JudgmentParseError::OutOfRange { score });
    }

    let expl_re =
        regex::Regex::new(r"(?i)explanation\s*\**\s*:\s*").expect("static regex compiles");
    let explanation = match expl_re.find(text) {
        Some(m) => text[m.end()..].trim().to_owned(),
        None => {
            let whole = caps.get(0).expect("whole match exists");
            let mut rest = String::new();
            rest.push_str(&text[..whole.start()]);
            rest.push_str(&text[whole.end()..]);
            rest.trim().to_owned()
        }
    };
    Ok(Judgment { score: score as u8, explanation, defaulted: false })
}

pub fn logic_messages(sample: &Sample, annotated: &AnnotatedResponse) -> Vec<ChatMessage> {
    vec![ChatMessage::user_with_image(
        prompts::logic_rubric(&annotated.to_tagged_string()),
        &sample.image_ref,
    )]
}

pub fn knowledge_messages(annotated: &AnnotatedResponse) -> Vec<ChatMessage> {
    vec![ChatMessage::user(prompts::knowledge_rubric(&annotated.to_tagged_string()))]
}

pub fn vision_messages(sample: &Sample, visual_summary: &str) -> Vec<ChatMessage> {
    vec![ChatMessage::user_with_image(
        prompts::vision_rubric(visual_summary),
        &sample.image_ref,
    )]
}

#[derive(Debug, Error)]
pub enum AxisErrorKind {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Parse(#[from] JudgmentParseError),
    #[error(transparent)]
    Weights(#[from] SelectError),
}

#[derive(Debug, Error)]
#[error("axis {axis} failed: {kind}")]
pub struct AssessError {
    pub axis: &'static str,
    #[source]
    pub kind: AxisErrorKind,
}

fn axis_err(axis: &'static str) -> impl Fn(AxisErrorKind) -> AssessError {
    move |kind| AssessError { axis, kind }
}

/// Scores reasoning inside `<INFER>` tags against the image. With no
/// inference present the score defaults to 2 locally.
pub async fn score_logic(
    sample: &Sample,
    annotated: &AnnotatedResponse,
    client: &Client,
) -> Result<Judgment, AssessError> {
    if !annotated.has_kind(SegmentKind::Infer) {
        return Ok(Judgment {
            score: DEFAULT_SEGMENTLESS_SCORE,
            explanation: DEFAULT_LOGIC_EXPLANATION.to_owned(),
            defaulted: true,
        });
    }
    let err = axis_err("logic");
    let completion = client
        .complete(&logic_messages(sample, annotated))
        .await
        .map_err(|e| err(e.into()))?;
    parse_judgment(&completion.text).map_err(|e| err(e.into()))
}

/// Fact-checks `<KNOW>` claims against the judge's internal knowledge; no
/// image is attached. With no knowledge claims the score defaults to 2.
pub async fn score_knowledge(
    _sample: &Sample,
    annotated: &AnnotatedResponse,
    client: &Client,
) -> Result<Judgment, AssessError> {
    if !annotated.has_kind(SegmentKind::Know) {
        return Ok(Judgment {
            score: DEFAULT_SEGMENTLESS_SCORE,
            explanation: DEFAULT_KNOWLEDGE_EXPLANATION.to_owned(),
            defaulted: true,
        });
    }
    let err = axis_err("knowledge");
    let completion = client
        .complete(&knowledge_messages(annotated))
        .await
        .map_err(|e| err(e.into()))?;
    parse_judgment(&completion.text).map_err(|e| err(e.into()))
}

/// Scores the purified visual summary against the image. Always judged —
/// there is no default rule for this axis. An empty summary is judged as
/// the empty string and flagged upstream.
pub async fn score_vision(
    sample: &Sample,
    visual_summary: &str,
    client: &Client,
) -> Result<Judgment, AssessError> {
    let err = axis_err("vision");
    let completion = client
        .complete(&vision_messages(sample, visual_summary))
        .await
        .map_err(|e| err(e.into()))?;
    parse_judgment(&completion.text).map_err(|e| err(e.into()))
}

/// Axis scores plus the weighted overall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub s_l: u8,
    pub s_k: u8,
    pub s_v: u8,
    pub overall: f64,
}

impl ScoreVector {
    /// Combines validated axis scores; the overall is computed exactly and
    /// converted once for serialization.
    pub fn with_weights(
        s_l: u8,
        s_k: u8,
        s_v: u8,
        weights: &WeightScheme,
    ) -> Result<Self, SelectError> {
        Ok(ScoreVector { s_l, s_k, s_v, overall: aggregate_f64(s_l, s_k, s_v, weights)? })
    }
}

/// Which axes to judge; skipped axes record the default score with a fixed
/// explanation and no backend call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisSelection {
    pub logic: bool,
    pub knowledge: bool,
    pub vision: bool,
}

impl Default for AxisSelection {
    fn default() -> Self {
        AxisSelection { logic: true, knowledge: true, vision: true }
    }
}

impl AxisSelection {
    /// Parses `"logic,knowledge,vision"` subsets.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut selection = AxisSelection { logic: false, knowledge: false, vision: false };
        for part in text.split(',') {
            match part.trim() {
                "logic" => selection.logic = true,
                "knowledge" => selection.knowledge = true,
                "vision" => selection.vision = true,
                other => return Err(format!("unknown axis {other:?}")),
            }
        }
        if selection == (AxisSelection { logic: false, knowledge: false, vision: false }) {
            return Err("no axes selected".into());
        }
        Ok(selection)
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        if self.logic {
            names.push("logic");
        }
        if self.knowledge {
            names.push("knowledge");
        }
        if self.vision {
            names.push("vision");
        }
        names
    }
}

/// Scores, explanations, and bookkeeping for one assessed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub scores: ScoreVector,
    pub explanations: Explanations,
    pub defaulted_axes: Vec<String>,
    pub empty_visual_summary: bool,
}

fn skipped_judgment() -> Judgment {
    Judgment {
        score: DEFAULT_SEGMENTLESS_SCORE,
        explanation: SKIPPED_AXIS_EXPLANATION.to_owned(),
        defaulted: true,
    }
}

/// Runs the selected scorers (concurrently — results merge by axis name, so
/// completion order is irrelevant) and combines them into a score vector
/// under the active weight scheme.
pub async fn assess(
    sample: &Sample,
    decomposed: &DecomposedSample,
    client: &Client,
    weights: &WeightScheme,
    axes: AxisSelection,
) -> Result<Assessment, AssessError> {
    let empty_visual_summary = decomposed.visual_summary.trim().is_empty();
    if empty_visual_summary && axes.vision {
        log::warn!("sample {}: judging an empty visual summary", sample.id);
    }
    let logic = async {
        if axes.logic {
            score_logic(sample, &decomposed.annotated, client).await
        } else {
            Ok(skipped_judgment())
        }
    };
    let knowledge = async {
        if axes.knowledge {
            score_knowledge(sample, &decomposed.annotated, client).await
        } else {
            Ok(skipped_judgment())
        }
    };
    let vision = async {
        if axes.vision {
            score_vision(sample, &decomposed.visual_summary, client).await
        } else {
            Ok(skipped_judgment())
        }
    };
    let (logic, knowledge, vision) = tokio::join!(logic, knowledge, vision);
    let (logic, knowledge, vision) = (logic?, knowledge?, vision?);

    let scores = ScoreVector::with_weights(logic.score, knowledge.score, vision.score, weights)
        .map_err(|e| AssessError { axis: "aggregate", kind: e.into() })?;
    let mut defaulted_axes = Vec::new();
    for (name, judgment) in [("logic", &logic), ("knowledge", &knowledge), ("vision", &vision)] {
        if judgment.defaulted {
            defaulted_axes.push(name.to_owned());
        }
    }
    Ok(Assessment {
        scores,
        explanations: Explanations {
            logic: logic.explanation,
            knowledge: knowledge.explanation,
            vision: vision.explanation,
        },
        defaulted_axes,
        empty_visual_summary,
    })
}
