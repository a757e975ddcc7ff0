//! Three-stage defect injection for benchmark construction: content
//! analysis, cascaded error-category selection, guided rewriting.
//!
//! Knowledge and reasoning defects are rarer in the wild than perceptual
//! ones, so the cascade prioritizes them: a knowledge-flagged text draws a
//! knowledge defect with probability 0.8, a reasoning-flagged text draws a
//! reasoning defect with probability 0.6, and consistency is the default.
//! Both gate draws are always consumed, making every outcome a pure
//! function of the flags and the per-sample stream.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ChatMessage, Client};
use crate::batch;
use crate::corpus::Sample;
use crate::prompts;
use crate::rng::sample_stream;

pub const KNOWLEDGE_GATE: f64 = 0.8;
pub const REASONING_GATE: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Pristine,
    Injected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorCategory {
    Consistency,
    Reasoning,
    Knowledge,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Consistency => "consistency",
            ErrorCategory::Reasoning => "reasoning",
            ErrorCategory::Knowledge => "knowledge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subtype {
    pub code: String,
    pub description: String,
    pub instruction: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CategoryEntry {
    name: ErrorCategory,
    subtypes: Vec<Subtype>,
}

/// The defect catalog: three categories, fourteen subtypes, each with a
/// rewrite instruction. Ships as a data file so instructions are editable
/// without rebuilds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorTaxonomy {
    pub version: String,
    categories: Vec<CategoryEntry>,
}

const BUILTIN_TAXONOMY: &str = include_str!("../assets/taxonomy.json");

const EXPECTED_CODES: [(&str, ErrorCategory); 14] = [
    ("consistency_attribute", ErrorCategory::Consistency),
    ("consistency_spatial", ErrorCategory::Consistency),
    ("consistency_action", ErrorCategory::Consistency),
    ("consistency_fake", ErrorCategory::Consistency),
    ("consistency_misidentification", ErrorCategory::Consistency),
    ("reasoning_conclusion", ErrorCategory::Reasoning),
    ("reasoning_causal", ErrorCategory::Reasoning),
    ("reasoning_prediction", ErrorCategory::Reasoning),
    ("reasoning_procedural", ErrorCategory::Reasoning),
    ("reasoning_comparison", ErrorCategory::Reasoning),
    ("knowledge_entity", ErrorCategory::Knowledge),
    ("knowledge_context", ErrorCategory::Knowledge),
    ("knowledge_definition", ErrorCategory::Knowledge),
    ("knowledge_attribution", ErrorCategory::Knowledge),
];

impl ErrorTaxonomy {
    pub fn builtin() -> Self {
        let taxonomy: ErrorTaxonomy =
            serde_json::from_str(BUILTIN_TAXONOMY).expect("embedded taxonomy parses");
        taxonomy.validate().expect("embedded taxonomy is valid");
        taxonomy
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self, InjectError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| InjectError::Taxonomy(format!("cannot read {:?}: {e}", path.as_ref())))?;
        let taxonomy: ErrorTaxonomy = serde_json::from_str(&text)
            .map_err(|e| InjectError::Taxonomy(format!("bad taxonomy file: {e}")))?;
        taxonomy.validate()?;
        Ok(taxonomy)
    }

    /// Checks the exact subtype-code set, category membership, and
    /// non-empty instructions.
    pub fn validate(&self) -> Result<(), InjectError> {
        let mut found = Vec::new();
        for entry in &self.categories {
            for subtype in &entry.subtypes {
                if subtype.instruction.trim().is_empty() {
                    return Err(InjectError::Taxonomy(format!(
                        "subtype {} has an empty instruction",
                        subtype.code
                    )));
                }
                found.push((subtype.code.as_str(), entry.name));
            }
        }
        let mut expected: Vec<_> = EXPECTED_CODES.to_vec();
        let mut got = found.clone();
        expected.sort();
        got.sort();
        if expected != got {
            return Err(InjectError::Taxonomy(format!(
                "subtype codes do not match the documented catalog: {found:?}"
            )));
        }
        Ok(())
    }

    pub fn subtypes(&self, category: ErrorCategory) -> &[Subtype] {
        self.categories
            .iter()
            .find(|c| c.name == category)
            .map(|c| c.subtypes.as_slice())
            .unwrap_or(&[])
    }

    /// One `code: description` line per subtype, in catalog order. Fixed
    /// canonical rendering keeps the selection prompt reproducible.
    pub fn options_text(&self, category: ErrorCategory) -> String {
        self.subtypes(category)
            .iter()
            .map(|s| format!("{}: {}", s.code, s.description))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn find(&self, code: &str) -> Option<(ErrorCategory, &Subtype)> {
        for entry in &self.categories {
            if let Some(subtype) = entry.subtypes.iter().find(|s| s.code == code) {
                return Some((entry.name, subtype));
            }
        }
        None
    }

    pub fn is_subtype_of(&self, code: &str, category: ErrorCategory) -> bool {
        matches!(self.find(code), Some((c, _)) if c == category)
    }
}

/// Stage 1 output: whether the text carries reasoning and/or external
/// knowledge. Both keys must be present booleans; a missing key is a parse
/// error, never a silent false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentAnalysis {
    pub contains_reasoning: bool,
    pub contains_knowledge: bool,
}

#[derive(Debug, Error)]
pub enum InjectError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no JSON object in completion: {head:?}")]
    NoJsonObject { head: String },
    #[error("bad content analysis: {0}")]
    BadAnalysis(String),
    #[error("rewrite unchanged from original after {attempts} attempt(s)")]
    UnchangedOutput { attempts: u32 },
    #[error("empty rewrite after {attempts} attempt(s)")]
    EmptyOutput { attempts: u32 },
    #[error("challenge fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("taxonomy error: {0}")]
    Taxonomy(String),
}

/// First balanced `{...}` object in `text`, respecting JSON string
/// escapes.
pub fn extract_first_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=start + offset]);
                }
            }
            _ => {}
        }
    }
    None
}

pub fn analysis_messages(response: &str) -> Vec<ChatMessage> {
    vec![ChatMessage::user(prompts::content_analysis(response))]
}

/// Stage 1: asks the model whether the response carries reasoning or
/// external knowledge. Tolerates prose around the JSON object.
pub async fn analyze_content(response: &str, client: &Client) -> Result<ContentAnalysis, InjectError> {
    let completion = client.complete(&analysis_messages(response)).await?;
    let object = extract_first_json_object(&completion.text).ok_or_else(|| {
        InjectError::NoJsonObject { head: completion.text.chars().take(120).collect() }
    })?;
    let value: serde_json::Value =
        serde_json::from_str(object).map_err(|e| InjectError::BadAnalysis(e.to_string()))?;
    let get_bool = |key: &str| -> Result<bool, InjectError> {
        value
            .get(key)
            .ok_or_else(|| InjectError::BadAnalysis(format!("missing key {key:?}")))?
            .as_bool()
            .ok_or_else(|| InjectError::BadAnalysis(format!("key {key:?} is not a boolean")))
    };
    Ok(ContentAnalysis {
        contains_reasoning: get_bool("contains_reasoning")?,
        contains_knowledge: get_bool("contains_knowledge")?,
    })
}

/// Category choice as a pure function of the flags and the two gate draws.
pub fn category_from_draws(
    analysis: ContentAnalysis,
    knowledge_draw: f64,
    reasoning_draw: f64,
) -> ErrorCategory {
    if analysis.contains_knowledge && knowledge_draw < KNOWLEDGE_GATE {
        ErrorCategory::Knowledge
    } else if analysis.contains_reasoning && reasoning_draw < REASONING_GATE {
        ErrorCategory::Reasoning
    } else {
        ErrorCategory::Consistency
    }
}

/// Stage 2a: probabilistic cascade. Knowledge is tested before reasoning;
/// both gate draws are consumed regardless of the flags.
pub fn choose_category(analysis: ContentAnalysis, rng: &mut impl Rng) -> ErrorCategory {
    let knowledge_draw: f64 = rng.random();
    let reasoning_draw: f64 = rng.random();
    category_from_draws(analysis, knowledge_draw, reasoning_draw)
}

/// Maps a unit draw onto one of `n` equally likely indices.
pub fn uniform_index(draw: f64, n: usize) -> usize {
    ((draw * n as f64) as usize).min(n - 1)
}

/// Stage 2b for consistency: subtype uniform over the catalog using the
/// next draw.
pub fn choose_consistency_subtype<'t>(
    taxonomy: &'t ErrorTaxonomy,
    rng: &mut impl Rng,
) -> &'t Subtype {
    let subtypes = taxonomy.subtypes(ErrorCategory::Consistency);
    &subtypes[uniform_index(rng.random(), subtypes.len())]
}

pub fn selection_messages(
    taxonomy: &ErrorTaxonomy,
    category: ErrorCategory,
    response: &str,
) -> Vec<ChatMessage> {
    vec![ChatMessage::user(prompts::subtype_selection(
        &taxonomy.options_text(category),
        response,
    ))]
}

fn find_subtype_code(value: &serde_json::Value, taxonomy: &ErrorTaxonomy, category: ErrorCategory) -> Option<String> {
    match value {
        serde_json::Value::String(s) => {
            let s = s.trim();
            taxonomy.is_subtype_of(s, category).then(|| s.to_owned())
        }
        serde_json::Value::Object(map) => map
            .values()
            .find_map(|v| find_subtype_code(v, taxonomy, category)),
        serde_json::Value::Array(items) => items
            .iter()
            .find_map(|v| find_subtype_code(v, taxonomy, category)),
        _ => None,
    }
}

struct SubtypeChoice {
    code: String,
    draw: Option<f64>,
}

async fn choose_subtype(
    category: ErrorCategory,
    response: &str,
    taxonomy: &ErrorTaxonomy,
    rng: &mut (impl Rng + Send),
    client: &Client,
) -> Result<SubtypeChoice, InjectError> {
    if category == ErrorCategory::Consistency {
        let draw: f64 = rng.random();
        let subtypes = taxonomy.subtypes(category);
        return Ok(SubtypeChoice {
            code: subtypes[uniform_index(draw, subtypes.len())].code.clone(),
            draw: Some(draw),
        });
    }
    let completion = client.complete(&selection_messages(taxonomy, category, response)).await?;
    let chosen = extract_first_json_object(&completion.text)
        .and_then(|object| serde_json::from_str::<serde_json::Value>(object).ok())
        .and_then(|value| find_subtype_code(&value, taxonomy, category));
    match chosen {
        Some(code) => Ok(SubtypeChoice { code, draw: None }),
        None => {
            let draw: f64 = rng.random();
            let subtypes = taxonomy.subtypes(category);
            let code = subtypes[uniform_index(draw, subtypes.len())].code.clone();
            log::warn!(
                "subtype selection for {} returned no valid code; falling back to {code}",
                category.as_str()
            );
            Ok(SubtypeChoice { code, draw: Some(draw) })
        }
    }
}

/// Stage 2: picks the error category by cascade, then the subtype — by a
/// model call for knowledge/reasoning (the answer must name a subtype of
/// the chosen category; anything else falls back to a uniform pick, logged)
/// or uniformly at random for consistency.
pub async fn select_error(
    analysis: ContentAnalysis,
    response: &str,
    taxonomy: &ErrorTaxonomy,
    rng: &mut (impl Rng + Send),
    client: &Client,
) -> Result<(ErrorCategory, String), InjectError> {
    let category = choose_category(analysis, rng);
    let choice = choose_subtype(category, response, taxonomy, rng, client).await?;
    Ok((category, choice.code))
}

pub fn defect_messages(subtype: &Subtype, original: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(prompts::DEFECT_GENERATION_SYSTEM),
        ChatMessage::user(prompts::defect_generation_user(&subtype.instruction, original)),
    ]
}

fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Strips wrapper preambles the system prompt forbids but models still
/// emit: a `Rewritten Text:` prefix and symmetric quote wrapping.
fn strip_rewrite_wrappers(text: &str) -> &str {
    let mut out = text.trim();
    let lowered = out.to_ascii_lowercase();
    if let Some(rest_at) = lowered.strip_prefix("rewritten text:") {
        out = out[out.len() - rest_at.len()..].trim_start();
    }
    for (open, close) in [('"', '"'), ('\u{201c}', '\u{201d}'), ('\u{2018}', '\u{2019}')] {
        if out.len() >= 2 && out.starts_with(open) && out.ends_with(close) {
            out = out[open.len_utf8()..out.len() - close.len_utf8()].trim();
        }
    }
    out
}

/// Stage 3: rewrites the response per the subtype instruction. The result
/// must be non-empty and differ from the original under whitespace
/// normalization; retries, then fails.
pub async fn inject_defect(
    original: &str,
    subtype: &Subtype,
    client: &Client,
    validation_retries: u32,
) -> Result<String, InjectError> {
    let messages = defect_messages(subtype, original);
    let original_norm = normalize_ws(original);
    let mut attempts = 0;
    let mut saw_empty = false;
    while attempts <= validation_retries {
        attempts += 1;
        let completion = client.complete(&messages).await?;
        let corrupted = strip_rewrite_wrappers(&completion.text);
        if corrupted.is_empty() {
            saw_empty = true;
            continue;
        }
        if normalize_ws(corrupted) == original_norm {
            saw_empty = false;
            continue;
        }
        return Ok(corrupted.to_owned());
    }
    Err(if saw_empty {
        InjectError::EmptyOutput { attempts }
    } else {
        InjectError::UnchangedOutput { attempts }
    })
}

/// The unit-interval draws consumed for one injected sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionDraws {
    pub partition: f64,
    pub knowledge_gate: f64,
    pub reasoning_gate: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subtype: Option<f64>,
}

/// Full provenance of one successful injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub sample_id: String,
    pub original_response: String,
    pub corrupted_response: String,
    pub category: ErrorCategory,
    pub subtype_code: String,
    pub analysis: ContentAnalysis,
    pub draws: InjectionDraws,
}

/// One line of the labeled benchmark. Extends the corpus schema; injected
/// records carry the defect labels and the original text, reverted ones
/// stay pristine with the reason recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub id: String,
    #[serde(rename = "image")]
    pub image_ref: String,
    pub instruction: String,
    pub response: String,
    pub label: Label,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub category: Option<ErrorCategory>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subtype: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub original_response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub revert_reason: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectStats {
    pub pristine: usize,
    pub injected: usize,
    pub reverted: usize,
}

/// Runs the full injection pipeline for one sample that drew into the
/// challenge partition.
async fn inject_sample(
    sample: &Sample,
    taxonomy: &ErrorTaxonomy,
    rng: &mut (impl Rng + Send),
    client: &Client,
    validation_retries: u32,
    partition: f64,
) -> Result<InjectionRecord, InjectError> {
    let analysis = analyze_content(&sample.response, client).await?;
    let knowledge_gate: f64 = rng.random();
    let reasoning_gate: f64 = rng.random();
    let category = category_from_draws(analysis, knowledge_gate, reasoning_gate);
    let choice = choose_subtype(category, &sample.response, taxonomy, rng, client).await?;
    let (_, subtype) = taxonomy.find(&choice.code).expect("chosen code is in the taxonomy");
    let corrupted = inject_defect(&sample.response, subtype, client, validation_retries).await?;
    Ok(InjectionRecord {
        sample_id: sample.id.clone(),
        original_response: sample.response.clone(),
        corrupted_response: corrupted,
        category,
        subtype_code: choice.code,
        analysis,
        draws: InjectionDraws {
            partition,
            knowledge_gate,
            reasoning_gate,
            subtype: choice.draw,
        },
    })
}

/// Produces the labeled benchmark line for one sample: a seeded partition
/// draw routes it through the injection stages or passes it through
/// pristine; a failed injection reverts to pristine with the reason
/// recorded. Never fails the sample outward.
pub async fn benchmark_record(
    sample: &Sample,
    challenge_fraction: f64,
    seed: u64,
    taxonomy: &ErrorTaxonomy,
    client: &Client,
    validation_retries: u32,
) -> BenchmarkRecord {
    let mut rng = sample_stream(seed, &sample.id);
    let partition: f64 = rng.random();
    if partition >= challenge_fraction {
        return pristine_record(sample, None);
    }
    match inject_sample(sample, taxonomy, &mut rng, client, validation_retries, partition).await {
        Ok(record) => BenchmarkRecord {
            id: sample.id.clone(),
            image_ref: sample.image_ref.clone(),
            instruction: sample.instruction.clone(),
            response: record.corrupted_response,
            label: Label::Injected,
            category: Some(record.category),
            subtype: Some(record.subtype_code),
            original_response: Some(record.original_response),
            revert_reason: None,
        },
        Err(e) => {
            log::warn!("sample {}: injection failed, reverting to pristine: {e}", sample.id);
            pristine_record(sample, Some(e.to_string()))
        }
    }
}

/// Builds the labeled benchmark over a whole corpus. Output order equals
/// input order regardless of concurrency.
pub async fn build_benchmark(
    samples: Vec<Sample>,
    challenge_fraction: f64,
    seed: u64,
    taxonomy: &ErrorTaxonomy,
    client: &Client,
    validation_retries: u32,
    concurrency: usize,
) -> Result<(Vec<BenchmarkRecord>, InjectStats), InjectError> {
    if !(0.0..=1.0).contains(&challenge_fraction) || challenge_fraction.is_nan() {
        return Err(InjectError::InvalidFraction(challenge_fraction));
    }
    let records = batch::run_ordered(samples, concurrency, |_, sample| async move {
        benchmark_record(&sample, challenge_fraction, seed, taxonomy, client, validation_retries)
            .await
    })
    .await;

    let mut stats = InjectStats::default();
    for record in &records {
        match (record.label, &record.revert_reason) {
            (Label::Injected, _) => stats.injected += 1,
            (Label::Pristine, Some(_)) => stats.reverted += 1,
            (Label::Pristine, None) => stats.pristine += 1,
        }
    }
    Ok((records, stats))
}

fn pristine_record(sample: &Sample, revert_reason: Option<String>) -> BenchmarkRecord {
    BenchmarkRecord {
        id: sample.id.clone(),
        image_ref: sample.image_ref.clone(),
        instruction: sample.instruction.clone(),
        response: sample.response.clone(),
        label: Label::Pristine,
        category: None,
        subtype: None,
        original_response: None,
        revert_reason,
    }
}
