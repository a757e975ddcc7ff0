//! Shared fixtures: a small mixed corpus and fully scripted mock tables
//! covering every backend call the audit and inject pipelines make.

use std::path::Path;

use viaudit::assess;
use viaudit::backend::MockScript;
use viaudit::corpus::Sample;
use viaudit::decompose;
use viaudit::inject::{self, ErrorCategory, ErrorTaxonomy};
use viaudit::tagparse::parse_annotated;

/// Which segment mix a fixture sample carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mix {
    Plain,
    Infer,
    Know,
    Both,
}

impl Mix {
    pub fn of(index: usize) -> Mix {
        match index % 4 {
            0 => Mix::Plain,
            1 => Mix::Infer,
            2 => Mix::Know,
            _ => Mix::Both,
        }
    }
}

#[derive(Clone)]
pub struct FixtureSample {
    pub sample: Sample,
    pub mix: Mix,
    /// Step 1 reply (with prefix) and its body.
    pub marked_reply: String,
    pub annotated_body: String,
    /// Step 2 reply body; `None` when the sample has no tags.
    pub cleaned_body: Option<String>,
    pub summary_body: String,
    pub s_l: u8,
    pub s_k: u8,
    pub s_v: u8,
}

/// Deterministic mixed-content corpus. Image refs point into `image_dir`
/// when given (files are created), otherwise stay as relative paths for
/// pipelines that never open them.
pub fn fixture_samples(n: usize, image_dir: Option<&Path>) -> Vec<FixtureSample> {
    (0..n)
        .map(|i| {
            let mix = Mix::of(i);
            let image_ref = match image_dir {
                Some(dir) => {
                    let path = dir.join(format!("img{i}.png"));
                    std::fs::write(&path, [0x89, b'P', b'N', b'G', i as u8]).unwrap();
                    path.to_string_lossy().into_owned()
                }
                None => format!("images/img{i}.png"),
            };
            let (response, annotated_body, cleaned_body) = match mix {
                Mix::Plain => {
                    let response =
                        format!("A plain photo of object number {i} on a white table.");
                    (response.clone(), response, None)
                }
                Mix::Infer => {
                    let head = "A person walks quickly, ";
                    let infer = format!("clearly late for meeting {i}");
                    (
                        format!("{head}{infer}."),
                        format!("{head}<INFER>{infer}</INFER>."),
                        Some(format!("{head}moving with visible urgency {i}.")),
                    )
                }
                Mix::Know => {
                    let head = format!("A 1976 stamp from region {i}, ");
                    let know = "a place in central Europe";
                    (
                        format!("{head}{know}."),
                        format!("{head}<KNOW>{know}</KNOW>."),
                        Some(format!("{head}shown against a beige backdrop.")),
                    )
                }
                Mix::Both => {
                    let head = "The chart shows rising values, ";
                    let infer = format!("indicating growth {i}");
                    let mid = ". It references ";
                    let know = "the 1929 crash";
                    (
                        format!("{head}{infer}{mid}{know}."),
                        format!("{head}<INFER>{infer}</INFER>{mid}<KNOW>{know}</KNOW>."),
                        Some(format!("{head}an upward trend {i}{mid}numeric labels.")),
                    )
                }
            };
            let summary_body = format!("Scene {i} with plainly visible content.");
            FixtureSample {
                sample: Sample {
                    id: format!("s{i:03}"),
                    image_ref,
                    instruction: format!("Describe image {i}."),
                    response,
                },
                mix,
                marked_reply: format!("Marked Response: {annotated_body}"),
                annotated_body,
                cleaned_body,
                summary_body,
                s_l: 3 + ((i as u8) + 1) % 3,
                s_k: 3 + ((i as u8) + 2) % 3,
                s_v: 3 + ((i as u8) * 2 + 1) % 3,
            }
        })
        .collect()
}

pub fn samples_of(fixtures: &[FixtureSample]) -> Vec<Sample> {
    fixtures.iter().map(|f| f.sample.clone()).collect()
}

/// Scripts every decompose and assess call for the fixtures.
pub fn add_audit_entries(script: &mut MockScript, fixtures: &[FixtureSample]) {
    for f in fixtures {
        let annotated = parse_annotated(&f.annotated_body).unwrap();
        script.add(&decompose::tagging_messages(&f.sample), &f.marked_reply);
        let draft = match &f.cleaned_body {
            Some(cleaned) => {
                script.add(
                    &decompose::distillation_messages(&f.sample, &annotated),
                    format!("Cleaned Response: {cleaned}"),
                );
                cleaned.clone()
            }
            None => f.sample.response.clone(),
        };
        script.add(
            &decompose::synthesis_messages(&f.sample, &draft),
            format!("Visual Summary: {}", f.summary_body),
        );
        if matches!(f.mix, Mix::Infer | Mix::Both) {
            script.add(
                &assess::logic_messages(&f.sample, &annotated),
                format!("Score: {}\nExplanation: logic note for {}.", f.s_l, f.sample.id),
            );
        }
        if matches!(f.mix, Mix::Know | Mix::Both) {
            script.add(
                &assess::knowledge_messages(&annotated),
                format!("Score: {}\nExplanation: knowledge note for {}.", f.s_k, f.sample.id),
            );
        }
        script.add(
            &assess::vision_messages(&f.sample, &f.summary_body),
            format!("Score: {}\nExplanation: vision note for {}.", f.s_v, f.sample.id),
        );
    }
}

/// Scripts every injection call the fixtures could make: the content
/// analysis, both model-selected subtypes, and a rewrite per reachable
/// subtype.
pub fn add_inject_entries(script: &mut MockScript, fixtures: &[FixtureSample]) {
    let taxonomy = ErrorTaxonomy::builtin();
    for f in fixtures {
        let (reasoning, knowledge) = match f.mix {
            Mix::Plain => (false, false),
            Mix::Infer => (true, false),
            Mix::Know => (false, true),
            Mix::Both => (true, true),
        };
        script.add(
            &inject::analysis_messages(&f.sample.response),
            format!(
                r#"{{"contains_reasoning": {reasoning}, "contains_knowledge": {knowledge}}}"#
            ),
        );
        script.add(
            &inject::selection_messages(&taxonomy, ErrorCategory::Knowledge, &f.sample.response),
            r#"{"choice": "knowledge_entity"}"#,
        );
        script.add(
            &inject::selection_messages(&taxonomy, ErrorCategory::Reasoning, &f.sample.response),
            r#"{"choice": "reasoning_causal"}"#,
        );
        let reachable = ["knowledge_entity", "reasoning_causal"]
            .into_iter()
            .chain(
                taxonomy
                    .subtypes(ErrorCategory::Consistency)
                    .iter()
                    .map(|s| s.code.as_str()),
            );
        for code in reachable {
            let (_, subtype) = taxonomy.find(code).unwrap();
            script.add(
                &inject::defect_messages(subtype, &f.sample.response),
                format!("Corrupted rendition of {} via {code}.", f.sample.id),
            );
        }
    }
}
