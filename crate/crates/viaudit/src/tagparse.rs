//! Annotation grammar for decomposed responses: `<INFER>…</INFER>` and
//! `<KNOW>…</KNOW>` tags embedded in otherwise plain text.
//!
//! Tag tokens are matched byte-exactly and upper-case only. Anything that
//! merely looks like markup (`<infer>`, `<NOTE>`, a stray `<`) passes
//! through as plain text; judge models emit stray markup often enough that
//! erroring on it would make whole batches unusable.

use thiserror::Error;

pub const INFER_OPEN: &str = "<INFER>";
pub const INFER_CLOSE: &str = "</INFER>";
pub const KNOW_OPEN: &str = "<KNOW>";
pub const KNOW_CLOSE: &str = "</KNOW>";

/// Required prefixes on the three decomposition step outputs.
pub const MARKED_RESPONSE_PREFIX: &str = "Marked Response:";
pub const CLEANED_RESPONSE_PREFIX: &str = "Cleaned Response:";
pub const VISUAL_SUMMARY_PREFIX: &str = "Visual Summary:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Plain,
    Infer,
    Know,
}

impl SegmentKind {
    fn tag_tokens(self) -> Option<(&'static str, &'static str)> {
        match self {
            SegmentKind::Plain => None,
            SegmentKind::Infer => Some((INFER_OPEN, INFER_CLOSE)),
            SegmentKind::Know => Some((KNOW_OPEN, KNOW_CLOSE)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub text: String,
}

impl Segment {
    pub fn new(kind: SegmentKind, text: impl Into<String>) -> Self {
        Segment { kind, text: text.into() }
    }
}

/// An ordered sequence of plain/inferential/factual segments.
///
/// Invariants: no segment text contains a tag token, no two adjacent
/// segments are both `Plain`, and no `Plain` segment is empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotatedResponse {
    segments: Vec<Segment>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TagParseError {
    #[error("unbalanced tag: {open} at byte {pos} is never closed")]
    UnclosedTag { open: &'static str, pos: usize },
    #[error("unbalanced tag: {close} at byte {pos} has no matching open tag")]
    UnexpectedClose { close: &'static str, pos: usize },
    #[error("nested tag: {inner} at byte {pos} opened inside {outer}")]
    NestedTag {
        inner: &'static str,
        outer: &'static str,
        pos: usize,
    },
    #[error("interleaved tag: {close} at byte {pos} closes {expected_open} out of order")]
    InterleavedClose {
        close: &'static str,
        expected_open: &'static str,
        pos: usize,
    },
    #[error("segment text contains tag token {token}")]
    TokenInSegment { token: &'static str },
}

const ALL_TOKENS: [&str; 4] = [INFER_OPEN, INFER_CLOSE, KNOW_OPEN, KNOW_CLOSE];

/// True if `text` contains any of the four tag tokens.
pub fn contains_tag_token(text: &str) -> bool {
    ALL_TOKENS.iter().any(|t| text.contains(t))
}

impl AnnotatedResponse {
    /// Builds a response from raw segments, merging adjacent plain runs and
    /// dropping empty plain segments. Errors if any segment text — after
    /// merging — embeds a tag token.
    pub fn new(segments: Vec<Segment>) -> Result<Self, TagParseError> {
        let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
        for seg in segments {
            if seg.kind == SegmentKind::Plain {
                if seg.text.is_empty() {
                    continue;
                }
                if let Some(last) = out.last_mut() {
                    if last.kind == SegmentKind::Plain {
                        last.text.push_str(&seg.text);
                        continue;
                    }
                }
            }
            out.push(seg);
        }
        for seg in &out {
            for token in ALL_TOKENS {
                if seg.text.contains(token) {
                    return Err(TagParseError::TokenInSegment { token });
                }
            }
        }
        Ok(AnnotatedResponse { segments: out })
    }

    /// A single plain segment holding `text` (empty text yields no segments).
    pub fn from_plain(text: &str) -> Self {
        if text.is_empty() {
            return AnnotatedResponse::default();
        }
        AnnotatedResponse {
            segments: vec![Segment::new(SegmentKind::Plain, text)],
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Re-wraps tagged segments in their tokens and concatenates everything.
    pub fn to_tagged_string(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg.kind.tag_tokens() {
                None => out.push_str(&seg.text),
                Some((open, close)) => {
                    out.push_str(open);
                    out.push_str(&seg.text);
                    out.push_str(close);
                }
            }
        }
        out
    }

    /// Texts of all segments of kind `kind`, in order.
    pub fn segments_of_kind(&self, kind: SegmentKind) -> Vec<&str> {
        self.segments
            .iter()
            .filter(|s| s.kind == kind)
            .map(|s| s.text.as_str())
            .collect()
    }

    pub fn has_kind(&self, kind: SegmentKind) -> bool {
        self.segments.iter().any(|s| s.kind == kind)
    }

    /// True when the response carries at least one tagged segment.
    pub fn has_tags(&self) -> bool {
        self.has_kind(SegmentKind::Infer) || self.has_kind(SegmentKind::Know)
    }
}

/// Concatenation of all segment texts in order; contains no tag tokens.
pub fn strip_tags(annotated: &AnnotatedResponse) -> String {
    let mut out = String::new();
    for seg in annotated.segments() {
        out.push_str(&seg.text);
    }
    out
}

/// Parses tagged text into segments.
///
/// Plain runs between tags are preserved verbatim. Unknown or
/// wrongly-cased tags are plain text. Nested, interleaved, and unbalanced
/// tags are errors.
pub fn parse_annotated(text: &str) -> Result<AnnotatedResponse, TagParseError> {
    struct OpenTag {
        kind: SegmentKind,
        pos: usize,
        content_start: usize,
    }

    let mut segments: Vec<Segment> = Vec::new();
    let mut plain_start = 0usize;
    let mut open: Option<OpenTag> = None;
    let mut cursor = 0usize;

    while let Some((pos, token)) = next_token(text, cursor) {
        let (kind, is_open) = match token {
            INFER_OPEN => (SegmentKind::Infer, true),
            INFER_CLOSE => (SegmentKind::Infer, false),
            KNOW_OPEN => (SegmentKind::Know, true),
            _ => (SegmentKind::Know, false),
        };
        match (&open, is_open) {
            (None, true) => {
                if pos > plain_start {
                    segments.push(Segment::new(SegmentKind::Plain, &text[plain_start..pos]));
                }
                open = Some(OpenTag { kind, pos, content_start: pos + token.len() });
            }
            (None, false) => {
                return Err(TagParseError::UnexpectedClose { close: close_token(kind), pos });
            }
            (Some(o), true) => {
                return Err(TagParseError::NestedTag {
                    inner: open_token_of(kind),
                    outer: open_token_of(o.kind),
                    pos,
                });
            }
            (Some(o), false) => {
                if o.kind != kind {
                    return Err(TagParseError::InterleavedClose {
                        close: close_token(kind),
                        expected_open: open_token_of(o.kind),
                        pos,
                    });
                }
                segments.push(Segment::new(o.kind, &text[o.content_start..pos]));
                open = None;
                plain_start = pos + token.len();
            }
        }
        cursor = pos + token.len();
    }

    if let Some(o) = open {
        return Err(TagParseError::UnclosedTag { open: open_token_of(o.kind), pos: o.pos });
    }
    if text.len() > plain_start {
        segments.push(Segment::new(SegmentKind::Plain, &text[plain_start..]));
    }
    AnnotatedResponse::new(segments)
}

fn open_token_of(kind: SegmentKind) -> &'static str {
    match kind {
        SegmentKind::Infer => INFER_OPEN,
        SegmentKind::Know => KNOW_OPEN,
        SegmentKind::Plain => unreachable!("plain segments have no tag"),
    }
}

fn close_token(kind: SegmentKind) -> &'static str {
    match kind {
        SegmentKind::Infer => INFER_CLOSE,
        SegmentKind::Know => KNOW_CLOSE,
        SegmentKind::Plain => unreachable!("plain segments have no tag"),
    }
}

/// Earliest tag token at or after `from`. No two tokens can match at the
/// same byte, so the minimum position is unique.
fn next_token(text: &str, from: usize) -> Option<(usize, &'static str)> {
    let mut best: Option<(usize, &'static str)> = None;
    for token in ALL_TOKENS {
        if let Some(rel) = text[from..].find(token) {
            let pos = from + rel;
            if best.is_none_or(|(bpos, _)| pos < bpos) {
                best = Some((pos, token));
            }
        }
    }
    best
}

/// Outcome of comparing an annotated response's words against the original.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreservationReport {
    pub pass: bool,
    pub divergence: Option<TokenDivergence>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDivergence {
    /// Index of the first differing token.
    pub index: usize,
    pub original: Option<String>,
    pub annotated: Option<String>,
}

/// Checks that the annotation changed no words: the token sequence of the
/// stripped annotation must equal the original's under whitespace
/// normalization. Tokens split on Unicode whitespace only; punctuation
/// stays attached.
pub fn verify_word_preservation(original: &str, annotated: &AnnotatedResponse) -> PreservationReport {
    let stripped = strip_tags(annotated);
    let mut orig_tokens = original.split_whitespace();
    let mut anno_tokens = stripped.split_whitespace();
    let mut index = 0usize;
    loop {
        match (orig_tokens.next(), anno_tokens.next()) {
            (None, None) => {
                return PreservationReport { pass: true, divergence: None };
            }
            (o, a) => {
                if o != a {
                    return PreservationReport {
                        pass: false,
                        divergence: Some(TokenDivergence {
                            index,
                            original: o.map(str::to_owned),
                            annotated: a.map(str::to_owned),
                        }),
                    };
                }
            }
        }
        index += 1;
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("expected output to start with {expected:?}, got: {head:?}")]
pub struct PrefixError {
    pub expected: String,
    pub head: String,
}

/// Strips a required output prefix, tolerating leading whitespace and blank
/// lines before it. Matching is case-sensitive. The remainder is returned
/// with the whitespace following the prefix removed.
pub fn strip_required_prefix<'a>(text: &'a str, prefix: &str) -> Result<&'a str, PrefixError> {
    let trimmed = text.trim_start();
    match trimmed.strip_prefix(prefix) {
        Some(rest) => Ok(rest.trim_start()),
        None => Err(PrefixError {
            expected: prefix.to_owned(),
            head: trimmed.chars().take(80).collect(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(kind: SegmentKind, text: &str) -> Segment {
        Segment::new(kind, text)
    }

    #[test]
    fn parses_untagged_text_as_single_plain_segment() {
        let a = parse_annotated("The image shows a can of Coca-Cola.").unwrap();
        assert_eq!(
            a.segments(),
            &[seg(SegmentKind::Plain, "The image shows a can of Coca-Cola.")]
        );
    }

    #[test]
    fn parses_know_tag_with_surrounding_plain_text() {
        let a = parse_annotated(
            "This is a 1976 postage stamp from Hungary, <KNOW>a country in Central Europe</KNOW>.",
        )
        .unwrap();
        assert_eq!(
            a.segments(),
            &[
                seg(SegmentKind::Plain, "This is a 1976 postage stamp from Hungary, "),
                seg(SegmentKind::Know, "a country in Central Europe"),
                seg(SegmentKind::Plain, "."),
            ]
        );
    }

    #[test]
    fn parses_two_infer_segments() {
        let a = parse_annotated(
            "The lighting in the room is soft, <INFER>creating a cozy atmosphere</INFER>. \
             <INFER>The design suggests it is from the Victorian era</INFER>.",
        )
        .unwrap();
        assert_eq!(a.segments_of_kind(SegmentKind::Infer).len(), 2);
        assert_eq!(
            a.segments_of_kind(SegmentKind::Infer),
            vec![
                "creating a cozy atmosphere",
                "The design suggests it is from the Victorian era"
            ]
        );
    }

    #[test]
    fn unclosed_tag_is_an_error() {
        let err = parse_annotated("<INFER>unclosed").unwrap_err();
        assert_eq!(err, TagParseError::UnclosedTag { open: INFER_OPEN, pos: 0 });
    }

    #[test]
    fn close_without_open_is_an_error() {
        let err = parse_annotated("text </KNOW> more").unwrap_err();
        assert!(matches!(err, TagParseError::UnexpectedClose { close: KNOW_CLOSE, .. }));
    }

    #[test]
    fn nested_tags_are_errors() {
        let err = parse_annotated("<INFER>a <KNOW>b</KNOW> c</INFER>").unwrap_err();
        assert!(matches!(err, TagParseError::NestedTag { .. }));
    }

    #[test]
    fn interleaved_close_is_an_error() {
        let err = parse_annotated("<INFER>a</KNOW>").unwrap_err();
        assert!(matches!(err, TagParseError::InterleavedClose { .. }));
    }

    #[test]
    fn unknown_and_lowercase_tags_pass_through_as_plain() {
        let a = parse_annotated("a <note>b</note> c <infer>d</infer>").unwrap();
        assert_eq!(
            a.segments(),
            &[seg(SegmentKind::Plain, "a <note>b</note> c <infer>d</infer>")]
        );
    }

    #[test]
    fn strip_tags_restores_original_wording() {
        let a = parse_annotated(
            "This is a 1976 postage stamp from Hungary, <KNOW>a country in Central Europe</KNOW>.",
        )
        .unwrap();
        assert_eq!(
            strip_tags(&a),
            "This is a 1976 postage stamp from Hungary, a country in Central Europe."
        );
    }

    #[test]
    fn strip_tags_of_empty_response_is_empty() {
        assert_eq!(strip_tags(&AnnotatedResponse::default()), "");
    }

    #[test]
    fn segments_of_kind_returns_empty_when_absent() {
        let a = parse_annotated("plain, <KNOW>fact</KNOW>.").unwrap();
        assert!(a.segments_of_kind(SegmentKind::Infer).is_empty());
        assert_eq!(a.segments_of_kind(SegmentKind::Know), vec!["fact"]);
    }

    #[test]
    fn round_trip_through_tagged_string() {
        let text = "a <INFER>b</INFER> c <KNOW>d</KNOW><INFER>e</INFER> f";
        let a = parse_annotated(text).unwrap();
        assert_eq!(a.to_tagged_string(), text);
        assert_eq!(parse_annotated(&a.to_tagged_string()).unwrap(), a);
    }

    #[test]
    fn adjacent_empty_tagged_segments_round_trip() {
        let text = "<INFER></INFER><KNOW></KNOW>";
        let a = parse_annotated(text).unwrap();
        assert_eq!(a.segments().len(), 2);
        assert_eq!(a.to_tagged_string(), text);
    }

    #[test]
    fn constructor_merges_adjacent_plain_segments() {
        let a = AnnotatedResponse::new(vec![
            seg(SegmentKind::Plain, "a "),
            seg(SegmentKind::Plain, "b"),
            seg(SegmentKind::Infer, "c"),
            seg(SegmentKind::Plain, ""),
        ])
        .unwrap();
        assert_eq!(
            a.segments(),
            &[seg(SegmentKind::Plain, "a b"), seg(SegmentKind::Infer, "c")]
        );
    }

    #[test]
    fn constructor_rejects_embedded_tokens() {
        let err =
            AnnotatedResponse::new(vec![seg(SegmentKind::Infer, "has <KNOW> inside")]).unwrap_err();
        assert!(matches!(err, TagParseError::TokenInSegment { .. }));
    }

    #[test]
    fn preservation_passes_on_identity() {
        let original = "The lighting in the room is soft.";
        let a = parse_annotated(original).unwrap();
        assert!(verify_word_preservation(original, &a).pass);
    }

    #[test]
    fn preservation_passes_on_marked_example() {
        let original = "The lighting in the room is soft, creating a cozy atmosphere. \
                        The design suggests it is from the Victorian era.";
        let marked = "The lighting in the room is soft, <INFER>creating a cozy atmosphere</INFER>. \
                      <INFER>The design suggests it is from the Victorian era</INFER>.";
        let a = parse_annotated(marked).unwrap();
        let report = verify_word_preservation(original, &a);
        assert!(report.pass, "divergence: {:?}", report.divergence);
    }

    #[test]
    fn preservation_fails_at_mutated_token_index() {
        let original = "a white cat sits quietly";
        let a = parse_annotated("a white <INFER>dog</INFER> sits quietly").unwrap();
        let report = verify_word_preservation(original, &a);
        assert!(!report.pass);
        let d = report.divergence.unwrap();
        assert_eq!(d.index, 2);
        assert_eq!(d.original.as_deref(), Some("cat"));
        assert_eq!(d.annotated.as_deref(), Some("dog"));
    }

    #[test]
    fn preservation_fails_on_deleted_trailing_token() {
        let original = "a b c";
        let a = AnnotatedResponse::from_plain("a b");
        let report = verify_word_preservation(original, &a);
        assert!(!report.pass);
        let d = report.divergence.unwrap();
        assert_eq!(d.index, 2);
        assert_eq!(d.original.as_deref(), Some("c"));
        assert_eq!(d.annotated, None);
    }

    #[test]
    fn prefix_strip_handles_documented_cases() {
        assert_eq!(
            strip_required_prefix("Marked Response: A cat.", MARKED_RESPONSE_PREFIX).unwrap(),
            "A cat."
        );
        assert_eq!(
            strip_required_prefix("  \nVisual Summary: A dog.", VISUAL_SUMMARY_PREFIX).unwrap(),
            "A dog."
        );
        let err =
            strip_required_prefix("Here is the result: A cat.", MARKED_RESPONSE_PREFIX).unwrap_err();
        assert_eq!(err.expected, MARKED_RESPONSE_PREFIX);
        assert!(err.head.starts_with("Here is the result:"));
    }

    #[test]
    fn prefix_error_head_is_capped_at_80_chars() {
        let long = "x".repeat(200);
        let err = strip_required_prefix(&long, CLEANED_RESPONSE_PREFIX).unwrap_err();
        assert_eq!(err.head.chars().count(), 80);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Text drawn from an alphabet that includes tag-like characters but
        /// never a whole tag token.
        fn token_free_text() -> impl Strategy<Value = String> {
            "[a-zA-Z0-9 .,<>/INFERKNOWblank]{0,24}"
                .prop_filter("no tag tokens", |s| !contains_tag_token(s))
        }

        fn kind() -> impl Strategy<Value = SegmentKind> {
            prop_oneof![
                Just(SegmentKind::Plain),
                Just(SegmentKind::Infer),
                Just(SegmentKind::Know),
            ]
        }

        fn annotated() -> impl Strategy<Value = AnnotatedResponse> {
            proptest::collection::vec((kind(), token_free_text()), 0..8).prop_filter_map(
                "merged plain runs may form a token",
                |parts| {
                    AnnotatedResponse::new(
                        parts.into_iter().map(|(k, t)| Segment::new(k, t)).collect(),
                    )
                    .ok()
                },
            )
        }

        proptest! {
            #[test]
            fn serialize_then_parse_round_trips(a in annotated()) {
                let tagged = a.to_tagged_string();
                let reparsed = parse_annotated(&tagged).unwrap();
                prop_assert_eq!(reparsed, a);
            }

            #[test]
            fn strip_tags_is_identity_on_token_free_text(t in token_free_text()) {
                let a = parse_annotated(&t).unwrap();
                prop_assert_eq!(strip_tags(&a), t);
            }

            #[test]
            fn preservation_holds_for_arbitrary_non_overlapping_wraps(
                chunks in proptest::collection::vec(
                    (token_free_text(), proptest::option::of(kind())),
                    0..8,
                ),
            ) {
                let mut original = String::new();
                let mut tagged = String::new();
                for (text, wrap) in &chunks {
                    original.push_str(text);
                    match wrap {
                        Some(SegmentKind::Infer) => {
                            tagged.push_str(INFER_OPEN);
                            tagged.push_str(text);
                            tagged.push_str(INFER_CLOSE);
                        }
                        Some(SegmentKind::Know) => {
                            tagged.push_str(KNOW_OPEN);
                            tagged.push_str(text);
                            tagged.push_str(KNOW_CLOSE);
                        }
                        _ => tagged.push_str(text),
                    }
                }
                // Chunk boundaries must not assemble a literal tag token.
                prop_assume!(!contains_tag_token(&original));
                let parsed = parse_annotated(&tagged).unwrap();
                let report = verify_word_preservation(&original, &parsed);
                prop_assert!(report.pass, "divergence: {:?}", report.divergence);
            }
        }
    }
}
