//! Which question kinds and features each interchange format can carry.

use crate::model::{BodyKind, Format, Question, QuestionBody};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    Kind(BodyKind),
    /// Multi-answer questions and partial-credit weights.
    Weights,
    Media,
    Titles,
    /// Per-answer feedback.
    Feedback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormatCapability {
    pub format: Format,
}

impl FormatCapability {
    pub fn of(format: Format) -> Self {
        FormatCapability { format }
    }

    pub fn supports(&self, feature: Feature) -> bool {
        match self.format {
            Format::Aiken => matches!(feature, Feature::Kind(BodyKind::MultipleChoice)),
            // GIFT carries media only through the zip bundle.
            Format::Gift | Format::MoodleXml => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapabilityVerdict {
    pub supported: bool,
    pub reason: Option<String>,
    /// Stable short code for the unsupported feature, when unsupported.
    pub code: Option<&'static str>,
    /// Set when the question is supported but its media must travel in a
    /// GIFT-with-media zip archive.
    pub needs_bundle: bool,
}

impl CapabilityVerdict {
    fn ok(needs_bundle: bool) -> Self {
        CapabilityVerdict { supported: true, reason: None, code: None, needs_bundle }
    }

    fn refuse(code: &'static str, reason: String) -> Self {
        CapabilityVerdict { supported: false, reason: Some(reason), code: Some(code), needs_bundle: false }
    }
}

pub fn capability_check(q: &Question, target: Format) -> CapabilityVerdict {
    let caps = FormatCapability::of(target);
    let kind = q.kind();
    if !caps.supports(Feature::Kind(kind)) {
        return CapabilityVerdict::refuse(
            "kind-unsupported",
            format!("{target} cannot hold {kind} questions"),
        );
    }
    if let QuestionBody::MultipleChoice { single: false, .. } = q.body {
        if !caps.supports(Feature::Weights) {
            return CapabilityVerdict::refuse(
                "kind-unsupported",
                format!("{target} cannot hold multi-answer {kind} questions"),
            );
        }
    }
    if !q.media.is_empty() && !caps.supports(Feature::Media) {
        return CapabilityVerdict::refuse("media-unsupported", format!("{target} cannot carry media files"));
    }
    CapabilityVerdict::ok(target == Format::Gift && !q.media.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Answer, MatchPair, MediaFile};

    fn single_mc() -> Question {
        Question::new(
            "Q",
            QuestionBody::MultipleChoice {
                single: true,
                answers: vec![Answer::new("a", 100.0), Answer::new("b", 0.0)],
            },
        )
    }

    #[test]
    fn matching_to_aiken_names_kind() {
        let q = Question::new(
            "M",
            QuestionBody::Matching {
                pairs: vec![MatchPair::new("a", "1"), MatchPair::new("b", "2")],
                extra_responses: vec![],
            },
        );
        let v = capability_check(&q, Format::Aiken);
        assert!(!v.supported);
        assert!(v.reason.unwrap().contains("matching"));
    }

    #[test]
    fn single_mc_to_aiken() {
        let v = capability_check(&single_mc(), Format::Aiken);
        assert_eq!(v, CapabilityVerdict::ok(false));
    }

    #[test]
    fn essay_with_image_to_gift_needs_bundle() {
        let mut q = Question::new("<img src=\"a.png\">", QuestionBody::Essay);
        q.media.push(MediaFile::named("a.png"));
        let v = capability_check(&q, Format::Gift);
        assert!(v.supported && v.reason.is_none() && v.needs_bundle);
        assert!(!capability_check(&q, Format::Aiken).supported);
        assert!(!capability_check(&q, Format::MoodleXml).needs_bundle);
    }

    #[test]
    fn media_blocks_aiken() {
        let mut q = single_mc();
        q.media.push(MediaFile::named("a.png"));
        let v = capability_check(&q, Format::Aiken);
        assert_eq!(v.code, Some("media-unsupported"));
    }

    #[test]
    fn matrix_rows() {
        let aiken = FormatCapability::of(Format::Aiken);
        for f in [Feature::Media, Feature::Titles, Feature::Weights, Feature::Feedback] {
            assert!(!aiken.supports(f));
        }
        for kind in BodyKind::ALL {
            assert_eq!(aiken.supports(Feature::Kind(kind)), kind == BodyKind::MultipleChoice);
            assert!(FormatCapability::of(Format::Gift).supports(Feature::Kind(kind)));
            assert!(FormatCapability::of(Format::MoodleXml).supports(Feature::Kind(kind)));
        }
    }
}
