use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::DomainError;

/// Routing label assigned by the scenario router: ten complex-scenario
/// categories plus the conservative `NonDifficult` fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioTag {
    AbstractDescriptions,
    ComplexSpatialRelations,
    MultiElementScenes,
    FineGrainedAppearance,
    TemporalConsistency,
    StylisticHybrids,
    CausalityPhysics,
    CameraMotion,
    ObjectInteraction,
    SceneTransitions,
    NonDifficult,
}

impl ScenarioTag {
    /// All labels in tie-breaking priority order.
    pub const ALL: [ScenarioTag; 11] = [
        ScenarioTag::AbstractDescriptions,
        ScenarioTag::ComplexSpatialRelations,
        ScenarioTag::MultiElementScenes,
        ScenarioTag::FineGrainedAppearance,
        ScenarioTag::TemporalConsistency,
        ScenarioTag::StylisticHybrids,
        ScenarioTag::CausalityPhysics,
        ScenarioTag::CameraMotion,
        ScenarioTag::ObjectInteraction,
        ScenarioTag::SceneTransitions,
        ScenarioTag::NonDifficult,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ScenarioTag::AbstractDescriptions => "Abstract Descriptions",
            ScenarioTag::ComplexSpatialRelations => "Complex Spatial Relations",
            ScenarioTag::MultiElementScenes => "Multi-Element Scenes",
            ScenarioTag::FineGrainedAppearance => "Fine-Grained Appearance",
            ScenarioTag::TemporalConsistency => "Temporal Consistency",
            ScenarioTag::StylisticHybrids => "Stylistic Hybrids",
            ScenarioTag::CausalityPhysics => "Causality & Physics",
            ScenarioTag::CameraMotion => "Camera Motion",
            ScenarioTag::ObjectInteraction => "Object Interaction",
            ScenarioTag::SceneTransitions => "Scene Transitions",
            ScenarioTag::NonDifficult => "Non-difficult",
        }
    }

    pub fn is_complex(self) -> bool {
        self != ScenarioTag::NonDifficult
    }
}

impl fmt::Display for ScenarioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Maps a free-form label onto the canonical tag set.
///
/// Matching trims, collapses internal whitespace and ignores case, so
/// `"non-difficult"` and `"Non-difficult"` both resolve to the fallback tag.
pub fn canonicalize_tag(raw: &str) -> Result<ScenarioTag, DomainError> {
    let normalized = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    ScenarioTag::ALL
        .into_iter()
        .find(|tag| tag.label().eq_ignore_ascii_case(&normalized))
        .ok_or_else(|| DomainError::UnknownTag(raw.to_string()))
}

impl std::str::FromStr for ScenarioTag {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        canonicalize_tag(s)
    }
}

impl Serialize for ScenarioTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for ScenarioTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        canonicalize_tag(&raw).map_err(serde::de::Error::custom)
    }
}
