use serde::Serialize;

use crate::domain::ScenarioTag;

/// One routing category with its diagnostic definition, a representative
/// prompt, and its tie-breaking rank (1 wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TaxonomyEntry {
    pub tag: ScenarioTag,
    pub definition: &'static str,
    pub example_prompt: &'static str,
    pub priority_rank: u8,
}

pub const TAXONOMY: [TaxonomyEntry; 11] = [
    TaxonomyEntry {
        tag: ScenarioTag::AbstractDescriptions,
        definition: "metaphorical/symbolic/abstract intent; requires semantic grounding beyond literal objects.",
        example_prompt: "Hope dances in a field of forgotten dreams.",
        priority_rank: 1,
    },
    TaxonomyEntry {
        tag: ScenarioTag::ComplexSpatialRelations,
        definition: "explicit geometric relations (left/right/between/center/above/behind) that must be satisfied.",
        example_prompt: "A cat sits between a dog and a parrot hovering above them.",
        priority_rank: 2,
    },
    TaxonomyEntry {
        tag: ScenarioTag::MultiElementScenes,
        definition: "high visual density; many salient entities/objects; preserving completeness and counts.",
        example_prompt: "Ten performers dance under fireworks in a crowded plaza.",
        priority_rank: 3,
    },
    TaxonomyEntry {
        tag: ScenarioTag::FineGrainedAppearance,
        definition: "identity/textures/text/small details/materials are essential.",
        example_prompt: "A close-up of a cracked porcelain cup with visible glaze texture.",
        priority_rank: 4,
    },
    TaxonomyEntry {
        tag: ScenarioTag::TemporalConsistency,
        definition: "time evolution or long-range continuity is central (blooming, melting, state progression).",
        example_prompt: "A flower bud slowly opens into full bloom.",
        priority_rank: 5,
    },
    TaxonomyEntry {
        tag: ScenarioTag::StylisticHybrids,
        definition: "multiple distinct styles must co-exist coherently (e.g., oil painting + cyberpunk).",
        example_prompt: "A medieval castle rendered in cyberpunk neon style.",
        priority_rank: 6,
    },
    TaxonomyEntry {
        tag: ScenarioTag::CausalityPhysics,
        definition: "cause-effect chains or physically plausible dynamics are required (falling, shattering, splashing).",
        example_prompt: "A glass is pushed off a table and shatters on the floor.",
        priority_rank: 7,
    },
    TaxonomyEntry {
        tag: ScenarioTag::CameraMotion,
        definition: "camera trajectory is central (pan/tilt/zoom/orbit/tracking shot).",
        example_prompt: "The camera slowly pans across a busy marketplace.",
        priority_rank: 8,
    },
    TaxonomyEntry {
        tag: ScenarioTag::ObjectInteraction,
        definition: "explicit contact/manipulation between entities (pick up/pour/collide/grasp), interaction-driven motion/occlusion.",
        example_prompt: "A person pours water into a cup and places it down.",
        priority_rank: 9,
    },
    TaxonomyEntry {
        tag: ScenarioTag::SceneTransitions,
        definition: "multi-shot structure, cuts, or transitions are essential.",
        example_prompt: "The scene cuts from a city street to a quiet bedroom at night.",
        priority_rank: 10,
    },
    TaxonomyEntry {
        tag: ScenarioTag::NonDifficult,
        definition: "none of the above applies.",
        example_prompt: "A child runs across a field.",
        priority_rank: 11,
    },
];

pub fn taxonomy_entry(tag: ScenarioTag) -> &'static TaxonomyEntry {
    TAXONOMY.iter().find(|e| e.tag == tag).expect("every tag has an entry")
}
