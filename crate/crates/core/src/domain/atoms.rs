use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{word_count, DomainError, UserPrompt};

pub const MAX_ATOM_WORDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomCategory {
    Characters,
    Objects,
    Actions,
    Locations,
    Scenery,
}

impl AtomCategory {
    /// Flattening order.
    pub const ALL: [AtomCategory; 5] = [
        AtomCategory::Characters,
        AtomCategory::Objects,
        AtomCategory::Actions,
        AtomCategory::Locations,
        AtomCategory::Scenery,
    ];

    pub fn key(self) -> &'static str {
        match self {
            AtomCategory::Characters => "characters",
            AtomCategory::Objects => "objects",
            AtomCategory::Actions => "actions",
            AtomCategory::Locations => "locations",
            AtomCategory::Scenery => "scenery",
        }
    }
}

impl fmt::Display for AtomCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Blank,
    NotVerbatim,
    TooManyWords,
    Duplicate,
}

/// An atom rejected while building a dictionary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedAtom {
    pub category: AtomCategory,
    pub text: String,
    pub reason: DropReason,
}

/// Field-wise verbatim constraints extracted from the user prompt.
///
/// Every atom is a case-sensitive substring of the prompt it was built
/// against, holds 1 to 4 words and is unique within its field.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDictionary")]
pub struct AtomDictionary {
    characters: Vec<String>,
    objects: Vec<String>,
    actions: Vec<String>,
    locations: Vec<String>,
    scenery: Vec<String>,
}

#[derive(Deserialize)]
struct RawDictionary {
    #[serde(default)]
    characters: Vec<String>,
    #[serde(default)]
    objects: Vec<String>,
    #[serde(default)]
    actions: Vec<String>,
    #[serde(default)]
    locations: Vec<String>,
    #[serde(default)]
    scenery: Vec<String>,
}

impl TryFrom<RawDictionary> for AtomDictionary {
    type Error = DomainError;

    fn try_from(raw: RawDictionary) -> Result<Self, Self::Error> {
        let dict = AtomDictionary {
            characters: raw.characters,
            objects: raw.objects,
            actions: raw.actions,
            locations: raw.locations,
            scenery: raw.scenery,
        };
        for category in AtomCategory::ALL {
            let atoms = dict.field(category);
            let mut seen = HashSet::new();
            for atom in atoms {
                let words = word_count(atom);
                if atom.trim() != atom || words == 0 || words > MAX_ATOM_WORDS {
                    return Err(DomainError::Invariant(format!(
                        "atom {atom:?} in {category} must be 1-{MAX_ATOM_WORDS} trimmed words"
                    )));
                }
                if !seen.insert(atom.as_str()) {
                    return Err(DomainError::Invariant(format!(
                        "duplicate atom {atom:?} in {category}"
                    )));
                }
            }
        }
        Ok(dict)
    }
}

impl AtomDictionary {
    /// Builds a dictionary from candidate atoms, keeping only those that
    /// satisfy the verbatim, length and uniqueness rules against `prompt`.
    /// Rejected candidates are reported in order of appearance.
    pub fn from_candidates<I, S>(prompt: &UserPrompt, candidates: I) -> (Self, Vec<DroppedAtom>)
    where
        I: IntoIterator<Item = (AtomCategory, S)>,
        S: AsRef<str>,
    {
        let mut dict = AtomDictionary::default();
        let mut dropped = Vec::new();
        for (category, raw) in candidates {
            let text = raw.as_ref().trim();
            let reason = if text.is_empty() {
                Some(DropReason::Blank)
            } else if !prompt.text().contains(text) {
                Some(DropReason::NotVerbatim)
            } else if word_count(text) > MAX_ATOM_WORDS {
                Some(DropReason::TooManyWords)
            } else if dict.field(category).iter().any(|a| a == text) {
                Some(DropReason::Duplicate)
            } else {
                None
            };
            match reason {
                Some(reason) => dropped.push(DroppedAtom {
                    category,
                    text: raw.as_ref().to_string(),
                    reason,
                }),
                None => dict.field_mut(category).push(text.to_string()),
            }
        }
        (dict, dropped)
    }

    pub fn field(&self, category: AtomCategory) -> &[String] {
        match category {
            AtomCategory::Characters => &self.characters,
            AtomCategory::Objects => &self.objects,
            AtomCategory::Actions => &self.actions,
            AtomCategory::Locations => &self.locations,
            AtomCategory::Scenery => &self.scenery,
        }
    }

    fn field_mut(&mut self, category: AtomCategory) -> &mut Vec<String> {
        match category {
            AtomCategory::Characters => &mut self.characters,
            AtomCategory::Objects => &mut self.objects,
            AtomCategory::Actions => &mut self.actions,
            AtomCategory::Locations => &mut self.locations,
            AtomCategory::Scenery => &mut self.scenery,
        }
    }

    pub fn len(&self) -> usize {
        AtomCategory::ALL.iter().map(|&c| self.field(c).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the verbatim rule against a prompt, e.g. after deserializing.
    pub fn validate_against(&self, prompt: &UserPrompt) -> Result<(), DomainError> {
        for category in AtomCategory::ALL {
            if let Some(atom) = self.field(category).iter().find(|a| !prompt.text().contains(a.as_str())) {
                return Err(DomainError::Invariant(format!(
                    "atom {atom:?} in {category} is not a substring of the prompt"
                )));
            }
        }
        Ok(())
    }

    pub fn flatten(&self) -> Vec<Atom> {
        flatten_atoms(self)
    }
}

/// One atom of the flattened list, carrying its dense position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub category: AtomCategory,
    pub text: String,
    pub index: usize,
}

/// Flattens in field order characters, objects, actions, locations, scenery,
/// keeping within-field order and assigning indices `0..n`.
pub fn flatten_atoms(dict: &AtomDictionary) -> Vec<Atom> {
    AtomCategory::ALL
        .iter()
        .flat_map(|&category| dict.field(category).iter().map(move |text| (category, text)))
        .enumerate()
        .map(|(index, (category, text))| Atom {
            category,
            text: text.clone(),
            index,
        })
        .collect()
}
