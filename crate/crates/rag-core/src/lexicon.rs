//! Versioned technique lexicon and auxiliary normalization tables.
//!
//! A lexicon file (`techniques.lex.json`) carries the technique entries with
//! parameter schemas, defaults, and postconditions, plus the shared outcome
//! vocabulary and unit-table extensions. Temperature phrases live in their
//! own table (`temps.table.json`). Both are plain JSON; the shipped copies
//! under `data/` are non-normative sample data.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use semver::{Version, VersionReq};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::{codes, Diagnostic};
use crate::ir::{OutcomeClass, ParamValue, TechniqueRef};

/// Units every graph accepts regardless of lexicon.
pub const BUILTIN_UNITS: &[&str] = &[
    "g",
    "kg",
    "ml",
    "l",
    "tsp",
    "tbsp",
    "cup",
    "count",
    "unspecified",
];

// ---------------------------------------------------------------------------
// Schema types (serde mirrors of the JSON documents)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamType {
    Enum { values: Vec<String> },
    Decimal,
    Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(flatten)]
    pub ty: ParamType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<ParamValue>,
    #[serde(default)]
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueEntry {
    pub id: String,
    pub version: Version,
    pub definition: String,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
    #[serde(default)]
    pub preconditions: Vec<String>,
    pub postconditions: Vec<String>,
    /// Scheduling estimate for outcome-terminated processes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_duration_default: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
struct LexiconFile {
    name: String,
    version: Version,
    #[serde(default)]
    outcome_vocabulary: BTreeMap<String, OutcomeClass>,
    #[serde(default)]
    unit_extensions: Vec<String>,
    entries: Vec<TechniqueEntry>,
}

/// In-memory registry keyed by `(technique id, entry version)`.
#[derive(Debug, Clone)]
pub struct TechniqueLexicon {
    pub name: String,
    pub version: Version,
    /// Outcome term → class; postconditions must use keys of this map.
    pub outcome_vocabulary: BTreeMap<String, OutcomeClass>,
    unit_extensions: BTreeSet<String>,
    entries: BTreeMap<String, BTreeMap<Version, TechniqueEntry>>,
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

impl TechniqueLexicon {
    pub fn load(path: &Path) -> Result<Self, Vec<Diagnostic>> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            vec![Diagnostic::error(
                codes::IMPORT_FAILED,
                format!("cannot read lexicon `{}`: {e}", path.display()),
            )]
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Parse and check a lexicon document. Schema violations name the field
    /// path; duplicate `(id, version)` pairs and malformed entries are
    /// collected rather than reported one at a time.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, Vec<Diagnostic>> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: LexiconFile = serde_path_to_error::deserialize(de).map_err(|e| {
            vec![Diagnostic::error(
                codes::INVALID_VALUE,
                format!("lexicon `{origin}` schema violation at `{}`: {}", e.path(), e.inner()),
            )]
        })?;

        let mut diags = Vec::new();
        let mut entries: BTreeMap<String, BTreeMap<Version, TechniqueEntry>> = BTreeMap::new();
        for entry in file.entries {
            if entry.postconditions.is_empty() {
                diags.push(Diagnostic::error(
                    codes::INVALID_VALUE,
                    format!(
                        "technique `{}` declares no postconditions; every technique must assert at least one outcome",
                        entry.id
                    ),
                ));
            }
            for param in &entry.params {
                if param.required && param.default.is_none() {
                    // Required-without-default is legal: the ref must supply it.
                    continue;
                }
                if let (Some(default), ParamType::Enum { values }) = (&param.default, &param.ty) {
                    let ok = matches!(default, ParamValue::Word(w) if values.contains(w));
                    if !ok {
                        diags.push(Diagnostic::error(
                            codes::INVALID_VALUE,
                            format!(
                                "technique `{}` param `{}`: default `{default}` is outside the enum domain [{}]",
                                entry.id,
                                param.name,
                                values.join(", ")
                            ),
                        ));
                    }
                }
            }
            let by_version = entries.entry(entry.id.clone()).or_default();
            if by_version.contains_key(&entry.version) {
                diags.push(Diagnostic::error(
                    codes::DUPLICATE_DEFINITION,
                    format!("duplicate technique entry ({}, {})", entry.id, entry.version),
                ));
            } else {
                by_version.insert(entry.version.clone(), entry);
            }
        }
        if diags.is_empty() {
            Ok(Self {
                name: file.name,
                version: file.version,
                outcome_vocabulary: file.outcome_vocabulary,
                unit_extensions: file.unit_extensions.into_iter().collect(),
                entries,
            })
        } else {
            Err(diags)
        }
    }

    /// The lexicon shipped with the crate (`data/techniques.lex.json`).
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_LEXICON_JSON, "builtin techniques.lex.json")
            .expect("builtin lexicon must load cleanly")
    }

    pub fn entry_count(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = &TechniqueEntry> {
        self.entries.values().flat_map(BTreeMap::values)
    }

    pub fn is_known_unit(&self, unit: &str) -> bool {
        BUILTIN_UNITS.contains(&unit) || self.unit_extensions.contains(unit)
    }

    // -- resolution --

    /// Resolve a technique reference: pick the highest entry version
    /// matching the ref's range, fill defaults, and type-check every
    /// supplied parameter.
    pub fn resolve(&self, tech_ref: &TechniqueRef) -> Result<ResolvedTechnique, ResolveError> {
        let req = parse_version_req(&tech_ref.requirement)
            .map_err(|e| ResolveError::BadRequirement {
                requirement: tech_ref.requirement.clone(),
                reason: e.to_string(),
            })?;
        let by_version = self
            .entries
            .get(&tech_ref.id)
            .ok_or_else(|| ResolveError::UnknownTechnique {
                id: tech_ref.id.clone(),
                suggestion: self.closest_id(&tech_ref.id),
            })?;
        let entry = by_version
            .iter()
            .rev()
            .find(|(v, _)| req.matches(v))
            .map(|(_, e)| e)
            .ok_or_else(|| ResolveError::NoVersionInRange {
                id: tech_ref.id.clone(),
                requirement: tech_ref.requirement.clone(),
                available: by_version.keys().map(Version::to_string).collect(),
            })?;

        let mut effective: BTreeMap<String, ParamValue> = BTreeMap::new();
        for (name, value) in &tech_ref.params {
            let spec = entry
                .params
                .iter()
                .find(|p| &p.name == name)
                .ok_or_else(|| ResolveError::UnknownParam {
                    technique: entry.id.clone(),
                    param: name.clone(),
                })?;
            check_param_type(entry, spec, value)?;
            effective.insert(name.clone(), value.clone());
        }
        for spec in &entry.params {
            if effective.contains_key(&spec.name) {
                continue;
            }
            match (&spec.default, spec.required) {
                (Some(default), _) => {
                    effective.insert(spec.name.clone(), default.clone());
                }
                (None, true) => {
                    return Err(ResolveError::MissingRequiredParam {
                        technique: entry.id.clone(),
                        param: spec.name.clone(),
                    });
                }
                (None, false) => {}
            }
        }
        Ok(ResolvedTechnique {
            entry: entry.clone(),
            effective_params: effective,
        })
    }

    fn closest_id(&self, id: &str) -> Option<String> {
        self.entries
            .keys()
            .filter_map(|k| {
                let d = crate::levenshtein(id, k);
                (d <= 2).then_some((d, k.clone()))
            })
            .min()
            .map(|(_, k)| k)
    }
}

fn check_param_type(
    entry: &TechniqueEntry,
    spec: &ParamSpec,
    value: &ParamValue,
) -> Result<(), ResolveError> {
    let ok = match (&spec.ty, value) {
        (ParamType::Enum { values }, ParamValue::Word(w)) => {
            if values.contains(w) {
                true
            } else {
                return Err(ResolveError::EnumOutOfDomain {
                    technique: entry.id.clone(),
                    param: spec.name.clone(),
                    value: w.clone(),
                    allowed: values.clone(),
                });
            }
        }
        (ParamType::Decimal, ParamValue::Number(_)) => true,
        (ParamType::Duration, ParamValue::Duration { .. }) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(ResolveError::TypeMismatch {
            technique: entry.id.clone(),
            param: spec.name.clone(),
            value: value.to_string(),
        })
    }
}

/// Caret semantics by default: a bare `1.0` behaves as `^1.0`.
pub fn parse_version_req(raw: &str) -> Result<VersionReq, semver::Error> {
    VersionReq::parse(raw)
}

/// Entry plus effective parameters after default fill.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedTechnique {
    pub entry: TechniqueEntry,
    pub effective_params: BTreeMap<String, ParamValue>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolveError {
    #[error("unknown technique `{id}`{}", .suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownTechnique { id: String, suggestion: Option<String> },
    #[error("no version of `{id}` matches `{requirement}` (available: {})", .available.join(", "))]
    NoVersionInRange {
        id: String,
        requirement: String,
        available: Vec<String>,
    },
    #[error("invalid version requirement `{requirement}`: {reason}")]
    BadRequirement { requirement: String, reason: String },
    #[error("technique `{technique}` has no parameter `{param}`")]
    UnknownParam { technique: String, param: String },
    #[error("`{value}` is outside the domain of `{technique}.{param}` (allowed: {})", .allowed.join(", "))]
    EnumOutOfDomain {
        technique: String,
        param: String,
        value: String,
        allowed: Vec<String>,
    },
    #[error("required parameter `{technique}.{param}` has no default and was not supplied")]
    MissingRequiredParam { technique: String, param: String },
    #[error("value `{value}` does not fit the declared type of `{technique}.{param}`")]
    TypeMismatch {
        technique: String,
        param: String,
        value: String,
    },
}

// ---------------------------------------------------------------------------
// Temperature table
// ---------------------------------------------------------------------------

/// Qualitative phrase → numeric Celsius range. The artifact's stand-in for
/// LLM-supported normalization of temperature terms; lookups are exact
/// (lowercased), never fuzzy.
#[derive(Debug, Clone, Default)]
pub struct TemperatureTable {
    entries: BTreeMap<String, (f64, f64)>,
}

impl TemperatureTable {
    pub fn load(path: &Path) -> Result<Self, Vec<Diagnostic>> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            vec![Diagnostic::error(
                codes::IMPORT_FAILED,
                format!("cannot read temperature table `{}`: {e}", path.display()),
            )]
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, Vec<Diagnostic>> {
        let raw: BTreeMap<String, (f64, f64)> = serde_json::from_str(text).map_err(|e| {
            vec![Diagnostic::error(
                codes::INVALID_VALUE,
                format!("temperature table `{origin}` schema violation: {e}"),
            )]
        })?;
        let mut entries = BTreeMap::new();
        let mut diags = Vec::new();
        for (phrase, (low, high)) in raw {
            if low > high {
                diags.push(Diagnostic::error(
                    codes::INVALID_VALUE,
                    format!("temperature table `{origin}`: `{phrase}` has low {low} > high {high}"),
                ));
                continue;
            }
            entries.insert(phrase.to_lowercase(), (low, high));
        }
        if diags.is_empty() {
            Ok(Self { entries })
        } else {
            Err(diags)
        }
    }

    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_TEMPS_JSON, "builtin temps.table.json")
            .expect("builtin temperature table must load cleanly")
    }

    /// Exact lowercase lookup; `None` on a miss (caller decides severity).
    pub fn normalize(&self, phrase: &str) -> Option<(f64, f64)> {
        self.entries.get(&phrase.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub const BUILTIN_LEXICON_JSON: &str = include_str!("../data/techniques.lex.json");
pub const BUILTIN_TEMPS_JSON: &str = include_str!("../data/temps.table.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lexicon_loads_with_at_least_twelve_entries() {
        let lex = TechniqueLexicon::builtin();
        assert!(lex.entry_count() >= 12, "got {}", lex.entry_count());
        for id in ["dry_fry", "saute", "poach", "baste", "toast", "grill", "simmer"] {
            assert!(
                lex.entries.contains_key(id),
                "builtin lexicon is missing `{id}`"
            );
        }
    }

    #[test]
    fn postconditions_stay_inside_outcome_vocabulary() {
        // Cross-module closure: every postcondition term of every shipped
        // entry is a key of the shared outcome vocabulary.
        let lex = TechniqueLexicon::builtin();
        for entry in lex.entries() {
            for post in &entry.postconditions {
                assert!(
                    lex.outcome_vocabulary.contains_key(post),
                    "postcondition `{post}` of `{}` is not in the outcome vocabulary",
                    entry.id
                );
            }
        }
    }

    #[test]
    fn resolve_fills_defaults_and_keeps_explicit_params() {
        let lex = TechniqueLexicon::builtin();
        let mut r = TechniqueRef::new("dry_fry");
        r.params.insert(
            "agitation_frequency".into(),
            ParamValue::Word("occasional".into()),
        );
        let resolved = lex.resolve(&r).unwrap();
        assert_eq!(
            resolved.effective_params.get("agitation_frequency"),
            Some(&ParamValue::Word("occasional".into()))
        );
        assert!(resolved.postconditions_contain("browned"));

        // No params at all: everything defaulted.
        let bare = lex.resolve(&TechniqueRef::new("dry_fry")).unwrap();
        assert!(bare.effective_params.contains_key("agitation_frequency"));
    }

    #[test]
    fn resolve_rejects_out_of_domain_enum_value() {
        let lex = TechniqueLexicon::builtin();
        let mut r = TechniqueRef::new("dry_fry");
        r.params.insert(
            "agitation_frequency".into(),
            ParamValue::Word("violently".into()),
        );
        assert!(matches!(
            lex.resolve(&r),
            Err(ResolveError::EnumOutOfDomain { .. })
        ));
    }

    #[test]
    fn resolve_rejects_unknown_technique_and_param() {
        let lex = TechniqueLexicon::builtin();
        let err = lex.resolve(&TechniqueRef::new("dry_fryy")).unwrap_err();
        assert!(matches!(
            &err,
            ResolveError::UnknownTechnique { suggestion: Some(s), .. } if s == "dry_fry"
        ));
        let mut r = TechniqueRef::new("dry_fry");
        r.params.insert("heat_level".into(), ParamValue::Number(3.0));
        assert!(matches!(
            lex.resolve(&r),
            Err(ResolveError::UnknownParam { .. })
        ));
    }

    #[test]
    fn resolve_honors_version_ranges() {
        let lex = TechniqueLexicon::builtin();
        let mut r = TechniqueRef::new("dry_fry");
        r.requirement = "^1.0".into();
        assert!(lex.resolve(&r).is_ok());
        r.requirement = "^9.0".into();
        assert!(matches!(
            lex.resolve(&r),
            Err(ResolveError::NoVersionInRange { .. })
        ));
    }

    #[test]
    fn resolution_is_deterministic_and_idempotent() {
        let lex = TechniqueLexicon::builtin();
        let mut r = TechniqueRef::new("saute");
        let once = lex.resolve(&r).unwrap();
        let twice = lex.resolve(&r).unwrap();
        assert_eq!(once, twice);
        // Fully parameterized ref resolves to itself.
        r.params = once.effective_params.clone();
        let again = lex.resolve(&r).unwrap();
        assert_eq!(again.effective_params, once.effective_params);
    }

    #[test]
    fn duplicate_id_version_pairs_are_rejected() {
        let doc = r#"{
            "name": "techniques", "version": "1.0.0",
            "outcome_vocabulary": {"browned": "color"},
            "entries": [
                {"id": "dry_fry", "version": "1.0.0", "definition": "x", "postconditions": ["browned"]},
                {"id": "dry_fry", "version": "1.0.0", "definition": "y", "postconditions": ["browned"]}
            ]
        }"#;
        let err = TechniqueLexicon::from_json(doc, "test").unwrap_err();
        assert!(err[0].message.contains("duplicate technique entry (dry_fry, 1.0.0)"));
    }

    #[test]
    fn schema_error_names_the_offending_path() {
        // A required param lacking its type field.
        let doc = r#"{
            "name": "techniques", "version": "1.0.0",
            "entries": [
                {"id": "x", "version": "1.0.0", "definition": "x",
                 "params": [{"name": "agitation", "required": true}],
                 "postconditions": ["browned"]}
            ]
        }"#;
        let err = TechniqueLexicon::from_json(doc, "test").unwrap_err();
        assert!(err[0].message.contains("entries[0].params[0]"), "{}", err[0].message);
    }

    #[test]
    fn temperature_lookup_is_case_normalized_and_exact() {
        let table = TemperatureTable::builtin();
        let medium = table.normalize("medium heat").expect("medium heat in table");
        assert_eq!(table.normalize("MEDIUM HEAT"), Some(medium));
        assert_eq!(table.normalize("thermonuclear"), None);
    }
}

impl ResolvedTechnique {
    pub fn postconditions_contain(&self, term: &str) -> bool {
        self.entry.postconditions.iter().any(|p| p == term)
    }
}
