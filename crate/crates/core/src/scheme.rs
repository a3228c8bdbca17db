//! Label vocabularies: ordered categories with their definitions and the
//! aliases used to recognise them in free-text model output.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::corpus::FeedbackRecord;
use crate::data::{self, COARSE_SCHEME};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("no built-in scheme named `{0}`")]
    Unknown(String),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scheme `{scheme}`: {message}")]
    Invalid { scheme: String, message: String },
}

/// One category of a scheme as shown to the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryDefinition {
    pub scheme_id: String,
    pub category_name: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub name: String,
    pub definition: String,
    /// Always contains the name itself, first.
    pub aliases: Vec<String>,
}

/// An ordered category list. Order follows the definitions file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    id: String,
    categories: Vec<Category>,
}

#[derive(Deserialize)]
struct DefinitionsFile {
    scheme_id: String,
    category: Vec<DefinitionEntry>,
}

#[derive(Deserialize)]
struct DefinitionEntry {
    name: String,
    definition: String,
}

#[derive(Deserialize)]
struct AliasesFile {
    scheme_id: String,
    aliases: BTreeMap<String, Vec<String>>,
}

/// Lowercase alphanumeric words; every other character separates words.
pub fn alias_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Scheme {
    /// Builds a scheme from definitions plus extra aliases keyed by category
    /// name. Validates unique names, non-empty definitions and alias sets
    /// that are disjoint across categories.
    pub fn new(id: &str, definitions: Vec<(String, String)>, extra_aliases: &BTreeMap<String, Vec<String>>) -> Result<Self, SchemeError> {
        let invalid = |message: String| SchemeError::Invalid {
            scheme: id.to_string(),
            message,
        };
        if definitions.is_empty() {
            return Err(invalid("no categories".into()));
        }
        for name in extra_aliases.keys() {
            if !definitions.iter().any(|(n, _)| n == name) {
                return Err(invalid(format!("aliases given for unknown category `{name}`")));
            }
        }
        let mut names = std::collections::HashSet::new();
        for (name, _) in &definitions {
            if !names.insert(alias_words(name)) {
                return Err(invalid(format!("category `{name}` listed twice")));
            }
        }
        let mut owner: HashMap<Vec<String>, String> = HashMap::new();
        let mut categories = Vec::with_capacity(definitions.len());
        for (name, definition) in definitions {
            if definition.trim().is_empty() {
                return Err(invalid(format!("category `{name}` has an empty definition")));
            }
            let mut aliases = vec![name.clone()];
            aliases.extend(extra_aliases.get(&name).into_iter().flatten().cloned());
            for alias in &aliases {
                let words = alias_words(alias);
                if words.is_empty() {
                    return Err(invalid(format!("alias `{alias}` has no words")));
                }
                if let Some(prev) = owner.insert(words, name.clone()) {
                    if prev != name {
                        return Err(invalid(format!("alias `{alias}` used by `{prev}` and `{name}`")));
                    }
                }
            }
            categories.push(Category {
                name,
                definition,
                aliases,
            });
        }
        Ok(Scheme {
            id: id.to_string(),
            categories,
        })
    }

    /// Parses a definitions file and an optional aliases file.
    pub fn parse(definitions_src: &str, aliases_src: Option<&str>) -> Result<Self, SchemeError> {
        let defs: DefinitionsFile = toml::from_str(definitions_src).map_err(|e| SchemeError::Invalid {
            scheme: "?".into(),
            message: e.to_string(),
        })?;
        let aliases = match aliases_src {
            Some(src) => {
                let file: AliasesFile = toml::from_str(src).map_err(|e| SchemeError::Invalid {
                    scheme: defs.scheme_id.clone(),
                    message: e.to_string(),
                })?;
                if file.scheme_id != defs.scheme_id {
                    return Err(SchemeError::Invalid {
                        scheme: defs.scheme_id.clone(),
                        message: format!("aliases file is for `{}`", file.scheme_id),
                    });
                }
                file.aliases
            }
            None => BTreeMap::new(),
        };
        Scheme::new(
            &defs.scheme_id,
            defs.category.into_iter().map(|e| (e.name, e.definition)).collect(),
            &aliases,
        )
    }

    /// The shipped coarse scheme or one of the eight original schemes.
    pub fn builtin(id: &str) -> Result<Self, SchemeError> {
        let defs = data::definitions_source(id).ok_or_else(|| SchemeError::Unknown(id.to_string()))?;
        Scheme::parse(defs, data::aliases_source(id))
    }

    pub fn coarse() -> Self {
        Scheme::builtin(COARSE_SCHEME).expect("shipped coarse scheme is valid")
    }

    /// Loads `definitions/<id>.toml` and, if present, `aliases/<id>.toml`
    /// below `root`.
    pub fn load_dir(root: &Path, id: &str) -> Result<Self, SchemeError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| SchemeError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let defs = read(&root.join("definitions").join(format!("{id}.toml")))?;
        let alias_path = root.join("aliases").join(format!("{id}.toml"));
        let aliases = if alias_path.is_file() { Some(read(&alias_path)?) } else { None };
        Scheme::parse(&defs, aliases.as_deref())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_coarse(&self) -> bool {
        self.id == COARSE_SCHEME
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.name.clone()).collect()
    }

    pub fn definitions(&self) -> Vec<CategoryDefinition> {
        self.categories
            .iter()
            .map(|c| CategoryDefinition {
                scheme_id: self.id.clone(),
                category_name: c.name.clone(),
                definition: c.definition.clone(),
            })
            .collect()
    }

    /// Position of the category whose name matches `name`, ignoring case and
    /// spacing.
    pub fn position(&self, name: &str) -> Option<usize> {
        let key = alias_words(name);
        self.categories.iter().position(|c| alias_words(&c.name) == key)
    }

    /// Canonical category name for `name`.
    pub fn canonical(&self, name: &str) -> Option<&str> {
        self.position(name).map(|i| self.categories[i].name.as_str())
    }

    /// The record's ground-truth category under this scheme: the coarse label
    /// for the coarse scheme, the original label otherwise.
    pub fn truth_label(&self, record: &FeedbackRecord) -> Option<&str> {
        if self.is_coarse() {
            record.coarse_label.and_then(|l| self.canonical(l.display_name()))
        } else {
            record.original_label.as_deref().and_then(|l| self.canonical(l))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CoarseLabel, SchemeMapping, Source};
    use crate::data::BUILTIN_DATASETS;

    #[test]
    fn coarse_scheme_has_three_categories_in_order() {
        let s = Scheme::coarse();
        assert_eq!(s.names(), ["Bug Report", "Feature Request", "Other"]);
        assert!(s.is_coarse());
        for (c, label) in s.categories().iter().zip(CoarseLabel::ALL) {
            assert_eq!(c.name, label.display_name());
            assert_eq!(c.aliases[0], c.name);
        }
    }

    #[test]
    fn original_schemes_agree_with_mappings() {
        // every category of an original scheme is a label of its mapping, and vice versa
        for id in BUILTIN_DATASETS {
            let scheme = Scheme::builtin(id).unwrap();
            let mapping = SchemeMapping::builtin(id).unwrap();
            assert_eq!(scheme.len(), mapping.entries().len(), "{id}");
            for (label, _) in mapping.entries() {
                assert!(scheme.canonical(label).is_some(), "{id}: {label}");
            }
        }
    }

    #[test]
    fn ds1_has_eight_categories() {
        assert_eq!(Scheme::builtin("DS1").unwrap().len(), 8);
    }

    #[test]
    fn truth_label_per_scheme_kind() {
        let r = FeedbackRecord::human("DS1", Source::AppStore, "a", "t")
            .with_original_label("user request")
            .with_coarse_label(CoarseLabel::FeatureRequest);
        assert_eq!(Scheme::coarse().truth_label(&r), Some("Feature Request"));
        assert_eq!(Scheme::builtin("DS1").unwrap().truth_label(&r), Some("User Request"));
        assert_eq!(Scheme::builtin("DS3").unwrap().truth_label(&r), None);
    }

    #[test]
    fn overlapping_aliases_rejected() {
        let defs = vec![("A".to_string(), "a".to_string()), ("B".to_string(), "b".to_string())];
        let mut aliases = BTreeMap::new();
        aliases.insert("A".to_string(), vec!["shared".to_string()]);
        aliases.insert("B".to_string(), vec!["Shared!".to_string()]);
        assert!(matches!(Scheme::new("t", defs, &aliases), Err(SchemeError::Invalid { .. })));
    }

    #[test]
    fn empty_definition_rejected() {
        let defs = vec![("A".to_string(), " ".to_string())];
        assert!(Scheme::new("t", defs, &BTreeMap::new()).is_err());
    }

    #[test]
    fn unknown_builtin() {
        assert!(matches!(Scheme::builtin("DS42"), Err(SchemeError::Unknown(_))));
    }

    #[test]
    fn load_dir_reads_data_layout() {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        assert_eq!(Scheme::load_dir(&root, "coarse").unwrap(), Scheme::coarse());
    }
}
