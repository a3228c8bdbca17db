//! Data files compiled into the library: stopwords, scheme mappings,
//! category definitions, extraction aliases and prompt templates.
//!
//! Every embedded file also lives under `data/` in the crate so it can be
//! copied, edited, and loaded from disk instead.

/// Identifiers of the eight shipped human-labeled datasets.
pub const BUILTIN_DATASETS: [&str; 8] = ["DS1", "DS2", "DS3", "DS4", "DS5", "DS6", "DS7", "DS8"];

/// Identifier of the merged three-way scheme.
pub const COARSE_SCHEME: &str = "coarse";

pub const STOPWORDS_EN: &str = include_str!("../data/stopwords_en.txt");

pub const CONTEXT_TEMPLATE: &str = include_str!("../data/templates/context.txt");
pub const INSTRUCTION_TEMPLATE: &str = include_str!("../data/templates/instruction.txt");
pub const SHOTS_TEMPLATE: &str = include_str!("../data/templates/shots.txt");

macro_rules! per_dataset {
    ($dir:literal, $id:expr) => {
        match $id {
            "DS1" => Some(include_str!(concat!("../data/", $dir, "/DS1.toml"))),
            "DS2" => Some(include_str!(concat!("../data/", $dir, "/DS2.toml"))),
            "DS3" => Some(include_str!(concat!("../data/", $dir, "/DS3.toml"))),
            "DS4" => Some(include_str!(concat!("../data/", $dir, "/DS4.toml"))),
            "DS5" => Some(include_str!(concat!("../data/", $dir, "/DS5.toml"))),
            "DS6" => Some(include_str!(concat!("../data/", $dir, "/DS6.toml"))),
            "DS7" => Some(include_str!(concat!("../data/", $dir, "/DS7.toml"))),
            "DS8" => Some(include_str!(concat!("../data/", $dir, "/DS8.toml"))),
            _ => None,
        }
    };
}

pub fn mapping_source(dataset_id: &str) -> Option<&'static str> {
    per_dataset!("mappings", dataset_id)
}

pub fn definitions_source(scheme_id: &str) -> Option<&'static str> {
    if scheme_id == COARSE_SCHEME {
        return Some(include_str!("../data/definitions/coarse.toml"));
    }
    per_dataset!("definitions", scheme_id)
}

pub fn aliases_source(scheme_id: &str) -> Option<&'static str> {
    if scheme_id == COARSE_SCHEME {
        return Some(include_str!("../data/aliases/coarse.toml"));
    }
    per_dataset!("aliases", scheme_id)
}
