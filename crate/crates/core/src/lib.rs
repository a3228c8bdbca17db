pub mod corpus;
pub mod data;
pub mod extraction;
pub mod jsonl;
pub mod prompt;
pub mod scheme;
pub mod gateway;
pub mod consensus;
pub mod augment;
pub mod eval;
pub mod trainer;
pub mod manifest;
pub mod pipeline;
pub mod cli;
pub mod synth;
