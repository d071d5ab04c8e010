//! Long-context question answering as file-system navigation.
//!
//! This crate materializes large text corpora onto disk, equips agents and
//! baselines with retrieval tools over them, runs four answering methods
//! (full-context with sliding windows, RAG, ReAct, and a coding agent in a
//! workspace), scores the answers under per-dataset protocols, and analyzes
//! the resulting trajectories: command classes, retrieval usage, exploration
//! strategy metrics, and dollar cost per query.

pub mod binio;
pub mod corpus;
pub mod eval;
pub mod gateway;
pub mod prompts;
pub mod report;
pub mod retriever;
pub mod runners;
pub mod trace;
pub mod types;
