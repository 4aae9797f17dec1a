//! Dataset ingestion, file formats and the `flora` command-line driver
//! around [`flora_core`].

pub mod cli;
pub mod formats;
pub mod ingest;
pub mod synthetic;

use flora_core::engine::Config;
use flora_core::kg::KnowledgeGraph;
use flora_core::literal::{build_literal_table, LiteralSimTable, StringProvider};

/// Literal similarities for a KG pair under `config`'s threshold and top-k.
pub fn literal_table(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    provider: &StringProvider,
    config: &Config,
) -> LiteralSimTable {
    build_literal_table(kg1, kg2, provider, config.theta_s, config.top_k)
}
