//! Desk-scale benchmark environments: question answering over a local
//! article corpus, and a miniature web shop.
//!
//! Both suites ship bundled data (see [`data`]) together with gold action
//! scripts. Replaying a gold script through the scripted backend must score
//! perfectly, which makes the environments testable without a model.

pub mod data;
pub mod metrics;
pub mod retrieval;
pub mod runner;
pub mod shop;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use data::{GoldScript, QaItem};
pub use metrics::{exact_match, f1_score, normalize_answer};
pub use retrieval::{wiki_search, Corpus, Document, SearchHit, WikipediaSearchAction};
pub use runner::{run_qa, run_shop, BenchOptions, BenchReport, ItemFailure, ItemResult, ScoreRow, Suite};
pub use shop::{
    shop_reward, shop_step, Catalog, Page, Price, Product, ShopClickAction, ShopSearchAction,
    ShopSession, ShopTask,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("empty query")]
    EmptyQuery,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("the shop session is still active")]
    SessionActive,
    #[error("no items to run")]
    NoItems,
    #[error("invalid benchmark data: {0}")]
    Data(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
