//! Line-delimited JSON benchmark files and the bundled data set.
//!
//! The bundled corpus, questions and catalog are self-made and small: 12
//! articles with 20 questions, 30 products with 12 shopping tasks. Every
//! item has a gold script, and some shop tasks also have an over-budget
//! script that buys a same-category item priced above the cap.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::retrieval::{Corpus, Document};
use super::shop::{Catalog, Product, ShopTask};
use super::{BenchError, Difficulty};
use crate::actions::serialize_invocation;
use crate::types::ActionInvocation;

const CORPUS: &str = include_str!("../../data/corpus.jsonl");
const QA: &str = include_str!("../../data/qa.jsonl");
const QA_GOLD: &str = include_str!("../../data/qa_gold.jsonl");
const CATALOG: &str = include_str!("../../data/catalog.jsonl");
const SHOP_TASKS: &str = include_str!("../../data/shop_tasks.jsonl");
const SHOP_GOLD: &str = include_str!("../../data/shop_gold.jsonl");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub question: String,
    pub answer: String,
    pub difficulty: Difficulty,
}

/// Scripted trajectories for the item at index `item`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldScript {
    pub item: usize,
    pub steps: Vec<ActionInvocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub over_budget: Option<Vec<ActionInvocation>>,
}

impl GoldScript {
    /// The gold steps as backend replies.
    pub fn replies(&self) -> Vec<String> {
        self.steps.iter().map(serialize_invocation).collect()
    }

    pub fn over_budget_replies(&self) -> Option<Vec<String>> {
        self.over_budget
            .as_ref()
            .map(|steps| steps.iter().map(serialize_invocation).collect())
    }
}

/// Parses one record per non-blank line; errors name the 1-based line.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, what: &str) -> Result<Vec<T>, BenchError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| BenchError::Data(format!("{what} line {}: {e}", i + 1)))
        })
        .collect()
}

fn read(path: &Path) -> Result<String, BenchError> {
    fs::read_to_string(path).map_err(|e| BenchError::Data(format!("{}: {e}", path.display())))
}

pub fn parse_corpus(text: &str) -> Result<Corpus, BenchError> {
    Corpus::new(parse_jsonl::<Document>(text, "corpus")?)
}

pub fn parse_qa(text: &str) -> Result<Vec<QaItem>, BenchError> {
    let items: Vec<QaItem> = parse_jsonl(text, "qa")?;
    if let Some(i) = items.iter().position(|q| q.answer.trim().is_empty()) {
        return Err(BenchError::Data(format!("qa item {i} has an empty gold answer")));
    }
    Ok(items)
}

pub fn parse_catalog(text: &str) -> Result<Catalog, BenchError> {
    Catalog::new(parse_jsonl::<Product>(text, "catalog")?)
}

/// Parses shop tasks and checks each against `catalog`.
pub fn parse_shop_tasks(text: &str, catalog: &Catalog) -> Result<Vec<ShopTask>, BenchError> {
    let tasks: Vec<ShopTask> = parse_jsonl(text, "shop task")?;
    for (i, task) in tasks.iter().enumerate() {
        if task.difficulty == Difficulty::Medium {
            return Err(BenchError::Data(format!("shop task {i}: difficulty must be easy or hard")));
        }
        catalog
            .check_task(task)
            .map_err(|e| BenchError::Data(format!("shop task {i}: {e}")))?;
    }
    Ok(tasks)
}

/// Parses gold scripts; every script must point at one of `items` items.
pub fn parse_gold(text: &str, items: usize) -> Result<Vec<GoldScript>, BenchError> {
    let scripts: Vec<GoldScript> = parse_jsonl(text, "gold script")?;
    if let Some(s) = scripts.iter().find(|s| s.item >= items) {
        return Err(BenchError::Data(format!("gold script for unknown item {}", s.item)));
    }
    Ok(scripts)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, BenchError> {
    parse_corpus(&read(path.as_ref())?)
}

pub fn load_qa(path: impl AsRef<Path>) -> Result<Vec<QaItem>, BenchError> {
    parse_qa(&read(path.as_ref())?)
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, BenchError> {
    parse_catalog(&read(path.as_ref())?)
}

pub fn load_shop_tasks(path: impl AsRef<Path>, catalog: &Catalog) -> Result<Vec<ShopTask>, BenchError> {
    parse_shop_tasks(&read(path.as_ref())?, catalog)
}

pub fn bundled_corpus() -> Corpus {
    parse_corpus(CORPUS).expect("bundled corpus is valid")
}

pub fn bundled_qa() -> Vec<QaItem> {
    parse_qa(QA).expect("bundled qa set is valid")
}

pub fn bundled_qa_gold() -> Vec<GoldScript> {
    parse_gold(QA_GOLD, bundled_qa().len()).expect("bundled qa scripts are valid")
}

pub fn bundled_catalog() -> Catalog {
    parse_catalog(CATALOG).expect("bundled catalog is valid")
}

pub fn bundled_shop_tasks() -> Vec<ShopTask> {
    parse_shop_tasks(SHOP_TASKS, &bundled_catalog()).expect("bundled shop tasks are valid")
}

pub fn bundled_shop_gold() -> Vec<GoldScript> {
    parse_gold(SHOP_GOLD, bundled_shop_tasks().len()).expect("bundled shop scripts are valid")
}
