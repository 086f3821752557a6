//! Token-overlap search over a local article corpus.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::actions::{required, Action, ActionError};
use crate::types::{ActionKind, ActionSpec, Params};

pub const SNIPPET_CHARS: usize = 400;

pub const DEFAULT_SEARCH_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub title: String,
    pub paragraphs: Vec<String>,
}

/// Documents with unique titles.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self, BenchError> {
        let mut seen = HashSet::new();
        for doc in &documents {
            if !seen.insert(doc.title.as_str()) {
                return Err(BenchError::Data(format!("duplicate title: {}", doc.title)));
            }
        }
        Ok(Corpus { documents })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn get(&self, title: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.title == title)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub title: String,
    pub snippet: String,
    pub score: f64,
    pub doc_index: usize,
    pub paragraph_index: usize,
}

/// Lowercased words with punctuation deleted, so `Côte-d'Or` is one token.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|w| w.chars().filter(|c| c.is_alphanumeric()).collect::<String>())
        .filter(|w| !w.is_empty())
        .collect()
}

pub fn token_set(text: &str) -> HashSet<String> {
    tokenize(text).into_iter().collect()
}

/// |query ∩ text| / |query| over token sets. `query` must be non-empty.
pub fn overlap_score(query: &HashSet<String>, text: &HashSet<String>) -> f64 {
    debug_assert!(!query.is_empty());
    query.intersection(text).count() as f64 / query.len() as f64
}

pub(crate) fn query_tokens(query: &str) -> Result<HashSet<String>, BenchError> {
    let tokens = token_set(query);
    if tokens.is_empty() {
        return Err(BenchError::EmptyQuery);
    }
    Ok(tokens)
}

pub fn truncate_chars(text: &str, max: usize) -> String {
    match text.char_indices().nth(max) {
        Some((cut, _)) => text[..cut].to_string(),
        None => text.to_string(),
    }
}

/// The `k` best paragraphs. Ties keep corpus order.
pub fn wiki_search(corpus: &Corpus, query: &str, k: usize) -> Result<Vec<SearchHit>, BenchError> {
    if k == 0 {
        return Err(BenchError::InvalidK);
    }
    let q = query_tokens(query)?;
    let mut hits: Vec<SearchHit> = Vec::new();
    for (di, doc) in corpus.documents.iter().enumerate() {
        for (pi, para) in doc.paragraphs.iter().enumerate() {
            hits.push(SearchHit {
                title: doc.title.clone(),
                snippet: truncate_chars(para, SNIPPET_CHARS),
                score: overlap_score(&q, &token_set(para)),
                doc_index: di,
                paragraph_index: pi,
            });
        }
    }
    // stable sort keeps (document, paragraph) order among equal scores
    hits.sort_by(|a, b| b.score.total_cmp(&a.score));
    hits.truncate(k);
    Ok(hits)
}

pub fn render_hits(hits: &[SearchHit]) -> String {
    hits.iter()
        .enumerate()
        .map(|(i, h)| format!("[{}] {}: {}", i + 1, h.title, h.snippet))
        .collect::<Vec<_>>()
        .join("\n")
}

/// `WikipediaSearch{query}` over a shared corpus.
#[derive(Debug, Clone)]
pub struct WikipediaSearchAction {
    corpus: Arc<Corpus>,
    k: usize,
}

impl WikipediaSearchAction {
    pub fn new(corpus: Arc<Corpus>) -> Self {
        WikipediaSearchAction {
            corpus,
            k: DEFAULT_SEARCH_K,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k.max(1);
        self
    }
}

impl Action for WikipediaSearchAction {
    fn spec(&self) -> ActionSpec {
        ActionSpec::new(
            "WikipediaSearch",
            "Search the encyclopedia and return the most relevant passages with their article titles.",
            ActionKind::External,
        )
        .param("query", "keywords to search for")
    }

    fn call(&self, params: &Params) -> Result<String, ActionError> {
        let query = required(params, "query")?;
        let hits = wiki_search(&self.corpus, query, self.k)
            .map_err(|e| ActionError::Failed(e.to_string()))?;
        let relevant: Vec<SearchHit> = hits.into_iter().filter(|h| h.score > 0.0).collect();
        if relevant.is_empty() {
            return Ok("No matching passages.".to_string());
        }
        Ok(render_hits(&relevant))
    }
}
