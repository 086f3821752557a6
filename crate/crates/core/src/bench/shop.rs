//! A miniature web shop: search, open a product page, buy.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::retrieval::{overlap_score, query_tokens, token_set};
use super::{BenchError, Difficulty};
use crate::actions::{required, Action, ActionError};
use crate::types::{ActionKind, ActionSpec, Params};

pub const SEARCH_RESULTS: usize = 5;

pub const NO_SUCH_PRODUCT: &str = "No such product.";
pub const NOTHING_TO_BUY: &str = "Nothing to buy.";
pub const SESSION_OVER: &str = "The session is over.";
pub const USAGE: &str = "Unknown command. Use search[<query>], click[<product id>] or buy.";

/// Whole cents. Files carry decimal dollars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Price(pub u64);

impl Price {
    pub fn from_dollars(dollars: f64) -> Option<Price> {
        if !dollars.is_finite() || dollars <= 0.0 {
            return None;
        }
        let cents = (dollars * 100.0).round();
        (cents >= 1.0 && cents < u64::MAX as f64).then_some(Price(cents as u64))
    }

    pub fn cents(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Price {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0 as f64 / 100.0)
    }
}

impl<'de> Deserialize<'de> for Price {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let dollars = f64::deserialize(d)?;
        Price::from_dollars(dollars)
            .ok_or_else(|| serde::de::Error::custom(format!("price must be positive, got {dollars}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Product {
    pub id: String,
    pub title: String,
    pub category: String,
    pub attributes: BTreeSet<String>,
    pub price: Price,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShopTask {
    pub instruction: String,
    pub required_attributes: BTreeSet<String>,
    pub price_cap: Price,
    pub gold_product_id: String,
    pub difficulty: Difficulty,
}

/// Products with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    products: Vec<Product>,
}

impl Catalog {
    pub fn new(products: Vec<Product>) -> Result<Self, BenchError> {
        let mut seen = HashSet::new();
        for p in &products {
            if !seen.insert(p.id.as_str()) {
                return Err(BenchError::Data(format!("duplicate product id: {}", p.id)));
            }
        }
        Ok(Catalog { products })
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn get(&self, id: &str) -> Option<&Product> {
        self.products.iter().find(|p| p.id == id)
    }

    /// Checks the task against its gold product.
    pub fn check_task(&self, task: &ShopTask) -> Result<(), BenchError> {
        let gold = self.get(&task.gold_product_id).ok_or_else(|| {
            BenchError::Data(format!("unknown gold product: {}", task.gold_product_id))
        })?;
        if let Some(missing) = task
            .required_attributes
            .iter()
            .find(|a| !gold.attributes.contains(*a))
        {
            return Err(BenchError::Data(format!(
                "gold product {} lacks required attribute {missing:?}",
                gold.id
            )));
        }
        if gold.price > task.price_cap {
            return Err(BenchError::Data(format!(
                "gold product {} costs {} over the cap {}",
                gold.id, gold.price, task.price_cap
            )));
        }
        Ok(())
    }

    /// The [`SEARCH_RESULTS`] best matches on title and attributes. Ties keep
    /// catalog order.
    pub fn search(&self, query: &str) -> Result<Vec<(&Product, f64)>, BenchError> {
        let q = query_tokens(query)?;
        let mut scored: Vec<(&Product, f64)> = self
            .products
            .iter()
            .map(|p| {
                let mut text = token_set(&p.title);
                for attr in &p.attributes {
                    text.extend(token_set(attr));
                }
                (p, overlap_score(&q, &text))
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        scored.truncate(SEARCH_RESULTS);
        Ok(scored)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Page {
    Results,
    Product(String),
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShopSession {
    page: Page,
    last_results: Vec<String>,
    purchased: Option<String>,
}

impl Default for ShopSession {
    fn default() -> Self {
        Self::new()
    }
}

impl ShopSession {
    pub fn new() -> Self {
        ShopSession {
            page: Page::Results,
            last_results: Vec::new(),
            purchased: None,
        }
    }

    pub fn page(&self) -> &Page {
        &self.page
    }

    pub fn last_results(&self) -> &[String] {
        &self.last_results
    }

    pub fn purchased(&self) -> Option<&str> {
        self.purchased.as_deref()
    }

    pub fn is_done(&self) -> bool {
        self.page == Page::Done
    }

    /// Ends the session; nothing more can be bought.
    pub fn close(&mut self) {
        self.page = Page::Done;
    }
}

fn bracketed<'a>(command: &'a str, verb: &str) -> Option<&'a str> {
    let head = command.get(..verb.len())?;
    if !head.eq_ignore_ascii_case(verb) {
        return None;
    }
    command[verb.len()..]
        .trim_start()
        .strip_prefix('[')?
        .strip_suffix(']')
        .map(str::trim)
}

fn render_results(results: &[(&Product, f64)]) -> String {
    let mut out = String::from("Search results:");
    for (p, _) in results {
        out.push_str(&format!("\n[{}] {} | {}", p.id, p.title, p.price));
    }
    out
}

fn render_product(p: &Product) -> String {
    let attrs: Vec<&str> = p.attributes.iter().map(String::as_str).collect();
    format!(
        "[{}] {}\nCategory: {}\nAttributes: {}\nPrice: {}\nSay buy to purchase this item.",
        p.id,
        p.title,
        p.category,
        attrs.join(", "),
        p.price
    )
}

/// Applies one command and returns the rendered page.
pub fn shop_step(session: &mut ShopSession, catalog: &Catalog, command: &str) -> String {
    if session.is_done() {
        return SESSION_OVER.to_string();
    }
    let command = command.trim();
    if let Some(query) = bracketed(command, "search") {
        return match catalog.search(query) {
            Ok(results) => {
                session.last_results = results.iter().map(|(p, _)| p.id.clone()).collect();
                session.page = Page::Results;
                render_results(&results)
            }
            Err(_) => USAGE.to_string(),
        };
    }
    let target = bracketed(command, "click");
    let is_buy = command.eq_ignore_ascii_case("buy")
        || target.is_some_and(|t| t.eq_ignore_ascii_case("buy") || t.eq_ignore_ascii_case("buy now"));
    if is_buy {
        return match std::mem::replace(&mut session.page, Page::Done) {
            Page::Product(id) => {
                session.purchased = Some(id.clone());
                format!("You bought [{id}]. Thank you for shopping.")
            }
            page => {
                session.page = page;
                NOTHING_TO_BUY.to_string()
            }
        };
    }
    match target {
        Some(id) => match catalog.get(id) {
            Some(p) => {
                session.page = Page::Product(p.id.clone());
                render_product(p)
            }
            None => NO_SUCH_PRODUCT.to_string(),
        },
        None => USAGE.to_string(),
    }
}

/// attribute fraction × category match × price gate; 0 without a purchase.
pub fn shop_reward(session: &ShopSession, catalog: &Catalog, task: &ShopTask) -> Result<f64, BenchError> {
    if !session.is_done() {
        return Err(BenchError::SessionActive);
    }
    let Some(bought) = session.purchased().and_then(|id| catalog.get(id)) else {
        return Ok(0.0);
    };
    let gold = catalog
        .get(&task.gold_product_id)
        .ok_or_else(|| BenchError::Data(format!("unknown gold product: {}", task.gold_product_id)))?;
    let attr_fraction = if task.required_attributes.is_empty() {
        1.0
    } else {
        let hit = task
            .required_attributes
            .iter()
            .filter(|a| bought.attributes.contains(*a))
            .count();
        hit as f64 / task.required_attributes.len() as f64
    };
    let category = if bought.category == gold.category { 1.0 } else { 0.0 };
    let price_ok = if bought.price <= task.price_cap { 1.0 } else { 0.0 };
    Ok(attr_fraction * category * price_ok)
}

/// A session shared by the shop actions of one agent run.
pub type SharedSession = Arc<Mutex<ShopSession>>;

fn with_session<T>(session: &SharedSession, f: impl FnOnce(&mut ShopSession) -> T) -> T {
    let mut guard = session.lock().unwrap_or_else(|p| p.into_inner());
    f(&mut guard)
}

/// `Search{query}`.
#[derive(Debug, Clone)]
pub struct ShopSearchAction {
    catalog: Arc<Catalog>,
    session: SharedSession,
}

impl ShopSearchAction {
    pub fn new(catalog: Arc<Catalog>, session: SharedSession) -> Self {
        ShopSearchAction { catalog, session }
    }
}

impl Action for ShopSearchAction {
    fn spec(&self) -> ActionSpec {
        ActionSpec::new(
            "Search",
            "Search the shop for products. Returns product ids, titles and prices.",
            ActionKind::External,
        )
        .param("query", "keywords describing the product")
    }

    fn call(&self, params: &Params) -> Result<String, ActionError> {
        let query = required(params, "query")?;
        let command = format!("search[{query}]");
        Ok(with_session(&self.session, |s| shop_step(s, &self.catalog, &command)))
    }
}

/// `Click{target}`: a product id opens its page, `buy` purchases it.
#[derive(Debug, Clone)]
pub struct ShopClickAction {
    catalog: Arc<Catalog>,
    session: SharedSession,
}

impl ShopClickAction {
    pub fn new(catalog: Arc<Catalog>, session: SharedSession) -> Self {
        ShopClickAction { catalog, session }
    }
}

impl Action for ShopClickAction {
    fn spec(&self) -> ActionSpec {
        ActionSpec::new(
            "Click",
            "Click a product id from the search results to open its page, \
             or click buy on a product page to purchase it.",
            ActionKind::External,
        )
        .param("target", "a product id such as P01, or buy")
    }

    fn call(&self, params: &Params) -> Result<String, ActionError> {
        let target = required(params, "target")?;
        let command = format!("click[{target}]");
        Ok(with_session(&self.session, |s| shop_step(s, &self.catalog, &command)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product(id: &str, title: &str, category: &str, attrs: &[&str], cents: u64) -> Product {
        Product {
            id: id.into(),
            title: title.into(),
            category: category.into(),
            attributes: attrs.iter().map(|a| a.to_string()).collect(),
            price: Price(cents),
        }
    }

    fn catalog() -> Catalog {
        Catalog::new(vec![
            product("P1", "Wireless Sport Earbuds", "audio", &["wireless", "sweat resistant"], 4999),
            product("P2", "Wired Earbuds", "audio", &["wired"], 999),
            product("P3", "Wireless Studio Headphones", "audio", &["wireless", "over-ear"], 19999),
            product("P4", "Trail Shoe", "shoes", &["wireless", "sweat resistant"], 1000),
        ])
        .unwrap()
    }

    fn task() -> ShopTask {
        ShopTask {
            instruction: "wireless sweat resistant earbuds under 60 dollars".into(),
            required_attributes: ["wireless", "sweat resistant"].iter().map(|s| s.to_string()).collect(),
            price_cap: Price(6000),
            gold_product_id: "P1".into(),
            difficulty: Difficulty::Easy,
        }
    }

    fn buy(id: &str) -> ShopSession {
        let cat = catalog();
        let mut s = ShopSession::new();
        shop_step(&mut s, &cat, &format!("click[{id}]"));
        shop_step(&mut s, &cat, "buy");
        s
    }

    #[test]
    fn price_parsing_and_display() {
        assert_eq!(Price::from_dollars(12.99), Some(Price(1299)));
        assert_eq!(Price::from_dollars(0.0), None);
        assert_eq!(Price(905).to_string(), "$9.05");
        let p: Price = serde_json::from_str("64.5").unwrap();
        assert_eq!(p, Price(6450));
        assert!(serde_json::from_str::<Price>("-1").is_err());
    }

    #[test]
    fn exact_title_search_lists_product_first() {
        let cat = catalog();
        for p in cat.products() {
            let results = cat.search(&p.title).unwrap();
            assert_eq!(results[0].0.id, p.id);
        }
    }

    #[test]
    fn gold_trajectory_buys_gold() {
        let cat = catalog();
        let mut s = ShopSession::new();
        let obs = shop_step(&mut s, &cat, "search[Wireless Sport Earbuds]");
        assert!(obs.starts_with("Search results:\n[P1] Wireless Sport Earbuds | $49.99"));
        assert_eq!(s.last_results()[0], "P1");
        let page = shop_step(&mut s, &cat, "click[P1]");
        assert!(page.contains("Attributes: sweat resistant, wireless"));
        assert_eq!(s.page(), &Page::Product("P1".into()));
        assert_eq!(shop_step(&mut s, &cat, "buy"), "You bought [P1]. Thank you for shopping.");
        assert!(s.is_done());
        assert_eq!(s.purchased(), Some("P1"));
        assert_eq!(shop_step(&mut s, &cat, "click[P2]"), SESSION_OVER);
        assert_eq!(s.purchased(), Some("P1"));
    }

    #[test]
    fn guards() {
        let cat = catalog();
        let mut s = ShopSession::new();
        assert_eq!(shop_step(&mut s, &cat, "buy"), NOTHING_TO_BUY);
        assert_eq!(shop_step(&mut s, &cat, "click[P99]"), NO_SUCH_PRODUCT);
        assert_eq!(shop_step(&mut s, &cat, "dance"), USAGE);
        assert_eq!(shop_step(&mut s, &cat, "search[]"), USAGE);
        assert_eq!(shop_step(&mut s, &cat, "search[earbuds"), USAGE);
        assert!(!s.is_done());
        assert_eq!(shop_step(&mut s, &cat, "Click[P2]").lines().next(), Some("[P2] Wired Earbuds"));
        assert_eq!(shop_step(&mut s, &cat, "click[Buy Now]"), "You bought [P2]. Thank you for shopping.");
    }

    #[test]
    fn rewards() {
        let cat = catalog();
        let t = task();
        assert_eq!(shop_reward(&buy("P1"), &cat, &t), Ok(1.0));
        assert_eq!(shop_reward(&buy("P2"), &cat, &t), Ok(0.0));
        assert_eq!(shop_reward(&buy("P3"), &cat, &t), Ok(0.0)); // over the cap
        assert_eq!(shop_reward(&buy("P4"), &cat, &t), Ok(0.0)); // other category
        let mut closed = ShopSession::new();
        assert_eq!(shop_reward(&closed, &cat, &t), Err(BenchError::SessionActive));
        closed.close();
        assert_eq!(shop_reward(&closed, &cat, &t), Ok(0.0));

        let mut half = t.clone();
        half.required_attributes.insert("wired".into());
        half.required_attributes.remove("sweat resistant");
        assert_eq!(shop_reward(&buy("P2"), &cat, &half), Ok(0.5));
    }

    #[test]
    fn task_checks() {
        let cat = catalog();
        assert!(cat.check_task(&task()).is_ok());
        let mut bad = task();
        bad.price_cap = Price(100);
        assert!(cat.check_task(&bad).is_err());
        bad = task();
        bad.required_attributes.insert("over-ear".into());
        assert!(cat.check_task(&bad).is_err());
        bad = task();
        bad.gold_product_id = "P9".into();
        assert!(cat.check_task(&bad).is_err());
    }

    #[test]
    fn actions_share_a_session() {
        let cat = Arc::new(catalog());
        let session: SharedSession = Arc::new(Mutex::new(ShopSession::new()));
        let search = ShopSearchAction::new(cat.clone(), session.clone());
        let click = ShopClickAction::new(cat, session.clone());
        let p = |k: &str, v: &str| {
            let mut m = Params::new();
            m.insert(k.into(), v.into());
            m
        };
        search.call(&p("query", "sport earbuds")).unwrap();
        click.call(&p("target", "P1")).unwrap();
        click.call(&p("target", "buy")).unwrap();
        assert_eq!(session.lock().unwrap().purchased(), Some("P1"));
        assert!(click.call(&Params::new()).is_err());
    }
}
