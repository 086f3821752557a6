//! The two-line invocation grammar shared by prompts, parsers and traces:
//!
//! ```text
//! Action: <name>
//! Action Input: {"param": "value", ...}
//! ```
//!
//! Any text before the `Action:` line and after the JSON object is ignored.

use serde_json::Value;
use thiserror::Error;

use crate::types::{is_valid_name, ActionInvocation, Params};

const ACTION_PREFIX: &str = "Action:";
const INPUT_PREFIX: &str = "Action Input:";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no \"Action:\" line found in {text:?}")]
    NoAction { text: String },
    #[error("bad action parameters ({reason}) in {text:?}")]
    BadParams { reason: String, text: String },
}

impl ParseError {
    pub fn text(&self) -> &str {
        match self {
            ParseError::NoAction { text } | ParseError::BadParams { text, .. } => text,
        }
    }
}

/// Parses the first `Action:` / `Action Input:` pair out of an LLM reply.
pub fn parse_invocation(text: &str) -> Result<ActionInvocation, ParseError> {
    let mut lines = text.lines();
    let action_name = loop {
        let Some(line) = lines.next() else {
            return Err(ParseError::NoAction { text: text.into() });
        };
        let line = line.trim();
        if line.starts_with(INPUT_PREFIX) {
            continue;
        }
        if let Some(rest) = line.strip_prefix(ACTION_PREFIX) {
            let name = rest.trim();
            if is_valid_name(name) {
                break name.to_string();
            }
        }
    };

    let bad = |reason: &str| ParseError::BadParams {
        reason: reason.into(),
        text: text.into(),
    };

    // The input line is the next non-blank line; the JSON may run onto
    // further lines when a model pretty-prints it.
    let mut remainder = String::new();
    let mut found_input = false;
    for line in lines.by_ref() {
        if !found_input {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            match trimmed.strip_prefix(INPUT_PREFIX) {
                Some(rest) => {
                    found_input = true;
                    remainder.push_str(rest);
                }
                None => return Err(bad("missing \"Action Input:\" line")),
            }
        } else {
            remainder.push('\n');
            remainder.push_str(line);
        }
    }
    if !found_input {
        return Err(bad("missing \"Action Input:\" line"));
    }

    let mut stream = serde_json::Deserializer::from_str(&remainder).into_iter::<Value>();
    let value = match stream.next() {
        Some(Ok(value)) => value,
        Some(Err(err)) => return Err(bad(&err.to_string())),
        None => return Err(bad("empty action input")),
    };
    let Value::Object(map) = value else {
        return Err(bad("action input is not a JSON object"));
    };

    let mut params = Params::new();
    for (key, value) in map {
        let value = match value {
            Value::String(s) => s,
            // Scalars are accepted in their JSON spelling; handlers parse
            // typed values themselves.
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Null | Value::Array(_) | Value::Object(_) => {
                return Err(bad(&format!("parameter {key:?} is not a string")));
            }
        };
        params.insert(key, value);
    }
    Ok(ActionInvocation {
        action_name,
        params,
    })
}

/// Renders an invocation in canonical form; keys keep insertion order.
pub fn serialize_invocation(inv: &ActionInvocation) -> String {
    format!(
        "{ACTION_PREFIX} {}\n{INPUT_PREFIX} {}",
        inv.action_name,
        params_json(&inv.params)
    )
}

/// `{"k": "v", "k2": "v2"}` with one space after each colon and comma.
pub fn params_json(params: &Params) -> String {
    let body: Vec<String> = params
        .iter()
        .map(|(k, v)| format!("{}: {}", json_string(k), json_string(v)))
        .collect();
    format!("{{{}}}", body.join(", "))
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_finish() {
        let inv = parse_invocation("Action: Finish\nAction Input: {\"response\": \"Paris\"}").unwrap();
        assert_eq!(inv, ActionInvocation::finish("Paris"));
    }

    #[test]
    fn ignores_preamble_and_trailing_text() {
        let text = "I think...\nAction: Think\nAction Input: {\"response\": \"need to search\"} and then more\nmore junk";
        let inv = parse_invocation(text).unwrap();
        assert_eq!(inv, ActionInvocation::new("Think").with("response", "need to search"));
    }

    #[test]
    fn tolerates_surrounding_whitespace_and_blank_lines() {
        let text = "  \n   Action:   Calculator  \n\n  Action Input: {\"expression\": \"1+1\"}  \n";
        let inv = parse_invocation(text).unwrap();
        assert_eq!(inv.action_name, "Calculator");
        assert_eq!(inv.param("expression"), Some("1+1"));
    }

    #[test]
    fn accepts_pretty_printed_json() {
        let text = "Action: Search\nAction Input: {\n  \"query\": \"bridge\"\n}\n";
        let inv = parse_invocation(text).unwrap();
        assert_eq!(inv.param("query"), Some("bridge"));
    }

    #[test]
    fn prose_without_action_is_no_action() {
        let err = parse_invocation("The answer is Paris.").unwrap_err();
        assert!(matches!(err, ParseError::NoAction { .. }));
        assert_eq!(err.text(), "The answer is Paris.");
    }

    #[test]
    fn malformed_json_is_bad_params() {
        let text = "Action: Finish\nAction Input: {response: Paris}";
        let err = parse_invocation(text).unwrap_err();
        assert!(matches!(err, ParseError::BadParams { .. }));
        assert_eq!(err.text(), text);
    }

    #[test]
    fn missing_input_line_is_bad_params() {
        assert!(matches!(
            parse_invocation("Action: Finish"),
            Err(ParseError::BadParams { .. })
        ));
        assert!(matches!(
            parse_invocation("Action: Finish\nsomething else"),
            Err(ParseError::BadParams { .. })
        ));
    }

    #[test]
    fn nested_values_are_rejected_and_scalars_stringified() {
        assert!(parse_invocation("Action: X\nAction Input: {\"a\": [1]}").is_err());
        let inv = parse_invocation("Action: X\nAction Input: {\"a\": 3, \"b\": true}").unwrap();
        assert_eq!(inv.param("a"), Some("3"));
        assert_eq!(inv.param("b"), Some("true"));
    }

    #[test]
    fn invalid_action_names_are_skipped() {
        let text = "Action: do the thing\nAction: Think\nAction Input: {}";
        assert_eq!(parse_invocation(text).unwrap().action_name, "Think");
    }

    #[test]
    fn serializes_canonically() {
        assert_eq!(
            serialize_invocation(&ActionInvocation::finish("42")),
            "Action: Finish\nAction Input: {\"response\": \"42\"}"
        );
        assert_eq!(
            serialize_invocation(&ActionInvocation::new("Think")),
            "Action: Think\nAction Input: {}"
        );
    }

    #[test]
    fn serialization_keeps_key_order() {
        let inv = ActionInvocation::new("X").with("z", "1").with("a", "2");
        assert_eq!(
            serialize_invocation(&inv),
            "Action: X\nAction Input: {\"z\": \"1\", \"a\": \"2\"}"
        );
        let back = parse_invocation(&serialize_invocation(&inv)).unwrap();
        assert_eq!(back.params.keys().collect::<Vec<_>>(), vec!["z", "a"]);
    }

    fn invocation_strategy() -> impl Strategy<Value = ActionInvocation> {
        (
            "[A-Za-z0-9_]{1,12}",
            proptest::collection::vec((".{0,8}", ".{0,24}"), 0..5),
        )
            .prop_map(|(name, pairs)| {
                let mut inv = ActionInvocation::new(name);
                for (k, v) in pairs {
                    inv.params.insert(k, v);
                }
                inv
            })
    }

    proptest! {
        #[test]
        fn parse_inverts_serialize(inv in invocation_strategy()) {
            let text = serialize_invocation(&inv);
            let back = parse_invocation(&text).unwrap();
            prop_assert_eq!(&back, &inv);
            prop_assert_eq!(back.params.keys().collect::<Vec<_>>(), inv.params.keys().collect::<Vec<_>>());
        }

        #[test]
        fn parse_never_panics(text in "(?s).{0,200}") {
            let _ = parse_invocation(&text);
        }
    }
}
