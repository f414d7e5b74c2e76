//! Flat `key = value` config files, one entry per line, `#` comments.
//!
//! Keys are flag names without the leading dashes. `true` turns into a bare
//! switch and `false` drops the entry; a key may repeat for list flags.

use serde::Serialize;
use serde_json::Value;

/// Parses entries in file order.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        let k = k.trim();
        if k.is_empty() || k.starts_with('-') {
            return Err(format!("line {}: bad key '{k}'", n + 1));
        }
        out.push((k.replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Command-line tokens equivalent to `entries`.
pub fn config_tokens(entries: &[(String, String)]) -> Vec<String> {
    let mut out = Vec::new();
    for (k, v) in entries {
        match v.as_str() {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => {
                out.push(format!("--{k}"));
                out.push(v.clone());
            }
        }
    }
    out
}

/// Renders resolved arguments; absent options are omitted.
pub fn render_config(command: &str, args: &impl Serialize) -> String {
    let mut out = format!("# evdn {command}\n");
    let Ok(Value::Object(map)) = serde_json::to_value(args) else {
        return out;
    };
    for (k, v) in map {
        let key = k.replace('_', "-");
        let values = match v {
            Value::Null => continue,
            Value::Array(items) => items,
            other => vec![other],
        };
        for item in values {
            let text = match item {
                Value::String(s) => s,
                other => other.to_string(),
            };
            out.push_str(&format!("{key} = {text}\n"));
        }
    }
    out
}
