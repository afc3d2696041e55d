//! Dotted-path `key=value` overrides applied to a JSON configuration.

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// Parses `a.b.c=value`. The value is read as JSON when possible and as a
/// bare string otherwise, so `mixup.mode=vanilla` and `seeds=[1,2]` both work.
pub fn parse(item: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| anyhow!("override {item:?} is not of the form key=value"))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        bail!("override key {key:?} has an empty component");
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((path, value))
}

fn set(root: &mut Value, path: &[String], value: Value) -> Result<()> {
    let mut node = root;
    for (i, k) in path.iter().enumerate() {
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| anyhow!("{} is not an object", path[..i].join(".")))?;
        if i + 1 == path.len() {
            obj.insert(k.clone(), value);
            return Ok(());
        }
        node = obj.entry(k.clone()).or_insert(Value::Null);
    }
    Ok(())
}

fn get<'a>(root: &'a Value, path: &[String]) -> Option<&'a Value> {
    path.iter().try_fold(root, |v, k| v.get(k))
}

fn same(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}

/// Applies every override to `base` and rebuilds it. Keys the type does not
/// know are rejected, whether or not its deserializer would ignore them.
pub fn apply<T: Serialize + DeserializeOwned>(base: &T, items: &[String]) -> Result<T> {
    let mut tree = serde_json::to_value(base)?;
    let parsed = items.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
    for (path, value) in &parsed {
        set(&mut tree, path, value.clone())
            .with_context(|| format!("cannot apply override {}", path.join(".")))?;
    }
    let out: T = serde_json::from_value(tree).context("invalid override")?;
    let echo = serde_json::to_value(&out)?;
    for (path, value) in &parsed {
        match get(&echo, path) {
            Some(v) if same(v, value) => {}
            _ if value.is_object() && get(&echo, path).is_some() => {}
            _ => bail!("unknown configuration key {}", path.join(".")),
        }
    }
    Ok(out)
}
