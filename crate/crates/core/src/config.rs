//! Line-oriented `key = value` configuration files and JSON number formatting.
//!
//! A config file holds one `key = value` pair per line; `#` starts a comment
//! and blank lines are ignored. Every key is a field of
//! [`ProtocolConfig`](crate::protocol::ProtocolConfig); unknown keys are
//! rejected. Command-line overrides are applied after the file, and the file
//! after the defaults.

use serde::Serializer;

use crate::error::{Error, Result};

/// Parse `key = value` lines into ordered pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {raw:?}", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Split a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

pub(crate) fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

pub(crate) fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

pub(crate) fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s.trim()))
        .collect()
}

/// Render a float with exactly six decimals.
pub fn format6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn number6(x: f64) -> Option<serde_json::Number> {
    if x.is_finite() {
        serde_json::from_str(&format6(x)).ok()
    } else {
        None
    }
}

/// Serialize a float as a JSON number with six fixed decimals (`null` if
/// non-finite).
pub fn fixed6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    match number6(*x) {
        Some(n) => s.serialize_some(&n),
        None => s.serialize_none(),
    }
}

pub fn fixed6_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| number6(*x)))
}

pub fn fixed6_opt_vec<S: Serializer>(xs: &[Option<f64>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.and_then(number6)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_with_comments() {
        let text = "# header\nseed = 4\n\n  lr=0.01 # trailing\n";
        let pairs = parse_pairs(text).unwrap();
        assert_eq!(pairs, vec![("seed".into(), "4".into()), ("lr".into(), "0.01".into())]);
        assert!(parse_pairs("no equals sign").is_err());
        assert!(parse_pairs(" = 3").is_err());
    }

    #[test]
    fn fixed_six_decimals() {
        #[derive(serde::Serialize)]
        struct T {
            #[serde(serialize_with = "fixed6")]
            x: f64,
            #[serde(serialize_with = "fixed6_vec")]
            v: Vec<f64>,
        }
        let t = T { x: 0.5, v: vec![1.0, -1e-9, 2.0 / 3.0] };
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"x":0.500000,"v":[1.000000,0.000000,0.666667]}"#);
    }
}
