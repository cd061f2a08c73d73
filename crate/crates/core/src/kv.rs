//! Flat `key=value` text files with `#` comments.

use crate::error::{Error, Result};

/// One `key=value` entry with its 1-based source line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got {line:?}")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::parse(i + 1, "empty key"));
        }
        out.push(Entry {
            line: i + 1,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn value<T: std::str::FromStr>(entry: &Entry) -> Result<T> {
    entry
        .value
        .parse()
        .map_err(|_| Error::parse(entry.line, format!("invalid value {:?} for {}", entry.value, entry.key)))
}

/// Parses a comma-separated list of numbers.
pub fn list<T: std::str::FromStr>(entry: &Entry, len: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = entry.value.split(',').map(str::trim).collect();
    if parts.len() != len {
        return Err(Error::parse(
            entry.line,
            format!("{} expects {len} comma-separated values", entry.key),
        ));
    }
    parts
        .iter()
        .map(|p| {
            p.parse()
                .map_err(|_| Error::parse(entry.line, format!("invalid number {p:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let e = parse("# header\n\nwidth = 240  # px\nheight=180\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].key, "width");
        assert_eq!(e[0].value, "240");
        assert_eq!(e[0].line, 3);
        assert_eq!(value::<u32>(&e[1]).unwrap(), 180);
    }

    #[test]
    fn missing_equals_is_error() {
        assert!(matches!(parse("a=1\nnonsense\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn lists() {
        let e = parse("pole=1.5, 10,0.3").unwrap();
        assert_eq!(list::<f64>(&e[0], 3).unwrap(), vec![1.5, 10.0, 0.3]);
        assert!(list::<f64>(&e[0], 2).is_err());
    }
}
