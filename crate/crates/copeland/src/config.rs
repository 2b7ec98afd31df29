//! Flat `key = value` configuration text.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub type ConfigMap = BTreeMap<String, String>;

/// Parse `key = value` lines. `#` starts a comment; blank lines are skipped;
/// a key may appear once.
pub fn parse_config(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| Error::usage(format!("line {}: expected `key = value`", no + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::usage(format!("line {}: empty key", no + 1)));
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::usage(format!("line {}: key `{key}` repeated", no + 1)));
        }
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<ConfigMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    parse_config(&text).map_err(|e| e.context(path.display()))
}

/// Typed access with key names in error messages.
pub(crate) struct Lookup<'a> {
    map: &'a ConfigMap,
}

impl<'a> Lookup<'a> {
    pub(crate) fn new(map: &'a ConfigMap, known: &[&str]) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::usage(format!("unknown configuration key `{k}`")));
        }
        Ok(Self { map })
    }

    pub(crate) fn str(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).map(String::as_str)
    }

    pub(crate) fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.str(key).map(|v| v.parse().map_err(|_| Error::usage(format!("cannot parse {key} = `{v}`")))).transpose()
    }

    pub(crate) fn flag(&self, key: &str) -> Result<Option<bool>> {
        self.str(key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "on" | "yes" | "1" => Ok(true),
                "false" | "off" | "no" | "0" => Ok(false),
                _ => Err(Error::usage(format!("{key} = `{v}` is not a boolean"))),
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let map = parse_config("# header\nn = 50\n\nk=10 # trailing\nmodel = planted:delta=0.1\n").unwrap();
        assert_eq!(map["n"], "50");
        assert_eq!(map["k"], "10");
        assert_eq!(map["model"], "planted:delta=0.1");
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_config("n 50\n").is_err());
        assert!(parse_config("n = 1\nn = 2\n").is_err());
        assert!(parse_config(" = 2\n").is_err());
    }

    #[test]
    fn typed_lookup() {
        let map = parse_config("a = 3\nb = on\nc = x\n").unwrap();
        let l = Lookup::new(&map, &["a", "b", "c"]).unwrap();
        assert_eq!(l.get::<u32>("a").unwrap(), Some(3));
        assert_eq!(l.flag("b").unwrap(), Some(true));
        assert!(l.get::<u32>("c").is_err());
        assert!(l.flag("c").is_err());
        assert_eq!(l.get::<u32>("d").unwrap(), None);
        assert!(Lookup::new(&map, &["a"]).is_err());
    }
}
