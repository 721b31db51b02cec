//! Parsing of `name:key=value,key=value` spec strings used on the command
//! line for weight pairs and interval families.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) struct SpecString {
    pub name: String,
    params: BTreeMap<String, String>,
    input: String,
}

impl SpecString {
    pub fn parse(input: &str) -> Result<SpecString> {
        let input = input.trim();
        let (name, rest) = match input.split_once(':') {
            Some((n, r)) => (n, r),
            None => (input, ""),
        };
        let mut params = BTreeMap::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse {
                input: input.to_string(),
                reason: format!("expected key=value, found `{part}`"),
            })?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(SpecString { name: name.trim().to_string(), params, input: input.to_string() })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::Parse {
                input: self.input.clone(),
                reason: format!("bad value `{v}` for `{key}`"),
            }),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Parse {
            input: self.input.clone(),
            reason: format!("missing `{key}`"),
        })
    }

    /// Rejects keys outside `allowed`, catching typos early.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Parse { input: self.input.clone(), reason: format!("unknown key `{k}`") });
            }
        }
        Ok(())
    }

    pub fn unknown_kind(&self) -> Error {
        Error::Parse { input: self.input.clone(), reason: format!("unknown kind `{}`", self.name) }
    }
}
