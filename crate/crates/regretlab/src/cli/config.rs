//! JSON config access with path-qualified errors.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::{invalid, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// Reads a config file and checks the optional "schema" version.
pub fn read(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid("", format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| invalid("", format!("malformed JSON: {e}")))?;
    let Value::Object(m) = &v else {
        return Err(invalid("", "config must be a JSON object"));
    };
    match m.get("schema") {
        None => {}
        Some(s) if s.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(s) => return Err(invalid(".schema", format!("unsupported schema {s}; expected {SCHEMA_VERSION}"))),
    }
    Ok(v)
}

/// Object view of a value at `path`.
pub struct Obj<'a> {
    pub map: &'a Map<String, Value>,
    pub path: String,
}

impl<'a> Obj<'a> {
    pub fn new(v: &'a Value, path: &str) -> Result<Self> {
        v.as_object()
            .map(|map| Obj { map, path: path.to_string() })
            .ok_or_else(|| invalid(path, "expected an object"))
    }

    pub fn at(&self, key: &str) -> String {
        format!("{}.{key}", self.path)
    }

    pub fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    pub fn req(&self, key: &str) -> Result<&'a Value> {
        self.get(key).ok_or_else(|| invalid(self.at(key), "missing required field"))
    }

    /// Deserializes a required field.
    pub fn parse<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        decode(self.req(key)?, &self.at(key))
    }

    /// Deserializes an optional field.
    pub fn opt<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        self.get(key).map(|v| decode(v, &self.at(key))).transpose()
    }

    pub fn or<T: DeserializeOwned>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn str(&self, key: &str) -> Result<&'a str> {
        self.req(key)?.as_str().ok_or_else(|| invalid(self.at(key), "expected a string"))
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(invalid(self.at(k), format!("unknown field; expected one of {}", allowed.join(", ")))),
            None => Ok(()),
        }
    }
}

pub fn decode<T: DeserializeOwned>(v: &Value, path: &str) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| invalid(path, e.to_string()))
}
