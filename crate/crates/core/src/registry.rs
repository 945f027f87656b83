//! Name-keyed tables of interchangeable strategies.
//!
//! Each pluggable step (permutation family for the search, check-node kernel,
//! channel-coupling kernel) has a trait; implementations are registered here by
//! name so the CLI and configs can pick them at runtime.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} {name:?}; available: {available}")]
pub struct UnknownStrategy {
    pub kind: &'static str,
    pub name: String,
    pub available: String,
}

struct Entry<T: ?Sized> {
    name: &'static str,
    summary: &'static str,
    make: fn() -> Box<T>,
}

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<Entry<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: Vec::new() }
    }

    /// Adds a constructor. A later registration under an existing name replaces it.
    pub fn register(&mut self, name: &'static str, summary: &'static str, make: fn() -> Box<T>) -> &mut Self {
        self.entries.retain(|e| e.name != name);
        self.entries.push(Entry { name, summary, make });
        self
    }

    pub fn create(&self, name: &str) -> Result<Box<T>, UnknownStrategy> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| (e.make)())
            .ok_or_else(|| UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.name, e.summary)).collect()
    }
}

impl<T: ?Sized> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry").field("kind", &self.kind).field("names", &self.names()).finish()
    }
}
