//! User-level transformer embeddings produced outside this crate.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::UserRecord;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    provenance: String,
    entries: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize, provenance: impl Into<String>) -> Self {
        EmbeddingTable { dimension, provenance: provenance.into(), entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, user_id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::WidthMismatch { expected: self.dimension, got: vector.len() });
        }
        let id = user_id.into();
        if self.entries.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.entries.insert(id, vector);
        Ok(())
    }

    pub fn get(&self, user_id: &str) -> Option<&[f64]> {
        self.entries.get(user_id).map(Vec::as_slice)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in user-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    /// Users without an embedding, in input order.
    pub missing: Vec<String>,
    /// Table entries matching no user, in id order.
    pub unused: Vec<String>,
}

pub fn join_embeddings(users: &[UserRecord], table: &EmbeddingTable) -> Coverage {
    let ids: BTreeSet<&str> = users.iter().map(|u| u.user_id()).collect();
    Coverage {
        missing: users.iter().filter(|u| table.get(u.user_id()).is_none()).map(|u| u.user_id().into()).collect(),
        unused: table.entries.keys().filter(|k| !ids.contains(k.as_str())).cloned().collect(),
    }
}
