//! Capacity-bounded store of the best `(value, point)` pairs seen so far.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
struct Key {
    value: f64,
    seq: u64,
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Keeps at most `capacity` entries ordered by value, ties broken by
/// insertion order (earlier first).
///
/// When an insert pushes the size past capacity the largest entry is
/// dropped, which may be the entry just inserted.
#[derive(Clone, Debug)]
pub struct BestStore {
    capacity: usize,
    entries: BTreeMap<Key, Vec<f64>>,
    next_seq: u64,
}

impl BestStore {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("store capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            entries: BTreeMap::new(),
            next_seq: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, value: f64, point: Vec<f64>) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NotFinite(value));
        }
        // -0.0 and 0.0 tie
        let key = Key {
            value: value + 0.0,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        self.entries.insert(key, point);
        if self.entries.len() > self.capacity {
            self.entries.pop_last();
        }
        Ok(())
    }

    pub fn extract_min(&mut self) -> Result<(f64, Vec<f64>)> {
        self.entries
            .pop_first()
            .map(|(k, p)| (k.value, p))
            .ok_or(Error::EmptyStore)
    }

    pub fn peek_best(&self) -> Result<(f64, &[f64])> {
        self.entries
            .first_key_value()
            .map(|(k, p)| (k.value, p.as_slice()))
            .ok_or(Error::EmptyStore)
    }

    /// Entries in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.entries.iter().map(|(k, p)| (k.value, p.as_slice()))
    }
}
