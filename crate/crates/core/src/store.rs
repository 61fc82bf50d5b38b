//! Bounded per-relation history windows.

use std::collections::{HashMap, VecDeque};

use crate::dsl::{RelationDecl, TIMESTAMP_FIELD};
use crate::value::Value;

/// Default number of records retained per relation.
pub const DEFAULT_WINDOW: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// Engine-clock timestamp, milliseconds since the Unix epoch.
    pub t: u64,
    /// Global insertion sequence number, unique across relations.
    pub seq: u64,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` has no field `{field}`")]
    UnknownField { relation: String, field: String },
    #[error("relation `{relation}` takes {expected} value(s), {found} given")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("field `{relation}.{field}` is not a finite number")]
    NonFinite { relation: String, field: String },
    #[error("history unavailable: `{relation}.{field}[{offset}]` with {available} record(s) in the window")]
    HistoryUnavailable {
        relation: String,
        field: String,
        offset: i64,
        available: usize,
    },
    #[error("sequence number {seq} does not follow {last}")]
    SeqNotIncreasing { seq: u64, last: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationWindow {
    decl: RelationDecl,
    capacity: usize,
    records: VecDeque<Record>,
}

impl RelationWindow {
    pub fn new(decl: RelationDecl, capacity: usize) -> RelationWindow {
        assert!(capacity > 0, "window capacity must be positive");
        RelationWindow {
            decl,
            capacity,
            records: VecDeque::with_capacity(capacity.min(DEFAULT_WINDOW)),
        }
    }

    pub fn decl(&self) -> &RelationDecl {
        &self.decl
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Oldest first.
    pub fn records(&self) -> impl DoubleEndedIterator<Item = &Record> + ExactSizeIterator {
        self.records.iter()
    }

    fn push(&mut self, record: Record) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    /// `offset` 0 is the newest record, -k the k-th one before it.
    pub fn at_offset(&self, offset: i64) -> Option<&Record> {
        if offset > 0 {
            return None;
        }
        let back = usize::try_from(offset.unsigned_abs()).ok()?;
        let idx = self.records.len().checked_sub(back + 1)?;
        self.records.get(idx)
    }
}

/// All relation windows plus the global sequence counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Store {
    windows: Vec<RelationWindow>,
    by_name: HashMap<String, usize>,
    next_seq: u64,
}

impl Store {
    pub fn new<'a>(
        relations: impl IntoIterator<Item = &'a RelationDecl>,
        capacity_of: impl Fn(&str) -> usize,
    ) -> Store {
        let windows: Vec<RelationWindow> = relations
            .into_iter()
            .map(|d| RelationWindow::new(d.clone(), capacity_of(&d.name)))
            .collect();
        let by_name = windows
            .iter()
            .enumerate()
            .map(|(i, w)| (w.decl.name.clone(), i))
            .collect();
        Store {
            windows,
            by_name,
            next_seq: 1,
        }
    }

    pub fn with_default_window<'a>(relations: impl IntoIterator<Item = &'a RelationDecl>) -> Store {
        Store::new(relations, |_| DEFAULT_WINDOW)
    }

    /// The sequence number the next insert will receive.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn window(&self, relation: &str) -> Result<&RelationWindow, StoreError> {
        self.by_name
            .get(relation)
            .map(|&i| &self.windows[i])
            .ok_or_else(|| StoreError::UnknownRelation(relation.to_string()))
    }

    pub fn windows(&self) -> impl Iterator<Item = &RelationWindow> {
        self.windows.iter()
    }

    pub fn total_records(&self) -> usize {
        self.windows.iter().map(RelationWindow::len).sum()
    }

    /// Appends a record with an explicit sequence number, evicting the
    /// oldest record when the window is full.
    pub fn insert(
        &mut self,
        relation: &str,
        values: Vec<Value>,
        t: u64,
        seq: u64,
    ) -> Result<&Record, StoreError> {
        let idx = *self
            .by_name
            .get(relation)
            .ok_or_else(|| StoreError::UnknownRelation(relation.to_string()))?;
        if seq < self.next_seq {
            return Err(StoreError::SeqNotIncreasing {
                seq,
                last: self.next_seq - 1,
            });
        }
        let window = &mut self.windows[idx];
        if values.len() != window.decl.arity() {
            return Err(StoreError::ArityMismatch {
                relation: relation.to_string(),
                expected: window.decl.arity(),
                found: values.len(),
            });
        }
        if let Some(i) = values
            .iter()
            .position(|v| matches!(v, Value::Number(n) if !n.is_finite()))
        {
            return Err(StoreError::NonFinite {
                relation: relation.to_string(),
                field: window.decl.fields[i].clone(),
            });
        }
        window.push(Record { t, seq, values });
        self.next_seq = seq + 1;
        Ok(window.records.back().expect("just pushed"))
    }

    /// Appends a record under the next sequence number.
    pub fn insert_next(
        &mut self,
        relation: &str,
        values: Vec<Value>,
        t: u64,
    ) -> Result<&Record, StoreError> {
        let seq = self.next_seq;
        self.insert(relation, values, t, seq)
    }

    /// Value of `relation.field[offset]`; the field `T` yields the timestamp.
    pub fn latest(&self, relation: &str, field: &str, offset: i64) -> Result<Value, StoreError> {
        let window = self.window(relation)?;
        let column = if field == TIMESTAMP_FIELD {
            None
        } else {
            Some(window.decl.field_index(field).ok_or_else(|| StoreError::UnknownField {
                relation: relation.to_string(),
                field: field.to_string(),
            })?)
        };
        let record = window
            .at_offset(offset)
            .ok_or_else(|| StoreError::HistoryUnavailable {
                relation: relation.to_string(),
                field: field.to_string(),
                offset,
                available: window.len(),
            })?;
        Ok(match column {
            None => Value::Number(record.t as f64),
            Some(i) => record.values[i].clone(),
        })
    }

    /// Up to `limit` records, newest first.
    pub fn read(&self, relation: &str, limit: usize) -> Result<Vec<&Record>, StoreError> {
        let window = self.window(relation)?;
        Ok(window.records.iter().rev().take(limit).collect())
    }
}
