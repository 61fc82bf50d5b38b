use logiciot::dsl::{RelationDecl, TIMESTAMP_FIELD};
use logiciot::store::{Record, Store, StoreError};
use serde::ser::{Serialize, SerializeMap, Serializer};

/// One record as `{"T": t, "<field>": value, ...}` in declared order.
pub struct RowJson<'a> {
    pub decl: &'a RelationDecl,
    pub record: &'a Record,
}

impl Serialize for RowJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.decl.fields.len() + 1))?;
        map.serialize_entry(TIMESTAMP_FIELD, &self.record.t)?;
        for (name, value) in self.decl.fields.iter().zip(&self.record.values) {
            map.serialize_entry(name, value)?;
        }
        map.end()
    }
}

/// The newest `limit` records of `relation` as a JSON array, newest first.
pub fn read_json(store: &Store, relation: &str, limit: usize) -> Result<Vec<u8>, StoreError> {
    let window = store.window(relation)?;
    let decl = window.decl();
    let rows: Vec<RowJson> = store
        .read(relation, limit)?
        .into_iter()
        .map(|record| RowJson { decl, record })
        .collect();
    Ok(serde_json::to_vec(&rows).expect("values are always serializable"))
}
