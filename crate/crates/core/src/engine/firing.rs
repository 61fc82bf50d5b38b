use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FiringKind {
    Trigger,
    Rule,
    Timer,
}

/// One trigger execution, rule firing or timer tick.
///
/// `seq` is the sequence number of the record whose insert caused the
/// firing; it is 0 for timer ticks and `CHECK`-initiated rule firings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Firing {
    pub seq: u64,
    pub kind: FiringKind,
    pub name: String,
    pub t: u64,
}

impl Firing {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("firings always serialize")
    }
}

/// JSON Lines export, one firing per line, each line newline-terminated.
pub fn export_jsonl<'a>(firings: impl IntoIterator<Item = &'a Firing>) -> String {
    let mut out = String::new();
    for f in firings {
        out.push_str(&f.to_json_line());
        out.push('\n');
    }
    out
}
