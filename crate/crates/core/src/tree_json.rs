//! Recursive JSON tree documents.
//!
//! ```text
//! internal: {"test":{"attr":0,"thr":0.5},"left":…,"right":…,"train_label":1,"total":9,"pos":4}
//! leaf:     {"leaf":{"label":1,"origin":"original"},"total":4,"pos":3}
//! ```
//!
//! `train_label`, `total` and `pos` are optional. Counters are written only for
//! trees that went through a classify pass; on input they must be present on
//! every node or on none.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::tree::{DecisionTree, Node, NodeId, NodeKind, Origin, SplitTest};

pub fn to_value(tree: &DecisionTree) -> Value {
    node_value(tree, 0)
}

fn node_value(tree: &DecisionTree, id: NodeId) -> Value {
    let node = tree.node(id);
    let mut obj = Map::new();
    match node.kind {
        NodeKind::Leaf { label, origin } => {
            let origin = match origin {
                Origin::Original => "original",
                Origin::Pruned => "pruned",
            };
            obj.insert("leaf".into(), json!({ "label": label, "origin": origin }));
        }
        NodeKind::Internal { test, left, right } => {
            obj.insert("test".into(), json!({ "attr": test.attr, "thr": test.threshold }));
            obj.insert("left".into(), node_value(tree, left));
            obj.insert("right".into(), node_value(tree, right));
        }
    }
    if let Some(l) = node.train_label {
        obj.insert("train_label".into(), json!(l));
    }
    if tree.is_counted() {
        obj.insert("total".into(), json!(node.total));
        obj.insert("pos".into(), json!(node.pos));
    }
    Value::Object(obj)
}

pub fn to_string(tree: &DecisionTree) -> String {
    serde_json::to_string(&to_value(tree)).expect("tree values always serialize")
}

pub fn to_string_pretty(tree: &DecisionTree) -> String {
    serde_json::to_string_pretty(&to_value(tree)).expect("tree values always serialize")
}

pub fn from_str(text: &str) -> Result<DecisionTree> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    from_value(&value)
}

pub fn from_value(value: &Value) -> Result<DecisionTree> {
    let mut reader = Reader {
        nodes: Vec::new(),
        counters_seen: None,
    };
    reader.read(value, "$")?;
    let counted = reader.counters_seen.unwrap_or(false);
    DecisionTree::from_nodes(reader.nodes, counted).map_err(|e| match e {
        Error::ContractViolation(msg) => Error::parse("$", msg),
        other => other,
    })
}

struct Reader {
    nodes: Vec<Node>,
    counters_seen: Option<bool>,
}

impl Reader {
    fn read(&mut self, value: &Value, path: &str) -> Result<NodeId> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse(path, "expected an object"))?;
        for key in obj.keys() {
            if !matches!(
                key.as_str(),
                "leaf" | "test" | "left" | "right" | "train_label" | "total" | "pos"
            ) {
                return Err(Error::parse(path, format!("unknown field `{key}`")));
            }
        }
        let train_label = match obj.get("train_label") {
            None | Some(Value::Null) => None,
            Some(v) => Some(read_label(v, &format!("{path}.train_label"))?),
        };
        let (total, pos) = self.read_counters(obj, path)?;

        let id = self.nodes.len();
        match (obj.get("leaf"), obj.get("test")) {
            (Some(leaf), None) => {
                for key in ["left", "right"] {
                    if obj.contains_key(key) {
                        return Err(Error::parse(path, format!("leaf has a `{key}` child")));
                    }
                }
                let lpath = format!("{path}.leaf");
                let leaf = leaf
                    .as_object()
                    .ok_or_else(|| Error::parse(&lpath, "expected an object"))?;
                let label = read_label(
                    leaf.get("label")
                        .ok_or_else(|| Error::parse(&lpath, "missing `label`"))?,
                    &format!("{lpath}.label"),
                )?;
                let origin = match leaf.get("origin") {
                    None => Origin::Original,
                    Some(Value::String(s)) if s == "original" => Origin::Original,
                    Some(Value::String(s)) if s == "pruned" => Origin::Pruned,
                    Some(other) => {
                        return Err(Error::parse(
                            format!("{lpath}.origin"),
                            format!("expected \"original\" or \"pruned\", found {other}"),
                        ))
                    }
                };
                self.nodes.push(Node {
                    kind: NodeKind::Leaf { label, origin },
                    total,
                    pos,
                    train_label,
                });
            }
            (None, Some(test)) => {
                let tpath = format!("{path}.test");
                let test = test
                    .as_object()
                    .ok_or_else(|| Error::parse(&tpath, "expected an object"))?;
                let attr = test
                    .get("attr")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| Error::parse(&tpath, "`attr` must be a non-negative integer"))?;
                let threshold = test
                    .get("thr")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::parse(&tpath, "`thr` must be a number"))?;
                self.nodes.push(Node {
                    kind: NodeKind::Internal {
                        test: SplitTest::new(attr as usize, threshold),
                        left: 0,
                        right: 0,
                    },
                    total,
                    pos,
                    train_label,
                });
                let left_v = obj
                    .get("left")
                    .ok_or_else(|| Error::parse(path, "internal node is missing `left`"))?;
                let right_v = obj
                    .get("right")
                    .ok_or_else(|| Error::parse(path, "internal node is missing `right`"))?;
                let left = self.read(left_v, &format!("{path}.left"))?;
                let right = self.read(right_v, &format!("{path}.right"))?;
                if let NodeKind::Internal { left: l, right: r, .. } = &mut self.nodes[id].kind {
                    *l = left;
                    *r = right;
                }
            }
            (Some(_), Some(_)) => {
                return Err(Error::parse(path, "node has both `leaf` and `test`"));
            }
            (None, None) => {
                return Err(Error::parse(path, "node needs either `leaf` or `test`"));
            }
        }
        Ok(id)
    }

    fn read_counters(&mut self, obj: &Map<String, Value>, path: &str) -> Result<(u64, u64)> {
        let get = |key: &str| -> Result<Option<u64>> {
            match obj.get(key) {
                None => Ok(None),
                Some(v) => v.as_u64().map(Some).ok_or_else(|| {
                    Error::parse(format!("{path}.{key}"), "expected a non-negative integer")
                }),
            }
        };
        let (total, pos) = (get("total")?, get("pos")?);
        let present = match (total, pos) {
            (Some(_), Some(_)) => true,
            (None, None) => false,
            _ => return Err(Error::parse(path, "`total` and `pos` must appear together")),
        };
        match self.counters_seen {
            None => self.counters_seen = Some(present),
            Some(seen) if seen != present => {
                return Err(Error::parse(path, "counters must be given on every node or none"))
            }
            Some(_) => {}
        }
        let (total, pos) = (total.unwrap_or(0), pos.unwrap_or(0));
        if pos > total {
            return Err(Error::parse(path, format!("pos {pos} exceeds total {total}")));
        }
        Ok((total, pos))
    }
}

fn read_label(v: &Value, path: &str) -> Result<u8> {
    match v.as_u64() {
        Some(0) => Ok(0),
        Some(1) => Ok(1),
        _ => Err(Error::parse(path, format!("expected 0 or 1, found {v}"))),
    }
}
