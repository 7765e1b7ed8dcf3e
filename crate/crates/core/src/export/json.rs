//! Canonical JSON form of a model plus its trace links. Keys are sorted,
//! output is pretty-printed with a trailing newline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_model, BpmnModel, FlowNode, MessageFlow, Pool, TraceLink, Violation};

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Wire {
    pools: Vec<Pool>,
    message_flows: Vec<MessageFlow>,
    trace_links: Vec<TraceLink>,
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {violation}")]
    Invalid { path: String, violation: Violation },
}

impl JsonError {
    pub fn path(&self) -> &str {
        match self {
            JsonError::Schema { path, .. } | JsonError::Invalid { path, .. } => path,
        }
    }
}

pub fn to_json_value(model: &BpmnModel, links: &[TraceLink]) -> serde_json::Value {
    let wire = WireRef {
        pools: &model.pools,
        message_flows: &model.message_flows,
        trace_links: links,
    };
    // Value's map type is ordered, which gives sorted keys
    serde_json::to_value(&wire).expect("model serializes")
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WireRef<'a> {
    pools: &'a [Pool],
    message_flows: &'a [MessageFlow],
    trace_links: &'a [TraceLink],
}

pub fn to_json(model: &BpmnModel, links: &[TraceLink]) -> String {
    let mut s = serde_json::to_string_pretty(&to_json_value(model, links)).expect("value serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<(BpmnModel, Vec<TraceLink>), JsonError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let wire: Wire = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        JsonError::Schema {
            path: if path == "." {
                "$".to_string()
            } else {
                format!("$.{path}")
            },
            message: e.into_inner().to_string(),
        }
    })?;
    let model = BpmnModel {
        pools: wire.pools,
        message_flows: wire.message_flows,
    };
    if let Some(v) = validate_model(&model).into_iter().next() {
        let path = v
            .elements
            .first()
            .and_then(|id| element_path(&model, id))
            .unwrap_or_else(|| "$".to_string());
        return Err(JsonError::Invalid { path, violation: v });
    }
    Ok((model, wire.trace_links))
}

/// JSON path of the element with `id`, e.g. `$.pools[1].nodes[2]`.
pub fn element_path(model: &BpmnModel, id: &str) -> Option<String> {
    fn in_nodes(nodes: &[FlowNode], flows: &[crate::model::SequenceFlow], base: String, id: &str) -> Option<String> {
        for (i, n) in nodes.iter().enumerate() {
            let here = format!("{base}.nodes[{i}]");
            if n.id.as_str() == id {
                return Some(here);
            }
            if let Some(sp) = n.sub_process() {
                if let Some(p) = in_nodes(&sp.nodes, &sp.sequence_flows, here, id) {
                    return Some(p);
                }
            }
        }
        flows
            .iter()
            .position(|f| f.id.as_str() == id)
            .map(|i| format!("{base}.sequenceFlows[{i}]"))
    }
    if let Some(i) = model.message_flows.iter().position(|f| f.id.as_str() == id) {
        return Some(format!("$.messageFlows[{i}]"));
    }
    for (i, p) in model.pools.iter().enumerate() {
        let base = format!("$.pools[{i}]");
        if p.id.as_str() == id {
            return Some(base);
        }
        if let Some(found) = in_nodes(&p.nodes, &p.sequence_flows, base, id) {
            return Some(found);
        }
    }
    None
}
