//! BPMN collaboration model and its structural well-formedness rules.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::{DataObjectId, FlowId, NodeId, ParticipantId, PoolId, StatementId};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BpmnModel {
    pub pools: Vec<Pool>,
    pub message_flows: Vec<MessageFlow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Pool {
    pub id: PoolId,
    pub participant_id: ParticipantId,
    pub name: String,
    pub nodes: Vec<FlowNode>,
    pub sequence_flows: Vec<SequenceFlow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TaskKind {
    Send,
    Receive,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SubProcess {
    pub name: String,
    pub nodes: Vec<FlowNode>,
    pub sequence_flows: Vec<SequenceFlow>,
}

impl SubProcess {
    pub fn collapsed(name: impl Into<String>) -> Self {
        SubProcess {
            name: name.into(),
            nodes: Vec::new(),
            sequence_flows: Vec::new(),
        }
    }

    pub fn is_collapsed(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    StartEvent,
    EndEvent,
    Task { name: String, kind: TaskKind },
    SubProcess(SubProcess),
    Store { name: String, data_object_id: DataObjectId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "WireNode", into = "WireNode")]
pub struct FlowNode {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Free-form annotations carried over from statements (`cost`, `note`, ...).
    pub attributes: BTreeMap<String, String>,
}

impl FlowNode {
    pub fn new(id: NodeId, kind: NodeKind) -> Self {
        FlowNode {
            id,
            kind,
            attributes: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            NodeKind::StartEvent | NodeKind::EndEvent => "",
            NodeKind::Task { name, .. } | NodeKind::Store { name, .. } => name,
            NodeKind::SubProcess(sp) => &sp.name,
        }
    }

    pub fn task_kind(&self) -> Option<TaskKind> {
        match &self.kind {
            NodeKind::Task { kind, .. } => Some(*kind),
            _ => None,
        }
    }

    /// Tasks and sub-processes.
    pub fn is_activity(&self) -> bool {
        matches!(self.kind, NodeKind::Task { .. } | NodeKind::SubProcess(_))
    }

    pub fn sub_process(&self) -> Option<&SubProcess> {
        match &self.kind {
            NodeKind::SubProcess(sp) => Some(sp),
            _ => None,
        }
    }

    pub fn sub_process_mut(&mut self) -> Option<&mut SubProcess> {
        match &mut self.kind {
            NodeKind::SubProcess(sp) => Some(sp),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "camelCase",
    rename_all_fields = "camelCase",
    deny_unknown_fields
)]
enum WireNode {
    StartEvent {
        id: NodeId,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        attributes: BTreeMap<String, String>,
    },
    EndEvent {
        id: NodeId,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        attributes: BTreeMap<String, String>,
    },
    Task {
        id: NodeId,
        name: String,
        task_kind: TaskKind,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        attributes: BTreeMap<String, String>,
    },
    SubProcess {
        id: NodeId,
        name: String,
        nodes: Vec<FlowNode>,
        sequence_flows: Vec<SequenceFlow>,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        attributes: BTreeMap<String, String>,
    },
    Store {
        id: NodeId,
        name: String,
        data_object_id: DataObjectId,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        attributes: BTreeMap<String, String>,
    },
}

impl From<WireNode> for FlowNode {
    fn from(w: WireNode) -> Self {
        let (id, kind, attributes) = match w {
            WireNode::StartEvent { id, attributes } => (id, NodeKind::StartEvent, attributes),
            WireNode::EndEvent { id, attributes } => (id, NodeKind::EndEvent, attributes),
            WireNode::Task {
                id,
                name,
                task_kind,
                attributes,
            } => (id, NodeKind::Task { name, kind: task_kind }, attributes),
            WireNode::SubProcess {
                id,
                name,
                nodes,
                sequence_flows,
                attributes,
            } => (
                id,
                NodeKind::SubProcess(SubProcess {
                    name,
                    nodes,
                    sequence_flows,
                }),
                attributes,
            ),
            WireNode::Store {
                id,
                name,
                data_object_id,
                attributes,
            } => (id, NodeKind::Store { name, data_object_id }, attributes),
        };
        FlowNode { id, kind, attributes }
    }
}

impl From<FlowNode> for WireNode {
    fn from(n: FlowNode) -> Self {
        let FlowNode { id, kind, attributes } = n;
        match kind {
            NodeKind::StartEvent => WireNode::StartEvent { id, attributes },
            NodeKind::EndEvent => WireNode::EndEvent { id, attributes },
            NodeKind::Task { name, kind } => WireNode::Task {
                id,
                name,
                task_kind: kind,
                attributes,
            },
            NodeKind::SubProcess(sp) => WireNode::SubProcess {
                id,
                name: sp.name,
                nodes: sp.nodes,
                sequence_flows: sp.sequence_flows,
                attributes,
            },
            NodeKind::Store { name, data_object_id } => WireNode::Store {
                id,
                name,
                data_object_id,
                attributes,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SequenceFlow {
    pub id: FlowId,
    pub source: NodeId,
    pub target: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MessageFlow {
    pub id: FlowId,
    pub source: NodeId,
    pub target: NodeId,
    pub payload: Vec<DataObjectId>,
    pub label: String,
}

/// Statement-to-element mapping; element ids are node or flow ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TraceLink {
    pub statement_id: StatementId,
    pub element_ids: Vec<String>,
}

/// A node container: a pool's top level or a sub-process body.
#[derive(Debug, Clone, Copy)]
pub struct Scope<'a> {
    pub nodes: &'a [FlowNode],
    pub flows: &'a [SequenceFlow],
}

impl<'a> Scope<'a> {
    /// Nested sub-process scopes, depth first.
    pub fn children(&self) -> impl Iterator<Item = (&'a FlowNode, Scope<'a>)> + 'a {
        self.nodes.iter().filter_map(|n| {
            n.sub_process().map(|sp| {
                (
                    n,
                    Scope {
                        nodes: &sp.nodes,
                        flows: &sp.sequence_flows,
                    },
                )
            })
        })
    }
}

impl Pool {
    pub fn scope(&self) -> Scope<'_> {
        Scope {
            nodes: &self.nodes,
            flows: &self.sequence_flows,
        }
    }
}

impl BpmnModel {
    pub fn pool(&self, id: &PoolId) -> Option<&Pool> {
        self.pools.iter().find(|p| &p.id == id)
    }

    pub fn pool_of_participant(&self, participant: &ParticipantId) -> Option<&Pool> {
        self.pools.iter().find(|p| &p.participant_id == participant)
    }

    /// Every node at any depth together with its owning pool.
    pub fn nodes(&self) -> Vec<(&Pool, &FlowNode)> {
        fn walk<'a>(pool: &'a Pool, nodes: &'a [FlowNode], out: &mut Vec<(&'a Pool, &'a FlowNode)>) {
            for n in nodes {
                out.push((pool, n));
                if let Some(sp) = n.sub_process() {
                    walk(pool, &sp.nodes, out);
                }
            }
        }
        let mut out = Vec::new();
        for pool in &self.pools {
            walk(pool, &pool.nodes, &mut out);
        }
        out
    }

    pub fn node(&self, id: &NodeId) -> Option<&FlowNode> {
        self.nodes().into_iter().find(|(_, n)| &n.id == id).map(|(_, n)| n)
    }

    pub fn pool_of_node(&self, id: &NodeId) -> Option<&Pool> {
        self.nodes().into_iter().find(|(_, n)| &n.id == id).map(|(p, _)| p)
    }

    /// All sequence flows at any depth.
    pub fn sequence_flows(&self) -> Vec<&SequenceFlow> {
        fn walk<'a>(scope: Scope<'a>, out: &mut Vec<&'a SequenceFlow>) {
            out.extend(scope.flows.iter());
            for (_, child) in scope.children() {
                walk(child, out);
            }
        }
        let mut out = Vec::new();
        for pool in &self.pools {
            walk(pool.scope(), &mut out);
        }
        out
    }

    /// Ids of every pool, node and flow.
    pub fn element_ids(&self) -> HashSet<String> {
        let mut ids: HashSet<String> = HashSet::new();
        ids.extend(self.pools.iter().map(|p| p.id.0.clone()));
        ids.extend(self.nodes().into_iter().map(|(_, n)| n.id.0.clone()));
        ids.extend(self.sequence_flows().into_iter().map(|f| f.id.0.clone()));
        ids.extend(self.message_flows.iter().map(|f| f.id.0.clone()));
        ids
    }

    /// Tasks and sub-processes at the top level of every pool.
    pub fn top_level_activity_count(&self) -> usize {
        self.pools
            .iter()
            .map(|p| p.nodes.iter().filter(|n| n.is_activity()).count())
            .sum()
    }
}

/// Sequential `p<k>` / `n<k>` / `f<k>` id source.
#[derive(Debug, Clone, Default)]
pub(crate) struct IdAllocator {
    pools: u64,
    nodes: u64,
    flows: u64,
}

impl IdAllocator {
    /// Continues numbering after the highest ids already used in `model`.
    pub fn after(model: &BpmnModel) -> Self {
        let max = |ids: Vec<&str>, prefix: &str| {
            ids.into_iter()
                .filter_map(|id| crate::ids::numeric_suffix(id, prefix))
                .max()
                .unwrap_or(0)
        };
        IdAllocator {
            pools: max(model.pools.iter().map(|p| p.id.as_str()).collect(), "p"),
            nodes: max(model.nodes().into_iter().map(|(_, n)| n.id.as_str()).collect(), "n"),
            flows: max(
                model
                    .sequence_flows()
                    .into_iter()
                    .map(|f| f.id.as_str())
                    .chain(model.message_flows.iter().map(|f| f.id.as_str()))
                    .collect(),
                "f",
            ),
        }
    }

    pub fn pool(&mut self) -> PoolId {
        self.pools += 1;
        PoolId(format!("p{}", self.pools))
    }

    pub fn node(&mut self) -> NodeId {
        self.nodes += 1;
        NodeId(format!("n{}", self.nodes))
    }

    pub fn flow(&mut self) -> FlowId {
        self.flows += 1;
        FlowId(format!("f{}", self.flows))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    DuplicateId,
    UnknownEndpoint,
    SequenceFlowCrossesScope,
    MessageFlowWithinPool,
    StartEventCount,
    MissingEndEvent,
    DisconnectedScope,
    CyclicScope,
    SendTaskMessageCount,
    ReceiveTaskMessageCount,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::DuplicateId => "duplicate-id",
            Rule::UnknownEndpoint => "unknown-endpoint",
            Rule::SequenceFlowCrossesScope => "sequence-flow-crosses-scope",
            Rule::MessageFlowWithinPool => "message-flow-within-pool",
            Rule::StartEventCount => "start-event-count",
            Rule::MissingEndEvent => "missing-end-event",
            Rule::DisconnectedScope => "disconnected-scope",
            Rule::CyclicScope => "cyclic-scope",
            Rule::SendTaskMessageCount => "send-task-message-count",
            Rule::ReceiveTaskMessageCount => "receive-task-message-count",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub rule: Rule,
    pub elements: Vec<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} ({})", self.rule, self.message, self.elements.join(", "))
    }
}

fn violation(rule: Rule, elements: Vec<String>, message: impl Into<String>) -> Violation {
    Violation {
        rule,
        elements,
        message: message.into(),
    }
}

/// Checks every structural rule of the collaboration model. An empty result
/// means the model is well formed.
pub fn validate_model(model: &BpmnModel) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    for pool in &model.pools {
        order.push(pool.id.as_str());
    }
    for (_, n) in model.nodes() {
        order.push(n.id.as_str());
    }
    for f in model.sequence_flows() {
        order.push(f.id.as_str());
    }
    for f in &model.message_flows {
        order.push(f.id.as_str());
    }
    for id in &order {
        *seen.entry(id).or_default() += 1;
    }
    let mut reported = HashSet::new();
    for id in &order {
        if seen[id] > 1 && reported.insert(*id) {
            out.push(violation(
                Rule::DuplicateId,
                vec![id.to_string()],
                format!("id `{id}` is used by {} elements", seen[id]),
            ));
        }
    }

    let all_nodes: HashSet<&str> = model.nodes().into_iter().map(|(_, n)| n.id.as_str()).collect();

    for pool in &model.pools {
        let activities = pool.nodes.iter().filter(|n| n.is_activity()).count();
        if activities > 0 {
            let starts: Vec<String> = pool
                .nodes
                .iter()
                .filter(|n| n.kind == NodeKind::StartEvent)
                .map(|n| n.id.0.clone())
                .collect();
            if starts.len() != 1 {
                let mut elements = vec![pool.id.0.clone()];
                elements.extend(starts.iter().cloned());
                out.push(violation(
                    Rule::StartEventCount,
                    elements,
                    format!(
                        "pool `{}` has {} start events, expected exactly 1",
                        pool.id,
                        starts.len()
                    ),
                ));
            }
            if !pool.nodes.iter().any(|n| n.kind == NodeKind::EndEvent) {
                out.push(violation(
                    Rule::MissingEndEvent,
                    vec![pool.id.0.clone()],
                    format!("pool `{}` has no end event", pool.id),
                ));
            }
        }
        check_scope(pool.id.as_str(), pool.scope(), &all_nodes, &mut out);
    }

    let mut sends: HashMap<&str, usize> = HashMap::new();
    let mut receives: HashMap<&str, usize> = HashMap::new();
    for mf in &model.message_flows {
        *sends.entry(mf.source.as_str()).or_default() += 1;
        *receives.entry(mf.target.as_str()).or_default() += 1;
        let src = model.pool_of_node(&mf.source);
        let tgt = model.pool_of_node(&mf.target);
        match (src, tgt) {
            (Some(a), Some(b)) if a.id == b.id => out.push(violation(
                Rule::MessageFlowWithinPool,
                vec![mf.id.0.clone()],
                format!("message flow `{}` connects two nodes of pool `{}`", mf.id, a.id),
            )),
            (Some(_), Some(_)) => {}
            _ => out.push(violation(
                Rule::UnknownEndpoint,
                vec![mf.id.0.clone()],
                format!("message flow `{}` references a missing node", mf.id),
            )),
        }
    }

    for (_, node) in model.nodes() {
        match node.task_kind() {
            Some(TaskKind::Send) => {
                let n = sends.get(node.id.as_str()).copied().unwrap_or(0);
                if n != 1 {
                    out.push(violation(
                        Rule::SendTaskMessageCount,
                        vec![node.id.0.clone()],
                        format!("send task `{}` is the source of {n} message flows, expected 1", node.id),
                    ));
                }
            }
            Some(TaskKind::Receive) => {
                let n = receives.get(node.id.as_str()).copied().unwrap_or(0);
                if n != 1 {
                    out.push(violation(
                        Rule::ReceiveTaskMessageCount,
                        vec![node.id.0.clone()],
                        format!(
                            "receive task `{}` is the target of {n} message flows, expected 1",
                            node.id
                        ),
                    ));
                }
            }
            _ => {}
        }
    }

    out
}

fn check_scope(owner: &str, scope: Scope<'_>, all_nodes: &HashSet<&str>, out: &mut Vec<Violation>) {
    let local: Vec<&str> = scope.nodes.iter().map(|n| n.id.as_str()).collect();
    let local_set: HashSet<&str> = local.iter().copied().collect();
    let mut edges: Vec<(&str, &str)> = Vec::new();
    for f in scope.flows {
        let (s, t) = (f.source.as_str(), f.target.as_str());
        if local_set.contains(s) && local_set.contains(t) {
            edges.push((s, t));
        } else if all_nodes.contains(s) && all_nodes.contains(t) {
            out.push(violation(
                Rule::SequenceFlowCrossesScope,
                vec![f.id.0.clone()],
                format!("sequence flow `{}` leaves the scope of `{owner}`", f.id),
            ));
        } else {
            out.push(violation(
                Rule::UnknownEndpoint,
                vec![f.id.0.clone()],
                format!("sequence flow `{}` references a missing node", f.id),
            ));
        }
    }

    if local.len() > 1 {
        // weak connectivity via union-find
        let index: HashMap<&str, usize> = local.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut parent: Vec<usize> = (0..local.len()).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut c = x;
            while parent[c] != r {
                let next = parent[c];
                parent[c] = r;
                c = next;
            }
            r
        }
        for (s, t) in &edges {
            let (a, b) = (find(&mut parent, index[s]), find(&mut parent, index[t]));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        let stray: Vec<String> = (0..local.len())
            .filter(|&i| find(&mut parent, i) != root)
            .map(|i| local[i].to_string())
            .collect();
        if !stray.is_empty() {
            let mut elements = vec![owner.to_string()];
            elements.extend(stray);
            out.push(violation(
                Rule::DisconnectedScope,
                elements,
                format!("sequence flows inside `{owner}` do not connect all nodes"),
            ));
        }

        let mut indegree: HashMap<&str, usize> = local.iter().map(|id| (*id, 0)).collect();
        for (_, t) in &edges {
            *indegree.get_mut(t).unwrap() += 1;
        }
        let mut ready: Vec<&str> = local.iter().copied().filter(|id| indegree[id] == 0).collect();
        let mut visited = 0;
        while let Some(n) = ready.pop() {
            visited += 1;
            for (s, t) in &edges {
                if *s == n {
                    let d = indegree.get_mut(t).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        ready.push(t);
                    }
                }
            }
        }
        if visited < local.len() {
            let mut elements = vec![owner.to_string()];
            elements.extend(local.iter().filter(|id| indegree[*id] > 0).map(|id| id.to_string()));
            out.push(violation(
                Rule::CyclicScope,
                elements,
                format!("sequence flows inside `{owner}` form a cycle"),
            ));
        }
    }

    for (node, child) in scope.children() {
        check_scope(node.id.as_str(), child, all_nodes, out);
    }
}
