//! Top-down expansion of local statements into skeleton sub-processes.
//!
//! Each participant's local statements form a tree of named groups. A group
//! bound to a skeleton sub-process fills that sub-process' body: direct
//! statements become generic tasks, child groups become nested
//! sub-processes, all chained in document order between a nested start and
//! end event. Ungrouped statements extend the pool's top-level chain.
//! Participants that never interact get a pool of their own.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{validate_classification, ClassificationIssue};
use crate::document::{match_key, normalize, GroupNode, RequirementsDocument, Statement, StatementClass};
use crate::ids::{DataObjectId, NodeId, ParticipantId, StatementId};
use crate::model::{BpmnModel, FlowNode, IdAllocator, NodeKind, Pool, SequenceFlow, SubProcess, TaskKind, TraceLink};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GroupBinding {
    pub participant: ParticipantId,
    pub group_path: Vec<String>,
    pub target: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindError {
    #[error("participant `{0}` has no pool in the model")]
    UnknownParticipant(ParticipantId),
    #[error("`{0}` is not a top-level sub-process of any pool")]
    UnknownSubProcess(NodeId),
    #[error("sub-process `{target}` belongs to pool `{actual}`, not to `{participant}`'s pool")]
    WrongPool {
        participant: ParticipantId,
        target: NodeId,
        actual: String,
    },
    #[error("group path is empty")]
    EmptyPath,
}

/// Checks a binding against the model. The target must be a top-level
/// sub-process in the participant's pool.
pub fn bind_group(
    model: &BpmnModel,
    participant: &ParticipantId,
    group_path: &[String],
    target: &NodeId,
) -> Result<GroupBinding, BindError> {
    if group_path.is_empty() {
        return Err(BindError::EmptyPath);
    }
    let pool = model
        .pool_of_participant(participant)
        .ok_or_else(|| BindError::UnknownParticipant(participant.clone()))?;
    let owner = model
        .pools
        .iter()
        .find(|p| p.nodes.iter().any(|n| &n.id == target && n.sub_process().is_some()))
        .ok_or_else(|| BindError::UnknownSubProcess(target.clone()))?;
    if owner.id != pool.id {
        return Err(BindError::WrongPool {
            participant: participant.clone(),
            target: target.clone(),
            actual: owner.id.0.clone(),
        });
    }
    Ok(GroupBinding {
        participant: participant.clone(),
        group_path: group_path.to_vec(),
        target: target.clone(),
    })
}

/// Binding set with last-write-wins semantics per (participant, path).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bindings(Vec<GroupBinding>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(
        &mut self,
        model: &BpmnModel,
        participant: &ParticipantId,
        group_path: &[String],
        target: &NodeId,
    ) -> Result<(), BindError> {
        let binding = bind_group(model, participant, group_path, target)?;
        self.insert(binding);
        Ok(())
    }

    pub fn insert(&mut self, binding: GroupBinding) {
        match self
            .0
            .iter_mut()
            .find(|b| b.participant == binding.participant && b.group_path == binding.group_path)
        {
            Some(existing) => *existing = binding,
            None => self.0.push(binding),
        }
    }

    pub fn get(&self, participant: &ParticipantId, group_path: &[String]) -> Option<&GroupBinding> {
        self.0
            .iter()
            .find(|b| &b.participant == participant && b.group_path == group_path)
    }

    pub fn as_slice(&self) -> &[GroupBinding] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Binds every root group to the top-level sub-process of the same
    /// (case-insensitive) name in its participant's pool.
    pub fn by_name(model: &BpmnModel, doc: &RequirementsDocument) -> Bindings {
        let mut out = Bindings::new();
        for groups in &doc.groups {
            let Some(pool) = model.pool_of_participant(&groups.participant) else {
                continue;
            };
            for root in &groups.roots {
                let key = normalize(&root.name);
                if let Some(node) = pool
                    .nodes
                    .iter()
                    .find(|n| n.sub_process().is_some() && normalize(n.name()) == key)
                {
                    out.insert(GroupBinding {
                        participant: groups.participant.clone(),
                        group_path: vec![root.name.clone()],
                        target: node.id.clone(),
                    });
                }
            }
        }
        out
    }
}

impl From<Vec<GroupBinding>> for Bindings {
    fn from(v: Vec<GroupBinding>) -> Self {
        let mut b = Bindings::new();
        for x in v {
            b.insert(x);
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnresolvedGroup {
    pub participant: ParticipantId,
    pub group_path: Vec<String>,
}

impl fmt::Display for UnresolvedGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.participant, self.group_path.join("/"))
    }
}

#[derive(Debug, Error)]
pub enum ExpandError {
    #[error("document is not ready for generation ({} classification issue(s))", .0.len())]
    NotReady(Vec<ClassificationIssue>),
    #[error("unresolved group(s): {}", .0.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(", "))]
    UnresolvedGroups(Vec<UnresolvedGroup>),
    #[error("invalid binding for `{}`: {source}", .path.join("/"))]
    InvalidBinding { path: Vec<String>, source: BindError },
    #[error("binding for unknown group `{}` of `{participant}`", .path.join("/"))]
    UnknownGroup {
        participant: ParticipantId,
        path: Vec<String>,
    },
    #[error("sub-process `{0}` is the target of more than one binding")]
    ConflictingBindings(NodeId),
    #[error("participant `{participant}` has sibling groups `{name}` that differ only by case")]
    DuplicateSiblingGroup { participant: ParticipantId, name: String },
    #[error("statement `{0}` asks for a store but references no data object")]
    StoreWithoutData(StatementId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    pub model: BpmnModel,
    /// One link per local statement, in document order.
    pub links: Vec<TraceLink>,
}

enum Item<'a> {
    Statement(&'a Statement),
    Group(Vec<String>),
}

struct Expander<'a> {
    doc: &'a RequirementsDocument,
    ids: IdAllocator,
    bound: HashSet<(ParticipantId, Vec<String>)>,
    links: HashMap<StatementId, TraceLink>,
}

pub fn expand(
    model: &BpmnModel,
    doc: &RequirementsDocument,
    bindings: &[GroupBinding],
) -> Result<Expansion, ExpandError> {
    let issues = validate_classification(doc);
    if !issues.is_empty() {
        return Err(ExpandError::NotReady(issues));
    }
    for g in &doc.groups {
        check_siblings(&g.participant, &g.roots)?;
    }

    let mut model = strip_expansion(model, doc);
    let bindings: Bindings = bindings.to_vec().into();

    let mut targets = HashSet::new();
    for b in bindings.as_slice() {
        bind_group(&model, &b.participant, &b.group_path, &b.target).map_err(|source| ExpandError::InvalidBinding {
            path: b.group_path.clone(),
            source,
        })?;
        if !group_exists(doc.groups_of(&b.participant), &b.group_path) {
            return Err(ExpandError::UnknownGroup {
                participant: b.participant.clone(),
                path: b.group_path.clone(),
            });
        }
        if !targets.insert(b.target.clone()) {
            return Err(ExpandError::ConflictingBindings(b.target.clone()));
        }
    }

    let locals: Vec<(usize, &Statement)> = doc
        .statements
        .iter()
        .enumerate()
        .filter(|(_, s)| s.class == StatementClass::Local)
        .collect();

    let mut unresolved = Vec::new();
    for (_, s) in &locals {
        let owner = &s.participants[0];
        if s.group_path.is_empty() || model.pool_of_participant(owner).is_none() {
            continue;
        }
        let resolved = (1..=s.group_path.len()).any(|k| bindings.get(owner, &s.group_path[..k]).is_some());
        if !resolved {
            let g = UnresolvedGroup {
                participant: owner.clone(),
                group_path: vec![s.group_path[0].clone()],
            };
            if !unresolved.contains(&g) {
                unresolved.push(g);
            }
        }
    }
    if !unresolved.is_empty() {
        return Err(ExpandError::UnresolvedGroups(unresolved));
    }

    let mut ex = Expander {
        doc,
        ids: IdAllocator::after(&model),
        bound: bindings
            .as_slice()
            .iter()
            .map(|b| (b.participant.clone(), b.group_path.clone()))
            .collect(),
        links: HashMap::new(),
    };

    for participant in &doc.participants {
        let mine: Vec<&Statement> = locals
            .iter()
            .filter(|(_, s)| s.participants[0] == participant.id)
            .map(|(_, s)| *s)
            .collect();
        if mine.is_empty() {
            continue;
        }
        match model.pools.iter().position(|p| p.participant_id == participant.id) {
            Some(pi) => {
                let ungrouped: Vec<Item> = mine
                    .iter()
                    .filter(|s| s.group_path.is_empty())
                    .map(|s| Item::Statement(s))
                    .collect();
                if !ungrouped.is_empty() {
                    ex.append_top_level(&mut model.pools[pi], &ungrouped)?;
                }
                let mut mine_bound: Vec<&GroupBinding> = bindings
                    .as_slice()
                    .iter()
                    .filter(|b| b.participant == participant.id)
                    .collect();
                mine_bound.sort_by_key(|b| ex.first_index(&participant.id, &b.group_path));
                for b in mine_bound {
                    let items = ex.items(&participant.id, &b.group_path);
                    let (nodes, flows) = ex.build_scope_for(&participant.id, &items)?;
                    let node = model.pools[pi]
                        .nodes
                        .iter_mut()
                        .find(|n| n.id == b.target)
                        .and_then(FlowNode::sub_process_mut)
                        .expect("binding validated against this pool");
                    node.nodes = nodes;
                    node.sequence_flows = flows;
                }
            }
            None => {
                let pool_id = ex.ids.pool();
                let items = ex.items(&participant.id, &[]);
                let (nodes, sequence_flows) = ex.build_scope_for(&participant.id, &items)?;
                model.pools.push(Pool {
                    id: pool_id,
                    participant_id: participant.id.clone(),
                    name: participant.name.clone(),
                    nodes,
                    sequence_flows,
                });
            }
        }
    }

    let mut links = Vec::new();
    for (_, s) in &locals {
        if let Some(l) = ex.links.remove(&s.id) {
            links.push(l);
        }
    }
    debug_assert!(crate::model::validate_model(&model).is_empty());
    Ok(Expansion { model, links })
}

fn check_siblings(participant: &ParticipantId, nodes: &[GroupNode]) -> Result<(), ExpandError> {
    let mut seen = HashSet::new();
    for n in nodes {
        if !seen.insert(normalize(&n.name)) {
            return Err(ExpandError::DuplicateSiblingGroup {
                participant: participant.clone(),
                name: n.name.clone(),
            });
        }
        check_siblings(participant, &n.children)?;
    }
    Ok(())
}

fn group_exists(roots: &[GroupNode], path: &[String]) -> bool {
    let mut level = roots;
    for name in path {
        match level.iter().find(|g| &g.name == name) {
            Some(g) => level = &g.children,
            None => return false,
        }
    }
    !path.is_empty()
}

fn is_expansion_node(n: &FlowNode) -> bool {
    matches!(
        n.kind,
        NodeKind::Task {
            kind: TaskKind::Generic,
            ..
        } | NodeKind::Store { .. }
    )
}

/// Removes the artifacts of an earlier expansion so re-running replaces
/// rather than duplicates: pools of non-interacting participants, generic
/// tasks and stores at pool top level, and all sub-process bodies. Flows
/// that led into removed nodes are pointed back along the chain so the
/// skeleton's own flow ids survive.
fn strip_expansion(model: &BpmnModel, doc: &RequirementsDocument) -> BpmnModel {
    let interacting: HashSet<&ParticipantId> = doc
        .statements
        .iter()
        .filter(|s| s.class == StatementClass::Interaction)
        .flat_map(|s| s.sender.iter().chain(s.receiver.iter()))
        .collect();
    let mut out = model.clone();
    out.pools.retain(|p| interacting.contains(&p.participant_id));
    for pool in &mut out.pools {
        let removed: HashSet<NodeId> = pool
            .nodes
            .iter()
            .filter(|n| is_expansion_node(n))
            .map(|n| n.id.clone())
            .collect();
        if !removed.is_empty() {
            let stores: HashSet<NodeId> = pool
                .nodes
                .iter()
                .filter(|n| matches!(n.kind, NodeKind::Store { .. }))
                .map(|n| n.id.clone())
                .collect();
            let next_of = |id: &NodeId| -> Option<NodeId> {
                pool.sequence_flows
                    .iter()
                    .find(|f| &f.source == id && !stores.contains(&f.target))
                    .map(|f| f.target.clone())
            };
            let resolve = |mut id: NodeId| -> NodeId {
                let mut guard = 0;
                while removed.contains(&id) && guard <= removed.len() {
                    match next_of(&id) {
                        Some(n) => id = n,
                        None => break,
                    }
                    guard += 1;
                }
                id
            };
            let flows: Vec<SequenceFlow> = pool
                .sequence_flows
                .iter()
                .filter(|f| !removed.contains(&f.source))
                .map(|f| SequenceFlow {
                    id: f.id.clone(),
                    source: f.source.clone(),
                    target: resolve(f.target.clone()),
                })
                .collect();
            pool.sequence_flows = flows;
            pool.nodes.retain(|n| !removed.contains(&n.id));
        }
        for n in &mut pool.nodes {
            if let Some(sp) = n.sub_process_mut() {
                sp.nodes.clear();
                sp.sequence_flows.clear();
            }
        }
    }
    out
}

impl<'a> Expander<'a> {
    fn statements_under(
        &self,
        participant: &ParticipantId,
        path: &[String],
    ) -> impl Iterator<Item = (usize, &'a Statement)> + '_ {
        let path = path.to_vec();
        let participant = participant.clone();
        self.doc.statements.iter().enumerate().filter(move |(_, s)| {
            s.class == StatementClass::Local
                && s.participants.first() == Some(&participant)
                && s.group_path.starts_with(&path)
        })
    }

    fn first_index(&self, participant: &ParticipantId, path: &[String]) -> usize {
        self.statements_under(participant, path)
            .map(|(i, _)| i)
            .next()
            .unwrap_or(usize::MAX)
    }

    /// Direct statements and unbound child groups of `path`, ordered by the
    /// document position of their first statement.
    fn items(&self, participant: &ParticipantId, path: &[String]) -> Vec<Item<'a>> {
        let mut keyed: Vec<(usize, Item<'a>)> = Vec::new();
        let mut children: BTreeSet<String> = BTreeSet::new();
        for (i, s) in self.statements_under(participant, path) {
            if s.group_path.len() == path.len() {
                keyed.push((i, Item::Statement(s)));
            } else {
                let child = s.group_path[path.len()].clone();
                let mut child_path = path.to_vec();
                child_path.push(child.clone());
                if self.bound.contains(&(participant.clone(), child_path.clone())) {
                    continue;
                }
                if children.insert(child) {
                    keyed.push((i, Item::Group(child_path)));
                }
            }
        }
        keyed.sort_by_key(|(i, _)| *i);
        keyed.into_iter().map(|(_, item)| item).collect()
    }

    /// Nodes for one item: the node placed in the chain plus any side nodes
    /// (a store) with their flows.
    fn item_nodes(
        &mut self,
        item: &Item<'a>,
        participant: Option<&ParticipantId>,
    ) -> Result<(FlowNode, Vec<FlowNode>, Vec<SequenceFlow>), ExpandError> {
        match item {
            Item::Statement(s) => {
                let name = s
                    .attributes
                    .get("label")
                    .map(|l| l.trim().to_string())
                    .filter(|l| !l.is_empty())
                    .unwrap_or_else(|| task_label(s));
                let mut task = FlowNode::new(
                    self.ids.node(),
                    NodeKind::Task {
                        name,
                        kind: TaskKind::Generic,
                    },
                );
                task.attributes = s
                    .attributes
                    .iter()
                    .filter(|(k, _)| k.as_str() != "label" && k.as_str() != "store")
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                let mut element_ids = vec![task.id.0.clone()];
                let mut side = Vec::new();
                let mut flows = Vec::new();
                if let Some(store) = s.attributes.get("store") {
                    let (name, data) = self.store_target(s, store)?;
                    let store_node = FlowNode::new(
                        self.ids.node(),
                        NodeKind::Store {
                            name,
                            data_object_id: data,
                        },
                    );
                    let flow = SequenceFlow {
                        id: self.ids.flow(),
                        source: task.id.clone(),
                        target: store_node.id.clone(),
                    };
                    element_ids.push(store_node.id.0.clone());
                    element_ids.push(flow.id.0.clone());
                    side.push(store_node);
                    flows.push(flow);
                }
                self.links.insert(
                    s.id.clone(),
                    TraceLink {
                        statement_id: s.id.clone(),
                        element_ids,
                    },
                );
                Ok((task, side, flows))
            }
            Item::Group(path) => {
                let participant = participant.expect("groups are built inside a participant").clone();
                let id = self.ids.node();
                let items = self.items(&participant, path);
                let (nodes, sequence_flows) = self.build_scope_for(&participant, &items)?;
                let sp = FlowNode::new(
                    id,
                    NodeKind::SubProcess(SubProcess {
                        name: path.last().cloned().unwrap_or_default(),
                        nodes,
                        sequence_flows,
                    }),
                );
                Ok((sp, Vec::new(), Vec::new()))
            }
        }
    }

    fn store_target(&self, s: &Statement, value: &str) -> Result<(String, DataObjectId), ExpandError> {
        let first = s
            .data_refs
            .first()
            .cloned()
            .ok_or_else(|| ExpandError::StoreWithoutData(s.id.clone()))?;
        let v = value.trim();
        if v.eq_ignore_ascii_case("true") || v.eq_ignore_ascii_case("yes") || v.is_empty() {
            return Ok((self.doc.data_name(&first).to_string(), first));
        }
        let key = match_key(v, &self.doc.dictionary);
        if let Some(d) = s
            .data_refs
            .iter()
            .find(|d| match_key(self.doc.data_name(d), &self.doc.dictionary) == key)
        {
            return Ok((self.doc.data_name(d).to_string(), d.clone()));
        }
        Ok((v.to_string(), first))
    }

    fn build_scope_for(
        &mut self,
        participant: &ParticipantId,
        items: &[Item<'a>],
    ) -> Result<(Vec<FlowNode>, Vec<SequenceFlow>), ExpandError> {
        let start = FlowNode::new(self.ids.node(), NodeKind::StartEvent);
        let mut chain = vec![start.id.clone()];
        let mut nodes = vec![start];
        let mut flows = Vec::new();
        let mut side_nodes = Vec::new();
        for item in items {
            let (node, side, side_flows) = self.item_nodes(item, Some(participant))?;
            chain.push(node.id.clone());
            nodes.push(node);
            side_nodes.extend(side);
            flows.extend(side_flows);
        }
        let end = FlowNode::new(self.ids.node(), NodeKind::EndEvent);
        chain.push(end.id.clone());
        nodes.extend(side_nodes);
        nodes.push(end);
        let mut chain_flows: Vec<SequenceFlow> = chain
            .windows(2)
            .map(|w| SequenceFlow {
                id: self.ids.flow(),
                source: w[0].clone(),
                target: w[1].clone(),
            })
            .collect();
        chain_flows.extend(flows);
        Ok((nodes, chain_flows))
    }

    /// Inserts tasks between the pool's last activity and its end event,
    /// reusing the existing flow into the end event for the first hop.
    fn append_top_level(&mut self, pool: &mut Pool, items: &[Item<'a>]) -> Result<(), ExpandError> {
        let participant = pool.participant_id.clone();
        let end = pool
            .nodes
            .iter()
            .find(|n| n.kind == NodeKind::EndEvent)
            .map(|n| n.id.clone());
        let end = match end {
            Some(e) => e,
            None => {
                let e = FlowNode::new(self.ids.node(), NodeKind::EndEvent);
                let id = e.id.clone();
                pool.nodes.push(e);
                id
            }
        };
        let mut new_nodes = Vec::new();
        let mut new_flows = Vec::new();
        let mut chain = Vec::new();
        for item in items {
            let (node, side, side_flows) = self.item_nodes(item, Some(&participant))?;
            chain.push(node.id.clone());
            new_nodes.push(node);
            new_nodes.extend(side);
            new_flows.extend(side_flows);
        }
        let Some(first) = chain.first().cloned() else {
            return Ok(());
        };
        match pool.sequence_flows.iter_mut().find(|f| f.target == end) {
            Some(f) => f.target = first,
            None => {
                let start = pool
                    .nodes
                    .iter()
                    .find(|n| n.kind == NodeKind::StartEvent)
                    .map(|n| n.id.clone());
                if let Some(start) = start {
                    pool.sequence_flows.push(SequenceFlow {
                        id: self.ids.flow(),
                        source: start,
                        target: first,
                    });
                }
            }
        }
        chain.push(end.clone());
        for w in chain.windows(2) {
            pool.sequence_flows.push(SequenceFlow {
                id: self.ids.flow(),
                source: w[0].clone(),
                target: w[1].clone(),
            });
        }
        pool.sequence_flows.extend(new_flows);
        let end_pos = pool.nodes.iter().position(|n| n.id == end).unwrap_or(pool.nodes.len());
        for (k, n) in new_nodes.into_iter().enumerate() {
            pool.nodes.insert(end_pos + k, n);
        }
        Ok(())
    }
}

/// Task name derived from the statement text: tags unwrapped, whitespace
/// collapsed, trailing punctuation removed.
pub fn task_label(s: &Statement) -> String {
    let text = s.plain_text();
    text.trim_end_matches(['.', ',', ';', ':']).trim().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::parse_document;
    use crate::model::validate_model;
    use crate::skeleton::generate_skeleton;

    const CIO_LOCAL: &str = "\
@statement id=s1 class=L store=\"archive\" label=\"store a copy of the report\"
The {{p:CIO}} shall store a copy of the [[d:report]] into the archive, and
@end
@statement id=s2a class=L participant=CIO group=\"Prepare IT plan\"
first, collect information on all the systems currently used in the company,
@end
@statement id=s2b class=L participant=CIO group=\"Prepare IT plan\"
then evaluate their life cycle state (trailing, leading or bleeding edge).
@end
";

    fn path(s: &str) -> Vec<String> {
        s.split('/').map(str::to_string).collect()
    }

    #[test]
    fn local_only_participant_gets_its_own_pool() {
        let doc = parse_document(CIO_LOCAL).document;
        let sk = generate_skeleton(&doc).unwrap();
        let ex = expand(&sk.model, &doc, &[]).unwrap();
        assert!(validate_model(&ex.model).is_empty(), "{:?}", validate_model(&ex.model));
        assert_eq!(ex.model.pools.len(), 1);
        let pool = &ex.model.pools[0];
        assert_eq!(pool.name, "CIO");
        let kinds: Vec<&str> = pool.nodes.iter().map(|n| n.name()).collect();
        assert_eq!(
            kinds,
            vec!["", "store a copy of the report", "Prepare IT plan", "archive", ""]
        );
        let store = pool
            .nodes
            .iter()
            .find(|n| matches!(n.kind, NodeKind::Store { .. }))
            .unwrap();
        assert_eq!(
            store.kind,
            NodeKind::Store {
                name: "archive".into(),
                data_object_id: DataObjectId::new("report")
            }
        );
        let plan = pool.nodes[2].sub_process().unwrap();
        let inner: Vec<&str> = plan
            .nodes
            .iter()
            .filter(|n| n.is_activity())
            .map(|n| n.name())
            .collect();
        assert_eq!(
            inner,
            vec![
                "first, collect information on all the systems currently used in the company",
                "then evaluate their life cycle state (trailing, leading or bleeding edge)"
            ]
        );
        assert_eq!(ex.links.len(), 3);
        assert_eq!(ex.links[0].element_ids.len(), 3);
    }

    #[test]
    fn zero_local_statements_leave_model_unchanged() {
        let doc = parse_document("@statement id=s class=I sender=A receiver=B data=x\n{{p:A}} {{p:B}} [[d:x]]\n@end\n")
            .document;
        let sk = generate_skeleton(&doc).unwrap();
        let ex = expand(&sk.model, &doc, &[]).unwrap();
        assert_eq!(ex.model, sk.model);
        assert!(ex.links.is_empty());
    }

    const REPORT_AND_PLAN: &str = "\
@statement id=s0 class=I sender=\"external consultant\" receiver=CIO data=report
The [[d:report]] shall be transmitted by the {{p:external consultant}} to the {{p:CIO}}.
@end
@statement id=s1 class=L store=archive group=\"Process report\"
The {{p:CIO}} shall store a copy of the [[d:report]] into the archive
@end
@statement id=s2a class=L participant=CIO group=\"Process report/Prepare IT plan\"
collect information
@end
@statement id=s2b class=L participant=CIO group=\"Process report/Prepare IT plan\"
evaluate life cycle state
@end
@statement id=s3 class=L participant=CIO
file the plan
@end
";

    #[test]
    fn bound_group_fills_skeleton_sub_process() {
        let doc = parse_document(REPORT_AND_PLAN).document;
        let sk = generate_skeleton(&doc).unwrap();
        let target = sk.model.pools[1].nodes[2].id.clone();
        let mut b = Bindings::new();
        b.bind(&sk.model, &ParticipantId::new("cio"), &path("Process report"), &target)
            .unwrap();
        let ex = expand(&sk.model, &doc, b.as_slice()).unwrap();
        assert!(validate_model(&ex.model).is_empty(), "{:?}", validate_model(&ex.model));
        let cio = &ex.model.pools[1];
        let top: Vec<&str> = cio.nodes.iter().map(|n| n.name()).collect();
        assert_eq!(top, vec!["", "Receive report", "Process report", "file the plan", ""]);
        let body = cio.nodes[2].sub_process().unwrap();
        let inner: Vec<&str> = body.nodes.iter().map(|n| n.name()).collect();
        assert_eq!(
            inner,
            vec![
                "",
                "The CIO shall store a copy of the report into the archive",
                "Prepare IT plan",
                "archive",
                ""
            ]
        );
        let nested = body.nodes[2].sub_process().unwrap();
        assert_eq!(nested.nodes.iter().filter(|n| n.is_activity()).count(), 2);

        // skeleton send/receive and message flows untouched
        for (orig, now) in sk.model.pools.iter().zip(&ex.model.pools) {
            for n in orig.nodes.iter().filter(|n| n.task_kind().is_some()) {
                assert!(now.nodes.contains(n));
            }
        }
        assert_eq!(sk.model.message_flows, ex.model.message_flows);
    }

    #[test]
    fn expansion_is_idempotent() {
        let doc = parse_document(REPORT_AND_PLAN).document;
        let sk = generate_skeleton(&doc).unwrap();
        let b = Bindings::by_name(&sk.model, &doc);
        assert_eq!(b.len(), 1);
        let once = expand(&sk.model, &doc, b.as_slice()).unwrap();
        let twice = expand(&once.model, &doc, b.as_slice()).unwrap();
        assert_eq!(once, twice);
        let local = parse_document(CIO_LOCAL).document;
        let m = expand(&BpmnModel::default(), &local, &[]).unwrap();
        assert_eq!(expand(&m.model, &local, &[]).unwrap(), m);
    }

    #[test]
    fn unbound_group_in_skeleton_pool_is_an_error() {
        let doc = parse_document(REPORT_AND_PLAN).document;
        let sk = generate_skeleton(&doc).unwrap();
        match expand(&sk.model, &doc, &[]) {
            Err(ExpandError::UnresolvedGroups(g)) => {
                assert_eq!(g.len(), 1);
                assert_eq!(g[0].group_path, path("Process report"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bind_errors() {
        let doc = parse_document(REPORT_AND_PLAN).document;
        let sk = generate_skeleton(&doc).unwrap();
        let cio = ParticipantId::new("cio");
        let send = sk.model.pools[0].nodes[1].id.clone();
        assert!(matches!(
            bind_group(&sk.model, &cio, &path("Process report"), &send),
            Err(BindError::UnknownSubProcess(_))
        ));
        assert!(matches!(
            bind_group(&sk.model, &ParticipantId::new("nobody"), &path("x"), &send),
            Err(BindError::UnknownParticipant(_))
        ));
        // a sub-process living in another participant's pool
        let mut m = sk.model.clone();
        let sp = FlowNode::new(
            NodeId::new("n99"),
            NodeKind::SubProcess(SubProcess::collapsed("elsewhere")),
        );
        m.pools[0].nodes.insert(2, sp);
        assert!(matches!(
            bind_group(&m, &cio, &path("Process report"), &NodeId::new("n99")),
            Err(BindError::WrongPool { .. })
        ));
    }

    #[test]
    fn rebinding_replaces() {
        let doc = parse_document(REPORT_AND_PLAN).document;
        let mut sk = generate_skeleton(&doc).unwrap();
        sk.model.pools[1].nodes.insert(
            3,
            FlowNode::new(NodeId::new("n50"), NodeKind::SubProcess(SubProcess::collapsed("Other"))),
        );
        let cio = ParticipantId::new("cio");
        let first = sk.model.pools[1].nodes[2].id.clone();
        let mut b = Bindings::new();
        b.bind(&sk.model, &cio, &path("Process report"), &first).unwrap();
        b.bind(&sk.model, &cio, &path("Process report"), &NodeId::new("n50"))
            .unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.as_slice()[0].target, "n50");
    }

    #[test]
    fn bound_group_holding_only_a_child_group() {
        let doc = parse_document(
            "@statement id=i class=I sender=A receiver=B data=x\n{{p:A}} {{p:B}} [[d:x]]\n@end\n\
             @statement id=l class=L group=\"Outer/Inner\"\n{{p:B}} works\n@end\n",
        )
        .document;
        let sk = generate_skeleton(&doc).unwrap();
        let target = sk.model.pools[1].nodes[2].id.clone();
        let b = GroupBinding {
            participant: ParticipantId::new("b"),
            group_path: path("Outer"),
            target: target.clone(),
        };
        let ex = expand(&sk.model, &doc, &[b]).unwrap();
        let outer = ex.model.node(&target).unwrap().sub_process().unwrap();
        let inner = outer.nodes[1].sub_process().unwrap();
        assert_eq!(inner.name, "Inner");
        assert_eq!(inner.nodes[1].name(), "B works");
        assert!(validate_model(&ex.model).is_empty());
    }

    #[test]
    fn store_needs_data() {
        let doc = parse_document("@statement id=s class=L store=true\n{{p:CIO}} archives\n@end\n").document;
        assert!(matches!(
            expand(&BpmnModel::default(), &doc, &[]),
            Err(ExpandError::StoreWithoutData(_))
        ));
    }

    #[test]
    fn unknown_group_binding() {
        let doc = parse_document(REPORT_AND_PLAN).document;
        let sk = generate_skeleton(&doc).unwrap();
        let target = sk.model.pools[1].nodes[2].id.clone();
        let b = GroupBinding {
            participant: ParticipantId::new("cio"),
            group_path: path("Nope"),
            target,
        };
        assert!(matches!(
            expand(&sk.model, &doc, &[b]),
            Err(ExpandError::UnknownGroup { .. })
        ));
    }
}
