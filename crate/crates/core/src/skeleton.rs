//! Choreography skeleton: every interaction statement becomes a Send task in
//! the sender's pool, a Receive task plus a collapsed Process sub-process in
//! the receiver's pool, and one message flow between them.

use std::collections::HashMap;

use thiserror::Error;

use crate::classify::{validate_classification, ClassificationIssue};
use crate::document::{RequirementsDocument, Statement, StatementClass};
use crate::ids::{NodeId, ParticipantId};
use crate::model::{
    BpmnModel, FlowNode, IdAllocator, MessageFlow, NodeKind, Pool, SequenceFlow, SubProcess, TaskKind, TraceLink,
};

#[derive(Debug, Error)]
pub enum SkeletonError {
    #[error("document is not ready for generation ({} classification issue(s))", .0.len())]
    NotReady(Vec<ClassificationIssue>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub model: BpmnModel,
    pub links: Vec<TraceLink>,
}

/// Payload label: data object names joined with `", "` in markup order.
pub fn payload_label(doc: &RequirementsDocument, stmt: &Statement) -> String {
    stmt.payload()
        .iter()
        .map(|d| doc.data_name(d))
        .collect::<Vec<_>>()
        .join(", ")
}

struct PoolBuild {
    participant: ParticipantId,
    start: NodeId,
    nodes: Vec<FlowNode>,
}

pub fn generate_skeleton(doc: &RequirementsDocument) -> Result<Skeleton, SkeletonError> {
    let issues = validate_classification(doc);
    if !issues.is_empty() {
        return Err(SkeletonError::NotReady(issues));
    }

    let interactions: Vec<&Statement> = doc
        .statements
        .iter()
        .filter(|s| s.class == StatementClass::Interaction)
        .collect();

    let mut ids = IdAllocator::default();
    let mut order: Vec<ParticipantId> = Vec::new();
    for s in &interactions {
        for p in [s.sender.as_ref(), s.receiver.as_ref()].into_iter().flatten() {
            if !order.contains(p) {
                order.push(p.clone());
            }
        }
    }

    let mut pool_ids = Vec::new();
    let mut builds: Vec<PoolBuild> = Vec::new();
    for p in &order {
        pool_ids.push(ids.pool());
        builds.push(PoolBuild {
            participant: p.clone(),
            start: ids.node(),
            nodes: Vec::new(),
        });
    }
    let index: HashMap<ParticipantId, usize> = order.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();

    let mut process_names: HashMap<(usize, String), usize> = HashMap::new();
    let mut message_flows = Vec::new();
    // statement -> (send, receive, process, message flow)
    let mut triples = Vec::new();

    for s in &interactions {
        let (Some(sender), Some(receiver)) = (&s.sender, &s.receiver) else {
            unreachable!("validated interaction has both endpoints")
        };
        let label = payload_label(doc, s);
        let (si, ri) = (index[sender], index[receiver]);

        let send = FlowNode::new(
            ids.node(),
            NodeKind::Task {
                name: format!("Send {label}"),
                kind: TaskKind::Send,
            },
        );
        let receive = FlowNode::new(
            ids.node(),
            NodeKind::Task {
                name: format!("Receive {label}"),
                kind: TaskKind::Receive,
            },
        );
        let seen = process_names.entry((ri, label.clone())).or_insert(0);
        *seen += 1;
        let process_name = if *seen == 1 {
            format!("Process {label}")
        } else {
            format!("Process {label} ({seen})")
        };
        let process = FlowNode::new(ids.node(), NodeKind::SubProcess(SubProcess::collapsed(process_name)));
        let flow = MessageFlow {
            id: ids.flow(),
            source: send.id.clone(),
            target: receive.id.clone(),
            payload: s.payload().to_vec(),
            label,
        };
        triples.push((
            s.id.clone(),
            send.id.clone(),
            receive.id.clone(),
            process.id.clone(),
            flow.id.clone(),
        ));
        message_flows.push(flow);
        builds[si].nodes.push(send);
        builds[ri].nodes.push(receive);
        builds[ri].nodes.push(process);
    }

    let mut pools = Vec::new();
    let mut chain_flow: HashMap<(NodeId, NodeId), crate::ids::FlowId> = HashMap::new();
    for (build, pool_id) in builds.into_iter().zip(pool_ids) {
        let end = ids.node();
        let mut chain: Vec<NodeId> = vec![build.start.clone()];
        chain.extend(build.nodes.iter().map(|n| n.id.clone()));
        chain.push(end.clone());
        let mut sequence_flows = Vec::new();
        for w in chain.windows(2) {
            let f = SequenceFlow {
                id: ids.flow(),
                source: w[0].clone(),
                target: w[1].clone(),
            };
            chain_flow.insert((w[0].clone(), w[1].clone()), f.id.clone());
            sequence_flows.push(f);
        }
        let mut nodes = vec![FlowNode::new(build.start, NodeKind::StartEvent)];
        nodes.extend(build.nodes);
        nodes.push(FlowNode::new(end, NodeKind::EndEvent));
        pools.push(Pool {
            id: pool_id,
            name: doc.participant_name(&build.participant).to_string(),
            participant_id: build.participant,
            nodes,
            sequence_flows,
        });
    }

    let links = triples
        .into_iter()
        .map(|(sid, send, receive, process, mf)| {
            let rp = chain_flow[&(receive.clone(), process.clone())].clone();
            TraceLink {
                statement_id: sid,
                element_ids: vec![send.0, receive.0, process.0, rp.0, mf.0],
            }
        })
        .collect();

    Ok(Skeleton {
        model: BpmnModel { pools, message_flows },
        links,
    })
}
