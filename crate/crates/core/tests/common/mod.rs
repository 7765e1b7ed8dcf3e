#![allow(dead_code)]

use std::path::PathBuf;

use chorda_core::*;
use proptest::prelude::*;

pub fn corpus(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn parse_clean(text: &str) -> RequirementsDocument {
    let out = parse_document(text);
    assert!(!out.has_errors(), "{:?}", out.diagnostics);
    out.document
}

const PARTICIPANTS: [&str; 6] = [
    "applicant",
    "receiving Office",
    "Bureau",
    "search authority",
    "CIO",
    "external consultant",
];
const DATA: [&str; 6] = ["report", "search copy", "record copy", "invoice", "plan", "translation"];
const GROUPS: [&str; 4] = ["Intake", "Review", "Archive work", "Plan"];

#[derive(Debug, Clone)]
pub enum GenStatement {
    Interaction {
        sender: usize,
        receiver: usize,
        payload: Vec<usize>,
    },
    Local {
        participant: usize,
        group: Vec<usize>,
        data: Option<usize>,
        store: bool,
    },
    Data {
        refs: Vec<usize>,
    },
}

fn statement() -> impl Strategy<Value = GenStatement> {
    let n = PARTICIPANTS.len();
    let d = DATA.len();
    prop_oneof![
        4 => (0..n, 1..n, prop::collection::btree_set(0..d, 1..=3)).prop_map(move |(s, off, p)| {
            GenStatement::Interaction { sender: s, receiver: (s + off) % n, payload: p.into_iter().collect() }
        }),
        3 => (0..n, prop::collection::vec(0..GROUPS.len(), 0..=3), prop::option::of(0..d), any::<bool>())
            .prop_map(|(participant, group, data, store)| GenStatement::Local {
                participant,
                group,
                store: store && data.is_some(),
                data,
            }),
        1 => prop::collection::btree_set(0..d, 1..=2).prop_map(|r| GenStatement::Data { refs: r.into_iter().collect() }),
    ]
}

fn q(s: &str) -> String {
    format!("\"{s}\"")
}

pub fn render(stmts: &[GenStatement]) -> String {
    let mut out = String::from("@chorda 1\n");
    for s in stmts {
        out.push('\n');
        match s {
            GenStatement::Interaction {
                sender,
                receiver,
                payload,
            } => {
                let names: Vec<&str> = payload.iter().map(|&i| DATA[i]).collect();
                out.push_str(&format!(
                    "@statement class=I sender={} receiver={} data={}\n",
                    q(PARTICIPANTS[*sender]),
                    q(PARTICIPANTS[*receiver]),
                    q(&names.join("; "))
                ));
                let tags: Vec<String> = names.iter().map(|n| format!("[[d:{n}]]")).collect();
                out.push_str(&format!(
                    "The {{{{p:{}}}}} sends {} to the {{{{p:{}}}}}.\n@end\n",
                    PARTICIPANTS[*sender],
                    tags.join(" and "),
                    PARTICIPANTS[*receiver]
                ));
            }
            GenStatement::Local {
                participant,
                group,
                data,
                store,
            } => {
                out.push_str("@statement class=L");
                if !group.is_empty() {
                    let path: Vec<&str> = group.iter().map(|&g| GROUPS[g]).collect();
                    out.push_str(&format!(" group={}", q(&path.join("/"))));
                }
                if *store {
                    out.push_str(" store=true");
                }
                out.push('\n');
                out.push_str(&format!("The {{{{p:{}}}}} works", PARTICIPANTS[*participant]));
                if let Some(d) = data {
                    out.push_str(&format!(" on the [[d:{}]]", DATA[*d]));
                }
                out.push_str(".\n@end\n");
            }
            GenStatement::Data { refs } => {
                out.push_str("@statement class=D\n");
                let tags: Vec<String> = refs.iter().map(|&i| format!("[[d:{}]]", DATA[i])).collect();
                out.push_str(&format!("{} are related.\n@end\n", tags.join(" and ")));
            }
        }
    }
    out
}

pub fn statements(max: usize) -> impl Strategy<Value = Vec<GenStatement>> {
    prop::collection::vec(statement(), 0..=max)
}

pub fn interaction_count(stmts: &[GenStatement]) -> usize {
    stmts
        .iter()
        .filter(|s| matches!(s, GenStatement::Interaction { .. }))
        .count()
}

/// Binds each participant's root groups to distinct top-level
/// sub-processes of its pool. Roots that find no free sub-process are
/// removed from the document (their statements become ungrouped).
pub fn bind_all(model: &BpmnModel, doc: &RequirementsDocument) -> (RequirementsDocument, Vec<GroupBinding>) {
    let mut doc = doc.clone();
    let mut bindings = Vec::new();
    let mut drop: Vec<(ParticipantId, String)> = Vec::new();
    for g in &doc.groups {
        let Some(pool) = model.pool_of_participant(&g.participant) else {
            continue;
        };
        let subs: Vec<&FlowNode> = pool.nodes.iter().filter(|n| n.sub_process().is_some()).collect();
        for (i, root) in g.roots.iter().enumerate() {
            match subs.get(i) {
                Some(sp) => bindings.push(GroupBinding {
                    participant: g.participant.clone(),
                    group_path: vec![root.name.clone()],
                    target: sp.id.clone(),
                }),
                None => drop.push((g.participant.clone(), root.name.clone())),
            }
        }
    }
    for s in &mut doc.statements {
        if let (Some(p), Some(root)) = (s.participants.first(), s.group_path.first()) {
            if drop.iter().any(|(dp, dr)| dp == p && dr == root) {
                s.group_path.clear();
            }
        }
    }
    doc.rebuild_groups();
    (doc, bindings)
}

/// Skeleton plus a full expansion of a generated document.
pub fn generate_all(stmts: &[GenStatement]) -> (RequirementsDocument, Skeleton, pipeline::Generated) {
    let doc = parse_clean(&render(stmts));
    let sk = generate_skeleton(&doc).expect("generated documents are ready");
    let (doc, bindings) = bind_all(&sk.model, &doc);
    let full = pipeline::expanded(&doc, pipeline::BindingSource::Explicit(&bindings)).expect("expansion succeeds");
    (doc, sk, full)
}
