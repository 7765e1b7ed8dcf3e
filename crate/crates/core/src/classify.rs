//! D/I/L classification: suggestions from tag counts and structural
//! validation of the analyst's assignments.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::{RequirementsDocument, Statement, StatementClass};
use crate::ids::StatementId;

/// Suggests a class from the number of tagged participants and data objects.
///
/// | participants | data refs | suggestion   |
/// |--------------|-----------|--------------|
/// | 0            | >= 1      | Data         |
/// | 1            | any       | Local        |
/// | 2            | any       | Interaction  |
/// | otherwise    |           | Unclassified |
pub fn suggest_class(stmt: &Statement) -> (StatementClass, String) {
    suggest_from_counts(stmt.participants.len(), stmt.data_refs.len())
}

pub fn suggest_from_counts(participants: usize, data_refs: usize) -> (StatementClass, String) {
    match (participants, data_refs) {
        (0, 0) => (
            StatementClass::Unclassified,
            "no participant or data object is tagged; tag the statement or drop it".to_string(),
        ),
        (0, n) => (
            StatementClass::Data,
            format!("concerns only data ({n} data object(s), no participant)"),
        ),
        (1, _) => (StatementClass::Local, "one single participant".to_string()),
        (2, _) => (
            StatementClass::Interaction,
            "refers to two participants; mark sender, receiver and exchanged data".to_string(),
        ),
        (n, _) => (
            StatementClass::Unclassified,
            format!("{n} participants tagged; split the statement into pairwise interactions"),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    Unclassified,
    MissingPayload,
    MissingSender,
    MissingReceiver,
    SenderIsReceiver,
    EndpointNotTagged,
    LocalParticipantCount,
    DataWithParticipants,
    GroupOnNonLocal,
    UnknownReference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassificationIssue {
    pub statement_id: StatementId,
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for ClassificationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "statement {}: {}", self.statement_id, self.message)
    }
}

/// Issues that block model generation; empty means the document is ready.
pub fn validate_classification(doc: &RequirementsDocument) -> Vec<ClassificationIssue> {
    doc.statements.iter().flat_map(|s| statement_issues(doc, s)).collect()
}

pub fn statement_issues(doc: &RequirementsDocument, stmt: &Statement) -> Vec<ClassificationIssue> {
    let mut out = Vec::new();
    let mut push = |kind: IssueKind, message: String| {
        out.push(ClassificationIssue {
            statement_id: stmt.id.clone(),
            kind,
            message,
        })
    };

    for p in stmt
        .participants
        .iter()
        .chain(stmt.sender.iter())
        .chain(stmt.receiver.iter())
    {
        if doc.participant(p).is_none() {
            push(IssueKind::UnknownReference, format!("unknown participant `{p}`"));
        }
    }
    for d in stmt.data_refs.iter().chain(stmt.payload()) {
        if doc.data_object(d).is_none() {
            push(IssueKind::UnknownReference, format!("unknown data object `{d}`"));
        }
    }
    if !stmt.group_path.is_empty() && stmt.class != StatementClass::Local {
        push(
            IssueKind::GroupOnNonLocal,
            "only local statements can be grouped".to_string(),
        );
    }

    match stmt.class {
        StatementClass::Unclassified => {
            let (suggested, why) = suggest_class(stmt);
            push(
                IssueKind::Unclassified,
                format!("statement is not classified yet (suggestion: {suggested}, {why})"),
            );
        }
        StatementClass::Data => {
            if !stmt.participants.is_empty() {
                push(
                    IssueKind::DataWithParticipants,
                    format!("data statement refers to {} participant(s)", stmt.participants.len()),
                );
            }
        }
        StatementClass::Local => {
            if stmt.participants.len() != 1 {
                push(
                    IssueKind::LocalParticipantCount,
                    format!(
                        "local statement must refer to exactly one participant, found {}",
                        stmt.participants.len()
                    ),
                );
            }
        }
        StatementClass::Interaction => {
            if stmt.payload().is_empty() {
                push(
                    IssueKind::MissingPayload,
                    "interaction lacks exchanged data".to_string(),
                );
            }
            match (&stmt.sender, &stmt.receiver) {
                (None, _) => push(IssueKind::MissingSender, "interaction has no sender".to_string()),
                (_, None) => push(IssueKind::MissingReceiver, "interaction has no receiver".to_string()),
                _ => {}
            }
            if stmt.sender.is_none() && stmt.receiver.is_none() {
                push(IssueKind::MissingReceiver, "interaction has no receiver".to_string());
            }
            if let (Some(s), Some(r)) = (&stmt.sender, &stmt.receiver) {
                if s == r {
                    push(
                        IssueKind::SenderIsReceiver,
                        format!("sender and receiver are both `{s}`"),
                    );
                }
            }
            for (role, p) in [("sender", &stmt.sender), ("receiver", &stmt.receiver)] {
                if let Some(p) = p {
                    if !stmt.participants.contains(p) {
                        push(
                            IssueKind::EndpointNotTagged,
                            format!("{role} `{p}` is not among the statement's participants"),
                        );
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Suggestion {
    pub statement_id: StatementId,
    pub current: StatementClass,
    pub suggested: StatementClass,
    pub rationale: String,
}

/// Suggestions for every statement, in document order.
pub fn suggestions(doc: &RequirementsDocument) -> Vec<Suggestion> {
    doc.statements
        .iter()
        .map(|s| {
            let (suggested, rationale) = suggest_class(s);
            Suggestion {
                statement_id: s.id.clone(),
                current: s.class,
                suggested,
                rationale,
            }
        })
        .collect()
}
