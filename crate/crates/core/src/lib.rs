//! Requirements-to-choreography modelling: annotated requirement markup in,
//! BPMN collaboration models out.

pub mod classify;
pub mod document;
pub mod export;
pub mod ids;
pub mod markup;
pub mod model;
pub mod orchestrate;
pub mod pipeline;
pub mod skeleton;
pub mod trace;

pub use classify::{suggest_class, suggestions, validate_classification, ClassificationIssue, IssueKind, Suggestion};
pub use document::{
    canonicalize, DataObject, DictionaryEntry, GroupNode, Participant, ParticipantGroups, RequirementsDocument,
    Statement, StatementClass,
};
pub use export::{from_json, layout, render, to_json, to_svg, to_xpdl, Format, LayoutedDiagram};
pub use ids::{DataObjectId, FlowId, NodeId, ParticipantId, PoolId, StatementId};
pub use markup::{parse_document, serialize_document, ParseDiagnostic, ParseOutput, Severity, SourceSpan};
pub use model::{
    validate_model, BpmnModel, FlowNode, MessageFlow, NodeKind, Pool, Rule, SequenceFlow, SubProcess, TaskKind,
    TraceLink, Violation,
};
pub use orchestrate::{bind_group, expand, BindError, Bindings, ExpandError, Expansion, GroupBinding};
pub use skeleton::{generate_skeleton, Skeleton, SkeletonError};
pub use trace::{check_completeness, check_completeness_in, CoverageReport, DanglingLink};
