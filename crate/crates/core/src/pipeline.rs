//! End-to-end helpers shared by the command line and the service, so both
//! produce identical artifacts.

use std::collections::HashMap;

use thiserror::Error;

use crate::classify::ClassificationIssue;
use crate::document::RequirementsDocument;
use crate::export::{render, Format, LayoutError};
use crate::ids::StatementId;
use crate::markup::{parse_document, ParseDiagnostic};
use crate::model::{BpmnModel, TraceLink};
use crate::orchestrate::{expand, Bindings, ExpandError, GroupBinding};
use crate::skeleton::{generate_skeleton, SkeletonError};
use crate::trace::{check_completeness_in, CoverageReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{} parse error(s)", .0.iter().filter(|d| d.is_error()).count())]
    Parse(Vec<ParseDiagnostic>),
    #[error("document is not ready for generation ({} classification issue(s))", .0.len())]
    NotReady(Vec<ClassificationIssue>),
    #[error(transparent)]
    Expand(ExpandError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

impl From<SkeletonError> for PipelineError {
    fn from(e: SkeletonError) -> Self {
        match e {
            SkeletonError::NotReady(i) => PipelineError::NotReady(i),
        }
    }
}

impl From<ExpandError> for PipelineError {
    fn from(e: ExpandError) -> Self {
        match e {
            ExpandError::NotReady(i) => PipelineError::NotReady(i),
            other => PipelineError::Expand(other),
        }
    }
}

/// Parses markup and fails if any diagnostic is an error. Warnings are
/// returned alongside the document.
pub fn parse_strict(text: &str) -> Result<(RequirementsDocument, Vec<ParseDiagnostic>), PipelineError> {
    let out = parse_document(text);
    if out.has_errors() {
        return Err(PipelineError::Parse(out.diagnostics));
    }
    Ok((out.document, out.diagnostics))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub model: BpmnModel,
    /// Ordered like the statements they trace.
    pub links: Vec<TraceLink>,
}

impl Generated {
    pub fn render(&self, format: Format) -> Result<String, LayoutError> {
        render(&self.model, &self.links, format)
    }

    pub fn coverage(&self, doc: &RequirementsDocument) -> CoverageReport {
        check_completeness_in(doc, &self.model, &self.links)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum BindingSource<'a> {
    /// Root groups bound to same-named skeleton sub-processes.
    ByName,
    Explicit(&'a [GroupBinding]),
}

pub fn skeleton(doc: &RequirementsDocument) -> Result<Generated, PipelineError> {
    let sk = generate_skeleton(doc)?;
    Ok(Generated {
        model: sk.model,
        links: sk.links,
    })
}

pub fn expanded(doc: &RequirementsDocument, source: BindingSource<'_>) -> Result<Generated, PipelineError> {
    let sk = generate_skeleton(doc)?;
    let by_name;
    let bindings: &[GroupBinding] = match source {
        BindingSource::ByName => {
            by_name = Bindings::by_name(&sk.model, doc);
            by_name.as_slice()
        }
        BindingSource::Explicit(b) => b,
    };
    let ex = expand(&sk.model, doc, bindings)?;
    let mut links = sk.links;
    links.extend(ex.links);
    order_links(doc, &mut links);
    Ok(Generated { model: ex.model, links })
}

pub fn order_links(doc: &RequirementsDocument, links: &mut [TraceLink]) {
    let pos: HashMap<&StatementId, usize> = doc.statements.iter().enumerate().map(|(i, s)| (&s.id, i)).collect();
    links.sort_by_key(|l| pos.get(&l.statement_id).copied().unwrap_or(usize::MAX));
}
