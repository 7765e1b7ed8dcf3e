//! The `.chorda` requirements markup.
//!
//! A document is a sequence of `@`-blocks:
//!
//! ```text
//! @chorda 1
//! @dictionary term="international application"
//! definition: the application filed under the treaty
//! synonyms: intl application
//! @end
//! @participant name="International Bureau" aliases="IB"
//! @data name="international application" parts="request"
//! @statement id=s1 class=I sender="applicant" receiver="receiving Office" data="international application"
//! The {{p:applicant}} files the [[d:international application]].
//! @end
//! ```
//!
//! Inline `{{p:name}}` tags mark participants and `[[d:name]]` tags mark
//! data objects. The full grammar lives in `docs/markup.md`.

mod parse;
mod scan;
mod write;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::RequirementsDocument;
use crate::ids::StatementId;

pub use parse::parse_document;
pub use write::serialize_document;

/// Current (and only) format version.
pub const FORMAT_VERSION: u32 = 1;

/// Structural statement keys.
pub const STRUCTURAL_KEYS: &[&str] = &["id", "class", "participant", "sender", "receiver", "data", "group"];

/// Keys stored in [`crate::Statement::attributes`]; `x-` prefixed keys are
/// accepted as well.
pub const ATTRIBUTE_KEYS: &[&str] = &["label", "note", "store", "cost", "duration"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SourceSpan {
    pub byte_start: usize,
    pub byte_end: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl ParseDiagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.severity, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParseOutput {
    pub document: RequirementsDocument,
    pub diagnostics: Vec<ParseDiagnostic>,
    /// Block span of every statement that made it into the document.
    #[serde(default)]
    pub statement_spans: BTreeMap<StatementId, SourceSpan>,
}

impl ParseOutput {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(ParseDiagnostic::is_error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &ParseDiagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }
}
