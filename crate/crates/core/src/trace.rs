//! Completeness check: every statement must be realized by model elements.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::{RequirementsDocument, StatementClass};
use crate::ids::StatementId;
use crate::model::{BpmnModel, TraceLink};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DanglingLink {
    pub statement_id: StatementId,
    /// Element ids the link names that the model does not contain. Empty
    /// when the statement itself is unknown.
    pub missing_elements: Vec<String>,
    pub unknown_statement: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageReport {
    pub covered: Vec<StatementId>,
    pub uncovered: Vec<StatementId>,
    pub documentation_only: Vec<StatementId>,
    pub dangling: Vec<DanglingLink>,
    pub complete: bool,
}

/// Checks links against the document only. Element ids are not verified.
pub fn check_completeness(doc: &RequirementsDocument, links: &[TraceLink]) -> CoverageReport {
    report(doc, None, links)
}

/// Like [`check_completeness`], and also flags links naming elements that
/// are absent from `model`.
pub fn check_completeness_in(doc: &RequirementsDocument, model: &BpmnModel, links: &[TraceLink]) -> CoverageReport {
    report(doc, Some(model), links)
}

fn report(doc: &RequirementsDocument, model: Option<&BpmnModel>, links: &[TraceLink]) -> CoverageReport {
    let known: HashSet<&StatementId> = doc.statements.iter().map(|s| &s.id).collect();
    let elements = model.map(BpmnModel::element_ids);

    let mut linked: HashSet<&StatementId> = HashSet::new();
    let mut dangling = Vec::new();
    for link in links {
        if !known.contains(&link.statement_id) {
            dangling.push(DanglingLink {
                statement_id: link.statement_id.clone(),
                missing_elements: Vec::new(),
                unknown_statement: true,
            });
            continue;
        }
        let missing: Vec<String> = match &elements {
            Some(ids) => link
                .element_ids
                .iter()
                .filter(|e| !ids.contains(e.as_str()))
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
            None => Vec::new(),
        };
        if missing.is_empty() && !link.element_ids.is_empty() {
            linked.insert(&link.statement_id);
        } else {
            dangling.push(DanglingLink {
                statement_id: link.statement_id.clone(),
                missing_elements: missing,
                unknown_statement: false,
            });
        }
    }

    let mut out = CoverageReport::default();
    for s in &doc.statements {
        if s.class == StatementClass::Data {
            out.documentation_only.push(s.id.clone());
        } else if linked.contains(&s.id) {
            out.covered.push(s.id.clone());
        } else {
            out.uncovered.push(s.id.clone());
        }
    }
    out.dangling = dangling;
    out.complete = out.uncovered.is_empty() && out.dangling.is_empty();
    out
}

impl fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let total = self.covered.len() + self.uncovered.len() + self.documentation_only.len();
        writeln!(
            f,
            "{}: {} of {} statement(s) covered, {} documentation-only",
            if self.complete { "complete" } else { "incomplete" },
            self.covered.len(),
            total,
            self.documentation_only.len()
        )?;
        for id in &self.uncovered {
            writeln!(f, "  uncovered: {id}")?;
        }
        for d in &self.dangling {
            if d.unknown_statement {
                writeln!(f, "  dangling: link for unknown statement {}", d.statement_id)?;
            } else if d.missing_elements.is_empty() {
                writeln!(f, "  dangling: link for {} names no element", d.statement_id)?;
            } else {
                writeln!(
                    f,
                    "  dangling: link for {} names missing element(s) {}",
                    d.statement_id,
                    d.missing_elements.join(", ")
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::parse_document;
    use crate::skeleton::generate_skeleton;

    const DOC: &str = "\
@statement id=d1 class=D
An [[d:order]] contains [[d:items]].
@end
@statement id=i1 class=I sender=A receiver=B data=order
{{p:A}} sends the [[d:order]] to {{p:B}}
@end
@statement id=l1 class=L
{{p:B}} checks stock
@end
";

    #[test]
    fn empty_is_complete() {
        let r = check_completeness(&RequirementsDocument::default(), &[]);
        assert!(r.complete);
        assert!(r.uncovered.is_empty());
    }

    #[test]
    fn buckets_partition_statements() {
        let doc = parse_document(DOC).document;
        let sk = generate_skeleton(&doc).unwrap();
        let r = check_completeness_in(&doc, &sk.model, &sk.links);
        assert_eq!(r.covered, vec![StatementId::new("i1")]);
        assert_eq!(r.uncovered, vec![StatementId::new("l1")]);
        assert_eq!(r.documentation_only, vec![StatementId::new("d1")]);
        assert!(!r.complete);
        let text = r.to_string();
        assert!(text.starts_with("incomplete: 1 of 3"));
        assert!(text.contains("uncovered: l1"));
    }

    #[test]
    fn dangling_links() {
        let doc = parse_document(DOC).document;
        let sk = generate_skeleton(&doc).unwrap();
        let mut links = sk.links.clone();
        links.push(TraceLink {
            statement_id: StatementId::new("ghost"),
            element_ids: vec!["n1".into()],
        });
        links[0].element_ids.push("n404".into());
        let r = check_completeness_in(&doc, &sk.model, &links);
        assert_eq!(r.dangling.len(), 2);
        assert_eq!(r.dangling[0].missing_elements, vec!["n404".to_string()]);
        assert!(r.dangling[1].unknown_statement);
        assert!(r.uncovered.contains(&StatementId::new("i1")));
        // without a model only the statement side is checked
        let r = check_completeness(&doc, &links);
        assert_eq!(r.dangling.len(), 1);
        assert!(r.covered.contains(&StatementId::new("i1")));
    }
}
