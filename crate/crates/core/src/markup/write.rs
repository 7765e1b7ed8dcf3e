use std::fmt::Write as _;

use super::scan::{self, Locator, TagKind};
use super::FORMAT_VERSION;
use crate::document::{RequirementsDocument, Statement};
use crate::ids::{DataObjectId, ParticipantId};

fn quote(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn bare_ok(value: &str) -> bool {
    !value.is_empty()
        && value
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn attr(out: &mut String, key: &str, value: &str) {
    out.push(' ');
    out.push_str(key);
    out.push('=');
    if bare_ok(value) {
        out.push_str(value);
    } else {
        out.push_str(&quote(value));
    }
}

fn join_names(names: &[String]) -> String {
    names.join("; ")
}

/// Emits canonical markup: version header, dictionary, declarations, then
/// statements in document order. Output always uses LF line endings.
pub fn serialize_document(doc: &RequirementsDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "@chorda {FORMAT_VERSION}");

    for entry in &doc.dictionary {
        out.push('\n');
        out.push_str("@dictionary");
        attr(&mut out, "term", &entry.term);
        out.push('\n');
        if !entry.definition.is_empty() {
            let _ = writeln!(out, "definition: {}", entry.definition);
        }
        if !entry.synonyms.is_empty() {
            let syns: Vec<String> = entry.synonyms.iter().cloned().collect();
            let _ = writeln!(out, "synonyms: {}", join_names(&syns));
        }
        out.push_str("@end\n");
    }

    if !doc.participants.is_empty() || !doc.data_objects.is_empty() {
        out.push('\n');
    }
    for p in &doc.participants {
        out.push_str("@participant");
        attr(&mut out, "name", &p.name);
        if !p.aliases.is_empty() {
            let a: Vec<String> = p.aliases.iter().cloned().collect();
            attr(&mut out, "aliases", &join_names(&a));
        }
        out.push('\n');
    }
    for d in &doc.data_objects {
        out.push_str("@data");
        attr(&mut out, "name", &d.name);
        if !d.aliases.is_empty() {
            let a: Vec<String> = d.aliases.iter().cloned().collect();
            attr(&mut out, "aliases", &join_names(&a));
        }
        if !d.parts.is_empty() {
            let parts: Vec<String> = d.parts.iter().map(|p| doc.data_name(p).to_string()).collect();
            attr(&mut out, "parts", &join_names(&parts));
        }
        out.push('\n');
    }

    for stmt in &doc.statements {
        out.push('\n');
        write_statement(&mut out, doc, stmt);
    }
    out
}

/// Participants/data objects referenced by the statement's inline tags.
fn inline_refs(doc: &RequirementsDocument, text: &str) -> (Vec<ParticipantId>, Vec<DataObjectId>) {
    let loc = Locator::new(text);
    let mut diags = Vec::new();
    let mut ps = Vec::new();
    let mut ds = Vec::new();
    for line in scan::lines(text) {
        for tag in scan::inline_tags(line, &loc, &mut diags) {
            match tag.kind {
                TagKind::Participant => {
                    if let Some(p) = doc.find_participant(&tag.name) {
                        if !ps.contains(&p.id) {
                            ps.push(p.id.clone());
                        }
                    }
                }
                TagKind::Data => {
                    if let Some(d) = doc.find_data_object(&tag.name) {
                        if !ds.contains(&d.id) {
                            ds.push(d.id.clone());
                        }
                    }
                }
            }
        }
    }
    (ps, ds)
}

fn write_statement(out: &mut String, doc: &RequirementsDocument, stmt: &Statement) {
    out.push_str("@statement");
    attr(out, "id", stmt.id.as_str());
    if let Some(code) = stmt.class.code() {
        attr(out, "class", code);
    }

    let (inline_ps, _) = inline_refs(doc, &stmt.text);
    let explicit: Vec<&ParticipantId> = stmt.participants.iter().filter(|p| !inline_ps.contains(p)).collect();
    // what sender/receiver alone would append on re-parse
    let mut implied: Vec<&ParticipantId> = Vec::new();
    for p in [stmt.sender.as_ref(), stmt.receiver.as_ref()].into_iter().flatten() {
        if !inline_ps.contains(p) && !implied.contains(&p) {
            implied.push(p);
        }
    }
    if explicit != implied {
        let names: Vec<String> = explicit.iter().map(|p| doc.participant_name(p).to_string()).collect();
        attr(out, "participant", &join_names(&names));
    }
    if let Some(s) = &stmt.sender {
        attr(out, "sender", doc.participant_name(s));
    }
    if let Some(r) = &stmt.receiver {
        attr(out, "receiver", doc.participant_name(r));
    }
    if let Some(payload) = &stmt.payload {
        let names: Vec<String> = payload.iter().map(|d| doc.data_name(d).to_string()).collect();
        attr(out, "data", &join_names(&names));
    }
    if !stmt.group_path.is_empty() {
        attr(out, "group", &stmt.group_path.join("/"));
    }
    for (k, v) in &stmt.attributes {
        attr(out, k, v);
    }
    out.push('\n');
    if !stmt.text.is_empty() {
        out.push_str(&stmt.text);
        out.push('\n');
    }
    out.push_str("@end\n");
}
