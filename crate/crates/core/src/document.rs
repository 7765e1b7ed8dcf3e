//! Requirements-side domain types: participants, data objects, the
//! dictionary and classified statements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ids::{DataObjectId, ParticipantId, StatementId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Participant {
    pub id: ParticipantId,
    pub name: String,
    pub aliases: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DataObject {
    pub id: DataObjectId,
    pub name: String,
    pub aliases: BTreeSet<String>,
    /// Composition: ids of the objects this one is made of, in declared order.
    pub parts: Vec<DataObjectId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DictionaryEntry {
    pub term: String,
    pub definition: String,
    pub synonyms: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatementClass {
    Data,
    Interaction,
    Local,
    Unclassified,
}

impl StatementClass {
    /// Single-letter markup code; `None` for `Unclassified`.
    pub fn code(self) -> Option<&'static str> {
        match self {
            StatementClass::Data => Some("D"),
            StatementClass::Interaction => Some("I"),
            StatementClass::Local => Some("L"),
            StatementClass::Unclassified => None,
        }
    }
}

impl fmt::Display for StatementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StatementClass::Data => "Data",
            StatementClass::Interaction => "Interaction",
            StatementClass::Local => "Local",
            StatementClass::Unclassified => "Unclassified",
        };
        f.write_str(s)
    }
}

impl FromStr for StatementClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "d" | "data" => Ok(StatementClass::Data),
            "i" | "interaction" => Ok(StatementClass::Interaction),
            "l" | "local" => Ok(StatementClass::Local),
            "u" | "unclassified" => Ok(StatementClass::Unclassified),
            other => Err(format!("unknown statement class `{other}` (expected D, I or L)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Statement {
    pub id: StatementId,
    /// Statement body as written, inline tags included.
    pub text: String,
    pub class: StatementClass,
    pub participants: Vec<ParticipantId>,
    pub data_refs: Vec<DataObjectId>,
    pub sender: Option<ParticipantId>,
    pub receiver: Option<ParticipantId>,
    pub payload: Option<Vec<DataObjectId>>,
    pub group_path: Vec<String>,
    pub attributes: BTreeMap<String, String>,
}

impl Statement {
    pub fn new(id: impl Into<StatementId>, text: impl Into<String>) -> Self {
        Statement {
            id: id.into(),
            text: text.into(),
            class: StatementClass::Unclassified,
            participants: Vec::new(),
            data_refs: Vec::new(),
            sender: None,
            receiver: None,
            payload: None,
            group_path: Vec::new(),
            attributes: BTreeMap::new(),
        }
    }

    pub fn payload(&self) -> &[DataObjectId] {
        self.payload.as_deref().unwrap_or(&[])
    }

    /// Statement text with inline tags unwrapped and whitespace collapsed.
    pub fn plain_text(&self) -> String {
        normalize_whitespace(&strip_inline_tags(&self.text))
    }
}

/// One named group in a participant's tree of local statements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupNode {
    pub name: String,
    pub children: Vec<GroupNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParticipantGroups {
    pub participant: ParticipantId,
    pub roots: Vec<GroupNode>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RequirementsDocument {
    pub participants: Vec<Participant>,
    pub data_objects: Vec<DataObject>,
    pub dictionary: Vec<DictionaryEntry>,
    pub statements: Vec<Statement>,
    pub groups: Vec<ParticipantGroups>,
}

impl RequirementsDocument {
    pub fn participant(&self, id: &ParticipantId) -> Option<&Participant> {
        self.participants.iter().find(|p| &p.id == id)
    }

    pub fn data_object(&self, id: &DataObjectId) -> Option<&DataObject> {
        self.data_objects.iter().find(|d| &d.id == id)
    }

    pub fn statement(&self, id: &StatementId) -> Option<&Statement> {
        self.statements.iter().find(|s| &s.id == id)
    }

    pub fn participant_name<'a>(&'a self, id: &'a ParticipantId) -> &'a str {
        self.participant(id).map(|p| p.name.as_str()).unwrap_or(id.as_str())
    }

    pub fn data_name<'a>(&'a self, id: &'a DataObjectId) -> &'a str {
        self.data_object(id).map(|d| d.name.as_str()).unwrap_or(id.as_str())
    }

    /// Finds a participant by (canonicalized) name or alias.
    pub fn find_participant(&self, name: &str) -> Option<&Participant> {
        let key = match_key(name, &self.dictionary);
        self.participants.iter().find(|p| {
            match_key(&p.name, &self.dictionary) == key
                || p.aliases.iter().any(|a| match_key(a, &self.dictionary) == key)
        })
    }

    pub fn find_data_object(&self, name: &str) -> Option<&DataObject> {
        let key = match_key(name, &self.dictionary);
        self.data_objects.iter().find(|d| {
            match_key(&d.name, &self.dictionary) == key
                || d.aliases.iter().any(|a| match_key(a, &self.dictionary) == key)
        })
    }

    pub fn groups_of(&self, participant: &ParticipantId) -> &[GroupNode] {
        self.groups
            .iter()
            .find(|g| &g.participant == participant)
            .map(|g| g.roots.as_slice())
            .unwrap_or(&[])
    }

    /// Rebuilds [`RequirementsDocument::groups`] from the statements' group
    /// paths, preserving first-appearance order at every level.
    pub fn rebuild_groups(&mut self) {
        let mut out: Vec<ParticipantGroups> = Vec::new();
        for stmt in &self.statements {
            if stmt.group_path.is_empty() || stmt.class != StatementClass::Local {
                continue;
            }
            let Some(owner) = stmt.participants.first() else {
                continue;
            };
            let idx = match out.iter().position(|g| &g.participant == owner) {
                Some(i) => i,
                None => {
                    out.push(ParticipantGroups {
                        participant: owner.clone(),
                        roots: Vec::new(),
                    });
                    out.len() - 1
                }
            };
            let mut level = &mut out[idx].roots;
            for name in &stmt.group_path {
                let pos = match level.iter().position(|g| &g.name == name) {
                    Some(p) => p,
                    None => {
                        level.push(GroupNode {
                            name: name.clone(),
                            children: Vec::new(),
                        });
                        level.len() - 1
                    }
                };
                level = &mut level[pos].children;
            }
        }
        self.groups = out;
    }
}

/// Trims and collapses internal whitespace runs to one space.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case-folded, whitespace-normalized form used for all name comparisons.
pub fn normalize(s: &str) -> String {
    normalize_whitespace(s).to_lowercase()
}

/// Maps a name onto its dictionary term when it matches a term or synonym
/// (case-insensitive, whitespace-normalized); otherwise returns the
/// normalized input.
pub fn canonicalize(name: &str, dictionary: &[DictionaryEntry]) -> String {
    let key = normalize(name);
    dictionary
        .iter()
        .find(|e| normalize(&e.term) == key || e.synonyms.iter().any(|s| normalize(s) == key))
        .map(|e| e.term.clone())
        .unwrap_or(key)
}

/// Dictionary entry whose term or synonym matches `name`.
pub fn dictionary_entry<'a>(name: &str, dictionary: &'a [DictionaryEntry]) -> Option<&'a DictionaryEntry> {
    let key = normalize(name);
    dictionary
        .iter()
        .find(|e| normalize(&e.term) == key || e.synonyms.iter().any(|s| normalize(s) == key))
}

/// Comparison key: the canonical form, case-folded.
pub(crate) fn match_key(name: &str, dictionary: &[DictionaryEntry]) -> String {
    normalize(&canonicalize(name, dictionary))
}

/// Removes `{{p:...}}` / `[[d:...]]` wrappers, keeping the tagged names.
pub fn strip_inline_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        let brace = rest.find("{{");
        let bracket = rest.find("[[");
        let (start, close) = match (brace, bracket) {
            (Some(a), Some(b)) if a < b => (a, "}}"),
            (Some(a), None) => (a, "}}"),
            (_, Some(b)) => (b, "]]"),
            (None, None) => break,
        };
        out.push_str(&rest[..start]);
        let inner = &rest[start + 2..];
        match inner.find(close) {
            Some(end) => {
                let body = &inner[..end];
                let name = body.split_once(':').map(|(_, n)| n).unwrap_or(body);
                out.push_str(name);
                rest = &inner[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
                break;
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(term: &str, synonyms: &[&str]) -> DictionaryEntry {
        DictionaryEntry {
            term: term.into(),
            definition: String::new(),
            synonyms: synonyms.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn canonicalize_maps_synonym_to_term() {
        let dict = [entry(
            "international application",
            &["application for international patent"],
        )];
        assert_eq!(
            canonicalize("application for international patent", &dict),
            "international application"
        );
        assert_eq!(
            canonicalize("international application", &dict),
            "international application"
        );
    }

    #[test]
    fn canonicalize_normalizes_without_dictionary() {
        assert_eq!(canonicalize("  Record   Copy ", &[]), "record copy");
    }

    #[test]
    fn canonicalize_matches_case_insensitively() {
        let dict = [entry("International Bureau", &["IB"])];
        assert_eq!(canonicalize("international  bureau", &dict), "International Bureau");
        assert_eq!(canonicalize("ib", &dict), "International Bureau");
    }

    #[test]
    fn strip_tags() {
        assert_eq!(
            strip_inline_tags("The [[d:report]] goes to the {{p:CIO}}."),
            "The report goes to the CIO."
        );
        assert_eq!(strip_inline_tags("open {{p:x"), "open {{p:x");
    }

    #[test]
    fn class_codes_parse() {
        assert_eq!("I".parse::<StatementClass>(), Ok(StatementClass::Interaction));
        assert_eq!("local".parse::<StatementClass>(), Ok(StatementClass::Local));
        assert!("Q".parse::<StatementClass>().is_err());
    }
}
