use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::scan::{self, Attr, Header, InlineTag, Line, Locator, TagKind};
use super::{ParseDiagnostic, ParseOutput, ATTRIBUTE_KEYS, FORMAT_VERSION, STRUCTURAL_KEYS};
use crate::document::{
    dictionary_entry, match_key, normalize, normalize_whitespace, DataObject, DictionaryEntry, Participant,
    RequirementsDocument, Statement, StatementClass,
};
use crate::ids::{slugify, DataObjectId, ParticipantId, StatementId};

#[derive(Debug)]
enum Block<'a> {
    Version {
        header: Header,
        start: usize,
        end: usize,
    },
    Participant {
        header: Header,
        start: usize,
        end: usize,
    },
    Data {
        header: Header,
        start: usize,
        end: usize,
    },
    Dictionary {
        header: Header,
        body: Vec<Line<'a>>,
        start: usize,
        end: usize,
    },
    Statement {
        header: Header,
        body: Vec<Line<'a>>,
        tags: Vec<InlineTag>,
        start: usize,
        end: usize,
    },
}

fn body_kind(kind: &str) -> bool {
    matches!(kind, "statement" | "dictionary")
}

/// Parses `.chorda` markup. Never fails: problems are reported as
/// diagnostics and the offending blocks are left out of the document.
pub fn parse_document(input: &str) -> ParseOutput {
    let loc = Locator::new(input);
    let mut diags = Vec::new();
    let blocks = split_blocks(input, &loc, &mut diags);
    let (document, spans) = Resolver::new(&loc, &blocks, &mut diags).run(&blocks);
    let statement_spans = spans
        .into_iter()
        .map(|(id, start, end)| (id, loc.span(start, end)))
        .collect();
    ParseOutput {
        document,
        diagnostics: diags,
        statement_spans,
    }
}

fn split_blocks<'a>(input: &'a str, loc: &Locator<'_>, diags: &mut Vec<ParseDiagnostic>) -> Vec<Block<'a>> {
    let lines = scan::lines(input);
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let trimmed = line.text.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            i += 1;
            continue;
        }
        if !trimmed.starts_with('@') {
            diags.push(loc.error(
                line.start,
                line.end(),
                "text outside of a block (expected an `@` block header)",
            ));
            i += 1;
            continue;
        }
        let header = scan::header(line, loc, diags);
        let start = line.start;
        i += 1;
        match header.kind.as_str() {
            "end" => diags.push(loc.error(start, line.end(), "`@end` without an open block")),
            "chorda" => blocks.push(Block::Version {
                header,
                start,
                end: line.end(),
            }),
            "participant" => blocks.push(Block::Participant {
                header,
                start,
                end: line.end(),
            }),
            "data" => blocks.push(Block::Data {
                header,
                start,
                end: line.end(),
            }),
            kind if body_kind(kind) => {
                let mut body = Vec::new();
                let mut closed = false;
                let mut end = line.end();
                while i < lines.len() {
                    let l = lines[i];
                    let t = l.text.trim_start();
                    if t.starts_with('@') {
                        if t.trim_end() == "@end" {
                            closed = true;
                            end = l.end();
                            i += 1;
                        }
                        break;
                    }
                    body.push(l);
                    end = l.end();
                    i += 1;
                }
                if !closed {
                    diags.push(loc.error(
                        start,
                        line.end(),
                        format!("unterminated block `@{kind}` (missing `@end`)"),
                    ));
                    continue;
                }
                if kind == "dictionary" {
                    blocks.push(Block::Dictionary {
                        header,
                        body,
                        start,
                        end,
                    });
                } else {
                    let mut tags = Vec::new();
                    for l in &body {
                        tags.extend(scan::inline_tags(*l, loc, diags));
                    }
                    blocks.push(Block::Statement {
                        header,
                        body,
                        tags,
                        start,
                        end,
                    });
                }
            }
            other => diags.push(loc.error(
                start,
                line.end(),
                format!("malformed block header: unknown block kind `@{other}`"),
            )),
        }
    }
    blocks
}

struct Registry<T> {
    items: Vec<T>,
    keys: Vec<HashSet<String>>,
    slugs: HashSet<String>,
}

impl<T> Registry<T> {
    fn new() -> Self {
        Registry {
            items: Vec::new(),
            keys: Vec::new(),
            slugs: HashSet::new(),
        }
    }

    fn find(&self, key: &str) -> Option<usize> {
        self.keys.iter().position(|k| k.contains(key))
    }

    fn unique_slug(&mut self, name: &str) -> String {
        let base = slugify(name);
        let mut slug = base.clone();
        let mut n = 2;
        while self.slugs.contains(&slug) {
            slug = format!("{base}-{n}");
            n += 1;
        }
        self.slugs.insert(slug.clone());
        slug
    }
}

struct Resolver<'l, 'd> {
    loc: &'l Locator<'l>,
    diags: &'d mut Vec<ParseDiagnostic>,
    dictionary: Vec<DictionaryEntry>,
    participants: Registry<Participant>,
    data: Registry<DataObject>,
    /// Keys of every participant tagged inline or declared anywhere.
    tagged_participants: HashSet<String>,
    tagged_data: HashSet<String>,
}

impl<'l, 'd> Resolver<'l, 'd> {
    fn new(loc: &'l Locator<'l>, blocks: &[Block<'_>], diags: &'d mut Vec<ParseDiagnostic>) -> Self {
        let mut r = Resolver {
            loc,
            diags,
            dictionary: Vec::new(),
            participants: Registry::new(),
            data: Registry::new(),
            tagged_participants: HashSet::new(),
            tagged_data: HashSet::new(),
        };
        r.collect_dictionary(blocks);
        for b in blocks {
            match b {
                Block::Statement { tags, .. } => {
                    for t in tags {
                        let key = match_key(&t.name, &r.dictionary);
                        match t.kind {
                            TagKind::Participant => r.tagged_participants.insert(key),
                            TagKind::Data => r.tagged_data.insert(key),
                        };
                    }
                }
                Block::Participant { header, .. } => {
                    if let Some(a) = header.attrs.iter().find(|a| a.key == "name") {
                        r.tagged_participants.insert(match_key(&a.value, &r.dictionary));
                    }
                }
                Block::Data { header, .. } => {
                    if let Some(a) = header.attrs.iter().find(|a| a.key == "name") {
                        r.tagged_data.insert(match_key(&a.value, &r.dictionary));
                    }
                }
                _ => {}
            }
        }
        r
    }

    fn error(&mut self, start: usize, end: usize, msg: impl Into<String>) {
        let d = self.loc.error(start, end, msg);
        self.diags.push(d);
    }

    fn warning(&mut self, start: usize, end: usize, msg: impl Into<String>) {
        let d = self.loc.warning(start, end, msg);
        self.diags.push(d);
    }

    /// Rejects unknown and repeated keys; returns the surviving attributes
    /// keyed by name, or `None` when the header had errors.
    fn check_keys<'h>(
        &mut self,
        kind: &str,
        header: &'h Header,
        allowed: &dyn Fn(&str) -> bool,
    ) -> Option<BTreeMap<&'h str, &'h Attr>> {
        let mut ok = true;
        let mut map = BTreeMap::new();
        for a in &header.attrs {
            if !allowed(&a.key) {
                self.error(
                    a.start,
                    a.end,
                    format!("unknown attribute key `{}` on `@{kind}`", a.key),
                );
                ok = false;
            } else if map.insert(a.key.as_str(), a).is_some() {
                self.error(a.start, a.end, format!("duplicate attribute `{}` on `@{kind}`", a.key));
                ok = false;
            }
        }
        ok.then_some(map)
    }

    fn collect_dictionary(&mut self, blocks: &[Block<'_>]) {
        let mut used: HashMap<String, String> = HashMap::new();
        for b in blocks {
            let Block::Dictionary {
                header,
                body,
                start,
                end,
            } = b
            else {
                continue;
            };
            let (start, end) = (*start, *end);
            let Some(attrs) = self.check_keys("dictionary", header, &|k| k == "term") else {
                continue;
            };
            let term = attrs
                .get("term")
                .map(|a| normalize_whitespace(&a.value))
                .unwrap_or_default();
            if term.is_empty() {
                self.error(start, end, "dictionary entry needs a non-empty `term=`");
                continue;
            }
            let mut definition: Vec<&str> = Vec::new();
            let mut synonyms = BTreeSet::new();
            for l in body {
                let t = l.text.trim_end();
                if let Some(rest) = t.trim_start().strip_prefix("definition:") {
                    definition.clear();
                    definition.push(rest.trim_start());
                } else if let Some(rest) = t.trim_start().strip_prefix("synonyms:") {
                    for s in scan::split_list(rest) {
                        let s = normalize_whitespace(&s);
                        if normalize(&s) == normalize(&term) {
                            self.warning(l.start, l.end(), format!("`{s}` is the term itself, not a synonym"));
                        } else {
                            synonyms.insert(s);
                        }
                    }
                } else if !definition.is_empty() || !t.trim().is_empty() {
                    definition.push(t);
                }
            }
            while definition.last().is_some_and(|l| l.trim().is_empty()) {
                definition.pop();
            }
            let mut clash = false;
            for key in std::iter::once(&term).chain(synonyms.iter()).map(|s| normalize(s)) {
                if let Some(other) = used.get(&key) {
                    self.error(
                        start,
                        end,
                        format!("`{key}` is already defined by dictionary entry `{other}`"),
                    );
                    clash = true;
                }
            }
            if clash {
                continue;
            }
            for key in std::iter::once(&term).chain(synonyms.iter()).map(|s| normalize(s)) {
                used.insert(key, term.clone());
            }
            self.dictionary.push(DictionaryEntry {
                term,
                definition: definition.join("\n"),
                synonyms,
            });
        }
    }

    fn display_name(&self, raw: &str) -> String {
        dictionary_entry(raw, &self.dictionary)
            .map(|e| e.term.clone())
            .unwrap_or_else(|| normalize_whitespace(raw))
    }

    fn participant(&mut self, raw: &str) -> ParticipantId {
        let key = match_key(raw, &self.dictionary);
        if let Some(i) = self.participants.find(&key) {
            return self.participants.items[i].id.clone();
        }
        let name = self.display_name(raw);
        let id = ParticipantId::new(self.participants.unique_slug(&name));
        self.participants.items.push(Participant {
            id: id.clone(),
            name,
            aliases: BTreeSet::new(),
        });
        self.participants.keys.push(HashSet::from([key]));
        id
    }

    fn data_object(&mut self, raw: &str) -> DataObjectId {
        let key = match_key(raw, &self.dictionary);
        if let Some(i) = self.data.find(&key) {
            return self.data.items[i].id.clone();
        }
        let name = self.display_name(raw);
        let id = DataObjectId::new(self.data.unique_slug(&name));
        self.data.items.push(DataObject {
            id: id.clone(),
            name,
            aliases: BTreeSet::new(),
            parts: Vec::new(),
        });
        self.data.keys.push(HashSet::from([key]));
        id
    }

    fn run(mut self, blocks: &[Block<'_>]) -> (RequirementsDocument, Vec<(StatementId, usize, usize)>) {
        let mut statements: Vec<(Statement, usize, usize)> = Vec::new();
        let mut seen_version = false;
        let explicit_ids: HashSet<String> = blocks
            .iter()
            .filter_map(|b| match b {
                Block::Statement { header, .. } => header.attrs.iter().find(|a| a.key == "id").map(|a| a.value.clone()),
                _ => None,
            })
            .collect();
        let mut used_ids: HashSet<String> = HashSet::new();
        let mut auto = 0usize;

        for b in blocks {
            match b {
                Block::Version { header, start, end } => {
                    if seen_version {
                        self.error(*start, *end, "duplicate `@chorda` version header");
                    }
                    seen_version = true;
                    if header.rest != FORMAT_VERSION.to_string() {
                        self.error(
                            header.rest_start,
                            *end,
                            format!(
                                "unsupported format version `{}` (expected {FORMAT_VERSION})",
                                header.rest
                            ),
                        );
                    }
                }
                Block::Participant { header, start, end } => self.declare_participant(header, *start, *end),
                Block::Data { header, start, end } => self.declare_data(header, *start, *end),
                Block::Dictionary { .. } => {}
                Block::Statement {
                    header,
                    body,
                    tags,
                    start,
                    end,
                } => {
                    let (start, end) = (*start, *end);
                    let errors_before = self.diags.iter().filter(|d| d.is_error()).count();
                    let block_has_errors = self
                        .diags
                        .iter()
                        .any(|d| d.is_error() && d.span.byte_start >= start && d.span.byte_start <= end);
                    let stmt = self.statement(header, body, tags, start, end);
                    let errors_after = self.diags.iter().filter(|d| d.is_error()).count();
                    let Some(mut stmt) = stmt else { continue };
                    if block_has_errors || errors_after > errors_before {
                        continue;
                    }
                    if stmt.id.as_str().is_empty() {
                        loop {
                            auto += 1;
                            let candidate = format!("s{auto}");
                            if !explicit_ids.contains(&candidate) && !used_ids.contains(&candidate) {
                                stmt.id = StatementId::new(candidate);
                                break;
                            }
                        }
                    }
                    if !used_ids.insert(stmt.id.0.clone()) {
                        let id_attr = header.attrs.iter().find(|a| a.key == "id");
                        let (s, e) = id_attr.map(|a| (a.start, a.end)).unwrap_or((start, end));
                        self.error(s, e, format!("duplicate statement id `{}`", stmt.id));
                        continue;
                    }
                    statements.push((stmt, start, end));
                }
            }
        }

        self.check_composition();
        let statements = self.check_group_siblings(statements);
        let spans = statements
            .iter()
            .map(|(s, start, end)| (s.id.clone(), *start, *end))
            .collect();
        let statements = statements.into_iter().map(|(s, ..)| s).collect();

        let mut doc = RequirementsDocument {
            participants: self.participants.items,
            data_objects: self.data.items,
            dictionary: self.dictionary,
            statements,
            groups: Vec::new(),
        };
        doc.rebuild_groups();
        (doc, spans)
    }

    fn add_aliases(&mut self, is_participant: bool, idx: usize, aliases: &str, a: &Attr) {
        for alias in scan::split_list(aliases) {
            let alias = normalize_whitespace(&alias);
            let key = match_key(&alias, &self.dictionary);
            let owner = if is_participant {
                self.participants.find(&key)
            } else {
                self.data.find(&key)
            };
            match owner {
                Some(o) if o != idx => {
                    self.error(a.start, a.end, format!("alias `{alias}` collides with another name"));
                }
                Some(_) => {
                    // alias already resolves here (same canonical form or repeated)
                    let name_key = if is_participant {
                        match_key(&self.participants.items[idx].name, &self.dictionary)
                    } else {
                        match_key(&self.data.items[idx].name, &self.dictionary)
                    };
                    if key != name_key {
                        if is_participant {
                            self.participants.items[idx].aliases.insert(alias);
                        } else {
                            self.data.items[idx].aliases.insert(alias);
                        }
                    }
                }
                None => {
                    if is_participant {
                        self.participants.items[idx].aliases.insert(alias);
                        self.participants.keys[idx].insert(key);
                    } else {
                        self.data.items[idx].aliases.insert(alias);
                        self.data.keys[idx].insert(key);
                    }
                }
            }
        }
    }

    fn declare_participant(&mut self, header: &Header, start: usize, end: usize) {
        let Some(attrs) = self.check_keys("participant", header, &|k| matches!(k, "name" | "aliases")) else {
            return;
        };
        let Some(name) = attrs.get("name").filter(|a| !a.value.trim().is_empty()) else {
            self.error(start, end, "`@participant` needs a non-empty `name=`");
            return;
        };
        let id = self.participant(&name.value);
        let idx = self.participants.items.iter().position(|p| p.id == id).unwrap();
        if let Some(a) = attrs.get("aliases") {
            self.add_aliases(true, idx, &a.value, a);
        }
    }

    fn declare_data(&mut self, header: &Header, start: usize, end: usize) {
        let Some(attrs) = self.check_keys("data", header, &|k| matches!(k, "name" | "aliases" | "parts")) else {
            return;
        };
        let Some(name) = attrs.get("name").filter(|a| !a.value.trim().is_empty()) else {
            self.error(start, end, "`@data` needs a non-empty `name=`");
            return;
        };
        let id = self.data_object(&name.value);
        let idx = self.data.items.iter().position(|d| d.id == id).unwrap();
        if let Some(a) = attrs.get("aliases") {
            self.add_aliases(false, idx, &a.value, a);
        }
        if let Some(a) = attrs.get("parts") {
            for part in scan::split_list(&a.value) {
                let pid = self.data_object(&part);
                if pid == id {
                    self.error(
                        a.start,
                        a.end,
                        format!("data object `{}` cannot be part of itself", name.value),
                    );
                    continue;
                }
                let item = &mut self.data.items[idx];
                if !item.parts.contains(&pid) {
                    item.parts.push(pid);
                }
            }
        }
    }

    fn statement(
        &mut self,
        header: &Header,
        body: &[Line<'_>],
        tags: &[InlineTag],
        start: usize,
        end: usize,
    ) -> Option<Statement> {
        let allowed = |k: &str| STRUCTURAL_KEYS.contains(&k) || ATTRIBUTE_KEYS.contains(&k) || k.starts_with("x-");
        let attrs = self.check_keys("statement", header, &allowed)?;

        let class = match attrs.get("class") {
            None => StatementClass::Unclassified,
            Some(a) => match a.value.parse::<StatementClass>() {
                Ok(c) => c,
                Err(msg) => {
                    self.error(a.start, a.end, msg);
                    return None;
                }
            },
        };

        let mut lines: Vec<&str> = body.iter().map(|l| l.text.trim_end()).collect();
        while lines.first().is_some_and(|l| l.is_empty()) {
            lines.remove(0);
        }
        while lines.last().is_some_and(|l| l.is_empty()) {
            lines.pop();
        }
        let text = lines.join("\n");
        if text.trim().is_empty() {
            self.warning(start, end, "statement has no text");
        }

        let id = attrs.get("id").map(|a| a.value.trim().to_string()).unwrap_or_default();
        if attrs.contains_key("id") && id.is_empty() {
            self.error(start, end, "statement `id=` is empty");
            return None;
        }
        let mut stmt = Statement::new(StatementId::new(id), text);
        stmt.class = class;

        for t in tags {
            match t.kind {
                TagKind::Participant => {
                    let pid = self.participant(&t.name);
                    if !stmt.participants.contains(&pid) {
                        stmt.participants.push(pid);
                    }
                }
                TagKind::Data => {
                    let did = self.data_object(&t.name);
                    if !stmt.data_refs.contains(&did) {
                        stmt.data_refs.push(did);
                    }
                }
            }
        }

        if let Some(a) = attrs.get("participant") {
            for name in scan::split_list(&a.value) {
                let pid = self.referenced_participant(&name, a);
                if !stmt.participants.contains(&pid) {
                    stmt.participants.push(pid);
                }
            }
        }
        for (key, slot) in [("sender", 0), ("receiver", 1)] {
            if let Some(a) = attrs.get(key) {
                let name = a.value.trim();
                if name.is_empty() || name.contains(';') {
                    self.error(a.start, a.end, format!("`{key}=` takes exactly one participant"));
                    return None;
                }
                let pid = self.referenced_participant(name, a);
                if !stmt.participants.contains(&pid) {
                    stmt.participants.push(pid.clone());
                }
                if slot == 0 {
                    stmt.sender = Some(pid);
                } else {
                    stmt.receiver = Some(pid);
                }
            }
        }
        if let Some(a) = attrs.get("data") {
            let mut payload = Vec::new();
            for name in scan::split_list(&a.value) {
                let key = match_key(&name, &self.dictionary);
                if !self.tagged_data.contains(&key) {
                    self.warning(
                        a.start,
                        a.end,
                        format!("data object `{name}` is never tagged; registering it"),
                    );
                    self.tagged_data.insert(key);
                }
                let did = self.data_object(&name);
                if !payload.contains(&did) {
                    payload.push(did.clone());
                }
                if !stmt.data_refs.contains(&did) {
                    stmt.data_refs.push(did);
                }
            }
            stmt.payload = Some(payload);
        }
        if let Some(a) = attrs.get("group") {
            if class != StatementClass::Local {
                self.error(a.start, a.end, "`group=` is only allowed on local (class=L) statements");
                return None;
            }
            let segments: Vec<String> = a.value.split('/').map(normalize_whitespace).collect();
            if segments.iter().any(String::is_empty) {
                self.error(a.start, a.end, "`group=` path has an empty segment");
                return None;
            }
            stmt.group_path = segments;
        }
        for (k, a) in &attrs {
            if ATTRIBUTE_KEYS.contains(k) || k.starts_with("x-") {
                stmt.attributes.insert(k.to_string(), a.value.clone());
            }
        }
        Some(stmt)
    }

    fn referenced_participant(&mut self, name: &str, a: &Attr) -> ParticipantId {
        let key = match_key(name, &self.dictionary);
        if !self.tagged_participants.contains(&key) {
            self.warning(
                a.start,
                a.end,
                format!("participant `{name}` is never tagged; registering it"),
            );
            self.tagged_participants.insert(key);
        }
        self.participant(name)
    }

    /// Drops composition edges that would close a cycle.
    fn check_composition(&mut self) {
        let n = self.data.items.len();
        let index: HashMap<DataObjectId, usize> = self
            .data
            .items
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.clone(), i))
            .collect();
        for i in 0..n {
            let mut kept = Vec::new();
            let parts = self.data.items[i].parts.clone();
            for p in parts {
                // would i become reachable from p?
                let mut stack = vec![index[&p]];
                let mut seen = HashSet::new();
                let mut cyclic = false;
                while let Some(x) = stack.pop() {
                    if x == i {
                        cyclic = true;
                        break;
                    }
                    if seen.insert(x) {
                        stack.extend(self.data.items[x].parts.iter().map(|q| index[q]));
                    }
                }
                if cyclic {
                    let msg = format!(
                        "composition cycle: `{}` is (transitively) part of `{}`",
                        self.data.items[i].name, self.data.items[index[&p]].name
                    );
                    self.error(0, 0, msg);
                } else {
                    kept.push(p);
                }
            }
            self.data.items[i].parts = kept;
        }
    }

    fn check_group_siblings(&mut self, statements: Vec<(Statement, usize, usize)>) -> Vec<(Statement, usize, usize)> {
        // (participant, parent path) -> exact sibling names
        let mut siblings: HashMap<(ParticipantId, Vec<String>), Vec<String>> = HashMap::new();
        let mut out = Vec::new();
        'stmts: for (stmt, start, end) in statements {
            if stmt.class == StatementClass::Local && !stmt.group_path.is_empty() {
                if let Some(owner) = stmt.participants.first() {
                    for depth in 0..stmt.group_path.len() {
                        let parent = stmt.group_path[..depth].to_vec();
                        let name = &stmt.group_path[depth];
                        let names = siblings.entry((owner.clone(), parent)).or_default();
                        if let Some(other) = names
                            .iter()
                            .find(|n| *n != name && n.to_lowercase() == name.to_lowercase())
                        {
                            let msg = format!("group `{name}` differs from sibling group `{other}` only by case");
                            self.error(start, end, msg);
                            continue 'stmts;
                        }
                    }
                    for depth in 0..stmt.group_path.len() {
                        let parent = stmt.group_path[..depth].to_vec();
                        let names = siblings.entry((owner.clone(), parent)).or_default();
                        if !names.contains(&stmt.group_path[depth]) {
                            names.push(stmt.group_path[depth].clone());
                        }
                    }
                }
            }
            out.push((stmt, start, end));
        }
        out
    }
}
