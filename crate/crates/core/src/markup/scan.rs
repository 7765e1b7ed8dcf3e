//! Line, header, attribute and inline-tag scanning.

use super::{ParseDiagnostic, Severity, SourceSpan};

/// Byte offset -> line/column conversion for one input.
pub(super) struct Locator<'a> {
    input: &'a str,
    line_starts: Vec<usize>,
}

impl<'a> Locator<'a> {
    pub fn new(input: &'a str) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(input.match_indices('\n').map(|(i, _)| i + 1));
        Locator { input, line_starts }
    }

    pub fn span(&self, start: usize, end: usize) -> SourceSpan {
        let start = start.min(self.input.len());
        let end = end.clamp(start, self.input.len());
        let line_idx = match self.line_starts.binary_search(&start) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let line_start = self.line_starts[line_idx];
        let column = self.input[line_start..start].chars().count() + 1;
        SourceSpan {
            byte_start: start,
            byte_end: end,
            line: line_idx + 1,
            column,
        }
    }

    pub fn error(&self, start: usize, end: usize, message: impl Into<String>) -> ParseDiagnostic {
        ParseDiagnostic {
            severity: Severity::Error,
            message: message.into(),
            span: self.span(start, end),
        }
    }

    pub fn warning(&self, start: usize, end: usize, message: impl Into<String>) -> ParseDiagnostic {
        ParseDiagnostic {
            severity: Severity::Warning,
            message: message.into(),
            span: self.span(start, end),
        }
    }
}

/// One physical line without its terminator (`\n` or `\r\n`).
#[derive(Debug, Clone, Copy)]
pub(super) struct Line<'a> {
    pub text: &'a str,
    pub start: usize,
}

impl Line<'_> {
    pub fn end(&self) -> usize {
        self.start + self.text.len()
    }
}

pub(super) fn lines(input: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    for raw in input.split_inclusive('\n') {
        let text = raw.strip_suffix('\n').unwrap_or(raw);
        let text = text.strip_suffix('\r').unwrap_or(text);
        out.push(Line { text, start });
        start += raw.len();
    }
    out
}

#[derive(Debug, Clone)]
pub(super) struct Attr {
    pub key: String,
    pub value: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone)]
pub(super) struct Header {
    pub kind: String,
    /// Raw remainder after the kind (used by `@chorda <version>`).
    pub rest: String,
    pub rest_start: usize,
    pub attrs: Vec<Attr>,
}

/// `@kind key=value key="quoted value" ...`. `line` must start with `@`
/// once leading whitespace is removed.
pub(super) fn header(line: Line<'_>, loc: &Locator<'_>, diags: &mut Vec<ParseDiagnostic>) -> Header {
    let lead = line.text.len() - line.text.trim_start().len();
    let body = &line.text[lead + 1..];
    let kind_len = body.find(|c: char| c.is_whitespace()).unwrap_or(body.len());
    let kind = body[..kind_len].to_string();
    let rest_offset = line.start + lead + 1 + kind_len;
    let rest = &body[kind_len..];
    Header {
        rest: rest.trim().to_string(),
        rest_start: rest_offset,
        attrs: if kind == "chorda" {
            Vec::new()
        } else {
            attributes(rest, rest_offset, loc, diags)
        },
        kind,
    }
}

fn is_key_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')
}

fn attributes(s: &str, base: usize, loc: &Locator<'_>, diags: &mut Vec<ParseDiagnostic>) -> Vec<Attr> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < s.len() {
        let c = s[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let key_start = i;
        while i < s.len() && is_key_char(s[i..].chars().next().unwrap()) {
            i += 1;
        }
        if i == key_start {
            let bad_end = s[i..].find(char::is_whitespace).map(|e| i + e).unwrap_or(s.len());
            diags.push(loc.error(
                base + i,
                base + bad_end,
                format!("malformed block header: unexpected `{}`", &s[i..bad_end]),
            ));
            i = bad_end;
            continue;
        }
        let key = s[key_start..i].to_string();
        if i >= s.len() || bytes[i] != b'=' {
            diags.push(loc.error(
                base + key_start,
                base + i,
                format!("malformed block header: attribute `{key}` has no `=value`"),
            ));
            continue;
        }
        i += 1;
        let mut value = String::new();
        if i < s.len() && bytes[i] == b'"' {
            i += 1;
            let mut closed = false;
            while i < s.len() {
                let ch = s[i..].chars().next().unwrap();
                match ch {
                    '\\' => {
                        let next = s[i + 1..].chars().next();
                        match next {
                            Some(n @ ('"' | '\\')) => {
                                value.push(n);
                                i += 2;
                            }
                            Some('n') => {
                                value.push('\n');
                                i += 2;
                            }
                            _ => {
                                value.push('\\');
                                i += 1;
                            }
                        }
                    }
                    '"' => {
                        i += 1;
                        closed = true;
                        break;
                    }
                    _ => {
                        value.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            if !closed {
                diags.push(loc.error(
                    base + key_start,
                    base + s.len(),
                    format!("malformed block header: unterminated quoted value for `{key}`"),
                ));
            }
        } else {
            let start = i;
            while i < s.len() {
                let ch = s[i..].chars().next().unwrap();
                if ch.is_whitespace() {
                    break;
                }
                i += ch.len_utf8();
            }
            value.push_str(&s[start..i]);
        }
        out.push(Attr {
            key,
            value,
            start: base + key_start,
            end: base + i,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum TagKind {
    Participant,
    Data,
}

#[derive(Debug, Clone)]
pub(super) struct InlineTag {
    pub kind: TagKind,
    pub name: String,
}

type TagKindOf = fn(&str) -> Option<TagKind>;

/// Finds `{{p:..}}` and `[[d:..]]` tags in one body line.
pub(super) fn inline_tags(line: Line<'_>, loc: &Locator<'_>, diags: &mut Vec<ParseDiagnostic>) -> Vec<InlineTag> {
    let text = line.text;
    let mut out = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        let (open, close, kind_ok): (&str, &str, TagKindOf) = if rest.starts_with("{{") {
            ("{{", "}}", |k| (k == "p").then_some(TagKind::Participant))
        } else if rest.starts_with("[[") {
            ("[[", "]]", |k| (k == "d").then_some(TagKind::Data))
        } else {
            i += rest.chars().next().unwrap().len_utf8();
            continue;
        };
        let start = i;
        let inner_start = i + open.len();
        let Some(rel_end) = text[inner_start..].find(close) else {
            diags.push(loc.error(
                line.start + start,
                line.end(),
                format!("unterminated inline tag `{open}`"),
            ));
            break;
        };
        let inner = &text[inner_start..inner_start + rel_end];
        let end = inner_start + rel_end + close.len();
        match inner.split_once(':') {
            None => diags.push(loc.error(
                line.start + start,
                line.start + end,
                format!("malformed inline tag `{open}{inner}{close}`: expected `kind:name`"),
            )),
            Some((k, name)) => match kind_ok(k.trim()) {
                None => diags.push(loc.error(
                    line.start + start,
                    line.start + end,
                    format!("unknown inline tag kind `{}` in `{open}...{close}`", k.trim()),
                )),
                Some(kind) => {
                    if name.trim().is_empty() {
                        diags.push(loc.error(line.start + start, line.start + end, "inline tag has an empty name"));
                    } else {
                        out.push(InlineTag {
                            kind,
                            name: name.to_string(),
                        });
                    }
                }
            },
        }
        i = end;
    }
    out
}

/// Splits a `;`-separated list, dropping empty items.
pub(super) fn split_list(s: &str) -> Vec<String> {
    s.split(';')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan_header(text: &str) -> (Header, Vec<ParseDiagnostic>) {
        let loc = Locator::new(text);
        let mut d = Vec::new();
        let h = header(Line { text, start: 0 }, &loc, &mut d);
        (h, d)
    }

    #[test]
    fn header_attributes() {
        let (h, d) = scan_header(r#"@statement id=s1 class=I sender="receiving Office" note="say \"hi\"""#);
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(h.kind, "statement");
        let pairs: Vec<(&str, &str)> = h.attrs.iter().map(|a| (a.key.as_str(), a.value.as_str())).collect();
        assert_eq!(
            pairs,
            vec![
                ("id", "s1"),
                ("class", "I"),
                ("sender", "receiving Office"),
                ("note", "say \"hi\"")
            ]
        );
    }

    #[test]
    fn malformed_attributes() {
        let (_, d) = scan_header(r#"@statement id"#);
        assert_eq!(d.len(), 1);
        let (_, d) = scan_header(r#"@statement id="open"#);
        assert!(d[0].message.contains("unterminated"));
        let (_, d) = scan_header(r#"@statement "x""#);
        assert!(d[0].message.contains("unexpected"));
    }

    #[test]
    fn tags_and_spans() {
        let text = "The [[d:report]] goes to {{p:CIO}}.";
        let loc = Locator::new(text);
        let mut d = Vec::new();
        let tags = inline_tags(Line { text, start: 0 }, &loc, &mut d);
        assert!(d.is_empty());
        assert_eq!(tags.len(), 2);
        assert_eq!(tags[0].kind, TagKind::Data);
    }

    #[test]
    fn unknown_tag_kind_is_an_error() {
        let text = "see {{x:thing}} and [[p:nope]]";
        let loc = Locator::new(text);
        let mut d = Vec::new();
        let tags = inline_tags(Line { text, start: 0 }, &loc, &mut d);
        assert!(tags.is_empty());
        assert_eq!(d.len(), 2);
        assert!(d[0].message.contains("unknown inline tag kind `x`"));
    }

    #[test]
    fn locator_columns_count_chars() {
        let input = "ab\nçd x";
        let loc = Locator::new(input);
        let s = loc.span(input.find('x').unwrap(), input.len());
        assert_eq!((s.line, s.column), (2, 4));
    }

    #[test]
    fn crlf_lines() {
        let ls = lines("a\r\nb\n\nc");
        let texts: Vec<&str> = ls.iter().map(|l| l.text).collect();
        assert_eq!(texts, vec!["a", "b", "", "c"]);
        assert_eq!(ls[1].start, 3);
    }
}
