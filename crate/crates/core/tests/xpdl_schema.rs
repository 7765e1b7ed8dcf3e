//! Validates exported XPDL against docs/xpdl-subset.xsd.
//!
//! The checker understands only the constructs used by that schema: global
//! element declarations referenced from sequences and choices, occurrence
//! bounds, attribute types and use, NMTOKEN enumerations, ID uniqueness and
//! IDREF resolution.

mod common;

use std::collections::{HashMap, HashSet};

use chorda_core::*;
use common::{corpus, generate_all, parse_clean, statements};
use proptest::prelude::*;
use roxmltree::{Document, Node};

const XS: &str = "http://www.w3.org/2001/XMLSchema";
const XPDL: &str = "http://www.wfmc.org/2008/XPDL2.1";

#[derive(Debug, Clone, Copy, PartialEq)]
enum Max {
    N(usize),
    Unbounded,
}

#[derive(Debug)]
enum Particle {
    Element { name: String, min: usize, max: Max },
    Sequence { items: Vec<Particle>, min: usize, max: Max },
    Choice { items: Vec<Particle>, min: usize, max: Max },
}

#[derive(Debug)]
struct Attr {
    name: String,
    ty: String,
    required: bool,
    allowed: Option<Vec<String>>,
}

#[derive(Debug)]
struct Decl {
    /// `None` for simple text elements.
    content: Option<Option<Particle>>,
    attrs: Vec<Attr>,
}

struct Schema {
    decls: HashMap<String, Decl>,
}

fn occurs(n: Node) -> (usize, Max) {
    let min = n.attribute("minOccurs").map_or(1, |v| v.parse().unwrap());
    let max = match n.attribute("maxOccurs") {
        None => Max::N(1),
        Some("unbounded") => Max::Unbounded,
        Some(v) => Max::N(v.parse().unwrap()),
    };
    (min, max)
}

fn xs_children<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children()
        .filter(|c| c.is_element() && c.tag_name().namespace() == Some(XS))
}

fn particle(n: Node) -> Particle {
    let (min, max) = occurs(n);
    match n.tag_name().name() {
        "element" => {
            let r = n.attribute("ref").expect("local elements use ref");
            Particle::Element {
                name: r.trim_start_matches("xpdl:").to_string(),
                min,
                max,
            }
        }
        "sequence" => Particle::Sequence {
            items: xs_children(n).map(particle).collect(),
            min,
            max,
        },
        "choice" => Particle::Choice {
            items: xs_children(n).map(particle).collect(),
            min,
            max,
        },
        other => panic!("unsupported particle {other}"),
    }
}

fn attribute(n: Node) -> Attr {
    let allowed = n.descendants().find(|d| d.has_tag_name((XS, "restriction"))).map(|r| {
        xs_children(r)
            .filter(|e| e.tag_name().name() == "enumeration")
            .map(|e| e.attribute("value").unwrap().to_string())
            .collect()
    });
    let ty = match n.descendants().find(|d| d.has_tag_name((XS, "restriction"))) {
        Some(r) => r.attribute("base").unwrap().to_string(),
        None => n.attribute("type").unwrap_or("xs:string").to_string(),
    };
    Attr {
        name: n.attribute("name").unwrap().to_string(),
        ty,
        required: n.attribute("use") == Some("required"),
        allowed,
    }
}

impl Schema {
    fn load(text: &str) -> Schema {
        let doc = Document::parse(text).expect("schema parses");
        let mut decls = HashMap::new();
        for el in xs_children(doc.root_element()) {
            assert_eq!(el.tag_name().name(), "element");
            let name = el.attribute("name").unwrap().to_string();
            let decl = match xs_children(el).find(|c| c.tag_name().name() == "complexType") {
                None => Decl {
                    content: None,
                    attrs: Vec::new(),
                },
                Some(ct) => Decl {
                    content: Some(
                        xs_children(ct)
                            .find(|c| matches!(c.tag_name().name(), "sequence" | "choice"))
                            .map(particle),
                    ),
                    attrs: xs_children(ct)
                        .filter(|c| c.tag_name().name() == "attribute")
                        .map(attribute)
                        .collect(),
                },
            };
            decls.insert(name, decl);
        }
        Schema { decls }
    }

    fn validate(&self, text: &str) -> Vec<String> {
        let doc = match Document::parse(text) {
            Ok(d) => d,
            Err(e) => return vec![format!("not well-formed: {e}")],
        };
        let mut v = Validation::default();
        let root = doc.root_element();
        if root.tag_name().name() != "Package" {
            v.errors.push(format!("root is {}", root.tag_name().name()));
        }
        self.element(root, &mut v);
        for (id, at) in &v.refs {
            if !v.ids.contains(id) {
                v.errors.push(format!("{at}: IDREF `{id}` does not resolve"));
            }
        }
        v.errors
    }

    fn element(&self, n: Node, v: &mut Validation) {
        let name = n.tag_name().name();
        let at = format!("{name}@{}", n.attribute("Id").unwrap_or("-"));
        if n.tag_name().namespace() != Some(XPDL) {
            v.errors
                .push(format!("{at}: wrong namespace {:?}", n.tag_name().namespace()));
        }
        let Some(decl) = self.decls.get(name) else {
            v.errors.push(format!("{at}: undeclared element"));
            return;
        };
        for a in n.attributes() {
            if a.namespace().is_some() {
                continue;
            }
            match decl.attrs.iter().find(|d| d.name == a.name()) {
                None => v.errors.push(format!("{at}: undeclared attribute {}", a.name())),
                Some(d) => check_value(d, a.value(), &at, v),
            }
        }
        for d in decl.attrs.iter().filter(|d| d.required) {
            if n.attribute(d.name.as_str()).is_none() {
                v.errors.push(format!("{at}: missing attribute {}", d.name));
            }
        }
        let kids: Vec<Node> = n.children().filter(|c| c.is_element()).collect();
        match &decl.content {
            None => {
                if !kids.is_empty() {
                    v.errors.push(format!("{at}: text element has children"));
                }
            }
            Some(content) => {
                if n.children()
                    .any(|c| c.is_text() && !c.text().unwrap_or("").trim().is_empty())
                {
                    v.errors.push(format!("{at}: unexpected text"));
                }
                let names: Vec<&str> = kids.iter().map(|k| k.tag_name().name()).collect();
                let ok = match content {
                    None => names.is_empty(),
                    Some(p) => ends(p, &names, 0).contains(&names.len()),
                };
                if !ok {
                    v.errors
                        .push(format!("{at}: children {names:?} do not match the content model"));
                }
                for k in kids {
                    self.element(k, v);
                }
            }
        }
    }
}

#[derive(Default)]
struct Validation {
    errors: Vec<String>,
    ids: HashSet<String>,
    refs: Vec<(String, String)>,
}

fn check_value(d: &Attr, value: &str, at: &str, v: &mut Validation) {
    let ok = match d.ty.as_str() {
        "xs:string" => true,
        "xs:integer" => value.parse::<i64>().is_ok(),
        "xs:boolean" => matches!(value, "true" | "false" | "1" | "0"),
        "xs:NMTOKEN" => !value.is_empty() && value.chars().all(|c| c.is_alphanumeric() || "-_.:".contains(c)),
        "xs:ID" | "xs:IDREF" => is_ncname(value),
        other => panic!("unsupported type {other}"),
    };
    if !ok {
        v.errors
            .push(format!("{at}: {}=`{value}` is not a valid {}", d.name, d.ty));
    }
    if let Some(allowed) = &d.allowed {
        if !allowed.iter().any(|a| a == value) {
            v.errors.push(format!("{at}: {}=`{value}` not in {allowed:?}", d.name));
        }
    }
    if d.ty == "xs:ID" && !v.ids.insert(value.to_string()) {
        v.errors.push(format!("{at}: duplicate ID `{value}`"));
    }
    if d.ty == "xs:IDREF" {
        v.refs.push((value.to_string(), at.to_string()));
    }
}

fn is_ncname(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || "-_.".contains(c))
}

/// Every position the particle can stop at when matching from `start`.
fn ends(p: &Particle, names: &[&str], start: usize) -> HashSet<usize> {
    let (min, max) = match p {
        Particle::Element { min, max, .. }
        | Particle::Sequence { min, max, .. }
        | Particle::Choice { min, max, .. } => (*min, *max),
    };
    let once = |from: usize| -> HashSet<usize> {
        match p {
            Particle::Element { name, .. } => {
                if names.get(from) == Some(&name.as_str()) {
                    HashSet::from([from + 1])
                } else {
                    HashSet::new()
                }
            }
            Particle::Sequence { items, .. } => items.iter().fold(HashSet::from([from]), |acc, item| {
                acc.into_iter().flat_map(|pos| ends(item, names, pos)).collect()
            }),
            Particle::Choice { items, .. } => items.iter().flat_map(|item| ends(item, names, from)).collect(),
        }
    };
    let mut out = HashSet::new();
    let mut frontier = HashSet::from([start]);
    let mut seen = HashSet::from([start]);
    let mut count = 0;
    loop {
        if count >= min {
            out.extend(frontier.iter().copied());
        }
        if max == Max::N(count) || frontier.is_empty() {
            break;
        }
        count += 1;
        let next: HashSet<usize> = frontier.iter().flat_map(|&f| once(f)).collect();
        // beyond the minimum, a repetition that consumes nothing adds nothing
        frontier = if count > min {
            next.into_iter().filter(|n| seen.insert(*n)).collect()
        } else {
            next
        };
    }
    out
}

fn schema() -> Schema {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/xpdl-subset.xsd");
    Schema::load(&std::fs::read_to_string(path).expect("schema file"))
}

fn assert_valid(schema: &Schema, xml: &str, what: &str) {
    let errors = schema.validate(xml);
    assert!(errors.is_empty(), "{what}:\n{}", errors.join("\n"));
}

#[test]
fn checker_rejects_broken_documents() {
    let s = schema();
    let doc = parse_clean(&corpus("report.chorda"));
    let xml = pipeline::skeleton(&doc).unwrap().render(Format::Xpdl).unwrap();
    assert!(s.validate(&xml).is_empty());

    let swapped = xml.replacen("<PackageHeader>", "<Bogus/><PackageHeader>", 1);
    assert!(s.validate(&swapped).iter().any(|e| e.contains("undeclared element")));
    let dangling = xml.replacen(
        "Participant=\"participant-cio\"",
        "Participant=\"participant-nobody\"",
        1,
    );
    assert!(s.validate(&dangling).iter().any(|e| e.contains("does not resolve")));
    let missing = xml.replacen(" BoundaryVisible=\"true\"", "", 1);
    assert!(s
        .validate(&missing)
        .iter()
        .any(|e| e.contains("missing attribute BoundaryVisible")));
    let duplicate = xml.replacen("Id=\"p2\"", "Id=\"p1\"", 1);
    assert!(s.validate(&duplicate).iter().any(|e| e.contains("duplicate ID")));
    let reordered = xml.replacen("<Event>", "<Event><StartEvent Trigger=\"None\"/>", 1);
    assert!(s.validate(&reordered).iter().any(|e| e.contains("content model")));
}

#[test]
fn corpus_exports_are_schema_valid() {
    let s = schema();
    for name in ["pct.chorda", "report.chorda", "cio.chorda", "cio_report.chorda"] {
        let doc = parse_clean(&corpus(name));
        if let Ok(g) = pipeline::skeleton(&doc) {
            assert_valid(&s, &g.render(Format::Xpdl).unwrap(), &format!("{name} skeleton"));
        }
        let g = pipeline::expanded(&doc, pipeline::BindingSource::ByName).expect(name);
        assert_valid(&s, &g.render(Format::Xpdl).unwrap(), &format!("{name} expanded"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn generated_exports_are_schema_valid(stmts in statements(14)) {
        let s = schema();
        let (_, sk, full) = generate_all(&stmts);
        let skeleton = render(&sk.model, &sk.links, Format::Xpdl).unwrap();
        let errors = s.validate(&skeleton);
        prop_assert!(errors.is_empty(), "{}", errors.join("\n"));
        let errors = s.validate(&full.render(Format::Xpdl).unwrap());
        prop_assert!(errors.is_empty(), "{}", errors.join("\n"));
    }
}
