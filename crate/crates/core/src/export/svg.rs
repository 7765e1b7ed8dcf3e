//! SVG rendering with BPMN-style glyphs.

use std::fmt::Write as _;

use super::layout::{LayoutedDiagram, Point, Rect};
use crate::model::{FlowNode, NodeKind, Scope, TaskKind};

const MARGIN: i64 = 10;
const FONT_SIZE: i64 = 12;
const LINE_HEIGHT: i64 = 14;
const MARKER: i64 = 14;
const DASH: &str = "6 4";

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Greedy word wrap at `width` characters. Long words are kept whole.
fn wrap(text: &str, width: usize) -> Vec<String> {
    let mut lines: Vec<String> = Vec::new();
    let mut cur = String::new();
    for word in text.split_whitespace() {
        if !cur.is_empty() && cur.chars().count() + 1 + word.chars().count() > width {
            lines.push(std::mem::take(&mut cur));
        }
        if !cur.is_empty() {
            cur.push(' ');
        }
        cur.push_str(word);
    }
    if !cur.is_empty() {
        lines.push(cur);
    }
    lines
}

fn text_block(out: &mut String, cx: i64, top: i64, lines: &[String]) {
    if lines.is_empty() {
        return;
    }
    let _ = write!(
        out,
        r#"<text x="{cx}" y="{}" font-family="sans-serif" font-size="{FONT_SIZE}" text-anchor="middle">"#,
        top + FONT_SIZE
    );
    for (i, l) in lines.iter().enumerate() {
        let dy = if i == 0 { 0 } else { LINE_HEIGHT };
        let _ = write!(out, r#"<tspan x="{cx}" dy="{dy}">{}</tspan>"#, escape(l));
    }
    out.push_str("</text>");
}

/// Centred multi-line label inside `r`.
fn centred_label(out: &mut String, r: &Rect, text: &str) {
    let chars = ((r.width - 10) / 7).max(4) as usize;
    let lines = wrap(text, chars);
    let block = lines.len() as i64 * LINE_HEIGHT;
    let c = r.center();
    text_block(out, c.x, c.y - block / 2 - 2, &lines);
}

fn path_data(points: &[Point]) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(d, "{}{},{}", if i == 0 { "M" } else { " L" }, p.x, p.y);
    }
    d
}

pub fn to_svg(d: &LayoutedDiagram) -> String {
    let (w, h) = (d.width + 2 * MARGIN, d.height + 2 * MARGIN);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="{} {} {w} {h}">"#,
        -MARGIN, -MARGIN
    );
    out.push_str(concat!(
        r#"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="8" markerHeight="8" orient="auto">"#,
        r##"<path d="M0,0 L10,5 L0,10 z" fill="#000"/></marker>"##,
        r#"<marker id="open-arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="8" markerHeight="8" orient="auto">"#,
        r##"<path d="M0,0 L10,5 L0,10 z" fill="#fff" stroke="#000"/></marker>"##,
        r#"<marker id="origin" viewBox="0 0 10 10" refX="5" refY="5" markerWidth="6" markerHeight="6">"#,
        r##"<circle cx="5" cy="5" r="4" fill="#fff" stroke="#000"/></marker></defs>"##,
        "\n"
    ));

    for pool in &d.model.pools {
        let r = d.geometry[pool.id.as_str()];
        let _ = write!(
            out,
            r##"<g class="pool" data-id="{}"><rect x="{}" y="{}" width="{}" height="{}" fill="#fff" stroke="#000"/>"##,
            escape(pool.id.as_str()),
            r.x,
            r.y,
            r.width,
            r.height
        );
        let _ = write!(
            out,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#000"/>"##,
            r.y,
            r.bottom(),
            x = r.x + super::layout::POOL_HEADER
        );
        let (cx, cy) = (r.x + super::layout::POOL_HEADER / 2, r.y + r.height / 2);
        let _ = write!(
            out,
            r#"<text x="{cx}" y="{cy}" font-family="sans-serif" font-size="{FONT_SIZE}" text-anchor="middle" dominant-baseline="middle" transform="rotate(-90 {cx} {cy})">{}</text>"#,
            escape(&pool.name)
        );
        out.push('\n');
        scope(&mut out, d, pool.scope());
        out.push_str("</g>\n");
    }

    for f in &d.model.message_flows {
        let pts = &d.waypoints[f.id.as_str()];
        let _ = write!(
            out,
            r##"<g class="message-flow" data-id="{}"><path d="{}" fill="none" stroke="#000" stroke-dasharray="{DASH}" marker-start="url(#origin)" marker-end="url(#open-arrow)"/>"##,
            escape(f.id.as_str()),
            path_data(pts)
        );
        if pts.len() >= 2 && !f.label.is_empty() {
            // label on the longest horizontal segment
            let seg = pts
                .windows(2)
                .filter(|s| s[0].y == s[1].y)
                .max_by_key(|s| (s[0].x - s[1].x).abs())
                .unwrap_or(&pts[..2]);
            let x = (seg[0].x + seg[1].x) / 2;
            let y = (seg[0].y + seg[1].y) / 2 - 4;
            let _ = write!(
                out,
                r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="{}" text-anchor="middle">{}</text>"#,
                FONT_SIZE - 2,
                escape(&f.label)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn scope(out: &mut String, d: &LayoutedDiagram, s: Scope<'_>) {
    for n in s.nodes {
        node(out, d, n);
    }
    for f in s.flows {
        let _ = writeln!(
            out,
            r##"<path class="sequence-flow" data-id="{}" d="{}" fill="none" stroke="#000" marker-end="url(#arrow)"/>"##,
            escape(f.id.as_str()),
            path_data(&d.waypoints[f.id.as_str()])
        );
    }
}

fn title(out: &mut String, n: &FlowNode) {
    if let Some(note) = n.attributes.get("note") {
        let _ = write!(out, "<title>{}</title>", escape(note));
    }
}

fn node(out: &mut String, d: &LayoutedDiagram, n: &FlowNode) {
    let r = d.geometry[n.id.as_str()];
    let id = escape(n.id.as_str());
    match &n.kind {
        NodeKind::StartEvent | NodeKind::EndEvent => {
            let (class, stroke) = if n.kind == NodeKind::StartEvent {
                ("start-event", 1)
            } else {
                ("end-event", 2)
            };
            let c = r.center();
            let _ = write!(out, r##"<g class="{class}" data-id="{id}">"##);
            title(out, n);
            let _ = writeln!(
                out,
                r##"<circle cx="{}" cy="{}" r="{}" fill="#fff" stroke="#000" stroke-width="{stroke}"/></g>"##,
                c.x,
                c.y,
                r.width / 2
            );
        }
        NodeKind::Task { name, kind } => {
            let class = match kind {
                TaskKind::Send => "task send-task",
                TaskKind::Receive => "task receive-task",
                TaskKind::Generic => "task",
            };
            let _ = write!(out, r#"<g class="{class}" data-id="{id}">"#);
            title(out, n);
            rounded(out, &r);
            if *kind != TaskKind::Generic {
                envelope(out, r.x + 6, r.y + 6, *kind == TaskKind::Send);
            }
            centred_label(out, &r, name);
            out.push_str("</g>\n");
        }
        NodeKind::SubProcess(sp) if sp.is_collapsed() => {
            let _ = write!(out, r#"<g class="sub-process collapsed" data-id="{id}">"#);
            title(out, n);
            rounded(out, &r);
            let mx = r.x + (r.width - MARKER) / 2;
            let my = r.bottom() - MARKER - 2;
            let _ = write!(
                out,
                r##"<g class="collapse-marker"><rect x="{mx}" y="{my}" width="{MARKER}" height="{MARKER}" fill="#fff" stroke="#000"/><path d="M{},{} h{} M{},{} v{}" stroke="#000"/></g>"##,
                mx + 3,
                my + MARKER / 2,
                MARKER - 6,
                mx + MARKER / 2,
                my + 3,
                MARKER - 6
            );
            centred_label(
                out,
                &Rect {
                    height: r.height - MARKER,
                    ..r
                },
                &sp.name,
            );
            out.push_str("</g>\n");
        }
        NodeKind::SubProcess(sp) => {
            let _ = write!(out, r#"<g class="sub-process expanded" data-id="{id}">"#);
            title(out, n);
            rounded(out, &r);
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="{FONT_SIZE}">{}</text>"#,
                r.x + 6,
                r.y + FONT_SIZE + 2,
                escape(&sp.name)
            );
            scope(
                out,
                d,
                Scope {
                    nodes: &sp.nodes,
                    flows: &sp.sequence_flows,
                },
            );
            out.push_str("</g>\n");
        }
        NodeKind::Store { name, .. } => {
            let _ = write!(out, r#"<g class="store" data-id="{id}">"#);
            title(out, n);
            // open on the right
            let _ = write!(
                out,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#fff" stroke="none"/><path d="M{},{} h{} M{},{} v{} h{}" fill="none" stroke="#000"/>"##,
                r.x, r.y, r.width, r.height, r.x, r.y, r.width, r.x, r.y, r.height, r.width
            );
            centred_label(out, &r, name);
            out.push_str("</g>\n");
        }
    }
}

fn rounded(out: &mut String, r: &Rect) {
    let _ = write!(
        out,
        r##"<rect x="{}" y="{}" width="{}" height="{}" rx="10" ry="10" fill="#fff" stroke="#000"/>"##,
        r.x, r.y, r.width, r.height
    );
}

fn envelope(out: &mut String, x: i64, y: i64, filled: bool) {
    let (w, h) = (16, 11);
    let (fill, line) = if filled { ("#000", "#fff") } else { ("#fff", "#000") };
    let _ = write!(
        out,
        r##"<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="{fill}" stroke="#000"/><path d="M{x},{y} L{},{} L{},{y}" fill="none" stroke="{line}"/>"##,
        x + w / 2,
        y + h / 2,
        x + w
    );
}
