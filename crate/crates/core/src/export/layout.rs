//! Deterministic auto-layout in abstract units.
//!
//! Pools are stacked top to bottom in model order and share one width.
//! Inside a scope the non-store nodes form a single left-to-right row in
//! topological order of the sequence flows; stores sit in a second row
//! under the task that writes them. Sub-processes are sized to their
//! content plus padding.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::natural_cmp;
use crate::model::{validate_model, BpmnModel, FlowNode, NodeKind, Scope, Violation};

pub const TASK_SIZE: (i64, i64) = (120, 60);
pub const EVENT_SIZE: (i64, i64) = (30, 30);
pub const STORE_SIZE: (i64, i64) = (50, 40);
pub const H_GAP: i64 = 40;
pub const PADDING: i64 = 20;
pub const POOL_HEADER: i64 = 30;
pub const POOL_GAP: i64 = 40;
pub const STORE_GAP: i64 = 20;
const MIN_POOL_CONTENT: (i64, i64) = (120, 60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: i64,
    pub y: i64,
    pub width: i64,
    pub height: i64,
}

impl Rect {
    pub fn right(&self) -> i64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> i64 {
        self.y + self.height
    }

    pub fn center(&self) -> Point {
        Point {
            x: self.x + self.width / 2,
            y: self.y + self.height / 2,
        }
    }

    pub fn contains(&self, other: &Rect) -> bool {
        other.x >= self.x && other.y >= self.y && other.right() <= self.right() && other.bottom() <= self.bottom()
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.right() && other.x < self.right() && self.y < other.bottom() && other.y < self.bottom()
    }

    fn shifted(self, dx: i64, dy: i64) -> Rect {
        Rect {
            x: self.x + dx,
            y: self.y + dy,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutedDiagram {
    pub model: BpmnModel,
    /// Pool and node rectangles keyed by element id.
    pub geometry: BTreeMap<String, Rect>,
    /// Sequence and message flow polylines keyed by flow id.
    pub waypoints: BTreeMap<String, Vec<Point>>,
    pub width: i64,
    pub height: i64,
}

impl LayoutedDiagram {
    pub fn rect(&self, id: &str) -> Option<&Rect> {
        self.geometry.get(id)
    }
}

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("model is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Violation>),
}

pub fn node_size(node: &FlowNode) -> (i64, i64) {
    match &node.kind {
        NodeKind::StartEvent | NodeKind::EndEvent => EVENT_SIZE,
        NodeKind::Task { .. } => TASK_SIZE,
        NodeKind::Store { .. } => STORE_SIZE,
        NodeKind::SubProcess(sp) if sp.is_collapsed() => TASK_SIZE,
        NodeKind::SubProcess(sp) => {
            let c = ScopeLayout::new(Scope {
                nodes: &sp.nodes,
                flows: &sp.sequence_flows,
            });
            (c.width + 2 * PADDING, c.height + 2 * PADDING)
        }
    }
}

/// Relative placement of one scope's nodes; children are laid out
/// recursively when the scope is placed.
struct ScopeLayout<'a> {
    width: i64,
    height: i64,
    placed: Vec<(&'a FlowNode, Rect)>,
}

/// Kahn's algorithm; among ready nodes the smallest id (natural order)
/// goes first. Nodes left over by a cycle are appended in id order.
fn topological<'a>(nodes: &[&'a FlowNode], scope: Scope<'a>) -> Vec<&'a FlowNode> {
    let index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut indegree = vec![0usize; nodes.len()];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for f in scope.flows {
        if let (Some(&s), Some(&t)) = (index.get(f.source.as_str()), index.get(f.target.as_str())) {
            succ[s].push(t);
            indegree[t] += 1;
        }
    }
    let mut done = vec![false; nodes.len()];
    let mut ready: Vec<usize> = (0..nodes.len()).filter(|&i| indegree[i] == 0).collect();
    let mut out = Vec::with_capacity(nodes.len());
    while !ready.is_empty() {
        ready.sort_by(|&a, &b| natural_cmp(nodes[b].id.as_str(), nodes[a].id.as_str()));
        let i = ready.pop().unwrap();
        done[i] = true;
        out.push(nodes[i]);
        for &t in &succ[i] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.push(t);
            }
        }
    }
    let mut rest: Vec<&FlowNode> = (0..nodes.len()).filter(|&i| !done[i]).map(|i| nodes[i]).collect();
    rest.sort_by(|a, b| natural_cmp(a.id.as_str(), b.id.as_str()));
    out.extend(rest);
    out
}

impl<'a> ScopeLayout<'a> {
    fn new(scope: Scope<'a>) -> Self {
        let (stores, main): (Vec<&FlowNode>, Vec<&FlowNode>) = scope
            .nodes
            .iter()
            .partition(|n| matches!(n.kind, NodeKind::Store { .. }));
        let ordered = topological(&main, scope);
        let sizes: Vec<(i64, i64)> = ordered.iter().map(|n| node_size(n)).collect();
        let row_height = sizes.iter().map(|s| s.1).max().unwrap_or(0);

        let mut placed = Vec::new();
        let mut x = 0;
        for (n, (w, h)) in ordered.iter().zip(&sizes) {
            placed.push((
                *n,
                Rect {
                    x,
                    y: (row_height - h) / 2,
                    width: *w,
                    height: *h,
                },
            ));
            x += w + H_GAP;
        }
        let mut width = (x - H_GAP).max(0);
        let mut height = row_height;

        if !stores.is_empty() {
            let writer: HashMap<&str, &str> = scope
                .flows
                .iter()
                .map(|f| (f.target.as_str(), f.source.as_str()))
                .collect();
            let anchor = |id: &str| -> Option<Rect> {
                let src = writer.get(id)?;
                placed.iter().find(|(n, _)| n.id.as_str() == *src).map(|(_, r)| *r)
            };
            let mut row: Vec<(&FlowNode, i64)> = stores
                .iter()
                .map(|s| {
                    let x = anchor(s.id.as_str())
                        .map(|r| r.x + (r.width - STORE_SIZE.0) / 2)
                        .unwrap_or(i64::MAX);
                    (*s, x)
                })
                .collect();
            row.sort_by(|a, b| {
                a.1.cmp(&b.1)
                    .then_with(|| natural_cmp(a.0.id.as_str(), b.0.id.as_str()))
            });
            let y = row_height + STORE_GAP;
            let mut min_x = 0;
            let mut store_rects = Vec::new();
            for (s, want) in row {
                let x = if want == i64::MAX { min_x } else { want.max(min_x) };
                store_rects.push((
                    s,
                    Rect {
                        x,
                        y,
                        width: STORE_SIZE.0,
                        height: STORE_SIZE.1,
                    },
                ));
                min_x = x + STORE_SIZE.0 + H_GAP;
            }
            width = width.max(min_x - H_GAP);
            height = y + STORE_SIZE.1;
            placed.extend(store_rects);
        }

        ScopeLayout { width, height, placed }
    }
}

struct Builder {
    geometry: BTreeMap<String, Rect>,
}

impl Builder {
    /// Places `scope` with its content's top-left corner at (ox, oy).
    fn place(&mut self, scope: Scope<'_>, ox: i64, oy: i64) {
        let layout = ScopeLayout::new(scope);
        for (node, rel) in layout.placed {
            let abs = rel.shifted(ox, oy);
            self.geometry.insert(node.id.0.clone(), abs);
            if let Some(sp) = node.sub_process() {
                if !sp.is_collapsed() {
                    self.place(
                        Scope {
                            nodes: &sp.nodes,
                            flows: &sp.sequence_flows,
                        },
                        abs.x + PADDING,
                        abs.y + PADDING,
                    );
                }
            }
        }
    }
}

pub fn layout(model: &BpmnModel) -> Result<LayoutedDiagram, LayoutError> {
    let violations = validate_model(model);
    if !violations.is_empty() {
        return Err(LayoutError::InvalidModel(violations));
    }

    let contents: Vec<(i64, i64)> = model
        .pools
        .iter()
        .map(|p| {
            let l = ScopeLayout::new(p.scope());
            (l.width.max(MIN_POOL_CONTENT.0), l.height.max(MIN_POOL_CONTENT.1))
        })
        .collect();
    let pool_width = contents
        .iter()
        .map(|(w, _)| POOL_HEADER + w + 2 * PADDING)
        .max()
        .unwrap_or(0);

    let mut b = Builder {
        geometry: BTreeMap::new(),
    };
    let mut y = 0;
    for (pool, (_, h)) in model.pools.iter().zip(&contents) {
        let rect = Rect {
            x: 0,
            y,
            width: pool_width,
            height: h + 2 * PADDING,
        };
        b.geometry.insert(pool.id.0.clone(), rect);
        // centre the row vertically in the pool band
        let inner = ScopeLayout::new(pool.scope()).height;
        b.place(pool.scope(), POOL_HEADER + PADDING, y + PADDING + (h - inner) / 2);
        y += rect.height + POOL_GAP;
    }
    let height = if model.pools.is_empty() { 0 } else { y - POOL_GAP };

    let mut waypoints = BTreeMap::new();
    for f in model.sequence_flows() {
        let (s, t) = (b.geometry[f.source.as_str()], b.geometry[f.target.as_str()]);
        waypoints.insert(f.id.0.clone(), sequence_route(&s, &t));
    }
    for f in &model.message_flows {
        let (s, t) = (b.geometry[f.source.as_str()], b.geometry[f.target.as_str()]);
        let target_pool = model
            .pool_of_node(&f.target)
            .map(|p| b.geometry[p.id.as_str()])
            .expect("validated message flow target");
        waypoints.insert(f.id.0.clone(), message_route(&s, &t, &target_pool));
    }

    Ok(LayoutedDiagram {
        model: model.clone(),
        geometry: b.geometry,
        waypoints,
        width: pool_width,
        height,
    })
}

fn simplify(points: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() == Some(&p) {
            continue;
        }
        if out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            if (a.x == b.x && b.x == p.x) || (a.y == b.y && b.y == p.y) {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

fn sequence_route(s: &Rect, t: &Rect) -> Vec<Point> {
    let (sc, tc) = (s.center(), t.center());
    if t.x >= s.right() {
        let mid = (s.right() + t.x) / 2;
        simplify(vec![
            Point { x: s.right(), y: sc.y },
            Point { x: mid, y: sc.y },
            Point { x: mid, y: tc.y },
            Point { x: t.x, y: tc.y },
        ])
    } else if t.y >= s.bottom() {
        let mid = (s.bottom() + t.y) / 2;
        simplify(vec![
            Point { x: sc.x, y: s.bottom() },
            Point { x: sc.x, y: mid },
            Point { x: tc.x, y: mid },
            Point { x: tc.x, y: t.y },
        ])
    } else {
        // backwards edge: loop over the top
        let top = s.y.min(t.y) - PADDING / 2;
        simplify(vec![
            Point { x: sc.x, y: s.y },
            Point { x: sc.x, y: top },
            Point { x: tc.x, y: top },
            Point { x: tc.x, y: t.y },
        ])
    }
}

/// Vertical out of the source, horizontal inside the gap next to the
/// target pool, vertical into the target.
fn message_route(s: &Rect, t: &Rect, target_pool: &Rect) -> Vec<Point> {
    let (sc, tc) = (s.center(), t.center());
    if t.y >= s.bottom() {
        let lane = target_pool.y - POOL_GAP / 2;
        simplify(vec![
            Point { x: sc.x, y: s.bottom() },
            Point { x: sc.x, y: lane },
            Point { x: tc.x, y: lane },
            Point { x: tc.x, y: t.y },
        ])
    } else {
        let lane = target_pool.bottom() + POOL_GAP / 2;
        simplify(vec![
            Point { x: sc.x, y: s.y },
            Point { x: sc.x, y: lane },
            Point { x: tc.x, y: lane },
            Point { x: tc.x, y: t.bottom() },
        ])
    }
}

/// Geometric invariants: every element placed, children inside parents,
/// siblings disjoint. Returns human-readable problems.
pub fn check_geometry(d: &LayoutedDiagram) -> Vec<String> {
    fn scope(d: &LayoutedDiagram, parent: &Rect, s: Scope<'_>, out: &mut Vec<String>) {
        let rects: Vec<(&str, Option<&Rect>)> =
            s.nodes.iter().map(|n| (n.id.as_str(), d.rect(n.id.as_str()))).collect();
        for (i, (id, r)) in rects.iter().enumerate() {
            let Some(r) = r else {
                out.push(format!("{id} has no geometry"));
                continue;
            };
            if !parent.contains(r) {
                out.push(format!("{id} escapes its container"));
            }
            for (other, o) in &rects[i + 1..] {
                if let Some(o) = o {
                    if r.overlaps(o) {
                        out.push(format!("{id} overlaps {other}"));
                    }
                }
            }
        }
        for (node, child) in s.children() {
            if let Some(r) = d.rect(node.id.as_str()) {
                scope(d, r, child, out);
            }
        }
    }
    let mut out = Vec::new();
    for (i, p) in d.model.pools.iter().enumerate() {
        let Some(r) = d.rect(p.id.as_str()) else {
            out.push(format!("{} has no geometry", p.id));
            continue;
        };
        for q in &d.model.pools[i + 1..] {
            if let Some(o) = d.rect(q.id.as_str()) {
                if r.overlaps(o) {
                    out.push(format!("{} overlaps {}", p.id, q.id));
                }
            }
        }
        scope(d, r, p.scope(), &mut out);
    }
    for f in d.model.sequence_flows() {
        if d.waypoints.get(f.id.as_str()).is_none_or(|w| w.len() < 2) {
            out.push(format!("{} has no route", f.id));
        }
    }
    for f in &d.model.message_flows {
        if d.waypoints.get(f.id.as_str()).is_none_or(|w| w.len() < 2) {
            out.push(format!("{} has no route", f.id));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::report_skeleton;

    #[test]
    fn empty_model_has_no_geometry() {
        let d = layout(&BpmnModel::default()).unwrap();
        assert!(d.geometry.is_empty());
        assert!(d.waypoints.is_empty());
        assert_eq!((d.width, d.height), (0, 0));
    }

    #[test]
    fn report_skeleton_shape() {
        let d = layout(&report_skeleton()).unwrap();
        assert!(check_geometry(&d).is_empty(), "{:?}", check_geometry(&d));
        let (p1, p2) = (d.geometry["p1"], d.geometry["p2"]);
        assert!(p1.bottom() < p2.y);
        assert_eq!(p1.width, p2.width);
        let (recv, process) = (d.geometry["n4"], d.geometry["n5"]);
        assert!(recv.right() < process.x);
        assert_eq!(recv.y, process.y);
        assert_eq!((d.geometry["n1"].width, d.geometry["n1"].height), EVENT_SIZE);
        // message flow goes down from Send into Receive
        let w = &d.waypoints["f1"];
        assert_eq!(w.first().unwrap().y, d.geometry["n3"].bottom());
        assert_eq!(w.last().unwrap().y, recv.y);
        assert!(w.windows(2).all(|s| s[0].x == s[1].x || s[0].y == s[1].y));
    }

    #[test]
    fn invalid_model_is_rejected() {
        let mut m = report_skeleton();
        m.pools[0].sequence_flows.clear();
        assert!(layout(&m).is_err());
    }

    #[test]
    fn simplify_drops_collinear_points() {
        let p = |x, y| Point { x, y };
        assert_eq!(
            simplify(vec![p(0, 0), p(5, 0), p(5, 0), p(9, 0)]),
            vec![p(0, 0), p(9, 0)]
        );
    }
}
