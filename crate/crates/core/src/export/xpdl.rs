//! XPDL 2.1 subset writer. The accepted element set is pinned by
//! `docs/xpdl-subset.xsd`.
//!
//! Pools map to `Pool` + `WorkflowProcess`, tasks and events to
//! `Activity`, sub-processes to `BlockActivity` with an `ActivitySet`,
//! sequence flows to `Transition`, stores to `Artifact` with an
//! `Association` from the writing task.

use std::io;

use quick_xml::events::{BytesDecl, BytesText, Event};
use quick_xml::Writer;

use super::layout::{LayoutedDiagram, Point, Rect};
use crate::model::{FlowNode, NodeKind, Scope, SequenceFlow, TaskKind};

pub const XPDL_NAMESPACE: &str = "http://www.wfmc.org/2008/XPDL2.1";
const TOOL: &str = "chorda";

type W = Writer<Vec<u8>>;

pub fn to_xpdl(diagram: &LayoutedDiagram) -> String {
    to_xpdl_named(diagram, "collaboration")
}

pub fn to_xpdl_named(diagram: &LayoutedDiagram, package_name: &str) -> String {
    let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
    write_package(&mut w, diagram, package_name).expect("writing to a Vec cannot fail");
    let mut out = String::from_utf8(w.into_inner()).expect("writer emits UTF-8");
    out.push('\n');
    out
}

fn is_store(n: &FlowNode) -> bool {
    matches!(n.kind, NodeKind::Store { .. })
}

fn process_id(pool: &str) -> String {
    format!("{pool}-process")
}

/// Participant ids are slugs and may clash with element ids or start with
/// a digit, so they get a prefix in XPDL.
fn participant_ref(participant: &str) -> String {
    format!("participant-{participant}")
}

fn set_id(node: &str) -> String {
    format!("{node}-set")
}

fn write_package(w: &mut W, d: &LayoutedDiagram, package_name: &str) -> io::Result<()> {
    w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))?;
    let model = &d.model;
    w.create_element("Package")
        .with_attribute(("xmlns", XPDL_NAMESPACE))
        .with_attribute(("Id", "package"))
        .with_attribute(("Name", package_name))
        .write_inner_content(|w| {
            w.create_element("PackageHeader").write_inner_content(|w| {
                w.create_element("XPDLVersion")
                    .write_text_content(BytesText::new("2.1"))?;
                w.create_element("Vendor").write_text_content(BytesText::new(TOOL))?;
                Ok(())
            })?;

            list(w, "Participants", model.pools.is_empty(), |w| {
                for p in &model.pools {
                    let id = participant_ref(p.participant_id.as_str());
                    w.create_element("Participant")
                        .with_attribute(("Id", id.as_str()))
                        .with_attribute(("Name", p.name.as_str()))
                        .write_inner_content(|w| {
                            w.create_element("ParticipantType")
                                .with_attribute(("Type", "ROLE"))
                                .write_empty()?;
                            Ok(())
                        })?;
                }
                Ok(())
            })?;

            list(w, "Pools", model.pools.is_empty(), |w| {
                for p in &model.pools {
                    let pid = process_id(p.id.as_str());
                    let participant = participant_ref(p.participant_id.as_str());
                    w.create_element("Pool")
                        .with_attribute(("Id", p.id.as_str()))
                        .with_attribute(("Name", p.name.as_str()))
                        .with_attribute(("Process", pid.as_str()))
                        .with_attribute(("Participant", participant.as_str()))
                        .with_attribute(("BoundaryVisible", "true"))
                        .write_inner_content(|w| node_graphics(w, &d.geometry[p.id.as_str()]))?;
                }
                Ok(())
            })?;

            list(w, "MessageFlows", model.message_flows.is_empty(), |w| {
                for f in &model.message_flows {
                    let msg = format!("{}-message", f.id);
                    w.create_element("MessageFlow")
                        .with_attribute(("Id", f.id.as_str()))
                        .with_attribute(("Name", f.label.as_str()))
                        .with_attribute(("Source", f.source.as_str()))
                        .with_attribute(("Target", f.target.as_str()))
                        .write_inner_content(|w| {
                            w.create_element("Message")
                                .with_attribute(("Id", msg.as_str()))
                                .with_attribute(("Name", f.label.as_str()))
                                .write_empty()?;
                            connector_graphics(w, &d.waypoints[f.id.as_str()])
                        })?;
                }
                Ok(())
            })?;

            let mut stores: Vec<&FlowNode> = Vec::new();
            let mut store_flows: Vec<&SequenceFlow> = Vec::new();
            for p in &model.pools {
                collect_stores(p.scope(), &mut stores, &mut store_flows);
            }
            if !store_flows.is_empty() {
                w.create_element("Associations").write_inner_content(|w| {
                    for f in &store_flows {
                        w.create_element("Association")
                            .with_attribute(("Id", f.id.as_str()))
                            .with_attribute(("Source", f.source.as_str()))
                            .with_attribute(("Target", f.target.as_str()))
                            .with_attribute(("AssociationDirection", "To"))
                            .write_inner_content(|w| connector_graphics(w, &d.waypoints[f.id.as_str()]))?;
                    }
                    Ok(())
                })?;
            }
            if !stores.is_empty() {
                w.create_element("Artifacts").write_inner_content(|w| {
                    for s in &stores {
                        let NodeKind::Store { name, data_object_id } = &s.kind else {
                            continue;
                        };
                        let data_id = format!("{}-data", s.id);
                        w.create_element("Artifact")
                            .with_attribute(("Id", s.id.as_str()))
                            .with_attribute(("ArtifactType", "DataObject"))
                            .with_attribute(("Name", name.as_str()))
                            .write_inner_content(|w| {
                                w.create_element("DataObject")
                                    .with_attribute(("Id", data_id.as_str()))
                                    .with_attribute(("Name", data_object_id.as_str()))
                                    .write_empty()?;
                                extended_attributes(w, &[("store", "true")], s)?;
                                node_graphics(w, &d.geometry[s.id.as_str()])
                            })?;
                    }
                    Ok(())
                })?;
            }

            list(w, "WorkflowProcesses", model.pools.is_empty(), |w| {
                for p in &model.pools {
                    let pid = process_id(p.id.as_str());
                    w.create_element("WorkflowProcess")
                        .with_attribute(("Id", pid.as_str()))
                        .with_attribute(("Name", p.name.as_str()))
                        .write_inner_content(|w| {
                            w.create_element("ProcessHeader").write_empty()?;
                            let mut sets = Vec::new();
                            collect_sets(p.scope(), &mut sets);
                            if !sets.is_empty() {
                                w.create_element("ActivitySets").write_inner_content(|w| {
                                    for (node, scope) in &sets {
                                        let id = set_id(node.id.as_str());
                                        w.create_element("ActivitySet")
                                            .with_attribute(("Id", id.as_str()))
                                            .with_attribute(("Name", node.name()))
                                            .write_inner_content(|w| scope_body(w, d, *scope))?;
                                    }
                                    Ok(())
                                })?;
                            }
                            scope_body(w, d, p.scope())
                        })?;
                }
                Ok(())
            })?;
            Ok(())
        })?;
    Ok(())
}

/// Container element, self-closing when it has no children.
fn list<F>(w: &mut W, name: &str, empty: bool, body: F) -> io::Result<()>
where
    F: FnOnce(&mut W) -> io::Result<()>,
{
    if empty {
        w.create_element(name).write_empty()?;
    } else {
        w.create_element(name).write_inner_content(body)?;
    }
    Ok(())
}

fn collect_stores<'a>(scope: Scope<'a>, stores: &mut Vec<&'a FlowNode>, flows: &mut Vec<&'a SequenceFlow>) {
    for n in scope.nodes.iter().filter(|n| is_store(n)) {
        stores.push(n);
    }
    for f in scope.flows {
        if scope.nodes.iter().any(|n| n.id == f.target && is_store(n)) {
            flows.push(f);
        }
    }
    for (_, child) in scope.children() {
        collect_stores(child, stores, flows);
    }
}

/// Expanded sub-processes at any depth, parents first.
fn collect_sets<'a>(scope: Scope<'a>, out: &mut Vec<(&'a FlowNode, Scope<'a>)>) {
    for (node, child) in scope.children() {
        if !child.nodes.is_empty() {
            out.push((node, child));
            collect_sets(child, out);
        }
    }
}

fn scope_body(w: &mut W, d: &LayoutedDiagram, scope: Scope<'_>) -> io::Result<()> {
    let activities: Vec<&FlowNode> = scope.nodes.iter().filter(|n| !is_store(n)).collect();
    let transitions: Vec<&SequenceFlow> = scope
        .flows
        .iter()
        .filter(|f| !scope.nodes.iter().any(|n| n.id == f.target && is_store(n)))
        .collect();
    list(w, "Activities", activities.is_empty(), |w| {
        for n in &activities {
            activity(w, d, n)?;
        }
        Ok(())
    })?;
    list(w, "Transitions", transitions.is_empty(), |w| {
        for f in &transitions {
            w.create_element("Transition")
                .with_attribute(("Id", f.id.as_str()))
                .with_attribute(("From", f.source.as_str()))
                .with_attribute(("To", f.target.as_str()))
                .write_inner_content(|w| connector_graphics(w, &d.waypoints[f.id.as_str()]))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn activity(w: &mut W, d: &LayoutedDiagram, n: &FlowNode) -> io::Result<()> {
    w.create_element("Activity")
        .with_attribute(("Id", n.id.as_str()))
        .with_attribute(("Name", n.name()))
        .write_inner_content(|w| {
            match &n.kind {
                NodeKind::StartEvent | NodeKind::EndEvent => {
                    let tag = if n.kind == NodeKind::StartEvent {
                        "StartEvent"
                    } else {
                        "EndEvent"
                    };
                    w.create_element("Event").write_inner_content(|w| {
                        w.create_element(tag)
                            .with_attribute(("Trigger", "None"))
                            .write_empty()?;
                        Ok(())
                    })?;
                }
                NodeKind::Task { kind, .. } => {
                    w.create_element("Implementation").write_inner_content(|w| {
                        w.create_element("Task").write_inner_content(|w| {
                            match kind {
                                TaskKind::Send => {
                                    w.create_element("TaskSend").write_empty()?;
                                }
                                TaskKind::Receive => {
                                    w.create_element("TaskReceive").write_empty()?;
                                }
                                TaskKind::Generic => {}
                            }
                            Ok(())
                        })?;
                        Ok(())
                    })?;
                }
                NodeKind::SubProcess(sp) => {
                    let set = set_id(n.id.as_str());
                    let mut e = w.create_element("BlockActivity");
                    if !sp.is_collapsed() {
                        e = e.with_attribute(("ActivitySetId", set.as_str()));
                    }
                    e.with_attribute(("View", if sp.is_collapsed() { "COLLAPSED" } else { "EXPANDED" }))
                        .write_empty()?;
                }
                NodeKind::Store { .. } => unreachable!("stores are artifacts"),
            }
            extended_attributes(w, &[], n)?;
            node_graphics(w, &d.geometry[n.id.as_str()])
        })?;
    Ok(())
}

fn extended_attributes(w: &mut W, extra: &[(&str, &str)], n: &FlowNode) -> io::Result<()> {
    if extra.is_empty() && n.attributes.is_empty() {
        return Ok(());
    }
    w.create_element("ExtendedAttributes").write_inner_content(|w| {
        for (k, v) in extra
            .iter()
            .copied()
            .chain(n.attributes.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        {
            w.create_element("ExtendedAttribute")
                .with_attribute(("Name", k))
                .with_attribute(("Value", v))
                .write_empty()?;
        }
        Ok(())
    })?;
    Ok(())
}

fn node_graphics(w: &mut W, r: &Rect) -> io::Result<()> {
    w.create_element("NodeGraphicsInfos").write_inner_content(|w| {
        w.create_element("NodeGraphicsInfo")
            .with_attribute(("ToolId", TOOL))
            .with_attribute(("Width", r.width.to_string().as_str()))
            .with_attribute(("Height", r.height.to_string().as_str()))
            .write_inner_content(|w| coordinates(w, Point { x: r.x, y: r.y }))?;
        Ok(())
    })?;
    Ok(())
}

fn connector_graphics(w: &mut W, points: &[Point]) -> io::Result<()> {
    w.create_element("ConnectorGraphicsInfos").write_inner_content(|w| {
        w.create_element("ConnectorGraphicsInfo")
            .with_attribute(("ToolId", TOOL))
            .write_inner_content(|w| {
                for p in points {
                    coordinates(w, *p)?;
                }
                Ok(())
            })?;
        Ok(())
    })?;
    Ok(())
}

fn coordinates(w: &mut W, p: Point) -> io::Result<()> {
    w.create_element("Coordinates")
        .with_attribute(("XCoordinate", p.x.to_string().as_str()))
        .with_attribute(("YCoordinate", p.y.to_string().as_str()))
        .write_empty()?;
    Ok(())
}
