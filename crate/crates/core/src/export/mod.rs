//! Layout and serializers: canonical JSON, XPDL and SVG.

pub mod json;
pub mod layout;
pub mod svg;
pub mod xpdl;

use std::fmt;
use std::str::FromStr;

use crate::model::{BpmnModel, TraceLink};

pub use json::{from_json, to_json, JsonError};
pub use layout::{check_geometry, layout, LayoutError, LayoutedDiagram, Point, Rect};
pub use svg::to_svg;
pub use xpdl::to_xpdl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Json,
    Xpdl,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Xpdl, Format::Svg];

    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Xpdl => "xpdl",
            Format::Svg => "svg",
        }
    }

    pub fn media_type(self) -> &'static str {
        match self {
            Format::Json => "application/json",
            Format::Xpdl => "application/xml",
            Format::Svg => "image/svg+xml",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "xpdl" | "xml" => Ok(Format::Xpdl),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (expected json, xpdl or svg)")),
        }
    }
}

/// Serializes `model` in `format`. JSON carries the links; the diagram
/// formats need a valid model for layout.
pub fn render(model: &BpmnModel, links: &[TraceLink], format: Format) -> Result<String, LayoutError> {
    Ok(match format {
        Format::Json => to_json(model, links),
        Format::Xpdl => to_xpdl(&layout(model)?),
        Format::Svg => to_svg(&layout(model)?),
    })
}
