//! Python module `chorda`: parse requirement markup, generate skeleton and
//! expanded models, check coverage and export.

use chorda_core::pipeline::{self, BindingSource, Generated, PipelineError};
use chorda_core::{
    from_json, parse_document, serialize_document, suggestions, validate_classification, validate_model,
    CoverageReport, Format, GroupBinding, ParseDiagnostic, RequirementsDocument,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

pyo3::create_exception!(
    chorda,
    ChordaError,
    PyValueError,
    "Parse, classification or generation failure."
);

fn lines(e: &PipelineError) -> String {
    match e {
        PipelineError::Parse(d) => d
            .iter()
            .filter(|d| d.is_error())
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("\n"),
        PipelineError::NotReady(issues) => issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n"),
        other => other.to_string(),
    }
}

fn fail(e: PipelineError) -> PyErr {
    ChordaError::new_err(lines(&e))
}

fn format(name: &str) -> PyResult<Format> {
    name.parse().map_err(PyValueError::new_err)
}

/// A parsed requirements document.
#[pyclass(module = "chorda", name = "Document", frozen)]
pub struct Document {
    inner: RequirementsDocument,
    diagnostics: Vec<ParseDiagnostic>,
}

#[pymethods]
impl Document {
    /// Parses markup. Raises `ChordaError` when it contains errors.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Document> {
        let out = parse_document(text);
        if out.has_errors() {
            return Err(fail(PipelineError::Parse(out.diagnostics)));
        }
        Ok(Document {
            inner: out.document,
            diagnostics: out.diagnostics,
        })
    }

    /// Warnings, formatted as `line:col: warning: message`.
    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.diagnostics.iter().map(|d| d.to_string()).collect()
    }

    #[getter]
    fn statement_ids(&self) -> Vec<String> {
        self.inner.statements.iter().map(|s| s.id.to_string()).collect()
    }

    #[getter]
    fn participants(&self) -> Vec<String> {
        self.inner.participants.iter().map(|p| p.name.clone()).collect()
    }

    #[getter]
    fn data_objects(&self) -> Vec<String> {
        self.inner.data_objects.iter().map(|d| d.name.clone()).collect()
    }

    /// Statement id to class code (`D`, `I`, `L` or `?`).
    fn classes(&self) -> Vec<(String, String)> {
        self.inner
            .statements
            .iter()
            .map(|s| (s.id.to_string(), s.class.code().unwrap_or("?").to_string()))
            .collect()
    }

    /// Classification issues that block generation.
    fn issues(&self) -> Vec<String> {
        validate_classification(&self.inner)
            .iter()
            .map(|i| i.to_string())
            .collect()
    }

    /// Suggested class per statement, as `(id, current, suggested, rationale)`.
    fn suggestions(&self) -> Vec<(String, String, String, String)> {
        suggestions(&self.inner)
            .into_iter()
            .map(|s| {
                let code = |c: chorda_core::StatementClass| c.code().unwrap_or("?").to_string();
                (
                    s.statement_id.to_string(),
                    code(s.current),
                    code(s.suggested),
                    s.rationale,
                )
            })
            .collect()
    }

    fn to_markup(&self) -> String {
        serialize_document(&self.inner)
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("document serializes")
    }

    fn skeleton(&self) -> PyResult<Model> {
        pipeline::skeleton(&self.inner).map(Model).map_err(fail)
    }

    /// Expands grouped local statements. `bindings` is a JSON list of
    /// `{"participant", "groupPath", "target"}` objects; without it, root
    /// groups bind to sub-processes of the same name.
    #[pyo3(signature = (bindings=None))]
    fn expand(&self, bindings: Option<&str>) -> PyResult<Model> {
        let explicit: Option<Vec<GroupBinding>> = bindings
            .map(serde_json::from_str)
            .transpose()
            .map_err(|e| PyValueError::new_err(format!("bindings: {e}")))?;
        let source = match &explicit {
            Some(b) => BindingSource::Explicit(b),
            None => BindingSource::ByName,
        };
        pipeline::expanded(&self.inner, source).map(Model).map_err(fail)
    }

    fn __len__(&self) -> usize {
        self.inner.statements.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "<Document: {} statements, {} participants, {} data objects>",
            self.inner.statements.len(),
            self.inner.participants.len(),
            self.inner.data_objects.len()
        )
    }
}

/// A generated collaboration model with its trace links.
#[pyclass(module = "chorda", name = "Model", frozen)]
pub struct Model(Generated);

#[pymethods]
impl Model {
    /// Reads the canonical JSON form; raises `ChordaError` with a JSON path.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Model> {
        let (model, links) = from_json(text).map_err(|e| ChordaError::new_err(e.to_string()))?;
        Ok(Model(Generated { model, links }))
    }

    #[getter]
    fn pools(&self) -> Vec<String> {
        self.0.model.pools.iter().map(|p| p.name.clone()).collect()
    }

    /// `(source, target, label)` per message flow.
    #[getter]
    fn message_flows(&self) -> Vec<(String, String, String)> {
        self.0
            .model
            .message_flows
            .iter()
            .map(|f| (f.source.to_string(), f.target.to_string(), f.label.clone()))
            .collect()
    }

    /// Statement id to the element ids that model it.
    #[getter]
    fn trace_links(&self) -> Vec<(String, Vec<String>)> {
        self.0
            .links
            .iter()
            .map(|l| {
                (
                    l.statement_id.to_string(),
                    l.element_ids.iter().map(|e| e.to_string()).collect(),
                )
            })
            .collect()
    }

    /// Names of the tasks and sub-processes directly inside the named pool.
    fn activities(&self, pool: &str) -> PyResult<Vec<String>> {
        let p = self
            .0
            .model
            .pools
            .iter()
            .find(|p| p.name == pool)
            .ok_or_else(|| PyValueError::new_err(format!("no pool named `{pool}`")))?;
        Ok(p.nodes
            .iter()
            .filter(|n| n.is_activity())
            .map(|n| n.name().to_string())
            .collect())
    }

    fn violations(&self) -> Vec<String> {
        validate_model(&self.0.model).iter().map(|v| v.to_string()).collect()
    }

    fn coverage(&self, document: &Document) -> Coverage {
        Coverage(self.0.coverage(&document.inner))
    }

    /// Renders as `json`, `xpdl` or `svg`.
    #[pyo3(signature = (format="json"))]
    fn render(&self, format: &str) -> PyResult<String> {
        let f = self::format(format)?;
        self.0.render(f).map_err(|e| ChordaError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        self.render("json")
    }

    fn to_xpdl(&self) -> PyResult<String> {
        self.render("xpdl")
    }

    fn to_svg(&self) -> PyResult<String> {
        self.render("svg")
    }

    fn __eq__(&self, other: &Model) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!(
            "<Model: {} pools, {} message flows>",
            self.0.model.pools.len(),
            self.0.model.message_flows.len()
        )
    }
}

#[pyclass(module = "chorda", name = "Coverage", frozen)]
pub struct Coverage(CoverageReport);

fn ids(v: &[chorda_core::StatementId]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[pymethods]
impl Coverage {
    #[getter]
    fn complete(&self) -> bool {
        self.0.complete
    }

    #[getter]
    fn covered(&self) -> Vec<String> {
        ids(&self.0.covered)
    }

    #[getter]
    fn uncovered(&self) -> Vec<String> {
        ids(&self.0.uncovered)
    }

    #[getter]
    fn documentation_only(&self) -> Vec<String> {
        ids(&self.0.documentation_only)
    }

    #[getter]
    fn dangling(&self) -> Vec<String> {
        self.0.dangling.iter().map(|d| d.statement_id.to_string()).collect()
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.0).expect("report serializes")
    }

    fn __bool__(&self) -> bool {
        self.0.complete
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pymodule]
fn chorda(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Document>()?;
    m.add_class::<Model>()?;
    m.add_class::<Coverage>()?;
    m.add("ChordaError", m.py().get_type::<ChordaError>())?;
    Ok(())
}
