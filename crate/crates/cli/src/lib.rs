//! The `chorda` command line and the HTTP service behind the modeler UI.
//! Both drive the same pipeline functions, so their artifacts are identical.

pub mod cli;
pub mod service;
pub mod store;

use chorda_core::orchestrate::ExpandError;
use chorda_core::pipeline::PipelineError;
use chorda_core::GroupBinding;
use serde::Deserialize;

pub use store::BindingSpec;

/// One line per problem, without a location prefix.
pub fn problem_lines(err: &PipelineError) -> Vec<String> {
    match err {
        PipelineError::Parse(diags) => diags.iter().filter(|d| d.is_error()).map(|d| d.to_string()).collect(),
        PipelineError::NotReady(issues) => issues.iter().map(|i| i.to_string()).collect(),
        PipelineError::Expand(ExpandError::UnresolvedGroups(groups)) => groups
            .iter()
            .map(|g| format!("unresolved group `{}` of `{}`", g.group_path.join("/"), g.participant))
            .collect(),
        other => vec![other.to_string()],
    }
}

/// A bindings file holds either a bare list of bindings or a stored
/// [`BindingSpec`].
#[derive(Deserialize)]
#[serde(untagged)]
pub enum BindingsFile {
    List(Vec<GroupBinding>),
    Spec(BindingSpec),
}

impl From<BindingsFile> for BindingSpec {
    fn from(f: BindingsFile) -> Self {
        match f {
            BindingsFile::List(bindings) => BindingSpec::Explicit { bindings },
            BindingsFile::Spec(s) => s,
        }
    }
}

impl BindingSpec {
    pub fn source(&self) -> chorda_core::pipeline::BindingSource<'_> {
        match self {
            BindingSpec::ByName => chorda_core::pipeline::BindingSource::ByName,
            BindingSpec::Explicit { bindings } => chorda_core::pipeline::BindingSource::Explicit(bindings),
        }
    }
}
