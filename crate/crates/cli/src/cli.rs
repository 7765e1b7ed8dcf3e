use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chorda_core::pipeline::{self, Generated, PipelineError};
use chorda_core::{
    check_completeness_in, from_json, parse_document, render, validate_classification, Format, RequirementsDocument,
    Severity,
};
use clap::{Parser, Subcommand};

use crate::store::Store;
use crate::{problem_lines, BindingSpec, BindingsFile};

pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

/// Annotated requirements in, BPMN collaboration models out.
#[derive(Debug, Parser)]
#[command(name = "chorda", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse documents and report diagnostics and classification issues
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Generate the interaction skeleton of a document
    Skeleton {
        /// Markup file, or `-` for stdin
        input: PathBuf,
        /// Output file (stdout when absent)
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(short, long, default_value = "json")]
        format: Format,
    },
    /// Generate the skeleton and expand grouped local statements into it
    Expand {
        input: PathBuf,
        /// Bind root groups to sub-processes of the same name
        #[arg(long, conflicts_with = "bindings")]
        bind_by_name: bool,
        /// JSON file with explicit group bindings
        #[arg(long)]
        bindings: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(short, long, default_value = "json")]
        format: Format,
        /// Also write the coverage report as JSON
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Report which statements a JSON model traces
    Trace {
        input: PathBuf,
        model: PathBuf,
        /// Print the report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Convert a JSON model to another format
    Export {
        model: PathBuf,
        #[arg(short, long)]
        format: Format,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "CHORDA_DATA_DIR", default_value = "chorda-data")]
        data_dir: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Domain(Vec<String>),
    Io(String),
}

impl Failure {
    fn io(path: &Path, e: io::Error) -> Failure {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

type Outcome = Result<u8, Failure>;

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(Failure::Domain(lines)) => {
            for l in lines {
                eprintln!("{l}");
            }
            EXIT_DOMAIN
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            EXIT_IO
        }
    };
    ExitCode::from(code)
}

fn execute(cmd: Command) -> Outcome {
    match cmd {
        Command::Check { paths } => Ok(check(&paths)),
        Command::Skeleton { input, out, format } => {
            let (doc, label) = load(&input)?;
            let g = pipeline::skeleton(&doc).map_err(|e| domain(&label, &e))?;
            emit(&g, format, out.as_deref())?;
            Ok(0)
        }
        Command::Expand {
            input,
            bind_by_name,
            bindings,
            out,
            format,
            report,
        } => {
            let (doc, label) = load(&input)?;
            let spec = match (bind_by_name, bindings) {
                (_, Some(path)) => read_bindings(&path)?,
                (true, None) => BindingSpec::ByName,
                (false, None) => BindingSpec::Explicit { bindings: Vec::new() },
            };
            let g = pipeline::expanded(&doc, spec.source()).map_err(|e| domain(&label, &e))?;
            emit(&g, format, out.as_deref())?;
            let coverage = g.coverage(&doc);
            eprint!("{coverage}");
            if let Some(path) = report {
                let json = serde_json::to_string_pretty(&coverage).expect("report serializes") + "\n";
                fs::write(&path, json).map_err(|e| Failure::io(&path, e))?;
            }
            Ok(0)
        }
        Command::Trace { input, model, json } => {
            let (doc, _) = load(&input)?;
            let text = read(&model)?;
            let (m, links) =
                from_json(&text).map_err(|e| Failure::Domain(vec![format!("{}: {e}", model.display())]))?;
            let report = check_completeness_in(&doc, &m, &links);
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{report}");
            }
            Ok(if report.complete { 0 } else { EXIT_DOMAIN })
        }
        Command::Export { model, format, out } => {
            let text = read(&model)?;
            let (m, links) =
                from_json(&text).map_err(|e| Failure::Domain(vec![format!("{}: {e}", model.display())]))?;
            let rendered = render(&m, &links, format).map_err(|e| Failure::Domain(vec![e.to_string()]))?;
            write_out(&rendered, out.as_deref())?;
            Ok(0)
        }
        Command::Serve { port, host, data_dir } => {
            let store = Store::open(&data_dir).map_err(|e| Failure::io(&data_dir, e))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            runtime
                .block_on(crate::service::serve(SocketAddr::new(host, port), store))
                .map_err(|e| Failure::Io(e.to_string()))?;
            Ok(0)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::io(path, e))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn label(path: &Path) -> String {
    if path == Path::new("-") {
        "<stdin>".to_string()
    } else {
        path.display().to_string()
    }
}

/// Reads and parses a markup file. Warnings go to stderr; errors fail.
fn load(path: &Path) -> Result<(RequirementsDocument, String), Failure> {
    let text = read(path)?;
    let label = label(path);
    let out = parse_document(&text);
    let mut lines = Vec::new();
    for d in &out.diagnostics {
        let line = format!("{label}:{d}");
        if d.severity == Severity::Warning {
            eprintln!("{line}");
        } else {
            lines.push(line);
        }
    }
    if !lines.is_empty() {
        return Err(Failure::Domain(lines));
    }
    Ok((out.document, label))
}

fn domain(label: &str, e: &PipelineError) -> Failure {
    Failure::Domain(problem_lines(e).into_iter().map(|l| format!("{label}: {l}")).collect())
}

fn read_bindings(path: &Path) -> Result<BindingSpec, Failure> {
    let text = read(path)?;
    serde_json::from_str::<BindingsFile>(&text)
        .map(BindingSpec::from)
        .map_err(|e| Failure::Domain(vec![format!("{}: not a bindings file: {e}", path.display())]))
}

fn emit(g: &Generated, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let rendered = g.render(format).map_err(|e| Failure::Domain(vec![e.to_string()]))?;
    write_out(&rendered, out)
}

fn write_out(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn check(paths: &[PathBuf]) -> u8 {
    let mut code = 0;
    for path in paths {
        let text = match read(path) {
            Ok(t) => t,
            Err(Failure::Io(msg)) => {
                eprintln!("error: {msg}");
                code = EXIT_IO;
                continue;
            }
            Err(Failure::Domain(_)) => unreachable!("reading only fails with I/O errors"),
        };
        let label = label(path);
        let out = parse_document(&text);
        for d in &out.diagnostics {
            println!("{label}:{d}");
        }
        let issues = validate_classification(&out.document);
        for i in &issues {
            match out.statement_spans.get(&i.statement_id) {
                Some(span) => println!("{label}:{span}: error: {i}"),
                None => println!("{label}: error: {i}"),
            }
        }
        if out.has_errors() || !issues.is_empty() {
            if code == 0 {
                code = EXIT_DOMAIN;
            }
        } else {
            println!("{label}: ok, {} statement(s)", out.document.statements.len());
        }
    }
    code
}
