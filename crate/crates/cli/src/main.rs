//! `ucdf`: check, format, extract, render, trace and compare diagrams.

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ucdf_core::extract::{extract, CallStyle, ExtractOptions, Granularity, Grouping};
use ucdf_core::flowc::{compile, Program, SymbolTable};
use ucdf_core::graph::contract;
use ucdf_core::model::Diagram;
use ucdf_core::render::{emit_dot, emit_svg, RenderError, StyleTable};
use ucdf_core::text::{canonicalize, parse, serialize};
use ucdf_core::trace::{conform, run, ConformOptions, RunLimits};
use ucdf_core::validate;

/// Environment variable naming an alternate style table.
const STYLE_ENV: &str = "UCDF_STYLE";

#[derive(Parser)]
#[command(name = "ucdf", version, about = "Unified control/data flow diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a diagram; print one line per violation.
    Check { input: PathBuf },
    /// Print the canonical text of a diagram.
    Fmt {
        input: PathBuf,
        /// Rewrite the file instead of printing.
        #[arg(short = 'w', long = "write")]
        write: bool,
    },
    /// Build the diagram of a Flow-C program.
    Extract {
        input: PathBuf,
        #[command(flatten)]
        options: ExtractFlags,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw a diagram as DOT or SVG.
    Render {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Draw even if the diagram has violations.
        #[arg(long)]
        force: bool,
    },
    /// Run a Flow-C program and write its event trace.
    Trace {
        input: PathBuf,
        #[arg(long)]
        entry: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Extract, run, and report where the run leaves the diagram.
    Conform {
        input: PathBuf,
        #[command(flatten)]
        options: ExtractFlags,
        /// Require goto returns to land on the label's exact rank.
        #[arg(long)]
        strict_goto: bool,
    },
    /// Collapse a process and its interior into one node.
    Compact {
        input: PathBuf,
        #[arg(long)]
        process: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Svg,
}

#[derive(Args)]
struct ExtractFlags {
    #[arg(long, default_value = "op", value_parser = ["op", "block", "func"])]
    granularity: String,
    #[arg(long, default_value = "simplified", value_parser = ["simplified", "full"])]
    call_style: String,
    #[arg(long, default_value = "has", value_parser = ["has", "euler"])]
    grouping: String,
    /// Alias copies once a function is called this often (at least 2), or `off`.
    #[arg(long, default_value = "off", value_parser = parse_threshold)]
    alias_threshold: Threshold,
    #[arg(long)]
    entry: Option<String>,
}

#[derive(Clone, Copy)]
struct Threshold(Option<u32>);

fn parse_threshold(s: &str) -> Result<Threshold, String> {
    if s == "off" {
        return Ok(Threshold(None));
    }
    match s.parse::<u32>() {
        Ok(n) if n >= 2 => Ok(Threshold(Some(n))),
        _ => Err(format!("expected an integer of at least 2 or `off`, found `{s}`")),
    }
}

impl ExtractFlags {
    fn options(&self) -> ExtractOptions {
        ExtractOptions {
            granularity: Granularity::parse(&self.granularity).expect("checked by clap"),
            call_style: CallStyle::parse(&self.call_style).expect("checked by clap"),
            grouping: Grouping::parse(&self.grouping).expect("checked by clap"),
            alias_threshold: self.alias_threshold.0,
            entry: self.entry.clone(),
            ..ExtractOptions::default()
        }
    }
}

/// Exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Clean = 0,
    Findings = 1,
    BadInput = 2,
    Usage = 3,
    Internal = 4,
}

/// A failed command: its status and the message for stderr.
struct Failure(Status, String);

impl Failure {
    fn input(path: &Path, e: impl Display) -> Self {
        Failure(Status::BadInput, format!("{}: {e}", path.display()))
    }
}

type Outcome = Result<Status, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(path, e))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure(Status::Internal, format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| Failure(Status::Internal, format!("stdout: {e}")))
        }
    }
}

fn load_diagram(path: &Path) -> Result<Diagram, Failure> {
    parse(&read(path)?).map_err(|e| Failure::input(path, e))
}

fn load_program(path: &Path) -> Result<(Program, SymbolTable), Failure> {
    compile(&read(path)?).map_err(|errors| {
        let lines: Vec<String> = errors.iter().map(|e| format!("{}:{e}", path.display())).collect();
        Failure(Status::BadInput, lines.join("\n"))
    })
}

fn style() -> Result<StyleTable, Failure> {
    match std::env::var_os(STYLE_ENV) {
        None => Ok(StyleTable::default()),
        Some(p) => {
            let p = PathBuf::from(p);
            StyleTable::parse(&read(&p)?).map_err(|e| Failure::input(&p, e))
        }
    }
}

fn check(input: &Path) -> Outcome {
    let d = load_diagram(input)?;
    let violations = validate(&d);
    let mut text = String::new();
    for v in &violations {
        text.push_str(&v.render(&d));
        text.push('\n');
    }
    write_out(None, &text)?;
    Ok(if violations.is_empty() { Status::Clean } else { Status::Findings })
}

fn fmt(input: &Path, in_place: bool) -> Outcome {
    let text = canonicalize(&read(input)?).map_err(|e| Failure::input(input, e))?;
    write_out(in_place.then_some(input), &text)?;
    Ok(Status::Clean)
}

fn extract_cmd(input: &Path, flags: &ExtractFlags, output: Option<&Path>) -> Outcome {
    let (p, s) = load_program(input)?;
    let report = extract(&p, &s, &flags.options()).map_err(|e| Failure::input(input, e))?;
    for u in &report.unresolved_indirect_calls {
        eprintln!(
            "{}:{}:{}: indirect call through `{}` has no single target",
            input.display(),
            u.span.line,
            u.span.column,
            u.pointer
        );
    }
    write_out(output, &serialize(&report.diagram))?;
    Ok(Status::Clean)
}

fn render_cmd(input: &Path, format: Format, output: Option<&Path>, force: bool) -> Outcome {
    let d = load_diagram(input)?;
    let style = style()?;
    let result = match format {
        Format::Dot => emit_dot(&d, &style, force),
        Format::Svg => emit_svg(&d, &style, force),
    };
    match result {
        Ok(text) => {
            write_out(output, &text)?;
            Ok(Status::Clean)
        }
        Err(RenderError::Invalid(violations)) => {
            let lines: Vec<String> = violations.iter().map(|v| v.render(&d)).collect();
            Err(Failure(
                Status::Findings,
                format!("{}: not drawn (use --force)\n{}", input.display(), lines.join("\n")),
            ))
        }
    }
}

fn trace_cmd(input: &Path, entry: Option<&str>, output: Option<&Path>) -> Outcome {
    let (p, s) = load_program(input)?;
    let (trace, error) = match run(&p, &s, entry, RunLimits::default()) {
        Ok(t) => (t, None),
        Err(f) => (f.partial, Some(f.error)),
    };
    let text = format!("# fingerprint {:016x}\n{}", trace.fingerprint, trace.to_text(&s));
    write_out(output, &text)?;
    match error {
        None => Ok(Status::Clean),
        Some(e) => Err(Failure::input(input, e)),
    }
}

fn conform_cmd(input: &Path, flags: &ExtractFlags, strict_goto: bool) -> Outcome {
    let (p, s) = load_program(input)?;
    let options = flags.options();
    let report = extract(&p, &s, &options).map_err(|e| Failure::input(input, e))?;
    let trace = run(&p, &s, options.entry.as_deref(), RunLimits::default()).map_err(|f| Failure::input(input, f.error))?;
    let found = conform(&report.diagram, &trace, ConformOptions { strict_goto })
        .map_err(|e| Failure(Status::Internal, e.to_string()))?;
    let mut text = String::new();
    for d in &found {
        text.push_str(&d.to_string());
        text.push('\n');
    }
    write_out(None, &text)?;
    Ok(if found.is_empty() { Status::Clean } else { Status::Findings })
}

fn compact_cmd(input: &Path, process: &str, output: Option<&Path>) -> Outcome {
    let d = load_diagram(input)?;
    let node = d
        .node_by_ident(process)
        .or_else(|| d.nodes().find(|n| n.is_process_like() && n.name() == Some(process)))
        .map(|n| n.id())
        .ok_or_else(|| Failure::input(input, format!("no process named `{process}`")))?;
    let c = contract(&d, node).map_err(|e| Failure::input(input, e))?;
    write_out(output, &serialize(&c))?;
    Ok(Status::Clean)
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Check { input } => check(&input),
        Command::Fmt { input, write } => fmt(&input, write),
        Command::Extract { input, options, output } => extract_cmd(&input, &options, output.as_deref()),
        Command::Render {
            input,
            format,
            output,
            force,
        } => render_cmd(&input, format, output.as_deref(), force),
        Command::Trace { input, entry, output } => trace_cmd(&input, entry.as_deref(), output.as_deref()),
        Command::Conform {
            input,
            options,
            strict_goto,
        } => conform_cmd(&input, &options, strict_goto),
        Command::Compact { input, process, output } => compact_cmd(&input, &process, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Usage as u8 } else { Status::Clean as u8 });
        }
    };
    let status = match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure(s, msg))) => {
            eprintln!("ucdf: {msg}");
            s
        }
        Err(_) => Status::Internal,
    };
    ExitCode::from(status as u8)
}
