//! `qbank` command-line front-end: validate, convert, inspect and bundle
//! question banks in Aiken, GIFT and Moodle XML.
//!
//! All parsing, validation and emission happens in the `qbank` library;
//! this crate only maps arguments, files and streams onto it.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand};

use qbank::convert::{convert_with, ConvertOptions};
use qbank::mediapack::{bundle_gift_media_with, collect_media_refs, unbundle_gift_media, BundleOptions, DEFAULT_GIFT_NAME};
use qbank::{BodyKind, ConversionOutput, ConversionPolicy, Diagnostic, Format, QuestionBank, Severity};

pub const EXIT_OK: i32 = 0;
/// Validation errors were reported or questions were skipped.
pub const EXIT_FINDINGS: i32 = 1;
/// Usage, I/O or strict-mode failure.
pub const EXIT_FAILURE: i32 = 2;

const STDIN: &str = "-";

#[derive(Debug, Parser)]
#[command(name = "qbank", version, about = "Convert and check Moodle question banks (Aiken, GIFT, Moodle XML)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a question bank to another format.
    Convert(ConvertArgs),
    /// Check question banks and print their diagnostics.
    Validate(InputArgs),
    /// Print question counts per kind and media counts.
    Inspect(InputArgs),
    /// Package a bank and its images as a GIFT-with-media zip archive.
    Bundle(BundleArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Input format; required unless the input ends in .xml or .zip.
    #[arg(long, value_parser = parse_format)]
    pub from: Option<Format>,
    /// Print informational diagnostics too.
    #[arg(short, long, conflicts_with = "quiet")]
    pub verbose: bool,
    /// Print errors only.
    #[arg(short, long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[command(flatten)]
    pub common: Common,
    /// Input files, or `-` for standard input.
    #[arg(required = true)]
    pub inputs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct MediaArgs {
    /// Directory holding the images referenced by the bank.
    #[arg(long, env = "QBANK_MEDIA_DIR")]
    pub media_dir: Option<PathBuf>,
    /// Folder name for images inside the archive.
    #[arg(long, default_value = qbank::mediapack::DEFAULT_MEDIA_FOLDER)]
    pub media_folder: String,
}

impl MediaArgs {
    fn bundle_options(&self) -> BundleOptions {
        BundleOptions { media_folder: self.media_folder.clone(), gift_name: DEFAULT_GIFT_NAME.into() }
    }
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output format.
    #[arg(long, value_parser = parse_format)]
    pub to: Format,
    /// Skip questions the target cannot hold instead of failing.
    #[arg(long)]
    pub lossy: bool,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub media: MediaArgs,
    /// Input file, or `-` for standard input.
    pub input: String,
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output archive.
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub media: MediaArgs,
    /// Input file, or `-` for standard input.
    pub input: String,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

/// A failure that ends the command with [`EXIT_FAILURE`].
#[derive(Debug)]
struct Failure(String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

/// Runs the command line against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut io::stdin().lock(), &mut io::stdout().lock(), &mut io::stderr().lock())
}

/// Runs the command line with explicit streams, returning the exit code.
pub fn run_with<I, T>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(rendered.as_bytes()) } else { stdout.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Convert(args) => run_convert(args, stdin, stdout, stderr),
        Command::Validate(args) => run_validate(args, stdin, stdout),
        Command::Inspect(args) => run_inspect(args, stdin, stdout),
        Command::Bundle(args) => run_bundle(args, stdin, stderr),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(stderr, "qbank: {failure}");
            EXIT_FAILURE
        }
    }
}

/// A parsed input file.
struct Loaded {
    name: String,
    bank: QuestionBank,
}

fn detect_format(input: &str, from: Option<Format>) -> Result<Format, Failure> {
    if let Some(format) = from {
        return Ok(format);
    }
    if input == STDIN {
        return Err(Failure("--from is required when reading standard input".into()));
    }
    match Path::new(input).extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("xml") => Ok(Format::MoodleXml),
        Some("zip") => Ok(Format::Gift),
        _ => Err(Failure(format!("{input}: cannot detect the input format; pass --from aiken|gift|moodlexml"))),
    }
}

fn is_archive(input: &str) -> bool {
    input != STDIN && Path::new(input).extension().is_some_and(|e| e.eq_ignore_ascii_case("zip"))
}

fn read_file(path: &str) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure(format!("{path}: {e}")))
}

fn decode(name: &str, bytes: Vec<u8>) -> Result<String, Failure> {
    String::from_utf8(bytes).map_err(|_| Failure(format!("{name}: not valid UTF-8")))
}

fn parse_bytes(name: &str, bytes: Vec<u8>, format: Format, archive: bool) -> Result<Loaded, Failure> {
    let bank = if archive {
        if format != Format::Gift {
            return Err(Failure(format!("{name}: zip archives hold GIFT, not {format}")));
        }
        unbundle_gift_media(&bytes).map_err(|e| Failure(format!("{name}: {e}")))?.bank
    } else {
        qbank::parse(format, &decode(name, bytes)?)
    };
    Ok(Loaded { name: name.to_owned(), bank })
}

fn load_one(input: &str, from: Option<Format>, stdin: &mut dyn Read) -> Result<Loaded, Failure> {
    let format = detect_format(input, from)?;
    let bytes = if input == STDIN {
        let mut buf = Vec::new();
        stdin.read_to_end(&mut buf).map_err(|e| Failure(format!("<stdin>: {e}")))?;
        buf
    } else {
        read_file(input)?
    };
    let name = if input == STDIN { "<stdin>" } else { input };
    parse_bytes(name, bytes, format, is_archive(input))
}

/// Loads every input, parsing files in parallel; results keep input order.
fn load_all(inputs: &[String], from: Option<Format>, stdin: &mut dyn Read) -> Vec<Result<Loaded, Failure>> {
    if inputs.iter().filter(|i| *i == STDIN).count() > 1 {
        return vec![Err(Failure("standard input can be read only once".into()))];
    }
    let mut stdin_result = None;
    if inputs.iter().any(|i| i == STDIN) {
        stdin_result = Some(load_one(STDIN, from, stdin));
    }
    thread::scope(|scope| {
        let handles: Vec<_> = inputs
            .iter()
            .map(|input| (input != STDIN).then(|| scope.spawn(move || load_one(input, from, &mut io::empty()))))
            .collect();
        handles
            .into_iter()
            .map(|h| match h {
                Some(handle) => handle.join().unwrap_or_else(|_| Err(Failure("worker thread panicked".into()))),
                None => stdin_result.take().expect("stdin read once"),
            })
            .collect()
    })
}

fn shown(d: &Diagnostic, common: &Common) -> bool {
    match d.severity {
        Severity::Error => true,
        Severity::Warning => !common.quiet,
        Severity::Info => common.verbose,
    }
}

fn write_diagnostics(out: &mut dyn Write, file: &str, diagnostics: &[Diagnostic], common: &Common) -> io::Result<()> {
    for d in diagnostics.iter().filter(|d| shown(d, common)) {
        writeln!(out, "{} {file}:{}:{} {} {}", d.severity, d.line, d.column, d.code, d.message)?;
    }
    Ok(())
}

/// Diagnostics from parsing plus whole-bank validation, in source order.
fn all_diagnostics(bank: &QuestionBank) -> Vec<Diagnostic> {
    let mut all = bank.diagnostics.clone();
    for d in qbank::validate(bank) {
        if !all.contains(&d) {
            all.push(d);
        }
    }
    all.sort_by_key(|d| (d.line, d.column));
    all
}

fn run_validate(args: &InputArgs, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let mut code = EXIT_OK;
    for loaded in load_all(&args.inputs, args.common.from, stdin) {
        let loaded = loaded?;
        let diagnostics = all_diagnostics(&loaded.bank);
        write_diagnostics(stdout, &loaded.name, &diagnostics, &args.common)?;
        if diagnostics.iter().any(Diagnostic::is_error) {
            code = EXIT_FINDINGS;
        }
    }
    Ok(code)
}

fn run_inspect(args: &InputArgs, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let mut code = EXIT_OK;
    for loaded in load_all(&args.inputs, args.common.from, stdin) {
        let Loaded { name, bank } = loaded?;
        let diagnostics = all_diagnostics(&bank);
        let count = |s: Severity| diagnostics.iter().filter(|d| d.severity == s).count();
        writeln!(stdout, "{name}")?;
        writeln!(stdout, "  questions: {}", bank.len())?;
        for kind in BodyKind::ALL {
            let n = bank.questions.iter().filter(|q| q.kind() == kind).count();
            if n > 0 {
                writeln!(stdout, "  {}: {n}", kind.name())?;
            }
        }
        let media = collect_media_refs(&bank);
        let embedded = media.iter().filter(|m| m.payload.is_some()).count();
        writeln!(stdout, "  media: {} referenced, {embedded} embedded", media.len())?;
        writeln!(stdout, "  diagnostics: {} errors, {} warnings", count(Severity::Error), count(Severity::Warning))?;
        if count(Severity::Error) > 0 {
            code = EXIT_FINDINGS;
        }
    }
    Ok(code)
}

fn write_output(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => Ok(stdout.write_all(bytes)?),
    }
}

fn run_convert(args: &ConvertArgs, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { name, bank } = load_one(&args.input, args.common.from, stdin)?;
    write_diagnostics(stderr, &name, &bank.diagnostics, &args.common)?;
    let parse_errors = bank.has_errors();

    let policy = if args.lossy { ConversionPolicy::lossy() } else { ConversionPolicy::strict() };
    let options = ConvertOptions { media_dir: args.media.media_dir.as_deref(), bundle: args.media.bundle_options() };
    let (output, report) = convert_with(&bank, args.to, policy, &options).map_err(|e| Failure(format!("{name}: {e}")))?;
    if matches!(output, ConversionOutput::Archive(_)) && args.output.is_none() {
        return Err(Failure("questions carry media, so the output is a zip archive; pass -o FILE.zip".into()));
    }
    write_output(args.output.as_deref(), output.as_bytes(), stdout)?;

    write_diagnostics(stderr, &name, &report.warnings, &args.common)?;
    if !args.common.quiet {
        writeln!(stderr, "{name}: converted {}, skipped {}", report.converted, report.skipped.len())?;
    }
    Ok(if parse_errors || !report.skipped.is_empty() { EXIT_FINDINGS } else { EXIT_OK })
}

fn run_bundle(args: &BundleArgs, stdin: &mut dyn Read, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { name, bank } = load_one(&args.input, args.common.from, stdin)?;
    write_diagnostics(stderr, &name, &bank.diagnostics, &args.common)?;
    let archive = bundle_gift_media_with(&bank, args.media.media_dir.as_deref(), &args.media.bundle_options())
        .map_err(|e| Failure(format!("{name}: {e}")))?;
    write_output(Some(&args.output), &archive, &mut io::sink())?;
    Ok(if bank.has_errors() { EXIT_FINDINGS } else { EXIT_OK })
}
