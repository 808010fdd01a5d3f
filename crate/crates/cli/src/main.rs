//! `delta` — validate knowledge bases, categorize stimuli in batch, and run
//! threshold sweeps.
//!
//! Exit codes: 0 success, 1 at least one stimulus failed, 2 knowledge-base or
//! configuration failure, 3 I/O failure. Stdout carries data (JSON Lines,
//! text, or CSV); stderr carries diagnostics.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use delta_core::engine::{
    delta_categorize, explain, parse_stimuli, sweep, Stimulus, SweepParam, SweepSpec,
};
use delta_core::kb::{validate_params, EngineParams, KbError, KnowledgeBase};

const EXIT_OK: u8 = 0;
const EXIT_STIMULUS_FAILURE: u8 = 1;
const EXIT_KB_FAILURE: u8 = 2;
const EXIT_IO_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "delta",
    version,
    about = "Categorization over heterogeneous concept representations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a knowledge base and report whether it is well-formed.
    Validate {
        /// Path to the knowledge-base JSON file
        kb: PathBuf,
        /// Tolerate unknown keys instead of rejecting them
        #[arg(long)]
        lenient: bool,
    },
    /// Categorize a batch of stimuli, one result per input in input order.
    Categorize {
        #[command(flatten)]
        run: RunArgs,
        /// Output format
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Include the full decision trace in the output
        #[arg(long)]
        trace: bool,
    },
    /// Re-run the stimulus set across a threshold grid; CSV histogram on stdout.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Threshold to vary: theta_exemplar or theta_coherence
        #[arg(long)]
        param: String,
        /// Comma-separated ascending grid of values in (0,1)
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Path to the knowledge-base JSON file
    #[arg(long)]
    kb: PathBuf,
    /// Path to the stimulus JSON file (one object or an array)
    #[arg(long)]
    stimuli: PathBuf,
    /// Override the exemplar-retrieval threshold
    #[arg(long)]
    theta_exemplar: Option<f64>,
    /// Override the coherence-gate threshold
    #[arg(long)]
    theta_coherence: Option<f64>,
    /// Override the similarity decay rate
    #[arg(long)]
    decay_k: Option<f64>,
    /// Tolerate unknown keys instead of rejecting them
    #[arg(long)]
    lenient: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_KB_FAILURE
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Validate { kb, lenient } => cmd_validate(&kb, lenient),
        Command::Categorize { run, format, trace } => cmd_categorize(&run, format, trace),
        Command::Sweep { run, param, grid } => cmd_sweep(&run, &param, grid),
    };
    ExitCode::from(code)
}

// ---------------------------------------------------------------------------
// shared plumbing

fn read_file(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO_FAILURE
    })
}

fn load_kb(path: &Path, lenient: bool) -> Result<KnowledgeBase, u8> {
    let text = read_file(path)?;
    KnowledgeBase::load_str(&text, !lenient).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_KB_FAILURE
    })
}

fn effective_params(run: &RunArgs, kb: &KnowledgeBase) -> Result<EngineParams, u8> {
    let mut params = kb.params;
    if let Some(v) = run.theta_exemplar {
        params.theta_exemplar = v;
    }
    if let Some(v) = run.theta_coherence {
        params.theta_coherence = v;
    }
    if let Some(v) = run.decay_k {
        params.decay_k = v;
    }
    validate_params(&params, "command line").map_err(|e| {
        eprintln!("error: {e}");
        EXIT_KB_FAILURE
    })?;
    Ok(params)
}

fn load_stimuli(run: &RunArgs) -> Result<Vec<Result<Stimulus, KbError>>, u8> {
    let text = read_file(&run.stimuli)?;
    parse_stimuli(&text, !run.lenient).map_err(|e| {
        // the file as a whole is not JSON; nothing in it can be categorized
        eprintln!("error: {}: {e}", run.stimuli.display());
        EXIT_STIMULUS_FAILURE
    })
}

// ---------------------------------------------------------------------------
// validate

fn cmd_validate(path: &Path, lenient: bool) -> u8 {
    match load_kb(path, lenient) {
        Ok(kb) => {
            println!(
                "0 findings ({} spaces, {} concepts)",
                kb.spaces.len(),
                kb.concepts.len()
            );
            EXIT_OK
        }
        Err(code) => code,
    }
}

// ---------------------------------------------------------------------------
// categorize

fn cmd_categorize(run: &RunArgs, format: Format, trace: bool) -> u8 {
    let kb = match load_kb(&run.kb, run.lenient) {
        Ok(kb) => kb,
        Err(code) => return code,
    };
    let params = match effective_params(run, &kb) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let entries = match load_stimuli(run) {
        Ok(e) => e,
        Err(code) => return code,
    };

    let mut failed = 0usize;
    for entry in &entries {
        match entry {
            Ok(d) => match delta_categorize(d, &kb, &params) {
                Ok(result) => match format {
                    Format::Json => {
                        let mut value = serde_json::to_value(&result).unwrap();
                        if !trace {
                            value.as_object_mut().unwrap().remove("trace");
                        }
                        println!("{value}");
                    }
                    Format::Text => {
                        let rendered = explain(&result);
                        if trace {
                            print!("{rendered}");
                        } else {
                            println!("{}", rendered.lines().next().unwrap());
                        }
                    }
                },
                Err(e) => {
                    failed += 1;
                    emit_error(format, Some(&d.id), &e.to_string());
                }
            },
            Err(e) => {
                failed += 1;
                emit_error(format, None, &e.to_string());
            }
        }
    }
    eprintln!("{} categorized, {failed} failed", entries.len() - failed);
    if failed > 0 {
        EXIT_STIMULUS_FAILURE
    } else {
        EXIT_OK
    }
}

/// Failed stimuli stay in the output stream, in input order, so downstream
/// consumers can line results up with their inputs.
fn emit_error(format: Format, stimulus: Option<&str>, message: &str) {
    match format {
        Format::Json => {
            let record = serde_json::json!({"stimulus": stimulus, "error": message});
            println!("{record}");
        }
        Format::Text => {
            println!("stimulus '{}': error: {message}", stimulus.unwrap_or("?"));
        }
    }
}

// ---------------------------------------------------------------------------
// sweep

fn cmd_sweep(run: &RunArgs, param: &str, grid: Vec<f64>) -> u8 {
    let param = match param {
        "theta_exemplar" => SweepParam::ThetaExemplar,
        "theta_coherence" => SweepParam::ThetaCoherence,
        other => {
            eprintln!("error: unknown sweep parameter '{other}' (expected theta_exemplar or theta_coherence)");
            return EXIT_KB_FAILURE;
        }
    };
    let spec = match SweepSpec::new(param, grid) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_KB_FAILURE;
        }
    };
    let kb = match load_kb(&run.kb, run.lenient) {
        Ok(kb) => kb,
        Err(code) => return code,
    };
    let params = match effective_params(run, &kb) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let entries = match load_stimuli(run) {
        Ok(e) => e,
        Err(code) => return code,
    };
    let mut stimuli = Vec::new();
    let mut unparsed = 0usize;
    for entry in entries {
        match entry {
            Ok(d) => stimuli.push(d),
            Err(e) => {
                unparsed += 1;
                eprintln!("skipping malformed stimulus: {e}");
            }
        }
    }

    let rows = sweep(&kb, &stimuli, &params, &spec);
    println!("value,exemplar,exemplar_step1,prototype,theory_override,errors");
    let mut engine_errors = 0usize;
    for row in &rows {
        engine_errors += row.errors;
        println!(
            "{},{},{},{},{},{}",
            row.value,
            row.exemplar,
            row.exemplar_step1,
            row.prototype,
            row.theory_override,
            row.errors + unparsed
        );
    }
    if unparsed > 0 || engine_errors > 0 {
        EXIT_STIMULUS_FAILURE
    } else {
        EXIT_OK
    }
}
