//! Command-line front end: protocol runs, α sweeps, and ad-hoc circuit
//! simulation from files.
//!
//! Exit codes: 0 = success (probability-0 physics results included),
//! 2 = usage or parse error, 1 = internal invariant violation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use opticon::element::Circuit;
use opticon::fock::{ModeId, StateVector};
use opticon::measure::{post_select_counts, DetectionPattern};
use opticon::protocol::{linspace, run, sweep, ProtocolConfig, ProtocolReport, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "opticon",
    version,
    about = "Exact linear-optics simulation and photonic entanglement concentration"
)]
struct Cli {
    /// Output format; defaults to $OPTICON_FORMAT, then text
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the report to a file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the concentration protocol for one (alpha, beta)
    Concentrate {
        /// Coefficient of |H…H⟩, in [0, 1]
        #[arg(long)]
        alpha: f64,
        /// Coefficient of |V…V⟩; defaults to sqrt(1 - alpha^2)
        #[arg(long)]
        beta: Option<f64>,
        /// Number of parties (2 distills a Bell pair, 3 a GHZ triple)
        #[arg(long, default_value_t = 2)]
        parties: u32,
        /// Skip the conditional π correction on odd-V branches
        #[arg(long)]
        no_correction: bool,
    },
    /// Run the protocol across evenly spaced alphas
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        #[arg(long, default_value_t = 1.0)]
        stop: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long, default_value_t = 2)]
        parties: u32,
    },
    /// Apply a circuit file to an input state file
    Simulate {
        /// Circuit JSON file
        #[arg(long)]
        circuit: PathBuf,
        /// Input state in canonical text form
        #[arg(long)]
        input: PathBuf,
        /// Post-selection pattern, e.g. "1=1,2p=1,3=1,4p=1"
        #[arg(long)]
        select: Option<String>,
    },
}

enum CliError {
    /// Bad arguments or unparseable input files: exit 2.
    Usage(String),
    /// A library invariant broke mid-run: exit 1.
    Internal(String),
}

impl From<opticon::Error> for CliError {
    fn from(e: opticon::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format.unwrap_or_else(default_format);
    let rendered = match &cli.command {
        Command::Concentrate {
            alpha,
            beta,
            parties,
            no_correction,
        } => cmd_concentrate(*alpha, *beta, *parties, !*no_correction, format),
        Command::Sweep {
            start,
            stop,
            steps,
            parties,
        } => cmd_sweep(*start, *stop, *steps, *parties, format),
        Command::Simulate {
            circuit,
            input,
            select,
        } => cmd_simulate(circuit, input, select.as_deref(), format),
    };
    match rendered {
        Ok(text) => match cli.output {
            Some(path) => match fs::write(&path, text) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    ExitCode::from(2)
                }
            },
            None => {
                print!("{text}");
                ExitCode::SUCCESS
            }
        },
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn default_format() -> Format {
    match std::env::var("OPTICON_FORMAT").ok().as_deref() {
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        _ => Format::Text,
    }
}

fn cmd_concentrate(
    alpha: f64,
    beta: Option<f64>,
    parties: u32,
    correction: bool,
    format: Format,
) -> Result<String, CliError> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(CliError::Usage(format!(
            "alpha out of range [0, 1]: {alpha}"
        )));
    }
    if parties != 2 && parties != 3 {
        return Err(CliError::Usage(format!(
            "unsupported party count {parties} (expected 2 or 3)"
        )));
    }
    let beta = match beta {
        Some(b) if !b.is_finite() || !(0.0..=1.0).contains(&b) => {
            return Err(CliError::Usage(format!("beta out of range [0, 1]: {b}")));
        }
        Some(b) => {
            if (alpha * alpha + b * b - 1.0).abs() > 1e-6 {
                return Err(CliError::Usage(format!(
                    "alpha^2 + beta^2 = {} is not 1",
                    alpha * alpha + b * b
                )));
            }
            b
        }
        None => (1.0 - alpha * alpha).max(0.0).sqrt(),
    };
    let cfg = ProtocolConfig::new(
        Complex64::new(alpha, 0.0),
        Complex64::new(beta, 0.0),
        parties,
        correction,
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let report = run(&cfg)?;
    Ok(render_report(alpha, beta, parties, &report, format))
}

fn render_report(
    alpha: f64,
    beta: f64,
    parties: u32,
    report: &ProtocolReport,
    format: Format,
) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut out = String::from(
                "alpha,beta,parties,success_probability,predicted_probability,\
                 input_entropy_ebits,output_entropy_ebits,branches\n",
            );
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                csv_f64(alpha),
                csv_f64(beta),
                parties,
                csv_f64(report.success_probability),
                csv_f64(report.predicted_probability),
                csv_f64(report.input_entropy_ebits),
                csv_f64(report.output_entropy_ebits),
                report.branches.len(),
            ));
            out
        }
        Format::Text => {
            let target = match report.target_kind {
                opticon::TargetKind::Bell => "bell",
                opticon::TargetKind::Ghz => "ghz",
            };
            let mut out = String::new();
            out.push_str(&format!("target: {target} ({parties} parties)\n"));
            out.push_str(&format!("alpha: {alpha}\nbeta: {beta}\n"));
            out.push_str(&format!(
                "success_probability: {}\npredicted_probability: {}\n",
                report.success_probability, report.predicted_probability
            ));
            out.push_str(&format!(
                "input_entropy_ebits: {}\noutput_entropy_ebits: {}\n",
                report.input_entropy_ebits, report.output_entropy_ebits
            ));
            if report.branches.is_empty() {
                out.push_str("branches: none\n");
            } else {
                out.push_str("branches:\n");
                for b in &report.branches {
                    out.push_str(&format!(
                        "  {:<16} p={:<22} fidelity_pre={} fidelity_post={}\n",
                        b.outcome.label(),
                        b.probability,
                        b.pre_correction_fidelity,
                        b.post_correction_fidelity
                    ));
                }
            }
            out
        }
    }
}

fn cmd_sweep(
    start: f64,
    stop: f64,
    steps: usize,
    parties: u32,
    format: Format,
) -> Result<String, CliError> {
    if !(start.is_finite() && stop.is_finite()) || !(0.0..=1.0).contains(&start) || stop > 1.0 {
        return Err(CliError::Usage(
            "sweep range must satisfy 0 <= start <= stop <= 1".into(),
        ));
    }
    if start > stop {
        return Err(CliError::Usage(
            "sweep range must satisfy 0 <= start <= stop <= 1".into(),
        ));
    }
    if steps < 2 {
        return Err(CliError::Usage("sweep needs at least 2 steps".into()));
    }
    if parties != 2 && parties != 3 {
        return Err(CliError::Usage(format!(
            "unsupported party count {parties} (expected 2 or 3)"
        )));
    }
    let rows = sweep(&linspace(start, stop, steps), parties)?;
    Ok(render_sweep(&rows, format))
}

fn render_sweep(rows: &[SweepRow], format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut out = String::from(
                "alpha,p_success,p_predicted,input_entropy_ebits,output_entropy_ebits\n",
            );
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    csv_f64(r.alpha),
                    csv_f64(r.p_success),
                    csv_f64(r.p_predicted),
                    csv_f64(r.input_entropy_ebits),
                    csv_f64(r.output_entropy_ebits),
                ));
            }
            out
        }
        Format::Text => {
            let mut out = format!(
                "{:>12} {:>22} {:>22} {:>22} {:>22}\n",
                "alpha", "p_success", "p_predicted", "input_entropy", "output_entropy"
            );
            for r in rows {
                out.push_str(&format!(
                    "{:>12.8} {:>22} {:>22} {:>22} {:>22}\n",
                    r.alpha,
                    r.p_success,
                    r.p_predicted,
                    r.input_entropy_ebits,
                    r.output_entropy_ebits
                ));
            }
            out
        }
    }
}

fn cmd_simulate(
    circuit_path: &PathBuf,
    input_path: &PathBuf,
    select: Option<&str>,
    format: Format,
) -> Result<String, CliError> {
    let circuit_text = fs::read_to_string(circuit_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", circuit_path.display())))?;
    let circuit = Circuit::from_json(&circuit_text).map_err(|e| {
        CliError::Usage(format!(
            "{}: circuit parse error at line {}, column {}: {e}",
            circuit_path.display(),
            e.line(),
            e.column()
        ))
    })?;
    circuit
        .validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", circuit_path.display())))?;

    let state_text = fs::read_to_string(input_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", input_path.display())))?;
    let input = StateVector::parse_text(&state_text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", input_path.display())))?;

    let pattern = select.map(parse_pattern).transpose()?;
    let output = circuit.apply(&input)?;

    let selected = pattern.as_ref().map(|p| post_select_counts(&output, p));

    Ok(match format {
        Format::Text => match &selected {
            None => output.to_text(),
            Some((p, conditional)) => {
                format!(
                    "# post_selection_probability: {p}\n{}",
                    conditional.to_text()
                )
            }
        },
        Format::Json => {
            let value = match &selected {
                None => serde_json::json!({ "state": output.to_text() }),
                Some((p, conditional)) => serde_json::json!({
                    "state": output.to_text(),
                    "post_selection_probability": p,
                    "conditional_state": conditional.to_text(),
                }),
            };
            let mut s = serde_json::to_string_pretty(&value).expect("state serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let state = match &selected {
                None => &output,
                Some((_, conditional)) => conditional,
            };
            let mut out = String::from("amp_re,amp_im,term\n");
            for (term, amp) in state.iter() {
                out.push_str(&format!("{},{},{term}\n", csv_f64(amp.re), csv_f64(amp.im)));
            }
            out
        }
    })
}

fn parse_pattern(text: &str) -> Result<DetectionPattern, CliError> {
    let mut pattern = DetectionPattern::new();
    for piece in text.split(',') {
        let (mode, count) = piece.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("bad --select entry `{piece}`, expected mode=count"))
        })?;
        let mode = ModeId::new(mode.trim()).map_err(|e| CliError::Usage(e.to_string()))?;
        let count: u32 = count.trim().parse().map_err(|_| {
            CliError::Usage(format!("bad photon count in --select entry `{piece}`"))
        })?;
        pattern = pattern.require(mode, count);
    }
    Ok(pattern)
}

/// Full double precision (17 significant digits), so identical runs diff
/// exactly and values re-parse to the same bits.
fn csv_f64(v: f64) -> String {
    format!("{v:.16e}")
}
