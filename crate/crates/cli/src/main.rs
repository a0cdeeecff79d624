//! `pmech`: command-line front end for mechanism synthesis, bounds and audits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pmech_core::audit::{audit, AuditConfig};
use pmech_core::bounds::{compute_bounds, l3_value, BoundsConfig};
use pmech_core::extension::{extend_efrl, extend_esfrl, extend_separated};
use pmech_core::mechanism::{Arithmetic, Mechanism};
use pmech_core::oracle::estimate_h_eps;
use pmech_core::perfect_privacy::g0_with_cap;
use pmech_core::scenario::{run_scenario, ScenarioId, ScenarioSpec};
use pmech_core::separation::{enumerate_representations, AssignmentPolicy, Representation, EXHAUSTIVE_CAP};
use pmech_core::synthesis::{synthesize_frl, synthesize_sfrl, SamplingConfig};
use pmech_core::{JointPmf, LogBase, PmechError};

#[derive(Parser)]
#[command(name = "pmech", version, about = "Privacy mechanism synthesis, bounds and audits")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Logarithm base for all information quantities.
    #[arg(long, global = true, default_value_t = 2.0)]
    log_base: f64,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RepPolicy {
    Exhaustive,
    Canonical,
}

impl From<RepPolicy> for AssignmentPolicy {
    fn from(p: RepPolicy) -> Self {
        match p {
            RepPolicy::Exhaustive => AssignmentPolicy::Exhaustive {
                cap: EXHAUSTIVE_CAP,
            },
            RepPolicy::Canonical => AssignmentPolicy::Canonical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Frl,
    Sfrl,
    Efrl,
    Esfrl,
    Separated,
}

#[derive(Clone, Copy, ValueEnum)]
enum Arith {
    Float,
    Rational,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every bound at one leakage budget.
    Bounds {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = RepPolicy::Exhaustive)]
        rep_policy: RepPolicy,
        /// Skip g0 and L3.
        #[arg(long)]
        no_g0: bool,
    },
    /// Evaluate the bounds over a grid of budgets and write CSV.
    Sweep {
        #[arg(long)]
        input: PathBuf,
        /// `start:stop:step`, inclusive of `stop`.
        #[arg(long)]
        epsilon_grid: String,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = RepPolicy::Exhaustive)]
        rep_policy: RepPolicy,
    },
    /// Build a mechanism.
    Synth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Sample budget for sampled constructions.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long, value_enum, default_value_t = Arith::Float)]
        arithmetic: Arith,
        /// Comma-separated order of Y symbols for the interval construction.
        #[arg(long, value_delimiter = ',')]
        y_order: Option<Vec<usize>>,
        /// Representation JSON for `separated`; defaults to the L4 maximizer.
        #[arg(long)]
        rep: Option<PathBuf>,
    },
    /// Audit a mechanism against its contract and the bounds.
    Audit {
        #[arg(long)]
        mechanism: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Budget for the bound comparisons; defaults to the mechanism's own.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Randomized lower estimate of the optimal utility.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 4)]
        u_cap: usize,
        #[arg(long, default_value_t = 20_000)]
        budget: usize,
    },
    /// Zero-leakage utility with its decomposition witness.
    G0 {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = pmech_core::perfect_privacy::DEFAULT_VERTEX_CAP)]
        vertex_cap: usize,
    },
    /// Generate a scenario instance and check its bound ordering.
    Scenario {
        /// 1, 2, 3, 4, C1 or C2.
        #[arg(long)]
        id: ScenarioId,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        margin: Option<f64>,
        /// `n1,n2,ny`.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// List the representations of X admissible at a budget.
    Repset {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = RepPolicy::Exhaustive)]
        rep_policy: RepPolicy,
    },
}

#[derive(Debug)]
enum CliError {
    Core(PmechError),
    Usage(String),
    Io(String),
}

impl From<PmechError> for CliError {
    fn from(e: PmechError) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(PmechError::Assertion(_)) => 3,
            CliError::Core(PmechError::Solver(_)) | CliError::Io(_) => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Core(PmechError::Validation(format!("{}: {e}", path.display()))))
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

fn emit_json(output: Option<&Path>, v: &impl serde::Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).map_err(PmechError::from)?;
    emit(output, &text)
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("bad epsilon grid {spec:?}: {e}")))?;
    let [a, b, step] = parts[..] else {
        return Err(CliError::Usage(format!("epsilon grid {spec:?} must be start:stop:step")));
    };
    if !(step > 0.0) || !(b >= a) || !(a >= 0.0) {
        return Err(CliError::Usage(format!(
            "epsilon grid {spec:?} needs 0 <= start <= stop and step > 0"
        )));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    // rounding keeps grid points like 0.6 from printing as 0.6000000000000001
    Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run(cli: Cli) -> CliResult<()> {
    let base = LogBase::new(cli.global.log_base)?;
    let seed = cli.global.seed;
    let out = cli.global.output.as_deref();
    match cli.command {
        Command::Bounds {
            input,
            epsilon,
            rep_policy,
            no_g0,
        } => {
            let j: JointPmf = read_json(&input)?;
            let cfg = BoundsConfig {
                log_base: base,
                rep_policy: rep_policy.into(),
                with_g0: !no_g0,
                ..BoundsConfig::default()
            };
            emit_json(out, &compute_bounds(&j, epsilon, &cfg)?)
        }
        Command::Sweep {
            input,
            epsilon_grid,
            csv,
            rep_policy,
        } => {
            let j: JointPmf = read_json(&input)?;
            let grid = parse_grid(&epsilon_grid)?;
            let mi = j.mutual_information(base);
            let h_y = j.h_y(base);
            let g0 = g0_with_cap(&j, base, pmech_core::perfect_privacy::DEFAULT_VERTEX_CAP)
                .ok()
                .map(|r| r.value);
            let cfg = BoundsConfig {
                log_base: base,
                rep_policy: rep_policy.into(),
                with_g0: false,
                ..BoundsConfig::default()
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(["epsilon", "U1", "L1", "L2", "L3", "L4", "L5", "g0"])
                .map_err(io)?;
            for eps in grid {
                let row = match compute_bounds(&j, eps, &cfg) {
                    Ok(r) => {
                        let l3 = g0.filter(|_| mi > 0.0).map(|g| l3_value(eps, mi, h_y, g));
                        [
                            eps.to_string(),
                            r.u1.to_string(),
                            r.l1.to_string(),
                            r.l2.to_string(),
                            opt(l3),
                            opt(r.l4),
                            opt(r.l5),
                            opt(g0),
                        ]
                    }
                    Err(PmechError::OutOfRange { .. }) => {
                        let mut row: [String; 8] = Default::default();
                        row[0] = eps.to_string();
                        row[7] = opt(g0);
                        row
                    }
                    Err(e) => return Err(e.into()),
                };
                w.write_record(&row).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            let text = String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))?;
            emit(csv.as_deref().or(out), text.trim_end())
        }
        Command::Synth {
            input,
            method,
            epsilon,
            budget,
            arithmetic,
            y_order,
            rep,
        } => {
            let j: JointPmf = read_json(&input)?;
            let cfg = SamplingConfig::new(budget, seed);
            let arith = match arithmetic {
                Arith::Float => Arithmetic::Float,
                Arith::Rational => Arithmetic::Rational,
            };
            let m: Mechanism = match method {
                Method::Frl => synthesize_frl(&j, y_order.as_deref(), arith)?,
                Method::Sfrl => synthesize_sfrl(&j, &cfg)?,
                Method::Efrl => extend_efrl(&j, epsilon, base)?.mechanism,
                Method::Esfrl => extend_esfrl(&j, epsilon, &cfg, base)?.mechanism,
                Method::Separated => {
                    let rep: Representation = match rep {
                        Some(p) => read_json(&p)?,
                        None => {
                            let bcfg = BoundsConfig {
                                log_base: base,
                                with_g0: false,
                                ..BoundsConfig::default()
                            };
                            evaluate_default_rep(&j, epsilon, &bcfg)?
                        }
                    };
                    extend_separated(&j, epsilon, &rep, &cfg, base)?.mechanism
                }
            };
            emit_json(out, &m)
        }
        Command::Audit {
            mechanism,
            input,
            epsilon,
        } => {
            let j: JointPmf = read_json(&input)?;
            let m: Mechanism = read_json(&mechanism)?;
            let eps = epsilon.or(m.provenance.epsilon).unwrap_or(0.0);
            let cfg = BoundsConfig {
                log_base: base,
                ..BoundsConfig::default()
            };
            // bounds are only meaningful inside the budget range
            let report = compute_bounds(&j, eps, &cfg).ok();
            let acfg = AuditConfig {
                log_base: base,
                bootstrap_seed: seed,
                ..AuditConfig::default()
            };
            let a = audit(&m, &j, report.as_ref(), &acfg)?;
            let passed = a.passed();
            emit_json(out, &json!({ "passed": passed, "audit": a }))?;
            if passed {
                Ok(())
            } else {
                let names: Vec<String> = a.failures().iter().map(|c| c.name.clone()).collect();
                Err(PmechError::Assertion(format!("audit failed: {}", names.join(", "))).into())
            }
        }
        Command::Oracle {
            input,
            epsilon,
            u_cap,
            budget,
        } => {
            let j: JointPmf = read_json(&input)?;
            emit_json(out, &estimate_h_eps(&j, epsilon, u_cap, budget, seed, base)?)
        }
        Command::G0 { input, vertex_cap } => {
            let j: JointPmf = read_json(&input)?;
            emit_json(out, &g0_with_cap(&j, base, vertex_cap)?)
        }
        Command::Scenario {
            id,
            epsilon,
            margin,
            sizes,
        } => {
            let mut spec = ScenarioSpec::new(id, seed);
            spec.log_base = base;
            if let Some(m) = margin {
                spec.margin = m;
            }
            if let Some(s) = sizes {
                let [n1, n2, ny] = s[..] else {
                    return Err(CliError::Usage("--sizes takes n1,n2,ny".into()));
                };
                (spec.n1, spec.n2, spec.ny) = (n1, n2, ny);
            }
            let report = run_scenario(&spec, epsilon)?;
            let summary: Value = json!({
                "id": report.record.id.to_string(),
                "seed": seed,
                "hypotheses": report.instance.hypotheses,
                "record": report.record,
                "joint": report.instance.joint,
                "representation": report.instance.rep,
            });
            emit_json(out, &summary)
        }
        Command::Repset {
            input,
            epsilon,
            rep_policy,
        } => {
            let j: JointPmf = read_json(&input)?;
            emit_json(out, &enumerate_representations(&j, epsilon, rep_policy.into(), base)?)
        }
    }
}

/// The representation maximizing the L4 term at `epsilon`.
fn evaluate_default_rep(j: &JointPmf, epsilon: f64, cfg: &BoundsConfig) -> CliResult<Representation> {
    let r = compute_bounds(j, epsilon, cfg)?;
    r.l4_argmin.ok_or_else(|| {
        CliError::Core(PmechError::Validation(
            "X admits no representation with H(X2) >= epsilon".into(),
        ))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pmech: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
