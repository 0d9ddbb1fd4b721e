//! Command-line front end.
//!
//! Exit codes: 0 on success with every asserted containment holding, 2 when an
//! asserted containment fails, 1 for usage, I/O and numerical-integrity errors.

pub mod io;
pub mod json;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::adcalc::{centralizer, double_centralizer};
use crate::certify::{batch_run, batch_run_with_threads, certify_smiley, claim_for, BatchConfig, Claim, ExperimentReport};
use crate::decomp::{jordan_chevalley, nilpotency_order};
use crate::hulls::{pol_hull, vn_routes};
use crate::numlin::{ComplexMatrix, OperatorSubspace, ToleranceConfig};
use crate::shiftlab::{c2_structure_check, diag_progression_check, shift_truncation, truncated_smiley};

pub use io::{parse_matrix, write_matrix, MatrixFile, MatrixFileError};

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "CENTRALAB_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "centralab", version, about = "Centralizers, hulls and Smiley certificates for complex matrices")]
struct Cli {
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long, global = true, value_name = "TOL")]
    tol_rank: Option<f64>,
    /// Containment residual threshold.
    #[arg(long, global = true, value_name = "TOL")]
    tol_contain: Option<f64>,
    /// Seed recorded in results; replaces the seed list of a batch config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for batch runs (falls back to CENTRALAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Basis of C_s(A).
    Centralizer {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        s: usize,
    },
    /// Basis of C_k(C_l(A)).
    Double {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
    },
    /// Canonical decomposition A = S + N.
    Decompose {
        #[arg(long)]
        input: PathBuf,
    },
    /// Pol(A) and VN(A).
    Hulls {
        #[arg(long)]
        input: PathBuf,
    },
    /// Smiley certificate for (A, k, l).
    Certify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
    },
    /// Structure report for the truncated shift J_n.
    Shift {
        #[arg(long)]
        n: usize,
        #[arg(long, requires = "l")]
        k: Option<usize>,
        #[arg(long, requires = "k")]
        l: Option<usize>,
    },
    /// Batch experiment from a JSON config.
    Batch {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Numeric(crate::Error),
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Numeric(e)
    }
}

impl From<MatrixFileError> for Failure {
    fn from(e: MatrixFileError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
            Failure::Numeric(e) => write!(f, "{e}"),
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code. Usage errors print to stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{}", e.render());
                    EXIT_ERROR
                }
            };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {failure}");
            EXIT_ERROR
        }
    }
}

fn tolerances(cli: &Cli, base: ToleranceConfig) -> Result<ToleranceConfig, Failure> {
    let mut tol = base;
    if let Some(t) = cli.tol_rank {
        tol.rank_rel_tol = t;
    }
    if let Some(t) = cli.tol_contain {
        tol.containment_tol = t;
    }
    tol.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(tol)
}

fn threads(cli: &Cli) -> Result<Option<usize>, Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be ≥ 1".into()));
        }
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        _ => Ok(None),
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    let text = json::to_canonical_string(value).map_err(|e| Failure::Io(format!("cannot serialize result: {e}")))?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes a report as canonical JSON.
pub fn emit_report(report: &ExperimentReport, path: &Path) -> std::io::Result<()> {
    let text = json::to_canonical_string(report).map_err(std::io::Error::other)?;
    std::fs::write(path, text)
}

fn basis_json(s: &OperatorSubspace) -> Vec<MatrixFile> {
    s.basis().iter().map(MatrixFile::from_matrix).collect()
}

fn header(kind: &str, a: &ComplexMatrix, tol: &ToleranceConfig, seed: Option<u64>) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("kind".into(), json!(kind));
    m.insert("version".into(), json!(crate::VERSION));
    m.insert("tolerances".into(), serde_json::to_value(tol).expect("plain struct"));
    m.insert("n".into(), json!(a.nrows()));
    m.insert("digest".into(), json!(crate::certify::matrix_digest(a)));
    m.insert("seed".into(), json!(seed));
    m
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Centralizer { input, s } => {
            let tol = tolerances(cli, ToleranceConfig::default())?;
            let a = parse_matrix(input)?;
            let c = centralizer(&a, *s, &tol)?;
            let mut doc = header("centralizer", &a, &tol, cli.seed);
            doc.insert("s".into(), json!(s));
            doc.insert("dim".into(), json!(c.dim()));
            doc.insert("basis".into(), serde_json::to_value(basis_json(&c)).expect("plain struct"));
            emit(&doc, out)?;
            Ok(EXIT_OK)
        }
        Command::Double { input, k, l } => {
            let tol = tolerances(cli, ToleranceConfig::default())?;
            let a = parse_matrix(input)?;
            let d = double_centralizer(&a, *k, *l, &tol)?;
            let cl = centralizer(&a, *l, &tol)?;
            let mut doc = header("double", &a, &tol, cli.seed);
            doc.insert("k".into(), json!(k));
            doc.insert("l".into(), json!(l));
            doc.insert("dim_Cl".into(), json!(cl.dim()));
            doc.insert("dim_CkCl".into(), json!(d.dim()));
            doc.insert("basis".into(), serde_json::to_value(basis_json(&d)).expect("plain struct"));
            emit(&doc, out)?;
            Ok(EXIT_OK)
        }
        Command::Decompose { input } => {
            let tol = tolerances(cli, ToleranceConfig::default())?;
            let a = parse_matrix(input)?;
            let d = jordan_chevalley(&a, &tol)?;
            let mut doc = header("decompose", &a, &tol, cli.seed);
            doc.insert("m".into(), json!(d.m));
            doc.insert("semisimple".into(), serde_json::to_value(MatrixFile::from_matrix(&d.s)).expect("plain struct"));
            doc.insert("nilpotent".into(), serde_json::to_value(MatrixFile::from_matrix(&d.n)).expect("plain struct"));
            let eig: Vec<Value> = d
                .projectors
                .iter()
                .map(|p| {
                    json!({
                        "re": p.eigenvalue.re,
                        "im": p.eigenvalue.im,
                        "rank": p.projector.trace().re.round() as i64,
                        "projector": MatrixFile::from_matrix(&p.projector),
                    })
                })
                .collect();
            doc.insert("eigenvalues".into(), json!(eig));
            doc.insert("residuals".into(), serde_json::to_value(d.residuals(&a)).expect("plain struct"));
            doc.insert("warnings".into(), json!(d.warnings));
            emit(&doc, out)?;
            Ok(EXIT_OK)
        }
        Command::Hulls { input } => {
            let tol = tolerances(cli, ToleranceConfig::default())?;
            let a = parse_matrix(input)?;
            let pol = pol_hull(&a, &tol)?;
            let routes = vn_routes(&a, &tol)?;
            let mut doc = header("hulls", &a, &tol, cli.seed);
            doc.insert("dim_pol".into(), json!(pol.dim()));
            doc.insert("dim_vn".into(), json!(routes.generated.dim()));
            doc.insert(
                "vn_routes".into(),
                json!({
                    "generated_dim": routes.generated.dim(),
                    "double_commutant_dim": routes.double_commutant.dim(),
                    "residual": routes.residual,
                    "agree": routes.agree,
                }),
            );
            doc.insert("pol_basis".into(), serde_json::to_value(basis_json(&pol)).expect("plain struct"));
            doc.insert("vn_basis".into(), serde_json::to_value(basis_json(&routes.generated)).expect("plain struct"));
            emit(&doc, out)?;
            if routes.agree {
                Ok(EXIT_OK)
            } else {
                eprintln!("error: the two routes to VN(A) disagree (residual {:.3e})", routes.residual);
                Ok(EXIT_ERROR)
            }
        }
        Command::Certify { input, k, l } => {
            let tol = tolerances(cli, ToleranceConfig::default())?;
            let a = parse_matrix(input)?;
            let mut cert = certify_smiley(&a, *k, *l, &tol)?;
            cert.seed = cli.seed;
            let claim = claim_for(None, *k, *l);
            let holds = match claim {
                Claim::Exploratory => None,
                _ => Some(cert.is_proper && cert.is_smiley),
            };
            let doc = json!({
                "kind": "certify",
                "version": crate::VERSION,
                "certificate": cert,
                "claim": claim,
                "claim_holds": holds,
            });
            emit(&doc, out)?;
            Ok(if holds == Some(false) { EXIT_ASSERTION } else { EXIT_OK })
        }
        Command::Shift { n, k, l } => {
            let tol = tolerances(cli, ToleranceConfig::default())?;
            let j = shift_truncation(*n)?;
            let structure = if *n >= 3 { Some(c2_structure_check(*n, &tol)?) } else { None };
            let progression = if *n >= 4 { Some(diag_progression_check(*n, &tol)?) } else { None };
            let certificate = match (k, l) {
                (Some(k), Some(l)) => {
                    let mut c = truncated_smiley(*n, *k, *l, &tol)?;
                    c.seed = cli.seed;
                    Some(c)
                }
                _ => None,
            };
            let mut ok = structure.as_ref().is_none_or(|s| s.holds);
            ok &= progression.as_ref().is_none_or(|p| p.holds);
            ok &= certificate.as_ref().is_none_or(|c| c.is_proper);
            let mut doc = header("shift", &j, &tol, cli.seed);
            doc.insert("matrix".into(), serde_json::to_value(MatrixFile::from_matrix(&j)).expect("plain struct"));
            doc.insert("nilpotency_order".into(), json!(nilpotency_order(&j, &tol)?));
            doc.insert("structure".into(), json!(structure));
            doc.insert("progression".into(), json!(progression));
            doc.insert("certificate".into(), json!(certificate));
            doc.insert("holds".into(), json!(ok));
            emit(&doc, out)?;
            Ok(if ok { EXIT_OK } else { EXIT_ASSERTION })
        }
        Command::Batch { config } => {
            let text = std::fs::read_to_string(config)
                .map_err(|e| Failure::Io(format!("cannot read batch config {}: {e}", config.display())))?;
            let mut cfg: BatchConfig =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid batch config: {e}")))?;
            cfg.tolerances = tolerances(cli, cfg.tolerances)?;
            if let Some(seed) = cli.seed {
                cfg.seeds = vec![seed];
            }
            let report = match threads(cli)? {
                Some(t) => batch_run_with_threads(&cfg, t)?,
                None => batch_run(&cfg)?,
            };
            let target = out.map(Path::to_path_buf).or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
            emit(&report, target.as_deref())?;
            Ok(if report.aggregate.errors > 0 {
                eprintln!("error: {} batch instance(s) failed to run", report.aggregate.errors);
                EXIT_ERROR
            } else if !report.all_asserted_hold() {
                EXIT_ASSERTION
            } else {
                EXIT_OK
            })
        }
    }
}
