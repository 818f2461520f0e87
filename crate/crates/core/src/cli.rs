//! Command-line front end: JSON file formats and the command implementations
//! behind the `locc-forge` binary.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major arrays of
//! rows. Floats are written in shortest round-trip form, so saving and
//! reloading a protocol is bit-exact.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bipartite::{BipartiteState, NORM_TOL};
use crate::error::{Error, Result};
use crate::numkit::{c, ensure_finite, frobenius, ComplexMatrix};
use crate::simulate::{estimate, verify};
use crate::synth::{
    feasibility, reduce_bob, synthesize, KrausOutcome, LoccProtocol, ProbabilityRequest, Stage1, Stage2,
};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Largest deviation of `tr(AA†)` from one accepted without `--renormalize`.
pub const LOAD_NORM_TOL: f64 = 1e-8;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    m.row_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix, what: &str) -> Result<ComplexMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::invalid(format!("{what}: empty matrix")));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::invalid(format!(
            "{what}: row {bad} has {} entries, expected {ncols}",
            rows[bad].len()
        )));
    }
    let m = ComplexMatrix::from_fn(nrows, ncols, |i, j| c(rows[i][j][0], rows[i][j][1]));
    ensure_finite(&m).map_err(|_| Error::invalid(format!("{what}: non-finite entry")))?;
    Ok(m)
}

fn expect_shape(m: &ComplexMatrix, shape: (usize, usize), what: &str) -> Result<()> {
    if m.shape() != shape {
        return Err(Error::dims(format!(
            "{what} is {}x{}, expected {}x{}",
            m.nrows(),
            m.ncols(),
            shape.0,
            shape.1
        )));
    }
    Ok(())
}

/// A matrix with explicit dimensions; used for states and for operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dims: [usize; 2],
    pub matrix: JsonMatrix,
}

pub type StateFile = MatrixFile;

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        MatrixFile {
            dims: [m.nrows(), m.ncols()],
            matrix: matrix_to_json(m),
        }
    }

    pub fn from_state(s: &BipartiteState) -> Self {
        Self::from_matrix(s.amp())
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let m = matrix_from_json(&self.matrix, "matrix")?;
        expect_shape(&m, (self.dims[0], self.dims[1]), "matrix")?;
        Ok(m)
    }

    /// Amplitudes already normalized to working precision are kept bit for
    /// bit. States within [`LOAD_NORM_TOL`] of unit norm are rescaled; others
    /// are rejected unless `renormalize` is set.
    pub fn to_state(&self, renormalize: bool) -> Result<BipartiteState> {
        let amp = self.to_matrix()?;
        let deviation = (frobenius(&amp).powi(2) - 1.0).abs();
        if deviation <= NORM_TOL {
            return BipartiteState::new(amp);
        }
        if !renormalize && deviation > LOAD_NORM_TOL {
            return Err(Error::invalid(format!(
                "state is not normalized (|tr(AA†) − 1| = {deviation:e}); pass --renormalize to rescale it"
            )));
        }
        BipartiteState::normalized(amp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFile {
    pub q: f64,
    #[serde(rename = "M")]
    pub m: JsonMatrix,
    #[serde(rename = "U")]
    pub u: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage1File {
    pub outcomes: Vec<OutcomeFile>,
    #[serde(rename = "M0")]
    pub m0: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2File {
    pub p: f64,
    #[serde(rename = "N")]
    pub n: JsonMatrix,
    #[serde(rename = "V")]
    pub v: JsonMatrix,
    #[serde(rename = "N_fail")]
    pub n_fail: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaFile {
    pub p_total: f64,
    pub dims: [usize; 2],
    pub tool_version: String,
    pub source_digest: String,
    pub target_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub stage1: Stage1File,
    pub stage2: Option<Stage2File>,
    /// Amplitudes of the state reached after stage 1.
    pub intermediate: JsonMatrix,
    pub meta: MetaFile,
}

impl From<&LoccProtocol> for ProtocolFile {
    fn from(p: &LoccProtocol) -> Self {
        ProtocolFile {
            stage1: Stage1File {
                outcomes: p
                    .stage1
                    .outcomes
                    .iter()
                    .map(|o| OutcomeFile {
                        q: o.q,
                        m: matrix_to_json(&o.m),
                        u: matrix_to_json(&o.u),
                    })
                    .collect(),
                m0: matrix_to_json(&p.stage1.m0),
            },
            stage2: p.stage2.as_ref().map(|s| Stage2File {
                p: s.p,
                n: matrix_to_json(&s.n),
                v: matrix_to_json(&s.v),
                n_fail: matrix_to_json(&s.n_fail),
            }),
            intermediate: matrix_to_json(&p.intermediate),
            meta: MetaFile {
                p_total: p.p_total,
                dims: [p.dims.0, p.dims.1],
                tool_version: TOOL_VERSION.to_string(),
                source_digest: p.source_digest.clone(),
                target_digest: p.target_digest.clone(),
            },
        }
    }
}

impl ProtocolFile {
    pub fn to_protocol(&self) -> Result<LoccProtocol> {
        let [da, db] = self.meta.dims;
        let load = |rows: &JsonMatrix, what: &str, shape: (usize, usize)| -> Result<ComplexMatrix> {
            let m = matrix_from_json(rows, what)?;
            expect_shape(&m, shape, what)?;
            Ok(m)
        };
        let check_real = |x: f64, what: &str| -> Result<f64> {
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::invalid(format!("{what} is not finite")))
            }
        };
        let outcomes = self
            .stage1
            .outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| {
                Ok(KrausOutcome {
                    q: check_real(o.q, &format!("q[{i}]"))?,
                    m: load(&o.m, &format!("M[{i}]"), (da, da))?,
                    u: load(&o.u, &format!("U[{i}]"), (db, db))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let stage1 = Stage1 {
            outcomes,
            m0: load(&self.stage1.m0, "M0", (da, da))?,
        };
        let stage2 = self
            .stage2
            .as_ref()
            .map(|s| {
                Ok(Stage2 {
                    p: check_real(s.p, "p")?,
                    n: load(&s.n, "N", (da, da))?,
                    v: load(&s.v, "V", (db, db))?,
                    n_fail: load(&s.n_fail, "N_fail", (da, da))?,
                })
            })
            .transpose()?;
        Ok(LoccProtocol {
            dims: (da, db),
            stage1,
            stage2,
            intermediate: load(&self.intermediate, "intermediate", (da, db))?,
            p_total: check_real(self.meta.p_total, "p_total")?,
            source_digest: self.meta.source_digest.clone(),
            target_digest: self.meta.target_digest.clone(),
        })
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn load_state(path: &Path, renormalize: bool) -> Result<BipartiteState> {
    read_json::<StateFile>(path)?.to_state(renormalize)
}

pub fn load_matrix(path: &Path) -> Result<ComplexMatrix> {
    read_json::<MatrixFile>(path)?.to_matrix()
}

pub fn load_protocol(path: &Path) -> Result<LoccProtocol> {
    read_json::<ProtocolFile>(path)?.to_protocol()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn save_state(path: &Path, state: &BipartiteState) -> Result<()> {
    write_json(path, &StateFile::from_state(state))
}

pub fn save_protocol(path: &Path, protocol: &LoccProtocol) -> Result<()> {
    write_json(path, &ProtocolFile::from(protocol))
}

#[derive(Debug, Parser)]
#[command(
    name = "locc-forge",
    version,
    about = "Decide, optimize, synthesize and check LOCC transformations of bipartite pure states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: CommonOpts,
}

#[derive(Debug, Clone, Args)]
pub struct CommonOpts {
    /// Numerical tolerance for verification.
    #[arg(long, global = true, env = "LOCC_FORGE_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    /// Rescale input states that are not normalized instead of rejecting them.
    #[arg(long, global = true)]
    pub renormalize: bool,

    /// Write the JSON result to this file instead of stdout.
    #[arg(short = 'o', long = "output", global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether A can be turned into B with probability p.
    Feasibility {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, default_value = "max")]
        p: String,
    },
    /// Build an explicit protocol taking A to B.
    Synthesize {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, default_value = "max")]
        p: String,
    },
    /// Check every protocol identity against A and B.
    Verify {
        protocol: PathBuf,
        source: PathBuf,
        target: PathBuf,
    },
    /// Estimate the success probability by sampling runs.
    Simulate {
        protocol: PathBuf,
        source: PathBuf,
        target: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replace a contraction on Bob's side by one on Alice's plus a Bob unitary.
    ReduceBob { operator: PathBuf, state: PathBuf },
}

/// What a command produced: the JSON document, a one-line human summary and
/// the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub json: Value,
    pub summary: String,
    pub exit_code: i32,
}

impl CommandOutput {
    fn ok(json: Value, summary: String) -> Self {
        CommandOutput {
            json,
            summary,
            exit_code: EXIT_OK,
        }
    }
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Infeasible { .. } => EXIT_FAILED,
        _ => EXIT_INVALID,
    }
}

pub fn error_json(err: &Error) -> Value {
    let mut body = json!({ "kind": err.kind(), "message": err.to_string() });
    if let Error::Infeasible { p_max: Some(p), .. } = err {
        body["p_max"] = json!(p);
    }
    json!({ "error": body })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn checked_tol(tol: f64) -> Result<f64> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(Error::invalid(format!(
            "tolerance must be positive and finite, got {tol}"
        )))
    }
}

fn execute(cli: &Cli) -> Result<CommandOutput> {
    let renorm = cli.common.renormalize;
    match &cli.command {
        Command::Feasibility { source, target, p } => {
            let request: ProbabilityRequest = p.parse()?;
            let a = load_state(source, renorm)?;
            let b = load_state(target, renorm)?;
            let report = feasibility(&a, &b, request)?;
            let summary = format!(
                "{} at p = {} (p_max = {})",
                if report.feasible { "feasible" } else { "infeasible" },
                report.p,
                report.p_max
            );
            Ok(CommandOutput {
                json: to_value(&report),
                summary,
                exit_code: if report.feasible { EXIT_OK } else { EXIT_FAILED },
            })
        }
        Command::Synthesize { source, target, p } => {
            let request: ProbabilityRequest = p.parse()?;
            let a = load_state(source, renorm)?;
            let b = load_state(target, renorm)?;
            let proto = synthesize(&a, &b, request)?;
            let summary = format!(
                "synthesized {} outcome(s), {}, total success probability {}",
                proto.outcome_count(),
                if proto.is_deterministic() {
                    "deterministic"
                } else {
                    "with a final contraction"
                },
                proto.p_total
            );
            Ok(CommandOutput::ok(to_value(&ProtocolFile::from(&proto)), summary))
        }
        Command::Verify {
            protocol,
            source,
            target,
        } => {
            let tol = checked_tol(cli.common.tol)?;
            let proto = load_protocol(protocol)?;
            let a = load_state(source, renorm)?;
            let b = load_state(target, renorm)?;
            let report = verify(&proto, &a, &b, tol)?;
            let mut summary = format!(
                "{}: largest residual {:.3e} (tol {tol:.1e})",
                if report.passed {
                    "verified"
                } else {
                    "verification FAILED"
                },
                report.max_residual()
            );
            if proto.source_digest != a.digest() || proto.target_digest != b.digest() {
                summary.push_str("; note: state digests differ from those recorded in the protocol");
            }
            Ok(CommandOutput {
                json: to_value(&report),
                summary,
                exit_code: if report.passed { EXIT_OK } else { EXIT_FAILED },
            })
        }
        Command::Simulate {
            protocol,
            source,
            target,
            trials,
            seed,
        } => {
            let proto = load_protocol(protocol)?;
            let a = load_state(source, renorm)?;
            let b = load_state(target, renorm)?;
            let est = estimate(&proto, &a, &b, *trials, *seed)?;
            let p = proto.p_total.clamp(0.0, 1.0);
            let sigma = (p * (1.0 - p) / *trials as f64).sqrt();
            let mut json = to_value(&est);
            json["p_expected"] = json!(proto.p_total);
            json["within_4_sigma"] = json!((est.p_hat - p).abs() <= 4.0 * sigma);
            let summary = format!(
                "p_hat = {} ± {:.2e} over {} trials (expected {})",
                est.p_hat, est.stderr, est.trials, proto.p_total
            );
            Ok(CommandOutput::ok(json, summary))
        }
        Command::ReduceBob { operator, state } => {
            let m = load_matrix(operator)?;
            let psi = load_state(state, renorm)?;
            let r = reduce_bob(&m, &psi)?;
            let json = json!({
                "N": matrix_to_json(&r.n),
                "U": matrix_to_json(&r.u),
                "residual": r.residual,
            });
            Ok(CommandOutput::ok(json, format!("reduced; residual {:.3e}", r.residual)))
        }
    }
}

/// Run a parsed command line. Library errors become an error document with
/// the matching exit code.
pub fn run(cli: &Cli) -> CommandOutput {
    execute(cli).unwrap_or_else(|err| CommandOutput {
        json: error_json(&err),
        summary: format!("error: {err}"),
        exit_code: exit_code_for(&err),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(sq: &[f64]) -> BipartiteState {
        BipartiteState::from_schmidt(sq, sq.len(), sq.len()).unwrap()
    }

    #[test]
    fn state_file_round_trip() {
        let s = state(&[0.7, 0.2, 0.1]);
        let text = serde_json::to_string(&StateFile::from_state(&s)).unwrap();
        let back: StateFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_state(false).unwrap().amp(), s.amp());
    }

    #[test]
    fn state_file_format() {
        let f: StateFile =
            serde_json::from_str(r#"{"dims":[2,2],"matrix":[[[0.6,0],[0,0]],[[0,0],[0,0.8]]]}"#).unwrap();
        let s = f.to_state(false).unwrap();
        assert!((s.amp()[(1, 1)].im - 0.8).abs() < 1e-15);
    }

    #[test]
    fn state_file_rejections() {
        let unnorm = MatrixFile {
            dims: [1, 2],
            matrix: vec![vec![[1.0, 0.0], [1.0, 0.0]]],
        };
        assert!(matches!(unnorm.to_state(false), Err(Error::InvalidInput(_))));
        let s = unnorm.to_state(true).unwrap();
        assert!((frobenius(s.amp()) - 1.0).abs() < 1e-15);

        let wrong_dims = MatrixFile {
            dims: [2, 2],
            matrix: vec![vec![[1.0, 0.0], [0.0, 0.0]]],
        };
        assert!(matches!(wrong_dims.to_state(false), Err(Error::DimensionMismatch(_))));

        let ragged = MatrixFile {
            dims: [2, 2],
            matrix: vec![vec![[1.0, 0.0]], vec![[0.0, 0.0], [0.0, 0.0]]],
        };
        assert!(matches!(ragged.to_state(false), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn protocol_round_trip_is_exact() {
        let a = state(&[0.8, 0.2]);
        let b = state(&[0.5, 0.5]);
        let proto = synthesize(&a, &b, ProbabilityRequest::Max).unwrap();
        let text = serde_json::to_string(&ProtocolFile::from(&proto)).unwrap();
        let back: ProtocolFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_protocol().unwrap(), proto);
    }

    #[test]
    fn protocol_shape_is_checked() {
        let a = state(&[0.5, 0.5]);
        let proto = synthesize(&a, &a, ProbabilityRequest::Max).unwrap();
        let mut file = ProtocolFile::from(&proto);
        file.meta.dims = [3, 3];
        assert!(matches!(file.to_protocol(), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn error_codes() {
        let inf = Error::Infeasible {
            reason: "x".into(),
            p_max: Some(0.4),
        };
        assert_eq!(exit_code_for(&inf), EXIT_FAILED);
        assert_eq!(error_json(&inf)["error"]["p_max"], json!(0.4));
        assert_eq!(exit_code_for(&Error::InvalidInput("x".into())), EXIT_INVALID);
        assert_eq!(exit_code_for(&Error::DimensionMismatch("x".into())), EXIT_INVALID);
    }

    #[test]
    fn cli_parses_flags() {
        let cli = Cli::try_parse_from([
            "locc-forge",
            "synthesize",
            "a.json",
            "b.json",
            "--p",
            "0.4",
            "-o",
            "out.json",
        ])
        .unwrap();
        assert_eq!(cli.common.output.as_deref(), Some(Path::new("out.json")));
        assert!(matches!(cli.command, Command::Synthesize { ref p, .. } if p == "0.4"));
        let cli = Cli::try_parse_from(["locc-forge", "--tol", "1e-6", "verify", "p", "a", "b"]).unwrap();
        assert_eq!(cli.common.tol, 1e-6);
    }
}
