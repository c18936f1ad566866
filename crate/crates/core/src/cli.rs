//! Command-line front end and the JSON artifact format.
//!
//! Every file is `{"format_version", "kind", "payload"}`. Complex numbers are
//! `[re, im]` pairs and matrices are row-major nested lists.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::aglerkit::{inner_check, knese_realization, KneseWitness};
use crate::bessmertnyi::{
    check_decomposition, eval_pencil, homogeneous_structure_check, pencil_decomposition, LongResolventPencil,
    PencilClass, PencilDecomposition,
};
use crate::cayley::{operator_cayley_tuple, TupleDirection, TupleOfMatrices};
use crate::error::{Error, Result};
use crate::herglotz::{check_xi_identity, eval_herglotz, HerglotzRealization};
use crate::numerics::{c, hermitian_part, min_eigenvalue, op_norm, CMatrix, Tolerances};
use crate::pipeline::{synthesize, StageReport, SynthesisOptions, Target};
use crate::polyalg::{Domain, MatrixPolynomial, MultiIndex};
use crate::realization::{
    check_agler_identity, check_difference_identity, eval_transfer, eval_transfer_tuple, verify_realization,
    GivoneRoesserRealization, StructureFlags,
};
use crate::verify::{
    check_cayley_inner, check_homogeneous, check_positive_kernel, check_real, check_real_part_positivity, gen_instance,
    Instance, InstanceDims, InstanceKind, PlanDomain, SamplePlan, SampleReport,
};

pub const FORMAT_VERSION: &str = "1.0";

/// Default sample count for identity checks.
pub const DEFAULT_SAMPLES: usize = 100;
/// Default sample count for positivity sweeps.
pub const DEFAULT_POSITIVITY_SAMPLES: usize = 500;
/// Points in a positive-kernel Gram matrix.
const KERNEL_POINTS: usize = 20;
/// Largest generated tuple size for tuple positivity.
const MAX_TUPLE_SIZE: usize = 4;
/// Tuple positivity allows this multiple of `identity_atol`.
const TUPLE_PSD_FACTOR: f64 = 10.0;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Malformed = 1,
    Singular = 2,
    StageFailed = 3,
    CheckFailed = 4,
}

// ---------------------------------------------------------------- numbers

type JMatrix = Vec<Vec<[f64; 2]>>;

fn mat_to_json(m: &CMatrix) -> JMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn mat_from_json(j: &JMatrix, rows: usize, cols: usize, what: &str) -> Result<CMatrix> {
    if j.len() != rows || j.iter().any(|r| r.len() != cols) {
        return Err(Error::Artifact(format!("{what} must be {rows}x{cols}")));
    }
    let m = CMatrix::from_fn(rows, cols, |i, k| c(j[i][k][0], j[i][k][1]));
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Artifact(format!("{what} has non-finite entries")));
    }
    Ok(m)
}

/// `f64` that survives JSON even when infinite or NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum JF64 {
    Finite(f64),
    Special(String),
}

impl From<f64> for JF64 {
    fn from(x: f64) -> Self {
        if x.is_finite() {
            JF64::Finite(x)
        } else if x.is_nan() {
            JF64::Special("nan".into())
        } else if x > 0.0 {
            JF64::Special("inf".into())
        } else {
            JF64::Special("-inf".into())
        }
    }
}

impl JF64 {
    fn value(&self) -> Result<f64> {
        match self {
            JF64::Finite(x) => Ok(*x),
            JF64::Special(s) => match s.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(Error::Artifact(format!("bad number {other:?}"))),
            },
        }
    }
}

// ---------------------------------------------------------------- payloads

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PencilData {
    d: usize,
    n: usize,
    m: usize,
    tag: PencilClass,
    coefficients: Vec<JMatrix>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GrData {
    d: usize,
    n: usize,
    state_dims: Vec<usize>,
    u: JMatrix,
    flags: StructureFlags,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HerglotzData {
    d: usize,
    n: usize,
    state_dims: Vec<usize>,
    beta: JMatrix,
    w: JMatrix,
    v: JMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermData {
    exponents: Vec<u32>,
    matrix: JMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyData {
    d: usize,
    rows: usize,
    cols: usize,
    terms: Vec<TermData>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolySetData {
    polynomials: Vec<PolyData>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KneseData {
    p: PolyData,
    q: PolyData,
    psis: Vec<PolyData>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TupleData {
    d: usize,
    size: usize,
    commutation_tol: f64,
    matrices: Vec<JMatrix>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecompositionData {
    pencil: PencilData,
    factors: Vec<JMatrix>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckData {
    name: String,
    samples: usize,
    skipped: usize,
    max_residual: JF64,
    threshold: JF64,
    verdict: bool,
    witness: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageData {
    stage: String,
    checks: Vec<CheckData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Failure {
    pub stage: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportData {
    command: String,
    passed: bool,
    stages: Vec<StageData>,
    failure: Option<Failure>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileData {
    format_version: String,
    kind: String,
    payload: Value,
}

/// Outcome of a command: grouped check reports plus the failing stage, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub stages: Vec<StageReport>,
    pub failure: Option<Failure>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.stages.iter().all(StageReport::passed)
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for st in &self.stages {
            for r in &st.reports {
                out.push_str(&format!(
                    "{} {}/{}: max residual {:.3e} (threshold {:.1e}, {} samples, {} skipped)\n",
                    if r.verdict { "PASS" } else { "FAIL" },
                    st.stage,
                    r.name,
                    r.max_residual,
                    r.threshold,
                    r.samples,
                    r.skipped
                ));
            }
        }
        if let Some(f) = &self.failure {
            out.push_str(&format!("FAIL stage {} ({}): {}\n", f.stage, f.kind, f.message));
        }
        out
    }
}

// ---------------------------------------------------------------- artifacts

/// Every artifact kind the CLI reads or writes.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Pencil(LongResolventPencil),
    GrRealization(GivoneRoesserRealization),
    HerglotzRealization(HerglotzRealization),
    MatrixPolynomialSet(Vec<MatrixPolynomial>),
    KneseWitness(KneseWitness),
    Report(Report),
    Tuple(TupleOfMatrices),
    Decomposition(PencilDecomposition),
}

fn pencil_data(p: &LongResolventPencil) -> PencilData {
    PencilData {
        d: p.d(),
        n: p.n(),
        m: p.m(),
        tag: p.class(),
        coefficients: p.coeffs().iter().map(mat_to_json).collect(),
    }
}

fn pencil_from(data: &PencilData, tol: &Tolerances) -> Result<LongResolventPencil> {
    if data.coefficients.len() != data.d + 1 {
        return Err(Error::Artifact(format!(
            "pencil with d = {} needs {} coefficients",
            data.d,
            data.d + 1
        )));
    }
    let size = data.n + data.m;
    let coeffs = data
        .coefficients
        .iter()
        .enumerate()
        .map(|(k, a)| mat_from_json(a, size, size, &format!("A{k}")))
        .collect::<Result<Vec<_>>>()?;
    LongResolventPencil::new(data.n, data.m, coeffs, data.tag, tol)
}

fn poly_data(p: &MatrixPolynomial) -> PolyData {
    PolyData {
        d: p.d(),
        rows: p.rows(),
        cols: p.cols(),
        terms: p
            .terms()
            .map(|(idx, m)| TermData {
                exponents: idx.exponents().to_vec(),
                matrix: mat_to_json(m),
            })
            .collect(),
    }
}

fn poly_from(data: &PolyData) -> Result<MatrixPolynomial> {
    let terms = data
        .terms
        .iter()
        .map(|t| {
            if t.exponents.len() != data.d {
                return Err(Error::Artifact(format!("exponent vector must have length {}", data.d)));
            }
            Ok((
                MultiIndex::new(t.exponents.clone()),
                mat_from_json(&t.matrix, data.rows, data.cols, "coefficient")?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixPolynomial::from_terms(data.d, data.rows, data.cols, terms)
}

fn check_data(r: &SampleReport) -> CheckData {
    CheckData {
        name: r.name.clone(),
        samples: r.samples,
        skipped: r.skipped,
        max_residual: r.max_residual.into(),
        threshold: r.threshold.into(),
        verdict: r.verdict,
        witness: r.witness.iter().map(|z| [z.re, z.im]).collect(),
    }
}

fn check_from(data: &CheckData) -> Result<SampleReport> {
    Ok(SampleReport {
        name: data.name.clone(),
        samples: data.samples,
        skipped: data.skipped,
        max_residual: data.max_residual.value()?,
        threshold: data.threshold.value()?,
        verdict: data.verdict,
        witness: data.witness.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
    })
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("artifact payloads are plain data")
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Artifact(e.to_string()))
}

impl Artifact {
    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::Pencil(_) => "pencil",
            Artifact::GrRealization(_) => "gr_realization",
            Artifact::HerglotzRealization(_) => "herglotz_realization",
            Artifact::MatrixPolynomialSet(_) => "matrix_polynomial_set",
            Artifact::KneseWitness(_) => "knese_witness",
            Artifact::Report(_) => "report",
            Artifact::Tuple(_) => "tuple",
            Artifact::Decomposition(_) => "decomposition",
        }
    }

    fn payload(&self) -> Value {
        match self {
            Artifact::Pencil(p) => to_value(&pencil_data(p)),
            Artifact::GrRealization(g) => to_value(&GrData {
                d: g.d(),
                n: g.n(),
                state_dims: g.state_dims().to_vec(),
                u: mat_to_json(g.u()),
                flags: g.flags(),
            }),
            Artifact::HerglotzRealization(h) => to_value(&HerglotzData {
                d: h.d(),
                n: h.n(),
                state_dims: h.state_dims().to_vec(),
                beta: mat_to_json(h.beta()),
                w: mat_to_json(h.w()),
                v: mat_to_json(h.v()),
            }),
            Artifact::MatrixPolynomialSet(ps) => to_value(&PolySetData {
                polynomials: ps.iter().map(poly_data).collect(),
            }),
            Artifact::KneseWitness(w) => to_value(&KneseData {
                p: poly_data(&w.p),
                q: poly_data(&w.q),
                psis: w.psis.iter().map(poly_data).collect(),
            }),
            Artifact::Report(r) => to_value(&ReportData {
                command: r.command.clone(),
                passed: r.passed(),
                stages: r
                    .stages
                    .iter()
                    .map(|s| StageData {
                        stage: s.stage.clone(),
                        checks: s.reports.iter().map(check_data).collect(),
                    })
                    .collect(),
                failure: r.failure.clone(),
            }),
            Artifact::Tuple(t) => to_value(&TupleData {
                d: t.d(),
                size: t.size(),
                commutation_tol: t.commutation_tol(),
                matrices: t.matrices().iter().map(mat_to_json).collect(),
            }),
            Artifact::Decomposition(dec) => to_value(&DecompositionData {
                pencil: pencil_data(&dec.pencil),
                factors: dec.factors.iter().map(mat_to_json).collect(),
            }),
        }
    }

    /// Serialized file contents, ending with a newline.
    pub fn to_json(&self) -> String {
        let file = FileData {
            format_version: FORMAT_VERSION.into(),
            kind: self.kind().into(),
            payload: self.payload(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("artifact payloads are plain data");
        s.push('\n');
        s
    }

    /// Parses and re-validates an artifact.
    pub fn from_json(text: &str, tol: &Tolerances) -> Result<Self> {
        let file: FileData = serde_json::from_str(text).map_err(|e| Error::Artifact(e.to_string()))?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported format_version {:?}",
                file.format_version
            )));
        }
        let payload = file.payload;
        Ok(match file.kind.as_str() {
            "pencil" => Artifact::Pencil(pencil_from(&from_value(payload)?, tol)?),
            "gr_realization" => {
                let g: GrData = from_value(payload)?;
                if g.state_dims.len() != g.d {
                    return Err(Error::Artifact("state_dims must have length d".into()));
                }
                let size = g.n + g.state_dims.iter().sum::<usize>();
                let u = mat_from_json(&g.u, size, size, "U")?;
                Artifact::GrRealization(GivoneRoesserRealization::new(g.n, g.state_dims, u, g.flags, tol)?)
            }
            "herglotz_realization" => {
                let h: HerglotzData = from_value(payload)?;
                if h.state_dims.len() != h.d {
                    return Err(Error::Artifact("state_dims must have length d".into()));
                }
                let m: usize = h.state_dims.iter().sum();
                let beta = mat_from_json(&h.beta, h.n, h.n, "beta")?;
                let w = mat_from_json(&h.w, m, m, "W")?;
                let v = mat_from_json(&h.v, m, h.n, "V")?;
                Artifact::HerglotzRealization(HerglotzRealization::new(h.state_dims, beta, w, v, tol)?)
            }
            "matrix_polynomial_set" => {
                let s: PolySetData = from_value(payload)?;
                Artifact::MatrixPolynomialSet(s.polynomials.iter().map(poly_from).collect::<Result<_>>()?)
            }
            "knese_witness" => {
                let k: KneseData = from_value(payload)?;
                let psis = k.psis.iter().map(poly_from).collect::<Result<Vec<_>>>()?;
                Artifact::KneseWitness(KneseWitness::new(poly_from(&k.p)?, poly_from(&k.q)?, psis)?)
            }
            "report" => {
                let r: ReportData = from_value(payload)?;
                let stages = r
                    .stages
                    .iter()
                    .map(|s| {
                        Ok(StageReport {
                            stage: s.stage.clone(),
                            reports: s.checks.iter().map(check_from).collect::<Result<_>>()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let report = Report {
                    command: r.command,
                    stages,
                    failure: r.failure,
                };
                if report.passed() != r.passed {
                    return Err(Error::Artifact("report passed flag disagrees with its checks".into()));
                }
                Artifact::Report(report)
            }
            "tuple" => {
                let t: TupleData = from_value(payload)?;
                if t.matrices.len() != t.d {
                    return Err(Error::Artifact("tuple needs d matrices".into()));
                }
                let mats = t
                    .matrices
                    .iter()
                    .map(|m| mat_from_json(m, t.size, t.size, "tuple entry"))
                    .collect::<Result<Vec<_>>>()?;
                Artifact::Tuple(TupleOfMatrices::new(mats, t.commutation_tol)?)
            }
            "decomposition" => {
                let dd: DecompositionData = from_value(payload)?;
                let pencil = pencil_from(&dd.pencil, tol)?;
                if dd.factors.len() != pencil.d() {
                    return Err(Error::Artifact("decomposition needs one factor per variable".into()));
                }
                let size = pencil.n() + pencil.m();
                let mut factors = Vec::new();
                for (k, y) in dd.factors.iter().enumerate() {
                    let y = mat_from_json(y, y.len(), size, &format!("Y{}", k + 1))?;
                    let a = &pencil.coeffs()[k + 1];
                    let res = op_norm(&(y.adjoint() * &y - a)) / op_norm(a).max(1.0);
                    if res > tol.identity_atol {
                        return Err(Error::Artifact(format!(
                            "Y{0}*Y{0} differs from A{0} by {res:.3e}",
                            k + 1
                        )));
                    }
                    factors.push(y);
                }
                Artifact::Decomposition(PencilDecomposition { pencil, factors })
            }
            other => return Err(Error::Artifact(format!("unknown artifact kind {other:?}"))),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path, tol: &Tolerances) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, tol)
    }
}

impl From<Instance> for Artifact {
    fn from(i: Instance) -> Self {
        match i {
            Instance::Pencil(p) => Artifact::Pencil(p),
            Instance::Herglotz(h) => Artifact::HerglotzRealization(h),
            Instance::Gr(g) => Artifact::GrRealization(g),
            Instance::Tuple(t) => Artifact::Tuple(t),
        }
    }
}

// ---------------------------------------------------------------- arguments

#[derive(Debug, Parser)]
#[command(
    name = "cayley-realize",
    version,
    about = "Realizations of Cayley inner Herglotz functions"
)]
struct Cli {
    /// Absolute tolerance for identities.
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Relative singular value cutoff for numerical rank.
    #[arg(long, global = true)]
    rank_rtol: Option<f64>,
    /// Allowed negative slack on minimum eigenvalues.
    #[arg(long, global = true)]
    psd_atol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate an artifact at points or on a commuting tuple.
    Eval {
        #[arg(long)]
        input: PathBuf,
        /// JSON file with a list of points (or a tuple artifact with --tuple).
        #[arg(long)]
        points: Option<PathBuf>,
        /// Inline point as JSON, e.g. '[1, [0.5, 2]]'.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        /// Treat --points as a tuple artifact.
        #[arg(long)]
        tuple: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the synthesis chain on a pencil.
    Synthesize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "pencil_roundtrip")]
        target: Target,
        #[arg(long)]
        output: PathBuf,
        /// Report path; defaults to the output path with `.report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        hermitian: bool,
        #[arg(long)]
        real: bool,
        /// Factor A_k by its square root instead of a rank factor.
        #[arg(long)]
        literal_sqrt: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Run sampled checks on an artifact.
    Verify {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated check names; all applicable checks when omitted.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        samples: Option<usize>,
        /// Report path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a seeded instance.
    Generate {
        #[arg(long)]
        kind: InstanceKind,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Tuple size for commuting_contractions.
        #[arg(long, default_value_t = 2)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

// ---------------------------------------------------------------- commands

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn fail(&mut self, code: ExitCode, e: &dyn std::fmt::Display) -> ExitCode {
        let _ = writeln!(self.err, "error: {e}");
        code
    }
}

fn load_code(e: &Error) -> ExitCode {
    if e.is_singular_evaluation() {
        ExitCode::Singular
    } else {
        ExitCode::Malformed
    }
}

fn parse_number(v: &Value) -> Result<Complex64> {
    match v {
        Value::Number(x) => x.as_f64().map(|x| c(x, 0.0)),
        Value::Array(a) if a.len() == 2 => match (a[0].as_f64(), a[1].as_f64()) {
            (Some(re), Some(im)) => Some(c(re, im)),
            _ => None,
        },
        _ => None,
    }
    .ok_or_else(|| Error::Artifact(format!("expected a number or [re, im], got {v}")))
}

fn parse_point(v: &Value) -> Result<Vec<Complex64>> {
    match v {
        Value::Array(a) => a.iter().map(parse_number).collect(),
        _ => Err(Error::Artifact(format!(
            "expected a point (list of coordinates), got {v}"
        ))),
    }
}

fn parse_points(text: &str) -> Result<Vec<Vec<Complex64>>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Artifact(e.to_string()))?;
    match &v {
        Value::Array(items) => items.iter().map(parse_point).collect(),
        _ => Err(Error::Artifact("points file must hold a list of points".into())),
    }
}

fn matrix_line(m: &CMatrix) -> String {
    serde_json::to_string(&mat_to_json(m)).expect("plain data")
}

fn cmd_eval(
    io: &mut Io,
    input: &Path,
    points: Option<&Path>,
    point: Option<&str>,
    tuple: bool,
    seed: u64,
    tol: &Tolerances,
) -> ExitCode {
    let art = match Artifact::load(input, tol) {
        Ok(a) => a,
        Err(e) => return io.fail(ExitCode::Malformed, &e),
    };
    if tuple {
        let Some(path) = points else {
            return io.fail(ExitCode::Malformed, &"--tuple needs --points with a tuple artifact");
        };
        let t = match Artifact::load(path, tol) {
            Ok(Artifact::Tuple(t)) => t,
            Ok(other) => return io.fail(ExitCode::Malformed, &format!("expected a tuple, got {}", other.kind())),
            Err(e) => return io.fail(ExitCode::Malformed, &e),
        };
        let value = match &art {
            Artifact::GrRealization(g) => eval_transfer_tuple(g, &t),
            Artifact::Pencil(p) => {
                let opts = SynthesisOptions {
                    seed,
                    ..SynthesisOptions::default()
                };
                match synthesize(p, Target::Gr, &opts, tol) {
                    Ok(s) => s.eval_on_tuple(&t, tol),
                    Err(f) => return io.fail(ExitCode::StageFailed, &f),
                }
            }
            other => Err(Error::InvalidArgument(format!(
                "{} does not support tuple evaluation",
                other.kind()
            ))),
        };
        return match value {
            Ok(v) => {
                let _ = writeln!(io.out, "{}", matrix_line(&v));
                ExitCode::Ok
            }
            Err(e) => io.fail(load_code(&e), &e),
        };
    }

    let pts = match (points, point) {
        (Some(p), None) => fs::read_to_string(p)
            .map_err(|e| Error::Artifact(format!("{}: {e}", p.display())))
            .and_then(|t| parse_points(&t)),
        (None, Some(s)) => serde_json::from_str::<Value>(s)
            .map_err(|e| Error::Artifact(e.to_string()))
            .and_then(|v| parse_point(&v))
            .map(|p| vec![p]),
        _ => Err(Error::Artifact("give exactly one of --points or --point".into())),
    };
    let pts = match pts {
        Ok(p) => p,
        Err(e) => return io.fail(ExitCode::Malformed, &e),
    };
    for z in &pts {
        let value = match &art {
            Artifact::Pencil(p) if z.len() == p.d() => eval_pencil(p, z),
            Artifact::GrRealization(g) if z.len() == g.d() => eval_transfer(g, z),
            Artifact::HerglotzRealization(h) if z.len() == h.d() => eval_herglotz(h, z),
            Artifact::KneseWitness(w) if z.len() == w.d() => w.transfer_handle().eval(z),
            Artifact::MatrixPolynomialSet(ps) if ps.iter().all(|p| p.d() == z.len()) => {
                let mut ok = Ok(());
                for p in ps {
                    match p.eval(z) {
                        Ok(v) => {
                            let _ = writeln!(io.out, "{}", matrix_line(&v));
                        }
                        Err(e) => {
                            ok = Err(e);
                            break;
                        }
                    }
                }
                match ok {
                    Ok(()) => continue,
                    Err(e) => Err(e),
                }
            }
            Artifact::Report(_) | Artifact::Tuple(_) | Artifact::Decomposition(_) => {
                return io.fail(
                    ExitCode::Malformed,
                    &format!("{} artifacts cannot be evaluated", art.kind()),
                )
            }
            _ => return io.fail(ExitCode::Malformed, &format!("point has {} coordinates", z.len())),
        };
        match value {
            Ok(v) => {
                let _ = writeln!(io.out, "{}", matrix_line(&v));
            }
            Err(e) => return io.fail(load_code(&e), &e),
        }
    }
    ExitCode::Ok
}

fn write_report(io: &mut Io, report: &Report, path: &Path) -> bool {
    match Artifact::Report(report.clone()).save(path) {
        Ok(()) => true,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            false
        }
    }
}

fn default_report_path(output: &Path) -> PathBuf {
    let mut name: OsString = output.file_stem().map(OsString::from).unwrap_or_default();
    name.push(".report.json");
    output.with_file_name(name)
}

#[allow(clippy::too_many_arguments)]
fn cmd_synthesize(
    io: &mut Io,
    input: &Path,
    target: Target,
    output: &Path,
    report_path: Option<&Path>,
    opts: SynthesisOptions,
    tol: &Tolerances,
) -> ExitCode {
    let pencil = match Artifact::load(input, tol) {
        Ok(Artifact::Pencil(p)) => p,
        Ok(other) => return io.fail(ExitCode::Malformed, &format!("expected a pencil, got {}", other.kind())),
        Err(e) => return io.fail(ExitCode::Malformed, &e),
    };
    let report_path = report_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_report_path(output));
    match synthesize(&pencil, target, &opts, tol) {
        Ok(s) => {
            let artifact = match target {
                Target::Decomposition => Artifact::Decomposition(s.decomposition.clone()),
                Target::Gr => Artifact::GrRealization(s.gr.clone().expect("gr stage ran")),
                Target::Herglotz => Artifact::HerglotzRealization(s.herglotz.clone().expect("herglotz stage ran")),
                Target::PencilRoundtrip => Artifact::Pencil(s.pencil.clone().expect("pencil stage ran")),
            };
            let report = Report {
                command: format!("synthesize {target}"),
                stages: s.stages.clone(),
                failure: None,
            };
            if let Err(e) = artifact.save(output) {
                return io.fail(ExitCode::Malformed, &e);
            }
            if !write_report(io, &report, &report_path) {
                return ExitCode::Malformed;
            }
            let _ = write!(io.out, "{}", report.summary());
            if report.passed() {
                ExitCode::Ok
            } else {
                ExitCode::CheckFailed
            }
        }
        Err(f) => {
            let report = Report {
                command: format!("synthesize {target}"),
                stages: f.completed.clone(),
                failure: Some(Failure {
                    stage: f.stage.clone(),
                    kind: f.error.kind().into(),
                    message: f.error.to_string(),
                }),
            };
            write_report(io, &report, &report_path);
            let _ = write!(io.out, "{}", report.summary());
            io.fail(
                ExitCode::StageFailed,
                &format!("{} in stage {}: {}", f.error.kind(), f.stage, f.error),
            )
        }
    }
}

/// Checks that apply to an artifact, in their default order.
pub fn applicable_checks(art: &Artifact) -> Vec<&'static str> {
    match art {
        Artifact::Pencil(p) => {
            let mut v = vec![
                "cayley_inner",
                "herglotz_positivity",
                "decomposition",
                "positive_kernel",
                "tuple_positivity",
            ];
            if p.class().is_homogeneous() {
                v.push("homogeneous");
            }
            if p.class() == PencilClass::RealHomogeneous {
                v.push("real");
            }
            v
        }
        Artifact::GrRealization(g) => {
            let mut v = vec!["unitarity", "agler"];
            if g.flags().hermitian {
                v.extend(["hermitian", "difference"]);
            }
            if g.flags().real {
                v.push("real");
            }
            v
        }
        Artifact::HerglotzRealization(_) => vec!["xi", "herglotz_positivity", "homogeneous_structure"],
        Artifact::KneseWitness(_) => vec!["knese", "inner", "realization"],
        Artifact::Tuple(_) => vec!["commutation", "contraction", "accretive"],
        Artifact::Decomposition(_) => vec!["decomposition", "positive_kernel"],
        Artifact::MatrixPolynomialSet(_) | Artifact::Report(_) => vec![],
    }
}

fn kernel_reports(dec: &PencilDecomposition, plan: &SamplePlan, tol: &Tolerances) -> Result<Vec<SampleReport>> {
    let mut kplan = *plan;
    kplan.count = KERNEL_POINTS;
    let points = kplan.points(dec.pencil.d());
    dec.phis()
        .into_iter()
        .enumerate()
        .map(|(k, phi)| {
            let mut r = check_positive_kernel(
                |w: &[Complex64], z: &[Complex64]| Ok(phi.eval(w)?.adjoint() * phi.eval(z)?),
                &points,
                tol,
            )?;
            r.name = format!("positive_kernel_{}", k + 1);
            Ok(r)
        })
        .collect()
}

fn decomposition_reports(dec: &PencilDecomposition, plan: &SamplePlan, tol: &Tolerances) -> Result<Vec<SampleReport>> {
    let f = dec.pencil.to_handle();
    let mut out = vec![check_decomposition(&f, &dec.phis(), plan, false, tol)?];
    if dec.pencil.class().is_homogeneous() {
        out.push(check_decomposition(&f, &dec.phis(), plan, true, tol)?);
    }
    Ok(out)
}

/// `min eig(f(R) + f(R)*)` over seeded commuting strictly accretive tuples.
pub fn tuple_positivity(p: &LongResolventPencil, seed: u64, count: usize, tol: &Tolerances) -> Result<SampleReport> {
    let opts = SynthesisOptions {
        seed,
        ..SynthesisOptions::default()
    };
    let chain = synthesize(p, Target::Gr, &opts, tol).map_err(|f| f.error)?;
    let mut worst = 0.0_f64;
    let mut witness = vec![];
    let mut scale = 1.0_f64;
    for i in 0..count {
        let dims = InstanceDims {
            d: p.d(),
            n: 1,
            m: 1,
            s: 1 + i % MAX_TUPLE_SIZE,
        };
        let Instance::Tuple(t) = gen_instance(
            InstanceKind::CommutingContractions,
            seed.wrapping_add(i as u64),
            dims,
            tol,
        )?
        else {
            unreachable!("commuting_contractions yields a tuple")
        };
        let r = operator_cayley_tuple(&t, TupleDirection::ContractiveToAccretive, tol)?;
        let fr = chain.eval_on_tuple(&r, tol)?;
        let sym = hermitian_part(&fr) * c(2.0, 0.0);
        scale = scale.max(op_norm(&sym));
        let neg = (-min_eigenvalue(&sym)).max(0.0);
        if neg > worst || witness.is_empty() {
            worst = worst.max(neg);
            witness = vec![c(i as f64, 0.0)];
        }
    }
    let threshold = TUPLE_PSD_FACTOR * tol.identity_atol * scale;
    let mut report = SampleReport::scalar("tuple_positivity", worst, threshold);
    report.samples = count;
    report.witness = witness;
    Ok(report)
}

fn run_check(
    name: &str,
    art: &Artifact,
    seed: u64,
    samples: Option<usize>,
    tol: &Tolerances,
) -> Result<Vec<SampleReport>> {
    let count = samples.unwrap_or(DEFAULT_SAMPLES);
    let sweep = samples.unwrap_or(DEFAULT_POSITIVITY_SAMPLES);
    let halfplane = SamplePlan::polyhalfplane(seed, count);
    let disk = SamplePlan::polydisk(seed, count);
    let unsupported = || Error::InvalidArgument(format!("check {name:?} does not apply to {}", art.kind()));
    let one = |r: Result<SampleReport>| r.map(|r| vec![r]);
    match (art, name) {
        (Artifact::Pencil(p), "cayley_inner") => one(check_cayley_inner(&p.to_handle(), &halfplane, tol)),
        (Artifact::Pencil(p), "herglotz_positivity") => one(check_real_part_positivity(
            &p.to_handle(),
            &SamplePlan::polyhalfplane(seed, sweep),
            tol,
        )),
        (Artifact::Pencil(p), "homogeneous") => {
            let plan = SamplePlan::new(PlanDomain::ScalingRays, seed, count);
            one(check_homogeneous(&p.to_handle(), &plan, tol))
        }
        (Artifact::Pencil(p), "real") => {
            let plan = SamplePlan::new(PlanDomain::ConjugationPairs, seed, count);
            one(check_real(&p.to_handle(), &plan, tol))
        }
        (Artifact::Pencil(p), "decomposition") => {
            decomposition_reports(&pencil_decomposition(p, false, tol)?, &halfplane, tol)
        }
        (Artifact::Pencil(p), "positive_kernel") => {
            kernel_reports(&pencil_decomposition(p, false, tol)?, &halfplane, tol)
        }
        (Artifact::Pencil(p), "tuple_positivity") => one(tuple_positivity(p, seed, count, tol)),
        (Artifact::Decomposition(dec), "decomposition") => decomposition_reports(dec, &halfplane, tol),
        (Artifact::Decomposition(dec), "positive_kernel") => kernel_reports(dec, &halfplane, tol),
        (Artifact::GrRealization(g), "unitarity") => Ok(vec![SampleReport::scalar(
            "unitarity",
            g.unitarity_residual(),
            tol.identity_atol,
        )]),
        (Artifact::GrRealization(g), "hermitian") => Ok(vec![SampleReport::scalar(
            "hermitian",
            g.hermitian_residual(),
            tol.identity_atol,
        )]),
        (Artifact::GrRealization(g), "real") => {
            Ok(vec![SampleReport::scalar("real", g.real_residual(), tol.identity_atol)])
        }
        (Artifact::GrRealization(g), "agler") => one(check_agler_identity(g, &disk, tol)),
        (Artifact::GrRealization(g), "difference") => one(check_difference_identity(g, &disk, tol)),
        (Artifact::HerglotzRealization(h), "xi") => one(check_xi_identity(h, &disk, tol)),
        (Artifact::HerglotzRealization(h), "herglotz_positivity") => one(check_real_part_positivity(
            &h.to_handle(),
            &SamplePlan::polydisk(seed, sweep),
            tol,
        )),
        (Artifact::HerglotzRealization(h), "homogeneous_structure") => {
            Ok(homogeneous_structure_check(h, tol)?.reports())
        }
        (Artifact::KneseWitness(w), "knese") => Ok(vec![SampleReport::scalar("knese", w.residual, tol.identity_atol)]),
        (Artifact::KneseWitness(w), "inner") => {
            let r = inner_check(
                &w.transfer_handle(),
                &SamplePlan::torus(seed, 2 * count),
                Some(&w.p),
                tol,
            )?;
            Ok(vec![r.torus, r.continuation])
        }
        (Artifact::KneseWitness(w), "realization") => {
            let g = knese_realization(w, &disk, tol)?;
            let f = w.transfer_handle().with_domain(Domain::Polydisk);
            Ok(verify_realization(&g, &f, &disk.reseeded(7), tol)?.reports())
        }
        (Artifact::Tuple(t), "commutation") => Ok(vec![SampleReport::scalar(
            "commutation",
            t.commutation_residual(),
            t.commutation_tol(),
        )]),
        (Artifact::Tuple(t), "contraction") => {
            let worst = t.matrices().iter().map(op_norm).fold(0.0, f64::max);
            Ok(vec![SampleReport::scalar("contraction", worst, 1.0 - 1e-10)])
        }
        (Artifact::Tuple(t), "accretive") => {
            let r = operator_cayley_tuple(t, TupleDirection::ContractiveToAccretive, tol)?;
            let worst = r
                .matrices()
                .iter()
                .map(|m| (-min_eigenvalue(&hermitian_part(m))).max(0.0))
                .fold(0.0, f64::max);
            let strict = r.check_strictly_accretive(tol).is_ok();
            let mut rep = SampleReport::scalar("accretive", worst, tol.psd_atol);
            rep.verdict = rep.verdict && strict;
            Ok(vec![rep])
        }
        _ => Err(unsupported()),
    }
}

/// Runs the named checks (all applicable ones when `checks` is `None`).
///
/// Unknown or inapplicable names are an error. A check that raises is recorded
/// as the report's failure and stops the run.
pub fn verify_artifact(
    art: &Artifact,
    checks: Option<&[String]>,
    seed: u64,
    samples: Option<usize>,
    tol: &Tolerances,
) -> Result<Report> {
    let applicable = applicable_checks(art);
    let names: Vec<String> = match checks {
        Some(list) => list
            .iter()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        None => applicable.iter().map(|s| s.to_string()).collect(),
    };
    if names.is_empty() {
        return Err(Error::InvalidArgument(format!("no checks apply to {}", art.kind())));
    }
    if let Some(bad) = names.iter().find(|n| !applicable.contains(&n.as_str())) {
        return Err(Error::InvalidArgument(format!(
            "check {bad:?} does not apply to {} (available: {})",
            art.kind(),
            applicable.join(", ")
        )));
    }
    let mut stages = Vec::new();
    let mut failure = None;
    for name in &names {
        match run_check(name, art, seed, samples, tol) {
            Ok(reports) => stages.push(StageReport {
                stage: name.clone(),
                reports,
            }),
            Err(e) => {
                failure = Some(Failure {
                    stage: name.clone(),
                    kind: e.kind().into(),
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    Ok(Report {
        command: "verify".into(),
        stages,
        failure,
    })
}

fn cmd_verify(
    io: &mut Io,
    input: &Path,
    checks: Option<&[String]>,
    seed: u64,
    samples: Option<usize>,
    output: Option<&Path>,
    tol: &Tolerances,
) -> ExitCode {
    let art = match Artifact::load(input, tol) {
        Ok(a) => a,
        Err(e) => return io.fail(ExitCode::Malformed, &e),
    };
    let report = match verify_artifact(&art, checks, seed, samples, tol) {
        Ok(r) => r,
        Err(e) => return io.fail(ExitCode::Malformed, &e),
    };
    if let Some(path) = output {
        if !write_report(io, &report, path) {
            return ExitCode::Malformed;
        }
    }
    let _ = write!(io.out, "{}", report.summary());
    if report.passed() {
        ExitCode::Ok
    } else {
        ExitCode::CheckFailed
    }
}

fn cmd_generate(
    io: &mut Io,
    kind: InstanceKind,
    dims: InstanceDims,
    seed: u64,
    output: Option<&Path>,
    tol: &Tolerances,
) -> ExitCode {
    let art: Artifact = match gen_instance(kind, seed, dims, tol) {
        Ok(i) => i.into(),
        Err(e) => return io.fail(ExitCode::Malformed, &e),
    };
    match output {
        Some(path) => match art.save(path) {
            Ok(()) => ExitCode::Ok,
            Err(e) => io.fail(ExitCode::Malformed, &e),
        },
        None => {
            let _ = write!(io.out, "{}", art.to_json());
            ExitCode::Ok
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::Malformed
            } else {
                ExitCode::Ok
            };
            if e.use_stderr() {
                let _ = write!(err, "{e}");
            } else {
                let _ = write!(out, "{e}");
            }
            return code as i32;
        }
    };
    let mut io = Io { out, err };
    let defaults = Tolerances::default();
    let tol = match Tolerances::new(
        cli.atol.unwrap_or(defaults.identity_atol),
        cli.rank_rtol.unwrap_or(defaults.rank_rtol),
        cli.psd_atol.unwrap_or(defaults.psd_atol),
    ) {
        Ok(t) => t,
        Err(e) => return io.fail(ExitCode::Malformed, &e) as i32,
    };
    let code = match cli.command {
        Command::Eval {
            input,
            points,
            point,
            tuple,
            seed,
        } => cmd_eval(&mut io, &input, points.as_deref(), point.as_deref(), tuple, seed, &tol),
        Command::Synthesize {
            input,
            target,
            output,
            report,
            hermitian,
            real,
            literal_sqrt,
            seed,
            samples,
        } => {
            let opts = SynthesisOptions {
                hermitian: hermitian.then_some(true),
                real: real.then_some(true),
                seed,
                samples,
                literal_sqrt,
            };
            cmd_synthesize(&mut io, &input, target, &output, report.as_deref(), opts, &tol)
        }
        Command::Verify {
            input,
            checks,
            seed,
            samples,
            output,
        } => cmd_verify(
            &mut io,
            &input,
            checks.as_deref(),
            seed,
            samples,
            output.as_deref(),
            &tol,
        ),
        Command::Generate {
            kind,
            d,
            n,
            m,
            s,
            seed,
            output,
        } => cmd_generate(
            &mut io,
            kind,
            InstanceDims { d, n, m, s },
            seed,
            output.as_deref(),
            &tol,
        ),
    };
    code as i32
}
