//! Givone–Roesser colligations: transfer functions, defect functions and the
//! lurking-isometry synthesis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cayley::TupleOfMatrices;
use crate::error::{Error, Result};
use crate::numerics::{
    block, c, gram_defect_norm, identity, kron, max_imag, op_norm, orthogonal_completion, rank, real_part, solve,
    to_complex, unitary_completion, zeros, CMatrix, Tolerances,
};
use crate::polyalg::{Domain, FunctionHandle, Point};
use crate::verify::{Accumulator, SamplePlan, SampleReport};

/// Radius of the coordinate-axis points added to every synthesis plan.
const AXIS_RADIUS: f64 = 0.5;
/// Points added when testing whether the sampled spans have saturated.
const STABILITY_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StructureFlags {
    pub unitary: bool,
    pub hermitian: bool,
    pub real: bool,
}

/// Colligation `U = [A B; C D]` with state space split `m_1 + … + m_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GivoneRoesserRealization {
    n: usize,
    state_dims: Vec<usize>,
    u: CMatrix,
    flags: StructureFlags,
}

impl GivoneRoesserRealization {
    /// Builds a realization, checking each flagged property within `identity_atol`.
    pub fn new(n: usize, state_dims: Vec<usize>, u: CMatrix, flags: StructureFlags, tol: &Tolerances) -> Result<Self> {
        let m: usize = state_dims.iter().sum();
        if u.shape() != (m + n, m + n) {
            return Err(Error::DimensionMismatch(format!(
                "colligation must be {0}x{0}, got {1}x{2}",
                m + n,
                u.nrows(),
                u.ncols()
            )));
        }
        let re = GivoneRoesserRealization {
            n,
            state_dims,
            u,
            flags,
        };
        if flags.unitary {
            let residual = re.unitarity_residual();
            if residual > tol.identity_atol {
                return Err(Error::NotUnitary { residual });
            }
        }
        if flags.hermitian {
            let asymmetry = re.hermitian_residual();
            if asymmetry > tol.identity_atol {
                return Err(Error::NotHermitian { asymmetry });
            }
        }
        if flags.real {
            let residual = re.real_residual();
            if residual > tol.identity_atol {
                return Err(Error::NotReal { residual });
            }
        }
        Ok(re)
    }

    pub fn d(&self) -> usize {
        self.state_dims.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.state_dims.iter().sum()
    }

    pub fn state_dims(&self) -> &[usize] {
        &self.state_dims
    }

    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    pub fn flags(&self) -> StructureFlags {
        self.flags
    }

    pub fn a(&self) -> CMatrix {
        block(&self.u, 0, 0, self.m(), self.m())
    }

    pub fn b(&self) -> CMatrix {
        block(&self.u, 0, self.m(), self.m(), self.n)
    }

    pub fn c(&self) -> CMatrix {
        block(&self.u, self.m(), 0, self.n, self.m())
    }

    pub fn d_block(&self) -> CMatrix {
        block(&self.u, self.m(), self.m(), self.n, self.n)
    }

    pub fn unitarity_residual(&self) -> f64 {
        op_norm(&(self.u.adjoint() * &self.u - identity(self.u.nrows())))
    }

    pub fn hermitian_residual(&self) -> f64 {
        op_norm(&(&self.u - self.u.adjoint()))
    }

    pub fn real_residual(&self) -> f64 {
        max_imag(&self.u)
    }
}

/// First state index of each block.
pub fn block_offsets(state_dims: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    state_dims
        .iter()
        .map(|&m| {
            let o = acc;
            acc += m;
            o
        })
        .collect()
}

/// `P(ζ) = Diag[ζ_1 I_{m_1}, …, ζ_d I_{m_d}]`.
pub fn variable_matrix(state_dims: &[usize], zeta: &[Complex64]) -> CMatrix {
    let m: usize = state_dims.iter().sum();
    let mut p = zeros(m, m);
    let mut i = 0;
    for (k, &mk) in state_dims.iter().enumerate() {
        for _ in 0..mk {
            p[(i, i)] = zeta[k];
            i += 1;
        }
    }
    p
}

/// Coordinate projector `P_k`.
pub fn projector(state_dims: &[usize], k: usize) -> CMatrix {
    let mut e = vec![c(0.0, 0.0); state_dims.len()];
    e[k] = c(1.0, 0.0);
    variable_matrix(state_dims, &e)
}

fn check_point(d: usize, zeta: &[Complex64]) -> Result<()> {
    if zeta.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, realization has {d} variables",
            zeta.len()
        )));
    }
    Ok(())
}

/// Value `𝓕(ζ)` together with the stacked defect values `X(ζ) = (I - A P(ζ))^{-1} B`.
fn state_response(re: &GivoneRoesserRealization, zeta: &[Complex64]) -> Result<(CMatrix, CMatrix)> {
    check_point(re.d(), zeta)?;
    let m = re.m();
    if m == 0 {
        return Ok((re.d_block(), zeros(0, re.n)));
    }
    let p = variable_matrix(&re.state_dims, zeta);
    let x = solve(&(identity(m) - re.a() * &p), &re.b()).map_err(|e| match e {
        Error::SingularShift { .. } => Error::ResolventSingular { point: zeta.to_vec() },
        other => other,
    })?;
    let value = re.d_block() + re.c() * p * &x;
    Ok((value, x))
}

/// `𝓕(ζ) = D + C(I - P(ζ)A)^{-1} P(ζ) B`.
pub fn eval_transfer(re: &GivoneRoesserRealization, zeta: &[Complex64]) -> Result<CMatrix> {
    Ok(state_response(re, zeta)?.0)
}

/// Transfer function on a commuting tuple of strict contractions, with
/// `P(T) = Σ P_k ⊗ T_k` (value space outer, tuple space inner).
pub fn eval_transfer_tuple(re: &GivoneRoesserRealization, t: &TupleOfMatrices) -> Result<CMatrix> {
    if t.d() != re.d() {
        return Err(Error::DimensionMismatch(format!(
            "tuple has {} entries, realization has {} variables",
            t.d(),
            re.d()
        )));
    }
    t.check_strict_contraction()?;
    let s = t.size();
    let is = identity(s);
    let m = re.m();
    let d_t = kron(&re.d_block(), &is);
    if m == 0 {
        return Ok(d_t);
    }
    let mut p = zeros(m * s, m * s);
    for (k, tk) in t.matrices().iter().enumerate() {
        p += kron(&projector(&re.state_dims, k), tk);
    }
    let a_t = kron(&re.a(), &is);
    let lhs = identity(m * s) - &p * a_t;
    let rhs = &p * kron(&re.b(), &is);
    let x = solve(&lhs, &rhs).map_err(|e| match e {
        Error::SingularShift { .. } => Error::ResolventSingular { point: vec![] },
        other => other,
    })?;
    Ok(d_t + kron(&re.c(), &is) * x)
}

/// Defect functions `θ_k(ζ) = P_k (I - A P(ζ))^{-1} B`, each `m_k × n`.
pub fn defect_functions(re: &GivoneRoesserRealization) -> Vec<FunctionHandle> {
    let offsets = block_offsets(&re.state_dims);
    (0..re.d())
        .map(|k| {
            let re = re.clone();
            let (o, mk) = (offsets[k], re.state_dims[k]);
            FunctionHandle::new(re.d(), mk, re.n, Domain::Polydisk, move |zeta| {
                let (_, x) = state_response(&re, zeta)?;
                Ok(block(&x, o, 0, mk, x.ncols()))
            })
        })
        .collect()
}

/// `‖I - 𝓕(ω)*𝓕(ζ) - Σ(1 - ω̄_k ζ_k) θ_k(ω)*θ_k(ζ)‖`.
pub fn agler_residual(re: &GivoneRoesserRealization, omega: &[Complex64], zeta: &[Complex64]) -> Result<f64> {
    let (fw, xw) = state_response(re, omega)?;
    let (fz, xz) = state_response(re, zeta)?;
    let m = re.m();
    let weight = identity(m) - variable_matrix(&re.state_dims, omega).adjoint() * variable_matrix(&re.state_dims, zeta);
    let rhs = xw.adjoint() * weight * xz;
    Ok(op_norm(&(identity(re.n) - fw.adjoint() * fz - rhs)))
}

/// `‖𝓕(ω)* - 𝓕(ζ) - Σ(ω̄_k - ζ_k) θ_k(ω)*θ_k(ζ)‖`.
pub fn difference_residual(re: &GivoneRoesserRealization, omega: &[Complex64], zeta: &[Complex64]) -> Result<f64> {
    let (fw, xw) = state_response(re, omega)?;
    let (fz, xz) = state_response(re, zeta)?;
    let weight = variable_matrix(&re.state_dims, omega).adjoint() - variable_matrix(&re.state_dims, zeta);
    let rhs = xw.adjoint() * weight * xz;
    Ok(op_norm(&(fw.adjoint() - fz - rhs)))
}

fn pair_check<F>(
    name: &str,
    re: &GivoneRoesserRealization,
    plan: &SamplePlan,
    tol: &Tolerances,
    f: F,
) -> Result<SampleReport>
where
    F: Fn(&GivoneRoesserRealization, &[Complex64], &[Complex64]) -> Result<f64>,
{
    let mut acc = Accumulator::new(name, tol.identity_atol);
    for (w, z) in plan.pairs(re.d()) {
        let witness: Vec<Complex64> = w.iter().chain(&z).copied().collect();
        acc.record(&witness, f(re, &w, &z))?;
    }
    acc.finish()
}

/// Agler decomposition residual over sampled pairs.
pub fn check_agler_identity(
    re: &GivoneRoesserRealization,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<SampleReport> {
    pair_check("agler_decomposition", re, plan, tol, agler_residual)
}

/// Difference identity residual over sampled pairs (holds for Hermitian colligations).
pub fn check_difference_identity(
    re: &GivoneRoesserRealization,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<SampleReport> {
    pair_check("difference_identity", re, plan, tol, difference_residual)
}

/// Columns `[P(ζ)θ(ζ); I]` and `[θ(ζ); F(ζ)]` at each regular point.
struct Columns {
    l: CMatrix,
    r: CMatrix,
    regular: usize,
    total: usize,
}

fn sample_columns(
    f: &FunctionHandle,
    thetas: &[FunctionHandle],
    state_dims: &[usize],
    points: &[Point],
) -> Result<Columns> {
    let n = f.rows();
    let m: usize = state_dims.iter().sum();
    let offsets = block_offsets(state_dims);
    let mut lcols: Vec<CMatrix> = Vec::new();
    let mut rcols: Vec<CMatrix> = Vec::new();
    let mut skipped = 0;
    'points: for z in points {
        let fz = match f.eval(z) {
            Ok(v) => v,
            Err(e) if e.is_singular_evaluation() => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut theta = zeros(m, n);
        for (k, th) in thetas.iter().enumerate() {
            match th.eval(z) {
                Ok(v) => theta.view_mut((offsets[k], 0), (state_dims[k], n)).copy_from(&v),
                Err(e) if e.is_singular_evaluation() => {
                    skipped += 1;
                    continue 'points;
                }
                Err(e) => return Err(e),
            }
        }
        let p = variable_matrix(state_dims, z);
        let mut l = zeros(m + n, n);
        l.view_mut((0, 0), (m, n)).copy_from(&(p * &theta));
        l.view_mut((m, 0), (n, n)).copy_from(&identity(n));
        let mut r = zeros(m + n, n);
        r.view_mut((0, 0), (m, n)).copy_from(&theta);
        r.view_mut((m, 0), (n, n)).copy_from(&fz);
        lcols.push(l);
        rcols.push(r);
    }
    let regular = lcols.len();
    let hcat = |cols: &[CMatrix]| {
        let mut out = zeros(m + n, n * cols.len());
        for (i, col) in cols.iter().enumerate() {
            out.view_mut((0, i * n), (m + n, n)).copy_from(col);
        }
        out
    };
    Ok(Columns {
        l: hcat(&lcols),
        r: hcat(&rcols),
        regular,
        total: regular + skipped,
    })
}

fn with_conjugates(points: Vec<Point>) -> Vec<Point> {
    let mut out = Vec::with_capacity(2 * points.len());
    for p in points {
        let real = p.iter().all(|w| w.im == 0.0);
        let conj: Point = p.iter().map(|w| w.conj()).collect();
        out.push(p);
        if !real {
            out.push(conj);
        }
    }
    out
}

fn stacked_rank(cols: &Columns, tol: &Tolerances) -> usize {
    let (rows, ncols) = cols.l.shape();
    let mut s = zeros(2 * rows, ncols);
    s.view_mut((0, 0), (rows, ncols)).copy_from(&cols.l);
    s.view_mut((rows, 0), (rows, ncols)).copy_from(&cols.r);
    rank(&s, tol.rank_rtol)
}

fn realify_columns(m: &CMatrix) -> nalgebra::DMatrix<f64> {
    let re = real_part(m);
    let im = m.map(|z| z.im);
    let mut out = nalgebra::DMatrix::<f64>::zeros(m.nrows(), 2 * m.ncols());
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(&re);
    out.view_mut((0, m.ncols()), (m.nrows(), m.ncols())).copy_from(&im);
    out
}

/// Lurking-isometry synthesis of a unitary colligation from an Agler decomposition
/// `I - F(ω)*F(ζ) = Σ(1 - ω̄_k ζ_k) θ_k(ω)*θ_k(ζ)`.
///
/// Samples are the origin, one point on each coordinate axis and the plan's
/// points (at least `m + n + 5` in total). If five extra points raise the rank
/// of the sampled spans, the plan is enlarged once.
pub fn lurking_isometry(
    f: &FunctionHandle,
    thetas: &[FunctionHandle],
    hermitian_wanted: bool,
    real_wanted: bool,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<GivoneRoesserRealization> {
    let d = f.d();
    let n = f.rows();
    if f.cols() != n {
        return Err(Error::DimensionMismatch("lurking isometry needs square values".into()));
    }
    if thetas.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "{} defect functions supplied for {d} variables",
            thetas.len()
        )));
    }
    for th in thetas {
        if th.cols() != n || th.d() != d {
            return Err(Error::DimensionMismatch("defect function shape mismatch".into()));
        }
    }
    let state_dims: Vec<usize> = thetas.iter().map(|t| t.rows()).collect();
    let m: usize = state_dims.iter().sum();
    let required = m + n + STABILITY_POINTS;

    let mut points: Vec<Point> = vec![vec![c(0.0, 0.0); d]];
    for k in 0..d {
        let mut p = vec![c(0.0, 0.0); d];
        p[k] = c(AXIS_RADIUS, 0.0);
        points.push(p);
    }
    let mut base = *plan;
    base.count = plan.count.max(required.saturating_sub(points.len()));
    points.extend(base.points(d));
    let prepare = |pts: Vec<Point>| if real_wanted { with_conjugates(pts) } else { pts };

    let mut all = prepare(points);
    let mut cols = sample_columns(f, thetas, &state_dims, &all)?;
    let before = stacked_rank(&cols, tol);
    let mut extra = base.reseeded(2);
    extra.count = STABILITY_POINTS;
    all.extend(prepare(extra.points(d)));
    cols = sample_columns(f, thetas, &state_dims, &all)?;
    if stacked_rank(&cols, tol) > before {
        let mut more = base.reseeded(3);
        more.count = 2 * base.count;
        all.extend(prepare(more.points(d)));
        cols = sample_columns(f, thetas, &state_dims, &all)?;
    }
    if cols.regular < required.min(cols.total) || cols.regular == 0 {
        return Err(Error::InsufficientSamples {
            regular: cols.regular,
            total: cols.total,
        });
    }

    let scale = op_norm(&cols.l).powi(2).max(1.0);
    let threshold = tol.identity_atol * scale;
    let gram = gram_defect_norm(&cols.l, &cols.r);
    if !(gram <= threshold) {
        return Err(Error::GramMismatch {
            residual: gram,
            threshold,
            marginal: gram <= 100.0 * threshold,
        });
    }

    let u = if real_wanted {
        let lr = realify_columns(&cols.l);
        let rr = realify_columns(&cols.r);
        let q = orthogonal_completion(&lr, &rr, hermitian_wanted, tol).map_err(|e| match e {
            Error::GramMismatch { residual, .. } => Error::RealInfeasible { residual },
            other => other,
        })?;
        to_complex(&q)
    } else {
        unitary_completion(&cols.l, &cols.r, hermitian_wanted, tol)?
    };
    GivoneRoesserRealization::new(
        n,
        state_dims,
        u,
        StructureFlags {
            unitary: true,
            hermitian: hermitian_wanted,
            real: real_wanted,
        },
        tol,
    )
}

/// Fit of the transfer function against `F` plus structural residuals of `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationReport {
    pub transfer: SampleReport,
    pub unitarity: SampleReport,
    pub hermitian: Option<SampleReport>,
    pub real: Option<SampleReport>,
}

impl RealizationReport {
    pub fn reports(&self) -> Vec<SampleReport> {
        let mut out = vec![self.transfer.clone(), self.unitarity.clone()];
        out.extend(self.hermitian.clone());
        out.extend(self.real.clone());
        out
    }

    pub fn passed(&self) -> bool {
        self.reports().iter().all(|r| r.verdict)
    }
}

/// Compares `eval_transfer` with `F` on the plan; never fails on a mismatch.
pub fn verify_realization(
    re: &GivoneRoesserRealization,
    f: &FunctionHandle,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<RealizationReport> {
    if f.d() != re.d() || f.rows() != re.n() || f.cols() != re.n() {
        return Err(Error::DimensionMismatch(
            "function and realization shapes differ".into(),
        ));
    }
    let mut acc = Accumulator::new("transfer_fit", tol.identity_atol);
    for z in plan.points(re.d()) {
        let r = eval_transfer(re, &z).and_then(|v| Ok(op_norm(&(v - f.eval(&z)?))));
        acc.record(&z, r)?;
    }
    let flags = re.flags();
    Ok(RealizationReport {
        transfer: acc.report(),
        unitarity: SampleReport::scalar("unitarity", re.unitarity_residual(), tol.identity_atol),
        hermitian: flags
            .hermitian
            .then(|| SampleReport::scalar("hermitian", re.hermitian_residual(), tol.identity_atol)),
        real: flags
            .real
            .then(|| SampleReport::scalar("real", re.real_residual(), tol.identity_atol)),
    })
}
