//! Long-resolvent pencils `f = A11 - A12 A22^{-1} A21` of `A(z) = A0 + Σ z_k A_k`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cayley::{disk_to_halfplane, halfplane_to_disk};
use crate::error::{Error, Result};
use crate::herglotz::{delta_left_inverse, eval_herglotz, split_at_zero, HerglotzRealization};
use crate::numerics::{
    block, block_diag, c, column_span, hermitian_part, identity, inverse, max_imag, min_eigenvalue, op_norm, psd_sqrt,
    rank_factor_psd, real_part, skew_part, solve, to_complex, unitary_eigensplit, zeros, CMatrix, Tolerances,
    EIGEN_ANGLE_TOL,
};
use crate::polyalg::{Domain, FunctionHandle, Point};
use crate::realization::projector;
use crate::verify::{check_real, Accumulator, PlanDomain, SamplePlan, SampleReport};

/// Smallest angular distance from 1 allowed for the spectrum of `W_0`.
pub const MIN_RESIDUE_ANGLE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PencilClass {
    Nonhomogeneous,
    Homogeneous,
    RealHomogeneous,
}

impl PencilClass {
    pub fn is_homogeneous(self) -> bool {
        !matches!(self, PencilClass::Nonhomogeneous)
    }
}

/// Coefficients `A_0, …, A_d` of size `(n + m)`, output block first.
#[derive(Debug, Clone, PartialEq)]
pub struct LongResolventPencil {
    n: usize,
    m: usize,
    coeffs: Vec<CMatrix>,
    class: PencilClass,
}

/// Blocks of `A(z)` split as `n + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilBlocks {
    pub a11: CMatrix,
    pub a12: CMatrix,
    pub a21: CMatrix,
    pub a22: CMatrix,
}

impl LongResolventPencil {
    /// Validates the class invariants: `A_0` skew, `A_k` PSD, `A_0 = 0` for
    /// homogeneous classes, real entries for the real class.
    pub fn new(n: usize, m: usize, coeffs: Vec<CMatrix>, class: PencilClass, tol: &Tolerances) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidPencil("need A0 and at least one A_k".into()));
        }
        let s = n + m;
        for (k, a) in coeffs.iter().enumerate() {
            if a.shape() != (s, s) {
                return Err(Error::InvalidPencil(format!(
                    "A{k} is {}x{}, expected {s}x{s}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if !crate::numerics::all_finite(a) {
                return Err(Error::InvalidPencil(format!("A{k} has non-finite entries")));
            }
        }
        let a0 = &coeffs[0];
        let skew = op_norm(&(a0 + a0.adjoint()));
        if skew > tol.identity_atol {
            return Err(Error::InvalidPencil(format!(
                "A0 is not skew-Hermitian (residual {skew:.3e})"
            )));
        }
        for a in &coeffs[1..] {
            let asymmetry = op_norm(&(a - a.adjoint()));
            if asymmetry > tol.identity_atol {
                return Err(Error::NotHermitian { asymmetry });
            }
            let min_eig = min_eigenvalue(a);
            if min_eig < -tol.psd_atol {
                return Err(Error::NotPsd { min_eig });
            }
        }
        if class.is_homogeneous() {
            let norm = op_norm(a0);
            if norm > tol.identity_atol {
                return Err(Error::InvalidPencil(format!(
                    "homogeneous pencil needs A0 = 0 (norm {norm:.3e})"
                )));
            }
        }
        if class == PencilClass::RealHomogeneous {
            let residual = coeffs.iter().map(max_imag).fold(0.0, f64::max);
            if residual > tol.identity_atol {
                return Err(Error::NotReal { residual });
            }
        }
        Ok(LongResolventPencil { n, m, coeffs, class })
    }

    /// Most specific class the coefficients satisfy.
    pub fn infer(n: usize, m: usize, coeffs: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        for class in [PencilClass::RealHomogeneous, PencilClass::Homogeneous] {
            if let Ok(p) = Self::new(n, m, coeffs.clone(), class, tol) {
                return Ok(p);
            }
        }
        Self::new(n, m, coeffs, PencilClass::Nonhomogeneous, tol)
    }

    pub fn d(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn class(&self) -> PencilClass {
        self.class
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    /// `A(z) = A_0 + Σ z_k A_k`.
    pub fn matrix_at(&self, z: &[Complex64]) -> Result<CMatrix> {
        if z.len() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, pencil has {} variables",
                z.len(),
                self.d()
            )));
        }
        let mut a = self.coeffs[0].clone();
        for (zk, ak) in z.iter().zip(&self.coeffs[1..]) {
            a += ak * *zk;
        }
        Ok(a)
    }

    pub fn blocks(&self, z: &[Complex64]) -> Result<PencilBlocks> {
        let a = self.matrix_at(z)?;
        let (n, m) = (self.n, self.m);
        Ok(PencilBlocks {
            a11: block(&a, 0, 0, n, n),
            a12: block(&a, 0, n, n, m),
            a21: block(&a, n, 0, m, n),
            a22: block(&a, n, n, m, m),
        })
    }

    /// `f` as a handle on the poly-halfplane.
    pub fn to_handle(&self) -> FunctionHandle {
        let p = self.clone();
        FunctionHandle::new(self.d(), self.n, self.n, Domain::Polyhalfplane, move |z| {
            eval_pencil(&p, z)
        })
    }

    /// Same data under a congruence `T* A_k T` with `T = diag(t, I_m)`.
    pub(crate) fn congruence(&self, t: &CMatrix, tol: &Tolerances) -> Result<Self> {
        let big = block_diag(&[t, &identity(self.m)]);
        let coeffs = self.coeffs.iter().map(|a| big.adjoint() * a * &big).collect();
        Self::new(t.ncols(), self.m, coeffs, self.class, tol)
    }
}

fn inner_error(z: &[Complex64]) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::SingularShift { .. } => Error::InnerBlockSingular { point: z.to_vec() },
        other => other,
    }
}

/// Schur complement `A11(z) - A12(z) A22(z)^{-1} A21(z)`.
pub fn eval_pencil(p: &LongResolventPencil, z: &[Complex64]) -> Result<CMatrix> {
    let b = p.blocks(z)?;
    if p.m == 0 {
        return Ok(b.a11);
    }
    let x = solve(&b.a22, &b.a21).map_err(inner_error(z))?;
    Ok(b.a11 - b.a12 * x)
}

/// `ψ(z) = [I_n; -A22(z)^{-1} A21(z)]`.
pub fn psi(p: &LongResolventPencil, z: &[Complex64]) -> Result<CMatrix> {
    let b = p.blocks(z)?;
    let mut out = zeros(p.n + p.m, p.n);
    out.view_mut((0, 0), (p.n, p.n)).copy_from(&identity(p.n));
    if p.m > 0 {
        let x = solve(&b.a22, &b.a21).map_err(inner_error(z))?;
        out.view_mut((p.n, 0), (p.m, p.n)).copy_from(&(-x));
    }
    Ok(out)
}

/// Kernel decomposition `φ_k = Y_k ψ` of a pencil with `Y_k* Y_k = A_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilDecomposition {
    pub pencil: LongResolventPencil,
    pub factors: Vec<CMatrix>,
}

impl PencilDecomposition {
    /// Row counts `N_k`.
    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(|y| y.nrows()).collect()
    }

    pub fn phis(&self) -> Vec<FunctionHandle> {
        self.factors
            .iter()
            .map(|y| {
                let (p, y) = (self.pencil.clone(), y.clone());
                FunctionHandle::new(p.d(), y.nrows(), p.n(), Domain::Polyhalfplane, move |z| {
                    Ok(&y * psi(&p, z)?)
                })
            })
            .collect()
    }
}

/// Factors each `A_k` (rank factor by default, PSD square root when `literal_sqrt`).
pub fn pencil_decomposition(
    p: &LongResolventPencil,
    literal_sqrt: bool,
    tol: &Tolerances,
) -> Result<PencilDecomposition> {
    let factors = p.coeffs[1..]
        .iter()
        .map(|a| {
            if literal_sqrt {
                psd_sqrt(a, tol)
            } else {
                rank_factor_psd(a, tol)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PencilDecomposition {
        pencil: p.clone(),
        factors,
    })
}

/// `‖f(w)* ± f(z) - Σ(w̄_k ± z_k) φ_k(w)*φ_k(z)‖`.
pub fn decomposition_residual(
    f: &FunctionHandle,
    phis: &[FunctionHandle],
    w: &[Complex64],
    z: &[Complex64],
    minus: bool,
) -> Result<f64> {
    let sign = if minus { -1.0 } else { 1.0 };
    let mut defect = f.eval(w)?.adjoint() + f.eval(z)? * c(sign, 0.0);
    for (k, phi) in phis.iter().enumerate() {
        let weight = w[k].conj() + z[k] * sign;
        defect -= phi.eval(w)?.adjoint() * phi.eval(z)? * weight;
    }
    Ok(op_norm(&defect))
}

/// Decomposition residual over sampled pairs in the poly-halfplane.
pub fn check_decomposition(
    f: &FunctionHandle,
    phis: &[FunctionHandle],
    plan: &SamplePlan,
    minus: bool,
    tol: &Tolerances,
) -> Result<SampleReport> {
    let name = if minus {
        "decomposition_minus"
    } else {
        "decomposition_plus"
    };
    let mut acc = Accumulator::new(name, tol.identity_atol);
    for (w, z) in plan.pairs(f.d()) {
        let scale = op_norm(&f.eval(&w)?).max(op_norm(&f.eval(&z)?)).max(1.0);
        let witness: Vec<Complex64> = w.iter().chain(&z).copied().collect();
        acc.record(
            &witness,
            decomposition_residual(f, phis, &w, &z, minus).map(|r| r / scale),
        )?;
    }
    acc.finish()
}

/// `θ_k(ζ) = φ_k(z)(I - 𝓕(ζ))/(1 - ζ_k) = 2 φ_k(z)(f(z) + I)^{-1}/(1 - ζ_k)`
/// with `z = C(ζ)` and `𝓕` the double Cayley transform of `f`.
pub fn phi_to_theta(phis: &[FunctionHandle], f: &FunctionHandle) -> Vec<FunctionHandle> {
    phis.iter()
        .enumerate()
        .map(|(k, phi)| {
            let (phi, f) = (phi.clone(), f.clone());
            FunctionHandle::new(phi.d(), phi.rows(), phi.cols(), Domain::Polydisk, move |zeta| {
                let z = disk_to_halfplane(zeta)?;
                let shifted = f.eval(&z)? + identity(f.rows());
                let x = solve(&shifted.adjoint(), &phi.eval(&z)?.adjoint()).map_err(|e| match e {
                    Error::SingularShift { .. } => Error::EvaluationSingular { point: zeta.to_vec() },
                    other => other,
                })?;
                Ok(x.adjoint() * (c(2.0, 0.0) / (c(1.0, 0.0) - zeta[k])))
            })
        })
        .collect()
}

/// `φ_k(z) = θ_k(ζ)(f(z) + I)/(z_k + 1)` with `ζ = C^{-1}(z)`.
pub fn theta_to_phi(thetas: &[FunctionHandle], f: &FunctionHandle) -> Vec<FunctionHandle> {
    thetas
        .iter()
        .enumerate()
        .map(|(k, theta)| {
            let (theta, f) = (theta.clone(), f.clone());
            FunctionHandle::new(theta.d(), theta.rows(), theta.cols(), Domain::Polyhalfplane, move |z| {
                let zeta = halfplane_to_disk(z)?;
                let shifted = f.eval(z)? + identity(f.rows());
                Ok(theta.eval(&zeta)? * shifted / (z[k] + 1.0))
            })
        })
        .collect()
}

/// Orthonormal basis of the range of a Hermitian matrix, real when the input is.
fn range_basis(m: &CMatrix, tol: &Tolerances) -> CMatrix {
    if max_imag(m) == 0.0 {
        to_complex(&column_span(&real_part(m), tol.rank_rtol))
    } else {
        column_span(m, tol.rank_rtol)
    }
}

/// Normalizes a homogeneous pencil so that `f_+(e) = I_r`, returning `δ`
/// (`r × n`) with `f = δ* f_+ δ`.
pub fn normalize_homogeneous(
    p: &LongResolventPencil,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<(CMatrix, LongResolventPencil)> {
    if !p.class.is_homogeneous() {
        return Err(Error::InvalidPencil("normalization needs a homogeneous pencil".into()));
    }
    let e = vec![c(1.0, 0.0); p.d()];
    let fe = hermitian_part(&eval_pencil(p, &e)?);
    let min_eig = min_eigenvalue(&fe);
    if min_eig < -tol.psd_atol * op_norm(&fe).max(1.0) {
        return Err(Error::NotPsd { min_eig });
    }
    let kappa = range_basis(&fe, tol);
    let reduced = kappa.adjoint() * &fe * &kappa;
    let root = psd_sqrt(&reduced, tol)?;
    let s = inverse(&root)?;
    let delta = &root * kappa.adjoint();
    let plus = p.congruence(&(&kappa * &s), tol)?;

    let r = delta.nrows();
    let center = op_norm(&(eval_pencil(&plus, &e)? - identity(r)));
    if center > tol.identity_atol {
        return Err(Error::Postcondition {
            stage: "normalize_homogeneous f+(e) = I".into(),
            residual: center,
            threshold: tol.identity_atol,
        });
    }
    for z in plan.points(p.d()) {
        let (fz, fp) = match (eval_pencil(p, &z), eval_pencil(&plus, &z)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) if e.is_singular_evaluation() => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let res = op_norm(&(delta.adjoint() * fp * &delta - &fz)) / op_norm(&fz).max(1.0);
        if res > tol.identity_atol {
            return Err(Error::KernelNotConstant { residual: res });
        }
    }
    Ok((delta, plus))
}

/// Splits `f(e) = β + δ*δ` and returns `(β, δ, Pcl_+)` with
/// `f = β + δ* f_+ δ` and `f_+(e) = I_r`, where `f_+ = L(f - β)L*`, `L = (δδ*)^{-1}δ`.
pub fn normalize_nonhomogeneous(
    p: &LongResolventPencil,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<(CMatrix, CMatrix, LongResolventPencil)> {
    let e = vec![c(1.0, 0.0); p.d()];
    let fe = eval_pencil(p, &e)?;
    let gamma = hermitian_part(&fe);
    let min_eig = min_eigenvalue(&gamma);
    if min_eig < -tol.psd_atol * op_norm(&gamma).max(1.0) {
        return Err(Error::NotPsd { min_eig });
    }
    let (beta, _, delta) = split_at_zero(&fe, tol)?;
    let l = delta_left_inverse(&delta)?;
    let mut plus = p.congruence(&l.adjoint(), tol)?;
    plus.class = PencilClass::Nonhomogeneous;
    let r = delta.nrows();
    let shift = &l * &beta * l.adjoint();
    let mut top = plus.coeffs[0].view_mut((0, 0), (r, r));
    top -= &shift;
    let plus = LongResolventPencil::new(r, p.m(), plus.coeffs, PencilClass::Nonhomogeneous, tol)?;

    let center = op_norm(&(eval_pencil(&plus, &e)? - identity(r)));
    if !(center <= tol.identity_atol) {
        return Err(Error::Postcondition {
            stage: "normalize f+(e) = I".into(),
            residual: center,
            threshold: tol.identity_atol,
        });
    }
    for z in plan.points(p.d()) {
        let (fz, fp) = match (eval_pencil(p, &z), eval_pencil(&plus, &z)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) if e.is_singular_evaluation() => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let res = op_norm(&(&beta + delta.adjoint() * fp * &delta - &fz)) / op_norm(&fz).max(1.0);
        if !(res <= tol.identity_atol) {
            return Err(Error::KernelNotConstant { residual: res });
        }
    }
    Ok((beta, delta, plus))
}

/// Pencil realizing `f(z) = F(halfplane_to_disk(z))` for a Herglotz realization.
///
/// `C^m` is split into the eigenspace `H` of `W` for eigenvalue 1 and its
/// complement; `W_0 = W|H^⊥` is Cayley transformed to the skew `α`.
pub fn herglotz_to_pencil(h: &HerglotzRealization, plan: &SamplePlan, tol: &Tolerances) -> Result<LongResolventPencil> {
    let n = h.n();
    let d = h.d();
    let split = unitary_eigensplit(h.w(), c(1.0, 0.0), EIGEN_ANGLE_TOL, tol)?;
    if split.outside_min_angle < MIN_RESIDUE_ANGLE {
        return Err(Error::EigenvalueOneResidue {
            angle: split.outside_min_angle,
        });
    }
    let (qh, qp) = (&split.inside, &split.outside);
    let mp = qp.ncols();
    let v1 = qh.adjoint() * h.v();
    let v2 = qp.adjoint() * h.v();

    let mut coeffs = Vec::with_capacity(d + 1);
    if mp == 0 {
        coeffs.push(h.beta().clone());
        for k in 0..d {
            let pk = projector(h.state_dims(), k);
            coeffs.push(h.v().adjoint() * pk * h.v());
        }
    } else {
        let w0 = qp.adjoint() * h.w() * qp;
        let i = identity(mp);
        let alpha = inverse(&(&i - &w0))? * (&i + &w0);
        let skew = op_norm(&(&alpha + alpha.adjoint()));
        if skew > tol.identity_atol * op_norm(&alpha).max(1.0) {
            return Err(Error::Postcondition {
                stage: "herglotz_to_pencil alpha skew".into(),
                residual: skew,
                threshold: tol.identity_atol,
            });
        }
        let j = -(&alpha * inverse(&(&i - &alpha * &alpha))?);
        let ap = &alpha + &i;
        let mut a0 = zeros(n + mp, n + mp);
        a0.view_mut((0, 0), (n, n))
            .copy_from(&(h.beta() + v2.adjoint() * &ap * &j * ap.adjoint() * &v2));
        a0.view_mut((0, n), (n, mp)).copy_from(&(v2.adjoint() * &ap));
        a0.view_mut((n, 0), (mp, n)).copy_from(&(-(ap.adjoint() * &v2)));
        a0.view_mut((n, n), (mp, mp)).copy_from(&(-&alpha));
        coeffs.push(a0);
        for k in 0..d {
            let pk = projector(h.state_dims(), k);
            let mut ak = zeros(n + mp, n + mp);
            ak.view_mut((0, 0), (n, n))
                .copy_from(&(v1.adjoint() * qh.adjoint() * &pk * qh * &v1));
            ak.view_mut((0, n), (n, mp))
                .copy_from(&(v1.adjoint() * qh.adjoint() * &pk * qp));
            ak.view_mut((n, 0), (mp, n)).copy_from(&(qp.adjoint() * &pk * qh * &v1));
            ak.view_mut((n, n), (mp, mp)).copy_from(&(qp.adjoint() * &pk * qp));
            coeffs.push(ak);
        }
    }

    // Verify the structure relative to the coefficient size, then drop the
    // rounding-level asymmetric parts.
    let a0 = &coeffs[0];
    let skew = op_norm(&(a0 + a0.adjoint())) / op_norm(a0).max(1.0);
    if skew > tol.identity_atol {
        return Err(Error::Postcondition {
            stage: "herglotz_to_pencil A0 skew".into(),
            residual: skew,
            threshold: tol.identity_atol,
        });
    }
    let mut cleaned = vec![skew_part(a0)];
    for ak in &coeffs[1..] {
        let asym = op_norm(&(ak - ak.adjoint())) / op_norm(ak).max(1.0);
        if asym > tol.identity_atol {
            return Err(Error::Postcondition {
                stage: "herglotz_to_pencil A_k Hermitian".into(),
                residual: asym,
                threshold: tol.identity_atol,
            });
        }
        cleaned.push(hermitian_part(ak));
    }
    let pencil = LongResolventPencil::infer(n, mp, cleaned, tol)?;

    let mut halfplane = *plan;
    halfplane.domain = PlanDomain::Polyhalfplane;
    let mut worst = 0.0_f64;
    for z in halfplane.points(d) {
        let expected = match eval_herglotz(h, &halfplane_to_disk(&z)?) {
            Ok(v) => v,
            Err(e) if e.is_singular_evaluation() => continue,
            Err(e) => return Err(e),
        };
        let got = match eval_pencil(&pencil, &z) {
            Ok(v) => v,
            Err(e) if e.is_singular_evaluation() => continue,
            Err(e) => return Err(e),
        };
        worst = worst.max(op_norm(&(got - &expected)) / op_norm(&expected).max(1.0));
    }
    if !(worst <= tol.identity_atol) {
        return Err(Error::Postcondition {
            stage: "herglotz_to_pencil evaluation".into(),
            residual: worst,
            threshold: tol.identity_atol,
        });
    }
    Ok(pencil)
}

/// Residuals for `β = 0`, `W = W*` and `range V ⊆ H`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousStructure {
    pub beta: SampleReport,
    pub w_hermitian: SampleReport,
    pub v_in_eigenspace: SampleReport,
}

impl HomogeneousStructure {
    pub fn passed(&self) -> bool {
        self.beta.verdict && self.w_hermitian.verdict && self.v_in_eigenspace.verdict
    }

    pub fn reports(&self) -> Vec<SampleReport> {
        vec![
            self.beta.clone(),
            self.w_hermitian.clone(),
            self.v_in_eigenspace.clone(),
        ]
    }
}

pub fn homogeneous_structure_check(h: &HerglotzRealization, tol: &Tolerances) -> Result<HomogeneousStructure> {
    let atol = tol.identity_atol;
    let qh = unitary_eigensplit(h.w(), c(1.0, 0.0), EIGEN_ANGLE_TOL, tol)?.inside;
    let leak = op_norm(&((identity(h.m()) - &qh * qh.adjoint()) * h.v()));
    Ok(HomogeneousStructure {
        beta: SampleReport::scalar("structure_beta_zero", op_norm(h.beta()), atol),
        w_hermitian: SampleReport::scalar("structure_w_hermitian", op_norm(&(h.w() - h.w().adjoint())), atol),
        v_in_eigenspace: SampleReport::scalar("structure_range_v", leak, atol),
    })
}

/// Real stacking `φ̃_k = Col[(φ_k + φ_k♯)/2, (φ_k - φ_k♯)/(2i)]`, which keeps
/// `Σ(w̄_k + z_k) φ̃_k(w)*φ̃_k(z)` equal to the original kernel sum when `f` is real.
pub fn realify_decomposition(
    f: &FunctionHandle,
    phis: &[FunctionHandle],
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<Vec<FunctionHandle>> {
    let mut pairs = *plan;
    pairs.domain = PlanDomain::ConjugationPairs;
    let report = check_real(f, &pairs, tol)?;
    if !report.verdict {
        return Err(Error::NotReal {
            residual: report.max_residual,
        });
    }
    Ok(phis
        .iter()
        .map(|phi| {
            let phi = phi.clone();
            let rows = phi.rows();
            FunctionHandle::new(phi.d(), 2 * rows, phi.cols(), phi.domain(), move |z| {
                let zbar: Point = z.iter().map(|w| w.conj()).collect();
                let a = phi.eval(z)?;
                let sharp = phi.eval(&zbar)?.map(|x| x.conj());
                let mut out = zeros(2 * rows, a.ncols());
                out.view_mut((0, 0), (rows, a.ncols()))
                    .copy_from(&((&a + &sharp) * c(0.5, 0.0)));
                out.view_mut((rows, 0), (rows, a.ncols()))
                    .copy_from(&((&a - &sharp) * c(0.0, -0.5)));
                Ok(out)
            })
        })
        .collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::numerics::{diag_real, from_real_rows};

    pub(crate) fn parallel() -> LongResolventPencil {
        let tol = Tolerances::default();
        LongResolventPencil::new(
            1,
            1,
            vec![
                zeros(2, 2),
                from_real_rows(2, 2, &[1.0, -1.0, -1.0, 1.0]),
                from_real_rows(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            ],
            PencilClass::RealHomogeneous,
            &tol,
        )
        .unwrap()
    }

    fn affine() -> LongResolventPencil {
        LongResolventPencil::new(
            1,
            0,
            vec![identity(1) * c(0.0, 1.0), identity(1)],
            PencilClass::Nonhomogeneous,
            &Tolerances::default(),
        )
        .unwrap()
    }

    fn val(p: &LongResolventPencil, z: &[Complex64]) -> Complex64 {
        eval_pencil(p, z).unwrap()[(0, 0)]
    }

    #[test]
    fn evaluation_examples() {
        let z = c(0.7, -0.3);
        assert!((val(&affine(), &[z]) - (z + c(0.0, 1.0))).norm() < 1e-15);
        let p = parallel();
        assert!((val(&p, &[c(1.0, 0.0), c(1.0, 0.0)]) - 0.5).norm() < 1e-15);
        assert!((val(&p, &[c(2.0, 0.0), c(1.0, 0.0)]) - 2.0 / 3.0).norm() < 1e-15);
        assert!(matches!(
            eval_pencil(&p, &[c(1.0, 0.0), c(-1.0, 0.0)]),
            Err(Error::InnerBlockSingular { .. })
        ));
    }

    #[test]
    fn class_validation() {
        let tol = Tolerances::default();
        let bad = vec![zeros(1, 1), diag_real(&[-1.0])];
        assert!(matches!(
            LongResolventPencil::new(1, 0, bad, PencilClass::Nonhomogeneous, &tol),
            Err(Error::NotPsd { .. })
        ));
        let not_skew = vec![identity(1), identity(1)];
        assert!(matches!(
            LongResolventPencil::new(1, 0, not_skew, PencilClass::Nonhomogeneous, &tol),
            Err(Error::InvalidPencil(_))
        ));
        let shifted = vec![identity(1) * c(0.0, 1.0), identity(1)];
        assert!(LongResolventPencil::new(1, 0, shifted.clone(), PencilClass::Homogeneous, &tol).is_err());
        assert_eq!(
            LongResolventPencil::infer(1, 0, shifted, &tol).unwrap().class(),
            PencilClass::Nonhomogeneous
        );
        assert_eq!(parallel().class(), PencilClass::RealHomogeneous);
    }

    #[test]
    fn decomposition_examples() {
        let tol = Tolerances::default();
        let p = parallel();
        let dec = pencil_decomposition(&p, false, &tol).unwrap();
        assert_eq!(dec.ranks(), vec![1, 1]);
        let phis = dec.phis();
        let z = [c(1.3, 0.2), c(0.4, -0.5)];
        let sum = z[0] + z[1];
        assert!((phis[0].eval(&z).unwrap()[(0, 0)].norm() - (z[1] / sum).norm()).abs() < 1e-14);
        assert!((phis[1].eval(&z).unwrap()[(0, 0)].norm() - (z[0] / sum).norm()).abs() < 1e-14);
        let e = [c(1.0, 0.0), c(1.0, 0.0)];
        let lhs = 2.0 * val(&p, &e).re;
        let rhs: f64 = phis
            .iter()
            .map(|ph| 2.0 * ph.eval(&e).unwrap()[(0, 0)].norm_sqr())
            .sum();
        assert!((lhs - 1.0).abs() < 1e-15 && (rhs - 1.0).abs() < 1e-14);

        let f = p.to_handle();
        let plan = SamplePlan::polyhalfplane(5, 40);
        assert!(check_decomposition(&f, &phis, &plan, false, &tol).unwrap().verdict);
        assert!(check_decomposition(&f, &phis, &plan, true, &tol).unwrap().verdict);
        for lambda in [c(2.0, 0.0), c(0.0, 1.0), c(-3.0, 0.0)] {
            let scaled: Vec<Complex64> = z.iter().map(|w| w * lambda).collect();
            for ph in &phis {
                assert!((ph.eval(&scaled).unwrap() - ph.eval(&z).unwrap()).norm() < 1e-14);
            }
        }

        let dec = pencil_decomposition(&affine(), false, &tol).unwrap();
        assert_eq!(dec.phis()[0].eval(&[c(0.3, 0.1)]).unwrap(), identity(1));
        let literal = pencil_decomposition(&p, true, &tol).unwrap();
        assert_eq!(literal.ranks(), vec![2, 2]);
        assert!(
            check_decomposition(&f, &literal.phis(), &plan, false, &tol)
                .unwrap()
                .verdict
        );
    }

    fn h_of(beta: Complex64, w: CMatrix, v: CMatrix) -> HerglotzRealization {
        let m = w.nrows();
        let tol = Tolerances::default();
        HerglotzRealization::new(vec![m], identity(1) * beta, w, v, &tol).unwrap()
    }

    #[test]
    fn herglotz_to_pencil_examples() {
        let tol = Tolerances::default();
        let plan = SamplePlan::polyhalfplane(2, 50);
        let p = herglotz_to_pencil(&h_of(c(0.0, 0.0), identity(1), identity(1)), &plan, &tol).unwrap();
        assert_eq!(p.m(), 0);
        assert_eq!(p.coeffs()[0], zeros(1, 1));
        assert!((p.coeffs()[1][(0, 0)] - 1.0).norm() < 1e-15);

        let p = herglotz_to_pencil(&h_of(c(0.0, 1.0), identity(1), identity(1)), &plan, &tol).unwrap();
        assert_eq!(p.coeffs()[0][(0, 0)], c(0.0, 1.0));
        assert_eq!(p.class(), PencilClass::Nonhomogeneous);

        let (a, b) = (c(0.6, 0.2), c(-0.3, 0.5));
        let v = CMatrix::from_column_slice(2, 1, &[a, b]);
        let h = h_of(c(0.0, 0.0), diag_real(&[1.0, -1.0]), v);
        let p = herglotz_to_pencil(&h, &plan, &tol).unwrap();
        assert_eq!(p.m(), 1);
        let a0 = &p.coeffs()[0];
        let a1 = &p.coeffs()[1];
        // the complement basis vector may carry a phase u: A0 = [[0, b̄u],[-ūb, 0]]
        assert!(a0[(0, 0)].norm() < 1e-15 && (a0[(0, 1)].norm() - b.norm()).abs() < 1e-15);
        assert!((a1[(0, 0)].re - a.norm_sqr()).abs() < 1e-15 && a1[(0, 1)].norm() < 1e-15);
        assert!((a1[(1, 1)].re - 1.0).abs() < 1e-15);
        let hf = h.to_handle();
        for z in SamplePlan::polyhalfplane(9, 50).points(1) {
            let expected = hf.eval(&halfplane_to_disk(&z).unwrap()).unwrap()[(0, 0)];
            assert!((val(&p, &z) - expected).norm() <= 1e-10);
            assert!((val(&p, &z) - (a.norm_sqr() * z[0] + b.norm_sqr() / z[0])).norm() <= 1e-10);
        }
    }

    #[test]
    fn normalization_examples() {
        let tol = Tolerances::default();
        let plan = SamplePlan::polyhalfplane(1, 30);
        let diag = LongResolventPencil::new(
            2,
            0,
            vec![zeros(2, 2), diag_real(&[1.0, 0.0]), zeros(2, 2)],
            PencilClass::RealHomogeneous,
            &tol,
        )
        .unwrap();
        let (delta, plus) = normalize_homogeneous(&diag, &plan, &tol).unwrap();
        assert_eq!(delta.shape(), (1, 2));
        assert!((delta[(0, 0)].norm() - 1.0).abs() < 1e-15 && delta[(0, 1)].norm() < 1e-15);
        let z = [c(0.5, 0.4), c(2.0, 0.0)];
        assert!((val(&plus, &z) - z[0]).norm() < 1e-15);

        let (delta, plus) = normalize_homogeneous(&parallel(), &plan, &tol).unwrap();
        assert!((delta[(0, 0)].norm() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((val(&plus, &z) - 2.0 * z[0] * z[1] / (z[0] + z[1])).norm() < 1e-14);
        assert_eq!(plus.class(), PencilClass::RealHomogeneous);

        let id =
            LongResolventPencil::new(1, 0, vec![zeros(1, 1), identity(1)], PencilClass::Homogeneous, &tol).unwrap();
        let (delta, plus) = normalize_homogeneous(&id, &plan, &tol).unwrap();
        assert!(op_norm(&(delta - identity(1))) < 1e-15);
        assert!(op_norm(&(plus.coeffs()[1].clone() - identity(1))) < 1e-15);
    }

    #[test]
    fn structure_examples() {
        let tol = Tolerances::default();
        assert!(
            homogeneous_structure_check(&h_of(c(0.0, 0.0), identity(1), identity(1)), &tol)
                .unwrap()
                .passed()
        );
        let s = homogeneous_structure_check(&h_of(c(0.0, 1.0), identity(1), identity(1)), &tol).unwrap();
        assert!(!s.beta.verdict && (s.beta.max_residual - 1.0).abs() < 1e-15);
        let v = from_real_rows(2, 1, &[0.0, 1.0]);
        let s = homogeneous_structure_check(&h_of(c(0.0, 0.0), diag_real(&[1.0, -1.0]), v), &tol).unwrap();
        assert!(s.beta.verdict && s.w_hermitian.verdict && !s.v_in_eigenspace.verdict);
    }

    #[test]
    fn realify_examples() {
        let tol = Tolerances::default();
        let plan = SamplePlan::polyhalfplane(3, 20);
        let p = parallel();
        let f = p.to_handle();
        let phis = pencil_decomposition(&p, false, &tol).unwrap().phis();
        let real = realify_decomposition(&f, &phis, &plan, &tol).unwrap();
        let z = [c(0.8, 0.3), c(1.5, -0.2)];
        let top = block(&real[0].eval(&z).unwrap(), 0, 0, 1, 1);
        assert!((top - phis[0].eval(&z).unwrap()).norm() < 1e-15);
        let x = [c(0.8, 0.0), c(1.5, 0.0)];
        assert!(real.iter().all(|h| max_imag(&h.eval(&x).unwrap()) < 1e-15));
        assert!(check_decomposition(&f, &real, &plan, false, &tol).unwrap().verdict);

        let ig = FunctionHandle::new(1, 1, 1, Domain::Polyhalfplane, |z| {
            Ok(identity(1) * (z[0] * c(0.0, 1.0)))
        });
        let fz = FunctionHandle::new(1, 1, 1, Domain::Polyhalfplane, |z| Ok(identity(1) * z[0]));
        let out = realify_decomposition(&fz, &[ig], &plan, &tol).unwrap();
        let v = out[0].eval(&[c(0.7, 0.1)]).unwrap();
        assert!(v[(0, 0)].norm() < 1e-15 && (v[(1, 0)] - c(0.7, 0.1)).norm() < 1e-15);

        let not_real = FunctionHandle::new(1, 1, 1, Domain::Polyhalfplane, |z| {
            Ok(identity(1) * (z[0] * c(0.0, 1.0)))
        });
        assert!(matches!(
            realify_decomposition(&not_real, &[], &plan, &tol),
            Err(Error::NotReal { .. })
        ));
    }
}
