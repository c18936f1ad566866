//! Polynomial kernel identities `p(ω)*p(ζ) - q(ω)*q(ζ) = Σ(1 - ω̄_k ζ_k) ψ_k(ω)*ψ_k(ζ)`,
//! moment-matrix compression and inner-function checks.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{identity, op_norm, rank_factor_psd, solve, zeros, CMatrix, Tolerances};
use crate::polyalg::{Domain, FunctionHandle, MatrixPolynomial, MultiIndex, Point};
use crate::realization::{lurking_isometry, GivoneRoesserRealization};
use crate::verify::{Accumulator, SamplePlan, SampleReport};

/// Denominator samples with smallest singular value below this are skipped.
pub const DENOMINATOR_EPS: f64 = 1e-12;
/// Radius of the off-torus points used for the continuation form of the inner test.
pub const CONTINUATION_RADIUS: f64 = 0.8;

type CoefficientMap = BTreeMap<(MultiIndex, MultiIndex), CMatrix>;

/// Polynomial data `(p, q, ψ_1, …, ψ_d)` with the defect of the kernel identity.
#[derive(Debug, Clone, PartialEq)]
pub struct KneseWitness {
    pub p: MatrixPolynomial,
    pub q: MatrixPolynomial,
    pub psis: Vec<MatrixPolynomial>,
    pub residual: f64,
}

impl KneseWitness {
    pub fn new(p: MatrixPolynomial, q: MatrixPolynomial, psis: Vec<MatrixPolynomial>) -> Result<Self> {
        let residual = knese_residual(&p, &q, &psis)?;
        Ok(KneseWitness { p, q, psis, residual })
    }

    pub fn d(&self) -> usize {
        self.p.d()
    }

    pub fn n(&self) -> usize {
        self.p.rows()
    }

    /// `F = q p^{-1}` on the polydisk.
    pub fn transfer_handle(&self) -> FunctionHandle {
        right_quotient(&self.q, &self.p)
    }

    /// `θ_k = ψ_k p^{-1}`.
    pub fn defect_handles(&self) -> Vec<FunctionHandle> {
        self.psis.iter().map(|psi| right_quotient(psi, &self.p)).collect()
    }
}

fn right_quotient(num: &MatrixPolynomial, den: &MatrixPolynomial) -> FunctionHandle {
    let (num, den) = (num.clone(), den.clone());
    FunctionHandle::new(num.d(), num.rows(), num.cols(), Domain::Polydisk, move |z| {
        let pz = den.eval(z)?;
        let inv = solve(&pz.adjoint(), &num.eval(z)?.adjoint()).map_err(|e| match e {
            Error::SingularShift { .. } => Error::EvaluationSingular { point: z.to_vec() },
            other => other,
        })?;
        Ok(inv.adjoint())
    })
}

fn accumulate(map: &mut CoefficientMap, key: (MultiIndex, MultiIndex), value: CMatrix) {
    match map.get_mut(&key) {
        Some(m) => *m += value,
        None => {
            map.insert(key, value);
        }
    }
}

/// Coefficients of `a(ω)*b(ζ)` keyed by `(β, α)` for the monomial `ω̄^β ζ^α`.
fn hermitian_square(
    a: &MatrixPolynomial,
    b: &MatrixPolynomial,
    sign: f64,
    shift: Option<usize>,
    map: &mut CoefficientMap,
) {
    let d = a.d();
    let bump = |idx: &MultiIndex| match shift {
        Some(k) => idx.add(&MultiIndex::unit(d, k)),
        None => idx.clone(),
    };
    for (beta, ab) in a.terms() {
        for (alpha, ba) in b.terms() {
            let value = ab.adjoint() * ba * Complex64::new(sign, 0.0);
            accumulate(map, (bump(beta), bump(alpha)), value);
        }
    }
}

fn check_shapes(p: &MatrixPolynomial, q: &MatrixPolynomial, psis: &[MatrixPolynomial]) -> Result<()> {
    let (d, n) = (p.d(), p.rows());
    if p.cols() != n || q.d() != d || q.rows() != n || q.cols() != n {
        return Err(Error::DimensionMismatch(
            "p and q must be n x n in the same variables".into(),
        ));
    }
    if psis.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "{} factors for {d} variables",
            psis.len()
        )));
    }
    for psi in psis {
        if psi.d() != d || psi.cols() != n {
            return Err(Error::DimensionMismatch("factor shape mismatch".into()));
        }
    }
    Ok(())
}

/// Largest coefficient norm of `p*p - q*q - Σ(1 - ω̄_k ζ_k) ψ_k*ψ_k` as a
/// polynomial in `(ω̄, ζ)`.
pub fn knese_residual(p: &MatrixPolynomial, q: &MatrixPolynomial, psis: &[MatrixPolynomial]) -> Result<f64> {
    check_shapes(p, q, psis)?;
    let mut map = CoefficientMap::new();
    hermitian_square(p, p, 1.0, None, &mut map);
    hermitian_square(q, q, -1.0, None, &mut map);
    for (k, psi) in psis.iter().enumerate() {
        hermitian_square(psi, psi, -1.0, None, &mut map);
        hermitian_square(psi, psi, 1.0, Some(k), &mut map);
    }
    Ok(map.values().map(op_norm).fold(0.0, f64::max))
}

/// Residual plus verdict against `identity_atol`.
pub fn verify_knese(
    p: &MatrixPolynomial,
    q: &MatrixPolynomial,
    psis: &[MatrixPolynomial],
    tol: &Tolerances,
) -> Result<SampleReport> {
    let residual = knese_residual(p, q, psis)?;
    Ok(SampleReport::scalar("knese", residual, tol.identity_atol))
}

/// Coefficient-level difference between `a(ω)*a(ζ)` and `b(ω)*b(ζ)`.
pub fn gram_difference(a: &MatrixPolynomial, b: &MatrixPolynomial) -> f64 {
    let mut map = CoefficientMap::new();
    hermitian_square(a, a, 1.0, None, &mut map);
    hermitian_square(b, b, -1.0, None, &mut map);
    map.values().map(op_norm).fold(0.0, f64::max)
}

/// `binom(r - 1 + d, d) · n`, the size of the moment matrix.
pub fn rank_bound(max_degree: usize, d: usize, n: usize) -> usize {
    MultiIndex::up_to_degree(d, max_degree).len() * n
}

/// Replaces each `ξ_k` by a factor with `ψ_k(ω)*ψ_k(ζ) = ξ_k(ω)*ξ_k(ζ)` and as
/// many rows as the rank of the moment matrix `[ξ_{k,β}* ξ_{k,α}]`.
pub fn compress_sos(xis: &[MatrixPolynomial], max_degree: usize, tol: &Tolerances) -> Result<Vec<MatrixPolynomial>> {
    xis.iter().map(|xi| compress_one(xi, max_degree, tol)).collect()
}

fn compress_one(xi: &MatrixPolynomial, max_degree: usize, tol: &Tolerances) -> Result<MatrixPolynomial> {
    let (d, n) = (xi.d(), xi.cols());
    if xi.total_degree() > max_degree {
        return Err(Error::DegreeExceeded {
            degree: xi.total_degree(),
            bound: max_degree,
        });
    }
    let indices = MultiIndex::up_to_degree(d, max_degree);
    let mut stacked = zeros(xi.rows(), indices.len() * n);
    for (j, alpha) in indices.iter().enumerate() {
        if let Some(m) = xi.coefficient(alpha) {
            stacked.view_mut((0, j * n), (xi.rows(), n)).copy_from(m);
        }
    }
    let moment = stacked.adjoint() * &stacked;
    let y = rank_factor_psd(&moment, tol)?;
    let rows = y.nrows();
    let terms = indices
        .iter()
        .enumerate()
        .map(|(j, alpha)| (alpha.clone(), y.view((0, j * n), (rows, n)).into_owned()))
        .collect();
    let psi = MatrixPolynomial::from_terms(d, rows, n, terms)?;
    let defect = gram_difference(&psi, xi);
    let scale = op_norm(&moment).max(1.0);
    if defect > tol.identity_atol * scale {
        return Err(Error::Postcondition {
            stage: "compress_sos kernel equality".into(),
            residual: defect,
            threshold: tol.identity_atol * scale,
        });
    }
    Ok(psi)
}

/// Torus and continuation forms of the inner test.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerReport {
    pub torus: SampleReport,
    pub continuation: SampleReport,
}

impl InnerReport {
    pub fn passed(&self) -> bool {
        self.torus.verdict && self.continuation.verdict
    }
}

fn near_denominator_zero(den: Option<&MatrixPolynomial>, z: &[Complex64]) -> Result<bool> {
    match den {
        None => Ok(false),
        Some(p) => {
            let v = p.eval(z)?;
            let smallest = v.singular_values().iter().fold(f64::INFINITY, |a, &s| a.min(s));
            Ok(smallest <= DENOMINATOR_EPS)
        }
    }
}

/// `max ‖F(μ)*F(μ) - I‖` over torus samples and `max ‖F(1/μ̄)*F(μ) - I‖` at
/// `μ` scaled into the polydisk. Samples near a zero of `denominator` are skipped.
pub fn inner_check(
    f: &FunctionHandle,
    plan: &SamplePlan,
    denominator: Option<&MatrixPolynomial>,
    tol: &Tolerances,
) -> Result<InnerReport> {
    let n = f.rows();
    let mut torus = Accumulator::new("inner_torus", tol.identity_atol);
    let mut cont = Accumulator::new("inner_continuation", tol.identity_atol);
    for mu in plan.points(f.d()) {
        if near_denominator_zero(denominator, &mu)? {
            torus.record(&mu, Err(Error::EvaluationSingular { point: mu.clone() }))?;
            continue;
        }
        torus.record(&mu, f.eval(&mu).map(|v| op_norm(&(v.adjoint() * &v - identity(n)))))?;

        let inner: Point = mu.iter().map(|w| w * CONTINUATION_RADIUS).collect();
        let outer: Point = inner.iter().map(|w| 1.0 / w.conj()).collect();
        if near_denominator_zero(denominator, &inner)? || near_denominator_zero(denominator, &outer)? {
            cont.record(&inner, Err(Error::EvaluationSingular { point: inner.clone() }))?;
            continue;
        }
        let r = f
            .eval(&inner)
            .and_then(|a| Ok(op_norm(&(f.eval(&outer)?.adjoint() * a - identity(n)))));
        cont.record(&inner, r)?;
    }
    Ok(InnerReport {
        torus: torus.finish()?,
        continuation: cont.report(),
    })
}

/// Unitary realization of `q p^{-1}` from a verified witness via the lurking isometry.
pub fn knese_realization(
    witness: &KneseWitness,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<GivoneRoesserRealization> {
    if witness.residual > tol.identity_atol {
        return Err(Error::GramMismatch {
            residual: witness.residual,
            threshold: tol.identity_atol,
            marginal: witness.residual <= 100.0 * tol.identity_atol,
        });
    }
    lurking_isometry(
        &witness.transfer_handle(),
        &witness.defect_handles(),
        false,
        false,
        plan,
        tol,
    )
}

/// The two-variable example `q/p = (2ζ1ζ2 - ζ1 - ζ2)/(2 - ζ1 - ζ2)` with its factors.
pub fn example_witness() -> KneseWitness {
    let s = 2f64.sqrt();
    let cx = |x: f64| Complex64::new(x, 0.0);
    let p = MatrixPolynomial::scalar(2, &[(cx(2.0), &[0, 0]), (cx(-1.0), &[1, 0]), (cx(-1.0), &[0, 1])]).unwrap();
    let q = MatrixPolynomial::scalar(2, &[(cx(2.0), &[1, 1]), (cx(-1.0), &[1, 0]), (cx(-1.0), &[0, 1])]).unwrap();
    let psi1 = MatrixPolynomial::scalar(2, &[(cx(s), &[0, 0]), (cx(-s), &[0, 1])]).unwrap();
    let psi2 = MatrixPolynomial::scalar(2, &[(cx(s), &[0, 0]), (cx(-s), &[1, 0])]).unwrap();
    KneseWitness::new(p, q, vec![psi1, psi2]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, from_real_rows};

    fn scalar_poly(d: usize, terms: &[(f64, &[u32])]) -> MatrixPolynomial {
        let t: Vec<(Complex64, &[u32])> = terms.iter().map(|&(x, e)| (c(x, 0.0), e)).collect();
        MatrixPolynomial::scalar(d, &t).unwrap()
    }

    #[test]
    fn knese_examples() {
        let tol = Tolerances::default();
        let p = scalar_poly(1, &[(1.0, &[0])]);
        let q = scalar_poly(1, &[(1.0, &[1])]);
        let psi = scalar_poly(1, &[(1.0, &[0])]);
        assert_eq!(knese_residual(&p, &q, &[psi]).unwrap(), 0.0);

        let w = example_witness();
        assert!(w.residual <= 1e-12);
        assert!(verify_knese(&w.p, &w.q, &w.psis, &tol).unwrap().verdict);

        let mut psis = w.psis.clone();
        psis[1] = psis[1].scale(c(1.1, 0.0));
        let r = verify_knese(&w.p, &w.q, &psis, &tol).unwrap();
        assert!(!r.verdict);
        // ψ2 contributes 2(1 - ω̄1ζ1)... with weight 0.21 in excess
        assert!((r.max_residual - 0.42).abs() < 1e-12);
    }

    #[test]
    fn knese_shape_errors() {
        let w = example_witness();
        assert!(matches!(
            knese_residual(&w.p, &w.q, &w.psis[..1]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn compress_examples() {
        let tol = Tolerances::default();
        let xi = MatrixPolynomial::constant(1, from_real_rows(2, 1, &[1.0, 1.0]));
        let psi = compress_sos(&[xi], 0, &tol).unwrap();
        assert_eq!(psi[0].rows(), 1);
        assert!((psi[0].coefficient(&MultiIndex::zero(1)).unwrap()[(0, 0)] - c(2f64.sqrt(), 0.0)).norm() < 1e-15);

        let w = example_witness();
        let out = compress_sos(&w.psis, 1, &tol).unwrap();
        assert_eq!(out.iter().map(|p| p.rows()).collect::<Vec<_>>(), vec![1, 1]);
        for (a, b) in out.iter().zip(&w.psis) {
            assert!(gram_difference(a, b) < 1e-14);
        }
        assert!(knese_residual(&w.p, &w.q, &out).unwrap() <= 1e-12);
        assert_eq!(rank_bound(1, 2, 1), 3);

        let high = scalar_poly(1, &[(1.0, &[3])]);
        assert!(matches!(
            compress_sos(&[high], 2, &tol),
            Err(Error::DegreeExceeded { .. })
        ));
    }

    #[test]
    fn inner_examples() {
        let tol = Tolerances::default();
        let plan = SamplePlan::torus(3, 0);
        let mono = FunctionHandle::new(2, 1, 1, Domain::Polydisk, |z| Ok(identity(1) * (z[0] * z[1])));
        let r = inner_check(&mono, &plan, None, &tol).unwrap();
        assert!(r.torus.max_residual < 1e-15 && r.continuation.max_residual < 1e-15);

        let u = from_real_rows(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let constant = FunctionHandle::new(1, 2, 2, Domain::Polydisk, move |_| Ok(u.clone()));
        assert!(inner_check(&constant, &plan, None, &tol).unwrap().passed());

        let half = FunctionHandle::new(1, 1, 1, Domain::Polydisk, |z| Ok(identity(1) * (z[0] * 0.5)));
        let r = inner_check(&half, &plan, None, &tol).unwrap();
        assert!((r.torus.max_residual - 0.75).abs() < 1e-15 && !r.passed());
    }

    #[test]
    fn knese_synthesis_is_inner() {
        let tol = Tolerances::default();
        let w = example_witness();
        let re = knese_realization(&w, &SamplePlan::polydisk(5, 20), &tol).unwrap();
        let f = FunctionHandle::new(2, 1, 1, Domain::Polydisk, {
            let re = re.clone();
            move |z| crate::realization::eval_transfer(&re, z)
        });
        let r = inner_check(&f, &SamplePlan::torus(8, 200), Some(&w.p), &tol).unwrap();
        assert_eq!(r.torus.samples + r.torus.skipped, 200);
        assert!(r.torus.max_residual <= 1e-8, "{r:?}");
    }
}
