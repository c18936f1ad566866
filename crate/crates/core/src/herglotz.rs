//! Herglotz realizations `F(ζ) = β + V*(W - P(ζ))^{-1}(W + P(ζ))V` and the
//! steps that build them from a Schur-class realization.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    block, hermitian_part, identity, inverse, op_norm, rank_factor_psd, skew_part, solve, CMatrix, Tolerances,
};
use crate::polyalg::{Domain, FunctionHandle};
use crate::realization::{block_offsets, variable_matrix, GivoneRoesserRealization};
use crate::verify::{Accumulator, SamplePlan, SampleReport};

#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzRealization {
    state_dims: Vec<usize>,
    beta: CMatrix,
    w: CMatrix,
    v: CMatrix,
}

impl HerglotzRealization {
    /// Checks shapes, `β + β* = 0` and `W*W = I` within `identity_atol`.
    pub fn new(state_dims: Vec<usize>, beta: CMatrix, w: CMatrix, v: CMatrix, tol: &Tolerances) -> Result<Self> {
        let m: usize = state_dims.iter().sum();
        let n = beta.nrows();
        if beta.ncols() != n || w.shape() != (m, m) || v.shape() != (m, n) {
            return Err(Error::DimensionMismatch(format!(
                "Herglotz data: beta {:?}, W {:?}, V {:?} for m = {m}",
                beta.shape(),
                w.shape(),
                v.shape()
            )));
        }
        let skew = op_norm(&(&beta + beta.adjoint()));
        if skew > tol.identity_atol {
            return Err(Error::InvalidArgument(format!(
                "beta is not skew-Hermitian (residual {skew:.3e})"
            )));
        }
        let unit = op_norm(&(w.adjoint() * &w - identity(m)));
        if unit > tol.identity_atol {
            return Err(Error::NotUnitaryW { residual: unit });
        }
        Ok(HerglotzRealization { state_dims, beta, w, v })
    }

    pub fn d(&self) -> usize {
        self.state_dims.len()
    }

    pub fn n(&self) -> usize {
        self.beta.nrows()
    }

    pub fn m(&self) -> usize {
        self.w.nrows()
    }

    pub fn state_dims(&self) -> &[usize] {
        &self.state_dims
    }

    pub fn beta(&self) -> &CMatrix {
        &self.beta
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }

    /// The realized function as a handle on the polydisk.
    pub fn to_handle(&self) -> FunctionHandle {
        let h = self.clone();
        FunctionHandle::new(self.d(), self.n(), self.n(), Domain::Polydisk, move |z| {
            eval_herglotz(&h, z)
        })
    }
}

fn resolvent_error(zeta: &[Complex64]) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::SingularShift { .. } => Error::ResolventSingular { point: zeta.to_vec() },
        other => other,
    }
}

/// `F(ζ) = β + V*(W - P(ζ))^{-1}(W + P(ζ))V`.
pub fn eval_herglotz(h: &HerglotzRealization, zeta: &[Complex64]) -> Result<CMatrix> {
    if zeta.len() != h.d() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, realization has {} variables",
            zeta.len(),
            h.d()
        )));
    }
    if h.m() == 0 {
        return Ok(h.beta.clone());
    }
    let p = variable_matrix(&h.state_dims, zeta);
    let x = solve(&(&h.w - &p), &((&h.w + &p) * &h.v)).map_err(resolvent_error(zeta))?;
    Ok(&h.beta + h.v.adjoint() * x)
}

/// `F(0) = β + γ` with `β` skew, `γ = δ*δ` PSD and `δ` of full row rank.
pub fn split_at_zero(f0: &CMatrix, tol: &Tolerances) -> Result<(CMatrix, CMatrix, CMatrix)> {
    let beta = skew_part(f0);
    let gamma = hermitian_part(f0);
    let delta = rank_factor_psd(&gamma, tol)?;
    Ok((beta, gamma, delta))
}

/// Left inverse `(δδ*)^{-1}δ` of `δ*`.
pub fn delta_left_inverse(delta: &CMatrix) -> Result<CMatrix> {
    Ok(inverse(&(delta * delta.adjoint()))? * delta)
}

/// `F_+(ζ) = (δδ*)^{-1}δ(F(ζ) - β)δ*(δδ*)^{-1}`, verified to satisfy
/// `F = β + δ*F_+δ` and `F_+(0) = I` on the plan.
pub fn reduce_to_plus(
    f: &FunctionHandle,
    beta: &CMatrix,
    delta: &CMatrix,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<FunctionHandle> {
    let n = f.rows();
    if f.cols() != n || beta.shape() != (n, n) || delta.ncols() != n {
        return Err(Error::DimensionMismatch("reduce_to_plus shapes".into()));
    }
    let r = delta.nrows();
    let l = delta_left_inverse(delta)?;
    let plus = {
        let (f, beta, l) = (f.clone(), beta.clone(), l.clone());
        FunctionHandle::new(f.d(), r, r, f.domain(), move |z| {
            Ok(&l * (f.eval(z)? - &beta) * l.adjoint())
        })
    };
    let origin = vec![Complex64::new(0.0, 0.0); f.d()];
    let center = op_norm(&(plus.eval(&origin)? - identity(r)));
    if !(center <= tol.identity_atol) {
        return Err(Error::KernelNotConstant { residual: center });
    }
    for z in std::iter::once(origin).chain(plan.points(f.d())) {
        let fz = match f.eval(&z) {
            Ok(v) => v,
            Err(e) if e.is_singular_evaluation() => continue,
            Err(e) => return Err(e),
        };
        let back = beta + delta.adjoint() * (&l * (&fz - beta) * l.adjoint()) * delta;
        let res = op_norm(&(back - &fz)) / op_norm(&fz).max(1.0);
        if !(res <= tol.identity_atol) {
            return Err(Error::KernelNotConstant { residual: res });
        }
    }
    Ok(plus)
}

/// Herglotz realization from a unitary colligation of `𝓕_+` with `D = 0`:
/// `W = (A + BC)*`, `V = Bδ`.
pub fn schur_to_herglotz(
    re: &GivoneRoesserRealization,
    beta: &CMatrix,
    delta: &CMatrix,
    tol: &Tolerances,
) -> Result<HerglotzRealization> {
    if delta.nrows() != re.n() || beta.shape() != (delta.ncols(), delta.ncols()) {
        return Err(Error::DimensionMismatch("schur_to_herglotz shapes".into()));
    }
    let d_norm = op_norm(&re.d_block());
    if d_norm > tol.identity_atol {
        return Err(Error::NonzeroD { norm: d_norm });
    }
    let b = re.b();
    let w = (re.a() + &b * re.c()).adjoint();
    let m = re.m();
    let unit = op_norm(&(w.adjoint() * &w - identity(m)));
    if unit > tol.identity_atol {
        return Err(Error::NotUnitaryW { residual: unit });
    }
    let isometry = op_norm(&(b.adjoint() * &b - identity(re.n())));
    if isometry > tol.identity_atol {
        return Err(Error::Postcondition {
            stage: "B*B = I".into(),
            residual: isometry,
            threshold: tol.identity_atol,
        });
    }
    let v = b * delta;
    HerglotzRealization::new(re.state_dims().to_vec(), beta.clone(), w, v, tol)
}

/// `ξ_k(ζ) = √2 P_k (I - W*P(ζ))^{-1} V`, each `m_k × n`.
pub fn xi_functions(h: &HerglotzRealization) -> Vec<FunctionHandle> {
    let offsets = block_offsets(&h.state_dims);
    (0..h.d())
        .map(|k| {
            let h = h.clone();
            let (o, mk) = (offsets[k], h.state_dims[k]);
            FunctionHandle::new(h.d(), mk, h.n(), Domain::Polydisk, move |z| {
                let x = xi_stack(&h, z)?;
                Ok(block(&x, o, 0, mk, h.n()))
            })
        })
        .collect()
}

fn xi_stack(h: &HerglotzRealization, zeta: &[Complex64]) -> Result<CMatrix> {
    let p = variable_matrix(&h.state_dims, zeta);
    let x = solve(&(identity(h.m()) - h.w.adjoint() * p), &h.v).map_err(resolvent_error(zeta))?;
    Ok(x * Complex64::new(2f64.sqrt(), 0.0))
}

/// `‖F(ω)* + F(ζ) - Σ(1 - ω̄_k ζ_k) ξ_k(ω)*ξ_k(ζ)‖`.
pub fn xi_residual(h: &HerglotzRealization, omega: &[Complex64], zeta: &[Complex64]) -> Result<f64> {
    let fw = eval_herglotz(h, omega)?;
    let fz = eval_herglotz(h, zeta)?;
    let (xw, xz) = (xi_stack(h, omega)?, xi_stack(h, zeta)?);
    let weight =
        identity(h.m()) - variable_matrix(&h.state_dims, omega).adjoint() * variable_matrix(&h.state_dims, zeta);
    Ok(op_norm(&(fw.adjoint() + fz - xw.adjoint() * weight * xz)))
}

/// Kernel decomposition residual of the `ξ_k` over sampled pairs, relative to
/// `max(1, ‖F(ω)‖, ‖F(ζ)‖)`.
pub fn check_xi_identity(h: &HerglotzRealization, plan: &SamplePlan, tol: &Tolerances) -> Result<SampleReport> {
    let mut acc = Accumulator::new("xi_decomposition", tol.identity_atol);
    for (w, z) in plan.pairs(h.d()) {
        let witness: Vec<Complex64> = w.iter().chain(&z).copied().collect();
        let r = xi_residual(h, &w, &z).and_then(|r| {
            let scale = op_norm(&eval_herglotz(h, &w)?)
                .max(op_norm(&eval_herglotz(h, &z)?))
                .max(1.0);
            Ok(r / scale)
        });
        acc.record(&witness, r)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, diag_real, from_real_rows, zeros};
    use crate::realization::StructureFlags;

    fn scalar_h(beta: Complex64) -> HerglotzRealization {
        HerglotzRealization::new(
            vec![1],
            identity(1) * beta,
            identity(1),
            identity(1),
            &Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let h = scalar_h(c(0.0, 0.0));
        for z in [c(0.3, 0.0), c(-0.2, 0.5)] {
            let v = eval_herglotz(&h, &[z]).unwrap()[(0, 0)];
            assert!((v - (1.0 + z) / (1.0 - z)).norm() < 1e-14);
        }
        let h = scalar_h(c(0.0, 1.0));
        let z = c(0.1, 0.2);
        let v = eval_herglotz(&h, &[z]).unwrap()[(0, 0)];
        assert!((v - (c(0.0, 1.0) + (1.0 + z) / (1.0 - z))).norm() < 1e-14);
        assert_eq!(eval_herglotz(&h, &[c(0.0, 0.0)]).unwrap()[(0, 0)], c(1.0, 1.0));
        assert!(matches!(
            eval_herglotz(&h, &[c(1.0, 0.0)]),
            Err(Error::ResolventSingular { .. })
        ));
    }

    #[test]
    fn split_examples() {
        let tol = Tolerances::default();
        let (b, g, d) = split_at_zero(&identity(2), &tol).unwrap();
        assert_eq!(b, zeros(2, 2));
        assert_eq!(g, identity(2));
        assert!(op_norm(&(d - identity(2))) < 1e-15);

        let mut f0 = zeros(2, 2);
        f0[(0, 0)] = c(0.0, 1.0);
        f0[(1, 1)] = c(2.0, 0.0);
        let (b, g, d) = split_at_zero(&f0, &tol).unwrap();
        assert_eq!(b[(0, 0)], c(0.0, 1.0));
        assert_eq!(g, diag_real(&[0.0, 2.0]));
        assert_eq!(d.shape(), (1, 2));
        assert!(d[(0, 0)].norm() < 1e-15 && (d[(0, 1)] - c(2f64.sqrt(), 0.0)).norm() < 1e-15);

        let mut f0 = identity(2);
        f0[(0, 1)] = c(0.0, 1.0);
        f0[(1, 0)] = c(0.0, -1.0);
        let (_, _, d) = split_at_zero(&f0, &tol).unwrap();
        assert_eq!(d.nrows(), 1);
        assert!(op_norm(&(d.adjoint() * &d - f0)) < 1e-14);

        assert!(matches!(
            split_at_zero(&diag_real(&[-1.0]), &tol),
            Err(Error::NotPsd { .. })
        ));
    }

    fn diag_fn(f: impl Fn(Complex64) -> (Complex64, Complex64) + Send + Sync + 'static) -> FunctionHandle {
        FunctionHandle::new(1, 2, 2, Domain::Polydisk, move |z| {
            let (a, b) = f(z[0]);
            let mut m = zeros(2, 2);
            m[(0, 0)] = a;
            m[(1, 1)] = b;
            Ok(m)
        })
    }

    #[test]
    fn reduce_examples() {
        let tol = Tolerances::default();
        let plan = SamplePlan::polydisk(1, 20);
        let f = diag_fn(|z| ((1.0 + z) / (1.0 - z), c(0.0, 0.0)));
        let delta = from_real_rows(1, 2, &[1.0, 0.0]);
        let plus = reduce_to_plus(&f, &zeros(2, 2), &delta, &plan, &tol).unwrap();
        let z = c(0.3, 0.1);
        assert!((plus.eval(&[z]).unwrap()[(0, 0)] - (1.0 + z) / (1.0 - z)).norm() < 1e-14);

        let g = diag_fn(|z| ((1.0 + z) / (1.0 - z), z));
        assert!(matches!(
            reduce_to_plus(&g, &zeros(2, 2), &delta, &plan, &tol),
            Err(Error::KernelNotConstant { .. })
        ));

        let f = diag_fn(|z| ((1.0 + z) / (1.0 - z), (1.0 + z) / (1.0 - z)));
        let plus = reduce_to_plus(&f, &zeros(2, 2), &identity(2), &plan, &tol).unwrap();
        assert!(op_norm(&(plus.eval(&[c(0.0, 0.0)]).unwrap() - identity(2))) < 1e-15);
    }

    fn swap() -> GivoneRoesserRealization {
        let flags = StructureFlags {
            unitary: true,
            hermitian: true,
            real: true,
        };
        GivoneRoesserRealization::new(
            1,
            vec![1],
            from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            flags,
            &Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn schur_to_herglotz_swap() {
        let tol = Tolerances::default();
        let h = schur_to_herglotz(&swap(), &zeros(1, 1), &identity(1), &tol).unwrap();
        assert_eq!(h.w(), &identity(1));
        assert_eq!(h.v(), &identity(1));
        let hb = schur_to_herglotz(&swap(), &(identity(1) * c(0.0, 1.0)), &identity(1), &tol).unwrap();
        assert_eq!((hb.w(), hb.v()), (h.w(), h.v()));
        assert_eq!(hb.beta()[(0, 0)], c(0.0, 1.0));

        let flags = StructureFlags::default();
        let nonzero_d = GivoneRoesserRealization::new(1, vec![1], identity(2), flags, &tol).unwrap();
        assert!(matches!(
            schur_to_herglotz(&nonzero_d, &zeros(1, 1), &identity(1), &tol),
            Err(Error::NonzeroD { .. })
        ));
    }

    #[test]
    fn xi_examples() {
        let tol = Tolerances::default();
        let h = scalar_h(c(0.0, 0.0));
        let xi = xi_functions(&h);
        let z = c(0.4, -0.2);
        assert!((xi[0].eval(&[z]).unwrap()[(0, 0)] - 2f64.sqrt() / (1.0 - z)).norm() < 1e-14);
        assert!(xi_residual(&h, &[c(0.0, 0.0)], &[c(0.0, 0.0)]).unwrap() <= 1e-10);
        assert!(
            check_xi_identity(&h, &SamplePlan::polydisk(3, 100), &tol)
                .unwrap()
                .max_residual
                <= 1e-9
        );

        let h2 = HerglotzRealization::new(vec![1], zeros(1, 1), identity(1), identity(1) * c(2.0, 0.0), &tol).unwrap();
        let scaled = xi_functions(&h2)[0].eval(&[z]).unwrap()[(0, 0)];
        assert!((scaled - xi[0].eval(&[z]).unwrap()[(0, 0)] * 2.0).norm() < 1e-14);
        assert!(
            check_xi_identity(&h2, &SamplePlan::polydisk(4, 50), &tol)
                .unwrap()
                .verdict
        );
    }
}
