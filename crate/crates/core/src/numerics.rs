//! Dense complex linear algebra shared by every other module.
//!
//! Factorizations are delegated to `nalgebra`; this module fixes the
//! conventions on top of them (eigenvalue ordering, rank cutoffs, factor
//! phases, deterministic completions) so the rest of the crate can rely on
//! reproducible outputs.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Inversions are refused above this 1-norm condition estimate.
pub const MAX_CONDITION: f64 = 1e12;

/// Default angular clustering radius for unitary eigenvalues.
pub const EIGEN_ANGLE_TOL: f64 = 1e-8;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Numerical tolerances threaded explicitly through every operation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Absolute tolerance for algebraic identities.
    pub identity_atol: f64,
    /// Relative singular value cutoff for numerical rank.
    pub rank_rtol: f64,
    /// Allowed negative slack on minimum eigenvalues.
    pub psd_atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity_atol: 1e-9,
            rank_rtol: 1e-10,
            psd_atol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn new(identity_atol: f64, rank_rtol: f64, psd_atol: f64) -> Result<Self> {
        let t = Tolerances {
            identity_atol,
            rank_rtol,
            psd_atol,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("identity_atol", self.identity_atol),
            ("rank_rtol", self.rank_rtol),
            ("psd_atol", self.psd_atol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "tolerance {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

/// Builds a complex matrix from real row-major data.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    assert_eq!(data.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| c(data[i * cols + j], 0.0))
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

/// Spectral norm (largest singular value); zero for empty matrices.
pub fn op_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0_f64, |acc, &s| acc.max(s))
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

pub fn max_imag(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs()))
}

pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn skew_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * c(0.5, 0.0)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(*b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Copies the `(rows, cols)` block starting at `(r0, c0)`.
pub fn block(m: &CMatrix, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix {
    m.view((r0, c0), (rows, cols)).into_owned()
}

fn one_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse through a fully pivoted LU factorization.
///
/// Fails with [`Error::SingularShift`] when the matrix is singular or its
/// 1-norm condition number exceeds [`MAX_CONDITION`].
pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "cannot invert {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.is_empty() {
        return Ok(m.clone());
    }
    let inv = m
        .clone()
        .full_piv_lu()
        .try_inverse()
        .ok_or(Error::SingularShift { cond: f64::INFINITY })?;
    let cond = one_norm(m) * one_norm(&inv);
    if !cond.is_finite() || cond > MAX_CONDITION || !all_finite(&inv) {
        return Err(Error::SingularShift { cond });
    }
    Ok(inv)
}

/// Solves `a x = b`.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    Ok(inverse(a)? * b)
}

fn check_square(m: &CMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending order.
pub fn hermitian_eig(m: &CMatrix, tol: &Tolerances) -> Result<(Vec<f64>, CMatrix)> {
    check_square(m, "hermitian_eig")?;
    let n = m.nrows();
    if n == 0 {
        return Ok((vec![], zeros(0, 0)));
    }
    let asym = op_norm(&(m - m.adjoint()));
    if asym > tol.identity_atol * op_norm(m).max(1.0) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    // Real symmetric input keeps real eigenvectors.
    let (eigenvalues, eigenvectors) = if max_imag(m) == 0.0 {
        let re = real_part(m);
        let eig = ((&re + re.transpose()) * 0.5).symmetric_eigen();
        (eig.eigenvalues, to_complex(&eig.eigenvectors))
    } else {
        let eig = hermitian_part(m).symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigenvalues[a]
            .partial_cmp(&eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eigenvalues[i]).collect();
    let mut q = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        q.set_column(dst, &eigenvectors.column(src));
    }
    Ok((values, q))
}

fn psd_eig(m: &CMatrix, tol: &Tolerances) -> Result<(Vec<f64>, CMatrix)> {
    let (values, q) = hermitian_eig(m, tol)?;
    if let Some(&min) = values.first() {
        if min < -tol.psd_atol * op_norm(m).max(1.0) {
            return Err(Error::NotPsd { min_eig: min });
        }
    }
    Ok((values, q))
}

/// Minimum eigenvalue of the Hermitian part; `+inf` for empty matrices.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// Hermitian PSD square root; eigenvalues within the PSD slack are clamped to zero.
pub fn psd_sqrt(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let (values, q) = psd_eig(m, tol)?;
    let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    Ok(&q * diag_real(&roots) * q.adjoint())
}

/// Full-row-rank factor `Y` with `Y* Y = M` for Hermitian PSD `M`.
///
/// Rows are ordered by decreasing eigenvalue, and each row is rotated so its
/// first entry of non-negligible modulus is real and positive.
pub fn rank_factor_psd(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let (values, q) = psd_eig(m, tol)?;
    let n = m.nrows();
    let top = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cutoff = tol.rank_rtol * top;
    let mut kept: Vec<usize> = (0..n).filter(|&i| values[i] > cutoff && values[i] > 0.0).collect();
    // decreasing eigenvalue; equal eigenvalues keep eigenvector order
    kept.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut y = zeros(kept.len(), n);
    for (row, &i) in kept.iter().enumerate() {
        let scale = values[i].sqrt();
        let v = q.column(i);
        let vmax = v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        let pivot = v
            .iter()
            .find(|z| z.norm() > 1e-8 * vmax)
            .copied()
            .unwrap_or(c(1.0, 0.0));
        let phase = pivot / pivot.norm();
        for j in 0..n {
            // row of Y is sqrt(lambda) * v^* rotated so the pivot entry is positive
            y[(row, j)] = v[j].conj() * phase * scale;
        }
    }
    Ok(y)
}

/// Orthonormal vectors completing the orthonormal columns of `basis` to a
/// basis of the ambient space, chosen by pivoted Gram-Schmidt over the
/// standard basis (largest residual norm first, ties to the lowest index).
pub fn orthonormal_complement<T: ComplexField<RealField = f64>>(basis: &DMatrix<T>) -> DMatrix<T> {
    let s = basis.nrows();
    let r = basis.ncols();
    let mut cols: Vec<nalgebra::DVector<T>> = (0..r).map(|j| basis.column(j).into_owned()).collect();
    let mut used = vec![false; s];
    let mut out = Vec::with_capacity(s.saturating_sub(r));
    for _ in r..s {
        let mut best: Option<(usize, f64, nalgebra::DVector<T>)> = None;
        for i in 0..s {
            if used[i] {
                continue;
            }
            let mut v = nalgebra::DVector::<T>::zeros(s);
            v[i] = T::one();
            for _ in 0..2 {
                for q in &cols {
                    let coef = q.dotc(&v);
                    v -= q * coef;
                }
            }
            let nrm = v.norm();
            if best.as_ref().is_none_or(|(_, b, _)| nrm > *b) {
                best = Some((i, nrm, v));
            }
        }
        let (i, nrm, v) = best.expect("candidate available while basis incomplete");
        used[i] = true;
        let v = v.unscale(nrm);
        cols.push(v.clone());
        out.push(v);
    }
    if out.is_empty() {
        DMatrix::<T>::zeros(s, 0)
    } else {
        DMatrix::<T>::from_columns(&out)
    }
}

/// Thin SVD `m = U diag(s) V*` with singular values sorted descending.
fn sorted_svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>, DMatrix<T>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = DMatrix::<T>::from_fn(u.nrows(), k, |i, j| u[(i, order[j])].clone());
    let v_sorted = DMatrix::<T>::from_fn(vt.ncols(), k, |i, j| vt[(order[j], i)].clone().conjugate());
    (u_sorted, sv, v_sorted)
}

fn numerical_rank(sv: &[f64], rtol: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    sv.iter().take_while(|&&s| s > rtol * top && s > 0.0).count()
}

/// Orthonormal basis of the column span at the given relative rank cutoff.
pub fn column_span<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, rtol: f64) -> DMatrix<T> {
    if m.is_empty() {
        return DMatrix::<T>::zeros(m.nrows(), 0);
    }
    let (u, sv, _) = sorted_svd(m);
    let r = numerical_rank(&sv, rtol);
    u.columns(0, r).into_owned()
}

/// Numerical rank of a matrix at a relative singular value cutoff.
pub fn rank<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, rtol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let (_, sv, _) = sorted_svd(m);
    numerical_rank(&sv, rtol)
}

fn lift<T: ComplexField<RealField = f64>>(x: f64) -> T {
    T::from_real(x)
}

/// `‖S* M S‖` for `S = [L; R]`. With a thin QR `S* = QR` this is `‖R M R*‖`,
/// so the cost does not grow quadratically with the column count.
fn stacked_form_norm<T: ComplexField<RealField = f64>>(l: &DMatrix<T>, r: &DMatrix<T>, m: &DMatrix<T>) -> f64 {
    let (rows, cols) = l.shape();
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut s = DMatrix::<T>::zeros(cols, 2 * rows);
    s.columns_mut(0, rows).copy_from(&l.adjoint());
    s.columns_mut(rows, rows).copy_from(&r.adjoint());
    let tri = s.qr().r();
    op_norm(&(&tri * m * tri.adjoint()))
}

/// `‖L*L - R*R‖`.
pub fn gram_defect_norm<T: ComplexField<RealField = f64>>(l: &DMatrix<T>, r: &DMatrix<T>) -> f64 {
    let s = l.nrows();
    let mut j = DMatrix::<T>::identity(2 * s, 2 * s);
    for i in s..2 * s {
        j[(i, i)] = lift(-1.0);
    }
    stacked_form_norm(l, r, &j)
}

/// `‖L*R - R*L‖`.
pub fn cross_asymmetry_norm<T: ComplexField<RealField = f64>>(l: &DMatrix<T>, r: &DMatrix<T>) -> f64 {
    let s = l.nrows();
    let mut k = DMatrix::<T>::zeros(2 * s, 2 * s);
    for i in 0..s {
        k[(i, s + i)] = lift(1.0);
        k[(s + i, i)] = lift(-1.0);
    }
    stacked_form_norm(l, r, &k)
}

/// Thin `Q` of a QR factorization with the phases chosen so that `R` has a
/// nonnegative real diagonal; `Q = M` when `M` already has orthonormal columns.
fn phase_fixed_q<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> DMatrix<T> {
    if m.ncols() == 0 {
        return m.clone();
    }
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols().min(r.nrows()) {
        let x = r[(j, j)].clone();
        let modulus = x.clone().modulus();
        if modulus > 0.0 {
            let phase = x.unscale(modulus);
            for i in 0..q.nrows() {
                q[(i, j)] = q[(i, j)].clone() * phase.clone();
            }
        }
    }
    q
}

fn unitary_completion_generic<T: ComplexField<RealField = f64>>(
    l: &DMatrix<T>,
    r: &DMatrix<T>,
    hermitian_wanted: bool,
    tol: &Tolerances,
) -> Result<DMatrix<T>> {
    if l.shape() != r.shape() {
        return Err(Error::DimensionMismatch(format!(
            "completion needs equal shapes, got {:?} and {:?}",
            l.shape(),
            r.shape()
        )));
    }
    let s = l.nrows();
    let l_norm = op_norm(l);
    let scale = l_norm.powi(2).max(1.0);
    let threshold = tol.identity_atol * scale;
    let gram = gram_defect_norm(l, r);
    if !(gram <= threshold) {
        return Err(Error::GramMismatch {
            residual: gram,
            threshold,
            marginal: gram <= 100.0 * threshold,
        });
    }

    let u = if hermitian_wanted {
        let asym = cross_asymmetry_norm(l, r);
        if !(asym <= threshold) {
            return Err(Error::HermitianInfeasible { residual: asym });
        }
        // Among Hermitian unitaries I - 2QQ*, ‖U[L R] - [R L]‖ is smallest when
        // Q spans the negative eigenspace of LR* + RL*.
        let k = l * r.adjoint() + r * l.adjoint();
        let k = (&k + k.adjoint()).scale(0.5);
        let eig = k.symmetric_eigen();
        let mut u = DMatrix::<T>::identity(s, s);
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < 0.0 {
                let q = eig.eigenvectors.column(i);
                u -= (&q * q.adjoint()).scale(2.0);
            }
        }
        (&u + u.adjoint()).scale(0.5)
    } else if l.is_empty() {
        DMatrix::<T>::identity(s, s)
    } else {
        // U maps the left singular vectors of L to R V Σ^{-1}. That image is
        // orthonormalized column by column in order of decreasing σ, so errors
        // in weakly determined directions are not propagated to strong ones.
        let (uu, sv, vv) = sorted_svd(l);
        let k = numerical_rank(&sv, tol.rank_rtol);
        let basis_l = uu.columns(0, k).into_owned();
        let mut inv_sigma = DMatrix::<T>::zeros(k, k);
        for i in 0..k {
            inv_sigma[(i, i)] = lift(1.0 / sv[i]);
        }
        let image = phase_fixed_q(&(r * vv.columns(0, k) * inv_sigma));
        let mut u = &image * basis_l.adjoint();
        let comp_l = orthonormal_complement(&basis_l);
        let comp_r = orthonormal_complement(&image);
        if comp_l.ncols() > 0 {
            u += comp_r * comp_l.adjoint();
        }
        u
    };

    let unit = op_norm(&(u.adjoint() * &u - DMatrix::<T>::identity(s, s)));
    if unit > tol.identity_atol {
        return Err(Error::Postcondition {
            stage: "unitary completion (unitarity)".into(),
            residual: unit,
            threshold: tol.identity_atol,
        });
    }
    let fit = op_norm(&(&u * l - r));
    let fit_tol = tol.identity_atol * l_norm.max(1.0);
    if fit > fit_tol {
        return Err(Error::Postcondition {
            stage: "unitary completion (U L = R)".into(),
            residual: fit,
            threshold: fit_tol,
        });
    }
    Ok(u)
}

/// Unitary `U` with `U L = R` for a Gram-matched pair `L* L = R* R`.
///
/// With `hermitian_wanted`, the cross-Gram `L* R` must also be Hermitian and
/// the result satisfies `U = U*`. Output is a deterministic function of the input.
pub fn unitary_completion(l: &CMatrix, r: &CMatrix, hermitian_wanted: bool, tol: &Tolerances) -> Result<CMatrix> {
    unitary_completion_generic(l, r, hermitian_wanted, tol)
}

/// Real orthogonal variant of [`unitary_completion`].
pub fn orthogonal_completion(
    l: &DMatrix<f64>,
    r: &DMatrix<f64>,
    symmetric_wanted: bool,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    unitary_completion_generic(l, r, symmetric_wanted, tol)
}

/// Result of splitting a unitary matrix into an eigenspace and its complement.
#[derive(Debug, Clone)]
pub struct EigenSplit {
    /// Orthonormal basis of the eigenspace.
    pub inside: CMatrix,
    /// Orthonormal basis of the orthogonal complement (invariant for normal matrices).
    pub outside: CMatrix,
    /// Smallest angular distance to the target among eigenvalues left outside.
    pub outside_min_angle: f64,
}

/// Splits `C^m` into the eigenspace of unitary `W` for unimodular `lambda` and its complement.
///
/// For normal `W` the singular values of `W - lambda I` are exactly the
/// distances `|mu - lambda|` of its eigenvalues, so the clustering is read
/// off that SVD.
pub fn unitary_eigensplit(w: &CMatrix, lambda: Complex64, angle_tol: f64, tol: &Tolerances) -> Result<EigenSplit> {
    check_square(w, "eigenspace_of_unitary")?;
    if (lambda.norm() - 1.0).abs() > tol.identity_atol {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue target must be unimodular, |lambda| = {}",
            lambda.norm()
        )));
    }
    let m = w.nrows();
    let unit = op_norm(&(w.adjoint() * w - identity(m)));
    if unit > tol.identity_atol {
        return Err(Error::NotUnitary { residual: unit });
    }
    if m == 0 {
        return Ok(EigenSplit {
            inside: zeros(0, 0),
            outside: zeros(0, 0),
            outside_min_angle: f64::INFINITY,
        });
    }
    let shifted = w - identity(m) * lambda;
    let (_, sv, v) = sorted_svd(&shifted);
    let angle = |s: f64| 2.0 * (s / 2.0).min(1.0).asin();
    let outside_count = sv.iter().take_while(|&&s| angle(s) > angle_tol).count();
    let outside = v.columns(0, outside_count).into_owned();
    let inside = v.columns(outside_count, m - outside_count).into_owned();
    let outside_min_angle = if outside_count > 0 {
        angle(sv[outside_count - 1])
    } else {
        f64::INFINITY
    };
    Ok(EigenSplit {
        inside,
        outside,
        outside_min_angle,
    })
}

/// Orthonormal basis of the eigenspace of unitary `W` for `lambda`.
pub fn eigenspace_of_unitary(w: &CMatrix, lambda: Complex64, tol: &Tolerances) -> Result<CMatrix> {
    Ok(unitary_eigensplit(w, lambda, EIGEN_ANGLE_TOL, tol)?.inside)
}
