//! Cayley maps between the polydisk and the right poly-halfplane, on
//! variables, on values, and on commuting operator tuples.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{c, identity, inverse, min_eigenvalue, op_norm, CMatrix, Tolerances};
use crate::polyalg::{Domain, FunctionHandle, Point};

/// Points this close to a Cayley pole are rejected.
pub const POLE_RADIUS: f64 = 1e-14;

/// `z_k = (1 + ζ_k) / (1 - ζ_k)`.
pub fn disk_to_halfplane(zeta: &[Complex64]) -> Result<Point> {
    zeta.iter()
        .enumerate()
        .map(|(k, &w)| {
            let den = c(1.0, 0.0) - w;
            if den.norm() <= POLE_RADIUS {
                Err(Error::CayleySingular { index: k })
            } else {
                Ok((c(1.0, 0.0) + w) / den)
            }
        })
        .collect()
}

/// `ζ_k = (z_k - 1) / (z_k + 1)`.
pub fn halfplane_to_disk(z: &[Complex64]) -> Result<Point> {
    z.iter()
        .enumerate()
        .map(|(k, &w)| {
            let den = w + c(1.0, 0.0);
            if den.norm() <= POLE_RADIUS {
                Err(Error::CayleySingular { index: k })
            } else {
                Ok((w - c(1.0, 0.0)) / den)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueDirection {
    HerglotzToSchur,
    SchurToHerglotz,
}

/// Value Cayley transform: `(M - I)(M + I)^{-1}` or its inverse `(I - M)^{-1}(I + M)`.
pub fn value_cayley(m: &CMatrix, direction: ValueDirection) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("value Cayley needs a square matrix".into()));
    }
    let i = identity(m.nrows());
    match direction {
        ValueDirection::HerglotzToSchur => Ok((m - &i) * inverse(&(m + &i))?),
        ValueDirection::SchurToHerglotz => Ok(inverse(&(&i - m))? * (&i + m)),
    }
}

/// A commuting `d`-tuple of equally sized square matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleOfMatrices {
    mats: Vec<CMatrix>,
    commutation_tol: f64,
}

impl TupleOfMatrices {
    pub fn new(mats: Vec<CMatrix>, commutation_tol: f64) -> Result<Self> {
        let s = mats.first().map(|m| m.nrows()).unwrap_or(0);
        for m in &mats {
            if m.shape() != (s, s) {
                return Err(Error::DimensionMismatch(
                    "tuple entries must share a square size".into(),
                ));
            }
        }
        let t = TupleOfMatrices { mats, commutation_tol };
        let residual = t.commutation_residual();
        if residual > commutation_tol {
            return Err(Error::CommutationViolated { residual });
        }
        Ok(t)
    }

    /// Largest relative commutator `‖T_i T_j - T_j T_i‖ / max(1, ‖T_i‖‖T_j‖)`.
    pub fn commutation_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.mats.len() {
            for j in (i + 1)..self.mats.len() {
                let (a, b) = (&self.mats[i], &self.mats[j]);
                let comm = op_norm(&(a * b - b * a));
                let scale = (op_norm(a) * op_norm(b)).max(1.0);
                worst = worst.max(comm / scale);
            }
        }
        worst
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.mats
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    /// Common size of the matrices.
    pub fn size(&self) -> usize {
        self.mats.first().map(|m| m.nrows()).unwrap_or(0)
    }

    pub fn commutation_tol(&self) -> f64 {
        self.commutation_tol
    }

    /// Each entry is a strict contraction with norm below `1 - 1e-10`.
    pub fn check_strict_contraction(&self) -> Result<()> {
        for (k, t) in self.mats.iter().enumerate() {
            let norm = op_norm(t);
            if !(norm < 1.0 - 1e-10) {
                return Err(Error::NotStrictContraction { index: k, norm });
            }
        }
        Ok(())
    }

    /// Each `R_k + R_k^*` is positive definite beyond the PSD slack.
    pub fn check_strictly_accretive(&self, tol: &Tolerances) -> Result<()> {
        for (k, r) in self.mats.iter().enumerate() {
            let min_eig = min_eigenvalue(&(r + r.adjoint()));
            if !(min_eig > tol.psd_atol) {
                return Err(Error::NotStrictlyAccretive { index: k, min_eig });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TupleDirection {
    ContractiveToAccretive,
    AccretiveToContractive,
}

/// Operator Cayley transform applied to each entry of a commuting tuple.
pub fn operator_cayley_tuple(
    t: &TupleOfMatrices,
    direction: TupleDirection,
    tol: &Tolerances,
) -> Result<TupleOfMatrices> {
    let s = t.size();
    let i = identity(s);
    let mats = match direction {
        TupleDirection::ContractiveToAccretive => {
            t.check_strict_contraction()?;
            t.mats
                .iter()
                .map(|m| Ok(inverse(&(&i - m))? * (&i + m)))
                .collect::<Result<Vec<_>>>()?
        }
        TupleDirection::AccretiveToContractive => {
            t.check_strictly_accretive(tol)?;
            t.mats
                .iter()
                .map(|m| Ok((m - &i) * inverse(&(m + &i))?))
                .collect::<Result<Vec<_>>>()?
        }
    };
    // Cayley images are rational functions of commuting matrices; rounding may
    // only loosen the commutator slightly.
    TupleOfMatrices::new(mats, t.commutation_tol.max(tol.identity_atol))
}

/// `F(ζ) = f(C(ζ))`: pulls a halfplane function back to the polydisk.
pub fn compose_disk(f: &FunctionHandle) -> FunctionHandle {
    let f = f.clone();
    FunctionHandle::new(f.d(), f.rows(), f.cols(), Domain::Polydisk, move |zeta| {
        f.eval(&disk_to_halfplane(zeta)?)
    })
}

/// `f(z) = F(C^{-1}(z))`: pushes a polydisk function to the halfplane.
pub fn compose_halfplane(f: &FunctionHandle) -> FunctionHandle {
    let f = f.clone();
    FunctionHandle::new(f.d(), f.rows(), f.cols(), Domain::Polyhalfplane, move |z| {
        f.eval(&halfplane_to_disk(z)?)
    })
}

/// Double Cayley transform `𝓕(ζ) = (f(Cζ) - I)(f(Cζ) + I)^{-1}`.
pub fn double_cayley(f: &FunctionHandle) -> Result<FunctionHandle> {
    if f.rows() != f.cols() {
        return Err(Error::DimensionMismatch("double Cayley needs square values".into()));
    }
    let f = f.clone();
    Ok(FunctionHandle::new(
        f.d(),
        f.rows(),
        f.cols(),
        Domain::Polydisk,
        move |zeta| {
            let v = f.eval(&disk_to_halfplane(zeta)?)?;
            value_cayley(&v, ValueDirection::HerglotzToSchur).map_err(|e| match e {
                Error::SingularShift { .. } => Error::EvaluationSingular { point: zeta.to_vec() },
                other => other,
            })
        },
    ))
}

/// Pointwise value Cayley transform of a handle.
pub fn value_cayley_handle(f: &FunctionHandle, direction: ValueDirection) -> Result<FunctionHandle> {
    if f.rows() != f.cols() {
        return Err(Error::DimensionMismatch("value Cayley needs square values".into()));
    }
    let f = f.clone();
    Ok(FunctionHandle::new(f.d(), f.rows(), f.cols(), f.domain(), move |z| {
        value_cayley(&f.eval(z)?, direction).map_err(|e| match e {
            Error::SingularShift { .. } => Error::EvaluationSingular { point: z.to_vec() },
            other => other,
        })
    }))
}
