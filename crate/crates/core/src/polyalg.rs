//! Multivariate polynomials with matrix coefficients and opaque function
//! handles for the rational functions that are never stored as fractions.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{c, zeros, CMatrix};

/// A point of `C^d`.
pub type Point = Vec<Complex64>;

/// Exponent vector of a monomial. Ordered graded-lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// The exponent of the `k`-th unit vector.
    pub fn unit(d: usize, k: usize) -> Self {
        let mut e = vec![0; d];
        e[k] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `z^alpha`.
    pub fn monomial(&self, z: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(z)
            .fold(c(1.0, 0.0), |acc, (&e, &zi)| acc * zi.powu(e))
    }

    /// All multi-indices in `d` variables with total degree at most `max_degree`,
    /// in graded lexicographic order.
    pub fn up_to_degree(d: usize, max_degree: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for deg in 0..=max_degree {
            let mut level = Vec::new();
            compositions(d, deg, &mut vec![0; d], 0, &mut level);
            level.sort();
            out.extend(level);
        }
        out
    }
}

fn compositions(d: usize, remaining: usize, cur: &mut Vec<u32>, pos: usize, out: &mut Vec<MultiIndex>) {
    if d == 0 {
        if remaining == 0 {
            out.push(MultiIndex(vec![]));
        }
        return;
    }
    if pos == d - 1 {
        cur[pos] = remaining as u32;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e as u32;
        compositions(d, remaining - e, cur, pos + 1, out);
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            // within a degree, larger leading exponents come first
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial in `d` variables with `rows x cols` complex matrix coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    d: usize,
    rows: usize,
    cols: usize,
    terms: BTreeMap<MultiIndex, CMatrix>,
}

impl MatrixPolynomial {
    pub fn zero(d: usize, rows: usize, cols: usize) -> Self {
        MatrixPolynomial {
            d,
            rows,
            cols,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, m: CMatrix) -> Self {
        let mut p = Self::zero(d, m.nrows(), m.ncols());
        p.insert(MultiIndex::zero(d), m);
        p
    }

    /// Scalar (1x1) polynomial from `(coefficient, exponents)` pairs.
    pub fn scalar(d: usize, terms: &[(Complex64, &[u32])]) -> Result<Self> {
        let mut p = Self::zero(d, 1, 1);
        for (coef, exps) in terms {
            let mut m = zeros(1, 1);
            m[(0, 0)] = *coef;
            p.add_term(MultiIndex::new(exps.to_vec()), m)?;
        }
        Ok(p)
    }

    pub fn from_terms(d: usize, rows: usize, cols: usize, terms: Vec<(MultiIndex, CMatrix)>) -> Result<Self> {
        let mut p = Self::zero(d, rows, cols);
        for (idx, m) in terms {
            p.add_term(idx, m)?;
        }
        Ok(p)
    }

    /// Adds `m * z^idx`, merging with an existing term.
    pub fn add_term(&mut self, idx: MultiIndex, m: CMatrix) -> Result<()> {
        if idx.dim() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "multi-index has {} variables, polynomial has {}",
                idx.dim(),
                self.d
            )));
        }
        if m.shape() != (self.rows, self.cols) {
            return Err(Error::DimensionMismatch(format!(
                "coefficient is {:?}, polynomial is {}x{}",
                m.shape(),
                self.rows,
                self.cols
            )));
        }
        let merged = match self.terms.remove(&idx) {
            Some(prev) => prev + m,
            None => m,
        };
        self.insert(idx, merged);
        Ok(())
    }

    fn insert(&mut self, idx: MultiIndex, m: CMatrix) {
        if m.iter().any(|z| *z != c(0.0, 0.0)) {
            self.terms.insert(idx, m);
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Terms in graded lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &CMatrix)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, idx: &MultiIndex) -> Option<&CMatrix> {
        self.terms.get(idx)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree of a stored term; zero for the zero polynomial.
    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(MultiIndex::total_degree).max().unwrap_or(0)
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<CMatrix> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, polynomial has {} variables",
                z.len(),
                self.d
            )));
        }
        let mut out = zeros(self.rows, self.cols);
        for (idx, m) in &self.terms {
            out += m * idx.monomial(z);
        }
        Ok(out)
    }

    /// Entrywise conjugation of the coefficients, so that `p#(z) = conj(p(conj z))`.
    pub fn sharp(&self) -> Self {
        MatrixPolynomial {
            d: self.d,
            rows: self.rows,
            cols: self.cols,
            terms: self
                .terms
                .iter()
                .map(|(k, m)| (k.clone(), m.map(|x| x.conj())))
                .collect(),
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.d != other.d || self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "polynomial shapes differ: (d={}, {}x{}) vs (d={}, {}x{})",
                self.d, self.rows, self.cols, other.d, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (idx, m) in &other.terms {
            out.add_term(idx.clone(), m.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.d, self.rows, self.cols);
        for (idx, m) in &self.terms {
            out.insert(idx.clone(), m * s);
        }
        out
    }

    /// Matrix product `self * other` of polynomials.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.d != other.d || self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply (d={}, {}x{}) by (d={}, {}x{})",
                self.d, self.rows, self.cols, other.d, other.rows, other.cols
            )));
        }
        let mut out = Self::zero(self.d, self.rows, other.cols);
        for (ia, ma) in &self.terms {
            for (ib, mb) in &other.terms {
                out.add_term(ia.add(ib), ma * mb)?;
            }
        }
        Ok(out)
    }

    /// Left multiplication by a constant matrix.
    pub fn left_mul(&self, m: &CMatrix) -> Result<Self> {
        if m.ncols() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} matrix by {}x{} polynomial",
                m.nrows(),
                m.ncols(),
                self.rows,
                self.cols
            )));
        }
        let mut out = Self::zero(self.d, m.nrows(), self.cols);
        for (idx, coef) in &self.terms {
            out.insert(idx.clone(), m * coef);
        }
        Ok(out)
    }

    /// Stacks polynomials with equal column counts vertically.
    pub fn vstack(parts: &[MatrixPolynomial]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("vstack of no polynomials".into()))?;
        let rows: usize = parts.iter().map(|p| p.rows).sum();
        let mut out = Self::zero(first.d, rows, first.cols);
        let mut r0 = 0;
        for p in parts {
            if p.d != first.d || p.cols != first.cols {
                return Err(Error::DimensionMismatch("vstack operands differ".into()));
            }
            for (idx, m) in &p.terms {
                let mut big = zeros(rows, first.cols);
                big.view_mut((r0, 0), (p.rows, p.cols)).copy_from(m);
                out.add_term(idx.clone(), big)?;
            }
            r0 += p.rows;
        }
        Ok(out)
    }

    /// Function handle evaluating this polynomial.
    pub fn to_handle(&self, domain: Domain) -> FunctionHandle {
        let p = self.clone();
        FunctionHandle::new(self.d, self.rows, self.cols, domain, move |z| p.eval(z))
    }
}

/// Arithmetic selector for [`poly_arith`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolyOp {
    Add,
    Sub,
    Matmul,
    Scale(Complex64),
}

/// Dispatches a binary (or scaling) polynomial operation; `b` is ignored for `Scale`.
pub fn poly_arith(a: &MatrixPolynomial, b: &MatrixPolynomial, op: PolyOp) -> Result<MatrixPolynomial> {
    match op {
        PolyOp::Add => a.add(b),
        PolyOp::Sub => a.sub(b),
        PolyOp::Matmul => a.matmul(b),
        PolyOp::Scale(s) => Ok(a.scale(s)),
    }
}

/// Domain on which a handle is meant to be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Polydisk,
    Polyhalfplane,
    Entire,
}

type Evaluator = dyn Fn(&[Complex64]) -> Result<CMatrix> + Send + Sync;

/// Matrix-valued function of `d` complex variables behind a reentrant evaluator.
///
/// Singular evaluations surface as errors carrying the point, never as
/// non-finite entries.
#[derive(Clone)]
pub struct FunctionHandle {
    d: usize,
    rows: usize,
    cols: usize,
    domain: Domain,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionHandle")
            .field("d", &self.d)
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("domain", &self.domain)
            .finish()
    }
}

impl FunctionHandle {
    pub fn new<F>(d: usize, rows: usize, cols: usize, domain: Domain, f: F) -> Self
    where
        F: Fn(&[Complex64]) -> Result<CMatrix> + Send + Sync + 'static,
    {
        FunctionHandle {
            d,
            rows,
            cols,
            domain,
            eval: Arc::new(f),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<CMatrix> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, function has {} variables",
                z.len(),
                self.d
            )));
        }
        let v = (self.eval)(z)?;
        if v.shape() != (self.rows, self.cols) {
            return Err(Error::DimensionMismatch(format!(
                "evaluator returned {:?}, declared {}x{}",
                v.shape(),
                self.rows,
                self.cols
            )));
        }
        if !crate::numerics::all_finite(&v) {
            return Err(Error::EvaluationSingular { point: z.to_vec() });
        }
        Ok(v)
    }

    /// `z -> conj(f(conj z))`.
    pub fn sharp(&self) -> FunctionHandle {
        let f = self.clone();
        FunctionHandle::new(self.d, self.rows, self.cols, self.domain, move |z| {
            let zc: Point = z.iter().map(|x| x.conj()).collect();
            Ok(f.eval(&zc)?.map(|x| x.conj()))
        })
    }

    /// Pointwise `m * f(z)` for a constant matrix `m`.
    pub fn left_mul(&self, m: CMatrix) -> Result<FunctionHandle> {
        if m.ncols() != self.rows {
            return Err(Error::DimensionMismatch("left_mul shape".into()));
        }
        let f = self.clone();
        Ok(FunctionHandle::new(
            self.d,
            m.nrows(),
            self.cols,
            self.domain,
            move |z| Ok(&m * f.eval(z)?),
        ))
    }

    /// Pointwise `f(z) * m` for a constant matrix `m`.
    pub fn right_mul(&self, m: CMatrix) -> Result<FunctionHandle> {
        if m.nrows() != self.cols {
            return Err(Error::DimensionMismatch("right_mul shape".into()));
        }
        let f = self.clone();
        Ok(FunctionHandle::new(
            self.d,
            self.rows,
            m.ncols(),
            self.domain,
            move |z| Ok(f.eval(z)? * &m),
        ))
    }

    pub fn with_domain(&self, domain: Domain) -> FunctionHandle {
        let mut h = self.clone();
        h.domain = domain;
        h
    }
}
