//! Sample plans, reports, and sampled property checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bessmertnyi::{LongResolventPencil, PencilClass};
use crate::cayley::{disk_to_halfplane, TupleOfMatrices};
use crate::error::{Error, Result};
use crate::herglotz::HerglotzRealization;
use crate::numerics::{c, identity, min_eigenvalue, op_norm, skew_part, zeros, CMatrix, Tolerances};
use crate::polyalg::{FunctionHandle, Point};
use crate::realization::{GivoneRoesserRealization, StructureFlags};

/// Scalars used along scaling rays.
pub const SCALING_FACTORS: [Complex64; 4] = [
    Complex64::new(2.0, 0.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(0.5, 0.5),
];

/// Root-of-unity orders of the two torus grids.
pub const TORUS_ORDERS: [usize; 2] = [8, 13];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanDomain {
    Polydisk,
    Polyhalfplane,
    Torus,
    ConjugationPairs,
    ScalingRays,
}

/// Deterministic recipe for a list of sample points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub domain: PlanDomain,
    pub seed: u64,
    pub count: usize,
    /// Largest coordinate modulus of the underlying polydisk draw.
    pub radius: f64,
}

impl SamplePlan {
    pub fn new(domain: PlanDomain, seed: u64, count: usize) -> Self {
        SamplePlan {
            domain,
            seed,
            count,
            radius: 0.9,
        }
    }

    pub fn polydisk(seed: u64, count: usize) -> Self {
        Self::new(PlanDomain::Polydisk, seed, count)
    }

    pub fn polyhalfplane(seed: u64, count: usize) -> Self {
        Self::new(PlanDomain::Polyhalfplane, seed, count)
    }

    pub fn torus(seed: u64, count: usize) -> Self {
        Self::new(PlanDomain::Torus, seed, count)
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    /// Same parameters on another seed stream.
    pub fn reseeded(&self, salt: u64) -> Self {
        let mut p = *self;
        p.seed = self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt);
        p
    }

    /// Expands the plan into points of `C^d`.
    pub fn points(&self, d: usize) -> Vec<Point> {
        match self.domain {
            PlanDomain::Polydisk => disk_points(self.seed, self.count, d, self.radius),
            PlanDomain::Polyhalfplane | PlanDomain::ConjugationPairs | PlanDomain::ScalingRays => {
                disk_points(self.seed, self.count, d, self.radius)
                    .into_iter()
                    .map(|p| disk_to_halfplane(&p).expect("radius below 1 avoids the pole"))
                    .collect()
            }
            PlanDomain::Torus => torus_points(self.seed, self.count, d),
        }
    }

    /// Two independent point streams zipped into pairs.
    pub fn pairs(&self, d: usize) -> Vec<(Point, Point)> {
        let first = self.points(d);
        let second = self.reseeded(1).points(d);
        first.into_iter().zip(second).collect()
    }
}

fn disk_points(seed: u64, count: usize, d: usize, radius: f64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let r = radius * rng.random::<f64>().sqrt();
                    let t = 2.0 * PI * rng.random::<f64>();
                    Complex64::from_polar(r, t)
                })
                .collect()
        })
        .collect()
}

/// Union of two rotated product grids of roots of unity; when the union is
/// larger than `count` (and `count > 0`) an evenly spaced subset is kept.
fn torus_points(seed: u64, count: usize, d: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::new();
    for &order in &TORUS_ORDERS {
        let phase = 2.0 * PI * rng.random::<f64>();
        let total = order.pow(d as u32);
        for mut idx in 0..total {
            let mut p = Vec::with_capacity(d);
            for _ in 0..d {
                let j = idx % order;
                idx /= order;
                p.push(Complex64::from_polar(1.0, phase + 2.0 * PI * j as f64 / order as f64));
            }
            all.push(p);
        }
    }
    if count == 0 || all.len() <= count {
        return all;
    }
    let n = all.len();
    (0..count).map(|i| all[i * n / count].clone()).collect()
}

/// Result of a sampled check.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleReport {
    pub name: String,
    pub samples: usize,
    pub skipped: usize,
    pub max_residual: f64,
    pub threshold: f64,
    pub verdict: bool,
    /// Sample attaining the maximum residual (pairs are concatenated).
    pub witness: Vec<Complex64>,
}

impl SampleReport {
    /// Report for a single scalar quantity.
    pub fn scalar(name: &str, residual: f64, threshold: f64) -> Self {
        SampleReport {
            name: name.into(),
            samples: 1,
            skipped: 0,
            max_residual: residual,
            threshold,
            verdict: residual <= threshold,
            witness: vec![],
        }
    }
}

/// Running maximum over samples; singular evaluations are skipped and counted.
#[derive(Debug, Clone)]
pub struct Accumulator {
    name: String,
    threshold: f64,
    samples: usize,
    skipped: usize,
    max: f64,
    witness: Vec<Complex64>,
}

impl Accumulator {
    pub fn new(name: &str, threshold: f64) -> Self {
        Accumulator {
            name: name.into(),
            threshold,
            samples: 0,
            skipped: 0,
            max: 0.0,
            witness: vec![],
        }
    }

    pub fn record(&mut self, point: &[Complex64], residual: Result<f64>) -> Result<()> {
        match residual {
            Ok(r) => {
                let worse = r > self.max || (r.is_nan() && !self.max.is_nan());
                if self.samples == 0 || worse {
                    self.max = r;
                    self.witness = point.to_vec();
                }
                self.samples += 1;
                Ok(())
            }
            Err(e) if e.is_singular_evaluation() => {
                self.skipped += 1;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    pub fn report(self) -> SampleReport {
        SampleReport {
            verdict: self.max <= self.threshold,
            name: self.name,
            samples: self.samples,
            skipped: self.skipped,
            max_residual: self.max,
            threshold: self.threshold,
            witness: self.witness,
        }
    }

    /// Like [`Accumulator::report`] but fails when every sample was singular.
    pub fn finish(self) -> Result<SampleReport> {
        if self.samples == 0 {
            return Err(Error::InsufficientSamples {
                regular: 0,
                total: self.skipped,
            });
        }
        Ok(self.report())
    }
}

fn concat(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().chain(b).copied().collect()
}

/// `max ‖f(z) + f(-z̄)*‖` over the plan.
pub fn check_cayley_inner(f: &FunctionHandle, plan: &SamplePlan, tol: &Tolerances) -> Result<SampleReport> {
    let mut acc = Accumulator::new("cayley_inner", tol.identity_atol);
    for z in plan.points(f.d()) {
        let mirror: Point = z.iter().map(|w| -w.conj()).collect();
        let r = f.eval(&z).and_then(|a| Ok(op_norm(&(a + f.eval(&mirror)?.adjoint()))));
        acc.record(&z, r)?;
    }
    acc.finish()
}

/// `max ‖f(λz) - λ f(z)‖` over the plan and [`SCALING_FACTORS`].
pub fn check_homogeneous(f: &FunctionHandle, plan: &SamplePlan, tol: &Tolerances) -> Result<SampleReport> {
    let mut acc = Accumulator::new("homogeneous", tol.identity_atol);
    for z in plan.points(f.d()) {
        for &lambda in &SCALING_FACTORS {
            let scaled: Point = z.iter().map(|w| w * lambda).collect();
            let r = f.eval(&z).and_then(|a| Ok(op_norm(&(f.eval(&scaled)? - a * lambda))));
            acc.record(&concat(&[lambda], &z), r)?;
        }
    }
    acc.finish()
}

/// `max ‖f(z̄) - conj f(z)‖` over the plan.
pub fn check_real(f: &FunctionHandle, plan: &SamplePlan, tol: &Tolerances) -> Result<SampleReport> {
    let mut acc = Accumulator::new("real", tol.identity_atol);
    for z in plan.points(f.d()) {
        let zbar: Point = z.iter().map(|w| w.conj()).collect();
        let r = f
            .eval(&z)
            .and_then(|a| Ok(op_norm(&(f.eval(&zbar)? - a.map(|x| x.conj())))));
        acc.record(&z, r)?;
    }
    acc.finish()
}

/// Negative part of the smallest eigenvalue of `Re f(z)` over the plan.
pub fn check_real_part_positivity(f: &FunctionHandle, plan: &SamplePlan, tol: &Tolerances) -> Result<SampleReport> {
    let mut acc = Accumulator::new("herglotz_positivity", tol.identity_atol);
    for z in plan.points(f.d()) {
        let r = f.eval(&z).map(|a| (-min_eigenvalue(&a)).max(0.0));
        acc.record(&z, r)?;
    }
    acc.finish()
}

/// Block Gram matrix `[K(λ_i, λ_j)]` and its smallest eigenvalue.
///
/// Residual is the negative part of the minimum eigenvalue; the threshold
/// scales with the Gram norm.
pub fn check_positive_kernel<K>(kernel: K, points: &[Point], tol: &Tolerances) -> Result<SampleReport>
where
    K: Fn(&[Complex64], &[Complex64]) -> Result<CMatrix>,
{
    let mut blocks: Vec<Vec<CMatrix>> = Vec::with_capacity(points.len());
    for wi in points {
        let mut row = Vec::with_capacity(points.len());
        for zj in points {
            row.push(kernel(wi, zj)?);
        }
        blocks.push(row);
    }
    let size = blocks.first().and_then(|r| r.first()).map(|b| b.nrows()).unwrap_or(0);
    let total = size * points.len();
    let mut g = zeros(total, total);
    for (i, row) in blocks.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            if b.shape() != (size, size) {
                return Err(Error::DimensionMismatch(
                    "kernel values must be square and equal-sized".into(),
                ));
            }
            g.view_mut((i * size, j * size), (size, size)).copy_from(b);
        }
    }
    let min_eig = if total == 0 { 0.0 } else { min_eigenvalue(&g) };
    let threshold = tol.psd_atol * op_norm(&g).max(1.0);
    let residual = (-min_eig).max(0.0);
    let mut report = SampleReport::scalar("positive_kernel", residual, threshold);
    report.samples = points.len();
    Ok(report)
}

/// Random complex matrix with standard normal entries.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    use rand_distr::{Distribution, StandardNormal};
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Random real matrix with standard normal entries, stored as complex.
pub fn random_real_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    use rand_distr::{Distribution, StandardNormal};
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        c(re, 0.0)
    })
}

/// Kinds of seeded instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    PencilNonhomogeneous,
    PencilHomogeneous,
    PencilReal,
    HerglotzRealization,
    GrUnitary,
    CommutingContractions,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 6] = [
        InstanceKind::PencilNonhomogeneous,
        InstanceKind::PencilHomogeneous,
        InstanceKind::PencilReal,
        InstanceKind::HerglotzRealization,
        InstanceKind::GrUnitary,
        InstanceKind::CommutingContractions,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InstanceKind::PencilNonhomogeneous => "pencil_nonhomogeneous",
            InstanceKind::PencilHomogeneous => "pencil_homogeneous",
            InstanceKind::PencilReal => "pencil_real",
            InstanceKind::HerglotzRealization => "herglotz_realization",
            InstanceKind::GrUnitary => "gr_unitary",
            InstanceKind::CommutingContractions => "commuting_contractions",
        }
    }
}

impl std::str::FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown instance kind {s:?}")))
    }
}

/// Sizes for `gen_instance`: `n` output size, `m` state or inner size, `s` tuple size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDims {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub s: usize,
}

impl Default for InstanceDims {
    fn default() -> Self {
        InstanceDims { d: 2, n: 1, m: 1, s: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Pencil(LongResolventPencil),
    Herglotz(HerglotzRealization),
    Gr(GivoneRoesserRealization),
    Tuple(TupleOfMatrices),
}

/// Bound on the norm of generated contractions.
pub const CONTRACTION_BOUND: f64 = 0.9;

fn random_unitary(rng: &mut ChaCha8Rng, size: usize, real: bool) -> CMatrix {
    let g = if real {
        random_real_matrix(rng, size, size)
    } else {
        random_matrix(rng, size, size)
    };
    let qr = g.qr();
    // Fix the phases so the factorization is unique.
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..size {
        let x = r[(j, j)];
        if x.norm() > 0.0 {
            let phase = x / x.norm();
            let col = q.column(j) * phase;
            q.set_column(j, &col);
        }
    }
    q
}

/// Sizes `m_k` summing to `m`, as even as possible.
fn spread(m: usize, d: usize) -> Vec<usize> {
    (0..d).map(|k| m / d + usize::from(k < m % d)).collect()
}

fn gen_pencil(
    rng: &mut ChaCha8Rng,
    dims: InstanceDims,
    class: PencilClass,
    tol: &Tolerances,
) -> Result<LongResolventPencil> {
    let real = class == PencilClass::RealHomogeneous;
    let size = dims.n + dims.m;
    let draw = |rng: &mut ChaCha8Rng, r: usize, c: usize| {
        if real {
            random_real_matrix(rng, r, c)
        } else {
            random_matrix(rng, r, c)
        }
    };
    let a0 = if class.is_homogeneous() {
        zeros(size, size)
    } else {
        skew_part(&draw(rng, size, size))
    };
    let mut coeffs = vec![a0];
    for k in 0..dims.d {
        // A_1 has full rank so that A22(z) stays invertible on the halfplane.
        let rows = if k == 0 { size } else { rng.random_range(1..=size) };
        let g = draw(rng, rows, size) * c(1.0 / (rows as f64).sqrt(), 0.0);
        coeffs.push(g.adjoint() * g);
    }
    LongResolventPencil::new(dims.n, dims.m, coeffs, class, tol)
}

/// Deterministic seeded instance of the given kind.
pub fn gen_instance(kind: InstanceKind, seed: u64, dims: InstanceDims, tol: &Tolerances) -> Result<Instance> {
    if dims.d == 0 || dims.n == 0 {
        return Err(Error::InvalidArgument("d and n must be positive".into()));
    }
    if kind == InstanceKind::CommutingContractions && dims.s == 0 {
        return Err(Error::InvalidArgument("tuple size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match kind {
        InstanceKind::PencilNonhomogeneous => {
            Instance::Pencil(gen_pencil(&mut rng, dims, PencilClass::Nonhomogeneous, tol)?)
        }
        InstanceKind::PencilHomogeneous => Instance::Pencil(gen_pencil(&mut rng, dims, PencilClass::Homogeneous, tol)?),
        InstanceKind::PencilReal => Instance::Pencil(gen_pencil(&mut rng, dims, PencilClass::RealHomogeneous, tol)?),
        InstanceKind::HerglotzRealization => {
            let beta = skew_part(&random_matrix(&mut rng, dims.n, dims.n));
            let w = random_unitary(&mut rng, dims.m, false);
            let v = random_matrix(&mut rng, dims.m, dims.n);
            Instance::Herglotz(HerglotzRealization::new(spread(dims.m, dims.d), beta, w, v, tol)?)
        }
        InstanceKind::GrUnitary => {
            let u = random_unitary(&mut rng, dims.m + dims.n, false);
            let flags = StructureFlags {
                unitary: true,
                hermitian: false,
                real: false,
            };
            Instance::Gr(GivoneRoesserRealization::new(
                dims.n,
                spread(dims.m, dims.d),
                u,
                flags,
                tol,
            )?)
        }
        InstanceKind::CommutingContractions => {
            let s = dims.s;
            let base = random_matrix(&mut rng, s, s) * c(1.0 / (s as f64).sqrt(), 0.0);
            let base2 = &base * &base;
            let mats = (0..dims.d)
                .map(|_| {
                    let coef = random_matrix(&mut rng, 1, 3);
                    let t = identity(s) * coef[0] + &base * coef[1] + &base2 * coef[2];
                    let norm = op_norm(&t);
                    let target = CONTRACTION_BOUND * rng.random_range(0.2..1.0);
                    if norm > 0.0 {
                        t * c(target / norm, 0.0)
                    } else {
                        t
                    }
                })
                .collect();
            Instance::Tuple(TupleOfMatrices::new(mats, 1e-12)?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::identity;
    use crate::polyalg::Domain;

    fn scalar_fn(d: usize, f: impl Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static) -> FunctionHandle {
        FunctionHandle::new(d, 1, 1, Domain::Polyhalfplane, move |z| {
            let mut m = zeros(1, 1);
            m[(0, 0)] = f(z);
            Ok(m)
        })
    }

    fn parallel() -> FunctionHandle {
        scalar_fn(2, |z| z[0] * z[1] / (z[0] + z[1]))
    }

    #[test]
    fn plans_are_deterministic() {
        let p = SamplePlan::polydisk(3, 10);
        assert_eq!(p.points(2), p.points(2));
        assert!(p.points(2).iter().flatten().all(|w| w.norm() <= 0.9));
        let h = SamplePlan::polyhalfplane(3, 10).points(3);
        assert!(h.iter().flatten().all(|w| w.re > 0.0));
        let t = SamplePlan::torus(1, 0).points(2);
        assert_eq!(t.len(), 64 + 169);
        assert!(t.iter().flatten().all(|w| (w.norm() - 1.0).abs() < 1e-15));
        assert_eq!(SamplePlan::torus(1, 200).points(2).len(), 200);
    }

    #[test]
    fn cayley_inner_examples() {
        let tol = Tolerances::default();
        let plan = SamplePlan::new(PlanDomain::ConjugationPairs, 1, 50);
        assert_eq!(
            check_cayley_inner(&scalar_fn(1, |z| z[0]), &plan, &tol)
                .unwrap()
                .max_residual,
            0.0
        );
        let r = check_cayley_inner(&scalar_fn(1, |z| z[0] + 1.0), &plan, &tol).unwrap();
        assert!((r.max_residual - 2.0).abs() < 1e-12 && !r.verdict);
        let r = check_cayley_inner(&parallel(), &plan, &tol).unwrap();
        assert!(r.max_residual <= 1e-10 && r.verdict);
    }

    #[test]
    fn homogeneity_examples() {
        let tol = Tolerances::default();
        let plan = SamplePlan::new(PlanDomain::ScalingRays, 2, 30);
        assert!(check_homogeneous(&parallel(), &plan, &tol).unwrap().max_residual <= 1e-12);
        assert!(
            !check_homogeneous(&scalar_fn(2, |z| z[0] + 1.0), &plan, &tol)
                .unwrap()
                .verdict
        );
        let r = check_homogeneous(&scalar_fn(1, |z| z[0] + c(0.0, 1.0)), &plan, &tol).unwrap();
        // defect is |1 - λ| for the worst λ = -1
        assert!((r.max_residual - 2.0).abs() < 1e-12);
    }

    #[test]
    fn realness_examples() {
        let tol = Tolerances::default();
        let plan = SamplePlan::new(PlanDomain::ConjugationPairs, 4, 30);
        assert!(
            check_real(&scalar_fn(2, |z| (z[0] * 3.0 + 1.0) / (z[1] + 2.0)), &plan, &tol)
                .unwrap()
                .max_residual
                <= 1e-12
        );
        assert!(
            !check_real(&scalar_fn(1, |z| z[0] * c(0.0, 1.0)), &plan, &tol)
                .unwrap()
                .verdict
        );
        assert!(check_real(&parallel(), &plan, &tol).unwrap().verdict);
    }

    #[test]
    fn positive_kernel_examples() {
        let tol = Tolerances::default();
        let pts = SamplePlan::polydisk(5, 5).points(1);
        let r = check_positive_kernel(|_, _| Ok(identity(2)), &pts, &tol).unwrap();
        assert!(r.verdict);
        let theta = |z: &[Complex64]| CMatrix::from_fn(2, 1, |i, _| z[0].powu(i as u32 + 1) + 0.3);
        let r = check_positive_kernel(|w, z| Ok(theta(w).adjoint() * theta(z)), &pts, &tol).unwrap();
        assert!(r.verdict);
        let szego = |w: &[Complex64], z: &[Complex64]| {
            let mut m = zeros(1, 1);
            m[(0, 0)] = 1.0 / (1.0 - w[0].conj() * z[0]);
            Ok(m)
        };
        let r = check_positive_kernel(szego, &pts, &tol).unwrap();
        assert!(r.verdict);
        let r = check_positive_kernel(|_, _| Ok(identity(1) * c(-1.0, 0.0)), &pts[..1], &tol).unwrap();
        assert!(!r.verdict);
    }

    #[test]
    fn all_singular_is_insufficient() {
        let tol = Tolerances::default();
        let f = FunctionHandle::new(1, 1, 1, Domain::Polyhalfplane, |z| {
            Err(Error::EvaluationSingular { point: z.to_vec() })
        });
        let plan = SamplePlan::new(PlanDomain::ConjugationPairs, 1, 4);
        assert!(matches!(
            check_cayley_inner(&f, &plan, &tol),
            Err(Error::InsufficientSamples { regular: 0, total: 4 })
        ));
    }

    #[test]
    fn generator_examples() {
        let tol = Tolerances::default();
        let dims = InstanceDims { d: 2, n: 1, m: 1, s: 2 };
        let Instance::Pencil(p) = gen_instance(InstanceKind::PencilHomogeneous, 7, dims, &tol).unwrap() else {
            panic!("expected a pencil")
        };
        assert_eq!(p.class(), PencilClass::Homogeneous);
        assert_eq!(
            gen_instance(InstanceKind::PencilHomogeneous, 7, dims, &tol).unwrap(),
            Instance::Pencil(p)
        );

        for seed in 0..20 {
            let dims = InstanceDims { d: 3, n: 2, m: 3, s: 4 };
            let Instance::Gr(g) = gen_instance(InstanceKind::GrUnitary, seed, dims, &tol).unwrap() else {
                panic!("expected a realization")
            };
            assert!(g.unitarity_residual() <= 1e-12);
            let Instance::Tuple(t) = gen_instance(InstanceKind::CommutingContractions, seed, dims, &tol).unwrap()
            else {
                panic!("expected a tuple")
            };
            assert!(t.commutation_residual() <= 1e-12);
            assert!(t.matrices().iter().all(|m| op_norm(m) <= CONTRACTION_BOUND + 1e-12));
        }
    }

    #[test]
    fn generator_rejects_empty_dims() {
        let dims = InstanceDims { d: 0, n: 1, m: 1, s: 1 };
        assert!(gen_instance(InstanceKind::GrUnitary, 0, dims, &Tolerances::default()).is_err());
        assert_eq!("gr_unitary".parse::<InstanceKind>().unwrap(), InstanceKind::GrUnitary);
    }
}
