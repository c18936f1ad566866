//! Pencil → decomposition → unitary colligation → Herglotz realization → pencil.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bessmertnyi::{
    check_decomposition, eval_pencil, herglotz_to_pencil, homogeneous_structure_check, normalize_homogeneous,
    normalize_nonhomogeneous, pencil_decomposition, phi_to_theta, realify_decomposition, LongResolventPencil,
    PencilClass, PencilDecomposition,
};
use crate::cayley::{compose_disk, double_cayley, operator_cayley_tuple, TupleDirection, TupleOfMatrices};
use crate::error::{Error, Result};
use crate::herglotz::{check_xi_identity, eval_herglotz, schur_to_herglotz, HerglotzRealization};
use crate::numerics::{c, identity, kron, max_imag, op_norm, solve, zeros, CMatrix, Tolerances};
use crate::polyalg::FunctionHandle;
use crate::realization::{
    check_agler_identity, check_difference_identity, eval_transfer_tuple, lurking_isometry, verify_realization,
    GivoneRoesserRealization,
};
use crate::verify::{Accumulator, SamplePlan, SampleReport};

/// Round-trip comparisons allow this multiple of `identity_atol`.
pub const ROUNDTRIP_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Decomposition,
    Gr,
    Herglotz,
    PencilRoundtrip,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Decomposition => "decomposition",
            Target::Gr => "gr",
            Target::Herglotz => "herglotz",
            Target::PencilRoundtrip => "pencil_roundtrip",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Target::Decomposition,
            Target::Gr,
            Target::Herglotz,
            Target::PencilRoundtrip,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown target {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Force (or forbid) a Hermitian colligation; defaults to the pencil being homogeneous.
    pub hermitian: Option<bool>,
    /// Force (or forbid) a real colligation; defaults to the pencil being real homogeneous.
    pub real: Option<bool>,
    pub seed: u64,
    pub samples: usize,
    /// Use `A_k^{1/2}` instead of a rank factor.
    pub literal_sqrt: bool,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            hermitian: None,
            real: None,
            seed: 0,
            samples: 100,
            literal_sqrt: false,
        }
    }
}

/// Checks run after one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: String,
    pub reports: Vec<SampleReport>,
}

impl StageReport {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.verdict)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage {stage} failed: {error}")]
pub struct StageFailure {
    pub stage: String,
    pub error: Error,
    /// Reports of the stages that completed.
    pub completed: Vec<StageReport>,
}

/// `f = β + δ* f_+ δ` with `f_+(e) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub beta: CMatrix,
    pub delta: CMatrix,
    pub plus: LongResolventPencil,
}

/// Everything produced up to the requested target.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub target: Target,
    pub input: LongResolventPencil,
    pub decomposition: PencilDecomposition,
    pub normalized: Option<Normalized>,
    pub gr: Option<GivoneRoesserRealization>,
    pub herglotz: Option<HerglotzRealization>,
    pub pencil: Option<LongResolventPencil>,
    pub stages: Vec<StageReport>,
}

impl Synthesis {
    pub fn passed(&self) -> bool {
        self.stages.iter().all(StageReport::passed)
    }

    /// `f(R)` for a commuting strictly accretive tuple, through the realized chain.
    pub fn eval_on_tuple(&self, r: &TupleOfMatrices, tol: &Tolerances) -> Result<CMatrix> {
        match (&self.normalized, &self.gr) {
            (Some(norm), Some(gr)) => eval_chain_on_tuple(&norm.beta, &norm.delta, gr, r, tol),
            _ => Err(Error::InvalidArgument("tuple evaluation needs the gr stage".into())),
        }
    }
}

/// `f(R) = β⊗I + (δ*⊗I) f_+(R) (δ⊗I)` with `f_+(R) = (I - 𝓕_+(T))^{-1}(I + 𝓕_+(T))`
/// and `T` the Cayley image of `R`.
pub fn eval_chain_on_tuple(
    beta: &CMatrix,
    delta: &CMatrix,
    gr: &GivoneRoesserRealization,
    r: &TupleOfMatrices,
    tol: &Tolerances,
) -> Result<CMatrix> {
    let s = r.size();
    let is = identity(s);
    let head = kron(beta, &is);
    if delta.nrows() == 0 {
        return Ok(head);
    }
    let t = operator_cayley_tuple(r, TupleDirection::AccretiveToContractive, tol)?;
    let big_f = eval_transfer_tuple(gr, &t)?;
    let ib = identity(big_f.nrows());
    let f_plus = solve(&(&ib - &big_f), &(&ib + &big_f))?;
    let dk = kron(delta, &is);
    Ok(head + dk.adjoint() * f_plus * dk)
}

/// Normalizes according to the pencil's class.
pub fn normalize(p: &LongResolventPencil, plan: &SamplePlan, tol: &Tolerances) -> Result<Normalized> {
    if p.class().is_homogeneous() {
        let (delta, plus) = normalize_homogeneous(p, plan, tol)?;
        Ok(Normalized {
            beta: zeros(p.n(), p.n()),
            delta,
            plus,
        })
    } else {
        let (beta, delta, plus) = normalize_nonhomogeneous(p, plan, tol)?;
        Ok(Normalized { beta, delta, plus })
    }
}

/// Maximum of `‖g(z) - f(z)‖` over the plan's halfplane points.
pub fn compare_on_halfplane(
    name: &str,
    f: &FunctionHandle,
    g: &FunctionHandle,
    plan: &SamplePlan,
    threshold: f64,
) -> Result<SampleReport> {
    let mut acc = Accumulator::new(name, threshold);
    for z in plan.points(f.d()) {
        let r = f.eval(&z).and_then(|a| Ok(op_norm(&(g.eval(&z)? - a))));
        acc.record(&z, r)?;
    }
    acc.finish()
}

struct Runner {
    stages: Vec<StageReport>,
}

impl Runner {
    fn run<T>(
        &mut self,
        stage: &str,
        f: impl FnOnce() -> Result<(T, Vec<SampleReport>)>,
    ) -> std::result::Result<T, StageFailure> {
        match f() {
            Ok((value, reports)) => {
                self.stages.push(StageReport {
                    stage: stage.into(),
                    reports,
                });
                Ok(value)
            }
            Err(error) => Err(StageFailure {
                stage: stage.into(),
                error,
                completed: std::mem::take(&mut self.stages),
            }),
        }
    }
}

/// Runs the synthesis chain up to `target`, checking each stage on fresh samples.
pub fn synthesize(
    p: &LongResolventPencil,
    target: Target,
    opts: &SynthesisOptions,
    tol: &Tolerances,
) -> std::result::Result<Synthesis, StageFailure> {
    let d = p.d();
    let halfplane = SamplePlan::polyhalfplane(opts.seed, opts.samples);
    let fit = SamplePlan::polyhalfplane(opts.seed.wrapping_add(1), opts.samples);
    let disk = SamplePlan::polydisk(opts.seed, opts.samples);
    let disk_check = SamplePlan::polydisk(opts.seed.wrapping_add(1), opts.samples);
    let homogeneous = p.class().is_homogeneous();
    let hermitian = opts.hermitian.unwrap_or(homogeneous);
    let real = opts.real.unwrap_or(p.class() == PencilClass::RealHomogeneous);
    let mut runner = Runner { stages: vec![] };

    let decomposition = runner.run("decomposition", || {
        let dec = pencil_decomposition(p, opts.literal_sqrt, tol)?;
        let f = p.to_handle();
        let mut reports = vec![check_decomposition(&f, &dec.phis(), &fit, false, tol)?];
        if homogeneous {
            reports.push(check_decomposition(&f, &dec.phis(), &fit, true, tol)?);
        }
        Ok((dec, reports))
    })?;
    let mut out = Synthesis {
        target,
        input: p.clone(),
        decomposition,
        normalized: None,
        gr: None,
        herglotz: None,
        pencil: None,
        stages: vec![],
    };
    if target == Target::Decomposition {
        out.stages = runner.stages;
        return Ok(out);
    }

    let norm = runner.run("normalize", || {
        let norm = normalize(p, &halfplane, tol)?;
        let r = norm.delta.nrows();
        let e = vec![c(1.0, 0.0); d];
        let center = if r == 0 {
            0.0
        } else {
            op_norm(&(eval_pencil(&norm.plus, &e)? - identity(r)))
        };
        Ok((
            norm,
            vec![SampleReport::scalar("normalized_center", center, tol.identity_atol)],
        ))
    })?;

    let gr = runner.run("lurking_isometry", || {
        let plus = norm.plus.to_handle();
        let dec = pencil_decomposition(&norm.plus, opts.literal_sqrt, tol)?;
        let mut phis = dec.phis();
        let mut reports = vec![check_decomposition(&plus, &phis, &fit, false, tol)?];
        if real && dec.factors.iter().any(|y| max_imag(y) > 0.0) {
            phis = realify_decomposition(&plus, &phis, &halfplane, tol)?;
        }
        let thetas = phi_to_theta(&phis, &plus);
        let schur = double_cayley(&plus)?;
        let gr = lurking_isometry(&schur, &thetas, hermitian, real, &disk, tol)?;
        reports.extend(verify_realization(&gr, &schur, &disk_check, tol)?.reports());
        reports.push(check_agler_identity(&gr, &disk_check, tol)?);
        if hermitian {
            reports.push(check_difference_identity(&gr, &disk_check, tol)?);
        }
        Ok((gr, reports))
    })?;
    out.normalized = Some(norm.clone());
    out.gr = Some(gr.clone());
    if target == Target::Gr {
        out.stages = runner.stages;
        return Ok(out);
    }

    let herglotz = runner.run("schur_to_herglotz", || {
        let h = schur_to_herglotz(&gr, &norm.beta, &norm.delta, tol)?;
        let f_disk = compose_disk(&p.to_handle());
        let mut acc = Accumulator::new("herglotz_fit", tol.identity_atol);
        for z in disk_check.points(d) {
            let r = f_disk.eval(&z).and_then(|a| {
                let b = eval_herglotz(&h, &z)?;
                Ok(op_norm(&(b - &a)) / op_norm(&a).max(1.0))
            });
            acc.record(&z, r)?;
        }
        let mut reports = vec![acc.finish()?, check_xi_identity(&h, &disk_check, tol)?];
        if homogeneous {
            reports.extend(homogeneous_structure_check(&h, tol)?.reports());
        }
        Ok((h, reports))
    })?;
    out.herglotz = Some(herglotz.clone());
    if target == Target::Herglotz {
        out.stages = runner.stages;
        return Ok(out);
    }

    let pencil = runner.run("herglotz_to_pencil", || {
        let q = herglotz_to_pencil(&herglotz, &halfplane, tol)?;
        let report = compare_on_halfplane(
            "pencil_roundtrip",
            &p.to_handle(),
            &q.to_handle(),
            &fit,
            ROUNDTRIP_FACTOR * tol.identity_atol,
        )?;
        Ok((q, vec![report]))
    })?;
    out.pencil = Some(pencil);
    out.stages = runner.stages;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessmertnyi::tests::parallel;
    use crate::numerics::from_real_rows;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn parallel_roundtrip() {
        let p = parallel();
        let s = synthesize(&p, Target::PencilRoundtrip, &SynthesisOptions::default(), &tol()).unwrap();
        for st in &s.stages {
            assert!(st.passed(), "{st:?}");
        }
        let h = s.herglotz.as_ref().unwrap();
        assert!(homogeneous_structure_check(h, &tol()).unwrap().passed());
        let gr = s.gr.as_ref().unwrap();
        assert!(gr.hermitian_residual() <= 1e-9);
        assert!(gr.real_residual() <= 1e-9);
    }

    #[test]
    fn affine_nonhomogeneous_roundtrip() {
        let a0 = from_real_rows(2, 2, &[0.0, 0.5, -0.5, 0.0]).map(|x| x * c(0.0, 1.0)) + identity(2) * c(0.0, 0.3);
        let a0 = crate::numerics::skew_part(&a0);
        let a1 = from_real_rows(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let p = LongResolventPencil::new(1, 1, vec![a0, a1], PencilClass::Nonhomogeneous, &tol()).unwrap();
        let s = synthesize(&p, Target::PencilRoundtrip, &SynthesisOptions::default(), &tol()).unwrap();
        assert!(s.passed(), "{:?}", s.stages);
    }

    #[test]
    fn literal_inverse_factor_breaks_gram() {
        // θ with (I - 𝓕)^{-1} in place of (I - 𝓕) does not satisfy the Agler identity.
        let p = parallel();
        let norm = normalize(&p, &SamplePlan::polyhalfplane(0, 20), &tol()).unwrap();
        let plus = norm.plus.to_handle();
        let phis = pencil_decomposition(&norm.plus, false, &tol()).unwrap().phis();
        let schur = double_cayley(&plus).unwrap();
        let literal: Vec<FunctionHandle> = phis
            .iter()
            .enumerate()
            .map(|(k, phi)| {
                let (phi, schur) = (phi.clone(), schur.clone());
                FunctionHandle::new(2, phi.rows(), 1, crate::polyalg::Domain::Polydisk, move |zeta| {
                    let z = crate::cayley::disk_to_halfplane(zeta)?;
                    let i = identity(1);
                    let inv = crate::numerics::inverse(&(&i - schur.eval(zeta)?))?;
                    Ok(phi.eval(&z)? * inv / (c(1.0, 0.0) - zeta[k]))
                })
            })
            .collect();
        let err = lurking_isometry(&schur, &literal, false, false, &SamplePlan::polydisk(0, 20), &tol()).unwrap_err();
        assert!(matches!(err, Error::GramMismatch { .. }), "{err:?}");
        let fixed = phi_to_theta(&phis, &plus);
        assert!(lurking_isometry(&schur, &fixed, false, false, &SamplePlan::polydisk(0, 20), &tol()).is_ok());
    }

    #[test]
    fn tuple_evaluation_matches_scalar_points() {
        let p = parallel();
        let s = synthesize(&p, Target::Gr, &SynthesisOptions::default(), &tol()).unwrap();
        let z = [c(0.7, 0.2), c(1.3, -0.4)];
        let mats: Vec<CMatrix> = z.iter().map(|&w| identity(2) * w).collect();
        let r = TupleOfMatrices::new(mats, 1e-12).unwrap();
        let fr = s.eval_on_tuple(&r, &tol()).unwrap();
        let fz = eval_pencil(&p, &z).unwrap()[(0, 0)];
        assert!(op_norm(&(fr - identity(2) * fz)) < 1e-9);
    }

    #[test]
    fn target_parsing() {
        assert_eq!("pencil_roundtrip".parse::<Target>().unwrap(), Target::PencilRoundtrip);
        assert!("nope".parse::<Target>().is_err());
    }
}
