use cayley_realize::bessmertnyi::eval_pencil;
use cayley_realize::cayley::{disk_to_halfplane, halfplane_to_disk, value_cayley, ValueDirection};
use cayley_realize::cli::Artifact;
use cayley_realize::numerics::{c, identity, op_norm, unitary_completion, CMatrix};
use cayley_realize::pipeline::{synthesize, SynthesisOptions, Target};
use cayley_realize::polyalg::{MatrixPolynomial, MultiIndex};
use cayley_realize::verify::{
    check_cayley_inner, check_real_part_positivity, gen_instance, random_matrix, Instance, InstanceDims, InstanceKind,
    SamplePlan,
};
use cayley_realize::Tolerances;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn disk_point() -> impl Strategy<Value = Complex64> {
    (0.0..0.95_f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn halfplane_point() -> impl Strategy<Value = Complex64> {
    (1e-3..10.0_f64, -10.0..10.0_f64).prop_map(|(x, y)| c(x, y))
}

fn small_dims() -> impl Strategy<Value = InstanceDims> {
    (1..=3usize, 1..=3usize, 0..=4usize, 1..=4usize).prop_map(|(d, n, m, s)| InstanceDims { d, n, m, s })
}

fn kind() -> impl Strategy<Value = InstanceKind> {
    prop::sample::select(InstanceKind::ALL.to_vec())
}

fn pencil_kind() -> impl Strategy<Value = InstanceKind> {
    prop::sample::select(vec![
        InstanceKind::PencilNonhomogeneous,
        InstanceKind::PencilHomogeneous,
        InstanceKind::PencilReal,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn generators_always_valid(kind in kind(), seed in any::<u64>(), dims in small_dims()) {
        let tol = Tolerances::default();
        let inst = gen_instance(kind, seed, dims, &tol);
        prop_assert!(inst.is_ok(), "{kind:?} {seed} {dims:?}: {:?}", inst.err());
        prop_assert_eq!(gen_instance(kind, seed, dims, &tol).unwrap(), inst.unwrap());
    }

    #[test]
    fn cayley_maps_are_inverse(zeta in prop::collection::vec(disk_point(), 1..4), z in prop::collection::vec(halfplane_point(), 1..4)) {
        let back = halfplane_to_disk(&disk_to_halfplane(&zeta).unwrap()).unwrap();
        for (a, b) in zeta.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        let w = disk_to_halfplane(&halfplane_to_disk(&z).unwrap()).unwrap();
        for (a, b) in z.iter().zip(&w) {
            prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
        }
        for w in halfplane_to_disk(&z).unwrap() {
            prop_assert!(w.norm() < 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn value_cayley_roundtrip(seed in any::<u64>(), n in 1..5usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_matrix(&mut rng, n, n);
        // Strictly positive real part keeps M + I invertible.
        let m = &g * g.adjoint() + identity(n) * c(0.1, 0.0) + (&g - g.adjoint()) * c(0.5, 0.0);
        let s = value_cayley(&m, ValueDirection::HerglotzToSchur).unwrap();
        prop_assert!(op_norm(&s) < 1.0);
        let back = value_cayley(&s, ValueDirection::SchurToHerglotz).unwrap();
        prop_assert!(op_norm(&(back - &m)) <= 1e-9 * op_norm(&m).max(1.0));
    }

    #[test]
    fn completion_maps_l_to_r(seed in any::<u64>(), rows in 1..6usize, cols in 1..6usize) {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_matrix(&mut rng, rows, cols);
        let (q, _) = random_matrix(&mut rng, rows, rows).qr().unpack();
        let r = &q * &l;
        let u = unitary_completion(&l, &r, false, &tol).unwrap();
        prop_assert!(op_norm(&(u.adjoint() * &u - identity(rows))) <= 1e-9);
        prop_assert!(op_norm(&(&u * &l - &r)) <= 1e-9 * op_norm(&l).max(1.0));
        prop_assert_eq!(unitary_completion(&l, &r, false, &tol).unwrap(), u);
    }

    #[test]
    fn hermitian_completion_is_self_adjoint(seed in any::<u64>(), rows in 1..6usize, cols in 1..6usize) {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_matrix(&mut rng, rows, cols);
        let (q, _) = random_matrix(&mut rng, rows, rows).qr().unpack();
        let h = &q * CMatrix::from_diagonal(&nalgebra::DVector::from_fn(rows, |i, _| c(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0))) * q.adjoint();
        let r = &h * &l;
        let u = unitary_completion(&l, &r, true, &tol).unwrap();
        prop_assert!(op_norm(&(&u - u.adjoint())) <= 1e-12);
        prop_assert!(op_norm(&(u.adjoint() * &u - identity(rows))) <= 1e-9);
        prop_assert!(op_norm(&(&u * &l - &r)) <= 1e-9 * op_norm(&l).max(1.0));
    }

    #[test]
    fn polynomial_arithmetic_is_pointwise(seed in any::<u64>(), d in 1..4usize, z in prop::collection::vec(disk_point(), 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = &z[..d];
        let poly = |rng: &mut ChaCha8Rng, rows, cols| {
            let terms = MultiIndex::up_to_degree(d, 2).into_iter().map(|i| (i, random_matrix(rng, rows, cols))).collect();
            MatrixPolynomial::from_terms(d, rows, cols, terms).unwrap()
        };
        let a = poly(&mut rng, 2, 3);
        let b = poly(&mut rng, 2, 3);
        let e = poly(&mut rng, 3, 2);
        let sum = a.add(&b).unwrap().eval(z).unwrap();
        prop_assert!(op_norm(&(sum - a.eval(z).unwrap() - b.eval(z).unwrap())) < 1e-12);
        let prod = a.matmul(&e).unwrap().eval(z).unwrap();
        prop_assert!(op_norm(&(prod - a.eval(z).unwrap() * e.eval(z).unwrap())) < 1e-11);
        prop_assert_eq!(a.sharp().sharp(), a.clone());
        let zbar: Vec<Complex64> = z.iter().map(|w| w.conj()).collect();
        prop_assert!(op_norm(&(a.sharp().eval(z).unwrap() - a.eval(&zbar).unwrap().map(|x| x.conj()))) < 1e-12);
    }

    #[test]
    fn artifacts_survive_serialization(kind in kind(), seed in any::<u64>(), dims in small_dims()) {
        let tol = Tolerances::default();
        let a: Artifact = gen_instance(kind, seed, dims, &tol).unwrap().into();
        let text = a.to_json();
        let back = Artifact::from_json(&text, &tol).unwrap();
        prop_assert_eq!(back.to_json(), text);
        prop_assert_eq!(back, a);
    }

    #[test]
    fn pencils_are_cayley_inner_herglotz(kind in pencil_kind(), seed in any::<u64>(), dims in small_dims()) {
        let tol = Tolerances::default();
        let Instance::Pencil(p) = gen_instance(kind, seed, dims, &tol).unwrap() else { unreachable!() };
        let f = p.to_handle();
        prop_assert!(check_cayley_inner(&f, &SamplePlan::polyhalfplane(seed, 20), &tol).unwrap().verdict);
        prop_assert!(check_real_part_positivity(&f, &SamplePlan::polyhalfplane(seed, 20), &tol).unwrap().verdict);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthesis_reproduces_pencil(kind in pencil_kind(), seed in 0..1_000_000u64, dims in small_dims()) {
        let tol = Tolerances::default();
        let Instance::Pencil(p) = gen_instance(kind, seed, dims, &tol).unwrap() else { unreachable!() };
        let opts = SynthesisOptions { seed, ..SynthesisOptions::default() };
        let s = synthesize(&p, Target::PencilRoundtrip, &opts, &tol);
        prop_assert!(s.is_ok(), "{kind:?} {seed} {dims:?}: {}", s.as_ref().err().unwrap());
        let s = s.unwrap();
        prop_assert!(s.passed());
        let q = s.pencil.unwrap();
        for z in SamplePlan::polyhalfplane(seed.wrapping_add(99), 10).points(p.d()) {
            let diff = op_norm(&(eval_pencil(&q, &z).unwrap() - eval_pencil(&p, &z).unwrap()));
            prop_assert!(diff <= 1e-7, "residual {diff:.3e}");
        }
        let gr = s.gr.unwrap();
        prop_assert!(gr.unitarity_residual() <= tol.identity_atol);
        if kind != InstanceKind::PencilNonhomogeneous {
            prop_assert!(gr.hermitian_residual() <= tol.identity_atol);
        }
    }
}
