use proptest::prelude::*;

use unitarity_core::classifier::{classify, BipartiteMap, ClassifierConfig, QualitativeKind};
use unitarity_core::dynamics::{analyze, gain_equality_deficit, AnalyzeConfig, SingleSystemKind, Superoperator};
use unitarity_core::generators::Generator;
use unitarity_core::linalg::{
    hermitian_eigen, kron, numerical_rank, partial_trace, relative_error, reshape_bipartite, svd, ComplexMatrix,
    ComplexVector, Side, C64,
};
use unitarity_core::quantitative::{check_e1, check_e2, sampled_measure_change, Measure};
use unitarity_core::schmidt::{entanglement_entropy, schmidt_rank, swap_operator, BipartiteShape};
use unitarity_core::states::{decompose_relative, mix, DensityMatrix, PureState};

fn shape_strategy() -> impl Strategy<Value = BipartiteShape> {
    (2usize..=4, 2usize..=4).prop_map(|(n, m)| BipartiteShape::new(n, m).unwrap())
}

fn random_density(g: &mut Generator, d: usize) -> DensityMatrix {
    let rank = 1 + g.index(d);
    g.density(d, rank).unwrap()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn hermitian_eigen_reconstructs(seed in any::<u64>(), d in 1usize..=12) {
        let mut g = Generator::new(seed);
        let x = g.gaussian_matrix(d, d);
        let h = &x + x.adjoint();
        let e = hermitian_eigen(&h, 1e-12).unwrap();
        let diag = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(d, e.values.iter().map(|&v| C64::new(v, 0.0))));
        let rebuilt = &e.vectors * diag * e.vectors.adjoint();
        prop_assert!(relative_error(&rebuilt, &h) <= 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), r in 1usize..=16, c in 1usize..=16) {
        let mut g = Generator::new(seed);
        let m = g.gaussian_matrix(r, c);
        let dec = svd(&m).unwrap();
        prop_assert!(relative_error(&dec.reconstruct(), &m) <= 1e-10);
        prop_assert!(dec.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn kron_is_associative(seed in any::<u64>(), a in 1usize..=3, b in 1usize..=3, c in 1usize..=3) {
        let mut g = Generator::new(seed);
        let (x, y, z) = (g.gaussian_matrix(a, a), g.gaussian_matrix(b, b), g.gaussian_matrix(c, c));
        let left = kron(&kron(&x, &y), &z);
        let right = kron(&x, &kron(&y, &z));
        prop_assert!(relative_error(&left, &right) <= 1e-14);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
        let mut g = Generator::new(seed);
        let ra = random_density(&mut g, n);
        let rb = random_density(&mut g, m);
        let joint = kron(ra.matrix(), rb.matrix());
        prop_assert!(relative_error(&partial_trace(&joint, (n, m), Side::B).unwrap(), ra.matrix()) <= 1e-12);
        prop_assert!(relative_error(&partial_trace(&joint, (n, m), Side::A).unwrap(), rb.matrix()) <= 1e-12);
    }

    #[test]
    fn entropy_is_unitarily_invariant(seed in any::<u64>(), d in 1usize..=8) {
        let mut g = Generator::new(seed);
        let rho = random_density(&mut g, d);
        let u = g.haar_unitary(d);
        let s = rho.entropy().unwrap();
        prop_assert!((rho.conjugate_by(&u).entropy().unwrap() - s).abs() <= 1e-9);
        prop_assert!((rho.transpose().entropy().unwrap() - s).abs() <= 1e-9);
    }

    #[test]
    fn entropy_is_concave(seed in any::<u64>(), d in 1usize..=6, p in 0.0f64..=1.0) {
        let mut g = Generator::new(seed);
        let r1 = random_density(&mut g, d);
        let r2 = random_density(&mut g, d);
        let mixed = mix(&r1, &r2, p).unwrap();
        let bound = p * r1.entropy().unwrap() + (1.0 - p) * r2.entropy().unwrap();
        prop_assert!(mixed.entropy().unwrap() >= bound - 1e-12);
    }

    #[test]
    fn relative_decomposition_is_orthonormal(seed in any::<u64>(), d in 2usize..=6) {
        let mut g = Generator::new(seed);
        let (a, b) = (g.pure_state(d), g.pure_state(d));
        let dec = decompose_relative(&a, &b, 1e-12).unwrap();
        prop_assert!(dec.orthogonal >= 0.0);
        prop_assert!((dec.parallel.norm_sqr() + dec.orthogonal * dec.orthogonal - 1.0).abs() <= 1e-12);
        prop_assert!(a.vector().dotc(dec.complement.vector()).norm() <= 1e-12);
        prop_assert!((dec.recombine(&a) - b.vector()).norm() <= 1e-10);
    }

    #[test]
    fn schmidt_rank_matches_reshaped_rank(seed in any::<u64>(), shape in shape_strategy(), r in 1usize..=4) {
        let mut g = Generator::new(seed);
        let rank = r.min(shape.max_rank());
        let v = g.schmidt_state(shape, rank).unwrap().into_vector();
        let reshaped = reshape_bipartite(&v, shape.n, shape.m).unwrap();
        prop_assert_eq!(schmidt_rank(&v, shape, 1e-8).unwrap(), numerical_rank(&reshaped, 1e-8).unwrap());
        prop_assert_eq!(schmidt_rank(&v, shape, 1e-8).unwrap(), rank);
    }

    #[test]
    fn entanglement_matches_reduced_entropy(seed in any::<u64>(), shape in shape_strategy()) {
        let mut g = Generator::new(seed);
        let psi = g.pure_state(shape.dim());
        let rho = psi.projector();
        let e = entanglement_entropy(&psi, shape).unwrap();
        for side in [Side::A, Side::B] {
            let reduced = DensityMatrix::new(partial_trace(&rho, (shape.n, shape.m), side).unwrap(), 1e-9).unwrap();
            prop_assert!((reduced.entropy().unwrap() - e).abs() <= 1e-9);
        }
    }

    #[test]
    fn invertible_local_maps_keep_schmidt_rank(seed in any::<u64>(), shape in shape_strategy(), r in 1usize..=4) {
        let mut g = Generator::new(seed);
        let rank = r.min(shape.max_rank());
        let l = kron(&g.random_invertible(shape.n, 100.0).unwrap(), &g.random_invertible(shape.m, 100.0).unwrap());
        let v = g.schmidt_state(shape, rank).unwrap().into_vector();
        prop_assert_eq!(schmidt_rank(&(l * v), shape, 1e-8).unwrap(), rank);
    }

    #[test]
    fn rotated_swap_differs_by_local_unitaries(seed in any::<u64>(), shape in shape_strategy()) {
        let mut g = Generator::new(seed);
        let (va, vb) = (g.haar_unitary(shape.n), g.haar_unitary(shape.m));
        // |j⟩|i⟩⟨aᵢ bⱼ| with aᵢ = V_A|i⟩ and bⱼ = V_B|j⟩.
        let mut rotated = ComplexMatrix::zeros(shape.dim(), shape.dim());
        for i in 0..shape.n {
            for j in 0..shape.m {
                let source = va.column(i).kronecker(&vb.column(j));
                let mut target = ComplexVector::zeros(shape.dim());
                target[j * shape.n + i] = C64::new(1.0, 0.0);
                rotated += target * source.adjoint();
            }
        }
        let expected = kron(&vb.adjoint(), &va.adjoint()) * swap_operator(shape);
        prop_assert!(relative_error(&rotated, &expected) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn scaled_conjugations_are_recovered(seed in any::<u64>(), d in 1usize..=6, c in 0.5f64..=2.0) {
        let mut g = Generator::new(seed);
        let u = g.haar_unitary(d);
        let v = analyze(&Superoperator::unitary_conjugation(&u, c), &AnalyzeConfig { seed, ..Default::default() }).unwrap();
        prop_assert_eq!(v.kind, SingleSystemKind::UnitaryConjugation);
        prop_assert!((v.gain.unwrap() - c).abs() <= 1e-9);
        let rec = v.unitary.unwrap();
        for col in 0..d {
            prop_assert!((u.column(col).dotc(&rec.column(col)).norm() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn analyze_is_deterministic(seed in any::<u64>(), d in 2usize..=5) {
        let mut g = Generator::new(seed);
        let s = Superoperator::antiunitary_conjugation(&g.haar_unitary(d), 1.3);
        let cfg = AnalyzeConfig { seed, ..Default::default() };
        let (a, b) = (analyze(&s, &cfg).unwrap(), analyze(&s, &cfg).unwrap());
        prop_assert_eq!(a.kind, b.kind);
        prop_assert_eq!(a.unitary, b.unitary);
        prop_assert_eq!(a.gain, b.gain);
    }

    #[test]
    fn preserving_verdicts_preserve_entropy(seed in any::<u64>(), d in 2usize..=5, anti in any::<bool>()) {
        let mut g = Generator::new(seed);
        let u = g.haar_unitary(d);
        let s = if anti { Superoperator::antiunitary_conjugation(&u, 0.8) } else { Superoperator::unitary_conjugation(&u, 0.8) };
        let v = analyze(&s, &AnalyzeConfig { seed, ..Default::default() }).unwrap();
        prop_assert!(v.kind != SingleSystemKind::NotPreserving);
        for k in 0..100 {
            let rho = g.density(d, 1 + k % d).unwrap();
            let out = DensityMatrix::from_unnormalized(&s.apply(rho.matrix()), 1e-9).unwrap();
            prop_assert!((out.entropy().unwrap() - rho.entropy().unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn equal_gains_have_no_deficit(d in 0.1f64..10.0, lambda2 in 0.01f64..=1.0) {
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        prop_assert_eq!(gain_equality_deficit(d, d, lambda2, &grid).unwrap(), 0.0);
    }

    #[test]
    fn rejections_carry_reverified_witnesses(seed in any::<u64>(), shape in shape_strategy()) {
        let mut g = Generator::new(seed);
        let map = BipartiteMap::new(g.gaussian_matrix(shape.dim(), shape.dim()), shape).unwrap();
        let cfg = ClassifierConfig { seed, ..Default::default() };
        let v = classify(&map, &cfg).unwrap();
        prop_assert_eq!(v.kind, QualitativeKind::NotPreserving);
        let w = v.witness.expect("rejections carry a witness");
        prop_assert!(w.reverify(&map, cfg.tol));
    }

    #[test]
    fn classification_is_gauge_invariant(seed in any::<u64>(), shape in shape_strategy(), swap in any::<bool>(), c in 0.1f64..10.0, theta in 0.0f64..6.28) {
        let mut g = Generator::new(seed);
        let map = g.local_map(shape, swap, 100.0).unwrap();
        let z = C64::from_polar(c, theta);
        let cfg = ClassifierConfig { seed, ..Default::default() };
        let v1 = classify(&map, &cfg).unwrap();
        let v2 = classify(&map.scaled(z), &cfg).unwrap();
        prop_assert_eq!(v1.kind, v2.kind);
        let r1 = v1.reconstruct(shape).unwrap().map(|x| x * z);
        prop_assert!(relative_error(&v2.reconstruct(shape).unwrap(), &r1) <= 1e-8);
    }

    #[test]
    fn accepted_maps_keep_schmidt_rank(seed in any::<u64>(), shape in shape_strategy(), swap in any::<bool>()) {
        let mut g = Generator::new(seed);
        let map = g.local_map(shape, swap, 100.0).unwrap();
        let cfg = ClassifierConfig { seed, ..Default::default() };
        prop_assert!(classify(&map, &cfg).unwrap().is_preserving());
        for rank in 1..=shape.max_rank() {
            for _ in 0..100 {
                let v = g.schmidt_state(shape, rank).unwrap().into_vector();
                prop_assert_eq!(schmidt_rank(&map.apply(&v), map.output_shape(), 1e-8).unwrap(), rank);
            }
        }
    }

    #[test]
    fn measure_verdicts_match_sampling(seed in any::<u64>(), shape in shape_strategy(), kind in 0usize..3) {
        let mut g = Generator::new(seed);
        let c = g.uniform(0.5, 2.0);
        let (a, b) = match kind {
            0 => (g.haar_unitary(shape.n).scale(c), g.haar_unitary(shape.m).scale(1.0 / c)),
            1 => (g.haar_unitary(shape.n).scale(c), g.haar_unitary(shape.m)),
            _ => (g.random_invertible(shape.n, 10.0).unwrap(), g.random_invertible(shape.m, 10.0).unwrap()),
        };
        let l = kron(&a, &b);
        for measure in [Measure::E1, Measure::E2] {
            let verdict = match measure { Measure::E1 => check_e1(&a, &b, 1e-8), Measure::E2 => check_e2(&a, &b, 1e-8) }.unwrap();
            let change = sampled_measure_change(&l, shape, shape, measure, 200, seed).unwrap();
            prop_assert_eq!(verdict.preserved, change <= 1e-8, "{:?} change {}", measure, change);
            if verdict.preserved {
                let map = BipartiteMap::new(l.clone(), shape).unwrap();
                prop_assert!(classify(&map, &ClassifierConfig::default()).unwrap().is_preserving());
            }
        }
    }

    #[test]
    fn e2_verdict_is_inverse_symmetric(seed in any::<u64>(), shape in shape_strategy(), balanced in any::<bool>()) {
        let mut g = Generator::new(seed);
        let c = g.uniform(0.5, 2.0);
        let a = g.haar_unitary(shape.n).scale(c);
        let b = if balanced { g.haar_unitary(shape.m).scale(1.0 / c) } else { g.random_invertible(shape.m, 10.0).unwrap() };
        let forward = check_e2(&a, &b, 1e-8).unwrap().preserved;
        let inverse = check_e2(&a.clone().try_inverse().unwrap(), &b.clone().try_inverse().unwrap(), 1e-8).unwrap().preserved;
        prop_assert_eq!(forward, inverse);
    }

    #[test]
    fn generators_are_deterministic(seed in any::<u64>(), stream in any::<u64>(), shape in shape_strategy()) {
        let mut a = Generator::with_stream(seed, stream);
        let mut b = Generator::with_stream(seed, stream);
        prop_assert_eq!(a.local_map(shape, true, 50.0).unwrap(), b.local_map(shape, true, 50.0).unwrap());
        prop_assert_eq!(a.density(shape.n, 1).unwrap(), b.density(shape.n, 1).unwrap());
        prop_assert_eq!(a.pure_state(shape.dim()), b.pure_state(shape.dim()));
    }
}

#[test]
fn perturbed_local_maps_are_rejected() {
    let mut g = Generator::new(77);
    let mut rejected = 0;
    for k in 0..200 {
        let shape = BipartiteShape::new(2 + k % 3, 2 + (k / 3) % 3).unwrap();
        let map = g.local_map(shape, k % 2 == 1, 1e3).unwrap();
        let bad = g.perturb(&map, 1e-2).unwrap();
        if !classify(&bad, &ClassifierConfig::default()).unwrap().is_preserving() {
            rejected += 1;
        }
    }
    assert!(rejected as f64 / 200.0 >= 0.99, "{rejected}/200");
}

#[test]
fn pure_state_helper_is_unit() {
    let mut g = Generator::new(1);
    let p: PureState = g.pure_state(5);
    assert!((p.vector().norm() - 1.0).abs() < 1e-12);
}
