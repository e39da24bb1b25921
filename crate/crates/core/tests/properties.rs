use nalgebra::DMatrix;
use ncb_core::algebra::{block_decompose, generate_algebra, DecomposeOptions};
use ncb_core::classify::{decide_equivalence, verify_equivalence, ClassifyOptions, Decision, EquivalenceWitness, Fingerprint};
use ncb_core::matlin::{direct_sum, identity, inner, MatrixSubspace, CMatrix, DEFAULT_TOL_RANK};
use ncb_core::opsys::{random_param_sequence, ParamSequence, VerifyOptions};
use ncb_core::{rng, C64};
use proptest::prelude::*;

fn random_theta(d: usize, seed: u64) -> DMatrix<f64> {
    let mut g = rng::derive(seed, &[0x7468]);
    let m = DMatrix::from_fn(d, d, |_, _| 0.3 * rng::gaussian(&mut g));
    let avg = DMatrix::from_element(d, d, 1.0 / d as f64);
    DMatrix::identity(d, d) + m * (DMatrix::identity(d, d) - avg)
}

/// `h` together with a witness `g ~ h` built from a random permutation, unitaries and `θ`.
fn transform(g: &ParamSequence, seed: u64) -> (ParamSequence, EquivalenceWitness) {
    let n = g.len();
    let mut r = rng::derive(seed, &[0x7065]);
    let mut sigma: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        sigma.swap(i, (rng::gaussian(&mut r).abs() * 1e6) as usize % (i + 1));
    }
    let theta = random_theta(g.d(), seed);
    let inv = theta.clone().try_inverse().expect("invertible");
    let unitaries: Vec<CMatrix> = g.maps().iter().map(|m| rng::unitary(m.target_dim(), &mut r)).collect();
    let mut maps = vec![None; n];
    for k in 0..n {
        maps[sigma[k]] = Some(g.maps()[k].conjugate(&unitaries[k]).reparameterize(&inv));
    }
    let h = ParamSequence::new(maps.into_iter().map(Option::unwrap).collect()).unwrap();
    (
        h,
        EquivalenceWitness {
            sigma,
            unitaries,
            theta,
            residual: 0.0,
        },
    )
}

fn shapes() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![Just(vec![2]), Just(vec![1, 2]), Just(vec![1, 1]), Just(vec![3])]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn span_basis_is_orthonormal(n in 1usize..4, k in 1usize..7, seed in any::<u64>()) {
        let mut g = rng::derive(seed, &[1]);
        let span: Vec<CMatrix> = (0..k).map(|_| rng::complex_matrix(n, n, &mut g)).collect();
        let s = MatrixSubspace::orthonormalize_span(n, &span, DEFAULT_TOL_RANK).unwrap();
        prop_assert_eq!(s.dim(), k.min(n * n));
        for (i, a) in s.basis().iter().enumerate() {
            for (j, b) in s.basis().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((inner(a, b) - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
        for x in &span {
            prop_assert!(s.residual(x) < 1e-9 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn star_closed_spans_have_full_hermitian_bases(n in 1usize..4, k in 1usize..4, seed in any::<u64>()) {
        let mut g = rng::derive(seed, &[2]);
        let mut span = vec![identity(n)];
        for _ in 0..k {
            let x = rng::complex_matrix(n, n, &mut g);
            span.push(x.adjoint());
            span.push(x);
        }
        let s = MatrixSubspace::orthonormalize_span(n, &span, DEFAULT_TOL_RANK).unwrap();
        let herm = s.hermitian_basis(DEFAULT_TOL_RANK);
        prop_assert_eq!(herm.len(), s.dim());
        for h in &herm {
            prop_assert!((h - h.adjoint()).norm() < 1e-12);
            prop_assert!(s.residual(h) < 1e-9);
        }
    }

    #[test]
    fn generated_algebras_decompose_multiplicatively(sizes in shapes(), seed in any::<u64>()) {
        let mut g = rng::derive(seed, &[3]);
        let n: usize = sizes.iter().sum();
        let w = rng::unitary(n, &mut g);
        let gens: Vec<CMatrix> = (0..2)
            .map(|_| {
                let blocks: Vec<CMatrix> = sizes.iter().map(|&m| rng::hermitian(m, &mut g)).collect();
                &w * direct_sum(&blocks) * w.adjoint()
            })
            .collect();
        let mut span = vec![identity(n)];
        span.extend(gens);
        let space = MatrixSubspace::orthonormalize_span(n, &span, DEFAULT_TOL_RANK).unwrap();
        let alg = generate_algebra(&space, DEFAULT_TOL_RANK).unwrap();
        prop_assert!(alg.closure_residual() < 1e-8);
        prop_assert_eq!(alg.dim(), sizes.iter().map(|m| m * m).sum::<usize>());
        let dec = block_decompose(&alg, DecomposeOptions::default()).unwrap();
        let mut dims = dec.block_dims();
        dims.sort_unstable();
        let mut want = sizes.clone();
        want.sort_unstable();
        prop_assert_eq!(dims, want);
        let element = |g: &mut rng::SeededRng| {
            let mut x = CMatrix::zeros(n, n);
            for b in alg.space().basis() {
                x += b * rng::complex_gaussian(g);
            }
            x
        };
        let (x, y) = (element(&mut g), element(&mut g));
        let pis: Vec<CMatrix> = (0..dec.num_blocks()).map(|k| dec.pi(k, &x)).collect();
        prop_assert!((dec.reconstruct(&pis) - &x).norm() < 1e-8 * x.norm());
        let xy = &x * &y;
        for k in 0..dec.num_blocks() {
            let prod = dec.pi(k, &x) * dec.pi(k, &y);
            prop_assert!((dec.pi(k, &xy) - prod).norm() < 1e-8 * (1.0 + xy.norm()));
            prop_assert!((dec.pi(k, &x.adjoint()) - dec.pi(k, &x).adjoint()).norm() < 1e-8 * x.norm());
        }
    }

    #[test]
    fn fingerprints_ignore_conjugation_and_reparameterization(n in 2usize..4, seed in any::<u64>()) {
        let g = random_param_sequence(3, &[n], seed, &VerifyOptions::default()).unwrap();
        let m = &g.maps()[0];
        let mut r = rng::derive(seed, &[4]);
        let u = rng::unitary(n, &mut r);
        let base = Fingerprint::of_map(m);
        prop_assert!(base.distance(&Fingerprint::of_map(&m.conjugate(&u))) < 1e-9);
        prop_assert!(base.distance(&Fingerprint::of_map(&m.reparameterize(&random_theta(3, seed)))) < 1e-9);
    }

    #[test]
    fn composed_witnesses_verify(sizes in shapes(), seed in any::<u64>()) {
        let d = if sizes.iter().all(|&m| m == 1) { 2 } else { 3 };
        let g = random_param_sequence(d, &sizes, seed, &VerifyOptions::default()).unwrap();
        let (h, w1) = transform(&g, seed);
        let (k, w2) = transform(&h, seed.wrapping_add(1));
        prop_assert!(verify_equivalence(&g, &h, &w1).unwrap());
        prop_assert!(verify_equivalence(&h, &k, &w2).unwrap());
        prop_assert!(verify_equivalence(&g, &k, &w1.compose(&w2)).unwrap());
        prop_assert!(verify_equivalence(&g, &g, &EquivalenceWitness::identity(&g)).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn unitary_conjugates_are_recognised(n in 2usize..4, seed in any::<u64>()) {
        let g = random_param_sequence(3, &[n], seed, &VerifyOptions::default()).unwrap();
        let mut r = rng::derive(seed, &[5]);
        let u = rng::unitary(n, &mut r);
        let h = ParamSequence::new(vec![g.maps()[0].conjugate(&u)]).unwrap();
        let opts = ClassifyOptions { seed, ..ClassifyOptions::default() };
        match decide_equivalence(&g, &h, &opts).unwrap() {
            Decision::Witness(w) => prop_assert!(verify_equivalence(&g, &h, &w).unwrap()),
            other => prop_assert!(false, "expected a witness, got {:?}", other),
        }
    }
}
