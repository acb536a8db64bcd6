use gapforge_core::commutant::{haar_sample, weingarten_moment_matrix, PairAmbient};
use gapforge_core::exact::{exact_gap, formula_gap};
use gapforge_core::numeric::{dense_gap, full_spectrum, largest_eigenpair, KrylovConfig, SolverConfig};
use gapforge_core::tensornet::{build_mpo, dmrg_gap, DmrgConfig};
use gapforge_core::{Boundary, CircuitSpec, GroupKind, PairChain};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn group() -> impl Strategy<Value = GroupKind> {
    prop_oneof![
        Just(GroupKind::Unitary),
        Just(GroupKind::Orthogonal),
        Just(GroupKind::Symplectic)
    ]
}

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Open), Just(Boundary::Closed)]
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn closed_gap_is_square_of_open(d in 2u64..8, m in 1u32..3, half in 2u32..40) {
        let n = 2 * half * m;
        let open = exact_gap(d, m, n, Boundary::Open).unwrap().lambda;
        let closed = exact_gap(d, m, n, Boundary::Closed).unwrap().lambda;
        prop_assert!((closed - open * open).abs() <= 1e-15);
        prop_assert!(closed < open && open < 1.0);
    }

    #[test]
    fn open_gap_grows_with_length(d in 2u64..6, half in 2u32..30) {
        let a = exact_gap(d, 1, 2 * half, Boundary::Open).unwrap().lambda;
        let b = exact_gap(d, 1, 2 * half + 2, Boundary::Open).unwrap().lambda;
        prop_assert!(b > a);
    }

    #[test]
    fn lanczos_matches_dense_eigenvalue(seed in any::<u64>(), n in 5usize..40) {
        let mut state = seed | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DMatrix::from_fn(n, n, |_, _| next());
        let a = &a + a.transpose();
        let start: Vec<f64> = (0..n).map(|_| next()).collect();
        let cfg = KrylovConfig { depth: 12, keep: 4, ..Default::default() };
        let pair = largest_eigenpair(&a, &[], start, &cfg);
        let top = SymmetricEigen::new(a).eigenvalues.max();
        prop_assert!(pair.converged);
        prop_assert!((pair.value - top).abs() < 1e-8, "{} vs {top}", pair.value);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn moment_matrix_is_a_projector(g in group(), q in prop_oneof![Just(2u64), Just(4)]) {
        let s = CircuitSpec::new(g, Boundary::Open, q, 1, 4).unwrap();
        let sites = s.sites();
        let amb = PairAmbient { left: sites[0], right: sites[1] };
        let a = weingarten_moment_matrix(s.bond_group(0, 1), &amb).unwrap().exact;
        prop_assert_eq!(a.mul(&a), a);
    }

    #[test]
    fn compressed_spectrum_matches_full_layer(g in group(), b in boundary(), half in 2u32..4) {
        let s = CircuitSpec::new(g, b, 2, 1, 2 * half).unwrap();
        let k = PairChain::new(s).unwrap().dense(1 << 20).unwrap();
        let mut small: Vec<f64> = SymmetricEigen::new(k).eigenvalues.iter().map(|x| x.abs()).collect();
        small.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let full = full_spectrum(&s, 1 << 20).unwrap();
        for (x, y) in small.iter().zip(&full) {
            prop_assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
        prop_assert!(full[small.len()..].iter().all(|x| *x < 1e-10));
    }

    #[test]
    fn haar_samples_lie_in_the_group(g in group(), half in 1usize..4, seed in any::<u64>()) {
        let dim = 2 * half;
        let u = haar_sample(g, dim, seed).unwrap();
        let id = DMatrix::<Complex64>::identity(dim, dim);
        prop_assert!((u.adjoint() * &u - &id).norm() < 1e-12);
        match g {
            GroupKind::Orthogonal => prop_assert!(u.iter().all(|z| z.im == 0.0)),
            GroupKind::Symplectic => {
                let mut j = DMatrix::<Complex64>::zeros(dim, dim);
                for k in 0..half {
                    j[(k, half + k)] = Complex64::new(1.0, 0.0);
                    j[(half + k, k)] = Complex64::new(-1.0, 0.0);
                }
                prop_assert!((u.transpose() * &j * &u - &j).norm() < 1e-12);
            }
            GroupKind::Unitary => {}
        }
    }
}

#[test]
fn dmrg_agrees_with_dense_on_short_chains() {
    for g in [GroupKind::Unitary, GroupKind::Orthogonal, GroupKind::Symplectic] {
        for b in [Boundary::Open, Boundary::Closed] {
            let s = CircuitSpec::new(g, b, 2, 1, 8).unwrap();
            let exact = dense_gap(&s, &SolverConfig::default()).unwrap().lambda;
            let out = dmrg_gap(&build_mpo(&s).unwrap(), &DmrgConfig { chi: 64, ..Default::default() }).unwrap();
            assert!((out.result.lambda - exact).abs() < 1e-8, "{g:?} {b:?}: {} vs {exact}", out.result.lambda);
            for w in out.history.windows(2) {
                assert!(w[1].energy >= w[0].energy - 1e-12, "{g:?} {b:?}: sweep energy dropped");
            }
        }
    }
}

#[test]
fn formula_agrees_with_dense_for_grouped_sites() {
    for (d, m) in [(2, 2), (3, 2)] {
        for b in [Boundary::Open, Boundary::Closed] {
            let s = CircuitSpec::new(GroupKind::Unitary, b, d, m, 8).unwrap();
            let lam = dense_gap(&s, &SolverConfig::default()).unwrap().lambda;
            assert!((lam - formula_gap(&s).unwrap()).abs() < 1e-12);
        }
    }
}
