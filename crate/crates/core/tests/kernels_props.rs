use std::sync::Arc;

use proptest::prelude::*;
use tropkern::kernels::{
    check_permutation_positivity, check_permutation_positivity_exhaustive, decompose_phi_b0, factorize,
    is_tpsd_pairwise, monge_violation, FeatureMap,
};
use tropkern::{ClosedForm, ExtReal, KernelRep, Matrix, PointSet};

fn entry() -> impl Strategy<Value = ExtReal> {
    prop_oneof![
        1 => Just(ExtReal::NEG_INF),
        6 => (-3i32..=3).prop_map(ExtReal::from),
    ]
}

fn symmetric(n: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(entry(), n * n).prop_map(move |v| {
        Matrix::from_fn(n, n, |i, j| if i <= j { v[i * n + j] } else { v[j * n + i] })
    })
}

fn any_symmetric() -> impl Strategy<Value = Matrix> {
    (1usize..=5).prop_flat_map(symmetric)
}

/// `φ_i + b0(i,j) + φ_j` with `b0 ≤ 0`, `b0(i,i) = 0`.
fn tpsd(n: usize) -> impl Strategy<Value = Matrix> {
    (
        proptest::collection::vec(-3i32..=3, n),
        proptest::collection::vec(prop_oneof![1 => Just(None), 4 => (0i32..=3).prop_map(Some)], n * n),
    )
        .prop_map(move |(phi, b0)| {
            Matrix::from_fn(n, n, |i, j| {
                let (a, b) = (i.min(j), i.max(j));
                let off = if i == j { Some(0) } else { b0[a * n + b] };
                match off {
                    None => ExtReal::NEG_INF,
                    Some(c) => ExtReal::from(phi[i] - c + phi[j]),
                }
            })
        })
}

fn any_tpsd() -> impl Strategy<Value = Matrix> {
    (1usize..=5).prop_flat_map(tpsd)
}

/// All permutations of `0..n` by Heap's algorithm, as an oracle independent
/// of the library's subset enumeration.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut out = Vec::new();
    heap(n, &mut (0..n).collect(), &mut out);
    out
}

/// Permutation positivity over the whole index set: partial permutations
/// are covered because fixed points contribute equally to both sides.
fn permutation_oracle(g: &Matrix) -> bool {
    let n = g.rows();
    permutations(n).iter().all(|p| {
        let lhs = (0..n).fold(ExtReal::ZERO, |acc, i| acc.lower_add(g.get(i, i)));
        let rhs = (0..n).fold(ExtReal::ZERO, |acc, i| acc.lower_add(g.get(i, p[i])));
        rhs <= lhs
    })
}

proptest! {
    #[test]
    fn pairwise_matches_permutation_oracle(g in any_symmetric()) {
        let pairwise = is_tpsd_pairwise(&g, 1e-9).unwrap().is_none();
        let cycles = check_permutation_positivity(&g, g.rows(), 1e-9).unwrap().is_none();
        let brute = check_permutation_positivity_exhaustive(&g, g.rows(), 1e-9).unwrap().is_none();
        prop_assert_eq!(pairwise, cycles);
        prop_assert_eq!(pairwise, brute);
        // with -inf diagonals the full-set oracle loses information, so only one direction
        if pairwise {
            prop_assert!(permutation_oracle(&g));
        }
    }

    #[test]
    fn generated_tpsd_grams_pass(g in any_tpsd()) {
        prop_assert_eq!(is_tpsd_pairwise(&g, 1e-9).unwrap(), None);
    }

    #[test]
    fn tpsd_is_stable_under_max_and_shifts(a in tpsd(4), b in tpsd(4), phi in proptest::collection::vec(-3i32..=3, 4)) {
        let m = a.zip_with(&b, |x, y| x.max(y)).unwrap();
        prop_assert_eq!(is_tpsd_pairwise(&m, 1e-9).unwrap(), None);
        let shifted = Matrix::from_fn(4, 4, |i, j| {
            a.get(i, j).lower_add(ExtReal::from(phi[i])).lower_add(ExtReal::from(phi[j]))
        });
        prop_assert_eq!(is_tpsd_pairwise(&shifted, 1e-9).unwrap(), None);
    }

    #[test]
    fn tpsd_restricts_to_principal_submatrices(g in tpsd(5), keep in proptest::sample::subsequence(vec![0usize, 1, 2, 3, 4], 1..=5)) {
        prop_assert_eq!(is_tpsd_pairwise(&g.select(&keep, &keep), 1e-9).unwrap(), None);
    }

    #[test]
    fn decomposition_reassembles(g in any_tpsd()) {
        let d = decompose_phi_b0(&g).unwrap();
        prop_assert_eq!(d.reassemble(), g.clone());
        for i in 0..g.rows() {
            if d.phi[i].is_finite() {
                prop_assert_eq!(d.b0.get(i, i), ExtReal::ZERO);
            }
            for j in 0..g.rows() {
                prop_assert!(d.b0.get(i, j) <= ExtReal::ZERO);
                prop_assert_eq!(d.b0.get(i, j), d.b0.get(j, i));
            }
        }
    }

    #[test]
    fn factorizations_recompose(g in any_tpsd()) {
        let fm = factorize(&g).unwrap();
        prop_assert_eq!(fm.recompose(), g.clone());
        if g.maxplus_mul(&g).unwrap() == g {
            prop_assert_eq!(FeatureMap::identity_factorization(&g).unwrap().recompose(), g);
        }
    }

    #[test]
    fn lipschitz_grams_factor_through_themselves(xs in proptest::collection::btree_set(-20i32..=20, 1..8)) {
        let pts = grid(&xs.iter().map(|&x| x as f64).collect::<Vec<_>>());
        let g = KernelRep::from(ClosedForm::Lip { scale: 1.0 }).gram_on(&pts).unwrap();
        prop_assert_eq!(FeatureMap::identity_factorization(&g).unwrap().recompose(), g);
    }

    #[test]
    fn non_tpsd_grams_do_not_factorize(g in any_symmetric()) {
        if is_tpsd_pairwise(&g, 1e-9).unwrap().is_some() {
            prop_assert!(factorize(&g).is_err());
            prop_assert!(decompose_phi_b0(&g).is_err());
        }
    }
}

fn grid(xs: &[f64]) -> Arc<PointSet> {
    Arc::new(PointSet::from_scalars(xs).unwrap())
}

proptest! {
    #[test]
    fn closed_form_kernels_are_tpsd_on_random_grids(xs in proptest::collection::btree_set(-20i32..=20, 1..8), scale in 0.1f64..3.0) {
        let pts = grid(&xs.iter().map(|&x| x as f64 / 4.0).collect::<Vec<_>>());
        let kernels: Vec<KernelRep> = vec![
            ClosedForm::Conv.into(),
            ClosedForm::Sconv { scale }.into(),
            ClosedForm::Lip { scale }.into(),
            ClosedForm::Dirac.into(),
            ClosedForm::PowerDistance { p: 1.5, scale }.into(),
        ];
        for k in kernels {
            let g = k.gram_on(&pts).unwrap();
            prop_assert_eq!(is_tpsd_pairwise(&g, 1e-9).unwrap(), None, "{:?}", k);
        }
    }

    /// `b = log|k|` for a Hilbertian kernel `k(x,y) = <x,y>` with a
    /// Cauchy–Schwarz inequality in the classical sense.
    #[test]
    fn log_abs_of_gram_matrices_is_tpsd(vs in proptest::collection::vec(proptest::collection::vec(-3i32..=3, 2), 1..6)) {
        let n = vs.len();
        let g = Matrix::from_fn(n, n, |i, j| {
            let k: i32 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
            if k == 0 { ExtReal::NEG_INF } else { ExtReal::from_f64((k.abs() as f64).ln()) }
        });
        prop_assert_eq!(is_tpsd_pairwise(&g, 1e-9).unwrap(), None);
    }

    #[test]
    fn sconv_is_monge(xs in proptest::collection::btree_set(-20i32..=20, 2..8)) {
        let pts = grid(&xs.iter().map(|&x| x as f64).collect::<Vec<_>>());
        let g = KernelRep::from(ClosedForm::Sconv { scale: 1.0 }).gram_on(&pts).unwrap();
        prop_assert_eq!(monge_violation(&g, 1e-9), None);
    }
}

#[test]
fn bipartite_example() {
    let g = Matrix::from_f64_rows(&[
        vec![0.0, -1.0, 0.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, -1.0, -1.0],
        vec![0.0, 0.0, -1.0, 0.0, -1.0],
        vec![0.0, 0.0, -1.0, -1.0, 0.0],
    ])
    .unwrap();
    assert_eq!(is_tpsd_pairwise(&g, 1e-9).unwrap(), None);
    assert!(permutation_oracle(&g));
    assert_eq!(factorize(&g).unwrap().recompose(), g);
}

#[test]
fn permutation_bound_is_enforced() {
    let g = Matrix::filled(9, 9, ExtReal::ZERO);
    assert!(check_permutation_positivity(&g, 9, 1e-9).is_err());
    assert!(check_permutation_positivity(&g, 8, 1e-9).unwrap().is_none());
}
