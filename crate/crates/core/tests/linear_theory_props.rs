use std::sync::Arc;

use proptest::prelude::*;
use tropkern::linear_theory::{
    closure_cg, is_idempotent, is_lipschitz_member, max_kernel_cg, residuated_candidate, von_neumann_regular,
    FunctionFamily,
};
use tropkern::{ExtReal, GridFunction, Matrix, PointSet};

fn points(n: usize) -> Arc<PointSet> {
    Arc::new(PointSet::from_scalars(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap())
}

fn member(n: usize) -> impl Strategy<Value = Vec<ExtReal>> {
    proptest::collection::vec(prop_oneof![1 => Just(ExtReal::INF), 6 => (-4i32..=4).prop_map(ExtReal::from)], n)
        .prop_map(|mut v| {
            v[0] = ExtReal::ZERO;
            v
        })
}

fn any_value() -> impl Strategy<Value = ExtReal> {
    prop_oneof![
        1 => Just(ExtReal::NEG_INF),
        1 => Just(ExtReal::INF),
        6 => (-4i32..=4).prop_map(ExtReal::from),
    ]
}

#[derive(Debug)]
struct Family {
    fam: FunctionFamily,
    f: GridFunction,
    g: GridFunction,
}

fn family() -> impl Strategy<Value = Family> {
    (1usize..=5).prop_flat_map(|n| {
        (
            proptest::collection::vec(member(n), 1..=3),
            proptest::collection::vec(any_value(), n),
            proptest::collection::vec(any_value(), n),
        )
            .prop_map(move |(ms, f, g)| {
                let d = points(n);
                Family {
                    fam: FunctionFamily::new(d.clone(), ms.into_iter().map(|v| GridFunction::new(d.clone(), v).unwrap()).collect())
                        .unwrap(),
                    f: GridFunction::new(d.clone(), f).unwrap(),
                    g: GridFunction::new(d, g).unwrap(),
                }
            })
    })
}

fn small_matrix(n: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(prop_oneof![1 => Just(ExtReal::NEG_INF), 4 => (-3i32..=2).prop_map(ExtReal::from)], n * n)
        .prop_map(move |v| Matrix::from_fn(n, n, |i, j| v[i * n + j]))
}

proptest! {
    #[test]
    fn members_are_reproduced(c in family()) {
        let cg = max_kernel_cg(&c.fam);
        for g in c.fam.members() {
            prop_assert!(is_lipschitz_member(&cg, g).unwrap());
            prop_assert_eq!(closure_cg(&cg, g).unwrap(), g.clone());
        }
        for x in 0..cg.rows() {
            prop_assert!(cg.get(x, x) >= ExtReal::ZERO);
        }
    }

    #[test]
    fn cg_is_idempotent(c in family()) {
        let cg = max_kernel_cg(&c.fam);
        prop_assert!(is_idempotent(&cg, 0.0).unwrap());
    }

    /// Any kernel under which every member is Lipschitz lies below `c_G`.
    #[test]
    fn cg_is_maximal(c in family(), k in (1usize..=5).prop_flat_map(small_matrix)) {
        let cg = max_kernel_cg(&c.fam);
        if k.rows() != cg.rows() {
            return Ok(());
        }
        if c.fam.members().iter().all(|g| is_lipschitz_member(&k, g).unwrap()) {
            prop_assert!(k.approx_le(&cg, 0.0));
        }
    }

    #[test]
    fn closure_laws(c in family()) {
        let cg = max_kernel_cg(&c.fam);
        let cf = closure_cg(&cg, &c.f).unwrap();
        prop_assert!(c.f.approx_le(&cf, 0.0));
        prop_assert_eq!(closure_cg(&cg, &cf).unwrap(), cf.clone());
        let lo = c.f.zip_with(&c.g, |a, b| a.min(b)).unwrap();
        prop_assert!(closure_cg(&cg, &lo).unwrap().approx_le(&cf, 0.0));
        // inf-stability: the pointwise min of two fixed points is fixed
        let cgg = closure_cg(&cg, &c.g).unwrap();
        let meet = cf.zip_with(&cgg, |a, b| a.min(b)).unwrap();
        prop_assert_eq!(closure_cg(&cg, &meet).unwrap(), meet);
    }

    #[test]
    fn lipschitz_iff_fixed_point(c in family()) {
        let cg = max_kernel_cg(&c.fam);
        let fixed = closure_cg(&cg, &c.f).unwrap() == c.f;
        prop_assert_eq!(is_lipschitz_member(&cg, &c.f).unwrap(), fixed);
    }

    #[test]
    fn residuated_candidate_is_a_subsolution(b in (1usize..=4).prop_flat_map(small_matrix)) {
        let a = residuated_candidate(&b).unwrap();
        let p = b.maxplus_mul(&a).unwrap().maxplus_mul(&b).unwrap();
        prop_assert!(p.approx_le(&b, 0.0));
        let reg = von_neumann_regular(&b, 0.0).unwrap();
        prop_assert_eq!(reg.regular, p == b);
    }

    #[test]
    fn idempotents_and_their_stars_are_regular(m in (1usize..=5).prop_flat_map(small_matrix)) {
        let n = m.rows();
        let mut star = m.zip_with(&Matrix::identity(n), |a, b| a.max(b)).unwrap().map(|v| v.min(ExtReal::ZERO));
        loop {
            let sq = star.maxplus_mul(&star).unwrap();
            if sq == star {
                break;
            }
            star = sq;
        }
        prop_assert!(is_idempotent(&star, 0.0).unwrap());
        prop_assert!(von_neumann_regular(&star, 0.0).unwrap().regular);
    }

    /// Regular matrices stay regular under permutation similarity.
    #[test]
    fn regularity_is_permutation_invariant(b in small_matrix(3), perm in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let pb = b.select(&perm, &perm);
        prop_assert_eq!(
            von_neumann_regular(&b, 0.0).unwrap().regular,
            von_neumann_regular(&pb, 0.0).unwrap().regular
        );
    }
}

#[test]
fn conv_gram_is_neither_idempotent_nor_regular() {
    let b = Matrix::from_f64_rows(&[vec![1.0, 0.0, -1.0], vec![0.0, 0.0, 0.0], vec![-1.0, 0.0, 1.0]]).unwrap();
    assert!(!is_idempotent(&b, 0.0).unwrap());
    assert!(!von_neumann_regular(&b, 0.0).unwrap().regular);
}

#[test]
fn families_reject_improper_members() {
    let d = points(2);
    let bad = GridFunction::new(d.clone(), vec![ExtReal::NEG_INF, ExtReal::ZERO]).unwrap();
    assert!(FunctionFamily::new(d.clone(), vec![bad]).is_err());
    let top = GridFunction::new(d.clone(), vec![ExtReal::INF; 2]).unwrap();
    assert!(FunctionFamily::new(d.clone(), vec![top]).is_err());
    assert!(FunctionFamily::new(d, vec![]).is_err());
}
