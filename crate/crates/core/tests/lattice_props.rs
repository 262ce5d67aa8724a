use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use torusdecay_core::lattice::matrix::{int_det, int_identity, int_mul, int_to_rat, rat_identity, rat_mul, transpose, IntMatrix};
use torusdecay_core::lattice::{
    complete_basis, dual_basis, lattice_points_in_subspace, saturate, smith_normal_form, LatticeBasis, Sublattice,
};

fn big(rows: &[Vec<i64>]) -> IntMatrix {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

/// Product of elementary row operations, recorded as (target, source, factor, swap).
fn unimodular(n: usize, ops: &[(usize, usize, i64, bool)]) -> IntMatrix {
    let mut m = int_identity(n);
    for &(i, j, f, swap) in ops {
        let (i, j) = (i % n, j % n);
        if i == j {
            if swap {
                m[i].iter_mut().for_each(|x| *x = -x.clone());
            }
            continue;
        }
        if swap {
            m.swap(i, j);
        } else {
            let src = m[j].clone();
            for (x, y) in m[i].iter_mut().zip(&src) {
                *x += BigInt::from(f) * y;
            }
        }
    }
    m
}

fn ops() -> impl Strategy<Value = Vec<(usize, usize, i64, bool)>> {
    prop::collection::vec((0usize..4, 0usize..4, -3i64..=3, any::<bool>()), 0..12)
}

fn lattice_basis() -> impl Strategy<Value = LatticeBasis> {
    (1usize..=4, prop::collection::vec(-5i64..=5, 16)).prop_filter_map("singular", |(n, e)| {
        let rows: Vec<Vec<i64>> = (0..n).map(|i| e[i * n..(i + 1) * n].to_vec()).collect();
        LatticeBasis::from_integers(&rows).ok()
    })
}

fn is_unimodular(m: &IntMatrix) -> bool {
    int_det(m).abs().is_one()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dual_of_dual_is_identity(b in lattice_basis()) {
        let d = dual_basis(&b);
        let dd = dual_basis(&d);
        prop_assert_eq!(dd.rows(), b.rows());
        let pairing = rat_mul(b.rows(), &transpose(d.rows()));
        prop_assert_eq!(pairing, rat_identity(b.dim()));
    }

    #[test]
    fn saturated_completion_keeps_generators(n in 1usize..=4, k in 0usize..=4, ops in ops()) {
        let k = k.min(n);
        let u = unimodular(n, &ops);
        let gens = u[..k].to_vec();
        let sub = Sublattice::new(LatticeBasis::identity(n), gens.clone()).unwrap();
        prop_assert!(sub.is_saturated());
        let (basis, record) = complete_basis(&sub).unwrap();
        prop_assert!(is_unimodular(&record.matrix));
        prop_assert_eq!(&record.matrix[..k], &gens[..]);
        prop_assert_eq!(int_mul(&record.matrix, &record.inverse), int_identity(n));
        prop_assert!(basis.same_lattice(&LatticeBasis::identity(n)));
    }

    #[test]
    fn scaled_generators_are_rejected(n in 1usize..=4, k in 1usize..=4, ops in ops(), factor in 2i64..=5) {
        let k = k.min(n);
        let u = unimodular(n, &ops);
        let mut gens = u[..k].to_vec();
        gens[0].iter_mut().for_each(|x| *x *= factor);
        let sub = Sublattice::new(LatticeBasis::identity(n), gens).unwrap();
        prop_assert!(!sub.is_saturated());
        prop_assert!(complete_basis(&sub).is_err());
        let hull = saturate(&sub);
        prop_assert!(hull.is_saturated());
        let again = saturate(&hull);
        prop_assert_eq!(again.generators(), hull.generators());
        prop_assert!(complete_basis(&hull).is_ok());
    }

    #[test]
    fn smith_form_reconstructs(r in 1usize..=4, c in 1usize..=4, e in prop::collection::vec(-20i64..=20, 16)) {
        let m: IntMatrix = big(&(0..r).map(|i| e[i * c..(i + 1) * c].to_vec()).collect::<Vec<_>>());
        let s = smith_normal_form(&m);
        prop_assert_eq!(int_mul(&int_mul(&s.u, &s.d), &s.v), m);
        prop_assert!(is_unimodular(&s.u) && is_unimodular(&s.v));
        prop_assert_eq!(int_mul(&s.u, &s.u_inv), int_identity(r));
        prop_assert_eq!(int_mul(&s.v, &s.v_inv), int_identity(c));
        for i in 0..r {
            for j in 0..c {
                prop_assert!(i == j || s.d[i][j].is_zero());
            }
        }
        let f = s.invariant_factors();
        prop_assert!(f.iter().all(|x| x.is_positive()));
        prop_assert!(f.windows(2).all(|w| (&w[1] % &w[0]).is_zero()));
    }

    #[test]
    fn lattice_points_lie_in_subspace(b in lattice_basis(), v in prop::collection::vec(-4i64..=4, 4)) {
        let n = b.dim();
        let dir: Vec<_> = v[..n].iter().map(|&x| torusdecay_core::rational::rat(x)).collect();
        let sub = lattice_points_in_subspace(&b, &[dir.clone()]).unwrap();
        let zero = dir.iter().all(|x| x.is_zero());
        prop_assert_eq!(sub.rank(), if zero { 0 } else { 1 });
        prop_assert!(sub.is_saturated());
        for w in sub.vectors() {
            // parallel to dir
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(&w[i] * &dir[j], &w[j] * &dir[i]);
                }
            }
        }
    }
}

#[test]
fn worked_examples() {
    let d = dual_basis(&LatticeBasis::from_integers(&[vec![1, 1], vec![0, 1]]).unwrap());
    assert_eq!(d.rows(), &int_to_rat(&big(&[vec![1, 0], vec![-1, 1]])));
    let sub = Sublattice::new(LatticeBasis::identity(2), big(&[vec![2, 0]])).unwrap();
    assert_eq!(saturate(&sub).generators(), &big(&[vec![1, 0]]));
    let s = smith_normal_form(&big(&[vec![2, 0], vec![0, 3]]));
    assert_eq!(s.invariant_factors(), vec![BigInt::from(1), BigInt::from(6)]);
}
