//! Algebraic and lattice invariants over random inputs.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use proptest::prelude::*;

use smallroots::focusgroup::usage_mask;
use smallroots::lattice::{
    check_lll_contract, gram_covolume, lll_reduce_with, IntMatrix, LovaszParam, Strategy as Reducer,
};
use smallroots::poly::{
    integer_roots_in_range, resultant_wrt_x, resultant_wrt_x_symbolic, squarefree_part, BiPoly, UniPoly,
};

fn bi(terms: &[((u32, u32), i64)]) -> BiPoly {
    BiPoly::from_terms(terms.iter().map(|&(m, c)| (m, BigInt::from(c))))
}

fn x_poly() -> impl Strategy<Value = BiPoly> {
    prop::collection::vec(((0u32..3, 0u32..3), -7i64..=7), 1..6)
        .prop_map(|t| bi(&t))
        .prop_filter("needs x", |p| p.degree_x().unwrap_or(0) > 0)
}

fn matrix(rows: usize, cols: usize, range: i64) -> impl Strategy<Value = IntMatrix> {
    prop::collection::vec(prop::collection::vec(-range..=range, cols), rows).prop_map(|r| {
        IntMatrix::from_rows(
            r.into_iter()
                .map(|v| v.into_iter().map(BigInt::from).collect())
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Products of `(y - r)^k` with repeated roots, optionally times a
    /// quadratic without real roots: exactly the distinct planted roots
    /// inside the range come back.
    #[test]
    fn planted_roots_are_recovered(
        planted in prop::collection::vec((-50i64..=50, 1u32..=3), 1..5),
        quad in prop::option::of(1i64..30),
        scale in 1i64..5,
        lo in -60i64..=-50, hi in 50i64..=60,
    ) {
        let mut u = UniPoly::constant(BigInt::from(scale));
        for &(r, k) in &planted {
            u = &u * &UniPoly::linear_root(&BigInt::from(r)).pow(k);
        }
        if let Some(c) = quad {
            u = &u * &UniPoly::from_i64(&[c, 0, 1]);
        }
        let want: BTreeSet<BigInt> = planted.iter().map(|&(r, _)| BigInt::from(r)).collect();
        let got = integer_roots_in_range(&u, &BigInt::from(lo), &BigInt::from(hi)).unwrap();
        prop_assert_eq!(got, want.clone());
        let sf = squarefree_part(&u).unwrap();
        prop_assert_eq!(sf.degree().unwrap(), want.len() + if quad.is_some() { 2 } else { 0 });
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// `Res_x(a b, c) = Res_x(a, c) Res_x(b, c)`.
    #[test]
    fn resultant_is_multiplicative(a in x_poly(), b in x_poly(), c in x_poly()) {
        let ab = &a * &b;
        let lhs = resultant_wrt_x(&ab, &c).unwrap();
        let rhs = &resultant_wrt_x(&a, &c).unwrap() * &resultant_wrt_x(&b, &c).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn resultant_routes_agree(a in x_poly(), b in x_poly()) {
        prop_assert_eq!(resultant_wrt_x(&a, &b).unwrap(), resultant_wrt_x_symbolic(&a, &b).unwrap());
    }

    /// Swapping the arguments changes the sign by `(-1)^(deg a * deg b)`.
    #[test]
    fn resultant_antisymmetry(a in x_poly(), b in x_poly()) {
        let (da, db) = (a.degree_x().unwrap(), b.degree_x().unwrap());
        let r1 = resultant_wrt_x(&a, &b).unwrap();
        let r2 = resultant_wrt_x(&b, &a).unwrap();
        if (da * db) % 2 == 0 {
            prop_assert_eq!(r1, r2);
        } else {
            prop_assert_eq!(r1, r2.scale(&BigInt::from(-1)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn lll_contract_holds(
        b in (2usize..6).prop_flat_map(|n| (Just(n), n..n + 3)).prop_flat_map(|(n, m)| matrix(n, m, 60)),
        accelerated in any::<bool>(),
        dnum in 26i64..99,
    ) {
        let delta = LovaszParam::new(dnum, 100).unwrap();
        let Ok(g) = gram_covolume(&b) else { return Ok(()) };
        let strategy = if accelerated { Reducer::Accelerated } else { Reducer::Exact };
        let red = lll_reduce_with(&b, delta, strategy).unwrap();
        prop_assert_eq!(red.transform.mul(&b).unwrap(), red.reduced.clone());
        prop_assert!(red.transform.det().unwrap().abs().is_one());
        prop_assert_eq!(gram_covolume(&red.reduced).unwrap(), g.clone());
        prop_assert_eq!(red.gram_det.clone(), g);
        prop_assert!(check_lll_contract(&red.reduced, delta).unwrap().is_empty());
    }

    /// Wide-range entries push the float pass through its extended exponents.
    #[test]
    fn lll_contract_holds_on_skewed_scales(
        b in matrix(5, 7, 1000),
        shifts in prop::collection::vec(0u32..400, 7),
    ) {
        let rows: Vec<Vec<BigInt>> = b
            .row_vecs()
            .into_iter()
            .map(|r| r.into_iter().zip(&shifts).map(|(v, s)| v << *s).collect())
            .collect();
        let b = IntMatrix::from_rows(rows).unwrap();
        let Ok(g) = gram_covolume(&b) else { return Ok(()) };
        let red = lll_reduce_with(&b, LovaszParam::default(), Reducer::Accelerated).unwrap();
        prop_assert_eq!(red.transform.mul(&b).unwrap(), red.reduced.clone());
        prop_assert!(red.transform.det().unwrap().abs().is_one());
        prop_assert_eq!(red.gram_det, g);
        prop_assert!(check_lll_contract(&red.reduced, LovaszParam::default()).unwrap().is_empty());
    }

    /// A column used with shortlist `s` stays used with `s + 1`, and a full
    /// shortlist uses every column of a unimodular transform.
    #[test]
    fn usage_mask_is_monotone(b in matrix(5, 6, 40)) {
        let Ok(_) = gram_covolume(&b) else { return Ok(()) };
        let red = lll_reduce_with(&b, LovaszParam::default(), Reducer::Exact).unwrap();
        let mut prev = usage_mask(&red, 1).unwrap();
        for s in 2..=5 {
            let cur = usage_mask(&red, s).unwrap();
            prop_assert!(prev.used.iter().zip(&cur.used).all(|(p, c)| !p || *c));
            prev = cur;
        }
        prop_assert!(prev.used.iter().all(|u| *u));
        prop_assert!(usage_mask(&red, 0).is_err() && usage_mask(&red, 6).is_err());
    }
}

#[test]
fn squarefree_of_zero_is_an_error() {
    assert!(squarefree_part(&UniPoly::zero()).is_err());
    assert!(!squarefree_part(&UniPoly::constant(BigInt::one())).unwrap().is_zero());
}
