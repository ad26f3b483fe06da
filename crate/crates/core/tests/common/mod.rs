//! Independent reference computations shared by the integration tests.
//! Deliberately naive: nothing here calls back into the library's algorithms.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Zero};
use smallroots::poly::BiPoly;

/// Sum of `c x^a y^b` over the terms, powers by repeated multiplication.
pub fn naive_eval(terms: &[((u32, u32), BigInt)], x: &BigInt, y: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for ((a, b), c) in terms {
        let mut t = c.clone();
        for _ in 0..*a {
            t *= x;
        }
        for _ in 0..*b {
            t *= y;
        }
        acc += t;
    }
    acc
}

/// Determinant by first-row cofactor expansion.
pub fn cofactor_det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = BigInt::zero();
    for col in 0..n {
        if m[0][col].is_zero() {
            continue;
        }
        let minor: Vec<Vec<BigInt>> = m[1..]
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let term = &m[0][col] * cofactor_det(&minor);
        if col % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Coefficients of `p(x, y0)` in x, highest first, padded to formal degree `deg`.
pub fn x_coeffs_at(p: &BiPoly, y0: &BigInt, deg: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::zero(); deg + 1];
    for (&(a, b), v) in p.terms() {
        let mut t = v.clone();
        for _ in 0..b {
            t *= y0;
        }
        c[deg - a as usize] += t;
    }
    c
}

/// Sylvester determinant of two coefficient lists (highest first).
pub fn sylvester_det(a: &[BigInt], b: &[BigInt]) -> BigInt {
    let (da, db) = (a.len() - 1, b.len() - 1);
    let size = da + db;
    let mut m = vec![vec![BigInt::zero(); size]; size];
    for r in 0..db {
        for (k, v) in a.iter().enumerate() {
            m[r][r + k] = v.clone();
        }
    }
    for r in 0..da {
        for (k, v) in b.iter().enumerate() {
            m[db + r][r + k] = v.clone();
        }
    }
    cofactor_det(&m)
}

/// `log2(v)` for `v > 0` from the top 64 bits.
pub fn log2_top_bits(v: &BigInt) -> f64 {
    let bits = v.bits();
    let shift = bits.saturating_sub(64);
    let top: BigInt = v >> shift;
    let top = u64::try_from(top).unwrap() as f64;
    top.log2() + shift as f64
}

pub fn big(s: &str) -> BigInt {
    s.parse().unwrap()
}

/// The fixed 1000-bit regression vector.
pub const A7_P: &str = "3275342483750763170836416113765340562643588112609761114547434695798746536505772662113665850268902708021591050748320984215116927258714434174724054953133";
pub const A7_Q: &str = "3274627040723602338317230751036268460667466921902981431451540870051807157329841903588175940574499055891631204240474172883400239374471379393571624577657";
pub const A7_D: &str = "3001470771525654711865177134747043741463302871182505379927435326735028048350149451";
