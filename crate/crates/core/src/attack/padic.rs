//! Common integer roots of two bivariate polynomials by lifting common
//! roots modulo a small prime.
//!
//! Much cheaper than a resultant, and used to screen many candidate pairs.
//! It misses a root whose Jacobian is singular modulo every screening
//! prime, so it is a filter, not a decision procedure. Every root it
//! returns is checked exactly over the integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::poly::BiPoly;
use crate::rsa::mod_inverse;

/// Screening primes, tried in order until one yields a root.
pub const SCREEN_PRIMES: [u64; 4] = [53, 59, 61, 67];

/// Gives up on a prime when the curves share this many points mod `p`
/// per unit of `p`, which signals a common factor modulo `p`.
const MAX_ROOTS_PER_P: u64 = 2;

type Terms = Vec<(u32, u32, BigInt)>;

fn terms_of(p: &BiPoly) -> Terms {
    p.terms().iter().map(|(&(a, b), c)| (a, b, c.clone())).collect()
}

/// Values of the polynomial and both partial derivatives at `(x, y)` mod `m`.
fn eval_grad(t: &Terms, x: &BigInt, y: &BigInt, m: &BigInt) -> (BigInt, BigInt, BigInt) {
    let dx = t.iter().map(|e| e.0).max().unwrap_or(0) as usize;
    let dy = t.iter().map(|e| e.1).max().unwrap_or(0) as usize;
    let pw = |base: &BigInt, d: usize| {
        let mut v = vec![BigInt::one()];
        for i in 1..=d {
            let next = (&v[i - 1] * base).mod_floor(m);
            v.push(next);
        }
        v
    };
    let (xp, yp) = (pw(x, dx), pw(y, dy));
    let (mut v, mut vx, mut vy) = (BigInt::zero(), BigInt::zero(), BigInt::zero());
    for (a, b, c) in t {
        let (a, b) = (*a as usize, *b as usize);
        let c = c.mod_floor(m);
        v += &c * &xp[a] * &yp[b];
        if a > 0 {
            vx += &c * a * &xp[a - 1] * &yp[b];
        }
        if b > 0 {
            vy += &c * b * &xp[a] * &yp[b - 1];
        }
    }
    (v.mod_floor(m), vx.mod_floor(m), vy.mod_floor(m))
}

/// Common zeros of `g` and `h` in `F_p^2`, or `None` if there are too many.
fn roots_mod_p(g: &Terms, h: &Terms, p: u64) -> Option<Vec<(u64, u64)>> {
    let red = |t: &Terms| -> Vec<(usize, usize, u64)> {
        let pb = BigInt::from(p);
        t.iter()
            .map(|(a, b, c)| (*a as usize, *b as usize, u64::try_from(c.mod_floor(&pb)).unwrap()))
            .filter(|e| e.2 != 0)
            .collect()
    };
    let (gr, hr) = (red(g), red(h));
    if gr.is_empty() || hr.is_empty() {
        return None;
    }
    let d = g.iter().chain(h).map(|e| e.0.max(e.1)).max().unwrap_or(0) as usize;
    // pow[v][k] = v^k mod p
    let pow: Vec<Vec<u64>> = (0..p)
        .map(|v| {
            let mut row = vec![1u64; d + 1];
            for k in 1..=d {
                row[k] = row[k - 1] * v % p;
            }
            row
        })
        .collect();
    let ev = |t: &[(usize, usize, u64)], x: usize, y: usize| {
        t.iter()
            .fold(0u64, |acc, &(a, b, c)| (acc + c * pow[x][a] % p * pow[y][b]) % p)
    };
    let mut out = Vec::new();
    for x in 0..p as usize {
        for y in 0..p as usize {
            if ev(&gr, x, y) == 0 && ev(&hr, x, y) == 0 {
                out.push((x as u64, y as u64));
                if out.len() as u64 > MAX_ROOTS_PER_P * p {
                    return None;
                }
            }
        }
    }
    Some(out)
}

/// Newton lifting of a nonsingular common root mod `p` until the modulus
/// exceeds `bound`. Returns the lifted root in `[0, modulus)`.
fn lift(g: &Terms, h: &Terms, x: u64, y: u64, p: u64, bound: &BigInt) -> Option<(BigInt, BigInt)> {
    let mut m = BigInt::from(p);
    let (mut x, mut y) = (BigInt::from(x), BigInt::from(y));
    let (_, gx, gy) = eval_grad(g, &x, &y, &m);
    let (_, hx, hy) = eval_grad(h, &x, &y, &m);
    if (&gx * &hy - &gy * &hx).mod_floor(&m).is_zero() {
        return None;
    }
    while &m <= bound {
        m = &m * &m;
        let (gv, gx, gy) = eval_grad(g, &x, &y, &m);
        let (hv, hx, hy) = eval_grad(h, &x, &y, &m);
        let det = (&gx * &hy - &gy * &hx).mod_floor(&m);
        let inv = mod_inverse(&det, &m)?;
        // J^{-1} = inv * [[hy, -gy], [-hx, gx]]
        let dx = (&inv * (&hy * &gv - &gy * &hv)).mod_floor(&m);
        let dy = (&inv * (&gx * &hv - &hx * &gv)).mod_floor(&m);
        x = (x - dx).mod_floor(&m);
        y = (y - dy).mod_floor(&m);
    }
    Some((x, y))
}

/// Integer common roots with `0 < x <= x_bound`, `0 < y <= y_bound`, found
/// by lifting from the first screening prime that produces any.
pub fn common_roots_padic(g: &BiPoly, h: &BiPoly, x_bound: &BigInt, y_bound: &BigInt) -> Vec<(BigInt, BigInt)> {
    if g.is_zero() || h.is_zero() || !x_bound.is_positive() || !y_bound.is_positive() {
        return Vec::new();
    }
    let (gt, ht) = (terms_of(g), terms_of(h));
    let bound = x_bound.max(y_bound);
    for p in SCREEN_PRIMES {
        let Some(cands) = roots_mod_p(&gt, &ht, p) else {
            continue;
        };
        let mut found: Vec<(BigInt, BigInt)> = cands
            .into_iter()
            .filter_map(|(x, y)| lift(&gt, &ht, x, y, p, bound))
            .filter(|(x, y)| {
                x.is_positive()
                    && x <= x_bound
                    && y.is_positive()
                    && y <= y_bound
                    && g.eval(x, y).is_zero()
                    && h.eval(x, y).is_zero()
            })
            .collect();
        if !found.is_empty() {
            found.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
            found.dedup();
            return found;
        }
    }
    Vec::new()
}

/// Divides out the largest monomial `x^a y^b` and the integer content, and
/// fixes the sign, so proportional polynomials compare equal.
pub fn normalize(p: &BiPoly) -> BiPoly {
    if p.is_zero() {
        return BiPoly::zero();
    }
    let a = p.terms().keys().map(|m| m.0).min().unwrap_or(0);
    let b = p.terms().keys().map(|m| m.1).min().unwrap_or(0);
    let content = p.terms().values().fold(BigInt::zero(), |g, c| g.gcd(c));
    let lead_neg = p.terms().values().next_back().is_some_and(|c| c.is_negative());
    let content = if lead_neg { -content } else { content };
    BiPoly::from_terms(p.terms().iter().map(|(&(i, j), c)| ((i - a, j - b), c / &content)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(terms: &[((u32, u32), i64)]) -> BiPoly {
        BiPoly::from_terms(terms.iter().map(|&(m, c)| (m, BigInt::from(c))))
    }

    #[test]
    fn lifts_a_large_common_root() {
        let x0 = BigInt::from(123_456_789_012_345i64);
        let y0 = BigInt::from(987_654_321_098i64);
        // g = (x - x0) + 3 (y - y0), h = (x - x0) y - 2 (y - y0) x
        let xm = &BiPoly::monomial(1, 0, BigInt::one()) - &BiPoly::constant(x0.clone());
        let ym = &BiPoly::monomial(0, 1, BigInt::one()) - &BiPoly::constant(y0.clone());
        let g = &xm + &ym.scale(&BigInt::from(3));
        let h = &xm.shift(0, 1) - &ym.shift(1, 0).scale(&BigInt::from(2));
        let bound = BigInt::one() << 60u32;
        assert_eq!(common_roots_padic(&g, &h, &bound, &bound), vec![(x0, y0)]);
    }

    #[test]
    fn no_roots_for_coprime_constants() {
        let g = bi(&[((1, 0), 1), ((0, 0), 1)]);
        let h = bi(&[((1, 0), 1), ((0, 0), 2)]);
        assert!(common_roots_padic(&g, &h, &BigInt::from(100), &BigInt::from(100)).is_empty());
    }

    #[test]
    fn normalize_proportional() {
        let a = bi(&[((2, 1), 6), ((1, 3), -4)]);
        let b = bi(&[((1, 0), -3), ((0, 2), 2)]);
        assert_eq!(normalize(&a), normalize(&b));
    }
}
