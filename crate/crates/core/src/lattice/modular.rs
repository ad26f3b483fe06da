//! Determinants by reduction modulo many word-sized primes and Chinese
//! remaindering.
//!
//! Fraction-free elimination spends almost all its time dividing numbers of
//! hundreds of thousands of bits. Here every prime costs one cheap
//! elimination over `u64`, and the number of primes follows from Hadamard's
//! bound, so the result is exact.

use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::matrix::IntMatrix;
use crate::error::{Error, Result};

/// Montgomery arithmetic modulo an odd `p < 2^63`, with `R = 2^64`.
#[derive(Clone, Copy, Debug)]
struct Mont {
    p: u64,
    /// `-p^{-1} mod 2^64`
    pneg_inv: u64,
    /// `R^2 mod p`
    r2: u64,
}

impl Mont {
    fn new(p: u64) -> Self {
        debug_assert!(p % 2 == 1 && p < 1 << 63);
        let mut inv = p;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r1 = ((1u128 << 64) % p as u128) as u64;
        let r2 = ((r1 as u128 * r1 as u128) % p as u128) as u64;
        Mont {
            p,
            pneg_inv: inv.wrapping_neg(),
            r2,
        }
    }

    #[inline]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.pneg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn enter(&self, a: u64) -> u64 {
        self.mul(a, self.r2)
    }

    fn leave(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    fn pow(&self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = self.enter(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Plain residue of `|v|`.
    fn reduce(&self, v: &BigUint) -> u64 {
        let mut r = 0u64;
        for limb in v.iter_u64_digits().rev() {
            // r * 2^64 + limb
            r = self.add(self.mul(r, self.r2), limb % self.p);
        }
        r
    }

    /// Montgomery form of `v mod p`.
    fn residue(&self, v: &BigInt) -> u64 {
        let r = self.enter(self.reduce(v.magnitude()));
        if v.sign() == Sign::Minus {
            self.sub(0, r)
        } else {
            r
        }
    }
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, p);
        }
        b = mulmod(b, b, p);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit inputs.
fn is_prime_u64(n: u64) -> bool {
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in SMALL {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes just below `2^62`, in descending order, grown on demand.
static PRIMES: Mutex<Vec<u64>> = Mutex::new(Vec::new());

/// Enough primes that their product exceeds `2^bits`.
fn primes_covering(bits: f64) -> Vec<u64> {
    // every prime is above 2^61.99
    let need = (bits / 61.99).ceil() as usize + 1;
    let mut cache = PRIMES.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = cache.last().copied().unwrap_or((1 << 62) + 1);
    while cache.len() < need {
        c -= 2;
        if is_prime_u64(c) {
            cache.push(c);
        }
    }
    cache[..need].to_vec()
}

/// Determinant mod `p` of a matrix already in Montgomery form; destroys `a`.
fn det_mod(a: &mut [Vec<u64>], m: &Mont) -> u64 {
    let n = a.len();
    let mut det = m.enter(1);
    for k in 0..n {
        let Some(piv) = (k..n).find(|&r| a[r][k] != 0) else {
            return 0;
        };
        if piv != k {
            a.swap(piv, k);
            det = m.sub(0, det);
        }
        det = m.mul(det, a[k][k]);
        let inv = m.pow(a[k][k], m.p - 2);
        let (top, rest) = a.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in rest.iter_mut() {
            if row[k] == 0 {
                continue;
            }
            let f = m.mul(row[k], inv);
            for j in k + 1..n {
                row[j] = m.sub(row[j], m.mul(f, pivot_row[j]));
            }
        }
    }
    m.leave(det)
}

/// Chinese remaindering into the symmetric range, for several values
/// sharing one list of primes. `residues[v][k]` is value `v` mod `primes[k]`.
fn crt_many(primes: &[u64], residues: &[Vec<u64>]) -> Vec<BigInt> {
    // Garner constants: prefix products and their inverses mod the next prime
    let mut prefix = Vec::with_capacity(primes.len());
    let mut inv = Vec::with_capacity(primes.len());
    let mut modulus = BigUint::one();
    for &p in primes {
        let m = Mont::new(p);
        inv.push(m.pow(m.enter(m.reduce(&modulus)), p - 2));
        prefix.push(modulus.clone());
        modulus *= p;
    }
    let half = &modulus >> 1u32;
    residues
        .iter()
        .map(|rs| {
            let mut x = BigUint::zero();
            for (k, &p) in primes.iter().enumerate() {
                let m = Mont::new(p);
                // t = (r - x) / M_k mod p
                let diff = m.enter(m.sub(rs[k], m.reduce(&x)));
                let t = m.leave(m.mul(diff, inv[k]));
                x += &prefix[k] * t;
            }
            if x > half {
                BigInt::from(x) - BigInt::from(modulus.clone())
            } else {
                BigInt::from(x)
            }
        })
        .collect()
}

fn crt(primes: &[u64], residues: Vec<u64>) -> BigInt {
    crt_many(primes, &[residues]).pop().unwrap_or_default()
}

fn log2_norm(row: &[BigInt]) -> f64 {
    let sq: BigInt = row.iter().map(|v| v * v).sum();
    if sq.is_zero() {
        return 0.0;
    }
    super::log2_big(&sq) / 2.0
}

/// Exact determinant of a square matrix.
pub(crate) fn det(a: &IntMatrix) -> BigInt {
    let n = a.rows();
    // Hadamard, plus a bit for the sign and a little float slack
    let bound: f64 = (0..n).map(|i| log2_norm(a.row(i))).sum::<f64>() + 2.0;
    let primes = primes_covering(bound);
    let residues = primes
        .iter()
        .map(|&p| {
            let m = Mont::new(p);
            let mut red: Vec<Vec<u64>> = (0..n)
                .map(|i| a.row(i).iter().map(|v| m.residue(v)).collect())
                .collect();
            det_mod(&mut red, &m)
        })
        .collect();
    crt(&primes, residues)
}

/// `det(B B^T)` with row contents pulled out first, since basis rows often
/// share large factors.
pub(crate) fn gram_det(b: &IntMatrix) -> Result<BigInt> {
    let n = b.rows();
    let mut content_sq = BigInt::one();
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let g = b.row(i).iter().fold(BigInt::zero(), |g, v| g.gcd(v));
        if g.is_zero() {
            return Err(Error::DependentRows);
        }
        content_sq *= &g * &g;
        rows.push(b.row(i).iter().map(|v| v / &g).collect());
    }
    // PSD Gram matrix: det <= prod |b_i|^2
    let bound: f64 = rows.iter().map(|r| 2.0 * log2_norm(r)).sum::<f64>() + 2.0;
    let primes = primes_covering(bound);
    let mut residues = Vec::with_capacity(primes.len());
    for &p in &primes {
        let m = Mont::new(p);
        let red: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|v| m.residue(v)).collect()).collect();
        let mut g = vec![vec![0u64; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut acc = 0u64;
                for (&x, &y) in red[i].iter().zip(&red[j]) {
                    if x != 0 && y != 0 {
                        acc = m.add(acc, m.mul(x, y));
                    }
                }
                g[i][j] = acc;
                g[j][i] = acc;
            }
        }
        residues.push(det_mod(&mut g, &m));
    }
    Ok(crt(&primes, residues) * content_sq)
}

/// Determinants of a square matrix of polynomials in `y` (coefficient
/// vectors, constant term first) at `y = 0, 1, ..., points - 1`.
///
/// Each coefficient is reduced once per prime; evaluation and elimination
/// then stay in machine words.
pub(crate) fn poly_matrix_dets(m: &[Vec<Vec<BigInt>>], points: usize) -> Vec<BigInt> {
    let n = m.len();
    if n == 0 || points == 0 {
        return vec![BigInt::one(); points];
    }
    // |entry(y)| <= sum |c_k| ymax^k for every sampled y, then Hadamard
    let ymax = BigInt::from(points - 1);
    let bound: f64 = m
        .iter()
        .map(|row| {
            let sq: BigInt = row
                .iter()
                .map(|e| {
                    let v = e.iter().rev().fold(BigInt::zero(), |acc, c| acc * &ymax + c.abs());
                    &v * &v
                })
                .sum();
            if sq.is_zero() {
                0.0
            } else {
                super::log2_big(&sq) / 2.0
            }
        })
        .sum::<f64>()
        + 2.0;
    let primes = primes_covering(bound);
    let mut residues = vec![Vec::with_capacity(primes.len()); points];
    for &p in &primes {
        let mo = Mont::new(p);
        let red: Vec<Vec<Vec<u64>>> = m
            .iter()
            .map(|row| row.iter().map(|e| e.iter().map(|c| mo.residue(c)).collect()).collect())
            .collect();
        let mut scratch = vec![vec![0u64; n]; n];
        for (k, out) in residues.iter_mut().enumerate() {
            let y = mo.enter(k as u64 % p);
            for (srow, rrow) in scratch.iter_mut().zip(&red) {
                for (s, coeffs) in srow.iter_mut().zip(rrow) {
                    *s = coeffs.iter().rev().fold(0, |acc, &c| mo.add(mo.mul(acc, y), c));
                }
            }
            out.push(det_mod(&mut scratch, &mo));
        }
    }
    crt_many(&primes, &residues)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn montgomery_roundtrip() {
        let p = 4611686018427387847u64;
        let m = Mont::new(p);
        for (a, b) in [(3u64, 5u64), (p - 1, p - 1), (123456789, 987654321012)] {
            let want = mulmod(a, b, p);
            assert_eq!(m.leave(m.mul(m.enter(a), m.enter(b))), want);
        }
        let v: BigInt = (BigInt::from(7) << 500u32) - 3;
        let want = u64::try_from(v.mod_floor(&BigInt::from(p))).unwrap();
        assert_eq!(m.leave(m.residue(&v)), want);
        assert_eq!(m.leave(m.residue(&-v)), (p - want) % p);
    }

    #[test]
    fn primes_are_prime_and_descending() {
        let ps = primes_covering(400.0);
        assert!(ps.len() >= 7);
        assert!(ps.windows(2).all(|w| w[0] > w[1]));
        assert!(ps.iter().all(|&p| is_prime_u64(p) && p < 1 << 62 && p > 1 << 61));
        assert!(!is_prime_u64(3215031751) && is_prime_u64(1_000_000_007));
    }

    #[test]
    fn matches_bareiss() {
        let big: BigInt = BigInt::from(-5) << 300u32;
        let a = IntMatrix::from_rows(vec![
            vec![big.clone(), BigInt::from(3), BigInt::from(-7)],
            vec![BigInt::from(2), big.clone() + 1, BigInt::from(11)],
            vec![BigInt::from(-4), BigInt::from(9), -big],
        ])
        .unwrap();
        assert_eq!(det(&a), a.det_bareiss().unwrap());
        assert_eq!(gram_det(&a).unwrap(), a.gram().det_bareiss().unwrap());
        let singular = IntMatrix::from_i64(&[&[2, 4], &[3, 6]]).unwrap();
        assert_eq!(det(&singular), BigInt::zero());
    }

    #[test]
    fn poly_matrix_values() {
        // [[y + 2, -3], [y^2, 5 y - 7]] has determinant 5y^2 + 3y - 14 + 3y^2
        let c = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        let m = vec![vec![c(&[2, 1]), c(&[-3])], vec![c(&[0, 0, 1]), c(&[-7, 5])]];
        let got = poly_matrix_dets(&m, 6);
        let want: Vec<BigInt> = (0..6i64).map(|y| BigInt::from(8 * y * y + 3 * y - 14)).collect();
        assert_eq!(got, want);
    }
}
