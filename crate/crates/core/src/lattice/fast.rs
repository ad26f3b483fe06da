//! Floating-point pre-reduction in the style of L2.
//!
//! The Gram matrix is kept exactly as integers and updated alongside every
//! integer row operation; only the Cholesky data lives in floating point.
//! Gram entries overflow `f64`, so values carry a separate binary exponent
//! ([`Xf`]). Nothing here is trusted: the exact pass that follows checks
//! and repairs whatever this pass produces.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::matrix::{dot, IntMatrix};
use super::LovaszParam;
use crate::error::Result;

/// Size-reduction bound used by the float pass.
const ETA: f64 = 0.51;
/// Gives up on a row after this many size-reduction rounds.
const MAX_ROUNDS: usize = 200;

/// `m * 2^e` with `0.5 <= |m| < 1`, or zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Xf {
    m: f64,
    e: i64,
}

impl Xf {
    const ZERO: Xf = Xf { m: 0.0, e: 0 };

    fn new(m: f64, e: i64) -> Xf {
        if m == 0.0 || !m.is_finite() {
            return Xf {
                m: if m.is_finite() { 0.0 } else { m },
                e: 0,
            };
        }
        let (fm, fe) = frexp(m);
        Xf {
            m: fm,
            e: e + fe as i64,
        }
    }

    fn from_f64(v: f64) -> Xf {
        Xf::new(v, 0)
    }

    pub fn from_big(v: &BigInt) -> Xf {
        let bits = v.bits();
        if bits <= 1000 {
            return Xf::from_f64(v.to_f64().unwrap());
        }
        let shift = bits - 64;
        let top: BigInt = v >> shift;
        Xf::new(top.to_f64().unwrap(), shift as i64)
    }

    fn is_zero(self) -> bool {
        self.m == 0.0
    }

    fn mul(self, o: Xf) -> Xf {
        Xf::new(self.m * o.m, self.e + o.e)
    }

    fn div(self, o: Xf) -> Xf {
        Xf::new(self.m / o.m, self.e - o.e)
    }

    fn add(self, o: Xf) -> Xf {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let d = self.e - o.e;
        if d > 70 {
            self
        } else if d < -70 {
            o
        } else if d >= 0 {
            Xf::new(self.m + ldexp(o.m, -d), self.e)
        } else {
            Xf::new(ldexp(self.m, d) + o.m, o.e)
        }
    }

    fn neg(self) -> Xf {
        Xf { m: -self.m, e: self.e }
    }

    fn sub(self, o: Xf) -> Xf {
        self.add(o.neg())
    }

    /// Value as a plain `f64`, saturating to infinity or zero.
    fn to_f64(self) -> f64 {
        if self.e > 1100 {
            return self.m * f64::INFINITY;
        }
        if self.e < -1100 {
            return 0.0;
        }
        ldexp(self.m, self.e)
    }

    fn cmp_abs(self, o: Xf) -> Ordering {
        match (self.is_zero(), o.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        self.e.cmp(&o.e).then(self.m.abs().total_cmp(&o.m.abs()))
    }

    /// Nearest integer.
    fn round(self) -> BigInt {
        if self.is_zero() || self.e < 0 {
            return BigInt::zero();
        }
        if self.e <= 53 {
            return BigInt::from(ldexp(self.m, self.e).round() as i64);
        }
        let mant = ldexp(self.m, 53) as i64;
        BigInt::from(mant) << (self.e - 53) as u64
    }
}

fn frexp(x: f64) -> (f64, i32) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    if exp == 0 {
        // subnormal
        let (m, e) = frexp(x * (1u64 << 54) as f64);
        return (m, e - 54);
    }
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (m, exp - 1022)
}

fn ldexp(m: f64, e: i64) -> f64 {
    if e > 2000 {
        return m * f64::INFINITY;
    }
    if e < -2000 {
        return 0.0;
    }
    let mut v = m;
    let mut e = e as i32;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e)
}

struct State<'a> {
    b: &'a mut IntMatrix,
    u: &'a mut IntMatrix,
    gram: Vec<Vec<BigInt>>,
    r: Vec<Vec<Xf>>,
    mu: Vec<Vec<Xf>>,
}

impl State<'_> {
    fn swap(&mut self, k: usize) {
        self.b.swap_rows(k, k - 1);
        self.u.swap_rows(k, k - 1);
        self.gram.swap(k, k - 1);
        for row in &mut self.gram {
            row.swap(k, k - 1);
        }
    }

    /// `b_k -= x * b_j` with the matching exact Gram update.
    fn sub_multiple(&mut self, k: usize, j: usize, x: &BigInt) {
        self.b.sub_row_multiple(k, j, x);
        self.u.sub_row_multiple(k, j, x);
        let n = self.gram.len();
        let gkj = self.gram[k][j].clone();
        let gjj = self.gram[j][j].clone();
        for i in 0..n {
            if i == k {
                continue;
            }
            let t = x * &self.gram[j][i];
            self.gram[k][i] -= &t;
            self.gram[i][k] = self.gram[k][i].clone();
        }
        let t: BigInt = (x * &gkj) << 1u32;
        self.gram[k][k] -= t;
        self.gram[k][k] += x * x * gjj;
    }

    /// Cholesky row `k` from the exact Gram row; rows `< k` must be current.
    fn cholesky_row(&mut self, k: usize) {
        for j in 0..=k {
            let mut acc = Xf::from_big(&self.gram[k][j]);
            for i in 0..j {
                acc = acc.sub(self.mu[j][i].mul(self.r[k][i]));
            }
            self.r[k][j] = acc;
            if j < k {
                self.mu[k][j] = if self.r[j][j].is_zero() {
                    Xf::ZERO
                } else {
                    acc.div(self.r[j][j])
                };
            }
        }
    }

    /// Lazy size reduction of row `k`. Returns false if it did not settle.
    fn size_reduce(&mut self, k: usize) -> bool {
        let eta = Xf::from_f64(ETA);
        for _ in 0..MAX_ROUNDS {
            self.cholesky_row(k);
            if (0..k).all(|j| self.mu[k][j].cmp_abs(eta) != Ordering::Greater) {
                return true;
            }
            let mut mu_k = self.mu[k].clone();
            for j in (0..k).rev() {
                let x = mu_k[j].round();
                if x.is_zero() {
                    continue;
                }
                let xf = Xf::from_big(&x);
                for i in 0..j {
                    mu_k[i] = mu_k[i].sub(xf.mul(self.mu[j][i]));
                }
                mu_k[j] = mu_k[j].sub(xf);
                self.sub_multiple(k, j, &x);
            }
        }
        false
    }
}

/// Pre-reduces `b` in place (mirroring row operations into `u`).
///
/// Returns the number of swaps. Stops early, leaving a valid but possibly
/// unreduced basis, when floating-point precision runs out.
pub(crate) fn reduce(b: &mut IntMatrix, u: &mut IntMatrix, delta: &LovaszParam) -> Result<u64> {
    let n = b.rows();
    let gram = (0..n)
        .map(|i| (0..n).map(|j| dot(b.row(i), b.row(j))).collect())
        .collect();
    let mut st = State {
        b,
        u,
        gram,
        r: vec![vec![Xf::ZERO; n]; n],
        mu: vec![vec![Xf::ZERO; n]; n],
    };
    // Slightly stronger than the target so the exact pass rarely swaps.
    let d = (delta.as_f64() + 0.005).min(0.999);
    let dx = Xf::from_f64(d);
    let mut swaps = 0u64;
    let swap_cap = 1_000_000u64;
    st.cholesky_row(0);
    let mut k = 1;
    while k < n {
        if !st.size_reduce(k) {
            log::debug!("float pre-reduction lost precision at row {k}; handing over to exact pass");
            return Ok(swaps);
        }
        // s = r_kk + mu_{k,k-1} r_{k,k-1}
        let s = st.r[k][k].add(st.mu[k][k - 1].mul(st.r[k][k - 1]));
        let lhs = dx.mul(st.r[k - 1][k - 1]);
        if lhs.sub(s).to_f64() > 0.0 {
            st.swap(k);
            swaps += 1;
            if swaps > swap_cap {
                return Ok(swaps);
            }
            if k == 1 {
                st.cholesky_row(0);
            } else {
                k -= 1;
            }
        } else {
            k += 1;
        }
    }
    Ok(swaps)
}
