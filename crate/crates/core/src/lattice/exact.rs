//! Integral LLL with exact Gram-Schmidt data.
//!
//! Gram-Schmidt coefficients are kept as integers: `dd[i]` is the Gram
//! determinant of the first `i` rows and `lam[k][j] = dd[j + 1] * mu[k][j]`.
//! All divisions below are exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::matrix::{dot, IntMatrix};
use super::LovaszParam;
use crate::error::{Error, Result};

pub(crate) struct IntegralGso {
    pub dd: Vec<BigInt>,
    pub lam: Vec<Vec<BigInt>>,
}

impl IntegralGso {
    /// Computes the data for all rows of `b` from scratch.
    pub fn new(b: &IntMatrix) -> Result<Self> {
        let n = b.rows();
        let mut gso = Self::empty(n);
        for k in 0..n {
            gso.extend_row(b, k)?;
        }
        Ok(gso)
    }

    fn empty(n: usize) -> Self {
        let mut dd = vec![BigInt::zero(); n + 1];
        dd[0] = BigInt::from(1);
        Self {
            dd,
            lam: (0..n).map(|k| vec![BigInt::zero(); k]).collect(),
        }
    }

    /// Fills row `k` assuming rows `0..k` are already present.
    fn extend_row(&mut self, b: &IntMatrix, k: usize) -> Result<()> {
        for j in 0..=k {
            let mut u = dot(b.row(k), b.row(j));
            for i in 0..j {
                u = (&self.dd[i + 1] * &u - &self.lam[k][i] * &self.lam[j][i]) / &self.dd[i];
            }
            if j < k {
                self.lam[k][j] = u;
            } else {
                if u.is_zero() {
                    return Err(Error::DependentRows);
                }
                self.dd[k + 1] = u;
            }
        }
        Ok(())
    }

    /// `2 |lam[k][j]| <= dd[j + 1]` for all `j < k`.
    pub fn size_reduced(&self, k: usize, j: usize) -> bool {
        (&self.lam[k][j] << 1u32).abs() <= self.dd[j + 1]
    }

    /// Lovász condition between rows `k - 1` and `k`.
    pub fn lovasz_holds(&self, k: usize, delta: &LovaszParam) -> bool {
        let (p, q) = (BigInt::from(delta.num), BigInt::from(delta.den));
        let lhs = &q * &self.dd[k + 1] * &self.dd[k - 1];
        let rhs = &p * &self.dd[k] * &self.dd[k] - &q * &self.lam[k][k - 1] * &self.lam[k][k - 1];
        lhs >= rhs
    }
}

/// Nearest integer to `num / den` (`den > 0`), ties rounded up.
pub(crate) fn round_div(num: &BigInt, den: &BigInt) -> BigInt {
    let two_num: BigInt = num << 1u32;
    (two_num + den).div_floor(&(den << 1u32))
}

/// Reduces `b` in place, applying every row operation to `u` as well.
/// Returns the number of swaps and the Gram determinant of `b`.
pub(crate) fn lll_in_place(b: &mut IntMatrix, u: &mut IntMatrix, delta: &LovaszParam) -> Result<(u64, BigInt)> {
    let n = b.rows();
    let mut swaps = 0u64;
    if n == 0 {
        return Ok((0, BigInt::from(1)));
    }
    let mut g = IntegralGso::empty(n);
    g.extend_row(b, 0)?;
    let mut kmax = 0usize;
    let mut k = 1usize;
    while k < n {
        if k > kmax {
            g.extend_row(b, k)?;
            kmax = k;
        }
        reduce(b, u, &mut g, k, k - 1);
        if !g.lovasz_holds(k, delta) {
            swap(b, u, &mut g, k, kmax);
            swaps += 1;
            k = k.saturating_sub(1).max(1);
        } else {
            for l in (0..k - 1).rev() {
                reduce(b, u, &mut g, k, l);
            }
            k += 1;
        }
    }
    if n == 1 {
        g.extend_row(b, 0)?;
    }
    Ok((swaps, g.dd[n].clone()))
}

fn reduce(b: &mut IntMatrix, u: &mut IntMatrix, g: &mut IntegralGso, k: usize, l: usize) {
    if g.size_reduced(k, l) {
        return;
    }
    let q = round_div(&g.lam[k][l], &g.dd[l + 1]);
    b.sub_row_multiple(k, l, &q);
    u.sub_row_multiple(k, l, &q);
    let t = &q * &g.dd[l + 1];
    g.lam[k][l] -= t;
    let (head, tail) = g.lam.split_at_mut(k);
    let src = &head[l];
    for (i, v) in tail[0][..l].iter_mut().enumerate() {
        if !src[i].is_zero() {
            *v -= &q * &src[i];
        }
    }
}

fn swap(b: &mut IntMatrix, u: &mut IntMatrix, g: &mut IntegralGso, k: usize, kmax: usize) {
    b.swap_rows(k, k - 1);
    u.swap_rows(k, k - 1);
    {
        let (head, tail) = g.lam.split_at_mut(k);
        for j in 0..k - 1 {
            std::mem::swap(&mut head[k - 1][j], &mut tail[0][j]);
        }
    }
    let lam = g.lam[k][k - 1].clone();
    let bnew = (&g.dd[k - 1] * &g.dd[k + 1] + &lam * &lam) / &g.dd[k];
    for i in k + 1..=kmax {
        let t = g.lam[i][k].clone();
        let new_ik = (&g.dd[k + 1] * &g.lam[i][k - 1] - &lam * &t) / &g.dd[k];
        let new_ik1 = (&bnew * &t + &lam * &new_ik) / &g.dd[k + 1];
        g.lam[i][k] = new_ik;
        g.lam[i][k - 1] = new_ik1;
    }
    g.dd[k] = bnew;
}
