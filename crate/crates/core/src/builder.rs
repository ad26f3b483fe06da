//! Lattice construction for the small-exponent RSA attack.
//!
//! The secret root `(x0, y0) = (k, p + q - 1)` is a zero of
//! `f(x, y) = x (n - y) + 1` modulo `e`. Shift polynomials
//! `x^i f^l e^(m-l)` and `y^j f^l e^(m-l)` vanish there modulo `e^m`; their
//! coefficient vectors, evaluated at `(xX, yY)`, are the basis rows.
//!
//! The index set is trimmed by two integers: x-shifts with `i + l <= sigma`
//! and y-shifts with `l - 2j <= tau` are left out.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::dec;
use crate::lattice::{gram_covolume, log2_big, round_log, IntMatrix};
use crate::poly::{graded_order, shift_poly, BiPoly, Monomial, ShiftKind};

/// Everything needed to build a basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    pub m: u32,
    pub t: u32,
    pub sigma: i32,
    pub tau: i32,
    /// The attacker's guess for `log_n d`; used to size `X`.
    pub delta: f64,
    #[serde(rename = "X", with = "dec")]
    pub x_bound: BigInt,
    #[serde(rename = "Y", with = "dec")]
    pub y_bound: BigInt,
}

/// The `tau` that keeps every y-shift `1 <= j <= t`.
pub fn unpruned_tau(t: u32) -> i32 {
    -2 * t as i32 - 1
}

/// The `sigma` that keeps every x-shift.
pub const UNPRUNED_SIGMA: i32 = -1;

impl AttackParams {
    /// Params with `X = ceil(2 e^delta)` and `Y = ceil(2 sqrt(e))`.
    pub fn derive(e: &BigInt, m: u32, t: u32, sigma: i32, tau: i32, delta: f64) -> Result<Self> {
        if t > m {
            return Err(Error::InvalidParameter(format!("t = {t} exceeds m = {m}")));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 0.5)")));
        }
        Ok(Self {
            m,
            t,
            sigma,
            tau,
            delta,
            x_bound: x_bound_for(e, delta),
            y_bound: y_bound_for(e),
        })
    }

    /// Full index set (no pruning) for the given `m`, `t`.
    pub fn unpruned(e: &BigInt, m: u32, t: u32, delta: f64) -> Result<Self> {
        Self::derive(e, m, t, UNPRUNED_SIGMA, unpruned_tau(t), delta)
    }

    pub fn with_pruning(&self, sigma: i32, tau: i32) -> Self {
        Self {
            sigma,
            tau,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t > self.m {
            return Err(Error::InvalidParameter(format!(
                "t = {} exceeds m = {}",
                self.t, self.m
            )));
        }
        if self.x_bound < BigInt::one() || self.y_bound < BigInt::one() {
            return Err(Error::InvalidParameter("X and Y must be positive".into()));
        }
        Ok(())
    }

    pub fn is_unpruned(&self) -> bool {
        self.sigma < 0 && self.tau < -2 * self.t as i32
    }
}

/// `ceil(2 e^delta)`, via a 53-bit approximation of `e^delta`.
pub fn x_bound_for(e: &BigInt, delta: f64) -> BigInt {
    let lg = 1.0 + delta * log2_big(e);
    let int = lg.floor();
    let frac = lg - int;
    let mant = (frac.exp2() * (1u64 << 52) as f64) as u64;
    let shift = int as i64 - 52;
    let v = if shift >= 0 {
        BigInt::from(mant) << shift as u64
    } else {
        BigInt::from(mant >> (-shift) as u64)
    };
    v + 1
}

/// `ceil(2 sqrt(e)) = ceil(sqrt(4e))`, exact.
pub fn y_bound_for(e: &BigInt) -> BigInt {
    let four_e: BigInt = e << 2u32;
    let s = four_e.sqrt();
    if &s * &s == four_e {
        s
    } else {
        s + 1
    }
}

/// One shift polynomial: `x^idx f^ell e^(m-ell)` or `y^idx f^ell e^(m-ell)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShiftIndex {
    pub kind: ShiftKind,
    pub idx: u32,
    pub ell: u32,
}

/// `f(x, y) = x (n - y) + 1`.
pub fn build_f(n: &BigInt) -> BiPoly {
    BiPoly::from_terms([((1, 0), n.clone()), ((1, 1), -BigInt::one()), ((0, 0), BigInt::one())])
}

/// The trimmed index set, ordered by `ell`, x-shifts first, then `idx`.
pub fn shift_indices(params: &AttackParams) -> Result<Vec<ShiftIndex>> {
    let (m, t) = (params.m, params.t);
    if t > m {
        return Err(Error::InvalidParameter(format!("t = {t} exceeds m = {m}")));
    }
    let mut out = Vec::new();
    for ell in 0..=m {
        for i in 0..=m - ell {
            if (i + ell) as i64 > params.sigma as i64 {
                out.push(ShiftIndex {
                    kind: ShiftKind::XShift,
                    idx: i,
                    ell,
                });
            }
        }
        for j in 1..=t {
            if ell as i64 - 2 * j as i64 > params.tau as i64 {
                out.push(ShiftIndex {
                    kind: ShiftKind::YShift,
                    idx: j,
                    ell,
                });
            }
        }
    }
    Ok(out)
}

/// A built basis with its bookkeeping.
#[derive(Clone, Debug)]
pub struct LatticeBasis {
    pub matrix: IntMatrix,
    pub row_index: Vec<ShiftIndex>,
    pub col_monomials: Vec<Monomial>,
    pub params: AttackParams,
    /// `e^m`
    pub modulus_power: BigInt,
}

impl LatticeBasis {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn sidecar(&self) -> BasisSidecar {
        BasisSidecar {
            row_index: self.row_index.clone(),
            col_monomials: self.col_monomials.clone(),
            params: self.params.clone(),
        }
    }

    /// Keeps only the listed rows and drops columns that become all-zero.
    pub fn restrict_rows(&self, keep: &[usize]) -> LatticeBasis {
        let m = self.matrix.select_rows(keep);
        let live: Vec<usize> = (0..m.cols())
            .filter(|&c| (0..m.rows()).any(|r| !m[(r, c)].is_zero()))
            .collect();
        let mut out = IntMatrix::zeros(m.rows(), live.len());
        for r in 0..m.rows() {
            for (ci, &c) in live.iter().enumerate() {
                out[(r, ci)] = m[(r, c)].clone();
            }
        }
        LatticeBasis {
            matrix: out,
            row_index: keep.iter().map(|&i| self.row_index[i]).collect(),
            col_monomials: live.iter().map(|&c| self.col_monomials[c]).collect(),
            params: self.params.clone(),
            modulus_power: self.modulus_power.clone(),
        }
    }
}

/// JSON sidecar written next to an exported basis CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSidecar {
    pub row_index: Vec<ShiftIndex>,
    pub col_monomials: Vec<Monomial>,
    pub params: AttackParams,
}

/// Builds the scaled basis for public key `(n, e)`.
pub fn build_basis(n: &BigInt, e: &BigInt, params: &AttackParams) -> Result<LatticeBasis> {
    params.validate()?;
    if e <= &BigInt::one() {
        return Err(Error::InvalidParameter("e must exceed 1".into()));
    }
    let f = build_f(n);
    let index = shift_indices(params)?;
    if index.is_empty() {
        return Err(Error::InvalidParameter("parameters leave an empty index set".into()));
    }
    let polys = index
        .iter()
        .map(|s| shift_poly(s.kind, s.idx, s.ell, params.m, &f, e))
        .collect::<Result<Vec<_>>>()?;
    let mut cols: Vec<Monomial> = polys.iter().flat_map(|p| p.terms().keys().copied()).collect();
    cols.sort_by(graded_order);
    cols.dedup();
    let max_a = cols.iter().map(|m| m.0).max().unwrap_or(0);
    let max_b = cols.iter().map(|m| m.1).max().unwrap_or(0);
    let xp = powers(&params.x_bound, max_a);
    let yp = powers(&params.y_bound, max_b);
    let col_of: std::collections::HashMap<Monomial, usize> = cols.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut matrix = IntMatrix::zeros(index.len(), cols.len());
    for (r, p) in polys.iter().enumerate() {
        for (&(a, b), c) in p.terms() {
            matrix[(r, col_of[&(a, b)])] = c * &xp[a as usize] * &yp[b as usize];
        }
    }
    Ok(LatticeBasis {
        matrix,
        row_index: index,
        col_monomials: cols,
        params: params.clone(),
        modulus_power: num_traits::pow(e.clone(), params.m as usize),
    })
}

fn powers(base: &BigInt, max: u32) -> Vec<BigInt> {
    let mut v = vec![BigInt::one()];
    for i in 1..=max as usize {
        let next = &v[i - 1] * base;
        v.push(next);
    }
    v
}

/// `||row||^2 * w_h < e^(2m)`, where `row` is already scaled by `X`, `Y`
/// and `w_h` is its number of nonzero entries.
pub fn howgrave_check(row: &[BigInt], modulus_power: &BigInt) -> Result<bool> {
    let w_h = row.iter().filter(|v| !v.is_zero()).count();
    if w_h == 0 {
        return Err(Error::ZeroRow(0));
    }
    let norm_sq: BigInt = row.iter().map(|v| v * v).sum();
    Ok(norm_sq * BigInt::from(w_h) < modulus_power * modulus_power)
}

/// Covolume against the determinant bound that guarantees a short enough vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnablingReport {
    pub w: usize,
    #[serde(with = "dec")]
    pub gram_det: BigInt,
    pub bound_satisfied: bool,
    pub log2_covolume: f64,
    pub log2_bound: f64,
}

/// Evaluates `|L|^2 (w 2^w)^(w-1) <= e^(2m(w-1))` exactly.
pub fn enabling_report(basis: &LatticeBasis, e: &BigInt) -> Result<EnablingReport> {
    enabling_report_from_gram(basis, e, gram_covolume(&basis.matrix)?)
}

/// As [`enabling_report`], reusing a Gram determinant computed elsewhere
/// (for instance by the reduction).
pub fn enabling_report_from_gram(basis: &LatticeBasis, e: &BigInt, gram_det: BigInt) -> Result<EnablingReport> {
    let w = basis.rows();
    let m = basis.params.m;
    if !gram_det.is_positive() {
        return Err(Error::DependentRows);
    }
    let w1 = (w - 1) as u64;
    let factor: BigInt = BigInt::from(w) << w;
    let lhs = &gram_det * num_traits::pow(factor, w1 as usize);
    let rhs = num_traits::pow(e.clone(), (2 * m as u64 * w1) as usize);
    let log2_covolume = round_log(0.5 * log2_big(&gram_det));
    let log2_bound = round_log(m as f64 * w1 as f64 * log2_big(e) - 0.5 * w1 as f64 * ((w as f64).log2() + w as f64));
    Ok(EnablingReport {
        w,
        bound_satisfied: lhs <= rhs,
        gram_det,
        log2_covolume,
        log2_bound,
    })
}
