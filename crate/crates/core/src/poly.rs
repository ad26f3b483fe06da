//! Exact integer polynomials in one and two variables.
//!
//! [`BiPoly`] stores a sparse map from `(deg_x, deg_y)` to a nonzero
//! coefficient. [`UniPoly`] is a dense coefficient vector with index equal
//! to degree. Both keep a canonical form: no zero coefficient is ever
//! stored, so structural equality is polynomial equality.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::poly_matrix_dets;

/// Exponent pair `(deg_x, deg_y)` of a monomial `x^a y^b`.
pub type Monomial = (u32, u32);

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BiPoly {
    terms: BTreeMap<Monomial, BigInt>,
}

impl BiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(a: u32, b: u32, c: BigInt) -> Self {
        let mut p = Self::zero();
        p.add_term((a, b), c);
        p
    }

    /// Builds a polynomial from `(monomial, coefficient)` pairs; repeated
    /// monomials are summed and zero sums dropped.
    pub fn from_terms<I>(iter: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, BigInt)>,
    {
        let mut p = Self::zero();
        for (m, c) in iter {
            p.add_term(m, c);
        }
        p
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, BigInt> {
        &self.terms
    }

    pub fn coeff(&self, a: u32, b: u32) -> BigInt {
        self.terms.get(&(a, b)).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree_x(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.0).max()
    }

    pub fn degree_y(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.1).max()
    }

    /// Adds `c * x^a y^b` in place.
    pub fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect(),
        }
    }

    /// Multiplies by `x^a y^b`.
    pub fn shift(&self, a: u32, b: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| ((m.0 + a, m.1 + b), v.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, mut k: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn eval(&self, x: &BigInt, y: &BigInt) -> BigInt {
        let (Some(dx), Some(dy)) = (self.degree_x(), self.degree_y()) else {
            return BigInt::zero();
        };
        let xp = powers(x, dx);
        let yp = powers(y, dy);
        self.terms
            .iter()
            .map(|(&(a, b), c)| c * &xp[a as usize] * &yp[b as usize])
            .sum()
    }

    /// Substitutes `y = y0`, leaving a polynomial in `x`.
    pub fn eval_y(&self, y0: &BigInt) -> UniPoly {
        let dy = self.degree_y().unwrap_or(0);
        let yp = powers(y0, dy);
        let mut coeffs = vec![BigInt::zero(); self.degree_x().map_or(0, |d| d as usize + 1)];
        for (&(a, b), c) in &self.terms {
            coeffs[a as usize] += c * &yp[b as usize];
        }
        UniPoly::new(coeffs)
    }

    /// Coefficients of `x^0, x^1, ...` as polynomials in `y`.
    pub fn coeffs_in_x(&self) -> Vec<UniPoly> {
        let Some(dx) = self.degree_x() else {
            return Vec::new();
        };
        let mut out = vec![Vec::<BigInt>::new(); dx as usize + 1];
        for (&(a, b), c) in &self.terms {
            let row = &mut out[a as usize];
            if row.len() <= b as usize {
                row.resize(b as usize + 1, BigInt::zero());
            }
            row[b as usize] = c.clone();
        }
        out.into_iter().map(UniPoly::new).collect()
    }

    /// The polynomial viewed in `y` alone; `None` if any term involves `x`.
    pub fn as_poly_in_y(&self) -> Option<UniPoly> {
        match self.degree_x() {
            Some(0) | None => Some(self.coeffs_in_x().into_iter().next().unwrap_or_default()),
            _ => None,
        }
    }
}

fn powers(base: &BigInt, max: u32) -> Vec<BigInt> {
    let mut v = Vec::with_capacity(max as usize + 1);
    v.push(BigInt::one());
    for i in 1..=max as usize {
        let next = &v[i - 1] * base;
        v.push(next);
    }
    v
}

impl<'a> Add<&'a BiPoly> for &'a BiPoly {
    type Output = BiPoly;
    fn add(self, rhs: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a BiPoly> for &'a BiPoly {
    type Output = BiPoly;
    fn sub(self, rhs: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -c);
        }
        out
    }
}

impl<'a> Mul<&'a BiPoly> for &'a BiPoly {
    type Output = BiPoly;
    fn mul(self, rhs: &BiPoly) -> BiPoly {
        let mut out = BiPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term((ma.0 + mb.0, ma.1 + mb.1), ca * cb);
            }
        }
        out
    }
}

impl Neg for &BiPoly {
    type Output = BiPoly;
    fn neg(self) -> BiPoly {
        BiPoly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(a, b), c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            if a > 0 {
                write!(f, "*x^{a}")?;
            }
            if b > 0 {
                write!(f, "*y^{b}")?;
            }
        }
        Ok(())
    }
}

/// Whether a shift polynomial multiplies `f^ell` by a power of `x` or of `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftKind {
    XShift,
    YShift,
}

/// `x^idx * f^ell * e^(m - ell)` or `y^idx * f^ell * e^(m - ell)`.
pub fn shift_poly(kind: ShiftKind, idx: u32, ell: u32, m: u32, f: &BiPoly, e: &BigInt) -> Result<BiPoly> {
    if ell > m {
        return Err(Error::InvalidParameter(format!("ell = {ell} exceeds m = {m}")));
    }
    let base = f.pow(ell).scale(&num_traits::pow(e.clone(), (m - ell) as usize));
    Ok(match kind {
        ShiftKind::XShift => base.shift(idx, 0),
        ShiftKind::YShift => base.shift(0, idx),
    })
}

/// Dense univariate integer polynomial; `coeffs[i]` multiplies `t^i`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct UniPoly {
    coeffs: Vec<BigInt>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigInt) -> Self {
        Self::new(vec![c])
    }

    /// The linear polynomial `t - r`.
    pub fn linear_root(r: &BigInt) -> Self {
        Self::new(vec![-r, BigInt::one()])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn eval(&self, t: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc *= t;
            acc += c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    /// Nonnegative gcd of all coefficients (zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Content removed and leading coefficient made positive.
    pub fn primitive_part(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut g = self.content();
        if self.leading().is_some_and(Signed::is_negative) {
            g = -g;
        }
        Self::new(self.coeffs.iter().map(|c| c / &g).collect())
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn pow(&self, mut k: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::constant(BigInt::one());
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Pseudo-remainder `prem(self, d)` with `lc(d)^(deg self - deg d + 1)` folded in.
    pub fn pseudo_rem(&self, d: &UniPoly) -> UniPoly {
        let dd = d.degree().expect("pseudo_rem by zero polynomial");
        let lc = d.leading().unwrap();
        let mut r = self.coeffs.clone();
        while r.len() > dd && !r.is_empty() {
            let top = r.len() - 1;
            let q = r[top].clone();
            for c in r.iter_mut() {
                *c *= lc;
            }
            for (i, dc) in d.coeffs.iter().enumerate() {
                r[top - dd + i] -= &q * dc;
            }
            debug_assert!(r[top].is_zero());
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        UniPoly::new(r)
    }

    /// Exact quotient over the integers, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &UniPoly) -> Option<UniPoly> {
        let dd = d.degree()?;
        if self.is_zero() {
            return Some(Self::zero());
        }
        let n = self.degree()?;
        if n < dd {
            return None;
        }
        let lc = d.leading().unwrap();
        let mut r = self.coeffs.clone();
        let mut q = vec![BigInt::zero(); n - dd + 1];
        for k in (0..=n - dd).rev() {
            let (qk, rem) = r[k + dd].div_rem(lc);
            if !rem.is_zero() {
                return None;
            }
            if !qk.is_zero() {
                for (i, dc) in d.coeffs.iter().enumerate() {
                    r[k + i] -= &qk * dc;
                }
            }
            q[k] = qk;
        }
        if r.iter().all(Zero::is_zero) {
            Some(UniPoly::new(q))
        } else {
            None
        }
    }

    /// Primitive gcd with positive leading coefficient (primitive PRS).
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() {
            return other.primitive_part();
        }
        if other.is_zero() {
            return self.primitive_part();
        }
        let cont = self.content().gcd(&other.content());
        let (mut a, mut b) = (self.primitive_part(), other.primitive_part());
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b);
            a = b;
            b = r.primitive_part();
        }
        a.primitive_part().scale(&cont)
    }

    /// Sign of `self(t)`.
    pub fn sign_at(&self, t: &BigInt) -> Sign {
        self.eval(t).sign()
    }

    /// `self(t + c)` by repeated synthetic division.
    pub fn taylor_shift(&self, c: &BigInt) -> UniPoly {
        let mut a = self.coeffs.clone();
        let n = a.len();
        if c.is_zero() || n < 2 {
            return self.clone();
        }
        for i in 0..n - 1 {
            for j in (i..n - 1).rev() {
                let t = &a[j + 1] * c;
                a[j] += t;
            }
        }
        UniPoly::new(a)
    }

    /// `self(k * t)`.
    pub fn scale_arg(&self, k: &BigInt) -> UniPoly {
        let mut pk = BigInt::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            out.push(c * &pk);
            pk *= k;
        }
        UniPoly::new(out)
    }

    /// `t^deg * self(1/t)`.
    pub fn reversed(&self) -> UniPoly {
        let mut c = self.coeffs.clone();
        c.reverse();
        UniPoly::new(c)
    }
}

impl<'a> Add<&'a UniPoly> for &'a UniPoly {
    type Output = UniPoly;
    fn add(self, rhs: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![BigInt::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            out[i] += c;
        }
        UniPoly::new(out)
    }
}

impl<'a> Sub<&'a UniPoly> for &'a UniPoly {
    type Output = UniPoly;
    fn sub(self, rhs: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![BigInt::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            out[i] -= c;
        }
        UniPoly::new(out)
    }
}

impl<'a> Mul<&'a UniPoly> for &'a UniPoly {
    type Output = UniPoly;
    fn mul(self, rhs: &UniPoly) -> UniPoly {
        if self.is_zero() || rhs.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }
}

impl Neg for &UniPoly {
    type Output = UniPoly;
    fn neg(self) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

/// `Res_x(a, b)` as a polynomial in `y`.
///
/// The Sylvester matrix is specialised at `y = 0, 1, ..., D` for a degree
/// bound `D`, the integer determinants are taken exactly (modulo many
/// primes), and the values are interpolated back. A zero result means `a`
/// and `b` share a factor of positive degree in `x`.
pub fn resultant_wrt_x(a: &BiPoly, b: &BiPoly) -> Result<UniPoly> {
    let (m, _, _) = sylvester_over_zy(a, b)?;
    let Some(bound) = det_degree_bound(&m) else {
        return Ok(UniPoly::zero());
    };
    let coeffs: Vec<Vec<Vec<BigInt>>> = m
        .iter()
        .map(|row| row.iter().map(|c| c.coeffs().to_vec()).collect())
        .collect();
    interpolate_consecutive(poly_matrix_dets(&coeffs, bound + 1))
}

/// Upper bound on the degree of the determinant of a polynomial matrix:
/// the best assignment of rows to columns by entry degree. `None` when
/// every assignment hits a zero entry, so the determinant vanishes.
fn det_degree_bound(m: &[Vec<UniPoly>]) -> Option<usize> {
    let n = m.len();
    if n > 20 {
        // too many subsets; the row-wise bound is still valid
        return m.iter().map(|row| row.iter().filter_map(UniPoly::degree).max()).sum();
    }
    // best[mask] = max degree sum placing the first popcount(mask) rows in `mask`
    let mut best: Vec<Option<usize>> = vec![None; 1 << n];
    best[0] = Some(0);
    for mask in 0..(1usize << n) {
        let Some(base) = best[mask] else { continue };
        let row = mask.count_ones() as usize;
        if row == n {
            continue;
        }
        for (col, e) in m[row].iter().enumerate() {
            if mask & (1 << col) != 0 {
                continue;
            }
            if let Some(d) = e.degree() {
                let next = &mut best[mask | (1 << col)];
                *next = Some(next.map_or(base + d, |v| v.max(base + d)));
            }
        }
    }
    best[(1 << n) - 1]
}

/// Same as [`resultant_wrt_x`], by fraction-free elimination over `Z[y]`.
/// Much slower on large inputs; kept as an independent cross-check.
pub fn resultant_wrt_x_symbolic(a: &BiPoly, b: &BiPoly) -> Result<UniPoly> {
    let (m, _, _) = sylvester_over_zy(a, b)?;
    Ok(bareiss_det(m))
}

fn sylvester_over_zy(a: &BiPoly, b: &BiPoly) -> Result<(Vec<Vec<UniPoly>>, usize, usize)> {
    let da = a.degree_x().filter(|&d| d > 0).ok_or(Error::ConstantInX)? as usize;
    let db = b.degree_x().filter(|&d| d > 0).ok_or(Error::ConstantInX)? as usize;
    let ca = a.coeffs_in_x();
    let cb = b.coeffs_in_x();
    let n = da + db;
    let mut m = vec![vec![UniPoly::zero(); n]; n];
    // Rows hold coefficients from the highest x-degree down.
    for r in 0..db {
        for (k, c) in ca.iter().rev().enumerate() {
            m[r][r + k] = c.clone();
        }
    }
    for r in 0..da {
        for (k, c) in cb.iter().rev().enumerate() {
            m[db + r][r + k] = c.clone();
        }
    }
    Ok((m, da, db))
}

/// The integer polynomial of degree `< values.len()` taking `values[k]` at
/// `y = k`. Forward differences give the coefficients on the falling
/// factorial basis; dividing the `j`-th by `j!` must be exact.
fn interpolate_consecutive(mut values: Vec<BigInt>) -> Result<UniPoly> {
    let n = values.len();
    // In place: values[j] becomes the j-th forward difference at 0.
    for j in 1..n {
        for k in (j..n).rev() {
            let prev = values[k - 1].clone();
            values[k] -= prev;
        }
    }
    let mut fact = BigInt::one();
    let mut falling = Vec::with_capacity(n);
    for (j, v) in values.into_iter().enumerate() {
        if j > 1 {
            fact *= j;
        }
        let (q, r) = v.div_rem(&fact);
        if !r.is_zero() {
            return Err(Error::Invariant("interpolated resultant is not integral".into()));
        }
        falling.push(q);
    }
    // Horner on a0 + y (a1 + (y - 1) (a2 + (y - 2) (...))).
    let mut acc = UniPoly::zero();
    for (j, c) in falling.iter().enumerate().rev() {
        let shifted = UniPoly::new(vec![-BigInt::from(j), BigInt::one()]);
        acc = &(&acc * &shifted) + &UniPoly::constant(c.clone());
    }
    Ok(acc)
}

/// Determinant of a square matrix over `Z[y]` by fraction-free elimination.
pub fn bareiss_det(mut m: Vec<Vec<UniPoly>>) -> UniPoly {
    let n = m.len();
    if n == 0 {
        return UniPoly::constant(BigInt::one());
    }
    let mut negate = false;
    let mut prev = UniPoly::constant(BigInt::one());
    for k in 0..n - 1 {
        // Pick the nonzero pivot of lowest degree in column k.
        let pivot = (k..n).filter(|&r| !m[r][k].is_zero()).min_by_key(|&r| m[r][k].degree());
        let Some(p) = pivot else {
            return UniPoly::zero();
        };
        if p != k {
            m.swap(p, k);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&m[k][k] * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = num.div_exact(&prev).expect("Bareiss division is exact");
            }
            m[i][k] = UniPoly::zero();
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if negate {
        -&det
    } else {
        det
    }
}

/// Primes below `2^62` used to certify squarefreeness cheaply.
const SQUAREFREE_PRIMES: [u64; 3] = [4611686018427387847, 4611686018427387817, 4611686018427387787];

/// True when `u mod p` keeps its degree and is coprime to its derivative,
/// which proves `u` squarefree over the integers. False means "unknown".
fn squarefree_mod(u: &UniPoly, p: u64) -> bool {
    let pb = BigInt::from(p);
    let red: Vec<u64> = u
        .coeffs()
        .iter()
        .map(|c| u64::try_from(c.mod_floor(&pb)).expect("residue below p"))
        .collect();
    if red.last().copied().unwrap_or(0) == 0 {
        return false;
    }
    let mulm = |a: u64, b: u64| ((a as u128 * b as u128) % p as u128) as u64;
    let deriv: Vec<u64> = red
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| mulm(c, i as u64 % p))
        .collect();
    let trim = |mut v: Vec<u64>| {
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    };
    let inv = |a: u64| {
        // Fermat: a^(p-2)
        let (mut base, mut e, mut acc) = (a, p - 2, 1u64);
        while e > 0 {
            if e & 1 == 1 {
                acc = mulm(acc, base);
            }
            base = mulm(base, base);
            e >>= 1;
        }
        acc
    };
    let (mut a, mut b) = (trim(red), trim(deriv));
    while !b.is_empty() {
        // a <- a mod b
        let lb_inv = inv(*b.last().unwrap());
        while a.len() >= b.len() {
            let q = mulm(*a.last().unwrap(), lb_inv);
            let off = a.len() - b.len();
            for (i, &bc) in b.iter().enumerate() {
                a[off + i] = (a[off + i] + p - mulm(q, bc)) % p;
            }
            a = trim(a);
            if a.is_empty() {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len() == 1
}

/// `u / gcd(u, u')`, primitive with positive leading coefficient.
pub fn squarefree_part(u: &UniPoly) -> Result<UniPoly> {
    if u.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if u.degree() == Some(0) {
        return Ok(UniPoly::constant(BigInt::one()));
    }
    if SQUAREFREE_PRIMES.iter().any(|&p| squarefree_mod(u, p)) {
        let s = u.primitive_part();
        return Ok(if s.leading().is_some_and(|c| c.is_negative()) {
            -&s
        } else {
            s
        });
    }
    let g = u.gcd(&u.derivative()).primitive_part();
    let q = u
        .primitive_part()
        .div_exact(&g)
        .ok_or_else(|| Error::Invariant("gcd does not divide polynomial".into()))?;
    Ok(q.primitive_part())
}

/// Every integer `r` with `lo <= r <= hi` and `u(r) = 0`.
///
/// Works on the squarefree part. Intervals are split at integer midpoints
/// until the Descartes bound on each open sub-interval is 0 or 1; a
/// single-root interval is then narrowed by sign-change bisection over the
/// integers with exact evaluation.
pub fn integer_roots_in_range(u: &UniPoly, lo: &BigInt, hi: &BigInt) -> Result<BTreeSet<BigInt>> {
    if u.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if lo > hi {
        return Err(Error::EmptyRange);
    }
    let s = squarefree_part(u)?;
    let mut roots = BTreeSet::new();
    if s.degree() == Some(0) {
        return Ok(roots);
    }
    for end in [lo, hi] {
        if s.eval(end).is_zero() {
            roots.insert(end.clone());
        }
    }
    if hi - lo > BigInt::one() {
        isolate(&s, lo.clone(), hi.clone(), &mut roots);
    }
    Ok(roots)
}

/// Searches the open interval `(a, b)`, `b - a >= 2`.
fn isolate(s: &UniPoly, a: BigInt, b: BigInt, roots: &mut BTreeSet<BigInt>) {
    let mut stack = vec![(a, b)];
    while let Some((a, b)) = stack.pop() {
        match descartes_bound(s, &a, &b) {
            0 => {}
            1 => bisect_single(s, &a, &b, roots),
            _ => {
                let mid: BigInt = (&a + &b) >> 1u32;
                if s.eval(&mid).is_zero() {
                    roots.insert(mid.clone());
                }
                if &b - &mid > BigInt::one() {
                    stack.push((mid.clone(), b));
                }
                if &mid - &a > BigInt::one() {
                    stack.push((a, mid));
                }
            }
        }
    }
}

/// Sign variations of `(1+t)^d s((a + b t)/(1 + t))`, capped at 2.
///
/// An upper bound on the number of real roots in `(a, b)` that is exact
/// when it is 0 or 1.
fn descartes_bound(s: &UniPoly, a: &BigInt, b: &BigInt) -> usize {
    let p = s
        .taylor_shift(a)
        .scale_arg(&(b - a))
        .reversed()
        .taylor_shift(&BigInt::one());
    let mut last = Sign::NoSign;
    let mut count = 0;
    for c in p.coeffs() {
        let sg = c.sign();
        if sg == Sign::NoSign {
            continue;
        }
        if last != Sign::NoSign && sg != last {
            count += 1;
            if count >= 2 {
                return 2;
            }
        }
        last = sg;
    }
    count
}

/// Exactly one simple real root lies in `(a, b)`; record it if it is an integer.
fn bisect_single(s: &UniPoly, a: &BigInt, b: &BigInt, roots: &mut BTreeSet<BigInt>) {
    let mut lo = a + 1;
    let mut hi = b - 1;
    if lo > hi {
        return;
    }
    let slo = s.sign_at(&lo);
    if slo == Sign::NoSign {
        roots.insert(lo);
        return;
    }
    let shi = s.sign_at(&hi);
    if shi == Sign::NoSign {
        roots.insert(hi);
        return;
    }
    if slo == shi {
        return;
    }
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) >> 1u32;
        match s.sign_at(&mid) {
            Sign::NoSign => {
                roots.insert(mid);
                return;
            }
            sg if sg == slo => lo = mid,
            _ => hi = mid,
        }
    }
}

/// Orders monomials by total degree, then by descending `x` degree.
pub fn graded_order(p: &Monomial, q: &Monomial) -> Ordering {
    (p.0 + p.1).cmp(&(q.0 + q.1)).then(q.0.cmp(&p.0))
}
