//! Lattice reduction on integer row bases.
//!
//! [`lll_reduce`] returns the reduced basis together with the unimodular
//! transform `U` such that `reduced = U * input`. Column `c` of `U` refers
//! to input row `c`, so later stages can ask which input rows contribute to
//! a given output row.

mod exact;
mod fast;
mod matrix;
mod modular;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

pub use matrix::{dot, IntMatrix, MODULAR_DET_MIN};
pub(crate) use modular::poly_matrix_dets;

use crate::error::{Error, Result};
use exact::IntegralGso;

/// Lovász parameter as an exact fraction in `(1/4, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LovaszParam {
    pub num: i64,
    pub den: i64,
}

impl LovaszParam {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        // 1/4 < num/den < 1
        if den <= 0 || 4 * num <= den || num >= den {
            return Err(Error::InvalidParameter(format!(
                "Lovász parameter {num}/{den} outside (1/4, 1)"
            )));
        }
        Ok(Self { num, den })
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for LovaszParam {
    fn default() -> Self {
        Self { num: 99, den: 100 }
    }
}

impl fmt::Display for LovaszParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for LovaszParam {
    type Err = Error;

    /// Accepts `p/q` or a plain decimal such as `0.99`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("cannot parse Lovász parameter {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse().map_err(|_| bad())?;
            let q = q.trim().parse().map_err(|_| bad())?;
            return Self::new(p, q);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: i64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10i64.pow(frac.len() as u32);
        let frac: i64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        Self::new(int * den + frac, den)
    }
}

/// Output of [`lll_reduce`].
#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub reduced: IntMatrix,
    pub transform: IntMatrix,
    pub swaps: u64,
    pub delta: LovaszParam,
    /// `det(B B^T)`, shared by input and output since `U` is unimodular.
    pub gram_det: BigInt,
}

impl ReductionResult {
    /// Output row indices sorted by ascending Euclidean norm (stable).
    pub fn rows_by_norm(&self) -> Vec<usize> {
        let norms: Vec<BigInt> = (0..self.reduced.rows()).map(|i| self.reduced.row_norm_sq(i)).collect();
        let mut idx: Vec<usize> = (0..norms.len()).collect();
        idx.sort_by(|&a, &b| norms[a].cmp(&norms[b]).then(a.cmp(&b)));
        idx
    }
}

/// Which reduction strategy [`lll_reduce_with`] runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Exact integral LLL only.
    Exact,
    /// Floating-point pre-reduction, then an exact pass that certifies
    /// (and if needed repairs) the result.
    #[default]
    Accelerated,
}

/// LLL-reduces the rows of `b` with Lovász parameter `delta`.
pub fn lll_reduce(b: &IntMatrix, delta: LovaszParam) -> Result<ReductionResult> {
    lll_reduce_with(b, delta, Strategy::default())
}

pub fn lll_reduce_with(b: &IntMatrix, delta: LovaszParam, strategy: Strategy) -> Result<ReductionResult> {
    LovaszParam::new(delta.num, delta.den)?;
    if let Some(i) = (0..b.rows()).find(|&i| b.is_zero_row(i)) {
        log::debug!("zero row {i} in lattice basis");
        return Err(Error::DependentRows);
    }
    let mut reduced = b.clone();
    let mut transform = IntMatrix::identity(b.rows());
    let mut swaps = 0;
    let t0 = std::time::Instant::now();
    if strategy == Strategy::Accelerated && b.rows() > 1 {
        swaps += fast::reduce(&mut reduced, &mut transform, &delta)?;
        log::debug!("float pass: {swaps} swaps in {:.3}s", t0.elapsed().as_secs_f64());
    }
    let t1 = std::time::Instant::now();
    let (s, gram_det) = exact::lll_in_place(&mut reduced, &mut transform, &delta)?;
    log::debug!("exact pass: {s} swaps in {:.3}s", t1.elapsed().as_secs_f64());
    swaps += s;
    Ok(ReductionResult {
        reduced,
        transform,
        swaps,
        delta,
        gram_det,
    })
}

/// A violated LLL condition found by [`check_lll_contract`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ContractViolation {
    SizeReduction { row: usize, col: usize },
    Lovasz { row: usize },
}

/// Checks size reduction (`|mu| <= 1/2`) and the Lovász condition over
/// exact rationals, recomputing Gram-Schmidt data from scratch.
pub fn check_lll_contract(b: &IntMatrix, delta: LovaszParam) -> Result<Vec<ContractViolation>> {
    let g = IntegralGso::new(b)?;
    let mut out = Vec::new();
    for k in 0..b.rows() {
        for j in 0..k {
            if !g.size_reduced(k, j) {
                out.push(ContractViolation::SizeReduction { row: k, col: j });
            }
        }
        if k > 0 && !g.lovasz_holds(k, &delta) {
            out.push(ContractViolation::Lovasz { row: k });
        }
    }
    Ok(out)
}

/// Gram determinant `det(B B^T)`; the covolume is its square root.
pub fn gram_covolume(b: &IntMatrix) -> Result<BigInt> {
    let d = if b.rows() >= MODULAR_DET_MIN {
        modular::gram_det(b)?
    } else {
        b.gram().det_bareiss()?
    };
    if d.is_zero() {
        return Err(Error::DependentRows);
    }
    Ok(d)
}

/// Number of fractional bits kept in logarithmic diagnostics.
pub const LOG_FRAC_BITS: u32 = 10;

/// Rounds to a multiple of `2^-LOG_FRAC_BITS`.
pub fn round_log(v: f64) -> f64 {
    let s = (1u64 << LOG_FRAC_BITS) as f64;
    (v * s).round() / s
}

/// `log2(v)` for `v > 0`, accurate to about 2^-50 relative.
pub fn log2_big(v: &BigInt) -> f64 {
    debug_assert!(v.is_positive());
    let bits = v.bits();
    if bits <= 1000 {
        let f: f64 = num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::INFINITY);
        if f.is_finite() {
            return f.log2();
        }
    }
    let shift = bits - 64;
    let top: BigInt = v.abs() >> shift;
    let f: f64 = num_traits::ToPrimitive::to_f64(&top).unwrap();
    f.log2() + shift as f64
}

/// Per-row `log2` of Euclidean norms at [`LOG_FRAC_BITS`] precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthProfile(pub Vec<f64>);

pub fn length_profile(b: &IntMatrix) -> Result<LengthProfile> {
    let mut out = Vec::with_capacity(b.rows());
    for i in 0..b.rows() {
        let n2 = b.row_norm_sq(i);
        if n2.is_zero() {
            return Err(Error::ZeroRow(i));
        }
        out.push(round_log(0.5 * log2_big(&n2)));
    }
    Ok(LengthProfile(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64(rows).unwrap()
    }

    fn assert_contract(b: &IntMatrix, r: &ReductionResult) {
        assert_eq!(r.transform.mul(b).unwrap(), r.reduced);
        assert!(r.transform.det().unwrap().abs().is_one());
        assert!(check_lll_contract(&r.reduced, r.delta).unwrap().is_empty());
        assert_eq!(gram_covolume(&r.reduced).unwrap(), gram_covolume(b).unwrap());
        assert_eq!(r.gram_det, gram_covolume(b).unwrap());
    }

    #[test]
    fn scaled_identity_stays_put() {
        let b = m(&[&[5, 0, 0], &[0, 5, 0], &[0, 0, 5]]);
        for s in [Strategy::Exact, Strategy::Accelerated] {
            let r = lll_reduce_with(&b, LovaszParam::default(), s).unwrap();
            assert_contract(&b, &r);
            for i in 0..3 {
                assert_eq!(r.reduced.row_norm_sq(i), BigInt::from(25));
                let nz = r.transform.row(i).iter().filter(|v| !v.is_zero()).count();
                assert_eq!(nz, 1);
            }
        }
    }

    #[test]
    fn non_square_basis() {
        let b = m(&[&[1, 0, 0], &[1, 1, 1]]);
        let r = lll_reduce(&b, LovaszParam::default()).unwrap();
        assert_contract(&b, &r);
    }

    #[test]
    fn dependent_rows_rejected() {
        let b = m(&[&[1, 2, 3], &[2, 4, 6]]);
        assert!(matches!(
            lll_reduce(&b, LovaszParam::default()),
            Err(Error::DependentRows)
        ));
        let b = m(&[&[1, 2], &[0, 0]]);
        assert!(matches!(
            lll_reduce(&b, LovaszParam::default()),
            Err(Error::DependentRows)
        ));
    }

    #[test]
    fn lovasz_param_parsing() {
        assert_eq!(
            "0.99".parse::<LovaszParam>().unwrap(),
            LovaszParam { num: 99, den: 100 }
        );
        assert_eq!("3/4".parse::<LovaszParam>().unwrap(), LovaszParam { num: 3, den: 4 });
        assert!("0.25".parse::<LovaszParam>().is_err());
        assert!("1".parse::<LovaszParam>().is_err());
        assert!("1.5".parse::<LovaszParam>().is_err());
        assert!("abc".parse::<LovaszParam>().is_err());
    }

    #[test]
    fn covolume_examples() {
        assert_eq!(gram_covolume(&m(&[&[1, 0], &[0, 1]])).unwrap(), BigInt::one());
        assert_eq!(gram_covolume(&m(&[&[3, 0], &[0, 4]])).unwrap(), BigInt::from(144));
        assert!(matches!(
            gram_covolume(&m(&[&[1, 1], &[2, 2]])),
            Err(Error::DependentRows)
        ));
    }

    #[test]
    fn profile_examples() {
        assert_eq!(length_profile(&m(&[&[1, 0], &[0, 1]])).unwrap().0, vec![0.0, 0.0]);
        let p = length_profile(&m(&[&[3, 4], &[0, 8]])).unwrap().0;
        assert_eq!(p[1], 3.0);
        assert!((p[0] - 5f64.log2()).abs() <= 0.5 / 1024.0);
        assert!(matches!(
            length_profile(&m(&[&[1, 0], &[0, 0]])),
            Err(Error::ZeroRow(1))
        ));
    }

    #[test]
    fn log2_big_large_values() {
        let v = BigInt::one() << 5000u32;
        assert_eq!(log2_big(&v), 5000.0);
        let v = BigInt::from(3) << 3000u32;
        assert!((log2_big(&v) - (3000.0 + 3f64.log2())).abs() < 1e-9);
    }
}
