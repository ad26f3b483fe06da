//! End-to-end small-exponent attack: build, reduce, scan every reduced row,
//! take resultants of candidate pairs, and factor `n` from a common root.
//!
//! Near the limit of a lattice shape a single reduction may yield only one
//! polynomial vanishing at the root, and different reductions of the same
//! basis yield different ones. When the resultant scan fails, the basis is
//! reduced again with other Lovász parameters and the pooled candidates
//! are screened pairwise with [`padic::common_roots_padic`].

mod padic;

pub use padic::{common_roots_padic, normalize};

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::builder::{
    build_basis, enabling_report_from_gram, howgrave_check, AttackParams, EnablingReport, LatticeBasis,
};
use crate::error::{Error, Result};
use crate::io::dec_opt;
use crate::lattice::{length_profile, lll_reduce_with, LengthProfile, LovaszParam, ReductionResult, Strategy};
use crate::poly::{integer_roots_in_range, resultant_wrt_x, BiPoly, Monomial};
use crate::rsa::{mod_inverse, recover_factors_from_phi, PublicKey};

/// Environment variable that overrides the Lovász parameter.
pub const LLL_DELTA_ENV: &str = "SMALLROOTS_LLL_DELTA";

/// How many of the shortest candidates are paired with each other by default.
pub const DEFAULT_TOP_CANDIDATES: usize = 12;

/// One reduced row read back as a polynomial.
#[derive(Clone, Debug)]
pub struct CandidatePoly {
    /// Position in ascending-norm order.
    pub rank: usize,
    /// Row of the reduced matrix it came from.
    pub output_row: usize,
    /// Unscaled polynomial.
    pub poly: BiPoly,
    /// Squared norm of the scaled row.
    pub norm_sq: BigInt,
    pub passes_howgrave: bool,
    /// Only filled in when the secret root is supplied.
    pub vanishes: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackStatus {
    Factored,
    PolynomialsFoundNoFactor,
    NoVanishingPolynomial,
}

impl AttackStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackStatus::Factored => "factored",
            AttackStatus::PolynomialsFoundNoFactor => "polynomials-found-no-factor",
            AttackStatus::NoVanishingPolynomial => "no-vanishing-polynomial",
        }
    }
}

#[derive(Clone, Debug)]
pub struct AttackOptions {
    pub lll_delta: LovaszParam,
    pub strategy: Strategy,
    /// Cap on pairs tried, taken as a prefix of all pairs in ascending
    /// combined-norm order. `None` uses the default pair set.
    pub max_pairs: Option<usize>,
    pub top_candidates: usize,
    /// `(x0, y0)` when known; only used to annotate candidates.
    pub secrets_hint: Option<(BigInt, BigInt)>,
    /// Overrides the upper end of the `x` root search.
    pub x_search: Option<BigInt>,
    /// Overrides the upper end of the `y` root search.
    pub y_search: Option<BigInt>,
    /// Screen every pair of the first reduction's candidates after the
    /// resultant scan fails.
    pub screen_pairs: bool,
    /// Further Lovász parameters to reduce with, in order, while no
    /// factorization has been found.
    pub extra_reductions: Vec<LovaszParam>,
}

/// Lovász parameters of the fallback reductions.
pub fn default_extra_reductions() -> Vec<LovaszParam> {
    [(95, 100), (9, 10), (85, 100), (999, 1000), (8, 10)]
        .into_iter()
        .map(|(num, den)| LovaszParam { num, den })
        .collect()
}

impl Default for AttackOptions {
    fn default() -> Self {
        Self {
            lll_delta: LovaszParam::default(),
            strategy: Strategy::default(),
            max_pairs: None,
            top_candidates: DEFAULT_TOP_CANDIDATES,
            secrets_hint: None,
            x_search: None,
            y_search: None,
            screen_pairs: true,
            extra_reductions: default_extra_reductions(),
        }
    }
}

impl AttackOptions {
    /// Only the resultant scan over the first reduction.
    pub fn resultants_only() -> Self {
        Self {
            screen_pairs: false,
            extra_reductions: Vec::new(),
            ..Self::default()
        }
    }

    /// Defaults, with the Lovász parameter taken from the environment if set.
    pub fn from_env() -> Result<Self> {
        let mut o = Self::default();
        if let Ok(v) = std::env::var(LLL_DELTA_ENV) {
            o.lll_delta = v.parse()?;
        }
        Ok(o)
    }
}

/// Data kept from every run regardless of outcome.
#[derive(Clone, Debug)]
pub struct Diagnostics {
    pub basis: LatticeBasis,
    pub enabling: EnablingReport,
    pub profile_before: LengthProfile,
    pub profile_after: LengthProfile,
    pub reduction: ReductionResult,
    pub reduction_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct AttackOutcome {
    pub status: AttackStatus,
    pub p: Option<BigInt>,
    pub q: Option<BigInt>,
    pub d: Option<BigInt>,
    pub x0: Option<BigInt>,
    pub y0: Option<BigInt>,
    /// Ranks of the two candidates that gave the root.
    pub pair_used: Option<(usize, usize)>,
    /// Which reduction each of them came from: 0 is the first, `k` the
    /// `k`-th entry of `extra_reductions`.
    pub pair_sources: Option<(usize, usize)>,
    /// Resultant pairs tried on the first reduction.
    pub pairs_tried: usize,
    /// Pairs screened after that.
    pub pairs_screened: usize,
    pub extra_reductions_run: usize,
    /// Candidates from the first reduction.
    pub candidates: Vec<CandidatePoly>,
    pub diagnostics: Diagnostics,
}

/// Serializable summary of an [`AttackOutcome`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub mode: String,
    pub status: String,
    #[serde(with = "dec_opt", default)]
    pub p: Option<BigInt>,
    #[serde(with = "dec_opt", default)]
    pub q: Option<BigInt>,
    #[serde(with = "dec_opt", default)]
    pub d: Option<BigInt>,
    #[serde(with = "dec_opt", default)]
    pub x0: Option<BigInt>,
    #[serde(with = "dec_opt", default)]
    pub y0: Option<BigInt>,
    pub pair_used: Option<(usize, usize)>,
    pub pair_sources: Option<(usize, usize)>,
    pub pairs_tried: usize,
    pub pairs_screened: usize,
    pub extra_reductions_run: usize,
    pub params: Option<AttackParams>,
    pub matrix_rows: Option<usize>,
    pub matrix_cols: Option<usize>,
    pub reduction_seconds: Option<f64>,
    pub swaps: Option<u64>,
    pub lll_delta: Option<String>,
    pub howgrave_passers: Option<usize>,
    /// Candidates vanishing at the true root; present only with secrets.
    pub vanishing: Option<usize>,
    pub enabling: Option<EnablingReport>,
    pub profile_before: Option<LengthProfile>,
    pub profile_after: Option<LengthProfile>,
    /// Label to path of any CSV files written alongside.
    #[serde(default)]
    pub exports: BTreeMap<String, String>,
}

impl AttackOutcome {
    pub fn is_factored(&self) -> bool {
        self.status == AttackStatus::Factored
    }

    pub fn to_record(&self) -> OutcomeRecord {
        let dg = &self.diagnostics;
        OutcomeRecord {
            mode: "lattice".into(),
            status: self.status.as_str().into(),
            p: self.p.clone(),
            q: self.q.clone(),
            d: self.d.clone(),
            x0: self.x0.clone(),
            y0: self.y0.clone(),
            pair_used: self.pair_used,
            pair_sources: self.pair_sources,
            pairs_tried: self.pairs_tried,
            pairs_screened: self.pairs_screened,
            extra_reductions_run: self.extra_reductions_run,
            params: Some(dg.basis.params.clone()),
            matrix_rows: Some(dg.basis.rows()),
            matrix_cols: Some(dg.basis.cols()),
            reduction_seconds: Some(dg.reduction_seconds),
            swaps: Some(dg.reduction.swaps),
            lll_delta: Some(dg.reduction.delta.to_string()),
            howgrave_passers: Some(self.candidates.iter().filter(|c| c.passes_howgrave).count()),
            vanishing: self
                .candidates
                .iter()
                .map(|c| c.vanishes.map(usize::from))
                .sum::<Option<usize>>(),
            enabling: Some(dg.enabling.clone()),
            profile_before: Some(dg.profile_before.clone()),
            profile_after: Some(dg.profile_after.clone()),
            exports: BTreeMap::new(),
        }
    }
}

/// Inverts the `X^a Y^b` column scaling of a basis row.
pub fn unscale_row(row: &[BigInt], col_monomials: &[Monomial], x_bound: &BigInt, y_bound: &BigInt) -> Result<BiPoly> {
    if row.len() != col_monomials.len() {
        return Err(Error::DimensionMismatch(format!(
            "row has {} entries but {} monomials are listed",
            row.len(),
            col_monomials.len()
        )));
    }
    let mut out = BiPoly::zero();
    for (col, (v, &(a, b))) in row.iter().zip(col_monomials).enumerate() {
        if v.is_zero() {
            continue;
        }
        let s = num_traits::pow(x_bound.clone(), a as usize) * num_traits::pow(y_bound.clone(), b as usize);
        let (c, r) = v.div_rem(&s);
        if !r.is_zero() {
            return Err(Error::InexactUnscale { col, a, b });
        }
        out.add_term((a, b), c);
    }
    Ok(out)
}

/// Reads every reduced row back as a polynomial, shortest first.
pub fn scan_candidates(
    red: &ReductionResult,
    basis: &LatticeBasis,
    secrets_hint: Option<&(BigInt, BigInt)>,
) -> Result<Vec<CandidatePoly>> {
    let p = &basis.params;
    red.rows_by_norm()
        .into_iter()
        .enumerate()
        .map(|(rank, r)| {
            let row = red.reduced.row(r);
            let poly = unscale_row(row, &basis.col_monomials, &p.x_bound, &p.y_bound)?;
            Ok(CandidatePoly {
                rank,
                output_row: r,
                norm_sq: red.reduced.row_norm_sq(r),
                passes_howgrave: howgrave_check(row, &basis.modulus_power)?,
                vanishes: secrets_hint.map(|(x, y)| poly.eval(x, y).is_zero()),
                poly,
            })
        })
        .collect()
}

/// A common root found by [`extract_roots`]. `x` is `None` when both
/// polynomials vanish identically at `y`, so `x` is not determined by them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootCandidate {
    pub x: Option<BigInt>,
    pub y: BigInt,
}

/// Every common root with `0 < y <= y_bound` and `0 < x <= x_bound`,
/// in ascending `y`. Empty when the resultant vanishes.
pub fn extract_roots(c1: &BiPoly, c2: &BiPoly, x_bound: &BigInt, y_bound: &BigInt) -> Result<Vec<RootCandidate>> {
    if c1.is_zero() || c2.is_zero() {
        return Ok(Vec::new());
    }
    let one = BigInt::one();
    let r = match (c1.degree_x(), c2.degree_x()) {
        (Some(0), Some(0)) => {
            let (a, b) = (
                c1.as_poly_in_y().unwrap_or_default(),
                c2.as_poly_in_y().unwrap_or_default(),
            );
            a.gcd(&b)
        }
        (Some(0), _) => c1.as_poly_in_y().unwrap_or_default(),
        (_, Some(0)) => c2.as_poly_in_y().unwrap_or_default(),
        _ => resultant_wrt_x(c1, c2)?,
    };
    if r.is_zero() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    if y_bound < &one {
        return Ok(out);
    }
    for y in integer_roots_in_range(&r, &one, y_bound)? {
        let mut undetermined = true;
        let mut xs = Vec::new();
        for c in [c1, c2] {
            let u = c.eval_y(&y);
            if u.is_zero() {
                continue;
            }
            undetermined = false;
            if x_bound >= &one {
                xs = integer_roots_in_range(&u, &one, x_bound)?
                    .into_iter()
                    .filter(|x| c1.eval(x, &y).is_zero() && c2.eval(x, &y).is_zero())
                    .collect();
            }
            break;
        }
        if undetermined {
            out.push(RootCandidate { x: None, y });
        } else {
            out.extend(xs.into_iter().map(|x| RootCandidate {
                x: Some(x),
                y: y.clone(),
            }));
        }
    }
    Ok(out)
}

/// First common root with both coordinates determined.
pub fn extract_root(c1: &BiPoly, c2: &BiPoly, x_bound: &BigInt, y_bound: &BigInt) -> Result<Option<(BigInt, BigInt)>> {
    Ok(extract_roots(c1, c2, x_bound, y_bound)?
        .into_iter()
        .find_map(|rc| rc.x.map(|x| (x, rc.y))))
}

/// Factors `n` from a candidate root; `None` unless everything checks out.
pub fn validate_root(n: &BigInt, e: &BigInt, x0: &BigInt, y0: &BigInt) -> Option<(BigInt, BigInt, BigInt)> {
    if !x0.is_positive() || !y0.is_positive() {
        return None;
    }
    let phi = n - y0;
    if !phi.is_positive() {
        return None;
    }
    let (p, q) = recover_factors_from_phi(n, &phi)?;
    let d = mod_inverse(e, &phi)?;
    (e * &d - 1 == x0 * &phi).then_some((p, q, d))
}

/// `x0` implied by `y0` alone: `(e d - 1) / phi` with `phi = n - y0`.
fn implied_x(n: &BigInt, e: &BigInt, y0: &BigInt) -> Option<BigInt> {
    let phi = n - y0;
    if !phi.is_positive() {
        return None;
    }
    let d = mod_inverse(e, &phi)?;
    let (x, r): (BigInt, BigInt) = Integer::div_rem(&(e * d - 1), &phi);
    r.is_zero().then_some(x)
}

/// Pairs of candidate ranks in the order they are tried.
pub fn pair_order(candidates: &[CandidatePoly], max_pairs: Option<usize>, top: usize) -> Vec<(usize, usize)> {
    let n = candidates.len();
    let mut all: Vec<(BigInt, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            all.push((&candidates[i].norm_sq * &candidates[j].norm_sq, i, j));
        }
    }
    all.sort();
    let pairs = all.into_iter().map(|(_, i, j)| (i, j));
    match max_pairs {
        Some(k) => pairs.take(k).collect(),
        None => pairs
            .filter(|&(i, j)| j < top || (candidates[i].passes_howgrave && candidates[j].passes_howgrave))
            .collect(),
    }
}

/// Builds, reduces and searches for the secret root of `pk`.
pub fn run_attack(pk: &PublicKey, params: &AttackParams, options: &AttackOptions) -> Result<AttackOutcome> {
    params.validate()?;
    let basis = build_basis(&pk.n, &pk.e, params)?;
    let profile_before = length_profile(&basis.matrix)?;
    let start = Instant::now();
    let reduction = lll_reduce_with(&basis.matrix, options.lll_delta, options.strategy)?;
    let reduction_seconds = start.elapsed().as_secs_f64();
    let profile_after = length_profile(&reduction.reduced)?;
    let enabling = enabling_report_from_gram(&basis, &pk.e, reduction.gram_det.clone())?;
    let candidates = scan_candidates(&reduction, &basis, options.secrets_hint.as_ref())?;
    log::debug!(
        "reduction {reduction_seconds:.3}s, post-processing {:.3}s",
        start.elapsed().as_secs_f64() - reduction_seconds
    );

    let x_bound = options.x_search.clone().unwrap_or_else(|| params.x_bound.clone());
    let y_bound = options
        .y_search
        .clone()
        .unwrap_or_else(|| default_y_search(&pk.n, &params.y_bound));

    let mut found = candidates.iter().any(|c| c.passes_howgrave || c.vanishes == Some(true));
    let mut hit: Option<Hit> = None;
    let mut pairs_tried = 0;
    for (i, j) in pair_order(&candidates, options.max_pairs, options.top_candidates) {
        pairs_tried += 1;
        let roots = extract_roots(&candidates[i].poly, &candidates[j].poly, &x_bound, &y_bound)?;
        for rc in roots {
            let x = match rc.x {
                Some(x) => x,
                None => match implied_x(&pk.n, &pk.e, &rc.y) {
                    Some(x) if x.is_positive() && x <= x_bound => x,
                    _ => continue,
                },
            };
            found = true;
            if let Some((p, q, d)) = validate_root(&pk.n, &pk.e, &x, &rc.y) {
                hit = Some(Hit {
                    p,
                    q,
                    d,
                    x0: x,
                    y0: rc.y,
                    pair: (i, j),
                    sources: (0, 0),
                });
                break;
            }
        }
        if hit.is_some() {
            break;
        }
    }
    log::debug!("resultant scan: {pairs_tried} pairs, factored: {}", hit.is_some());

    let mut pairs_screened = 0;
    let mut extra_run = 0;
    if hit.is_none() && (options.screen_pairs || !options.extra_reductions.is_empty()) {
        let mut pool = Pool::default();
        let from = pool.len();
        pool.extend(&candidates, 0);
        let mut screen = |pool: &Pool, from: usize, found: &mut bool| -> Option<Hit> {
            for b in from..pool.len() {
                for a in 0..b {
                    pairs_screened += 1;
                    for (x, y) in common_roots_padic(&pool.polys[a], &pool.polys[b], &x_bound, &y_bound) {
                        *found = true;
                        if let Some((p, q, d)) = validate_root(&pk.n, &pk.e, &x, &y) {
                            let (sa, sb) = (pool.origin[a], pool.origin[b]);
                            return Some(Hit {
                                p,
                                q,
                                d,
                                x0: x,
                                y0: y,
                                pair: (sa.1, sb.1),
                                sources: (sa.0, sb.0),
                            });
                        }
                    }
                }
            }
            None
        };
        if options.screen_pairs {
            hit = screen(&pool, from, &mut found);
        }
        for (k, dl) in options.extra_reductions.iter().enumerate() {
            if hit.is_some() {
                break;
            }
            extra_run += 1;
            let red = lll_reduce_with(&basis.matrix, *dl, options.strategy)?;
            let more = scan_candidates(&red, &basis, None)?;
            let from = pool.len();
            pool.extend(&more, k + 1);
            log::debug!("extra reduction {dl}: {} new candidates", pool.len() - from);
            hit = screen(&pool, from, &mut found);
        }
    }

    let diagnostics = Diagnostics {
        basis,
        enabling,
        profile_before,
        profile_after,
        reduction,
        reduction_seconds,
    };
    let outcome = match hit {
        Some(h) => {
            check_soundness(&pk.n, &pk.e, &h.p, &h.q, &h.d)?;
            AttackOutcome {
                status: AttackStatus::Factored,
                p: Some(h.p),
                q: Some(h.q),
                d: Some(h.d),
                x0: Some(h.x0),
                y0: Some(h.y0),
                pair_used: Some(h.pair),
                pair_sources: Some(h.sources),
                pairs_tried,
                pairs_screened,
                extra_reductions_run: extra_run,
                candidates,
                diagnostics,
            }
        }
        None => AttackOutcome {
            status: if found {
                AttackStatus::PolynomialsFoundNoFactor
            } else {
                AttackStatus::NoVanishingPolynomial
            },
            p: None,
            q: None,
            d: None,
            x0: None,
            y0: None,
            pair_used: None,
            pair_sources: None,
            pairs_tried,
            pairs_screened,
            extra_reductions_run: extra_run,
            candidates,
            diagnostics,
        },
    };
    Ok(outcome)
}

struct Hit {
    p: BigInt,
    q: BigInt,
    d: BigInt,
    x0: BigInt,
    y0: BigInt,
    pair: (usize, usize),
    sources: (usize, usize),
}

/// Distinct normalized candidates across reductions.
#[derive(Default)]
struct Pool {
    polys: Vec<BiPoly>,
    /// `(reduction, rank)` of each entry.
    origin: Vec<(usize, usize)>,
    seen: std::collections::HashSet<BiPoly>,
}

impl Pool {
    fn len(&self) -> usize {
        self.polys.len()
    }

    fn extend(&mut self, cands: &[CandidatePoly], source: usize) {
        for c in cands {
            let p = normalize(&c.poly);
            if self.seen.insert(p.clone()) {
                self.polys.push(p);
                self.origin.push((source, c.rank));
            }
        }
    }
}

/// Upper end of the `y` search when not overridden.
///
/// `Y = ceil(2 sqrt(e))` sizes the lattice but sits below `p + q - 1` for
/// balanced primes, so the search runs up to `max(Y, 4 isqrt(n) + 4)`.
pub fn default_y_search(n: &BigInt, y_bound: &BigInt) -> BigInt {
    let w: BigInt = (n.sqrt() << 2u32) + 4;
    w.max(y_bound.clone())
}

fn check_soundness(n: &BigInt, e: &BigInt, p: &BigInt, q: &BigInt, d: &BigInt) -> Result<()> {
    if &(p * q) != n {
        return Err(Error::Invariant("recovered factors do not multiply to n".into()));
    }
    let phi = n - p - q + 1;
    if !(e * d).mod_floor(&phi).is_one() {
        return Err(Error::Invariant("recovered d is not an inverse of e".into()));
    }
    Ok(())
}
