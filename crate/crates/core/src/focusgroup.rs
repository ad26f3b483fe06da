//! Which input rows feed the short output rows, and what to prune.
//!
//! A trial campaign attacks many small instances with the same shape. For
//! each successful trial the transform `U` (with `reduced = U * input`)
//! tells which input rows the shortest few outputs are built from. Rows
//! that are consistently unused suggest a larger `(sigma, tau)`.

use num_bigint::Sign;
use serde::{Deserialize, Serialize};

use crate::attack::{run_attack, AttackOptions, AttackStatus};
use crate::builder::{shift_indices, unpruned_tau, AttackParams, LatticeBasis, ShiftIndex, UNPRUNED_SIGMA};
use crate::error::{Error, Result};
use crate::lattice::{IntMatrix, ReductionResult};
use crate::poly::ShiftKind;
use crate::rsa::keygen;

/// How many of the shortest output rows count as "short".
pub const DEFAULT_SHORTLIST: usize = 3;

/// Fraction of trials in which a row must be unused to be pruned.
pub const DEFAULT_THRESHOLD: f64 = 0.8;

/// Where a mask came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialMeta {
    pub modulus_bits: u32,
    pub delta: f64,
    pub params: AttackParams,
    pub seed: u64,
    pub status: AttackStatus,
    pub reduction_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsageMask {
    /// Indexed by input-basis row.
    pub used: Vec<bool>,
    pub shortlist_size: usize,
    pub trial_meta: Option<TrialMeta>,
}

impl UsageMask {
    pub fn unused_count(&self) -> usize {
        self.used.iter().filter(|u| !**u).count()
    }
}

/// Marks column `c` used iff one of the `s` shortest output rows has a
/// nonzero transform entry there.
pub fn usage_mask(red: &ReductionResult, s: usize) -> Result<UsageMask> {
    let rows = red.transform.rows();
    if s == 0 || s > rows {
        return Err(Error::InvalidParameter(format!(
            "shortlist size {s} outside 1..={rows}"
        )));
    }
    let mut used = vec![false; red.transform.cols()];
    for r in red.rows_by_norm().into_iter().take(s) {
        for (c, v) in red.transform.row(r).iter().enumerate() {
            if v.sign() != Sign::NoSign {
                used[c] = true;
            }
        }
    }
    Ok(UsageMask {
        used,
        shortlist_size: s,
        trial_meta: None,
    })
}

/// Used/unused state per shift index, split by shift kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternGrid {
    pub m: u32,
    pub t: u32,
    pub cells: Vec<(ShiftIndex, bool)>,
}

impl PatternGrid {
    pub fn get(&self, kind: ShiftKind, idx: u32, ell: u32) -> Option<bool> {
        self.cells
            .iter()
            .find(|(s, _)| s.kind == kind && s.idx == idx && s.ell == ell)
            .map(|(_, u)| *u)
    }

    /// Rows `ell = 0..=m`, columns `i = 0..=m`; `1` used, `0` unused,
    /// empty where the cell is not in the index set.
    pub fn x_grid_csv(&self) -> Result<Vec<u8>> {
        self.grid_csv(ShiftKind::XShift, 0..=self.m, "i")
    }

    /// Rows `ell = 0..=m`, columns `j = 1..=t`.
    pub fn y_grid_csv(&self) -> Result<Vec<u8>> {
        self.grid_csv(ShiftKind::YShift, 1..=self.t, "j")
    }

    fn grid_csv(&self, kind: ShiftKind, idx: std::ops::RangeInclusive<u32>, label: &str) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["ell".to_string()];
        header.extend(idx.clone().map(|i| format!("{label}={i}")));
        w.write_record(&header)?;
        for ell in 0..=self.m {
            let mut rec = vec![ell.to_string()];
            for i in idx.clone() {
                rec.push(match self.get(kind, i, ell) {
                    Some(true) => "1".into(),
                    Some(false) => "0".into(),
                    None => String::new(),
                });
            }
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub fn pattern_grid(mask: &UsageMask, basis: &LatticeBasis) -> Result<PatternGrid> {
    if mask.used.len() != basis.rows() {
        return Err(Error::DimensionMismatch(format!(
            "mask has {} entries, basis has {} rows",
            mask.used.len(),
            basis.rows()
        )));
    }
    Ok(PatternGrid {
        m: basis.params.m,
        t: basis.params.t,
        cells: basis.row_index.iter().copied().zip(mask.used.iter().copied()).collect(),
    })
}

/// Shape of the trial lattices; `X` and `Y` are derived per instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub modulus_bits: u32,
    pub delta: f64,
    pub m: u32,
    pub t: u32,
    pub sigma: i32,
    pub tau: i32,
    pub n_trials: u64,
    pub base_seed: u64,
    pub shortlist: usize,
}

impl CampaignConfig {
    /// Unpruned shape with the default shortlist.
    pub fn unpruned(modulus_bits: u32, delta: f64, m: u32, t: u32, n_trials: u64, base_seed: u64) -> Self {
        Self {
            modulus_bits,
            delta,
            m,
            t,
            sigma: UNPRUNED_SIGMA,
            tau: unpruned_tau(t),
            n_trials,
            base_seed,
            shortlist: DEFAULT_SHORTLIST,
        }
    }
}

/// Every trial's metadata, plus masks from the successful ones only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub config: CampaignConfig,
    pub trials: Vec<TrialMeta>,
    pub masks: Vec<UsageMask>,
}

impl Campaign {
    pub fn successes(&self) -> usize {
        self.masks.len()
    }

    /// Shift index of each mask column.
    pub fn row_index(&self) -> Result<Vec<ShiftIndex>> {
        let c = &self.config;
        let shape = AttackParams {
            m: c.m,
            t: c.t,
            sigma: c.sigma,
            tau: c.tau,
            delta: c.delta,
            x_bound: 1.into(),
            y_bound: 1.into(),
        };
        shift_indices(&shape)
    }
}

/// Runs keygen and the attack for seeds `base_seed..base_seed + n_trials`.
///
/// Trials run one after another; results are in seed order either way.
pub fn trial_campaign(cfg: &CampaignConfig, options: &AttackOptions) -> Result<Campaign> {
    if cfg.n_trials == 0 {
        return Err(Error::InvalidParameter("a campaign needs at least one trial".into()));
    }
    let mut trials = Vec::new();
    let mut masks = Vec::new();
    for seed in cfg.base_seed..cfg.base_seed + cfg.n_trials {
        let inst = keygen(cfg.modulus_bits, cfg.delta, seed)?;
        let params = AttackParams::derive(&inst.e, cfg.m, cfg.t, cfg.sigma, cfg.tau, cfg.delta)?;
        let out = run_attack(&inst.public_key(), &params, options)?;
        let meta = TrialMeta {
            modulus_bits: cfg.modulus_bits,
            delta: cfg.delta,
            params,
            seed,
            status: out.status,
            reduction_seconds: out.diagnostics.reduction_seconds,
        };
        log::info!("trial seed {seed}: {}", out.status.as_str());
        if out.is_factored() {
            let mut mask = usage_mask(&out.diagnostics.reduction, cfg.shortlist)?;
            mask.trial_meta = Some(meta.clone());
            masks.push(mask);
        }
        trials.push(meta);
    }
    Ok(Campaign {
        config: cfg.clone(),
        trials,
        masks,
    })
}

/// Rows unused in at least `threshold` of the masks.
pub fn vote_unused(masks: &[UsageMask], threshold: f64) -> Result<Vec<bool>> {
    let first = masks.first().ok_or(Error::EmptyRange)?;
    let w = first.used.len();
    if masks.iter().any(|m| m.used.len() != w) {
        return Err(Error::DimensionMismatch("masks differ in length".into()));
    }
    let need = threshold * masks.len() as f64;
    Ok((0..w)
        .map(|c| {
            let unused = masks.iter().filter(|m| !m.used[c]).count();
            unused as f64 >= need - 1e-9
        })
        .collect())
}

/// Rows unused in a strict majority of the masks.
pub fn majority_unused(masks: &[UsageMask]) -> Result<Vec<bool>> {
    let first = masks.first().ok_or(Error::EmptyRange)?;
    let w = first.used.len();
    Ok((0..w)
        .map(|c| 2 * masks.iter().filter(|m| !m.used[c]).count() > masks.len())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamProposal {
    pub sigma: i32,
    pub tau: i32,
    /// Fraction of masks in which every removed row is unused.
    pub evidence: f64,
    /// Rows of the trial basis that the proposal removes.
    pub removed_count: usize,
}

/// Largest `sigma`, then largest `tau`, whose exclusions are all voted unused.
///
/// The index set is read from the first mask's trial metadata; every mask
/// must come from the same shape.
pub fn propose_params(masks: &[UsageMask], threshold: f64) -> Result<ParamProposal> {
    let first = masks
        .first()
        .ok_or_else(|| Error::InvalidParameter("no masks to infer from".into()))?;
    let params = &first
        .trial_meta
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("mask carries no trial metadata".into()))?
        .params;
    let same = |p: &AttackParams| (p.m, p.t, p.sigma, p.tau) == (params.m, params.t, params.sigma, params.tau);
    if !masks
        .iter()
        .all(|mk| mk.trial_meta.as_ref().is_some_and(|t| same(&t.params)))
    {
        return Err(Error::InvalidParameter(
            "masks come from different lattice shapes".into(),
        ));
    }
    propose_params_with(masks, &shift_indices(params)?, params.m, params.t, threshold)
}

/// As [`propose_params`] with the mask columns labelled by `row_index`.
///
/// `sigma` stays in `-1..m` and `tau` in `-2t-1..m-2` so that both shift
/// families keep at least one row.
pub fn propose_params_with(
    masks: &[UsageMask],
    row_index: &[ShiftIndex],
    m: u32,
    t: u32,
    threshold: f64,
) -> Result<ParamProposal> {
    if masks.is_empty() {
        return Err(Error::InvalidParameter("no masks to infer from".into()));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!("threshold {threshold} outside (0, 1]")));
    }
    if masks[0].used.len() != row_index.len() {
        return Err(Error::DimensionMismatch(format!(
            "masks have {} entries, index has {}",
            masks[0].used.len(),
            row_index.len()
        )));
    }
    let unused = vote_unused(masks, threshold)?;
    let excluded = |s: &ShiftIndex, sigma: i32, tau: i32| match s.kind {
        ShiftKind::XShift => (s.idx + s.ell) as i64 <= sigma as i64,
        ShiftKind::YShift => s.ell as i64 - 2 * s.idx as i64 <= tau as i64,
    };
    let all_unused = |sigma: i32, tau: i32| {
        row_index
            .iter()
            .zip(&unused)
            .all(|(s, &u)| u || !excluded(s, sigma, tau))
    };
    let tau_floor = unpruned_tau(t);
    let sigma = (UNPRUNED_SIGMA..m as i32)
        .rev()
        .find(|&s| all_unused(s, tau_floor))
        .unwrap_or(UNPRUNED_SIGMA);
    let tau = (tau_floor..m as i32 - 2)
        .rev()
        .find(|&tt| all_unused(sigma, tt))
        .unwrap_or(tau_floor);
    let removed: Vec<usize> = (0..row_index.len())
        .filter(|&c| excluded(&row_index[c], sigma, tau))
        .collect();
    let consistent = masks.iter().filter(|mk| removed.iter().all(|&c| !mk.used[c])).count();
    Ok(ParamProposal {
        sigma,
        tau,
        evidence: consistent as f64 / masks.len() as f64,
        removed_count: removed.len(),
    })
}

/// One CSV row per mask: seed, status, then 0/1 per basis row.
pub fn masks_csv(masks: &[UsageMask], row_index: &[ShiftIndex]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["seed".to_string(), "status".to_string()];
    header.extend(row_index.iter().map(shift_label));
    w.write_record(&header)?;
    for mk in masks {
        if mk.used.len() != row_index.len() {
            return Err(Error::DimensionMismatch("mask length differs from index".into()));
        }
        let (seed, status) = match &mk.trial_meta {
            Some(t) => (t.seed.to_string(), t.status.as_str().to_string()),
            None => (String::new(), String::new()),
        };
        let mut rec = vec![seed, status];
        rec.extend(mk.used.iter().map(|&u| if u { "1" } else { "0" }.to_string()));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Entries of `u` replaced by their signs.
pub fn transform_sign_csv(u: &IntMatrix) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in u.sign_pattern() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// `x(i,l)` or `y(j,l)`.
pub fn shift_label(s: &ShiftIndex) -> String {
    let k = match s.kind {
        ShiftKind::XShift => 'x',
        ShiftKind::YShift => 'y',
    };
    format!("{k}({},{})", s.idx, s.ell)
}
