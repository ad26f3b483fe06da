//! Command-line surface. The binary only parses arguments and maps the
//! result of [`run`] to an exit code; everything else lives here so it can
//! be driven from tests.
//!
//! Exit codes: 0 success, 1 the attack ran but did not factor, 2 usage
//! error, 3 internal invariant violation.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::attack::{run_attack, AttackOptions, AttackOutcome, OutcomeRecord};
use crate::builder::{build_basis, unpruned_tau, AttackParams, LatticeBasis, UNPRUNED_SIGMA};
use crate::error::{Error, Result};
use crate::focusgroup::{
    masks_csv, propose_params_with, transform_sign_csv, vote_unused, Campaign, CampaignConfig, ParamProposal,
    PatternGrid, DEFAULT_SHORTLIST, DEFAULT_THRESHOLD,
};
use crate::io::{matrix_to_csv, write_atomic};
use crate::lattice::{length_profile, lll_reduce_with, LengthProfile, ReductionResult};
use crate::rsa::{keygen, wiener, InstanceRecord, PublicKey};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "smallroots",
    version,
    about = "Small-d RSA lattice attacks and focus-group pruning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a deterministic instance.
    Keygen(KeygenArgs),
    /// Attack one public key.
    Attack(AttackArgs),
    /// Run trials, vote on unused rows and propose pruning parameters.
    Campaign(CampaignArgs),
    /// Build (and optionally attack) every shape in a grid file.
    Table(TableArgs),
    /// Write a basis, its reduction transform signs and length profiles.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long, default_value_t = 512)]
    pub bits: u32,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Include p, q, d, k and phi in the output.
    #[arg(long)]
    pub emit_secrets: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Wiener,
    Bd,
    Focus,
}

/// Where the public key comes from.
#[derive(Debug, Args)]
pub struct KeySource {
    /// Instance JSON; secret fields, when present, switch on oracle checks.
    #[arg(long, conflicts_with_all = ["n", "e"])]
    pub instance: Option<PathBuf>,
    #[arg(long, requires = "e")]
    pub n: Option<String>,
    #[arg(long, requires = "n")]
    pub e: Option<String>,
}

/// Lattice shape flags shared by `attack` and `export`.
#[derive(Debug, Args)]
pub struct ShapeArgs {
    #[arg(long, value_enum, default_value_t = Mode::Focus)]
    pub mode: Mode,
    #[arg(long, default_value_t = 3)]
    pub m: u32,
    #[arg(long, default_value_t = 1)]
    pub t: u32,
    /// Required in focus mode; bd mode keeps every shift.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<i32>,
    /// Guess for log_n(d); defaults to the instance file's delta.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Override X.
    #[arg(long)]
    pub x_bound: Option<String>,
    /// Override Y.
    #[arg(long)]
    pub y_bound: Option<String>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub key: KeySource,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Cap on resultant pairs, as a prefix of the pair ordering.
    #[arg(long)]
    pub max_pairs: Option<usize>,
    /// Include recovered p, q, d and the root in the outcome.
    #[arg(long)]
    pub emit_secrets: bool,
    /// Outcome JSON; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for basis, transform-sign and profile CSVs.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[arg(long, default_value_t = 512)]
    pub bits: u32,
    #[arg(long, default_value_t = 0.251, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 4)]
    pub m: u32,
    #[arg(long, default_value_t = 2)]
    pub t: u32,
    /// Defaults to the unpruned value.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<i32>,
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
    /// First seed; trials use seed, seed + 1, ...
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_SHORTLIST)]
    pub shortlist: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub max_pairs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// CSV with header `bits,delta,m,t,sigma,tau`.
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Build bases only; skip reduction and the attack.
    #[arg(long)]
    pub dims_only: bool,
    #[arg(long)]
    pub max_pairs: Option<usize>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub key: KeySource,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// One line of the experiment table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub modulus_bits: u32,
    pub d_bits: u64,
    pub delta: f64,
    pub m: u32,
    pub t: u32,
    pub sigma: i32,
    pub tau: i32,
    pub matrix_rows: usize,
    pub matrix_cols: usize,
    pub reduction_seconds: f64,
    pub status: String,
}

#[derive(Clone, Debug, Deserialize)]
struct GridRow {
    bits: u32,
    delta: f64,
    m: u32,
    t: u32,
    sigma: i32,
    tau: i32,
}

/// Exit code for an error: 2 for anything the caller got wrong, 3 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) | Error::Parse(_) | Error::Io(_) | Error::Json(_) | Error::EmptyRange => EXIT_USAGE,
        _ => EXIT_INVARIANT,
    }
}

/// Runs one command and returns its exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Keygen(a) => cmd_keygen(&a),
        Command::Attack(a) => cmd_attack(&a),
        Command::Campaign(a) => cmd_campaign(&a),
        Command::Table(a) => cmd_table(&a),
        Command::Export(a) => cmd_export(&a),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
            Ok(())
        }
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

fn parse_big(s: &str, what: &str) -> Result<BigInt> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what} is not a decimal integer: {s:?}")))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "--delta must lie in (0, 0.5), got {delta}"
        )))
    }
}

pub fn cmd_keygen(a: &KeygenArgs) -> Result<i32> {
    check_delta(a.delta)?;
    let inst = keygen(a.bits, a.delta, a.seed)?;
    emit(a.out.as_deref(), &json_bytes(&inst.to_record(a.emit_secrets))?)?;
    Ok(EXIT_OK)
}

fn load_key(src: &KeySource) -> Result<InstanceRecord> {
    match (&src.instance, &src.n, &src.e) {
        (Some(path), _, _) => Ok(serde_json::from_slice(&fs::read(path)?)?),
        (None, Some(n), Some(e)) => Ok(InstanceRecord {
            n: parse_big(n, "--n")?,
            e: parse_big(e, "--e")?,
            p: None,
            q: None,
            d: None,
            k: None,
            phi: None,
            delta: None,
            seed: None,
            modulus_bits: None,
        }),
        _ => Err(Error::InvalidParameter("pass --instance or both --n and --e".into())),
    }
}

fn resolve_params(shape: &ShapeArgs, rec: &InstanceRecord) -> Result<AttackParams> {
    let delta = shape
        .delta
        .or(rec.delta)
        .ok_or_else(|| Error::InvalidParameter("--delta is required when the key carries none".into()))?;
    check_delta(delta)?;
    let (sigma, tau) = match shape.mode {
        Mode::Bd => (UNPRUNED_SIGMA, unpruned_tau(shape.t)),
        _ => match (shape.sigma, shape.tau) {
            (Some(s), Some(t)) => (s, t),
            _ => return Err(Error::InvalidParameter("focus mode needs --sigma and --tau".into())),
        },
    };
    let mut params = AttackParams::derive(&rec.e, shape.m, shape.t, sigma, tau, delta)?;
    if let Some(x) = &shape.x_bound {
        params.x_bound = parse_big(x, "--x-bound")?;
    }
    if let Some(y) = &shape.y_bound {
        params.y_bound = parse_big(y, "--y-bound")?;
    }
    params.validate()?;
    Ok(params)
}

/// Profile CSV with one `before,after` line per basis row.
pub fn profile_csv(before: &LengthProfile, after: &LengthProfile) -> Result<Vec<u8>> {
    if before.0.len() != after.0.len() {
        return Err(Error::DimensionMismatch("profiles differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["before", "after"])?;
    for (b, a) in before.0.iter().zip(&after.0) {
        w.write_record([b.to_string(), a.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes the diagnostic files into `dir` and returns label to path.
fn write_exports(
    dir: &Path,
    basis: &LatticeBasis,
    red: &ReductionResult,
    before: &LengthProfile,
    after: &LengthProfile,
) -> Result<Vec<(String, String)>> {
    fs::create_dir_all(dir)?;
    let files: [(&str, &str, Vec<u8>); 5] = [
        ("basis", "basis.csv", matrix_to_csv(&basis.matrix)?),
        ("sidecar", "basis.json", json_bytes(&basis.sidecar())?),
        ("reduced", "reduced.csv", matrix_to_csv(&red.reduced)?),
        (
            "transform_sign",
            "transform_sign.csv",
            transform_sign_csv(&red.transform)?,
        ),
        ("profile", "profile.csv", profile_csv(before, after)?),
    ];
    let mut out = Vec::new();
    for (label, name, bytes) in files {
        let p = dir.join(name);
        write_atomic(&p, &bytes)?;
        out.push((label.to_string(), p.display().to_string()));
    }
    Ok(out)
}

fn redact(rec: &mut OutcomeRecord) {
    rec.p = None;
    rec.q = None;
    rec.d = None;
    rec.x0 = None;
    rec.y0 = None;
}

fn attack_options(max_pairs: Option<usize>) -> Result<AttackOptions> {
    let mut o = AttackOptions::from_env()?;
    o.max_pairs = max_pairs;
    Ok(o)
}

pub fn cmd_attack(a: &AttackArgs) -> Result<i32> {
    let rec = load_key(&a.key)?;
    let pk = rec.public_key()?;
    let (mut record, factored) = if a.shape.mode == Mode::Wiener {
        wiener_record(&pk)
    } else {
        let params = resolve_params(&a.shape, &rec)?;
        let mut options = attack_options(a.max_pairs)?;
        options.secrets_hint = rec.instance().map(|i| i.secret_root());
        let out = run_attack(&pk, &params, &options)?;
        if let Some(inst) = rec.instance() {
            oracle_checks(&out, &inst.p, &inst.q)?;
        }
        let mut record = out.to_record();
        record.mode = match a.shape.mode {
            Mode::Bd => "bd".into(),
            _ => "focus".into(),
        };
        if let Some(dir) = &a.export {
            let dg = &out.diagnostics;
            let files = write_exports(dir, &dg.basis, &dg.reduction, &dg.profile_before, &dg.profile_after)?;
            record.exports.extend(files);
        }
        (record, out.is_factored())
    };
    if !a.emit_secrets {
        redact(&mut record);
    }
    emit(a.out.as_deref(), &json_bytes(&record)?)?;
    Ok(if factored { EXIT_OK } else { EXIT_FAILED })
}

fn wiener_record(pk: &PublicKey) -> (OutcomeRecord, bool) {
    let w = wiener(pk);
    let factored = w.is_some();
    let record = OutcomeRecord {
        mode: "wiener".into(),
        status: if factored { "factored" } else { "not-factored" }.into(),
        p: w.as_ref().map(|w| w.p.clone()),
        q: w.as_ref().map(|w| w.q.clone()),
        d: w.as_ref().map(|w| w.d.clone()),
        ..OutcomeRecord::default()
    };
    (record, factored)
}

/// With the factors known, a reported factorization must be the right one.
fn oracle_checks(out: &AttackOutcome, p: &BigInt, q: &BigInt) -> Result<()> {
    if let (Some(fp), Some(fq)) = (&out.p, &out.q) {
        let ok = (fp == p && fq == q) || (fp == q && fq == p);
        if !ok {
            return Err(Error::Invariant("recovered factors differ from the instance's".into()));
        }
    }
    Ok(())
}

/// Campaign summary written next to the masks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub threshold: f64,
    pub successes: usize,
    pub statuses: Vec<(u64, String)>,
    pub unused_rows: Vec<String>,
    pub proposal: Option<ParamProposal>,
}

pub fn cmd_campaign(a: &CampaignArgs) -> Result<i32> {
    check_delta(a.delta)?;
    if !(a.threshold > 0.0 && a.threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "--threshold must lie in (0, 1], got {}",
            a.threshold
        )));
    }
    let cfg = CampaignConfig {
        sigma: a.sigma.unwrap_or(UNPRUNED_SIGMA),
        tau: a.tau.unwrap_or_else(|| unpruned_tau(a.t)),
        shortlist: a.shortlist,
        ..CampaignConfig::unpruned(a.bits, a.delta, a.m, a.t, a.trials, a.seed)
    };
    let campaign = crate::focusgroup::trial_campaign(&cfg, &attack_options(a.max_pairs)?)?;
    let report = campaign_report(&campaign, a.threshold)?;
    fs::create_dir_all(&a.out)?;
    let row_index = campaign.row_index()?;
    write_atomic(&a.out.join("masks.csv"), &masks_csv(&campaign.masks, &row_index)?)?;
    if !campaign.masks.is_empty() {
        let unused = vote_unused(&campaign.masks, a.threshold)?;
        let grid = PatternGrid {
            m: cfg.m,
            t: cfg.t,
            cells: row_index.iter().copied().zip(unused.iter().map(|u| !u)).collect(),
        };
        write_atomic(&a.out.join("x_grid.csv"), &grid.x_grid_csv()?)?;
        write_atomic(&a.out.join("y_grid.csv"), &grid.y_grid_csv()?)?;
    }
    write_atomic(&a.out.join("proposal.json"), &json_bytes(&report)?)?;
    Ok(if report.proposal.is_some() {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

/// Votes over a finished campaign; no proposal when nothing was factored.
pub fn campaign_report(c: &Campaign, threshold: f64) -> Result<CampaignReport> {
    let row_index = c.row_index()?;
    let (unused_rows, proposal) = if c.masks.is_empty() {
        (Vec::new(), None)
    } else {
        let unused = vote_unused(&c.masks, threshold)?;
        let names = row_index
            .iter()
            .zip(&unused)
            .filter(|(_, u)| **u)
            .map(|(s, _)| crate::focusgroup::shift_label(s))
            .collect();
        let p = propose_params_with(&c.masks, &row_index, c.config.m, c.config.t, threshold)?;
        (names, Some(p))
    };
    Ok(CampaignReport {
        config: c.config.clone(),
        threshold,
        successes: c.successes(),
        statuses: c
            .trials
            .iter()
            .map(|t| (t.seed, t.status.as_str().to_string()))
            .collect(),
        unused_rows,
        proposal,
    })
}

pub fn experiment_rows(grid: &[u8], seed: u64, dims_only: bool, options: &AttackOptions) -> Result<Vec<ExperimentRow>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(grid);
    let cells: Vec<GridRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    if cells.is_empty() {
        return Err(Error::InvalidParameter("grid file has no rows".into()));
    }
    let mut rows = Vec::with_capacity(cells.len());
    for g in cells {
        check_delta(g.delta)?;
        let inst = keygen(g.bits, g.delta, seed)?;
        let params = AttackParams::derive(&inst.e, g.m, g.t, g.sigma, g.tau, g.delta)?;
        let (dims, secs, status) = if dims_only {
            let b = build_basis(&inst.n, &inst.e, &params)?;
            ((b.rows(), b.cols()), 0.0, "not-run".to_string())
        } else {
            let out = run_attack(&inst.public_key(), &params, options)?;
            let dg = &out.diagnostics;
            (
                (dg.basis.rows(), dg.basis.cols()),
                dg.reduction_seconds,
                out.status.as_str().to_string(),
            )
        };
        rows.push(ExperimentRow {
            modulus_bits: inst.modulus_bits,
            d_bits: inst.d.bits(),
            delta: g.delta,
            m: g.m,
            t: g.t,
            sigma: g.sigma,
            tau: g.tau,
            matrix_rows: dims.0,
            matrix_cols: dims.1,
            reduction_seconds: secs,
            status,
        });
    }
    Ok(rows)
}

pub fn cmd_table(a: &TableArgs) -> Result<i32> {
    let grid = fs::read(&a.grid)?;
    let rows = experiment_rows(&grid, a.seed, a.dims_only, &attack_options(a.max_pairs)?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    emit(a.out.as_deref(), &bytes)?;
    Ok(EXIT_OK)
}

pub fn cmd_export(a: &ExportArgs) -> Result<i32> {
    if a.shape.mode == Mode::Wiener {
        return Err(Error::InvalidParameter(
            "export needs a lattice mode (bd or focus)".into(),
        ));
    }
    let rec = load_key(&a.key)?;
    let params = resolve_params(&a.shape, &rec)?;
    let basis = build_basis(&rec.n, &rec.e, &params)?;
    let options = AttackOptions::from_env()?;
    let before = length_profile(&basis.matrix)?;
    let t0 = Instant::now();
    let red = lll_reduce_with(&basis.matrix, options.lll_delta, options.strategy)?;
    log::info!(
        "reduced {}x{} in {:.2}s",
        basis.rows(),
        basis.cols(),
        t0.elapsed().as_secs_f64()
    );
    let after = length_profile(&red.reduced)?;
    let files = write_exports(&a.out, &basis, &red, &before, &after)?;
    for (label, path) in files {
        println!("{label}\t{path}");
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("smallroots").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn negative_shift_params_parse() {
        let cli = parse(&["attack", "--n", "15", "--e", "7", "--sigma", "-1", "--tau", "-5"]);
        let Command::Attack(a) = cli.command else { panic!() };
        assert_eq!((a.shape.sigma, a.shape.tau), (Some(-1), Some(-5)));
    }

    #[test]
    fn bad_delta_is_usage_error() {
        let a = KeygenArgs {
            bits: 512,
            delta: 0.6,
            seed: 0,
            emit_secrets: false,
            out: None,
        };
        let err = cmd_keygen(&a).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_USAGE);
        assert!(err.to_string().contains("(0, 0.5)"));
    }

    #[test]
    fn invariant_errors_map_to_three() {
        assert_eq!(exit_code(&Error::InexactUnscale { col: 0, a: 1, b: 0 }), EXIT_INVARIANT);
        assert_eq!(exit_code(&Error::Invariant("x".into())), EXIT_INVARIANT);
    }

    #[test]
    fn empty_grid_rejected() {
        let err = experiment_rows(b"bits,delta,m,t,sigma,tau\n", 0, true, &AttackOptions::default()).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_USAGE);
    }

    #[test]
    fn grid_dims_only() {
        let rows = experiment_rows(
            b"bits,delta,m,t,sigma,tau\n256,0.26,3,1,1,0\n256,0.26,4,1,1,0\n",
            1,
            true,
            &AttackOptions::default(),
        )
        .unwrap();
        let dims: Vec<_> = rows.iter().map(|r| (r.matrix_rows, r.matrix_cols)).collect();
        assert_eq!(dims, vec![(8, 14), (14, 20)]);
    }

    #[test]
    fn bd_mode_ignores_sigma_tau() {
        let rec = InstanceRecord {
            n: BigInt::from(1_000_003u64) * BigInt::from(1_000_033u64),
            e: BigInt::from(65537),
            p: None,
            q: None,
            d: None,
            k: None,
            phi: None,
            delta: Some(0.26),
            seed: None,
            modulus_bits: None,
        };
        let cli = parse(&[
            "export", "--n", "1", "--e", "1", "--mode", "bd", "--m", "4", "--t", "2", "--out", "x",
        ]);
        let Command::Export(a) = cli.command else { panic!() };
        let p = resolve_params(&a.shape, &rec).unwrap();
        assert_eq!((p.sigma, p.tau), (UNPRUNED_SIGMA, unpruned_tau(2)));
    }
}
