//! Focus-group pruning: a small campaign on the full lattice, a vote on
//! which input rows never reach the short outputs, and a pruned re-run.
//!
//! ```text
//! cargo run --release --example focus_group -- [trials]
//! ```

use std::time::Instant;

use smallroots::attack::{run_attack, AttackOptions};
use smallroots::builder::AttackParams;
use smallroots::focusgroup::{
    majority_unused, propose_params, shift_label, trial_campaign, CampaignConfig, PatternGrid,
};
use smallroots::rsa::keygen;

fn main() -> smallroots::Result<()> {
    let trials: u64 = std::env::args().nth(1).map_or(8, |s| s.parse().expect("trials"));
    let cfg = CampaignConfig::unpruned(512, 0.251, 4, 2, trials, 100);
    let options = AttackOptions::default();

    let campaign = trial_campaign(&cfg, &options)?;
    println!("{}/{} trials factored", campaign.successes(), trials);
    if campaign.masks.is_empty() {
        return Ok(());
    }
    let row_index = campaign.row_index()?;
    let unused = majority_unused(&campaign.masks)?;
    let names: Vec<String> = row_index
        .iter()
        .zip(&unused)
        .filter(|(_, u)| **u)
        .map(|(s, _)| shift_label(s))
        .collect();
    println!("unused by majority: {}", names.join(" "));

    let grid = PatternGrid {
        m: cfg.m,
        t: cfg.t,
        cells: row_index.iter().copied().zip(unused.iter().map(|u| !u)).collect(),
    };
    print!(
        "x-shifts (1 used, 0 unused):\n{}",
        String::from_utf8_lossy(&grid.x_grid_csv()?)
    );
    print!("y-shifts:\n{}", String::from_utf8_lossy(&grid.y_grid_csv()?));

    let proposal = propose_params(&campaign.masks, 0.5)?;
    println!(
        "proposal: sigma {} tau {} removes {} rows (evidence {:.2})",
        proposal.sigma, proposal.tau, proposal.removed_count, proposal.evidence
    );

    for t in campaign.trials.iter().filter(|t| t.status.as_str() == "factored") {
        let inst = keygen(cfg.modulus_bits, cfg.delta, t.seed)?;
        let params = AttackParams::derive(&inst.e, cfg.m, cfg.t, proposal.sigma, proposal.tau, cfg.delta)?;
        let t0 = Instant::now();
        let out = run_attack(&inst.public_key(), &params, &options)?;
        println!(
            "seed {:>3}: full {:.2}s -> pruned {}x{} {:.2}s ({}, {:.2}s total)",
            t.seed,
            t.reduction_seconds,
            out.diagnostics.basis.rows(),
            out.diagnostics.basis.cols(),
            out.diagnostics.reduction_seconds,
            out.status.as_str(),
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
