//! Shift index sets and basis shapes, with the determinant report.
//!
//! ```text
//! cargo run --release --example build_basis
//! ```

use smallroots::builder::{build_basis, enabling_report, shift_indices, AttackParams};
use smallroots::poly::ShiftKind;
use smallroots::rsa::keygen;

fn main() -> smallroots::Result<()> {
    let inst = keygen(512, 0.26, 1)?;
    for (m, t, sigma, tau) in [(3, 1, 1, 0), (4, 1, 1, 0), (6, 2, 2, 0), (8, 3, 2, -1)] {
        let params = AttackParams::derive(&inst.e, m, t, sigma, tau, 0.26)?;
        let idx = shift_indices(&params)?;
        let xs = idx.iter().filter(|s| s.kind == ShiftKind::XShift).count();
        let basis = build_basis(&inst.n, &inst.e, &params)?;
        println!(
            "(m,t,sigma,tau) = ({m},{t},{sigma},{tau}): {} x-shifts + {} y-shifts, matrix {}x{}",
            xs,
            idx.len() - xs,
            basis.rows(),
            basis.cols()
        );
    }

    // unpruned vs pruned for one shape
    let full = AttackParams::unpruned(&inst.e, 3, 1, 0.26)?;
    let pruned = full.with_pruning(1, 0);
    for p in [full, pruned] {
        let b = build_basis(&inst.n, &inst.e, &p)?;
        let r = enabling_report(&b, &inst.e)?;
        println!(
            "sigma {:>2} tau {:>2}: w = {:>2}, log2 |L| = {:.1}, bound {:.1}, satisfied: {}",
            p.sigma, p.tau, r.w, r.log2_covolume, r.log2_bound, r.bound_satisfied
        );
    }
    Ok(())
}
