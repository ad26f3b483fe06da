//! Reduce a basis, check the LLL contract, and compare length profiles.
//!
//! ```text
//! cargo run --release --example reduce -- [m] [t] [sigma] [tau]
//! ```

use std::time::Instant;

use smallroots::builder::{build_basis, AttackParams};
use smallroots::lattice::{check_lll_contract, length_profile, lll_reduce_with, LovaszParam, Strategy};
use smallroots::rsa::keygen;

fn main() -> smallroots::Result<()> {
    let a: Vec<i32> = std::env::args().skip(1).map(|s| s.parse().expect("integer")).collect();
    let (m, t, sigma, tau) = match a[..] {
        [m, t, s, u] => (m as u32, t as u32, s, u),
        _ => (4, 2, -1, -5),
    };
    let inst = keygen(512, 0.251, 3)?;
    let params = AttackParams::derive(&inst.e, m, t, sigma, tau, 0.251)?;
    let basis = build_basis(&inst.n, &inst.e, &params)?;
    let delta = LovaszParam::default();

    for strategy in [Strategy::Accelerated, Strategy::Exact] {
        let t0 = Instant::now();
        let red = lll_reduce_with(&basis.matrix, delta, strategy)?;
        println!(
            "{strategy:?}: {}x{} in {:.2}s, {} swaps",
            basis.rows(),
            basis.cols(),
            t0.elapsed().as_secs_f64(),
            red.swaps
        );
        let bad = check_lll_contract(&red.reduced, delta)?;
        println!("  contract violations: {}", bad.len());
        assert_eq!(red.transform.mul(&basis.matrix)?, red.reduced);
    }

    let red = lll_reduce_with(&basis.matrix, delta, Strategy::Accelerated)?;
    let (before, after) = (length_profile(&basis.matrix)?, length_profile(&red.reduced)?);
    let e_m = inst.e.bits() as f64 * m as f64;
    println!("log2 row norms (log2 e^m = {e_m:.0}):");
    for (i, (b, a)) in before.0.iter().zip(&after.0).enumerate() {
        println!("  {i:>3}  {b:>9.2}  {a:>9.2}");
    }
    Ok(())
}
