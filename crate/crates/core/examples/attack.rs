//! End-to-end attack on a fresh key, with oracle annotations.
//!
//! ```text
//! cargo run --release --example attack -- [bits] [delta] [seed] [m] [t] [sigma] [tau]
//! ```

use smallroots::attack::{run_attack, AttackOptions};
use smallroots::builder::AttackParams;
use smallroots::lattice::log2_big;
use smallroots::rsa::keygen;

fn main() -> smallroots::Result<()> {
    env_logger::init();
    let a: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: &str| a.get(i).cloned().unwrap_or_else(|| d.to_string());
    let bits: u32 = arg(0, "512").parse().expect("bits");
    let delta: f64 = arg(1, "0.26").parse().expect("delta");
    let seed: u64 = arg(2, "0").parse().expect("seed");
    let shape: Vec<i32> = (3..7)
        .map(|i| arg(i, ["3", "1", "1", "0"][i - 3]).parse().expect("shape"))
        .collect();

    let inst = keygen(bits, delta, seed)?;
    let params = AttackParams::derive(&inst.e, shape[0] as u32, shape[1] as u32, shape[2], shape[3], delta)?;
    let options = AttackOptions {
        secrets_hint: Some(inst.secret_root()),
        ..AttackOptions::from_env()?
    };
    let out = run_attack(&inst.public_key(), &params, &options)?;
    let dg = &out.diagnostics;
    println!(
        "{}-bit n, d of {} bits, lattice {}x{}, reduced in {:.2}s",
        bits,
        inst.d.bits(),
        dg.basis.rows(),
        dg.basis.cols(),
        dg.reduction_seconds
    );
    println!("enabling condition met: {}", dg.enabling.bound_satisfied);
    for c in out.candidates.iter().take(8) {
        println!(
            "  rank {:>2} (row {:>2}): log2 norm {:>8.2}  howgrave {:<5}  vanishes {:?}",
            c.rank,
            c.output_row,
            log2_big(&c.norm_sq) / 2.0,
            c.passes_howgrave,
            c.vanishes
        );
    }
    println!("status: {}", out.status.as_str());
    if let (Some(p), Some(q)) = (&out.p, &out.q) {
        assert!(p * q == inst.n);
        println!(
            "p = {p}\nq = {q}\npair {:?} after {} resultants",
            out.pair_used, out.pairs_tried
        );
    }
    Ok(())
}
