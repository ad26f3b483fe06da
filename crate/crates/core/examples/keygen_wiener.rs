//! Deterministic key generation and the continued-fraction baseline.
//!
//! ```text
//! cargo run --release --example keygen_wiener -- [bits] [seeds]
//! ```

use smallroots::rsa::{keygen, wiener};

fn main() -> smallroots::Result<()> {
    let mut args = std::env::args().skip(1);
    let bits: u32 = args.next().map_or(512, |s| s.parse().expect("bits"));
    let seeds: u64 = args.next().map_or(20, |s| s.parse().expect("seeds"));

    let inst = keygen(bits, 0.26, 7)?;
    println!("n   = {}", inst.n);
    println!("e   = {} ({} bits)", inst.e, inst.e.bits());
    println!(
        "d   = {} ({} bits, delta {:.4})",
        inst.d,
        inst.d.bits(),
        inst.actual_delta()
    );
    let (x0, y0) = inst.secret_root();
    println!("root (k, p+q-1) = ({x0}, {y0})");

    for delta in [0.20, 0.24, 0.25, 0.26, 0.27] {
        let mut wins = 0;
        for seed in 0..seeds {
            let inst = keygen(bits, delta, seed)?;
            if let Some(w) = wiener(&inst.public_key()) {
                assert_eq!(w.d, inst.d);
                wins += 1;
            }
        }
        println!("delta {delta:.2}: wiener recovers d on {wins}/{seeds} keys");
    }
    Ok(())
}
