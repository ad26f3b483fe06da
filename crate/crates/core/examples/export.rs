//! Serialize a basis with its sidecar, reduce it, and write the
//! transform-sign pattern and length profiles.
//!
//! ```text
//! cargo run --release --example export -- [out_dir]
//! ```

use std::fs;
use std::path::PathBuf;

use smallroots::builder::{build_basis, AttackParams};
use smallroots::focusgroup::transform_sign_csv;
use smallroots::io::{matrix_from_csv, matrix_to_csv, write_atomic};
use smallroots::lattice::{length_profile, lll_reduce, LovaszParam};
use smallroots::rsa::keygen;

fn main() -> smallroots::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("smallroots-export"), PathBuf::from);
    fs::create_dir_all(&dir)?;

    let inst = keygen(512, 0.26, 5)?;
    let params = AttackParams::derive(&inst.e, 4, 2, 1, -1, 0.26)?;
    let basis = build_basis(&inst.n, &inst.e, &params)?;
    let csv = matrix_to_csv(&basis.matrix)?;
    write_atomic(&dir.join("basis.csv"), &csv)?;
    write_atomic(&dir.join("basis.json"), &serde_json::to_vec_pretty(&basis.sidecar())?)?;
    assert_eq!(matrix_from_csv(&fs::read(dir.join("basis.csv"))?)?, basis.matrix);

    let red = lll_reduce(&basis.matrix, LovaszParam::default())?;
    write_atomic(&dir.join("transform_sign.csv"), &transform_sign_csv(&red.transform)?)?;
    let profile = smallroots::cli::profile_csv(&length_profile(&basis.matrix)?, &length_profile(&red.reduced)?)?;
    write_atomic(&dir.join("profile.csv"), &profile)?;

    println!("{}x{} basis written to {}", basis.rows(), basis.cols(), dir.display());
    for row in String::from_utf8_lossy(&transform_sign_csv(&red.transform)?).lines() {
        let cells: String = row
            .split(',')
            .map(|v| match v {
                "1" => '+',
                "-1" => '-',
                _ => '.',
            })
            .collect();
        println!("  {cells}");
    }
    Ok(())
}
