//! Regenerates the JSON spec files under `models/` from the built-in
//! presets, so the shipped files never drift from the code.
//!
//! ```text
//! cargo run --example export_model_specs [out_dir]
//! ```

use std::path::PathBuf;

use power_smc::{presets, report};

fn main() -> power_smc::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "models".into()).into();
    let specs = [
        ("two_sequence", presets::two_sequence()),
        ("oracle_3x4", presets::oracle_3x4()),
        ("mismatch_2x2", presets::mismatch_2x2()),
        ("bigram_demo", presets::bigram_demo()),
        ("cost_synthetic", presets::cost_synthetic(0, 4096)),
        ("resample_heavy", presets::resample_heavy()),
    ];
    for (name, model) in specs {
        let path = out.join(format!("{name}.json"));
        report::write_json(&path, &model.to_spec())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
