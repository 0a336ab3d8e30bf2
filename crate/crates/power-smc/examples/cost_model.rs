//! Token-evaluation accounting: closed forms vs measured ledgers.
//!
//! MH pays for every regenerated suffix; SMC pays one batched row per
//! particle per step, and batching earns a hardware speedup. The closed
//! forms below come out of the uniform edit-index distribution, and the
//! measured ledgers should land on them once the horizon dwarfs the block
//! size.
//!
//! ```text
//! cargo run --release --example cost_model
//! ```

use power_smc::cost::{
    compute_ratio, mean_token_evals, mh_cost_global, mh_cost_lastblock, overhead_floor, reconcile,
    wallclock_ratio, CostParams, Regime, SpeedupTable,
};
use power_smc::mh::{run_mh_power, MhConfig};
use power_smc::presets;

fn main() -> power_smc::Result<()> {
    // -- closed forms -------------------------------------------------------
    // sixteen one-token blocks, ten moves each: 1 + 10 * 17 / 4 evals/token
    let per_token_global = mh_cost_global(16, 1, 10)? / 16.0;
    println!("global regime, M = 10, K = 16: {per_token_global} evals per generated token");
    assert_eq!(per_token_global, 43.5);

    let params = CostParams {
        horizon: 16,
        block: 1,
        moves_per_block: 10,
        particles: 48,
        speedup: SpeedupTable::default(),
    };
    let ratio = compute_ratio(&params)?;
    println!("MH/SMC compute ratio at N = 48: {ratio:.5}");
    assert!((ratio - 0.90625).abs() < 1e-12, "43.5 / 48 token evals");

    let s48 = params.speedup.lookup(48)?;
    let wall = wallclock_ratio(&params, Regime::Global)?;
    println!("batch speedup s(48) = {s48}; wall-clock ratio MH/SMC = {wall}");
    assert_eq!(wall, 21.75);

    let floor = overhead_floor(10);
    println!("last-block floor, M = 10: {floor}x baseline decoding");
    assert_eq!(floor, 6.0);

    // -- measured ledgers ---------------------------------------------------
    let horizon = 256u64;
    let runs = 30u64;
    println!("\n{runs} chains, T = {horizon}, B = 32, M = 10:");
    for regime in [Regime::Global, Regime::LastBlock] {
        let analytic = match regime {
            Regime::Global => mh_cost_global(horizon, 32, 10)?,
            Regime::LastBlock => mh_cost_lastblock(horizon, 10),
        };
        let mut ledgers = Vec::new();
        for i in 0..runs {
            let model = presets::cost_synthetic(1000 + i, 2 * horizon as usize);
            let mut config = MhConfig::new(horizon as usize, 32, 10, 500 + i);
            config.regime = regime;
            ledgers.push(run_mh_power(&model, &config)?.ledger);
        }
        let empirical = mean_token_evals(&ledgers)?;
        let report = reconcile(regime.name(), empirical, analytic, 0.05);
        println!(
            "  {:>10}: analytic {:>9.1}, measured {:>9.1}, rel err {:.4} -> {}",
            report.regime,
            report.analytic,
            report.empirical_mean,
            report.relative_error,
            if report.pass { "pass" } else { "FAIL" }
        );
        assert!(report.pass);
    }
    println!("\nok: ledgers agree with the closed forms");
    Ok(())
}
