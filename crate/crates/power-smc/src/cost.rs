//! Closed-form compute and latency cost model, plus the empirical ledger the
//! formulas are reconciled against.
//!
//! The unit of compute is one token-eval: a single cached forward step of the
//! model for one sequence. A batched decode step over `b` active lanes costs
//! `b` token-evals but only `b / s(b)` time units, where `s` is a tabulated
//! batch-throughput multiplier with `s(1) = 1` and `1 <= s(b) <= b`.
//!
//! Closed forms covered:
//! - batched SMC: `N * T` token-evals, wall-clock `T * N / s(N)`;
//! - block MH with global edits: `T * (1 + M(K+1)/4)`, which is `Θ(T²/B)`;
//! - block MH with last-block edits: `T * (1 + M/2)`, the overhead floor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edit-index regime for the MH cost formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Edit index uniform over the whole current prefix.
    Global,
    /// Edit index uniform over the most recent block only.
    LastBlock,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Global => "global",
            Regime::LastBlock => "last-block",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Regime::Global),
            "last-block" | "lastblock" => Ok(Regime::LastBlock),
            other => Err(Error::Input(format!(
                "unknown regime {other:?}; expected \"global\" or \"last-block\""
            ))),
        }
    }
}

/// Tabulated batch-throughput multiplier `s(b)`.
///
/// Entries are `(batch, multiplier)` pairs with strictly increasing batch
/// sizes. Validity requires `s(1) = 1`, nondecreasing multipliers, and
/// `s(b) <= b`. Lookups are exact: querying an untabulated batch size is an
/// input error rather than an interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u64, f64)>", into = "Vec<(u64, f64)>")]
pub struct SpeedupTable {
    entries: Vec<(u64, f64)>,
}

impl SpeedupTable {
    pub fn new(mut entries: Vec<(u64, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(b, _)| b);
        if entries.first().map(|&(b, s)| (b, s)) != Some((1, 1.0)) {
            return Err(Error::Input(
                "speedup table must start with the entry (1, 1.0)".into(),
            ));
        }
        let mut prev_b = 0u64;
        let mut prev_s = 0.0f64;
        for &(b, s) in &entries {
            if b == prev_b {
                return Err(Error::Input(format!("duplicate batch size {b} in speedup table")));
            }
            if !s.is_finite() || s < prev_s {
                return Err(Error::Input(
                    "speedup multipliers must be finite and nondecreasing".into(),
                ));
            }
            if s < 1.0 || s > b as f64 {
                return Err(Error::Input(format!(
                    "speedup s({b}) = {s} outside [1, {b}]"
                )));
            }
            prev_b = b;
            prev_s = s;
        }
        Ok(Self { entries })
    }

    /// `s(b)` for a tabulated batch size.
    pub fn lookup(&self, batch: u64) -> Result<f64> {
        self.entries
            .iter()
            .find(|&&(b, _)| b == batch)
            .map(|&(_, s)| s)
            .ok_or_else(|| Error::Input(format!("speedup table has no entry for batch {batch}")))
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }
}

impl Default for SpeedupTable {
    /// `s(b) = b / 2` at common batch sizes (and `s(1) = 1`).
    fn default() -> Self {
        Self::new(vec![
            (1, 1.0),
            (2, 1.0),
            (4, 2.0),
            (8, 4.0),
            (16, 8.0),
            (32, 16.0),
            (48, 24.0),
            (64, 32.0),
            (128, 64.0),
        ])
        .expect("default speedup table is valid")
    }
}

impl TryFrom<Vec<(u64, f64)>> for SpeedupTable {
    type Error = Error;
    fn try_from(entries: Vec<(u64, f64)>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<SpeedupTable> for Vec<(u64, f64)> {
    fn from(table: SpeedupTable) -> Self {
        table.entries
    }
}

/// Parameters of the cost comparison: horizon `T`, block length `B` (with
/// `K = T / B` blocks), moves per block `M`, particle count `N`, and the
/// batch-throughput table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub horizon: u64,
    pub block: u64,
    pub moves_per_block: u64,
    pub particles: u64,
    #[serde(default)]
    pub speedup: SpeedupTable,
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.block == 0 || self.particles == 0 {
            return Err(Error::Input(
                "horizon, block, and particles must all be at least 1".into(),
            ));
        }
        if self.horizon % self.block != 0 {
            return Err(Error::Input(format!(
                "block length {} must divide the horizon {}",
                self.block, self.horizon
            )));
        }
        Ok(())
    }

    /// Number of blocks `K = T / B`.
    pub fn num_blocks(&self) -> u64 {
        self.horizon / self.block
    }
}

/// Token-evals of batched SMC: `N * T` (every particle advanced every step).
pub fn smc_cost(particles: u64, horizon: u64) -> Result<u64> {
    if particles == 0 || horizon == 0 {
        return Err(Error::Input("smc_cost needs N, T >= 1".into()));
    }
    Ok(particles * horizon)
}

/// Expected token-evals of global-edit MH: `T * (1 + M(K+1)/4)`.
///
/// Each move in block `k` regenerates an expected `k*B/2` tokens, so the
/// total grows as `Θ(T²/B)` at fixed block length.
pub fn mh_cost_global(horizon: u64, block: u64, moves_per_block: u64) -> Result<f64> {
    if block == 0 || horizon == 0 {
        return Err(Error::Input("mh_cost_global needs T, B >= 1".into()));
    }
    if horizon % block != 0 {
        return Err(Error::Input(format!(
            "block length {block} must divide the horizon {horizon}"
        )));
    }
    let k = (horizon / block) as f64;
    Ok(horizon as f64 * (1.0 + moves_per_block as f64 * (k + 1.0) / 4.0))
}

/// Expected token-evals of last-block MH: `T * (1 + M/2)`.
pub fn mh_cost_lastblock(horizon: u64, moves_per_block: u64) -> f64 {
    horizon as f64 * (1.0 + moves_per_block as f64 / 2.0)
}

/// Expected MH overhead relative to baseline decoding, `1 + M/2`: the floor
/// that survives even a perfect inference engine.
pub fn overhead_floor(moves_per_block: u64) -> f64 {
    1.0 + moves_per_block as f64 / 2.0
}

/// Compute ratio `E[C_MH] / C_SMC = (1 + M(K+1)/4) / N` (global regime).
pub fn compute_ratio(params: &CostParams) -> Result<f64> {
    params.validate()?;
    let mh = mh_cost_global(params.horizon, params.block, params.moves_per_block)?;
    Ok(mh / smc_cost(params.particles, params.horizon)? as f64)
}

/// Wall-clock ratio `Time_MH / Time_SMC`: the regime's compute factor times
/// `s(N) / N`, since MH runs at batch 1 while SMC amortizes over `N` lanes.
pub fn wallclock_ratio(params: &CostParams, regime: Regime) -> Result<f64> {
    params.validate()?;
    let factor = match regime {
        Regime::Global => {
            mh_cost_global(params.horizon, params.block, params.moves_per_block)?
                / params.horizon as f64
        }
        Regime::LastBlock => overhead_floor(params.moves_per_block),
    };
    let s_n = params.speedup.lookup(params.particles)?;
    Ok(factor * s_n / params.particles as f64)
}

/// Empirical compute ledger filled in by instrumented runs.
///
/// `token_evals` always equals the sum of recorded per-step batch sizes;
/// absorbed lanes in a batched step are free under the active-only
/// convention, while `worst_case_evals` charges the full lane count. MH
/// moves additionally record regenerated suffix lengths, giving the exact
/// identity `token_evals = extension tokens + sum of suffix lengths`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostLedger {
    token_evals: u64,
    worst_case_evals: u64,
    step_batches: Vec<u32>,
    suffix_lengths: Vec<u32>,
}

impl CostLedger {
    /// Records one batched decode step with `active` evaluated lanes out of
    /// `lanes` total.
    pub fn record_step(&mut self, active: u64, lanes: u64) {
        self.token_evals += active;
        self.worst_case_evals += lanes;
        self.step_batches.push(active as u32);
    }

    /// Records the regenerated suffix length of one MH move.
    pub fn record_suffix(&mut self, len: u64) {
        self.suffix_lengths.push(len as u32);
    }

    /// Token-evals under the active-only convention.
    pub fn token_evals(&self) -> u64 {
        self.token_evals
    }

    /// Token-evals charging every lane every step.
    pub fn worst_case_evals(&self) -> u64 {
        self.worst_case_evals
    }

    pub fn num_steps(&self) -> u64 {
        self.step_batches.len() as u64
    }

    pub fn step_batches(&self) -> &[u32] {
        &self.step_batches
    }

    pub fn suffix_lengths(&self) -> &[u32] {
        &self.suffix_lengths
    }

    /// Sum of recorded per-move suffix lengths.
    pub fn total_suffix_tokens(&self) -> u64 {
        self.suffix_lengths.iter().map(|&l| l as u64).sum()
    }
}

/// Outcome of comparing an empirical mean against a closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub regime: String,
    pub analytic: f64,
    pub empirical_mean: f64,
    pub relative_error: f64,
    pub pass: bool,
}

/// Compares an empirical mean against an analytic prediction at the given
/// relative tolerance (use 0 for counts that must match exactly).
pub fn reconcile(regime: &str, empirical_mean: f64, analytic: f64, tolerance: f64) -> CostReport {
    let relative_error = if analytic == 0.0 {
        if empirical_mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (empirical_mean - analytic).abs() / analytic.abs()
    };
    CostReport {
        regime: regime.to_string(),
        analytic,
        empirical_mean,
        relative_error,
        pass: relative_error <= tolerance,
    }
}

/// Mean active-convention token-evals over a collection of run ledgers.
pub fn mean_token_evals(ledgers: &[CostLedger]) -> Result<f64> {
    if ledgers.is_empty() {
        return Err(Error::Input("no ledgers to average".into()));
    }
    let total: u64 = ledgers.iter().map(|l| l.token_evals()).sum();
    Ok(total as f64 / ledgers.len() as f64)
}
