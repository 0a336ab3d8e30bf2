//! Block-structured Metropolis–Hastings power sampling, the sequential
//! baseline the particle engine is compared against.
//!
//! The chain grows in blocks of `B` tokens drawn from the base model; after
//! each extension it performs `M` independence-MH moves. A move picks an
//! edit position (uniformly over the whole prefix in the global regime, or
//! over the most recent block in the last-block regime), regenerates the
//! suffix from the proposal model, and accepts with
//!
//! ```text
//! min(1, [p(y')^alpha * (1/b(y')) * q(old suffix)]
//!        / [p(y)^alpha * (1/b(y)) * q(new suffix)])
//! ```
//!
//! where `q` is the suffix proposal density and `b(.)` the number of edit
//! positions available in each state. The `1/b` factors are the edit-index
//! proposal probabilities; they cancel whenever old and new sequences have
//! the same length (every fixed-length model) but are required for detailed
//! balance when regeneration terminates earlier or later than the suffix it
//! replaces. Every regenerated token costs one model evaluation, so the
//! ledger records exactly `T + sum of suffix lengths` per run — the quantity
//! the closed-form cost model prices.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cost::{CostLedger, Regime};
use crate::engine::{propose_token, ProposalPolicy};
use crate::error::{Error, Result};
use crate::lm::ToyModel;
use crate::rng::{stream_rng, STREAM_MH};
use crate::TokenId;

/// Move-level substream tags under `STREAM_MH`.
const DRAW_EXTEND: u64 = 0;
const DRAW_INDEX: u64 = 1;
const DRAW_SUFFIX: u64 = 2;
const DRAW_ACCEPT: u64 = 3;

/// Configuration of one MH run.
#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    pub alpha: f64,
    /// Block length `B`; must divide the horizon.
    pub block: usize,
    /// Moves per block `M`.
    pub moves_per_block: usize,
    pub regime: Regime,
    /// Proposal temperature: suffixes are regenerated from `p^(1/tau)`.
    pub tau_prop: f64,
    pub seed: u64,
    /// Total horizon `T`, giving `K = T / B` blocks.
    pub horizon: usize,
}

impl MhConfig {
    pub fn new(horizon: usize, block: usize, moves_per_block: usize, seed: u64) -> Self {
        Self {
            alpha: 4.0,
            block,
            moves_per_block,
            regime: Regime::Global,
            tau_prop: 1.0,
            seed,
            horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 1.0 {
            return Err(Error::Input(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        if self.block == 0 || self.horizon == 0 {
            return Err(Error::Input("block length and horizon must be positive".into()));
        }
        if self.horizon % self.block != 0 {
            return Err(Error::Input(format!(
                "block length {} must divide the horizon {}",
                self.block, self.horizon
            )));
        }
        if !(self.tau_prop > 0.0) || !self.tau_prop.is_finite() {
            return Err(Error::Input(format!(
                "proposal temperature must be positive, got {}",
                self.tau_prop
            )));
        }
        Ok(())
    }

    pub fn num_blocks(&self) -> usize {
        self.horizon / self.block
    }

    fn suffix_policy(&self) -> ProposalPolicy {
        ProposalPolicy::power(1.0 / self.tau_prop)
    }
}

/// Record of one MH move.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveRecord {
    /// Block index (1-based).
    pub block: usize,
    /// Move index within the block (1-based).
    pub mv: usize,
    pub edit_index: usize,
    /// Regenerated suffix length `L_{k,m}`.
    pub suffix_len: usize,
    pub accepted: bool,
    pub log_p_old: f64,
    pub log_p_new: f64,
}

/// The current chain: a (possibly terminated) prefix, its base
/// log-likelihood, and the accumulated move records.
#[derive(Debug, Clone, Default)]
pub struct ChainState {
    pub sequence: Vec<TokenId>,
    pub log_p: f64,
    pub terminated: bool,
    pub records: Vec<MoveRecord>,
}

impl ChainState {
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Number of edit positions a move may choose in this state.
    fn edit_window(&self, regime: Regime, block: usize) -> usize {
        match regime {
            Regime::Global => self.len(),
            Regime::LastBlock => self.len().min(block),
        }
    }
}

/// Samples base-model tokens onto the chain until it terminates or reaches
/// `target_len`; each generated token costs one ledger eval.
pub fn extend_block(
    chain: &mut ChainState,
    model: &ToyModel,
    target_len: usize,
    rng: &mut ChaCha8Rng,
    ledger: &mut CostLedger,
) -> Result<()> {
    let eos = model.vocab().eos_id();
    let base = ProposalPolicy::base();
    let mut state = model.state_from_prefix(&chain.sequence)?;
    while !chain.terminated && chain.len() < target_len {
        let row = model.batched_step(std::slice::from_ref(&state), ledger)?.remove(0);
        let (token, _) = propose_token(&row, &base, rng)?;
        chain.log_p += row.get(token);
        state = model.advance(&state, token)?;
        chain.sequence.push(token);
        if token == eos {
            chain.terminated = true;
        }
    }
    Ok(())
}

/// Draws the edit position for the configured regime: uniform over the
/// whole prefix (global) or over the last `min(B, t)` positions
/// (last-block). The implied suffix length is `t - index`.
pub fn draw_edit_index(
    chain: &ChainState,
    regime: Regime,
    block: usize,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    if chain.is_empty() {
        return Err(Error::State("cannot edit an empty chain".into()));
    }
    let window = chain.edit_window(regime, block);
    Ok(chain.len() - window + rng.random_range(0..window))
}

/// Regenerates a suffix from `prefix_len` up to termination or `cap`
/// tokens total, charging each generated token to the ledger. Returns the
/// suffix, its base log-likelihood, and its proposal log-density.
fn regenerate_suffix(
    model: &ToyModel,
    prefix: &[TokenId],
    cap: usize,
    policy: &ProposalPolicy,
    rng: &mut ChaCha8Rng,
    ledger: &mut CostLedger,
) -> Result<(Vec<TokenId>, f64, f64)> {
    let eos = model.vocab().eos_id();
    let mut state = model.state_from_prefix(prefix)?;
    let mut suffix = Vec::new();
    let mut log_p = 0.0;
    let mut log_q = 0.0;
    while prefix.len() + suffix.len() < cap {
        let row = model.batched_step(std::slice::from_ref(&state), ledger)?.remove(0);
        let (token, lq) = propose_token(&row, policy, rng)?;
        log_p += row.get(token);
        log_q += lq;
        state = model.advance(&state, token)?;
        suffix.push(token);
        if token == eos {
            break;
        }
    }
    Ok((suffix, log_p, log_q))
}

/// Proposal log-density of an already-realized suffix (the reverse-move
/// density of the old suffix); free of ledger charges since no tokens are
/// generated.
fn suffix_proposal_density(
    model: &ToyModel,
    prefix: &[TokenId],
    suffix: &[TokenId],
    policy: &ProposalPolicy,
) -> Result<f64> {
    let mut state = model.state_from_prefix(prefix)?;
    let mut log_q = 0.0;
    for &token in suffix {
        let row = model.next_logprobs(&state)?;
        let q = policy.proposal_row(&row)?.get(token);
        if q == f64::NEG_INFINITY {
            return Err(Error::Support(
                "realized suffix has zero probability under the proposal".into(),
            ));
        }
        log_q += q;
        state = model.advance(&state, token)?;
    }
    Ok(log_q)
}

/// One independence-MH move: draw an edit index, regenerate the suffix
/// from the proposal, accept or reject, and record the outcome. `cap` is
/// the nominal length the chain may grow to at this block.
pub fn mh_move(
    chain: &mut ChainState,
    model: &ToyModel,
    config: &MhConfig,
    cap: usize,
    block_idx: usize,
    move_idx: usize,
    ledger: &mut CostLedger,
) -> Result<()> {
    let eos = model.vocab().eos_id();
    let policy = config.suffix_policy();
    let key = |tag: u64| {
        stream_rng(config.seed, &[STREAM_MH, block_idx as u64, move_idx as u64, tag])
    };

    let edit_index =
        draw_edit_index(chain, config.regime, config.block, &mut key(DRAW_INDEX))?;
    let prefix = chain.sequence[..edit_index].to_vec();
    let old_suffix = chain.sequence[edit_index..].to_vec();

    let (new_suffix, new_suffix_log_p, new_suffix_log_q) = regenerate_suffix(
        model,
        &prefix,
        cap,
        &policy,
        &mut key(DRAW_SUFFIX),
        ledger,
    )?;
    ledger.record_suffix(new_suffix.len() as u64);

    let old_suffix_log_p = chain.log_p - model.sequence_logprob(&prefix)?;
    let old_suffix_log_q =
        suffix_proposal_density(model, &prefix, &old_suffix, &policy)?;

    let new_len = prefix.len() + new_suffix.len();
    let old_window = chain.edit_window(config.regime, config.block);
    let new_window = match config.regime {
        Regime::Global => new_len,
        Regime::LastBlock => new_len.min(config.block),
    };
    // reverse move must be able to pick the same index from the new state
    let reverse_reachable = edit_index >= new_len.saturating_sub(new_window);
    let log_p_old = chain.log_p;
    let log_p_new = log_p_old - old_suffix_log_p + new_suffix_log_p;

    let log_ratio = if reverse_reachable {
        config.alpha * (log_p_new - log_p_old) + (old_suffix_log_q - new_suffix_log_q)
            + (old_window as f64).ln()
            - (new_window as f64).ln()
    } else {
        f64::NEG_INFINITY
    };

    let accepted = if log_ratio >= 0.0 {
        true
    } else {
        key(DRAW_ACCEPT).random::<f64>().ln() < log_ratio
    };

    if accepted {
        chain.sequence.truncate(edit_index);
        chain.sequence.extend_from_slice(&new_suffix);
        chain.log_p = log_p_new;
        chain.terminated = chain.sequence.last() == Some(&eos);
    }
    chain.records.push(MoveRecord {
        block: block_idx,
        mv: move_idx,
        edit_index,
        suffix_len: new_suffix.len(),
        accepted,
        log_p_old,
        log_p_new,
    });
    Ok(())
}

/// Everything one MH run produces.
#[derive(Debug, Clone)]
pub struct MhRun {
    pub final_sequence: Vec<TokenId>,
    pub terminated: bool,
    pub chain: ChainState,
    /// Chain snapshot after each move, aligned with `chain.records`.
    pub visits: Vec<Vec<TokenId>>,
    pub ledger: CostLedger,
}

impl MhRun {
    pub fn acceptance_rate(&self) -> f64 {
        if self.chain.records.is_empty() {
            return 0.0;
        }
        let accepted = self.chain.records.iter().filter(|r| r.accepted).count();
        accepted as f64 / self.chain.records.len() as f64
    }

    /// Occupation measure over the final block's moves, skipping the first
    /// `burn_in` of them: normalized visit frequency per distinct sequence.
    pub fn last_block_masses(&self, burn_in: usize) -> Vec<(Vec<TokenId>, f64)> {
        let last_block = match self.chain.records.last() {
            Some(r) => r.block,
            None => return Vec::new(),
        };
        let kept: Vec<&Vec<TokenId>> = self
            .chain
            .records
            .iter()
            .zip(&self.visits)
            .filter(|(r, _)| r.block == last_block)
            .skip(burn_in)
            .map(|(_, v)| v)
            .collect();
        let mut masses: Vec<(Vec<TokenId>, f64)> = Vec::new();
        let share = 1.0 / kept.len().max(1) as f64;
        for visit in kept {
            match masses.iter_mut().find(|(seq, _)| seq == visit) {
                Some((_, m)) => *m += share,
                None => masses.push((visit.clone(), share)),
            }
        }
        masses
    }
}

/// Alternates block extension with `M` MH moves for `K = T / B` blocks.
/// The final ledger satisfies `token_evals = generated + sum(L_{k,m})`
/// exactly, with `generated = T` on models that never terminate early.
pub fn run_mh_power(model: &ToyModel, config: &MhConfig) -> Result<MhRun> {
    config.validate()?;
    let mut chain = ChainState::default();
    let mut ledger = CostLedger::default();
    let mut visits = Vec::new();

    for k in 1..=config.num_blocks() {
        let nominal = k * config.block;
        extend_block(
            &mut chain,
            model,
            nominal,
            &mut stream_rng(config.seed, &[STREAM_MH, k as u64, 0, DRAW_EXTEND]),
            &mut ledger,
        )?;
        for m in 1..=config.moves_per_block {
            mh_move(&mut chain, model, config, nominal, k, m, &mut ledger)?;
            visits.push(chain.sequence.clone());
        }
    }

    Ok(MhRun {
        final_sequence: chain.sequence.clone(),
        terminated: chain.terminated,
        chain,
        visits,
        ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::target::{enumerate_target, tv_distance};

    #[test]
    fn edit_index_means_match_both_regimes() {
        let mut chain = ChainState::default();
        chain.sequence = vec![0; 20];
        let mut rng = stream_rng(5, &[STREAM_MH, 0, 0, DRAW_INDEX]);
        let draws = 20_000;
        let mut sum_global = 0.0;
        let mut sum_last = 0.0;
        for _ in 0..draws {
            let j = draw_edit_index(&chain, Regime::Global, 8, &mut rng).unwrap();
            sum_global += (chain.len() - j) as f64;
            let j = draw_edit_index(&chain, Regime::LastBlock, 8, &mut rng).unwrap();
            assert!(j >= 12);
            sum_last += (chain.len() - j) as f64;
        }
        let mean_global = sum_global / draws as f64;
        let mean_last = sum_last / draws as f64;
        assert!((mean_global - 10.5).abs() / 10.5 < 0.05, "global mean {mean_global}");
        assert!((mean_last - 4.5).abs() / 4.5 < 0.05, "last-block mean {mean_last}");
    }

    #[test]
    fn unit_blocks_always_edit_the_final_position() {
        let mut chain = ChainState::default();
        chain.sequence = vec![0, 0, 0, 0, 0];
        let mut rng = stream_rng(1, &[STREAM_MH, 0, 0, DRAW_INDEX]);
        for _ in 0..32 {
            let j = draw_edit_index(&chain, Regime::LastBlock, 1, &mut rng).unwrap();
            assert_eq!(j, 4);
        }
    }

    #[test]
    fn pure_extension_costs_exactly_the_horizon() {
        let model = presets::cost_synthetic(3, 128);
        let config = MhConfig::new(64, 8, 0, 12);
        let run = run_mh_power(&model, &config).unwrap();
        assert_eq!(run.ledger.token_evals(), 64);
        assert_eq!(run.final_sequence.len(), 64);
        assert!(!run.terminated);
        assert!(run.chain.records.is_empty());
    }

    #[test]
    fn extension_of_deterministic_models_ignores_the_seed() {
        let vocab = crate::lm::Vocabulary::new(1, 1).unwrap();
        let model = crate::lm::ToyModel::tabular(
            vocab,
            8,
            crate::lm::TabularParams { rows: vec![], default: Some(vec![1.0, 0.0]) },
        )
        .unwrap();
        let a = run_mh_power(&model, &MhConfig::new(4, 4, 0, 1)).unwrap();
        let b = run_mh_power(&model, &MhConfig::new(4, 4, 0, 2)).unwrap();
        assert_eq!(a.final_sequence, b.final_sequence);
        assert_eq!(a.final_sequence, vec![0, 0, 0, 0]);
    }

    #[test]
    fn ledger_identity_holds_exactly() {
        for regime in [Regime::Global, Regime::LastBlock] {
            let model = presets::cost_synthetic(7, 128);
            let mut config = MhConfig::new(48, 8, 5, 31);
            config.regime = regime;
            let run = run_mh_power(&model, &config).unwrap();
            let moves: u64 = run.ledger.total_suffix_tokens();
            assert_eq!(run.ledger.token_evals(), 48 + moves);
            assert_eq!(
                run.ledger.suffix_lengths().len(),
                config.num_blocks() * config.moves_per_block
            );
            let recorded: u64 = run
                .chain
                .records
                .iter()
                .map(|r| r.suffix_len as u64)
                .sum();
            assert_eq!(moves, recorded);
        }
    }

    #[test]
    fn base_proposal_at_alpha_one_accepts_every_fixed_length_move() {
        let model = presets::cost_synthetic(11, 128);
        let mut config = MhConfig::new(16, 4, 3, 77);
        config.alpha = 1.0;
        let run = run_mh_power(&model, &config).unwrap();
        assert_eq!(run.chain.records.len(), 12);
        assert!(run.chain.records.iter().all(|r| r.accepted));
        assert!((run.acceptance_rate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_log_p_tracks_the_model_exactly() {
        let model = presets::oracle_3x4();
        let mut config = MhConfig::new(5, 5, 20, 41);
        config.alpha = 4.0;
        let run = run_mh_power(&model, &config).unwrap();
        let expect = model.sequence_logprob(&run.final_sequence).unwrap();
        assert!((run.chain.log_p - expect).abs() < 1e-10);
        assert!(run.terminated);
        assert_eq!(*run.final_sequence.last().unwrap(), 2);
    }

    #[test]
    fn long_chain_converges_to_the_power_target() {
        let model = presets::two_sequence();
        let mut config = MhConfig::new(2, 2, 20_000, 19);
        config.alpha = 2.0;
        let run = run_mh_power(&model, &config).unwrap();
        let masses = run.last_block_masses(2_000);
        let target = enumerate_target(&model, 2.0).unwrap();
        let tv = tv_distance(&masses, &target).unwrap();
        assert!(tv < 0.02, "tv {tv}");
        // both sequences must actually be visited
        assert_eq!(masses.len(), 2);
    }

    #[test]
    fn variable_length_moves_balance_the_index_probabilities() {
        // hand-computed transition odds on the two-sequence model at
        // alpha = 2: from the long state, editing index 0 and proposing the
        // short one accepts with 2/3 once the 1/b factors are included
        let model = presets::two_sequence();
        let target = enumerate_target(&model, 2.0).unwrap();
        let pi_short = target.pi_mass(&[1]);
        assert!((pi_short - 0.1).abs() < 1e-12);
        // occupation frequency of the short state over a long chain
        let mut config = MhConfig::new(2, 2, 50_000, 23);
        config.alpha = 2.0;
        let run = run_mh_power(&model, &config).unwrap();
        let masses = run.last_block_masses(5_000);
        let short_mass = masses
            .iter()
            .find(|(seq, _)| seq == &vec![1])
            .map(|(_, m)| *m)
            .unwrap_or(0.0);
        assert!(
            (short_mass - 0.1).abs() < 0.015,
            "short-state occupation {short_mass} should match pi = 0.1"
        );
    }

    #[test]
    fn mean_costs_match_the_closed_forms() {
        let horizon = 256;
        let block = 32;
        let moves = 10;
        let runs = 30;
        for regime in [Regime::Global, Regime::LastBlock] {
            let mut total = 0.0;
            for seed in 0..runs {
                let model = presets::cost_synthetic(900 + seed, 512);
                let mut config = MhConfig::new(horizon, block, moves, seed);
                config.regime = regime;
                let run = run_mh_power(&model, &config).unwrap();
                total += run.ledger.token_evals() as f64;
            }
            let mean = total / runs as f64;
            let analytic = match regime {
                Regime::Global => crate::cost::mh_cost_global(
                    horizon as u64,
                    block as u64,
                    moves as u64,
                )
                .unwrap(),
                Regime::LastBlock => {
                    crate::cost::mh_cost_lastblock(horizon as u64, moves as u64)
                }
            };
            let rel = (mean - analytic).abs() / analytic;
            assert!(rel < 0.05, "{}: mean {mean} vs analytic {analytic}", regime.name());
        }
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let model = presets::oracle_3x4();
        let mut config = MhConfig::new(5, 5, 50, 61);
        config.alpha = 4.0;
        let a = run_mh_power(&model, &config).unwrap();
        let b = run_mh_power(&model, &config).unwrap();
        assert_eq!(a.final_sequence, b.final_sequence);
        assert_eq!(a.visits, b.visits);
        assert_eq!(a.chain.records, b.chain.records);
        assert_eq!(a.ledger.token_evals(), b.ledger.token_evals());
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        assert!(MhConfig::new(10, 3, 1, 0).validate().is_err()); // 3 does not divide 10
        assert!(MhConfig::new(0, 1, 1, 0).validate().is_err());
        let mut config = MhConfig::new(8, 4, 1, 0);
        config.tau_prop = 0.0;
        assert!(config.validate().is_err());
        config.tau_prop = 1.0;
        config.alpha = 0.5;
        assert!(config.validate().is_err());
    }
}
