//! The particle engine: batched proposal steps, incremental importance
//! weights, ESS-triggered resampling, exponent ramping, and an SIS mode.
//!
//! Each step advances all `N` particles through one batched decode. Active
//! particles draw a token from the proposal `q ∝ p^beta` and multiply their
//! weight by `p(token)^alpha_stage / q(token)`; terminated particles take the
//! absorbing no-op (EOS appended, weight untouched). With the stage-optimal
//! proposal `beta = alpha_stage` the increment collapses to the per-row power
//! normalizer `Z_t(alpha)` — constant across tokens, the zero-variance
//! property that makes the power target tractable at all.
//!
//! When the effective sample size of the normalized weights drops below
//! `kappa * N`, the ensemble resamples: ancestors are drawn by the configured
//! scheme, prefixes / termination flags / running log-likelihoods are copied,
//! decode states are re-indexed, and all weights reset to uniform.
//!
//! Exponent ramping bridges from `alpha = 1` to the target through a staged
//! schedule: tokens sampled during stage `l` are weighted with exponent
//! `alpha^(l)`, and each stage boundary multiplies every particle's weight by
//! `p(prefix)^(alpha^(l+1) - alpha^(l))`. The coefficient on every token's
//! log-probability telescopes to exactly `alpha`, so a ramped run on the same
//! proposal draws reproduces direct-`alpha` weights to rounding error.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cost::CostLedger;
use crate::error::{Error, Result};
use crate::lm::{reindex_states, DecodeState, LogProbRow, ToyModel};
use crate::numeric::{categorical_from_weights, log_sum_exp, normalize_log_weights};
use crate::resample::Resampler;
use crate::rng::{stream_rng, STREAM_OUTPUT, STREAM_PROPOSAL, STREAM_RESAMPLE};
use crate::TokenId;

/// Proposal family `q ∝ p^beta` (temperature `1/beta`), optionally mixed
/// with a uniform floor over the row's support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalPolicy {
    /// Exponent applied to the base conditional.
    pub beta: f64,
    /// Mass `epsilon` spread uniformly over the supported tokens; 0 keeps
    /// the pure power proposal. Support never widens past the base row, so
    /// `q > 0` exactly where `p > 0`.
    pub floor: f64,
}

impl ProposalPolicy {
    /// `q ∝ p^beta` with no floor.
    pub fn power(beta: f64) -> Self {
        Self { beta, floor: 0.0 }
    }

    /// The base conditional itself (`beta = 1`).
    pub fn base() -> Self {
        Self::power(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Input(format!(
                "proposal exponent must be positive and finite, got {}",
                self.beta
            )));
        }
        if !(0.0..1.0).contains(&self.floor) {
            return Err(Error::Input(format!(
                "proposal floor must lie in [0, 1), got {}",
                self.floor
            )));
        }
        Ok(())
    }

    /// The normalized proposal row for a base conditional.
    pub fn proposal_row(&self, row: &LogProbRow) -> Result<LogProbRow> {
        self.validate()?;
        if self.beta == 1.0 && self.floor == 0.0 {
            // bit-exact passthrough: re-normalizing an already-normalized
            // row would shift entries by rounding dust
            return Ok(row.clone());
        }
        let powered = row.powered(self.beta)?;
        if self.floor == 0.0 {
            return Ok(powered);
        }
        let support = row.support().count();
        let log_floor = self.floor.ln() - (support as f64).ln();
        let log_keep = (1.0 - self.floor).ln();
        let mixed: Vec<f64> = row
            .as_slice()
            .iter()
            .zip(powered.as_slice())
            .map(|(&lp, &lq)| {
                if lp == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    crate::numeric::log_add_exp(log_keep + lq, log_floor)
                }
            })
            .collect();
        LogProbRow::new(mixed)
    }
}

/// Draws one token from `q ∝ p^beta` by inverse CDF in ascending token
/// order; returns the token and its normalized proposal log-probability.
pub fn propose_token(
    row: &LogProbRow,
    policy: &ProposalPolicy,
    rng: &mut ChaCha8Rng,
) -> Result<(TokenId, f64)> {
    let q_row = policy.proposal_row(row)?;
    let weights: Vec<f64> = q_row.as_slice().iter().map(|&lq| lq.exp()).collect();
    let token = categorical_from_weights(&weights, rng.random::<f64>()) as TokenId;
    Ok((token, q_row.get(token)))
}

/// One incremental log-weight: `alpha_stage * log p(token) - log q(token)`,
/// the exact correction for drawing from `q` instead of the stage target.
pub fn incremental_logweight(log_p: f64, log_q: f64, alpha_stage: f64) -> Result<f64> {
    if log_q == f64::NEG_INFINITY {
        return Err(Error::Support(
            "proposal assigned zero probability to a sampled token".into(),
        ));
    }
    if log_q.is_nan() || log_q > 0.0 {
        return Err(Error::Input(format!("malformed proposal log-probability {log_q}")));
    }
    Ok(alpha_stage * log_p - log_q)
}

/// Effective sample size `1 / sum(W_i^2)` of normalized weights; lies in
/// `[1, N]`, reaching `N` only on uniform weights.
pub fn ess(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::Input("ESS of an empty weight vector".into()));
    }
    let mut total = 0.0;
    let mut sq = 0.0;
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Input(format!("weight {w} is not a probability")));
        }
        total += w;
        sq += w * w;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!(
            "weights sum to {total}, not 1; normalize before the ESS check"
        )));
    }
    Ok(1.0 / sq)
}

/// Staged exponent schedule `1 = alpha^(0) < ... < alpha^(L) = alpha` with
/// strictly increasing boundary token indices. The boundary at token `t_l`
/// fires after that token's proposals, bumping the stage from `l-1` to `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct RampSchedule {
    /// Stage exponents, `L + 1` entries starting at exactly 1.
    pub alphas: Vec<f64>,
    /// Boundary token indices (1-based), one per stage transition.
    pub boundaries: Vec<usize>,
}

impl RampSchedule {
    pub fn new(alphas: Vec<f64>, boundaries: Vec<usize>) -> Result<Self> {
        let schedule = Self { alphas, boundaries };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Linear schedule: `alpha^(l) = 1 + (alpha - 1) * l / L` with one
    /// boundary after each of the first `t_ramp` tokens.
    pub fn linear(alpha: f64, t_ramp: usize) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::Input(format!(
                "a ramp needs a target exponent above 1, got {alpha}"
            )));
        }
        if t_ramp == 0 {
            return Err(Error::Input("a ramp needs at least one stage".into()));
        }
        let l = t_ramp as f64;
        let alphas = (0..=t_ramp)
            .map(|stage| 1.0 + (alpha - 1.0) * (stage as f64 / l))
            .collect();
        Self::new(alphas, (1..=t_ramp).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.len() < 2 || self.boundaries.len() + 1 != self.alphas.len() {
            return Err(Error::Input(
                "ramp needs L+1 exponents and L boundaries with L >= 1".into(),
            ));
        }
        if self.alphas[0] != 1.0 {
            return Err(Error::Input("ramp must start at exponent 1".into()));
        }
        for pair in self.alphas.windows(2) {
            if !(pair[1] > pair[0]) || !pair[1].is_finite() {
                return Err(Error::Input("ramp exponents must strictly increase".into()));
            }
        }
        if self.boundaries[0] == 0 {
            return Err(Error::Input("ramp boundaries are 1-based token indices".into()));
        }
        for pair in self.boundaries.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Input("ramp boundaries must strictly increase".into()));
            }
        }
        Ok(())
    }

    pub fn final_alpha(&self) -> f64 {
        *self.alphas.last().expect("validated ramp")
    }

    /// Exponent in effect while sampling token `t` (1-based): the stage
    /// after all boundaries strictly before `t`.
    pub fn stage_exponent(&self, t: usize) -> f64 {
        let stage = self.boundaries.partition_point(|&b| b < t);
        self.alphas[stage]
    }

    /// Exponent increment for a boundary firing after token `t`, if any.
    pub fn boundary_delta(&self, t: usize) -> Option<f64> {
        self.boundaries
            .iter()
            .position(|&b| b == t)
            .map(|m| self.alphas[m + 1] - self.alphas[m])
    }
}

/// Engine configuration. Defaults: 64 particles, `alpha = 4`,
/// `kappa = 0.5`, systematic resampling; the horizon is per experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub n_particles: usize,
    pub alpha: f64,
    /// ESS threshold fraction in (0, 1): resample when `ESS < kappa * N`.
    pub kappa: f64,
    pub t_max: usize,
    pub resampler: Resampler,
    pub seed: u64,
    pub ramp: Option<RampSchedule>,
    /// Fixed proposal override; `None` uses the stage-optimal
    /// `beta = alpha_stage`.
    pub proposal: Option<ProposalPolicy>,
    /// Experimental: compute ESS over active particles only (threshold
    /// scales to the active count). Default off: absorbed particles keep
    /// contributing to the ESS like any other weight.
    pub ess_excludes_done: bool,
}

impl EngineConfig {
    pub fn new(t_max: usize, seed: u64) -> Self {
        Self {
            n_particles: 64,
            alpha: 4.0,
            kappa: 0.5,
            t_max,
            resampler: Resampler::Systematic,
            seed,
            ramp: None,
            proposal: None,
            ess_excludes_done: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::Input("need at least one particle".into()));
        }
        if !self.alpha.is_finite() || self.alpha < 1.0 {
            return Err(Error::Input(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::Input(format!(
                "kappa must lie strictly inside (0, 1), got {}",
                self.kappa
            )));
        }
        if self.t_max == 0 {
            return Err(Error::Input("horizon must be at least 1".into()));
        }
        if let Some(ramp) = &self.ramp {
            ramp.validate()?;
            if (ramp.final_alpha() - self.alpha).abs() > 1e-12 {
                return Err(Error::Input(format!(
                    "ramp ends at {} but the target exponent is {}",
                    ramp.final_alpha(),
                    self.alpha
                )));
            }
            if *ramp.boundaries.last().unwrap() > self.t_max {
                return Err(Error::Input(
                    "ramp boundaries extend past the horizon and would never fire".into(),
                ));
            }
        }
        if let Some(policy) = &self.proposal {
            policy.validate()?;
        }
        Ok(())
    }

    /// Proposal for a step at the given stage exponent.
    fn stage_policy(&self, alpha_stage: f64) -> ProposalPolicy {
        self.proposal.unwrap_or(ProposalPolicy::power(alpha_stage))
    }

    /// Exponent in effect while sampling token `t`.
    fn stage_exponent(&self, t: usize) -> f64 {
        match &self.ramp {
            Some(ramp) => ramp.stage_exponent(t),
            None => self.alpha,
        }
    }
}

/// One weighted candidate sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    /// Tokens so far, including EOS padding after termination.
    pub prefix: Vec<TokenId>,
    /// Log of the unnormalized weight.
    pub log_weight: f64,
    /// Set once EOS has been sampled; the particle then absorbs.
    pub done: bool,
    pub state: DecodeState,
    /// Running base log-likelihood of the prefix (padding contributes 0),
    /// needed by ramp boundaries.
    pub cum_logp: f64,
}

impl Particle {
    fn fresh(model: &ToyModel) -> Self {
        Self {
            prefix: Vec::new(),
            log_weight: 0.0,
            done: false,
            state: model.initial_state(),
            cum_logp: 0.0,
        }
    }

    /// Canonical sequence: the prefix up to and including its first EOS,
    /// or the whole prefix when unterminated.
    pub fn sequence(&self, eos: TokenId) -> Vec<TokenId> {
        match self.prefix.iter().position(|&t| t == eos) {
            Some(i) => self.prefix[..=i].to_vec(),
            None => self.prefix.clone(),
        }
    }
}

/// Record of one resampling event.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleEvent {
    /// Step at which the event fired (1-based token index).
    pub step: usize,
    /// ESS that triggered it.
    pub ess: f64,
    pub ancestors: Vec<usize>,
}

/// The particle population. Per-particle randomness is not stored: every
/// draw comes from a counter-based stream keyed `(seed, stream, particle,
/// step)`, so the ensemble is plain data and runs are order-independent.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub particles: Vec<Particle>,
    /// Tokens consumed so far.
    pub step: usize,
    pub resample_events: Vec<ResampleEvent>,
}

impl Ensemble {
    pub fn new(model: &ToyModel, n: usize) -> Self {
        Self {
            particles: vec![Particle::fresh(model); n],
            step: 0,
            resample_events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.log_weight).collect()
    }

    /// Normalized weights over all particles.
    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        normalize_log_weights(&self.log_weights()).ok_or_else(|| {
            Error::Numerical("every particle weight collapsed to zero".into())
        })
    }

    pub fn num_done(&self) -> usize {
        self.particles.iter().filter(|p| p.done).count()
    }

    pub fn all_done(&self) -> bool {
        self.particles.iter().all(|p| p.done)
    }

    /// Final weighted sample set: one row per particle.
    pub fn weighted_samples(&self, model: &ToyModel) -> Result<Vec<WeightedSample>> {
        let weights = self.normalized_weights()?;
        let eos = model.vocab().eos_id();
        Ok(self
            .particles
            .iter()
            .zip(weights)
            .map(|(p, weight)| WeightedSample {
                sequence: p.sequence(eos),
                log_p: p.cum_logp,
                weight,
                terminated: p.done,
            })
            .collect())
    }

    /// Normalized weight aggregated per distinct sequence, in first-seen
    /// particle order — the empirical distribution the run induces.
    pub fn empirical_masses(&self, model: &ToyModel) -> Result<Vec<(Vec<TokenId>, f64)>> {
        let mut order: Vec<(Vec<TokenId>, f64)> = Vec::new();
        for sample in self.weighted_samples(model)? {
            match order.iter_mut().find(|(seq, _)| *seq == sample.sequence) {
                Some((_, mass)) => *mass += sample.weight,
                None => order.push((sample.sequence, sample.weight)),
            }
        }
        Ok(order)
    }
}

/// One particle's contribution to a final sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub sequence: Vec<TokenId>,
    /// Base log-likelihood of the sequence.
    pub log_p: f64,
    /// Normalized weight.
    pub weight: f64,
    pub terminated: bool,
}

/// Advances every particle by one token: propose, weight, absorb. Done
/// particles take the absorbing no-op; if the whole ensemble is done the
/// model is never invoked and the ledger is untouched.
pub fn smc_step(
    ensemble: &mut Ensemble,
    model: &ToyModel,
    config: &EngineConfig,
    ledger: &mut CostLedger,
) -> Result<()> {
    let t = ensemble.step + 1;
    let eos = model.vocab().eos_id();
    if ensemble.all_done() {
        for particle in &mut ensemble.particles {
            particle.prefix.push(eos);
            particle.state = model.advance(&particle.state, eos)?;
        }
        ensemble.step = t;
        return Ok(());
    }

    let alpha_stage = config.stage_exponent(t);
    let policy = config.stage_policy(alpha_stage);
    let states: Vec<DecodeState> = ensemble.particles.iter().map(|p| p.state.clone()).collect();
    let rows = model.batched_step(&states, ledger)?;

    for (i, particle) in ensemble.particles.iter_mut().enumerate() {
        if particle.done {
            particle.prefix.push(eos);
            particle.state = model.advance(&particle.state, eos)?;
            continue;
        }
        let row = &rows[i];
        let mut rng = stream_rng(config.seed, &[STREAM_PROPOSAL, i as u64, t as u64]);
        let (token, log_q) = propose_token(row, &policy, &mut rng)?;
        let log_p = row.get(token);
        particle.log_weight += incremental_logweight(log_p, log_q, alpha_stage)?;
        particle.cum_logp += log_p;
        particle.state = model.advance(&particle.state, token)?;
        particle.prefix.push(token);
        if token == eos {
            particle.done = true;
        }
    }
    ensemble.step = t;
    Ok(())
}

/// Multiplies every particle's weight by `p(prefix)^dalpha` — the stage
/// transition of the ramp. A zero increment is a no-op.
pub fn apply_ramp_boundary(ensemble: &mut Ensemble, dalpha: f64) -> Result<()> {
    if dalpha < 0.0 || !dalpha.is_finite() {
        return Err(Error::Input(format!(
            "ramp boundary increment must be >= 0, got {dalpha}"
        )));
    }
    if dalpha == 0.0 {
        return Ok(());
    }
    for particle in &mut ensemble.particles {
        particle.log_weight += dalpha * particle.cum_logp;
    }
    Ok(())
}

/// Checks the ESS and resamples when it falls below `kappa * N`: ancestors
/// by the configured scheme, prefixes / done flags / running log-likelihoods
/// copied, decode states re-indexed, all weights reset to uniform.
pub fn maybe_resample(ensemble: &mut Ensemble, config: &EngineConfig) -> Result<bool> {
    let weights = ensemble.normalized_weights()?;
    let (ess_value, reference) = if config.ess_excludes_done {
        let active: Vec<f64> = ensemble
            .particles
            .iter()
            .zip(&weights)
            .filter(|(p, _)| !p.done)
            .map(|(_, &w)| w)
            .collect();
        if active.is_empty() {
            return Ok(false);
        }
        let renormalized = normalize_log_weights(
            &active.iter().map(|&w| w.max(f64::MIN_POSITIVE).ln()).collect::<Vec<_>>(),
        )
        .ok_or_else(|| Error::Numerical("active weights collapsed to zero".into()))?;
        (ess(&renormalized)?, active.len())
    } else {
        (ess(&weights)?, ensemble.len())
    };

    if ess_value >= config.kappa * reference as f64 {
        return Ok(false);
    }

    let mut rng = stream_rng(config.seed, &[STREAM_RESAMPLE, ensemble.step as u64]);
    let ancestors = config.resampler.ancestors(&weights, &mut rng)?;
    let states: Vec<DecodeState> = ensemble.particles.iter().map(|p| p.state.clone()).collect();
    let new_states = reindex_states(&states, &ancestors)?;
    ensemble.particles = ancestors
        .iter()
        .zip(new_states)
        .map(|(&a, state)| {
            let src = &ensemble.particles[a];
            Particle {
                prefix: src.prefix.clone(),
                log_weight: 0.0,
                done: src.done,
                state,
                cum_logp: src.cum_logp,
            }
        })
        .collect();
    ensemble.resample_events.push(ResampleEvent {
        step: ensemble.step,
        ess: ess_value,
        ancestors,
    });
    Ok(true)
}

/// One row of the per-step diagnostics trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub ess: f64,
    pub resampled: bool,
    pub alpha_stage: f64,
    /// Increment to the running log-normalizer estimate at this step.
    pub log_normalizer_increment: f64,
    pub num_done: usize,
}

/// Per-step diagnostics of a completed run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsTrace {
    pub rows: Vec<TraceRow>,
}

impl DiagnosticsTrace {
    pub fn num_resamples(&self) -> usize {
        self.rows.iter().filter(|r| r.resampled).count()
    }
}

/// Log-domain normalizer estimate from a trace: the sum of per-step
/// increments, which telescopes to the product over resample segments of
/// each segment's mean unnormalized weight.
pub fn estimate_normalizer(trace: &DiagnosticsTrace) -> Result<f64> {
    if trace.rows.is_empty() {
        return Err(Error::Input("cannot estimate a normalizer from an empty trace".into()));
    }
    Ok(trace.rows.iter().map(|r| r.log_normalizer_increment).sum())
}

/// Everything a power-SMC run produces.
#[derive(Debug, Clone)]
pub struct SmcRun {
    /// The sequence drawn from the final categorical.
    pub sample: Vec<TokenId>,
    /// Whether the drawn sequence terminated by the horizon.
    pub sample_terminated: bool,
    pub ensemble: Ensemble,
    pub trace: DiagnosticsTrace,
    pub ledger: CostLedger,
}

/// An SIS run: every weighted terminal sequence plus the log-normalizer
/// estimate `log((1/N) * sum_i exp(log W_i))`.
#[derive(Debug, Clone)]
pub struct SisRun {
    pub samples: Vec<WeightedSample>,
    pub log_z_estimate: f64,
    pub ensemble: Ensemble,
    pub trace: DiagnosticsTrace,
    pub ledger: CostLedger,
}

fn run_loop(
    model: &ToyModel,
    config: &EngineConfig,
    resampling: bool,
) -> Result<(Ensemble, DiagnosticsTrace, CostLedger)> {
    config.validate()?;
    let mut ledger = CostLedger::default();
    let mut ensemble = Ensemble::new(model, config.n_particles);
    let mut trace = DiagnosticsTrace::default();
    let mut baseline = 0.0;
    let log_n = (config.n_particles as f64).ln();

    for t in 1..=config.t_max {
        smc_step(&mut ensemble, model, config, &mut ledger)?;
        if let Some(ramp) = &config.ramp {
            if let Some(dalpha) = ramp.boundary_delta(t) {
                apply_ramp_boundary(&mut ensemble, dalpha)?;
            }
        }
        let log_ws = ensemble.log_weights();
        let total = log_sum_exp(&log_ws);
        if !total.is_finite() {
            return Err(Error::Numerical(
                "ensemble log-weights have no finite mass".into(),
            ));
        }
        let s_t = total - log_n;
        let ess_value = ess(&ensemble.normalized_weights()?)?;
        let fired = if resampling {
            maybe_resample(&mut ensemble, config)?
        } else {
            false
        };
        trace.rows.push(TraceRow {
            step: t,
            ess: ess_value,
            resampled: fired,
            alpha_stage: config.stage_exponent(t),
            log_normalizer_increment: s_t - baseline,
            num_done: ensemble.num_done(),
        });
        baseline = if fired { 0.0 } else { s_t };
    }
    Ok((ensemble, trace, ledger))
}

/// Full power-SMC run: `t_max` steps with ESS checks (and ramp boundaries
/// when scheduled), then one draw from the categorical over final weights.
pub fn run_power_smc(model: &ToyModel, config: &EngineConfig) -> Result<SmcRun> {
    let (ensemble, trace, ledger) = run_loop(model, config, true)?;
    let weights = ensemble.normalized_weights()?;
    let u = stream_rng(config.seed, &[STREAM_OUTPUT]).random::<f64>();
    let chosen = categorical_from_weights(&weights, u);
    let particle = &ensemble.particles[chosen];
    Ok(SmcRun {
        sample: particle.sequence(model.vocab().eos_id()),
        sample_terminated: particle.done,
        ensemble,
        trace,
        ledger,
    })
}

/// Sequential importance sampling: the same stepping with resampling
/// disabled, returning all weighted sequences and the normalizer estimate.
pub fn run_sis(model: &ToyModel, config: &EngineConfig) -> Result<SisRun> {
    let (ensemble, trace, ledger) = run_loop(model, config, false)?;
    let log_ws = ensemble.log_weights();
    let log_z_estimate = log_sum_exp(&log_ws) - (config.n_particles as f64).ln();
    let samples = ensemble.weighted_samples(model)?;
    Ok(SisRun { samples, log_z_estimate, ensemble, trace, ledger })
}
