//! Toy autoregressive models with incremental decode state.
//!
//! Each model defines exact next-token log-probabilities over an alphabet of
//! `V` ordinary tokens plus EOS, factorized autoregressively. Three variants
//! cover the validation needs:
//!
//! - `tabular`: explicit prefix-keyed conditional rows, the workhorse for
//!   enumeration oracles and hand-computed fixtures;
//! - `ngram`: order-`n` count model trained on a token corpus;
//! - `synthetic-logit`: deterministic pseudo-random logits derived from a
//!   rolling hash of the prefix, for arbitrarily long spiky models.
//!
//! Every variant forces EOS once a prefix reaches the hard horizon `t_cap`,
//! so total probability mass over terminated sequences is exactly 1 and
//! brute-force enumeration can cover it. Per-particle [`DecodeState`] is the
//! KV-cache analog: a pure function of the prefix, advanced token by token,
//! and copied by ancestor index when the sampler resamples.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::CostLedger;
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::rng;
use crate::TokenId;

/// Tolerance on `logsumexp(row) == 0` for a valid probability row.
pub const ROW_NORM_TOL: f64 = 1e-12;

/// Alphabet description: `V` ordinary tokens plus one distinguished EOS id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    vocab_size: u32,
    eos_id: TokenId,
}

impl Vocabulary {
    pub fn new(vocab_size: u32, eos_id: TokenId) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::Input("vocab_size must be at least 1".into()));
        }
        if eos_id > vocab_size {
            return Err(Error::Input(format!(
                "eos_id {eos_id} outside alphabet of size {}",
                vocab_size + 1
            )));
        }
        Ok(Self { vocab_size, eos_id })
    }

    /// Count of ordinary (non-EOS) tokens.
    pub fn ordinary_count(&self) -> u32 {
        self.vocab_size
    }

    /// Total symbol count: ordinary tokens plus EOS.
    pub fn alphabet_size(&self) -> usize {
        self.vocab_size as usize + 1
    }

    pub fn eos_id(&self) -> TokenId {
        self.eos_id
    }

    pub fn contains(&self, token: TokenId) -> bool {
        (token as usize) < self.alphabet_size()
    }

    pub fn check(&self, token: TokenId) -> Result<()> {
        if self.contains(token) {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "token {token} outside alphabet of size {}",
                self.alphabet_size()
            )))
        }
    }

    /// All token ids in ascending order.
    pub fn tokens(&self) -> impl Iterator<Item = TokenId> {
        0..self.alphabet_size() as TokenId
    }
}

/// A normalized next-token distribution in log domain.
///
/// Entries are finite or `-inf` (hard zeros are allowed); the log-sum-exp of
/// the row is 0 within [`ROW_NORM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbRow(Vec<f64>);

impl LogProbRow {
    pub fn new(log_probs: Vec<f64>) -> Result<Self> {
        if log_probs.is_empty() {
            return Err(Error::ModelSpec("empty probability row".into()));
        }
        for (i, &lp) in log_probs.iter().enumerate() {
            if lp.is_nan() || lp == f64::INFINITY {
                return Err(Error::ModelSpec(format!(
                    "row entry {i} is {lp}; must be finite or -inf"
                )));
            }
        }
        let residual = log_sum_exp(&log_probs);
        if residual.abs() > ROW_NORM_TOL {
            return Err(Error::ModelSpec(format!(
                "row is not normalized: logsumexp = {residual:e}"
            )));
        }
        Ok(Self(log_probs))
    }

    /// Builds a row from linear-domain probabilities, rejecting rows whose
    /// mass does not sum to 1 within tolerance.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ModelSpec(format!("probability {p} at entry {i}")));
            }
        }
        Self::new(probs.iter().map(|&p| p.ln()).collect())
    }

    /// Log-softmax over raw logits; always produces a valid row.
    pub fn from_logits(logits: &[f64]) -> Self {
        let norm = log_sum_exp(logits);
        Self(logits.iter().map(|&l| l - norm).collect())
    }

    /// Row with all mass on one token.
    pub fn one_hot(len: usize, token: TokenId) -> Self {
        let mut row = vec![f64::NEG_INFINITY; len];
        row[token as usize] = 0.0;
        Self(row)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Log-probability of one token.
    pub fn get(&self, token: TokenId) -> f64 {
        self.0[token as usize]
    }

    /// Linear-domain probability of one token.
    pub fn prob(&self, token: TokenId) -> f64 {
        self.get(token).exp()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// The row renormalized after raising every probability to `beta`,
    /// i.e. temperature `1/beta` applied to this distribution.
    pub fn powered(&self, beta: f64) -> Result<LogProbRow> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Input(format!("power exponent must be positive, got {beta}")));
        }
        let scaled: Vec<f64> = self.0.iter().map(|&lp| beta * lp).collect();
        let norm = log_sum_exp(&scaled);
        if !norm.is_finite() {
            return Err(Error::ModelSpec("row has no support".into()));
        }
        Ok(LogProbRow(scaled.iter().map(|&s| s - norm).collect()))
    }

    /// Tokens with positive probability, ascending.
    pub fn support(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &lp)| lp > f64::NEG_INFINITY)
            .map(|(v, _)| v as TokenId)
    }
}

/// One prefix-keyed conditional row of a tabular model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub prefix: Vec<TokenId>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularParams {
    pub rows: Vec<TableRow>,
    /// Fallback row for prefixes with no explicit entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramParams {
    pub order: usize,
    pub corpus: Vec<Vec<TokenId>>,
    /// Additive (Laplace) count smoothing; 0 keeps raw empirical counts with
    /// hard zeros and a uniform fallback for unseen contexts.
    #[serde(default)]
    pub smoothing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    /// Logit range: each logit is uniform on `[-scale, scale]` given the
    /// prefix digest. Larger values make spikier rows.
    pub scale: f64,
    /// Zero out EOS probability before the forced horizon, so every sequence
    /// runs the full `t_cap` tokens.
    #[serde(default)]
    pub suppress_eos: bool,
}

/// On-disk model description: `{"variant", "seed", "vocab_size", "eos_id",
/// "t_cap", "params"}` with variant-specific params.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpecFile {
    pub variant: String,
    pub seed: u64,
    pub vocab_size: u32,
    pub eos_id: TokenId,
    pub t_cap: usize,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone)]
enum ModelKind {
    Tabular {
        params: TabularParams,
        rows: HashMap<Vec<TokenId>, LogProbRow>,
        default: Option<LogProbRow>,
    },
    Ngram {
        params: NgramParams,
        rows: HashMap<Vec<TokenId>, LogProbRow>,
        uniform: LogProbRow,
    },
    Synthetic {
        params: SyntheticParams,
    },
}

impl ModelKind {
    fn variant_name(&self) -> &'static str {
        match self {
            ModelKind::Tabular { .. } => "tabular",
            ModelKind::Ngram { .. } => "ngram",
            ModelKind::Synthetic { .. } => "synthetic-logit",
        }
    }
}

/// Per-particle incremental decode state, the KV-cache analog.
///
/// A state is a pure function of the prefix that produced it:
/// [`ToyModel::state_from_prefix`] rebuilds it exactly, which is the oracle
/// the resampling reindex is checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeState {
    step: usize,
    absorbed: bool,
    kind: StateKind,
}

#[derive(Debug, Clone, PartialEq)]
enum StateKind {
    /// Tabular rows are keyed by the whole prefix.
    Tabular { prefix: Vec<TokenId> },
    /// Last `order - 1` tokens.
    Ngram { window: Vec<TokenId> },
    /// Rolling hash of the prefix.
    Synthetic { digest: u64 },
}

impl DecodeState {
    /// Number of tokens consumed so far.
    pub fn step(&self) -> usize {
        self.step
    }

    /// True once EOS has been consumed; further rows are one-hot on EOS.
    pub fn is_absorbed(&self) -> bool {
        self.absorbed
    }
}

const SYNTH_INIT: u64 = 0x7c5f_9d21;
const SYNTH_LOGIT: u64 = 0x1b2e_44aa;

/// An exactly-enumerable autoregressive model over `V + 1` symbols.
#[derive(Debug, Clone)]
pub struct ToyModel {
    vocab: Vocabulary,
    seed: u64,
    t_cap: usize,
    kind: ModelKind,
}

impl ToyModel {
    /// Explicit prefix-keyed conditional tables.
    pub fn tabular(vocab: Vocabulary, t_cap: usize, params: TabularParams) -> Result<Self> {
        let mut rows = HashMap::new();
        for entry in &params.rows {
            for &t in &entry.prefix {
                vocab.check(t)?;
            }
            if entry.probs.len() != vocab.alphabet_size() {
                return Err(Error::ModelSpec(format!(
                    "row for prefix {:?} has {} entries, alphabet is {}",
                    entry.prefix,
                    entry.probs.len(),
                    vocab.alphabet_size()
                )));
            }
            let row = LogProbRow::from_probs(&entry.probs)?;
            if rows.insert(entry.prefix.clone(), row).is_some() {
                return Err(Error::ModelSpec(format!(
                    "duplicate row for prefix {:?}",
                    entry.prefix
                )));
            }
        }
        let default = match &params.default {
            Some(probs) => {
                if probs.len() != vocab.alphabet_size() {
                    return Err(Error::ModelSpec("default row length mismatch".into()));
                }
                Some(LogProbRow::from_probs(probs)?)
            }
            None => None,
        };
        Ok(Self {
            vocab,
            seed: 0,
            t_cap,
            kind: ModelKind::Tabular { params, rows, default },
        })
    }

    /// Order-`n` count model. Corpus sequences are ordinary tokens; EOS is
    /// appended to each during training so it receives mass. Contexts are the
    /// last `n - 1` tokens (shorter near the sequence start).
    pub fn ngram(vocab: Vocabulary, t_cap: usize, params: NgramParams) -> Result<Self> {
        if params.order == 0 {
            return Err(Error::ModelSpec("ngram order must be at least 1".into()));
        }
        if params.smoothing < 0.0 || !params.smoothing.is_finite() {
            return Err(Error::ModelSpec("smoothing must be finite and >= 0".into()));
        }
        let alphabet = vocab.alphabet_size();
        let mut counts: HashMap<Vec<TokenId>, Vec<f64>> = HashMap::new();
        for seq in &params.corpus {
            for (i, &t) in seq.iter().enumerate() {
                vocab.check(t)?;
                if t == vocab.eos_id() && i + 1 != seq.len() {
                    return Err(Error::ModelSpec(
                        "corpus sequence has EOS before its final position".into(),
                    ));
                }
            }
            let mut tokens = seq.clone();
            if tokens.last() != Some(&vocab.eos_id()) {
                tokens.push(vocab.eos_id());
            }
            let window = params.order - 1;
            for t in 0..tokens.len() {
                let ctx = tokens[t.saturating_sub(window)..t].to_vec();
                counts.entry(ctx).or_insert_with(|| vec![0.0; alphabet])[tokens[t] as usize] +=
                    1.0;
            }
        }
        let mut rows = HashMap::new();
        for (ctx, c) in counts {
            let smoothed: Vec<f64> = c.iter().map(|&n| n + params.smoothing).collect();
            let total: f64 = smoothed.iter().sum();
            let probs: Vec<f64> = smoothed.iter().map(|&n| n / total).collect();
            rows.insert(ctx, LogProbRow::from_probs(&probs)?);
        }
        let uniform = LogProbRow::from_logits(&vec![0.0; alphabet]);
        Ok(Self {
            vocab,
            seed: 0,
            t_cap,
            kind: ModelKind::Ngram { params, rows, uniform },
        })
    }

    /// Deterministic pseudo-random logits keyed by `(seed, prefix)`.
    pub fn synthetic(
        vocab: Vocabulary,
        seed: u64,
        t_cap: usize,
        params: SyntheticParams,
    ) -> Result<Self> {
        if !params.scale.is_finite() || params.scale < 0.0 {
            return Err(Error::ModelSpec("logit scale must be finite and >= 0".into()));
        }
        Ok(Self {
            vocab,
            seed,
            t_cap,
            kind: ModelKind::Synthetic { params },
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.vocab_ref()
    }

    fn vocab_ref(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Hard horizon: the step index at which EOS probability is forced to 1.
    pub fn t_cap(&self) -> usize {
        self.t_cap
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variant_name(&self) -> &'static str {
        self.kind.variant_name()
    }

    /// State for the empty prefix.
    pub fn initial_state(&self) -> DecodeState {
        let kind = match &self.kind {
            ModelKind::Tabular { .. } => StateKind::Tabular { prefix: Vec::new() },
            ModelKind::Ngram { .. } => StateKind::Ngram { window: Vec::new() },
            ModelKind::Synthetic { .. } => StateKind::Synthetic {
                digest: rng::stream_key(self.seed, &[SYNTH_INIT]),
            },
        };
        DecodeState { step: 0, absorbed: false, kind }
    }

    /// Rebuilds the state a prefix would have produced via repeated
    /// [`advance`](Self::advance). Constructed directly from the prefix, so
    /// it serves as the independent recomputation oracle.
    pub fn state_from_prefix(&self, prefix: &[TokenId]) -> Result<DecodeState> {
        for &t in prefix {
            self.vocab.check(t)?;
        }
        let absorbed = prefix.contains(&self.vocab.eos_id());
        let kind = match &self.kind {
            ModelKind::Tabular { .. } => StateKind::Tabular { prefix: prefix.to_vec() },
            ModelKind::Ngram { params, .. } => {
                let window = params.order - 1;
                let start = prefix.len().saturating_sub(window);
                StateKind::Ngram { window: prefix[start..].to_vec() }
            }
            ModelKind::Synthetic { .. } => {
                let mut digest = rng::stream_key(self.seed, &[SYNTH_INIT]);
                for &t in prefix {
                    digest = rng::stream_key(digest, &[t as u64]);
                }
                StateKind::Synthetic { digest }
            }
        };
        Ok(DecodeState { step: prefix.len(), absorbed, kind })
    }

    /// Next-token distribution at `state`. Absorbed states and states at the
    /// hard horizon get the forced one-hot EOS row.
    pub fn next_logprobs(&self, state: &DecodeState) -> Result<LogProbRow> {
        let alphabet = self.vocab.alphabet_size();
        if state.absorbed {
            return Ok(LogProbRow::one_hot(alphabet, self.vocab.eos_id()));
        }
        if state.step > self.t_cap {
            return Err(Error::State(format!(
                "unterminated state at step {} is past the hard horizon {}",
                state.step, self.t_cap
            )));
        }
        if state.step == self.t_cap {
            return Ok(LogProbRow::one_hot(alphabet, self.vocab.eos_id()));
        }
        match (&self.kind, &state.kind) {
            (ModelKind::Tabular { rows, default, .. }, StateKind::Tabular { prefix }) => rows
                .get(prefix)
                .or(default.as_ref())
                .cloned()
                .ok_or_else(|| {
                    Error::ModelSpec(format!("no table row for prefix {prefix:?} and no default"))
                }),
            (ModelKind::Ngram { rows, uniform, .. }, StateKind::Ngram { window }) => {
                Ok(rows.get(window).unwrap_or(uniform).clone())
            }
            (ModelKind::Synthetic { params }, StateKind::Synthetic { digest }) => {
                let mut logits = Vec::with_capacity(alphabet);
                for v in self.vocab.tokens() {
                    if params.suppress_eos && v == self.vocab.eos_id() {
                        logits.push(f64::NEG_INFINITY);
                    } else {
                        let u = rng::unit_f64(rng::stream_key(*digest, &[SYNTH_LOGIT, v as u64]));
                        logits.push(params.scale * (2.0 * u - 1.0));
                    }
                }
                Ok(LogProbRow::from_logits(&logits))
            }
            _ => Err(Error::State("decode state built for a different model variant".into())),
        }
    }

    /// Extends a state by one token. Pure: the result equals
    /// `state_from_prefix(prefix + [token])`.
    pub fn advance(&self, state: &DecodeState, token: TokenId) -> Result<DecodeState> {
        self.vocab.check(token)?;
        let kind = match (&self.kind, &state.kind) {
            (ModelKind::Tabular { .. }, StateKind::Tabular { prefix }) => {
                let mut prefix = prefix.clone();
                prefix.push(token);
                StateKind::Tabular { prefix }
            }
            (ModelKind::Ngram { params, .. }, StateKind::Ngram { window }) => {
                let mut window = window.clone();
                window.push(token);
                let keep = params.order - 1;
                if window.len() > keep {
                    window.drain(..window.len() - keep);
                }
                StateKind::Ngram { window }
            }
            (ModelKind::Synthetic { .. }, StateKind::Synthetic { digest }) => {
                StateKind::Synthetic { digest: rng::stream_key(*digest, &[token as u64]) }
            }
            _ => {
                return Err(Error::State(
                    "decode state built for a different model variant".into(),
                ))
            }
        };
        Ok(DecodeState {
            step: state.step + 1,
            absorbed: state.absorbed || token == self.vocab.eos_id(),
            kind,
        })
    }

    /// One batched decode step: a row per state, charging the ledger one
    /// token-eval per non-absorbed state (absorbed lanes are free) and the
    /// full lane count under the worst-case convention.
    pub fn batched_step(
        &self,
        states: &[DecodeState],
        ledger: &mut CostLedger,
    ) -> Result<Vec<LogProbRow>> {
        if states.is_empty() {
            return Err(Error::Input("batched_step on an empty state list".into()));
        }
        let rows = states
            .iter()
            .map(|s| self.next_logprobs(s))
            .collect::<Result<Vec<_>>>()?;
        let active = states.iter().filter(|s| !s.absorbed).count() as u64;
        ledger.record_step(active, states.len() as u64);
        Ok(rows)
    }

    /// Total log-probability of a token sequence: the sum of per-step
    /// log-conditionals along it. Empty sequences score 0; any
    /// zero-probability transition makes the whole sequence `-inf` without
    /// walking further (so impossible continuations are a value, not an
    /// error — only out-of-vocabulary tokens and over-long unterminated
    /// sequences are rejected).
    pub fn sequence_logprob(&self, y: &[TokenId]) -> Result<f64> {
        for &t in y {
            self.vocab.check(t)?;
        }
        if !y.contains(&self.vocab.eos_id()) && y.len() > self.t_cap {
            return Err(Error::Input(format!(
                "unterminated sequence of length {} exceeds the horizon {}",
                y.len(),
                self.t_cap
            )));
        }
        let mut state = self.initial_state();
        let mut total = 0.0;
        for &t in y {
            let lp = self.next_logprobs(&state)?.get(t);
            if lp == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            total += lp;
            state = self.advance(&state, t)?;
        }
        Ok(total)
    }

    /// Loads a model from its JSON spec document.
    pub fn from_spec(spec: &ModelSpecFile) -> Result<Self> {
        let vocab = Vocabulary::new(spec.vocab_size, spec.eos_id)?;
        match spec.variant.as_str() {
            "tabular" => {
                let params: TabularParams = serde_json::from_value(spec.params.clone())?;
                Self::tabular(vocab, spec.t_cap, params)
            }
            "ngram" => {
                let params: NgramParams = serde_json::from_value(spec.params.clone())?;
                Self::ngram(vocab, spec.t_cap, params)
            }
            "synthetic-logit" => {
                let params: SyntheticParams = serde_json::from_value(spec.params.clone())?;
                Self::synthetic(vocab, spec.seed, spec.t_cap, params)
            }
            other => Err(Error::Input(format!("unknown model variant {other:?}"))),
        }
    }

    pub fn from_spec_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Input(format!("cannot read model spec {}: {e}", path.display()))
        })?;
        let spec: ModelSpecFile = serde_json::from_str(&text)?;
        Self::from_spec(&spec)
    }

    /// Serializable description of this model.
    pub fn to_spec(&self) -> ModelSpecFile {
        let params = match &self.kind {
            ModelKind::Tabular { params, .. } => serde_json::to_value(params),
            ModelKind::Ngram { params, .. } => serde_json::to_value(params),
            ModelKind::Synthetic { params } => serde_json::to_value(params),
        }
        .expect("model params serialize");
        ModelSpecFile {
            variant: self.kind.variant_name().to_string(),
            seed: self.seed,
            vocab_size: self.vocab.ordinary_count(),
            eos_id: self.vocab.eos_id(),
            t_cap: self.t_cap,
            params,
        }
    }
}

/// Copies decode states by ancestor index: `result[k]` is an independent
/// copy of `states[ancestors[k]]`.
pub fn reindex_states(states: &[DecodeState], ancestors: &[usize]) -> Result<Vec<DecodeState>> {
    let mut out = Vec::with_capacity(ancestors.len());
    for &a in ancestors {
        let state = states.get(a).ok_or_else(|| {
            Error::Input(format!("ancestor index {a} out of bounds for {} states", states.len()))
        })?;
        out.push(state.clone());
    }
    Ok(out)
}
