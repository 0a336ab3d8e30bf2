//! Canonical model recipes used by the examples and the validation suite.
//!
//! Every preset is small enough to enumerate exactly, so each one doubles as
//! a ground-truth fixture: hand-computable power distributions, a
//! temperature-mismatch construction, and suppressed-EOS synthetics whose
//! runs hit the cost formulas' conventions exactly. Matching JSON spec files
//! ship under `models/`.

use crate::lm::{
    NgramParams, SyntheticParams, TableRow, TabularParams, ToyModel, Vocabulary,
};

fn table(rows: Vec<(Vec<u32>, Vec<f64>)>, default: Option<Vec<f64>>) -> TabularParams {
    TabularParams {
        rows: rows
            .into_iter()
            .map(|(prefix, probs)| TableRow { prefix, probs })
            .collect(),
        default,
    }
}

/// The smallest nontrivial power target: exactly two sequences.
///
/// Alphabet {0, EOS}, one free step. The sequences are `(EOS)` with base
/// probability 0.25 and `(0, EOS)` with 0.75, so at alpha = 2 the normalizer
/// is 0.625 and the power distribution is (0.9, 0.1) on (long, short).
pub fn two_sequence() -> ToyModel {
    let vocab = Vocabulary::new(1, 1).unwrap();
    ToyModel::tabular(vocab, 1, table(vec![(vec![], vec![0.75, 0.25])], None)).unwrap()
}

/// Enumerable oracle model: alphabet 3 (tokens {0, 1} + EOS), hard horizon 4,
/// 31 terminated sequences. Conditional rows vary mildly with the prefix so
/// the power target is neither uniform nor degenerate.
pub fn oracle_3x4() -> ToyModel {
    let vocab = Vocabulary::new(2, 2).unwrap();
    ToyModel::tabular(
        vocab,
        4,
        table(
            vec![
                (vec![], vec![0.50, 0.30, 0.20]),
                (vec![0], vec![0.25, 0.40, 0.35]),
                (vec![1], vec![0.40, 0.25, 0.35]),
            ],
            Some(vec![0.30, 0.30, 0.40]),
        ),
    )
    .unwrap()
}

/// Temperature-mismatch construction: per-token tempering at tau = 1/alpha
/// lands far from the sequence-level power distribution.
///
/// Alphabet {0, EOS}, horizon 2; three sequences with base probabilities
/// (0.45, 0.275, 0.275). At alpha = 4 the power target is roughly
/// (0.782, 0.109, 0.109) while tempering every conditional gives
/// (0.309, 0.345, 0.345) — total variation about 0.47. The second row is
/// uniform, so tempering it is a no-op; all the sequence-level mass movement
/// comes from length reweighting that per-token temperature cannot express.
pub fn mismatch_2x2() -> ToyModel {
    let vocab = Vocabulary::new(1, 1).unwrap();
    ToyModel::tabular(
        vocab,
        2,
        table(
            vec![(vec![], vec![0.55, 0.45]), (vec![0], vec![0.5, 0.5])],
            None,
        ),
    )
    .unwrap()
}

/// Smoothed bigram trained on a two-line corpus; full support everywhere.
pub fn bigram_demo() -> ToyModel {
    let vocab = Vocabulary::new(2, 2).unwrap();
    ToyModel::ngram(
        vocab,
        8,
        NgramParams {
            order: 2,
            corpus: vec![vec![0, 1, 0, 1], vec![0, 0, 1]],
            smoothing: 1.0,
        },
    )
    .unwrap()
}

/// Synthetic model for cost experiments: EOS is suppressed until the hard
/// horizon, so every lane stays active for exactly `t_cap` steps and the
/// ledgers land on the closed-form conventions.
pub fn cost_synthetic(seed: u64, t_cap: usize) -> ToyModel {
    let vocab = Vocabulary::new(7, 7).unwrap();
    ToyModel::synthetic(
        vocab,
        seed,
        t_cap,
        SyntheticParams { scale: 2.0, suppress_eos: true },
    )
    .unwrap()
}

/// Spiky long-horizon synthetic that keeps weight variance high, for runs
/// that need many resample events.
pub fn resample_heavy() -> ToyModel {
    let vocab = Vocabulary::new(5, 5).unwrap();
    ToyModel::synthetic(
        vocab,
        11,
        48,
        SyntheticParams { scale: 3.0, suppress_eos: true },
    )
    .unwrap()
}
