//! Log-domain numerics: stable log-sum-exp and weight normalization.
//!
//! All probabilities in this crate travel as natural logs; exponentiation
//! happens only here and in diagnostics.

/// Stable `log(sum(exp(x)))`. Returns `-inf` for an empty slice or when every
/// entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        // either all -inf (empty support) or a +inf/NaN slipped in
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `log(exp(a) + exp(b))` without leaving the log domain.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Normalizes log-weights into linear-domain weights summing to 1.
/// Returns `None` when no weight is finite.
pub fn normalize_log_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    let total = log_sum_exp(log_weights);
    if !total.is_finite() {
        return None;
    }
    Some(log_weights.iter().map(|w| (w - total).exp()).collect())
}

/// Inverse-CDF draw from linear-domain weights in ascending index order:
/// the smallest `i` whose cumulative weight exceeds `u`.
///
/// Weights need not be exactly normalized; `u` is interpreted against their
/// running sum scaled to the total. Entries with zero weight are never chosen.
pub fn categorical_from_weights(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let threshold = u * total;
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            cum += w;
            if cum > threshold {
                return i;
            }
        }
    }
    // ran off the end on rounding; fall back to the last live entry
    last_positive
}
