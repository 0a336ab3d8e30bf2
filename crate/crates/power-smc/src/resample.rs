//! Resampling schemes: systematic, multinomial, stratified, residual.
//!
//! All four take normalized weights over `N` particles and return `N`
//! ancestor indices with expected offspring counts `N * w_i` (unbiasedness).
//! Systematic additionally keeps every realized count within 1 of `N * w_i`,
//! and residual assigns the `floor(N * w_i)` copies deterministically before
//! randomizing the remainder.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::categorical_from_weights;

/// Scheme selector carried in engine configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampler {
    #[default]
    Systematic,
    Multinomial,
    Stratified,
    Residual,
}

impl Resampler {
    pub fn name(&self) -> &'static str {
        match self {
            Resampler::Systematic => "systematic",
            Resampler::Multinomial => "multinomial",
            Resampler::Stratified => "stratified",
            Resampler::Residual => "residual",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "systematic" => Ok(Resampler::Systematic),
            "multinomial" => Ok(Resampler::Multinomial),
            "stratified" => Ok(Resampler::Stratified),
            "residual" => Ok(Resampler::Residual),
            other => Err(Error::Input(format!(
                "unknown resampler {other:?}; expected systematic, multinomial, \
                 stratified, or residual"
            ))),
        }
    }

    /// Draws ancestors with this scheme, consuming the event's generator.
    /// Systematic consumes exactly one uniform (its offset `u0`).
    pub fn ancestors(&self, weights: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        match self {
            Resampler::Systematic => systematic(weights, rng.random::<f64>()),
            Resampler::Multinomial => multinomial(weights, rng),
            Resampler::Stratified => stratified(weights, rng),
            Resampler::Residual => residual(weights, rng),
        }
    }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Input("cannot resample zero particles".into()));
    }
    let mut total = 0.0;
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Input(format!("weight {w} is not a probability")));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!(
            "weights sum to {total}, not 1; normalize before resampling"
        )));
    }
    Ok(())
}

/// Walks monotone positions through the cumulative weights: each ancestor is
/// the smallest index whose cumulative weight reaches its position.
fn ancestors_at_positions(weights: &[f64], positions: &[f64]) -> Vec<usize> {
    let n = weights.len();
    let mut ancestors = Vec::with_capacity(positions.len());
    let mut j = 0usize;
    let mut cum = weights[0];
    for &p in positions {
        while cum < p && j + 1 < n {
            j += 1;
            cum += weights[j];
        }
        ancestors.push(j);
    }
    ancestors
}

/// Systematic resampling with a single offset: positions
/// `p_i = (u0 + i - 1) / N` for `i = 1..N`, ancestor
/// `A_i = min{ j : cum(j) >= p_i }`. Offspring counts differ from `N * w_i`
/// by less than 1.
pub fn systematic(weights: &[f64], u0: f64) -> Result<Vec<usize>> {
    validate_weights(weights)?;
    if !(0.0..1.0).contains(&u0) {
        return Err(Error::Input(format!("systematic offset u0 = {u0} outside [0, 1)")));
    }
    let n = weights.len() as f64;
    let positions: Vec<f64> = (0..weights.len()).map(|i| (u0 + i as f64) / n).collect();
    Ok(ancestors_at_positions(weights, &positions))
}

/// Independent categorical draw per slot.
pub fn multinomial(weights: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    validate_weights(weights)?;
    Ok((0..weights.len())
        .map(|_| categorical_from_weights(weights, rng.random::<f64>()))
        .collect())
}

/// One uniform per stratum: positions `p_i = (i - 1 + u_i) / N`.
pub fn stratified(weights: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    validate_weights(weights)?;
    let n = weights.len() as f64;
    let positions: Vec<f64> = (0..weights.len())
        .map(|i| (i as f64 + rng.random::<f64>()) / n)
        .collect();
    Ok(ancestors_at_positions(weights, &positions))
}

/// Deterministic `floor(N * w_i)` copies first, then the remainder drawn
/// multinomially from the fractional parts.
pub fn residual(weights: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    validate_weights(weights)?;
    let n = weights.len();
    let mut ancestors = Vec::with_capacity(n);
    let mut residuals = vec![0.0f64; n];
    for (i, &w) in weights.iter().enumerate() {
        let scaled = n as f64 * w;
        let mut copies = scaled.floor();
        // snap counts sitting a rounding error below an integer (e.g. the
        // uniform case N * (1/N)) so the deterministic part covers them
        if scaled - copies > 1.0 - 1e-9 {
            copies += 1.0;
        }
        residuals[i] = (scaled - copies).max(0.0);
        for _ in 0..copies as usize {
            ancestors.push(i);
        }
    }
    while ancestors.len() < n {
        ancestors.push(categorical_from_weights(&residuals, rng.random::<f64>()));
    }
    ancestors.truncate(n); // paranoia; the snap keeps the sum at N
    Ok(ancestors)
}

/// Offspring counts implied by an ancestor list.
pub fn offspring_counts(ancestors: &[usize], n: usize) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for &a in ancestors {
        counts[a] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, STREAM_RESAMPLE};

    #[test]
    fn systematic_worked_example() {
        // weights (0.5, 0.3, 0.2), u0 = 0.5 -> positions (1/6, 1/2, 5/6)
        // -> ancestors (1, 1, 3) 1-indexed
        let ancestors = systematic(&[0.5, 0.3, 0.2], 0.5).unwrap();
        assert_eq!(ancestors, vec![0, 0, 2]);
    }

    #[test]
    fn systematic_identity_on_uniform_weights() {
        let w = [0.25; 4];
        assert_eq!(systematic(&w, 0.5).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn systematic_counts_within_one_of_expectation() {
        let w = [0.42, 0.1, 0.31, 0.17];
        let n = w.len();
        for k in 0..100 {
            let u0 = k as f64 / 100.0;
            let counts = offspring_counts(&systematic(&w, u0).unwrap(), n);
            for (i, &c) in counts.iter().enumerate() {
                assert!(
                    (c as f64 - n as f64 * w[i]).abs() < 1.0,
                    "u0 = {u0}: count {c} vs {}",
                    n as f64 * w[i]
                );
            }
        }
    }

    #[test]
    fn collapse_sends_everyone_to_the_heavy_particle() {
        let w = [0.0, 1.0, 0.0];
        assert_eq!(systematic(&w, 0.25).unwrap(), vec![1, 1, 1]);
        let mut rng = stream_rng(1, &[STREAM_RESAMPLE, 0]);
        assert_eq!(multinomial(&w, &mut rng).unwrap(), vec![1, 1, 1]);
        assert_eq!(stratified(&w, &mut rng).unwrap(), vec![1, 1, 1]);
        assert_eq!(residual(&w, &mut rng).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn residual_uniform_weights_are_fully_deterministic() {
        for n in [3usize, 5, 8] {
            let w = vec![1.0 / n as f64; n];
            let mut rng = stream_rng(2, &[STREAM_RESAMPLE, n as u64]);
            let ancestors = residual(&w, &mut rng).unwrap();
            let sorted = {
                let mut a = ancestors.clone();
                a.sort_unstable();
                a
            };
            assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn residual_floor_copies_come_first() {
        // N = 4, w = (0.5, 0.25, 0.125, 0.125): N*w = (2, 1, 0.5, 0.5)
        let w = [0.5, 0.25, 0.125, 0.125];
        let mut rng = stream_rng(3, &[STREAM_RESAMPLE]);
        let ancestors = residual(&w, &mut rng).unwrap();
        assert_eq!(&ancestors[..3], &[0, 0, 1]);
        assert!(ancestors[3] == 2 || ancestors[3] == 3);
    }

    #[test]
    fn malformed_weights_are_rejected() {
        assert!(systematic(&[], 0.5).is_err());
        assert!(systematic(&[0.5, 0.3], 0.5).is_err());
        assert!(systematic(&[0.5, 0.5], 1.0).is_err());
        assert!(systematic(&[1.2, -0.2], 0.5).is_err());
        let mut rng = stream_rng(4, &[STREAM_RESAMPLE]);
        assert!(multinomial(&[0.9, 0.2], &mut rng).is_err());
        assert!(stratified(&[f64::NAN, 1.0], &mut rng).is_err());
        assert!(residual(&[0.3, 0.3], &mut rng).is_err());
    }

    #[test]
    fn all_schemes_are_unbiased_on_the_worked_weights() {
        let w = [0.5, 0.3, 0.2];
        let n = w.len();
        let trials = 100_000u32;
        for scheme in [
            Resampler::Systematic,
            Resampler::Multinomial,
            Resampler::Stratified,
            Resampler::Residual,
        ] {
            let mut sums = vec![0.0f64; n];
            let mut sq_sums = vec![0.0f64; n];
            for k in 0..trials {
                let mut rng = stream_rng(77, &[STREAM_RESAMPLE, scheme as u64, k as u64]);
                let counts = offspring_counts(&scheme.ancestors(&w, &mut rng).unwrap(), n);
                for i in 0..n {
                    sums[i] += counts[i] as f64;
                    sq_sums[i] += (counts[i] as f64).powi(2);
                }
            }
            for i in 0..n {
                let mean = sums[i] / trials as f64;
                let var = sq_sums[i] / trials as f64 - mean * mean;
                let se = (var / trials as f64).sqrt().max(1e-12);
                let expected = n as f64 * w[i];
                assert!(
                    (mean - expected).abs() <= 3.0 * se + 1e-9,
                    "{}: particle {i} mean {mean} vs {expected} (se {se})",
                    scheme.name()
                );
            }
        }
    }

    #[test]
    fn resampler_parse_round_trips() {
        for scheme in [
            Resampler::Systematic,
            Resampler::Multinomial,
            Resampler::Stratified,
            Resampler::Residual,
        ] {
            assert_eq!(Resampler::parse(scheme.name()).unwrap(), scheme);
        }
        assert!(Resampler::parse("bogus").is_err());
    }
}
