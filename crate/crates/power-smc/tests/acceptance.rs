//! Acceptance gate: eleven numbered criteria, one verdict line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see every
//! verdict; any FAIL panics the corresponding test.

use std::process::Command;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use power_smc::cost::{
    compute_ratio, mean_token_evals, mh_cost_global, mh_cost_lastblock, overhead_floor,
    CostParams, Regime, SpeedupTable,
};
use power_smc::engine::{
    incremental_logweight, maybe_resample, run_power_smc, run_sis, smc_step, EngineConfig,
    Ensemble, ProposalPolicy, RampSchedule,
};
use power_smc::lm::LogProbRow;
use power_smc::mh::{run_mh_power, MhConfig};
use power_smc::numeric::log_sum_exp;
use power_smc::presets;
use power_smc::rng::stream_rng;
use power_smc::resample::{offspring_counts, systematic, Resampler};
use power_smc::target::{
    enumerate_target, path_weight_decomposition, power_normalizer, temperature_joint, tv_between,
    tv_distance,
};

fn verdict(criterion: usize, label: &str, pass: bool, detail: String) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("{word} criterion {criterion}: {label} ({detail})");
    assert!(pass, "criterion {criterion} failed: {label} ({detail})");
}

/// Deterministic stand-in rows: alphabet size 2..=64, logits spread over
/// [-4, 4), full support, continuous so no two probabilities coincide.
fn random_row(case: u64) -> LogProbRow {
    let mut rng: ChaCha8Rng = stream_rng(0xACCE97, &[case]);
    let k = rng.random_range(2..=64usize);
    let logits: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect();
    LogProbRow::from_logits(&logits)
}

#[test]
fn criterion_01_zero_variance_weights() {
    let mut max_dev = 0.0f64;
    for case in 0..1000u64 {
        let row = random_row(case);
        for alpha in [2.0, 4.0, 8.0] {
            let proposal = row.powered(alpha).unwrap();
            let log_z = power_normalizer(&row, alpha).unwrap();
            for token in row.support() {
                let w =
                    incremental_logweight(row.get(token), proposal.get(token), alpha).unwrap();
                max_dev = max_dev.max((w - log_z).abs());
            }
        }
    }
    verdict(
        1,
        "optimal-proposal weights are constant and equal the power normalizer",
        max_dev < 1e-12,
        format!("max |w - log Z_t| = {max_dev:.3e} over 1000 rows x alpha in {{2,4,8}}"),
    );
}

/// Exact second moment `sum_x p(x)^(2 alpha) / q(x)` in the log domain.
fn log_second_moment(row: &LogProbRow, proposal: &LogProbRow, alpha: f64) -> f64 {
    let terms: Vec<f64> = row
        .support()
        .map(|t| 2.0 * alpha * row.get(t) - proposal.get(t))
        .collect();
    log_sum_exp(&terms)
}

#[test]
fn criterion_02_optimal_proposal_uniqueness() {
    let mut min_gap = f64::INFINITY;
    let mut checked = 0u64;
    for case in 0..1000u64 {
        let row = random_row(case);
        for alpha in [2.0, 4.0, 8.0] {
            let optimal = row.powered(alpha).unwrap();
            let m_star = log_second_moment(&row, &optimal, alpha);
            for beta in [1.0, alpha / 2.0, 2.0 * alpha] {
                let q = row.powered(beta).unwrap();
                let gap = log_second_moment(&row, &q, alpha) - m_star;
                min_gap = min_gap.min(gap);
                checked += 1;
            }
        }
    }
    verdict(
        2,
        "every mismatched power proposal strictly inflates the second moment",
        min_gap > 0.0,
        format!("min log-moment excess = {min_gap:.3e} over {checked} (row, alpha, beta) triples"),
    );
}

#[test]
fn criterion_03_renyi_path_identity() {
    let model = presets::oracle_3x4();
    let alpha = 4.0;
    let mut config = EngineConfig::new(5, 13);
    config.alpha = alpha;
    config.n_particles = 100;
    let run = run_sis(&model, &config).unwrap();
    let mut max_dev = 0.0f64;
    for particle in &run.ensemble.particles {
        let report = path_weight_decomposition(&model, alpha, &particle.prefix).unwrap();
        let identity = (1.0 - alpha) * report.total_entropy();
        max_dev = max_dev.max((particle.log_weight - identity).abs());
    }
    verdict(
        3,
        "SIS log-weights equal (1 - alpha) * sum of Renyi entropies",
        max_dev < 1e-10,
        format!("max deviation = {max_dev:.3e} over 100 sampled paths"),
    );
}

fn oracle_config(seed: u64, n: usize) -> EngineConfig {
    let mut config = EngineConfig::new(5, seed);
    config.alpha = 4.0;
    config.n_particles = n;
    config
}

#[test]
fn criterion_04_oracle_exactness() {
    let model = presets::oracle_3x4();
    let target = enumerate_target(&model, 4.0).unwrap();
    let z_exact = target.log_z_alpha().exp();

    let sis = run_sis(&model, &oracle_config(2024, 50_000)).unwrap();
    let tv_sis = tv_distance(&sis.ensemble.empirical_masses(&model).unwrap(), &target).unwrap();

    let weights: Vec<f64> = sis.ensemble.particles.iter().map(|p| p.log_weight.exp()).collect();
    let n = weights.len() as f64;
    let z_hat = weights.iter().sum::<f64>() / n;
    let var = weights.iter().map(|w| (w - z_hat).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let z_dev = (z_hat - z_exact).abs();
    assert!(
        (z_hat.ln() - sis.log_z_estimate).abs() < 1e-10,
        "estimator definitions agree"
    );

    let smc = run_power_smc(&model, &oracle_config(2024, 50_000)).unwrap();
    let tv_smc = tv_distance(&smc.ensemble.empirical_masses(&model).unwrap(), &target).unwrap();

    verdict(
        4,
        "SIS and resampling SMC reproduce the enumerated power target",
        tv_sis < 0.01 && z_dev < 3.0 * se && tv_smc < 0.02,
        format!(
            "TV_sis = {tv_sis:.5} < 0.01, |Z_hat - Z| = {z_dev:.2e} < 3 SE = {:.2e}, TV_smc = {tv_smc:.5} < 0.02",
            3.0 * se
        ),
    );
}

#[test]
fn criterion_05_ramp_exactness() {
    let model = presets::oracle_3x4();

    // shared proposal draws: the staged reweighting must telescope exactly
    let mut direct = oracle_config(42, 64);
    direct.proposal = Some(ProposalPolicy::base());
    let mut ramped = direct.clone();
    ramped.ramp = Some(RampSchedule::linear(4.0, 3).unwrap());
    let a = run_sis(&model, &direct).unwrap();
    let b = run_sis(&model, &ramped).unwrap();
    let max_gap = a
        .ensemble
        .particles
        .iter()
        .zip(&b.ensemble.particles)
        .map(|(pa, pb)| {
            assert_eq!(pa.prefix, pb.prefix, "shared draws must follow shared paths");
            (pa.log_weight - pb.log_weight).abs()
        })
        .fold(0.0f64, f64::max);

    // full ramped run with stage-optimal proposals still hits the target
    let target = enumerate_target(&model, 4.0).unwrap();
    let mut config = oracle_config(2024, 50_000);
    config.ramp = Some(RampSchedule::linear(4.0, 3).unwrap());
    let run = run_power_smc(&model, &config).unwrap();
    let tv = tv_distance(&run.ensemble.empirical_masses(&model).unwrap(), &target).unwrap();

    verdict(
        5,
        "scheduled exponents telescope to the direct-alpha weights",
        max_gap < 1e-10 && tv < 0.02,
        format!("max per-particle gap = {max_gap:.3e} < 1e-10, ramped-SMC TV = {tv:.5} < 0.02"),
    );
}

#[test]
fn criterion_06_resampler_unbiasedness() {
    let weights = [0.5, 0.3, 0.2];
    let n = weights.len();
    let trials = 100_000u64;
    let schemes = [
        Resampler::Multinomial,
        Resampler::Stratified,
        Resampler::Systematic,
        Resampler::Residual,
    ];
    let mut worst_sigma = 0.0f64;
    let mut within_one = true;
    for scheme in schemes {
        let mut sums = vec![0.0f64; n];
        let mut sq_sums = vec![0.0f64; n];
        for trial in 0..trials {
            let mut rng = stream_rng(6, &[scheme as u64, trial]);
            let counts = offspring_counts(&scheme.ancestors(&weights, &mut rng).unwrap(), n);
            for (i, c) in counts.iter().enumerate() {
                let c = *c as f64;
                sums[i] += c;
                sq_sums[i] += c * c;
                if scheme == Resampler::Systematic {
                    within_one &= (c - weights[i] * n as f64).abs() < 1.0;
                }
            }
        }
        for i in 0..n {
            let mean = sums[i] / trials as f64;
            let var = sq_sums[i] / trials as f64 - mean * mean;
            let se = (var / trials as f64).sqrt();
            let sigmas = (mean - weights[i] * n as f64).abs() / se.max(1e-12);
            worst_sigma = worst_sigma.max(sigmas);
        }
    }
    let worked = systematic(&weights, 0.5).unwrap();
    let one_based: Vec<usize> = worked.iter().map(|a| a + 1).collect();
    verdict(
        6,
        "all four resamplers are unbiased; systematic is within one",
        worst_sigma < 3.0 && within_one && one_based == vec![1, 1, 3],
        format!(
            "worst mean-offspring deviation = {worst_sigma:.2} SE over {trials} trials, \
             u0 = 0.5 ancestors = {one_based:?}"
        ),
    );
}

#[test]
fn criterion_07_cost_model_reproduction() {
    let factor = mh_cost_global(16, 1, 10).unwrap() / 16.0;
    let params = CostParams {
        horizon: 16,
        block: 1,
        moves_per_block: 10,
        particles: 48,
        speedup: SpeedupTable::default(),
    };
    let ratio = compute_ratio(&params).unwrap();
    let floor = overhead_floor(10);

    // fifty chains per regime against the closed forms
    let (horizon, block, moves, runs) = (256usize, 32usize, 10usize, 50u64);
    let mut rel = Vec::new();
    for regime in [Regime::Global, Regime::LastBlock] {
        let analytic = match regime {
            Regime::Global => mh_cost_global(horizon as u64, block as u64, moves as u64).unwrap(),
            Regime::LastBlock => mh_cost_lastblock(horizon as u64, moves as u64),
        };
        let mut ledgers = Vec::new();
        for i in 0..runs {
            let model = presets::cost_synthetic(9000 + i, 2 * horizon);
            let mut config = MhConfig::new(horizon, block, moves, 4000 + i);
            config.regime = regime;
            ledgers.push(run_mh_power(&model, &config).unwrap().ledger);
        }
        let empirical = mean_token_evals(&ledgers).unwrap();
        rel.push((empirical / analytic - 1.0).abs());
    }

    // all-active convention: the SMC ledger is exactly N * T
    let model = presets::cost_synthetic(7, 128);
    let mut config = EngineConfig::new(64, 3);
    config.n_particles = 32;
    let smc_evals = run_sis(&model, &config).unwrap().ledger.token_evals();

    verdict(
        7,
        "analytic cost factors hold and measured ledgers match them",
        factor == 43.5
            && (ratio - 0.90625).abs() < 1e-12
            && floor == 6.0
            && rel.iter().all(|r| *r < 0.05)
            && smc_evals == 32 * 64,
        format!(
            "factor = {factor}, ratio = {ratio:.5}, floor = {floor}, \
             regime errors = {:.4}/{:.4} < 0.05 over {runs} runs, SMC evals = {smc_evals} = N*T",
            rel[0], rel[1]
        ),
    );
}

#[test]
fn criterion_08_mh_correctness() {
    let model = presets::oracle_3x4();
    let target = enumerate_target(&model, 2.0).unwrap();
    let mut config = MhConfig::new(5, 5, 100_000, 77);
    config.alpha = 2.0;
    let run = run_mh_power(&model, &config).unwrap();
    let tv = tv_distance(&run.last_block_masses(10_000), &target).unwrap();
    verdict(
        8,
        "a long MH chain reaches the enumerated power target",
        tv < 0.02,
        format!("TV = {tv:.5} < 0.02 after 100000 moves, acceptance = {:.3}", run.acceptance_rate()),
    );
}

#[test]
fn criterion_09_cache_analog_safety() {
    let model = presets::resample_heavy();
    let mut config = EngineConfig::new(48, 5);
    config.n_particles = 64;
    // deliberately mismatched proposal so weights spread and resampling fires
    config.proposal = Some(ProposalPolicy::base());
    config.validate().unwrap();

    let mut ensemble = Ensemble::new(&model, config.n_particles);
    let mut ledger = power_smc::cost::CostLedger::default();
    let mut events = 0usize;
    let mut states_exact = true;
    for _ in 0..config.t_max {
        smc_step(&mut ensemble, &model, &config, &mut ledger).unwrap();
        if maybe_resample(&mut ensemble, &config).unwrap() {
            events += 1;
            for particle in &ensemble.particles {
                states_exact &=
                    particle.state == model.state_from_prefix(&particle.prefix).unwrap();
            }
        }
    }
    verdict(
        9,
        "every post-resample decode state equals its recompute-from-prefix state",
        events >= 10 && states_exact,
        format!("{events} resample events, all states exact = {states_exact}"),
    );
}

#[test]
fn criterion_10_temperature_mismatch() {
    let model = presets::mismatch_2x2();
    let alpha = 4.0;
    let target = enumerate_target(&model, alpha).unwrap();
    let tempered = temperature_joint(&model, 1.0 / alpha).unwrap();
    let tv_temp = tv_between(&tempered, &target);

    let mut config = EngineConfig::new(3, 31);
    config.alpha = alpha;
    config.n_particles = 4_096;
    let run = run_power_smc(&model, &config).unwrap();
    let tv_smc = tv_distance(&run.ensemble.empirical_masses(&model).unwrap(), &target).unwrap();

    verdict(
        10,
        "per-token temperature misses the power target that SMC hits",
        tv_temp > 0.05 && tv_smc < 0.02,
        format!("TV_temperature = {tv_temp:.5} > 0.05, TV_smc = {tv_smc:.5} < 0.02"),
    );
}

fn run_cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_power-smc"))
        .args(args)
        .status()
        .expect("spawn the CLI");
    assert!(status.success(), "CLI failed: {args:?}");
}

fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|entry| {
            let entry = entry.unwrap();
            (
                entry.file_name().into_string().unwrap(),
                std::fs::read(entry.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_11_byte_determinism() {
    let root = tempfile::tempdir().unwrap();
    let configs: Vec<Vec<String>> = vec![
        // criterion 4's runs
        vec!["run-sis", "--preset", "oracle-3x4", "--alpha", "4", "--particles", "50000", "--horizon", "5", "--seed", "2024"],
        vec!["run-smc", "--preset", "oracle-3x4", "--alpha", "4", "--particles", "50000", "--horizon", "5", "--seed", "2024"],
        // criterion 5's ramped run
        vec!["run-smc", "--preset", "oracle-3x4", "--alpha", "4", "--particles", "50000", "--horizon", "5", "--ramp-tokens", "3", "--seed", "2024"],
        // criterion 8's chain
        vec!["run-mh", "--preset", "oracle-3x4", "--alpha", "2", "--horizon", "5", "--block", "5", "--moves", "100000", "--seed", "77"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();

    let mut identical = true;
    for (i, config) in configs.iter().enumerate() {
        let dir_a = root.path().join(format!("a{i}"));
        let dir_b = root.path().join(format!("b{i}"));
        for dir in [&dir_a, &dir_b] {
            let mut args: Vec<&str> = config.iter().map(String::as_str).collect();
            let out = dir.to_str().unwrap();
            args.extend_from_slice(&["--out", out]);
            run_cli(&args);
        }
        identical &= dir_bytes(&dir_a) == dir_bytes(&dir_b);
    }
    verdict(
        11,
        "repeated runs of the criterion 4/5/8 configurations emit byte-identical files",
        identical,
        format!("{} configurations, each run twice", configs.len()),
    );
}
