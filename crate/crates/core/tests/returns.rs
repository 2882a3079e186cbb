//! n-step returns against a term-by-term sum, and loss-term bounds.

use ldc_core::a2c::{advantages, compute_losses, n_step_returns, EpisodeTrace, StepRecord, TrainerConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `gamma^(T-t) v + sum_{k=0}^{T-t} gamma^k r_{t+k}` summed literally.
fn brute_force(rewards: &[f64], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let last = rewards.len() - 1;
    (0..rewards.len())
        .map(|t| {
            let mut r = gamma.powi((last - t) as i32) * bootstrap;
            for k in 0..=(last - t) {
                r += gamma.powi(k as i32) * rewards[t + k];
            }
            r
        })
        .collect()
}

#[test]
fn returns_match_brute_force_on_random_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let gamma = [0.0, 0.5, 0.9, 1.0][i % 4];
        let len = rng.gen_range(1..=20);
        let rewards: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.3) { rng.gen_range(-1.0..3.0) } else { 0.0 }).collect();
        let bootstrap = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-5.0..5.0) };
        let fast = n_step_returns(&rewards, bootstrap, gamma);
        for (a, b) in fast.iter().zip(brute_force(&rewards, bootstrap, gamma)) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-6, "max abs error {worst}");
}

#[test]
fn worked_example() {
    let r = n_step_returns(&[1.0, 0.0, 2.0], 4.0, 0.5);
    assert!((r[0] - 2.5).abs() < 1e-12);
    let a = advantages(&[2.5], &[1.5]);
    assert!((a[0] - 1.0).abs() < 1e-12);
}

fn probs_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..8).prop_map(|w| {
        let s: f64 = w.iter().sum::<f64>() + 1e-9;
        let mut p: Vec<f64> = w.iter().map(|x| (x + 1e-9 / w.len() as f64) / s).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        p
    })
}

proptest! {
    #[test]
    fn entropy_within_bounds(probs in probs_strategy(), chosen in 0usize..8) {
        let chosen = chosen % probs.len();
        let step = StepRecord { command: "look".into(), reward: 0.0, value: 0.0, probs: probs.clone(), chosen };
        let h = step.entropy();
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= (probs.len() as f64).ln() + 1e-9);
    }

    #[test]
    fn single_candidates_give_zero_policy_loss(
        rewards in prop::collection::vec(-1.0f64..2.0, 1..12),
        values in prop::collection::vec(-3.0f64..3.0, 12),
        bootstrap in -3.0f64..3.0,
    ) {
        let cfg = TrainerConfig { lambda_e: 0.0, ..TrainerConfig::default() };
        let steps: Vec<StepRecord> = rewards
            .iter()
            .zip(&values)
            .map(|(&r, &v)| StepRecord { command: "look".into(), reward: r, value: v, probs: vec![1.0], chosen: 0 })
            .collect();
        let trace = EpisodeTrace { steps, bootstrap, terminal: false };
        let returns = n_step_returns(&trace.rewards(), bootstrap, cfg.gamma);
        let adv = advantages(&returns, &trace.values());
        let l = compute_losses(&trace, &returns, &adv, &cfg);
        prop_assert_eq!(l.policy, 0.0);
        prop_assert_eq!(l.entropy, 0.0);
        prop_assert!(l.value >= 0.0);
        prop_assert!((l.total - 0.5 * l.value).abs() < 1e-12);
    }

    #[test]
    fn zero_discount_returns_are_rewards(rewards in prop::collection::vec(-2.0f64..2.0, 2..20), v in -2.0f64..2.0) {
        let r = n_step_returns(&rewards, v, 0.0);
        let n = rewards.len();
        prop_assert_eq!(&r[..n - 1], &rewards[..n - 1]);
        prop_assert!((r[n - 1] - (rewards[n - 1] + v)).abs() < 1e-12);
    }
}
