//! End-to-end trainer and evaluation behavior on small generated families.

use ldc_core::a2c::{metrics_csv, train, EpisodeMetrics, TrainerConfig};
use ldc_core::agent::{AgentDims, AgentModel};
use ldc_core::commands::Helpers;
use ldc_core::engine::World;
use ldc_core::eval::{evaluate, summary_csv, Policy};
use ldc_core::generator::{build_vocab, generate_world, GenConfig, Split};
use ldc_core::lexicon::{load_embeddings, FoodLexicon};
use ldc_core::navigator::{NavDims, NavModel};
use ldc_core::recipe::{RecipeDims, RecipeModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn worlds(config: &GenConfig, split: Split, n: u64) -> Vec<World> {
    let lex = FoodLexicon::bundled();
    (0..n).map(|i| generate_world(split.seed(i), config, &lex)).collect()
}

fn fresh_agent(seed: u64) -> AgentModel {
    let vocab = build_vocab(&FoodLexicon::bundled());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let emb = load_embeddings(None, &vocab, &mut rng).unwrap();
    AgentModel::new(vocab, emb, AgentDims::default(), &mut rng)
}

fn window_means(log: &[EpisodeMetrics], range: std::ops::Range<usize>) -> (f64, f64) {
    let n = range.len() as f64;
    let rows = &log[range];
    (rows.iter().map(|m| m.normalized).sum::<f64>() / n, rows.iter().map(|m| m.steps as f64).sum::<f64>() / n)
}

/// 50 episodes on one-room, one-ingredient games. These are solved from the
/// first episode, so the score cannot rise; the learning trend shows in the
/// number of steps taken, averaged over several training seeds.
#[test]
fn smoke_run_improves() {
    let family = GenConfig { rooms: (1, 1), ingredients: (1, 1), ..GenConfig::default() };
    let games = worlds(&family, Split::Train, 50);
    let (mut first_score, mut last_score, mut first_steps, mut last_steps) = (0.0, 0.0, 0.0, 0.0);
    for seed in 0..5 {
        let mut model = fresh_agent(seed);
        let cfg = TrainerConfig { episodes: 50, epochs: 1, seed, ..TrainerConfig::default() };
        let log = train(&mut model, &games, &Helpers::Oracle, &cfg, |_| {}).unwrap();
        assert_eq!(log.len(), 50);
        let (s0, t0) = window_means(&log, 0..10);
        let (s1, t1) = window_means(&log, 40..50);
        first_score += s0;
        last_score += s1;
        first_steps += t0;
        last_steps += t1;
    }
    if first_score < 500.0 {
        assert!(last_score > first_score, "score {first_score} -> {last_score}");
    } else {
        assert_eq!(last_score, first_score);
    }
    assert!(last_steps < first_steps, "steps {first_steps} -> {last_steps}");
}

#[test]
fn fixed_seed_gives_identical_log() {
    let games = worlds(&GenConfig::default(), Split::Train, 6);
    let cfg = TrainerConfig { episodes: 6, epochs: 1, seed: 9, ..TrainerConfig::default() };
    let run = || {
        let mut model = fresh_agent(9);
        let log = train(&mut model, &games, &Helpers::Oracle, &cfg, |_| {}).unwrap();
        (metrics_csv(&log), model.store)
    };
    let (a, pa) = run();
    let (b, pb) = run();
    assert_eq!(a, b);
    for id in pa.ids() {
        assert_eq!(pa.get(id), pb.get(id), "{}", pa.name(id));
    }
}

#[test]
fn oracle_and_learned_helpers_both_train() {
    let games = worlds(&GenConfig { rooms: (2, 3), ..GenConfig::default() }, Split::Train, 10);
    let lex = FoodLexicon::bundled();
    let vocab = build_vocab(&lex);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let emb = load_embeddings(None, &vocab, &mut rng).unwrap();
    let recipe = RecipeModel::new(vocab.clone(), emb.clone(), RecipeDims::default(), &mut rng);
    let nav = NavModel::new(vocab, emb, NavDims::default(), &mut rng);
    let cfg = TrainerConfig { episodes: 10, epochs: 1, seed: 1, ..TrainerConfig::default() };
    for helpers in [Helpers::Oracle, Helpers::Learned { recipe: &recipe, nav: &nav }] {
        let mut model = fresh_agent(1);
        let log = train(&mut model, &games, &helpers, &cfg, |_| {}).unwrap();
        assert_eq!(log.len(), 10);
        assert!(log.iter().all(|m| m.losses.total.is_finite() && m.losses.value >= 0.0 && m.losses.entropy >= 0.0));
    }
}

#[test]
fn evaluation_is_deterministic_and_oracle_is_perfect() {
    let games = worlds(&GenConfig::default(), Split::Test, 20);
    let walk = evaluate(&Policy::Walkthrough, &games, 0, 3);
    assert_eq!(walk.score(), (100.0, 0.0));
    assert_eq!(walk.win_rate(), 100.0);
    let model = fresh_agent(3);
    for policy in [
        Policy::RandomWl,
        Policy::RandomAc,
        Policy::RandomPruned { helpers: Helpers::Oracle },
        Policy::Agent { model: &model, helpers: Helpers::Oracle, greedy: false, horizon: 16 },
    ] {
        let a = evaluate(&policy, &games[..5], 11, 2);
        let b = evaluate(&policy, &games[..5], 11, 2);
        assert_eq!(summary_csv(&[a.clone()]), summary_csv(&[b.clone()]));
        assert_eq!(a.games_csv(), b.games_csv());
        assert!(a.games.iter().all(|g| (0.0..=100.0).contains(&g.normalized())));
    }
    let greedy = Policy::Agent { model: &model, helpers: Helpers::Oracle, greedy: true, horizon: 16 };
    assert_eq!(evaluate(&greedy, &games[..3], 0, 1).score().1, 0.0);
}
