//! Recipe manager: a classifier over recipe lines and the commands built
//! from its output.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::commands::{Candidate, Provenance};
use crate::engine::{self, Action, GameState, Utility, World};
use crate::generator::{line_labels, RecipeSample};
use crate::lexicon::{is_state_adjective, tokenize, Vocab};
use crate::nn::{bigru_encode_tokens, checkpoint, Activation, AdamState, Graph, GruParams, MlpParams, NnError, ParamId, ParamStore, Tensor, Var};
use crate::observe::{self, RecipeLine};

pub const MAX_TOKENS: usize = 128;
pub const THRESHOLD: f32 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecipeDims {
    pub embed: usize,
    pub hidden: usize,
    pub classifier_hidden: usize,
}

impl Default for RecipeDims {
    fn default() -> Self {
        RecipeDims { embed: crate::lexicon::EMBED_DIM, hidden: 64, classifier_hidden: 128 }
    }
}

#[derive(Clone, Debug)]
pub struct RecipeModel {
    pub store: ParamStore,
    pub vocab: Vocab,
    pub dims: RecipeDims,
    pub embed: ParamId,
    pub line_fwd: GruParams,
    pub line_bwd: GruParams,
    pub inv_fwd: GruParams,
    pub inv_bwd: GruParams,
    pub classifier: MlpParams,
}

impl RecipeModel {
    /// `embeddings` is `vocab.len() x dims.embed`.
    pub fn new<R: Rng>(vocab: Vocab, embeddings: Tensor, dims: RecipeDims, rng: &mut R) -> Self {
        assert_eq!(embeddings.shape(), &[vocab.len(), dims.embed], "embedding table shape");
        let mut store = ParamStore::new();
        let embed = store.add("recipe.embed", embeddings);
        let line_fwd = GruParams::new(&mut store, "recipe.line.fwd", dims.embed, dims.hidden, rng);
        let line_bwd = GruParams::new(&mut store, "recipe.line.bwd", dims.embed, dims.hidden, rng);
        let inv_fwd = GruParams::new(&mut store, "recipe.inventory.fwd", dims.embed + 1, dims.hidden, rng);
        let inv_bwd = GruParams::new(&mut store, "recipe.inventory.bwd", dims.embed + 1, dims.hidden, rng);
        let classifier = MlpParams::new(
            &mut store,
            "recipe.classifier",
            &[6 * dims.hidden, dims.classifier_hidden, 2],
            Activation::Relu,
            rng,
        );
        RecipeModel { store, vocab, dims, embed, line_fwd, line_bwd, inv_fwd, inv_bwd, classifier }
    }

    fn encode(&self, text: &str) -> Vec<usize> {
        self.vocab.encode(text, MAX_TOKENS)
    }

    /// Logits `B x 2` (needed, collect) for paired lines and inventories.
    fn logits(&self, g: &mut Graph, lines: &[String], inventories: &[&str]) -> Var {
        let line_ids: Vec<Vec<usize>> = lines.iter().map(|l| self.encode(l)).collect();
        let inv_ids: Vec<Vec<usize>> = inventories.iter().map(|i| self.encode(i)).collect();
        let flags: Vec<Vec<f32>> = lines
            .iter()
            .zip(inventories)
            .map(|(l, i)| {
                let mut f = match_flags(l, i);
                f.truncate(MAX_TOKENS);
                f
            })
            .collect();
        let l = bigru_encode_tokens(g, self.embed, &line_ids, &self.line_fwd, &self.line_bwd);
        let fs = self.inv_fwd.run_tokens_with(g, self.embed, &inv_ids, Some(&flags), false);
        let bs = self.inv_bwd.run_tokens_with(g, self.embed, &inv_ids, Some(&flags), true);
        let f = flagged_mean(g, &fs, &flags, false);
        let b = flagged_mean(g, &bs, &flags, true);
        let inv = g.concat_cols(&[f, b]);
        let both = g.mul(l, inv);
        let x = g.concat_cols(&[l, inv, both]);
        self.classifier.forward(g, x)
    }

    /// Probabilities `(needed, collect)` for each line against one inventory.
    pub fn classify(&self, lines: &[String], inventory: &str) -> Vec<(f32, f32)> {
        if lines.is_empty() {
            return Vec::new();
        }
        let inv = vec![inventory; lines.len()];
        let mut g = Graph::new(&self.store);
        let out = self.logits(&mut g, lines, &inv);
        g.value(out).data().chunks(2).map(|c| (sigmoid(c[0]), sigmoid(c[1]))).collect()
    }

    /// Mean binary cross-entropy over both heads for a batch of samples.
    pub fn batch_loss(&self, g: &mut Graph, batch: &[&RecipeSample]) -> Var {
        let lines: Vec<String> = batch.iter().map(|s| s.direction.clone()).collect();
        let invs: Vec<&str> = batch.iter().map(|s| s.inventory.as_str()).collect();
        let targets: Vec<f32> = batch.iter().flat_map(|s| [s.needed as f32, s.collect as f32]).collect();
        let logits = self.logits(g, &lines, &invs);
        g.bce_with_logits(logits, &targets)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        checkpoint::save(&self.store, path)
    }

    pub fn load_weights(&mut self, path: &Path) -> Result<(), NnError> {
        checkpoint::load_into(&mut self.store, path)
    }
}

/// Mean of the per-step states over flagged tokens; zero rows where
/// nothing is flagged. `states[t]` is `B x H` at step `t` of a run that
/// read each sequence in the given direction.
fn flagged_mean(g: &mut Graph, states: &[Var], flags: &[Vec<f32>], reverse: bool) -> Var {
    let batch = flags.len();
    let hidden = g.value(states[0]).cols();
    let counts: Vec<f32> = flags.iter().map(|f| f.iter().sum()).collect();
    let mut acc: Option<Var> = None;
    for (t, &h) in states.iter().enumerate() {
        let mut w = vec![0.0f32; batch * hidden];
        let mut any = false;
        for (b, f) in flags.iter().enumerate() {
            if t >= f.len() || counts[b] == 0.0 {
                continue;
            }
            let pos = if reverse { f.len() - 1 - t } else { t };
            if f[pos] > 0.0 {
                any = true;
                w[b * hidden..(b + 1) * hidden].fill(f[pos] / counts[b]);
            }
        }
        if !any {
            continue;
        }
        let wv = g.input(Tensor::matrix(batch, hidden, w));
        let term = g.mul(h, wv);
        acc = Some(match acc {
            Some(a) => g.add(a, term),
            None => term,
        });
    }
    acc.unwrap_or_else(|| g.input(Tensor::zeros(&[batch, hidden])))
}

/// Ingredient tokens named by a recipe line: everything after
/// `<verb> the`, or the whole line for a bare ingredient.
fn line_ingredient(tokens: &[String]) -> &[String] {
    match tokens {
        [verb, the, rest @ ..] if the == "the" && !rest.is_empty() && Action::from_verb(verb).is_some() => rest,
        _ => tokens,
    }
}

/// One flag per inventory token: 1 for tokens of the inventory item named
/// exactly by the line's ingredient, ignoring article and state adjectives.
pub fn match_flags(line: &str, inventory: &str) -> Vec<f32> {
    let line_tokens = tokenize(line);
    let name = line_ingredient(&line_tokens);
    let tokens = tokenize(inventory);
    let mut flags = vec![0.0; tokens.len()];
    let mut start = 0;
    for end in 0..=tokens.len() {
        let boundary = end == tokens.len() || matches!(tokens[end].as_str(), "," | "." | ":");
        if !boundary {
            continue;
        }
        let item = &tokens[start..end];
        let mut rest = item;
        if let [first, tail @ ..] = rest {
            if matches!(first.as_str(), "a" | "an" | "some" | "the") {
                rest = tail;
            }
        }
        while rest.len() > name.len() && is_state_adjective(&rest[0]) {
            rest = &rest[1..];
        }
        if !name.is_empty() && rest == name {
            flags[start..end].iter_mut().for_each(|f| *f = 1.0);
        }
        start = end + 1;
    }
    flags
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifiedLine {
    pub line: RecipeLine,
    pub needed: f32,
    pub collect: f32,
}

/// Runs the classifier over every line of `recipe_text`.
pub fn classify_directions(recipe_text: &str, inventory_text: &str, model: &RecipeModel) -> Vec<ClassifiedLine> {
    let lines = observe::parse_recipe(recipe_text);
    let texts: Vec<String> = lines.iter().map(|l| l.text.clone()).collect();
    let probs = model.classify(&texts, inventory_text);
    lines.into_iter().zip(probs).map(|(line, (needed, collect))| ClassifiedLine { line, needed, collect }).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngredientStatus {
    pub name: String,
    pub collect: bool,
    pub pending: Vec<Action>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecipeStatus {
    /// False until the recipe has been read.
    pub known: bool,
    pub ingredients: Vec<IngredientStatus>,
    /// Held items that the recipe does not name.
    pub unnecessary: Vec<String>,
}

fn list_text(items: &[String]) -> String {
    if items.is_empty() {
        "nothing".to_string()
    } else {
        items.join(" , ")
    }
}

impl RecipeStatus {
    pub fn missing(&self) -> Vec<String> {
        self.ingredients.iter().filter(|g| g.collect).map(|g| g.name.clone()).collect()
    }

    pub fn has_pending(&self) -> bool {
        self.ingredients.iter().any(|g| !g.pending.is_empty())
    }

    /// Recipe read, nothing to collect, nothing left to do.
    pub fn complete(&self) -> bool {
        self.known && !self.has_pending() && self.ingredients.iter().all(|g| !g.collect)
    }

    pub fn required_utilities(&self) -> Vec<Utility> {
        let mut out: Vec<Utility> =
            self.ingredients.iter().flat_map(|g| g.pending.iter().map(|a| a.utility())).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn missing_text(&self) -> String {
        list_text(&self.missing())
    }

    pub fn unnecessary_text(&self) -> String {
        list_text(&self.unnecessary)
    }

    pub fn utilities_text(&self) -> String {
        let names: Vec<String> = self.required_utilities().iter().map(|u| u.name().to_string()).collect();
        list_text(&names)
    }
}

/// Aggregates per-line decisions into a per-ingredient status.
///
/// `decisions[i]` is `(needed, collect)` for `lines[i]`.
pub fn status_from_decisions(lines: &[RecipeLine], decisions: &[(bool, bool)], inventory_text: &str) -> RecipeStatus {
    let mut ingredients: Vec<IngredientStatus> = Vec::new();
    let index = |ings: &mut Vec<IngredientStatus>, name: &str| -> usize {
        match ings.iter().position(|g| g.name == name) {
            Some(i) => i,
            None => {
                ings.push(IngredientStatus { name: name.to_string(), ..Default::default() });
                ings.len() - 1
            }
        }
    };
    for (line, &(needed, collect)) in lines.iter().zip(decisions) {
        let i = index(&mut ingredients, &line.ingredient);
        match line.action {
            None => ingredients[i].collect = collect,
            Some(a) if needed => ingredients[i].pending.push(a),
            Some(_) => {}
        }
    }
    let names: Vec<&str> = lines.iter().map(|l| l.ingredient.as_str()).collect();
    let unnecessary = observe::inventory_items(inventory_text)
        .into_iter()
        .filter(|item| item != "meal" && !names.contains(&item.as_str()))
        .collect();
    RecipeStatus { known: !lines.is_empty(), ingredients, unnecessary }
}

/// Thresholded model decisions; ties go to "needed".
pub fn recipe_status(recipe_text: Option<&str>, inventory_text: &str, model: &RecipeModel) -> RecipeStatus {
    let Some(recipe_text) = recipe_text else {
        return status_from_decisions(&[], &[], inventory_text);
    };
    let classified = classify_directions(recipe_text, inventory_text, model);
    let lines: Vec<RecipeLine> = classified.iter().map(|c| c.line.clone()).collect();
    let decisions: Vec<(bool, bool)> =
        classified.iter().map(|c| (c.needed >= THRESHOLD, c.collect >= THRESHOLD)).collect();
    status_from_decisions(&lines, &decisions, inventory_text)
}

/// Ground-truth labels for each line of the world's recipe.
pub fn oracle_decisions(world: &World, state: &GameState, lines: &[RecipeLine]) -> Vec<(bool, bool)> {
    lines
        .iter()
        .map(|line| {
            let held = world.item_by_name(&line.ingredient).filter(|i| state.holds_item(*i)).map(|i| {
                let s = &state.items[i];
                (s.cut, s.heat)
            });
            line_labels(held, line.action)
        })
        .collect()
}

/// Status computed from the true game state instead of the classifier.
pub fn oracle_status(world: &World, state: &GameState, recipe_text: Option<&str>) -> RecipeStatus {
    let inventory = engine::text::inventory_text(world, state);
    let Some(recipe_text) = recipe_text else {
        return status_from_decisions(&[], &[], &inventory);
    };
    let lines = observe::parse_recipe(recipe_text);
    let decisions = oracle_decisions(world, state, &lines);
    status_from_decisions(&lines, &decisions, &inventory)
}

pub const TAKE_ALL: &str = "take all required ingredients from here";
pub const DROP_UNNECESSARY: &str = "drop unnecessary items";

/// Grouped take/drop commands plus direct action commands.
pub fn build_recipe_commands(status: &RecipeStatus, description: &str, inventory_text: &str) -> Vec<Candidate> {
    let mut out = Vec::new();
    let here = observe::floor_items(description);
    let takes: Vec<String> =
        status.missing().into_iter().filter(|m| here.contains(m)).map(|m| format!("take {m}")).collect();
    if !takes.is_empty() {
        out.push(Candidate::grouped(TAKE_ALL, takes, Provenance::Recipe));
    }
    if !status.unnecessary.is_empty() {
        let drops = status.unnecessary.iter().map(|u| format!("drop {u}")).collect();
        out.push(Candidate::grouped(DROP_UNNECESSARY, drops, Provenance::Recipe));
    }
    let held = observe::inventory_items(inventory_text);
    let utilities = observe::utilities(description);
    for g in &status.ingredients {
        if !held.contains(&g.name) {
            continue;
        }
        for a in &g.pending {
            if utilities.contains(&a.utility()) {
                out.push(Candidate::single(a.command(&g.name), Provenance::Recipe));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecipeMetrics {
    pub loss: f32,
    /// Both heads correct.
    pub accuracy: f32,
    pub needed_accuracy: f32,
    pub collect_accuracy: f32,
    /// Joint accuracy on samples whose ingredient never occurs in games.
    pub unseen_accuracy: f32,
    pub unseen_count: usize,
}

pub fn evaluate_recipe_model(model: &RecipeModel, samples: &[RecipeSample]) -> RecipeMetrics {
    let mut loss = 0.0f64;
    let (mut both, mut need, mut coll, mut unseen_ok, mut unseen_n) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for chunk in samples.chunks(64) {
        let refs: Vec<&RecipeSample> = chunk.iter().collect();
        let mut g = Graph::new(&model.store);
        let lines: Vec<String> = refs.iter().map(|s| s.direction.clone()).collect();
        let invs: Vec<&str> = refs.iter().map(|s| s.inventory.as_str()).collect();
        let logits = model.logits(&mut g, &lines, &invs);
        let targets: Vec<f32> = refs.iter().flat_map(|s| [s.needed as f32, s.collect as f32]).collect();
        let l = g.bce_with_logits(logits, &targets);
        loss += g.value(l).item() as f64 * chunk.len() as f64;
        for (s, c) in chunk.iter().zip(g.value(logits).data().chunks(2)) {
            let n_ok = (sigmoid(c[0]) >= THRESHOLD) == (s.needed == 1);
            let c_ok = (sigmoid(c[1]) >= THRESHOLD) == (s.collect == 1);
            need += n_ok as usize;
            coll += c_ok as usize;
            both += (n_ok && c_ok) as usize;
            if s.unseen {
                unseen_n += 1;
                unseen_ok += (n_ok && c_ok) as usize;
            }
        }
    }
    let n = samples.len().max(1) as f32;
    RecipeMetrics {
        loss: (loss / samples.len().max(1) as f64) as f32,
        accuracy: both as f32 / n,
        needed_accuracy: need as f32 / n,
        collect_accuracy: coll as f32 / n,
        unseen_accuracy: if unseen_n == 0 { f32::NAN } else { unseen_ok as f32 / unseen_n as f32 },
        unseen_count: unseen_n,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupervisedConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f32,
    pub clip: f32,
}

impl Default for SupervisedConfig {
    fn default() -> Self {
        SupervisedConfig { epochs: 12, batch_size: 32, lr: 2e-3, clip: 5.0 }
    }
}

/// Minibatch Adam training. Calls `on_epoch(epoch, train_loss, valid_metrics)`.
pub fn train_recipe_model<R: Rng>(
    model: &mut RecipeModel,
    train: &[RecipeSample],
    valid: &[RecipeSample],
    config: &SupervisedConfig,
    rng: &mut R,
    mut on_epoch: impl FnMut(usize, f32, &RecipeMetrics),
) -> Result<RecipeMetrics, NnError> {
    let mut adam = AdamState::new(&model.store, config.lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut last = evaluate_recipe_model(model, valid);
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut total = 0.0f64;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&RecipeSample> = chunk.iter().map(|&i| &train[i]).collect();
            let mut grads = {
                let mut g = Graph::new(&model.store);
                let loss = model.batch_loss(&mut g, &batch);
                let value = g.value(loss).item();
                if !value.is_finite() {
                    return Err(NnError::NonFinite(format!("recipe loss at epoch {epoch}")));
                }
                total += value as f64 * chunk.len() as f64;
                g.backward(loss)?
            };
            grads.clip_norm(config.clip);
            adam.step(&mut model.store, &grads);
        }
        last = evaluate_recipe_model(model, valid);
        on_epoch(epoch, (total / train.len().max(1) as f64) as f32, &last);
    }
    Ok(last)
}
