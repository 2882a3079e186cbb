//! Candidate command assembly from helper outputs and fixed rules.

use crate::engine::{apply_command, Command, Feedback, GameState, World};
use crate::navigator::{self, NavModel, NavOutput};
use crate::observe;
use crate::recipe::{self, RecipeModel, RecipeStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    Recipe,
    Nav,
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub text: String,
    /// Engine commands executed in order when chosen.
    pub expansion: Vec<String>,
    pub provenance: Provenance,
}

impl Candidate {
    pub fn single(text: impl Into<String>, provenance: Provenance) -> Self {
        let text = text.into();
        Candidate { expansion: vec![text.clone()], text, provenance }
    }

    pub fn grouped(text: impl Into<String>, expansion: Vec<String>, provenance: Provenance) -> Self {
        Candidate { text: text.into(), expansion, provenance }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.text.as_str()).collect()
    }

    pub fn position(&self, text: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c.text == text)
    }

    /// Index of the candidate whose text or expansion contains `command`.
    pub fn covering(&self, command: &str) -> Option<usize> {
        self.position(command).or_else(|| self.candidates.iter().position(|c| c.expansion.iter().any(|e| e == command)))
    }
}

/// Fixed commands: look/inventory unless just performed, prepare, eat,
/// examine cookbook.
pub fn fixed_commands(description: &str, inventory_text: &str, status: &RecipeStatus, last: Option<&str>) -> Vec<Candidate> {
    let mut out = Vec::new();
    for c in ["look", "inventory"] {
        if last != Some(c) {
            out.push(Candidate::single(c, Provenance::Fixed));
        }
    }
    let held = observe::inventory_items(inventory_text);
    let has_meal = held.iter().any(|h| h == "meal");
    if status.complete() && !has_meal && observe::room_name(description).as_deref() == Some("kitchen") {
        out.push(Candidate::single("prepare meal", Provenance::Fixed));
    }
    if has_meal {
        out.push(Candidate::single("eat meal", Provenance::Fixed));
    }
    if observe::mentions_cookbook(description) {
        out.push(Candidate::single("examine cookbook", Provenance::Fixed));
    }
    out
}

/// Union of recipe, navigation and fixed commands, ordered by provenance
/// then text, without duplicates. Never empty.
pub fn assemble_candidates(
    description: &str,
    inventory_text: &str,
    status: &RecipeStatus,
    nav: &NavOutput,
    last: Option<&str>,
) -> CandidateSet {
    let mut all = recipe::build_recipe_commands(status, description, inventory_text);
    all.extend(navigator::build_nav_commands(nav));
    all.extend(fixed_commands(description, inventory_text, status, last));
    all.sort_by(|a, b| (a.provenance, &a.text).cmp(&(b.provenance, &b.text)));
    all.dedup_by(|a, b| a.text == b.text);
    if all.is_empty() {
        all.push(Candidate::single("look", Provenance::Fixed));
    }
    debug_assert!(all.iter().all(|c| c.expansion.iter().all(|e| Command::parse(e).is_some())));
    CandidateSet { candidates: all }
}

/// Runs a candidate's expansion through the engine, summing rewards and
/// stopping at a terminal state.
pub fn execute_choice(world: &World, state: &GameState, candidate: &Candidate) -> (GameState, Feedback) {
    let mut s = state.clone();
    let mut texts = Vec::with_capacity(candidate.expansion.len());
    let mut reward = 0;
    let mut done = s.is_over();
    for cmd in &candidate.expansion {
        if done {
            break;
        }
        let (next, fb) = apply_command(world, &s, cmd);
        s = next;
        texts.push(fb.text);
        reward += fb.reward;
        done = fb.done;
    }
    (s, Feedback { text: texts.join("\n"), reward, done })
}

/// Source of recipe and navigation facts: ground truth or trained models.
#[derive(Clone, Copy, Debug)]
pub enum Helpers<'m> {
    Oracle,
    Learned { recipe: &'m RecipeModel, nav: &'m NavModel },
}

impl Helpers<'_> {
    pub fn recipe_status(&self, world: &World, state: &GameState, recipe_text: Option<&str>, inventory_text: &str) -> RecipeStatus {
        match self {
            Helpers::Oracle => recipe::oracle_status(world, state, recipe_text),
            Helpers::Learned { recipe: model, .. } => recipe::recipe_status(recipe_text, inventory_text, model),
        }
    }

    pub fn nav(&self, world: &World, state: &GameState, description: &str) -> NavOutput {
        match self {
            Helpers::Oracle => navigator::oracle_nav(world, state),
            Helpers::Learned { nav, .. } => navigator::predict(description, nav),
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self, Helpers::Oracle)
    }
}
