//! Per-episode bookkeeping shared by the agent, the trainer and the
//! evaluation policies: recipe memory, command history, visited rooms and
//! the context features built from them.

use std::collections::VecDeque;

use crate::commands::{assemble_candidates, execute_choice, Candidate, CandidateSet, Helpers};
use crate::engine::{self, text, Feedback, GameState, World};
use crate::observe;
use crate::recipe::RecipeStatus;

pub const HISTORY: usize = 10;
pub const FEATURES: usize = 8;
pub const FEATURE_NAMES: [&str; FEATURES] = [
    "observation",
    "missing items",
    "unnecessary items",
    "description",
    "previous commands",
    "required utilities",
    "discovered locations",
    "location",
];

/// The eight context texts fed to the agent, in [`FEATURE_NAMES`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextFeatures {
    pub texts: [String; FEATURES],
}

/// Everything a policy sees before choosing.
#[derive(Clone, Debug)]
pub struct StepView {
    pub features: ContextFeatures,
    pub candidates: CandidateSet,
    pub status: RecipeStatus,
}

fn list_or_nothing<S: AsRef<str>>(items: impl IntoIterator<Item = S>) -> String {
    let parts: Vec<String> = items.into_iter().map(|s| s.as_ref().to_string()).collect();
    if parts.is_empty() {
        "nothing".to_string()
    } else {
        parts.join(" , ")
    }
}

#[derive(Clone, Debug)]
pub struct Episode<'w> {
    pub world: &'w World,
    pub state: GameState,
    observation: String,
    recipe_text: Option<String>,
    history: VecDeque<String>,
    visited: Vec<String>,
    /// Agent-level decisions taken.
    pub decisions: usize,
}

impl<'w> Episode<'w> {
    pub fn new(world: &'w World) -> Self {
        let state = GameState::initial(world);
        let observation = engine::render_observation(world, &state, None);
        let mut ep = Episode {
            world,
            state,
            observation,
            recipe_text: None,
            history: VecDeque::with_capacity(HISTORY),
            visited: Vec::new(),
            decisions: 0,
        };
        ep.visit();
        ep
    }

    fn visit(&mut self) {
        let name = self.world.rooms[self.state.room].name.clone();
        if !self.visited.contains(&name) {
            self.visited.push(name);
        }
    }

    pub fn is_over(&self) -> bool {
        self.state.is_over()
    }

    pub fn description(&self) -> String {
        text::describe_room(self.world, &self.state)
    }

    pub fn inventory_text(&self) -> String {
        text::inventory_text(self.world, &self.state)
    }

    pub fn recipe_text(&self) -> Option<&str> {
        self.recipe_text.as_deref()
    }

    pub fn last_command(&self) -> Option<&str> {
        self.history.back().map(String::as_str)
    }

    /// Current features and candidate commands.
    pub fn view(&self, helpers: &Helpers) -> StepView {
        let description = self.description();
        let inventory = self.inventory_text();
        let status = helpers.recipe_status(self.world, &self.state, self.recipe_text(), &inventory);
        let nav = helpers.nav(self.world, &self.state, &description);
        let candidates = assemble_candidates(&description, &inventory, &status, &nav, self.last_command());
        let location = observe::room_name(&description).unwrap_or_default();
        let features = ContextFeatures {
            texts: [
                self.observation.clone(),
                status.missing_text(),
                status.unnecessary_text(),
                description,
                list_or_nothing(self.history.iter()),
                status.utilities_text(),
                list_or_nothing(self.visited.iter()),
                location,
            ],
        };
        StepView { features, candidates, status }
    }

    /// Executes a chosen candidate and updates the episode memory.
    pub fn step(&mut self, candidate: &Candidate) -> Feedback {
        let (next, fb) = execute_choice(self.world, &self.state, candidate);
        self.state = next;
        self.decisions += 1;
        if candidate.expansion.iter().any(|c| c == "examine cookbook") {
            if let Some(start) = fb.text.find("Ingredients:") {
                let recipe = &fb.text[start..];
                let end = recipe.find(" *** ").unwrap_or(recipe.len());
                self.recipe_text = Some(recipe[..end].to_string());
            }
        }
        if self.history.len() == HISTORY {
            self.history.pop_front();
        }
        self.history.push_back(candidate.text.clone());
        self.observation = fb.text.clone();
        self.visit();
        fb
    }

    pub fn normalized_score(&self) -> f64 {
        normalized(self.state.score, self.world.max_score())
    }
}

/// Score as a percentage of the maximum, clamped to `[0, 100]`.
pub fn normalized(score: u32, max_score: u32) -> f64 {
    if max_score == 0 {
        return 0.0;
    }
    (100.0 * score as f64 / max_score as f64).clamp(0.0, 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::fixtures::three_rooms;

    fn choose(ep: &mut Episode, view: &StepView, text: &str) -> Feedback {
        let i = view.candidates.covering(text).unwrap_or_else(|| panic!("{text} not offered: {:?}", view.candidates.texts()));
        let c = view.candidates.candidates[i].clone();
        ep.step(&c)
    }

    #[test]
    fn oracle_episode_follows_walkthrough() {
        let w = three_rooms();
        let mut ep = Episode::new(&w);
        let helpers = Helpers::Oracle;
        for cmd in engine::walkthrough(&w).unwrap() {
            if ep.is_over() {
                break;
            }
            let view = ep.view(&helpers);
            assert!(view.candidates.len() <= 16);
            let before = ep.state.clone();
            choose(&mut ep, &view, &cmd);
            assert!(ep.state.steps > before.steps);
        }
        assert_eq!(ep.state.score, w.max_score());
        assert_eq!(ep.normalized_score(), 100.0);
    }

    #[test]
    fn features_track_memory() {
        let w = three_rooms();
        let mut ep = Episode::new(&w);
        let helpers = Helpers::Oracle;
        let v = ep.view(&helpers);
        assert_eq!(v.features.texts[4], "nothing");
        assert_eq!(v.features.texts[7], "pantry");
        assert!(v.features.texts[0].contains("-= Pantry =-"));
        choose(&mut ep, &v, "go south");
        let v = ep.view(&helpers);
        assert_eq!(v.features.texts[6], "pantry , kitchen");
        assert_eq!(v.features.texts[4], "go south");
        choose(&mut ep, &v, "examine cookbook");
        assert!(ep.recipe_text().unwrap().starts_with("Ingredients:"));
        let v = ep.view(&helpers);
        assert_ne!(v.features.texts[1], "nothing");
        assert_eq!(normalized(5, 4), 100.0);
    }

    #[test]
    fn history_is_bounded() {
        let w = three_rooms();
        let mut ep = Episode::new(&w);
        let look = Candidate::single("look", crate::commands::Provenance::Fixed);
        for _ in 0..15 {
            ep.step(&look);
        }
        assert_eq!(ep.history.len(), HISTORY);
    }
}
