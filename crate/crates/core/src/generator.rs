//! Procedural worlds and supervised datasets for the helper models.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{
    self, text, Action, Cut, Direction, Door, Exit, GameState, Heat, Ingredient, Item, Location, Recipe,
    RecipeDirection, Room, Utility, World,
};
use crate::lexicon::{tokenize, FoodLexicon, Vocab};

const ROOM_NAMES: [&str; 18] = [
    "pantry",
    "living room",
    "bedroom",
    "bathroom",
    "corridor",
    "garden",
    "shed",
    "driveway",
    "street",
    "supermarket",
    "laundry room",
    "study",
    "cellar",
    "attic",
    "porch",
    "garage",
    "dining room",
    "hallway",
];

const DOOR_ADJECTIVES: [&str; 20] = [
    "sliding", "wooden", "screen", "glass", "iron", "oak", "red", "white", "frosted", "metal", "plain", "barn",
    "patio", "front", "back", "rectangular", "sturdy", "heavy", "green", "fiberglass",
];
const DOOR_NOUNS: [&str; 4] = ["door", "gate", "hatch", "portal"];

pub const DISTRACTORS: [&str; 16] = [
    "You hear a noise behind you and spin around, but you can't see anything.",
    "A gentle breeze drifts in from the north.",
    "Somewhere to the west, a dog barks.",
    "You smell something delicious coming from the south.",
    "The light from the east window flickers.",
    "You notice a faint smell of rain.",
    "A picture of an old wooden door hangs on the wall.",
    "The floorboards creak under your feet.",
    "A clock ticks quietly in the distance.",
    "You feel a draft coming from somewhere to the east.",
    "Dust dances in a beam of sunlight.",
    "It's an ordinary room, nothing special about it.",
    "You wonder what is behind the next door.",
    "The sound of traffic drifts in from the north side of the house.",
    "A cat watches you from a shelf, then wanders off.",
    "You remember a time when this place was busier.",
];

/// Dataset split; each split draws world seeds from a disjoint range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    const STRIDE: u64 = 1 << 40;

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "valid" => Some(Split::Valid),
            "test" => Some(Split::Test),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    /// World seed of game `index` in this split.
    pub fn seed(self, index: u64) -> u64 {
        let k = match self {
            Split::Train => 0,
            Split::Valid => 1,
            Split::Test => 2,
        };
        k * Self::STRIDE + (index % Self::STRIDE)
    }

    pub fn of_seed(seed: u64) -> Option<Self> {
        match seed / Self::STRIDE {
            0 => Some(Split::Train),
            1 => Some(Split::Valid),
            2 => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub rooms: (usize, usize),
    pub ingredients: (usize, usize),
    pub directions_per_ingredient: (usize, usize),
    pub max_directions: usize,
    pub max_exits: usize,
    pub door_prob: f32,
    pub closed_prob: f32,
    pub extra_edge_prob: f32,
    pub distractor_density: f32,
    pub distractor_items: (usize, usize),
    pub preprocess_prob: f32,
    pub capacity: usize,
    pub failure_penalty: i32,
    pub split: Split,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            rooms: (4, 8),
            ingredients: (2, 4),
            directions_per_ingredient: (0, 2),
            max_directions: 5,
            max_exits: 3,
            door_prob: 0.3,
            closed_prob: 0.8,
            extra_edge_prob: 0.2,
            distractor_density: 0.5,
            distractor_items: (1, 4),
            preprocess_prob: 0.2,
            capacity: engine::DEFAULT_CAPACITY,
            failure_penalty: -1,
            split: Split::Train,
        }
    }
}

fn parse_range(v: &str) -> Result<(usize, usize), String> {
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
    match v.split_once(&['-', ','][..]) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let x = parse(v)?;
            Ok((x, x))
        }
    }
}

fn parse_prob(v: &str) -> Result<f32, String> {
    v.trim().parse::<f32>().map_err(|e| format!("{v:?}: {e}"))
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, (lo, hi)) in [
            ("rooms", self.rooms),
            ("ingredients", self.ingredients),
            ("directions_per_ingredient", self.directions_per_ingredient),
            ("distractor_items", self.distractor_items),
        ] {
            if lo > hi {
                return Err(format!("{name}: empty range {lo}-{hi}"));
            }
        }
        if self.rooms.0 == 0 || self.ingredients.0 == 0 {
            return Err("at least one room and one ingredient are required".into());
        }
        if self.directions_per_ingredient.1 > 2 {
            return Err("an ingredient takes at most 2 directions".into());
        }
        if self.ingredients.1 > self.capacity {
            return Err("more ingredients than inventory capacity".into());
        }
        if !(1..=4).contains(&self.max_exits) && self.rooms.1 > 1 {
            return Err("max_exits must be in 1..=4".into());
        }
        for (name, p) in [
            ("door_prob", self.door_prob),
            ("closed_prob", self.closed_prob),
            ("extra_edge_prob", self.extra_edge_prob),
            ("distractor_density", self.distractor_density),
            ("preprocess_prob", self.preprocess_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    /// Sets one field from a `key=value` pair. Returns `Ok(false)` for
    /// unknown keys.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool, String> {
        match key {
            "rooms" => self.rooms = parse_range(value)?,
            "ingredients" => self.ingredients = parse_range(value)?,
            "directions_per_ingredient" => self.directions_per_ingredient = parse_range(value)?,
            "distractor_items" => self.distractor_items = parse_range(value)?,
            "max_directions" => self.max_directions = value.trim().parse().map_err(|e| format!("{e}"))?,
            "max_exits" => self.max_exits = value.trim().parse().map_err(|e| format!("{e}"))?,
            "capacity" => self.capacity = value.trim().parse().map_err(|e| format!("{e}"))?,
            "failure_penalty" => self.failure_penalty = value.trim().parse().map_err(|e| format!("{e}"))?,
            "door_prob" => self.door_prob = parse_prob(value)?,
            "closed_prob" => self.closed_prob = parse_prob(value)?,
            "extra_edge_prob" => self.extra_edge_prob = parse_prob(value)?,
            "distractor_density" => self.distractor_density = parse_prob(value)?,
            "preprocess_prob" => self.preprocess_prob = parse_prob(value)?,
            "split" => self.split = Split::parse(value.trim()).ok_or_else(|| format!("unknown split {value:?}"))?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

fn mix(a: u64, b: u64) -> u64 {
    let mut x = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// True when one name's tokens appear contiguously inside the other's.
pub fn names_overlap(a: &str, b: &str) -> bool {
    let ta: Vec<&str> = a.split_whitespace().collect();
    let tb: Vec<&str> = b.split_whitespace().collect();
    let contains = |long: &[&str], short: &[&str]| long.windows(short.len()).any(|w| w == short);
    if ta.len() <= tb.len() {
        contains(&tb, &ta)
    } else {
        contains(&ta, &tb)
    }
}

/// Draws up to `n` names from `pool` that do not overlap each other or `taken`.
fn draw_names<R: Rng>(rng: &mut R, pool: &[String], n: usize, taken: &mut Vec<String>) -> Vec<String> {
    let mut order: Vec<&String> = pool.iter().collect();
    order.shuffle(rng);
    let mut out = Vec::with_capacity(n);
    for name in order {
        if out.len() == n {
            break;
        }
        if taken.iter().all(|t| !names_overlap(t, name)) {
            taken.push(name.clone());
            out.push(name.clone());
        }
    }
    out
}

pub fn door_name<R: Rng>(rng: &mut R) -> String {
    let noun = DOOR_NOUNS[rng.gen_range(0..DOOR_NOUNS.len())];
    let words = rng.gen_range(1..=3usize);
    let mut adjs: Vec<&str> = DOOR_ADJECTIVES.choose_multiple(rng, words - 1).copied().collect();
    adjs.push(noun);
    adjs.join(" ")
}

fn pick_range<R: Rng>(rng: &mut R, (lo, hi): (usize, usize)) -> usize {
    rng.gen_range(lo..=hi)
}

/// Generates one world for `seed`. Retries internally until the world is
/// well-formed and its walkthrough wins within the step limit.
pub fn generate_world(seed: u64, config: &GenConfig, lexicon: &FoodLexicon) -> World {
    config.validate().expect("invalid generator config");
    for attempt in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, attempt));
        let world = build_world(&mut rng, seed, config, lexicon);
        if world.validate().is_err() {
            continue;
        }
        if let Ok(plan) = engine::walkthrough(&world) {
            if plan.len() < engine::STEP_LIMIT as usize {
                return world;
            }
        }
    }
    panic!("no valid world for seed {seed} after 1000 attempts");
}

fn build_world<R: Rng>(rng: &mut R, seed: u64, config: &GenConfig, lexicon: &FoodLexicon) -> World {
    let n_rooms = pick_range(rng, config.rooms);

    // Grid layout: grow a tree from the kitchen, then add a few loops.
    let mut cells: Vec<(i32, i32)> = vec![(0, 0)];
    let mut at: BTreeMap<(i32, i32), usize> = BTreeMap::from([((0, 0), 0)]);
    let mut edges: Vec<(usize, Direction, usize)> = Vec::new();
    let mut degree = vec![0usize; 1];
    let mut guard = 0;
    while cells.len() < n_rooms && guard < 10_000 {
        guard += 1;
        let r = rng.gen_range(0..cells.len());
        if degree[r] >= config.max_exits {
            continue;
        }
        let d = Direction::ALL[rng.gen_range(0..4)];
        let (dx, dy) = d.delta();
        let cell = (cells[r].0 + dx, cells[r].1 + dy);
        if at.contains_key(&cell) {
            continue;
        }
        let id = cells.len();
        cells.push(cell);
        at.insert(cell, id);
        degree.push(1);
        degree[r] += 1;
        edges.push((r, d, id));
    }
    for a in 0..cells.len() {
        for d in [Direction::East, Direction::South] {
            let (dx, dy) = d.delta();
            let Some(&b) = at.get(&(cells[a].0 + dx, cells[a].1 + dy)) else { continue };
            let linked = edges.iter().any(|&(x, _, y)| (x == a && y == b) || (x == b && y == a));
            if !linked
                && degree[a] < config.max_exits
                && degree[b] < config.max_exits
                && rng.gen::<f32>() < config.extra_edge_prob
            {
                degree[a] += 1;
                degree[b] += 1;
                edges.push((a, d, b));
            }
        }
    }
    let n_rooms = cells.len();

    let mut names = vec!["kitchen".to_string()];
    if n_rooms >= 2 {
        names.push("backyard".to_string());
    }
    let mut others: Vec<&str> = ROOM_NAMES.to_vec();
    others.shuffle(rng);
    names.extend(others.into_iter().take(n_rooms - names.len()).map(String::from));
    // Room 0 is always the kitchen; shuffle the remaining names over cells.
    names[1..].shuffle(rng);

    let mut rooms: Vec<Room> = names
        .iter()
        .map(|name| {
            let k = rng.gen_range(0..=3usize);
            let distractors = DISTRACTORS.choose_multiple(rng, k).map(|s| s.to_string()).collect();
            Room { name: name.clone(), exits: [None, None, None, None], utilities: Vec::new(), distractors }
        })
        .collect();
    rooms[0].utilities = vec![Utility::Knife, Utility::Stove, Utility::Oven];
    match rooms.iter().position(|r| r.name == "backyard") {
        Some(b) => rooms[b].utilities.push(Utility::Bbq),
        None => rooms[0].utilities.push(Utility::Bbq),
    }

    let mut doors: Vec<Door> = Vec::new();
    let mut door_names: HashSet<String> = HashSet::new();
    for &(a, d, b) in &edges {
        let door = if rng.gen::<f32>() < config.door_prob {
            let mut name = door_name(rng);
            while door_names.contains(&name) {
                name = door_name(rng);
            }
            door_names.insert(name.clone());
            doors.push(Door { name, open: rng.gen::<f32>() >= config.closed_prob });
            Some(doors.len() - 1)
        } else {
            None
        };
        rooms[a].exits[d.index()] = Some(Exit { to: b, door });
        rooms[b].exits[d.opposite().index()] = Some(Exit { to: a, door });
    }

    // Recipe.
    let n_ing = pick_range(rng, config.ingredients);
    let mut taken: Vec<String> = Vec::new();
    let ing_names = draw_names(rng, lexicon.game_pool(), n_ing, &mut taken);
    let n_extra = pick_range(rng, config.distractor_items);
    let extra_names = draw_names(rng, lexicon.game_pool(), n_extra, &mut taken);

    let mut items: Vec<Item> = Vec::new();
    let mut ingredients: Vec<Ingredient> = Vec::new();
    let mut directions: Vec<RecipeDirection> = Vec::new();
    for (gi, name) in ing_names.iter().enumerate() {
        let remaining = config.max_directions.saturating_sub(directions.len());
        let k = pick_range(rng, config.directions_per_ingredient).min(remaining);
        let (cut, heat) = match k {
            0 => (None, None),
            1 if rng.gen_bool(0.5) => (Some(*Cut::ALL.choose(rng).unwrap()), None),
            1 => (None, Some(*Heat::ALL.choose(rng).unwrap())),
            _ => (Some(*Cut::ALL.choose(rng).unwrap()), Some(*Heat::ALL.choose(rng).unwrap())),
        };
        if let Some(c) = cut {
            directions.push(RecipeDirection { ingredient: gi, action: Action::Cut(c) });
        }
        if let Some(h) = heat {
            directions.push(RecipeDirection { ingredient: gi, action: Action::Heat(h) });
        }
        let pre_cut = cut.filter(|_| rng.gen::<f32>() < config.preprocess_prob);
        let pre_heat = heat.filter(|_| rng.gen::<f32>() < config.preprocess_prob);
        let room = rng.gen_range(0..n_rooms);
        items.push(Item { name: name.clone(), cut: pre_cut, heat: pre_heat, location: Location::Room(room) });
        ingredients.push(Ingredient { name: name.clone(), item: items.len() - 1, cut, heat });
    }
    let junk = match rng.gen::<f32>() {
        x if x < 0.6 => 0,
        x if x < 0.9 => 1,
        _ => 2,
    };
    for (k, name) in extra_names.iter().enumerate() {
        let cut = (rng.gen::<f32>() < 0.3).then(|| *Cut::ALL.choose(rng).unwrap());
        let heat = (rng.gen::<f32>() < 0.3).then(|| *Heat::ALL.choose(rng).unwrap());
        let location = if k < junk { Location::Inventory } else { Location::Room(rng.gen_range(0..n_rooms)) };
        items.push(Item { name: name.clone(), cut, heat, location });
    }

    World {
        seed,
        rooms,
        doors,
        items,
        kitchen: 0,
        cookbook_room: 0,
        start_room: rng.gen_range(0..n_rooms),
        recipe: Recipe { ingredients, directions },
        capacity: config.capacity,
        failure_penalty: config.failure_penalty,
        distractor_density: config.distractor_density,
    }
}

/// One recipe line paired with an inventory, labelled from game semantics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeSample {
    /// A direction ("fry the carrot") or a bare ingredient line ("carrot").
    pub direction: String,
    pub inventory: String,
    pub needed: u8,
    pub collect: u8,
    /// Ingredient comes from the augmentation-only part of the lexicon.
    pub unseen: bool,
}

/// Labels for a recipe line given the held state of its ingredient.
///
/// `held` is the ingredient's `(cut, heat)` when it is in the inventory.
/// An ingredient line (`action == None`) is needed exactly when not held.
pub fn line_labels(held: Option<(Option<Cut>, Option<Heat>)>, action: Option<Action>) -> (bool, bool) {
    let collect = held.is_none();
    let needed = match (held, action) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some((cut, _)), Some(Action::Cut(_))) => cut.is_none(),
        (Some((_, heat)), Some(Action::Heat(_))) => heat.is_none(),
    };
    (needed, collect)
}

/// Synthetic recipes and inventories; half of the ingredients come from
/// foods that never appear in generated games.
pub fn generate_recipe_dataset(seed: u64, n: usize, lexicon: &FoodLexicon) -> Vec<RecipeSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0x5eed_0001));
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let k = rng.gen_range(1..=5usize);
        let mut taken = Vec::new();
        let mut names = Vec::new();
        for _ in 0..k {
            let pool = if rng.gen_bool(0.5) { lexicon.augmentation_pool() } else { lexicon.game_pool() };
            names.extend(draw_names(&mut rng, pool, 1, &mut taken));
        }
        let extra = rng.gen_range(0..=3usize);
        let mut extras = Vec::new();
        for _ in 0..extra {
            let pool = if rng.gen_bool(0.5) { lexicon.augmentation_pool() } else { lexicon.game_pool() };
            extras.extend(draw_names(&mut rng, pool, 1, &mut taken));
        }

        let mut lines: Vec<(usize, Option<Action>)> = Vec::new();
        let mut held_state: Vec<Option<(Option<Cut>, Option<Heat>)>> = Vec::new();
        for (gi, _) in names.iter().enumerate() {
            lines.push((gi, None));
            let cut = rng.gen_bool(0.6).then(|| *Cut::ALL.choose(&mut rng).unwrap());
            let heat = rng.gen_bool(0.6).then(|| *Heat::ALL.choose(&mut rng).unwrap());
            if let Some(c) = cut {
                lines.push((gi, Some(Action::Cut(c))));
            }
            if let Some(h) = heat {
                lines.push((gi, Some(Action::Heat(h))));
            }
            let held = rng.gen_bool(0.6).then(|| {
                let done = |rng: &mut ChaCha8Rng| rng.gen_bool(0.6);
                let hc = match cut {
                    Some(c) if done(&mut rng) => Some(c),
                    Some(_) => None,
                    None => rng.gen_bool(0.15).then(|| *Cut::ALL.choose(&mut rng).unwrap()),
                };
                let hh = match heat {
                    Some(h) if done(&mut rng) => Some(h),
                    Some(_) => None,
                    None => rng.gen_bool(0.15).then(|| *Heat::ALL.choose(&mut rng).unwrap()),
                };
                (hc, hh)
            });
            held_state.push(held);
        }

        let mut phrases: Vec<String> = Vec::new();
        for (gi, name) in names.iter().enumerate() {
            if let Some((c, h)) = held_state[gi] {
                phrases.push(text::item_phrase(name, c, h));
            }
        }
        for name in &extras {
            let c = rng.gen_bool(0.3).then(|| *Cut::ALL.choose(&mut rng).unwrap());
            let h = rng.gen_bool(0.3).then(|| *Heat::ALL.choose(&mut rng).unwrap());
            phrases.push(text::item_phrase(name, c, h));
        }
        phrases.shuffle(&mut rng);
        let inventory = text::format_inventory(&phrases);

        for (gi, action) in lines {
            if out.len() == n {
                break;
            }
            let name = &names[gi];
            let direction = match action {
                None => name.clone(),
                Some(a) => format!("{} the {name}", a.verb()),
            };
            let (needed, collect) = line_labels(held_state[gi], action);
            out.push(RecipeSample {
                direction,
                inventory: inventory.clone(),
                needed: needed as u8,
                collect: collect as u8,
                unseen: !lexicon.is_game_food(name),
            });
        }
    }
    out
}

/// A rendered room description with exit and closed-door labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavSample {
    pub description: String,
    /// North, east, south, west.
    pub exits: [bool; 4],
    pub tokens: Vec<String>,
    /// 1 for tokens belonging to the name of a closed door.
    pub door_labels: Vec<u8>,
}

/// Per-token labels marking closed-door names inside `tokens`.
pub fn closed_door_labels(tokens: &[String], closed_doors: &[&str]) -> Vec<u8> {
    let mut labels = vec![0u8; tokens.len()];
    for name in closed_doors {
        let name_toks = tokenize(name);
        let width = name_toks.len() + 2;
        if tokens.len() < width {
            continue;
        }
        for i in 0..=tokens.len() - width {
            if tokens[i] == "closed"
                && tokens[i + 1..i + 1 + name_toks.len()] == name_toks[..]
                && tokens[i + width - 1] == "leading"
            {
                labels[i + 1..i + 1 + name_toks.len()].iter_mut().for_each(|l| *l = 1);
            }
        }
    }
    labels
}

/// Labels for the current room of `state`.
pub fn nav_sample(world: &World, state: &GameState) -> NavSample {
    let description = text::describe_room(world, state);
    let room = &world.rooms[state.room];
    let exits = Direction::ALL.map(|d| room.exit(d).is_some());
    let closed: Vec<&str> = Direction::ALL
        .iter()
        .filter_map(|d| room.exit(*d).and_then(|e| e.door))
        .filter(|door| !state.doors_open[*door])
        .map(|door| world.doors[door].name.as_str())
        .collect();
    let tokens = tokenize(&description);
    let door_labels = closed_door_labels(&tokens, &closed);
    NavSample { description, exits, tokens, door_labels }
}

/// Descriptions of random rooms in generated worlds with doors forced to
/// appear often, in random open/closed states.
pub fn generate_nav_dataset(seed: u64, n: usize, lexicon: &FoodLexicon) -> Vec<NavSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0x5eed_0002));
    let config = GenConfig { door_prob: 0.6, rooms: (1, 8), ..GenConfig::default() };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let world = generate_world(rng.gen(), &config, lexicon);
        for _ in 0..4 {
            if out.len() == n {
                break;
            }
            let mut state = GameState::initial(&world);
            state.room = rng.gen_range(0..world.rooms.len());
            state.steps = rng.gen_range(0..engine::STEP_LIMIT);
            for open in state.doors_open.iter_mut() {
                *open = rng.gen_bool(0.5);
            }
            out.push(nav_sample(&world, &state));
        }
    }
    out
}

/// Vocabulary over everything the engine and helpers can produce: the food
/// lexicon, fixed word lists, and text from a few played-through worlds.
pub fn build_vocab(lexicon: &FoodLexicon) -> Vocab {
    let mut corpus: Vec<String> = Vec::new();
    corpus.extend(lexicon.game_pool().iter().cloned());
    corpus.extend(lexicon.augmentation_pool().iter().cloned());
    corpus.extend(ROOM_NAMES.iter().map(|s| s.to_string()));
    corpus.extend(DOOR_ADJECTIVES.iter().chain(DOOR_NOUNS.iter()).map(|s| s.to_string()));
    corpus.extend(DISTRACTORS.iter().map(|s| s.to_string()));
    corpus.extend(EXTRA_WORDS.iter().map(|s| s.to_string()));
    let config = GenConfig { door_prob: 0.5, ..GenConfig::default() };
    for seed in 0..8u64 {
        let world = generate_world(seed, &config, lexicon);
        let mut state = GameState::initial(&world);
        corpus.push(engine::render_observation(&world, &state, None));
        for cmd in engine::walkthrough(&world).expect("generated worlds are winnable") {
            corpus.extend(engine::admissible_commands(&world, &state));
            let (next, fb) = engine::apply_command(&world, &state, &cmd);
            corpus.push(fb.text);
            corpus.push(text::inventory_text(&world, &next));
            state = next;
        }
    }
    Vocab::build(corpus.iter().map(String::as_str))
}

const EXTRA_WORDS: [&str; 8] = [
    "take all required ingredients from here",
    "drop unnecessary items",
    "nothing north east south west",
    "sliced diced chopped fried roasted grilled slice dice chop fry roast grill cook",
    "knife stove oven bbq with kitchen backyard meal cookbook",
    "You can't see any such thing. I don't understand that. You can't go that way. That is already open.",
    "You have to open the first. You are carrying too many things already. You already have that. That's fixed in place.",
    "You need to be in the kitchen to prepare a meal. You need to read the recipe first. You don't have everything the recipe calls for. burns to a crisp! You lost! You ran out of time!",
];

pub fn to_jsonl<T: Serialize>(samples: &[T]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s).expect("sample serializes"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
