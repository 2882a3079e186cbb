use serde::{Deserialize, Serialize};

use super::text;
use super::world::{Cut, Direction, Heat, Location, Utility, World};

/// Steps after which an unfinished game is lost.
pub const STEP_LIMIT: u32 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossReason {
    Burned,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ongoing,
    Won,
    Lost(LossReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemState {
    pub location: Location,
    pub cut: Option<Cut>,
    pub heat: Option<Heat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Held {
    Item(usize),
    Meal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub room: usize,
    pub items: Vec<ItemState>,
    /// Held things in pickup order.
    pub inventory: Vec<Held>,
    pub doors_open: Vec<bool>,
    pub recipe_read: bool,
    pub meal_prepared: bool,
    /// Per ingredient: point already awarded for holding it.
    pub collected: Vec<bool>,
    /// Per direction: point already awarded.
    pub directions_done: Vec<bool>,
    pub score: u32,
    pub steps: u32,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub text: String,
    pub reward: i32,
    pub done: bool,
}

/// Parsed form of the closed command grammar.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Go(Direction),
    Open(String),
    Take(String),
    Drop(String),
    Cut(Cut, String, String),
    Cook(String, String),
    ExamineCookbook,
    Look,
    Inventory,
    PrepareMeal,
    EatMeal,
}

impl Command {
    pub fn parse(text: &str) -> Option<Command> {
        let lower = text.to_lowercase();
        let words: Vec<&str> = lower.split_whitespace().collect();
        let rest = |from: usize, to: usize| words[from..to].join(" ");
        let split_with = |from: usize| -> Option<(String, String)> {
            let w = words.iter().rposition(|w| *w == "with")?;
            (w > from && w + 1 < words.len()).then(|| (rest(from, w), rest(w + 1, words.len())))
        };
        match words.as_slice() {
            ["go", d] => Direction::parse(d).map(Command::Go),
            ["open", _, ..] => Some(Command::Open(rest(1, words.len()))),
            ["take", _, ..] => Some(Command::Take(rest(1, words.len()))),
            ["drop", _, ..] => Some(Command::Drop(rest(1, words.len()))),
            ["cook", ..] => split_with(1).map(|(i, t)| Command::Cook(i, t)),
            ["examine", "cookbook"] => Some(Command::ExamineCookbook),
            ["look"] => Some(Command::Look),
            ["inventory"] => Some(Command::Inventory),
            ["prepare", "meal"] => Some(Command::PrepareMeal),
            ["eat", "meal"] => Some(Command::EatMeal),
            [verb, ..] => {
                let cut = Cut::from_verb(verb)?;
                split_with(1).map(|(i, t)| Command::Cut(cut, i, t))
            }
            [] => None,
        }
    }
}

impl GameState {
    pub fn initial(world: &World) -> Self {
        let items: Vec<ItemState> =
            world.items.iter().map(|i| ItemState { location: i.location, cut: i.cut, heat: i.heat }).collect();
        let inventory = items
            .iter()
            .enumerate()
            .filter(|(_, s)| s.location == Location::Inventory)
            .map(|(i, _)| Held::Item(i))
            .collect();
        GameState {
            room: world.start_room,
            items,
            inventory,
            doors_open: world.doors.iter().map(|d| d.open).collect(),
            recipe_read: false,
            meal_prepared: false,
            collected: vec![false; world.recipe.ingredients.len()],
            directions_done: vec![false; world.recipe.directions.len()],
            score: 0,
            steps: 0,
            status: Status::Ongoing,
        }
    }

    pub fn is_over(&self) -> bool {
        self.status != Status::Ongoing
    }

    pub fn holds_item(&self, item: usize) -> bool {
        self.items[item].location == Location::Inventory
    }

    pub fn holds_meal(&self) -> bool {
        self.inventory.contains(&Held::Meal)
    }

    /// Names of items lying in the current room, in item order.
    pub fn items_here(&self) -> impl Iterator<Item = usize> + '_ {
        let here = Location::Room(self.room);
        self.items.iter().enumerate().filter(move |(_, s)| s.location == here).map(|(i, _)| i)
    }

    fn visible_item(&self, world: &World, name: &str, held: bool) -> Option<usize> {
        let i = world.item_by_name(name)?;
        let loc = self.items[i].location;
        let ok = if held { loc == Location::Inventory } else { loc == Location::Room(self.room) };
        ok.then_some(i)
    }

    /// True when every ingredient is held in exactly its required state.
    pub fn recipe_ready(&self, world: &World) -> bool {
        world.recipe.ingredients.iter().all(|g| {
            let s = &self.items[g.item];
            s.location == Location::Inventory && s.cut == g.cut && s.heat == g.heat
        })
    }

    fn can_prepare(&self, world: &World) -> bool {
        !self.meal_prepared && self.recipe_read && self.room == world.kitchen && self.recipe_ready(world)
    }

    /// Awards latched points for ingredients and directions.
    fn update_progress(&mut self, world: &World) -> u32 {
        let mut gained = 0;
        for (gi, g) in world.recipe.ingredients.iter().enumerate() {
            if !self.collected[gi] && self.holds_item(g.item) {
                self.collected[gi] = true;
                gained += 1;
            }
        }
        for (di, d) in world.recipe.directions.iter().enumerate() {
            if self.directions_done[di] {
                continue;
            }
            let g = &world.recipe.ingredients[d.ingredient];
            let s = &self.items[g.item];
            let matched = match d.action {
                super::Action::Cut(c) => s.cut == Some(c),
                super::Action::Heat(h) => s.heat == Some(h),
            };
            if s.location == Location::Inventory && matched {
                self.directions_done[di] = true;
                gained += 1;
            }
        }
        gained
    }
}

const NO_SUCH_THING: &str = "You can't see any such thing.";

/// Applies one command. Pure in `(world, state, command)`.
pub fn apply_command(world: &World, state: &GameState, command: &str) -> (GameState, Feedback) {
    let mut s = state.clone();
    if s.is_over() {
        return (s, Feedback { text: "The game is over.".into(), reward: 0, done: true });
    }
    s.steps += 1;
    let mut reward = 0i32;
    let text = match Command::parse(command) {
        None => "I don't understand that.".to_string(),
        Some(cmd) => execute(world, &mut s, cmd, &mut reward),
    };
    let mut text = text;
    if s.status == Status::Ongoing {
        reward += s.update_progress(world) as i32;
        if s.steps >= STEP_LIMIT {
            s.status = Status::Lost(LossReason::Timeout);
            text.push_str(" *** You ran out of time! ***");
        }
    }
    s.score = (s.score as i32 + reward.max(0)) as u32;
    let done = s.is_over();
    (s, Feedback { text, reward, done })
}

fn execute(world: &World, s: &mut GameState, cmd: Command, reward: &mut i32) -> String {
    let room = &world.rooms[s.room];
    match cmd {
        Command::Look => text::describe_room(world, s),
        Command::Inventory => text::inventory_text(world, s),
        Command::ExamineCookbook => {
            if world.cookbook_room != s.room {
                return NO_SUCH_THING.into();
            }
            s.recipe_read = true;
            text::recipe_text(world)
        }
        Command::Go(d) => match room.exit(d) {
            None => "You can't go that way.".into(),
            Some(exit) => {
                if let Some(door) = exit.door {
                    if !s.doors_open[door] {
                        return format!("You have to open the {} first.", world.doors[door].name);
                    }
                }
                s.room = exit.to;
                text::describe_room(world, s)
            }
        },
        Command::Open(name) => {
            let adjacent = Direction::ALL
                .iter()
                .filter_map(|d| room.exit(*d).and_then(|e| e.door))
                .find(|door| world.doors[*door].name == name);
            match adjacent {
                None => NO_SUCH_THING.into(),
                Some(door) if s.doors_open[door] => "That is already open.".into(),
                Some(door) => {
                    s.doors_open[door] = true;
                    format!("You open the {}.", world.doors[door].name)
                }
            }
        }
        Command::Take(name) => {
            if name == "cookbook" || Utility::parse(&name).is_some() {
                return "That's fixed in place.".into();
            }
            if s.visible_item(world, &name, true).is_some() {
                return "You already have that.".into();
            }
            match s.visible_item(world, &name, false) {
                None => NO_SUCH_THING.into(),
                Some(_) if s.inventory.len() >= world.capacity => "You are carrying too many things already.".into(),
                Some(i) => {
                    s.items[i].location = Location::Inventory;
                    s.inventory.push(Held::Item(i));
                    format!("You take the {} from the floor.", name)
                }
            }
        }
        Command::Drop(name) => {
            if name == "meal" && s.holds_meal() {
                return "You'd better keep the meal.".into();
            }
            match s.visible_item(world, &name, true) {
                None => "You are not carrying that.".into(),
                Some(i) => {
                    s.items[i].location = Location::Room(s.room);
                    s.inventory.retain(|h| *h != Held::Item(i));
                    format!("You drop the {} on the floor.", name)
                }
            }
        }
        Command::Cut(cut, name, tool) => {
            if tool != "knife" {
                return if Utility::parse(&tool).is_some() {
                    format!("You can't {} with the {tool}.", cut.verb())
                } else {
                    NO_SUCH_THING.into()
                };
            }
            if !room.has_utility(Utility::Knife) {
                return "You can't see any knife here.".into();
            }
            let Some(i) = s.visible_item(world, &name, true) else {
                return format!("You have to be holding the {name} first.");
            };
            match s.items[i].cut {
                Some(prev) => format!("The {name} is already {}.", prev.adjective()),
                None => {
                    s.items[i].cut = Some(cut);
                    format!("You {} the {name}.", cut.verb())
                }
            }
        }
        Command::Cook(name, tool) => {
            let Some(heat) = Utility::parse(&tool).and_then(Heat::from_utility) else {
                return if tool == "knife" { "You can't cook with the knife.".into() } else { NO_SUCH_THING.into() };
            };
            let utility = heat.utility();
            if !room.has_utility(utility) {
                return format!("You can't see any {} here.", utility.name());
            }
            let Some(i) = s.visible_item(world, &name, true) else {
                return format!("You have to be holding the {name} first.");
            };
            if s.items[i].heat.is_some() {
                s.status = Status::Lost(LossReason::Burned);
                *reward += world.failure_penalty.min(0);
                return format!(
                    "You cook the {name} with the {}. The {name} burns to a crisp! *** You lost! ***",
                    utility.name()
                );
            }
            s.items[i].heat = Some(heat);
            format!("You {} the {name} with the {}.", heat.verb(), utility.name())
        }
        Command::PrepareMeal => {
            if s.meal_prepared {
                "You already prepared the meal.".into()
            } else if s.room != world.kitchen {
                "You need to be in the kitchen to prepare a meal.".into()
            } else if !s.recipe_read {
                "You need to read the recipe first.".into()
            } else if !s.recipe_ready(world) {
                "You don't have everything the recipe calls for.".into()
            } else {
                for g in &world.recipe.ingredients {
                    s.items[g.item].location = Location::Consumed;
                    s.inventory.retain(|h| *h != Held::Item(g.item));
                }
                s.inventory.push(Held::Meal);
                s.meal_prepared = true;
                *reward += 1;
                "You prepare the meal. Adding the meal to your inventory.".into()
            }
        }
        Command::EatMeal => {
            if !s.holds_meal() {
                return NO_SUCH_THING.into();
            }
            s.inventory.retain(|h| *h != Held::Meal);
            s.status = Status::Won;
            *reward += 1;
            "You eat the meal. Not bad. *** The End ***".into()
        }
    }
}

/// Commands whose application would change the state or reveal information.
/// Sorted lexicographically.
pub fn admissible_commands(world: &World, s: &GameState) -> Vec<String> {
    let mut out = vec!["look".to_string(), "inventory".to_string()];
    if s.is_over() {
        return Vec::new();
    }
    let room = &world.rooms[s.room];
    if world.cookbook_room == s.room {
        out.push("examine cookbook".into());
    }
    for d in Direction::ALL {
        if let Some(exit) = room.exit(d) {
            match exit.door {
                Some(door) if !s.doors_open[door] => out.push(format!("open {}", world.doors[door].name)),
                _ => out.push(format!("go {}", d.name())),
            }
        }
    }
    if s.inventory.len() < world.capacity {
        for i in s.items_here() {
            out.push(format!("take {}", world.items[i].name));
        }
    }
    for h in &s.inventory {
        let Held::Item(i) = *h else { continue };
        let name = &world.items[i].name;
        let it = &s.items[i];
        out.push(format!("drop {name}"));
        if it.cut.is_none() && room.has_utility(Utility::Knife) {
            for c in Cut::ALL {
                out.push(format!("{} {name} with knife", c.verb()));
            }
        }
        for h in Heat::ALL {
            if room.has_utility(h.utility()) {
                out.push(format!("cook {name} with {}", h.utility().name()));
            }
        }
    }
    if s.can_prepare(world) {
        out.push("prepare meal".into());
    }
    if s.holds_meal() {
        out.push("eat meal".into());
    }
    out.sort();
    out
}

/// Observation text: the last feedback, or the intro and room description at
/// the start of an episode.
pub fn render_observation(world: &World, state: &GameState, last: Option<&Feedback>) -> String {
    match last {
        Some(f) => f.text.clone(),
        None => format!("{}\n{}", text::INTRO, text::describe_room(world, state)),
    }
}
