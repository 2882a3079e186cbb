use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn name(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::East => "east",
            Direction::South => "south",
            Direction::West => "west",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::North => Direction::South,
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::West => Direction::East,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Grid offset `(dx, dy)` with north as `-y`.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cut {
    Sliced,
    Diced,
    Chopped,
}

impl Cut {
    pub const ALL: [Cut; 3] = [Cut::Sliced, Cut::Diced, Cut::Chopped];

    pub fn adjective(self) -> &'static str {
        match self {
            Cut::Sliced => "sliced",
            Cut::Diced => "diced",
            Cut::Chopped => "chopped",
        }
    }

    pub fn verb(self) -> &'static str {
        match self {
            Cut::Sliced => "slice",
            Cut::Diced => "dice",
            Cut::Chopped => "chop",
        }
    }

    pub fn from_verb(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.verb() == s)
    }

    pub fn from_adjective(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.adjective() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heat {
    Fried,
    Roasted,
    Grilled,
}

impl Heat {
    pub const ALL: [Heat; 3] = [Heat::Fried, Heat::Roasted, Heat::Grilled];

    pub fn adjective(self) -> &'static str {
        match self {
            Heat::Fried => "fried",
            Heat::Roasted => "roasted",
            Heat::Grilled => "grilled",
        }
    }

    /// Verb used in recipe directions.
    pub fn verb(self) -> &'static str {
        match self {
            Heat::Fried => "fry",
            Heat::Roasted => "roast",
            Heat::Grilled => "grill",
        }
    }

    pub fn utility(self) -> Utility {
        match self {
            Heat::Fried => Utility::Stove,
            Heat::Roasted => Utility::Oven,
            Heat::Grilled => Utility::Bbq,
        }
    }

    pub fn from_verb(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.verb() == s)
    }

    pub fn from_adjective(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.adjective() == s)
    }

    pub fn from_utility(u: Utility) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.utility() == u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Utility {
    Knife,
    Stove,
    Oven,
    Bbq,
}

impl Utility {
    pub const ALL: [Utility; 4] = [Utility::Knife, Utility::Stove, Utility::Oven, Utility::Bbq];

    pub fn name(self) -> &'static str {
        match self {
            Utility::Knife => "knife",
            Utility::Stove => "stove",
            Utility::Oven => "oven",
            Utility::Bbq => "bbq",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|u| u.name() == s)
    }
}

/// Processing step named by one recipe direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Cut(Cut),
    Heat(Heat),
}

impl Action {
    pub fn verb(self) -> &'static str {
        match self {
            Action::Cut(c) => c.verb(),
            Action::Heat(h) => h.verb(),
        }
    }

    pub fn utility(self) -> Utility {
        match self {
            Action::Cut(_) => Utility::Knife,
            Action::Heat(h) => h.utility(),
        }
    }

    pub fn from_verb(s: &str) -> Option<Self> {
        Cut::from_verb(s).map(Action::Cut).or_else(|| Heat::from_verb(s).map(Action::Heat))
    }

    /// Engine command that performs this action on `item`.
    pub fn command(self, item: &str) -> String {
        match self {
            Action::Cut(c) => format!("{} {item} with knife", c.verb()),
            Action::Heat(h) => format!("cook {item} with {}", h.utility().name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exit {
    pub to: usize,
    pub door: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Room {
    pub name: String,
    /// Indexed by [`Direction::index`].
    pub exits: [Option<Exit>; 4],
    pub utilities: Vec<Utility>,
    pub distractors: Vec<String>,
}

impl Room {
    pub fn exit(&self, d: Direction) -> Option<&Exit> {
        self.exits[d.index()].as_ref()
    }

    pub fn degree(&self) -> usize {
        self.exits.iter().flatten().count()
    }

    pub fn has_utility(&self, u: Utility) -> bool {
        self.utilities.contains(&u)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Door {
    pub name: String,
    pub open: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Room(usize),
    Inventory,
    Consumed,
}

/// A food item and its initial state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub name: String,
    pub cut: Option<Cut>,
    pub heat: Option<Heat>,
    pub location: Location,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ingredient {
    pub name: String,
    /// Index into [`World::items`].
    pub item: usize,
    pub cut: Option<Cut>,
    pub heat: Option<Heat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeDirection {
    pub ingredient: usize,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub ingredients: Vec<Ingredient>,
    pub directions: Vec<RecipeDirection>,
}

impl Recipe {
    pub fn direction_text(&self, d: &RecipeDirection) -> String {
        format!("{} the {}", d.action.verb(), self.ingredients[d.ingredient].name)
    }

    pub fn required_utilities(&self) -> Vec<Utility> {
        let mut out: Vec<Utility> = self.directions.iter().map(|d| d.action.utility()).collect();
        out.sort();
        out.dedup();
        out
    }
}

/// A generated house with its recipe. Immutable during play.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub seed: u64,
    pub rooms: Vec<Room>,
    pub doors: Vec<Door>,
    pub items: Vec<Item>,
    pub kitchen: usize,
    pub cookbook_room: usize,
    pub start_room: usize,
    pub recipe: Recipe,
    pub capacity: usize,
    /// Reward applied on the step that loses the game by burning food.
    pub failure_penalty: i32,
    /// Probability-like weight in `[0, 1]` for showing each of the two
    /// distractor slots of a room description.
    pub distractor_density: f32,
}

impl World {
    pub fn max_score(&self) -> u32 {
        (self.recipe.ingredients.len() + self.recipe.directions.len() + 2) as u32
    }

    pub fn item_by_name(&self, name: &str) -> Option<usize> {
        self.items.iter().position(|i| i.name == name)
    }

    pub fn ingredient_of_item(&self, item: usize) -> Option<usize> {
        self.recipe.ingredients.iter().position(|g| g.item == item)
    }

    pub fn door_by_name(&self, name: &str) -> Option<usize> {
        self.doors.iter().position(|d| d.name == name)
    }

    pub fn room_by_name(&self, name: &str) -> Option<usize> {
        self.rooms.iter().position(|r| r.name == name)
    }

    /// Structural problems, if any: asymmetric exits, missing kitchen,
    /// misplaced cookbook, bad door names.
    pub fn validate(&self) -> Result<(), String> {
        if self.kitchen >= self.rooms.len() || self.rooms[self.kitchen].name != "kitchen" {
            return Err("kitchen index does not name the kitchen".into());
        }
        if self.rooms.iter().filter(|r| r.name == "kitchen").count() != 1 {
            return Err("world must contain exactly one kitchen".into());
        }
        if self.cookbook_room >= self.rooms.len() || self.start_room >= self.rooms.len() {
            return Err("room index out of range".into());
        }
        for (i, room) in self.rooms.iter().enumerate() {
            for d in Direction::ALL {
                if let Some(exit) = room.exit(d) {
                    let back = self.rooms.get(exit.to).and_then(|r| r.exit(d.opposite()));
                    match back {
                        Some(b) if b.to == i && b.door == exit.door => {}
                        _ => return Err(format!("exit {} of {} is not symmetric", d.name(), room.name)),
                    }
                }
            }
        }
        for door in &self.doors {
            let words = door.name.split_whitespace().count();
            if !(1..=3).contains(&words) {
                return Err(format!("door name {:?} must have 1-3 words", door.name));
            }
        }
        for (gi, g) in self.recipe.ingredients.iter().enumerate() {
            if self.items.get(g.item).map(|i| &i.name) != Some(&g.name) {
                return Err(format!("ingredient {gi} does not match its item"));
            }
        }
        for d in &self.recipe.directions {
            if d.ingredient >= self.recipe.ingredients.len() {
                return Err("direction references unknown ingredient".into());
            }
        }
        Ok(())
    }

    /// Digest of the world contents excluding the seed.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut w = self.clone();
        w.seed = 0;
        let json = serde_json::to_vec(&w).expect("world serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
