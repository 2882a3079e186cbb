//! Fixed text formats for descriptions, inventories and recipes.

use super::state::{GameState, Held};
use super::world::{Cut, Direction, Heat, World};

pub const INTRO: &str = "You are hungry! Let's cook a delicious meal. Check the cookbook in the kitchen for the recipe. Once done, enjoy your meal!";

pub fn article(phrase: &str) -> &'static str {
    match phrase.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

/// Item name prefixed with its state adjectives, cut first.
pub fn item_phrase(name: &str, cut: Option<Cut>, heat: Option<Heat>) -> String {
    let mut parts = Vec::with_capacity(3);
    if let Some(c) = cut {
        parts.push(c.adjective());
    }
    if let Some(h) = heat {
        parts.push(h.adjective());
    }
    parts.push(name);
    parts.join(" ")
}

pub fn with_article(phrase: &str) -> String {
    format!("{} {phrase}", article(phrase))
}

/// "x", "x and y", "x, y and z".
pub fn join_list(items: &[String]) -> String {
    match items.len() {
        0 => String::new(),
        1 => items[0].clone(),
        n => format!("{} and {}", items[..n - 1].join(", "), items[n - 1]),
    }
}

pub fn title_case(s: &str) -> String {
    s.split_whitespace()
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect::<String>(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Distractor sentences shown in the two description slots.
fn pick_distractors(world: &World, room: usize, step: u32) -> [Option<&str>; 2] {
    let pool = &world.rooms[room].distractors;
    let mut out = [None, None];
    if pool.is_empty() {
        return out;
    }
    let h = mix(world.seed ^ mix(room as u64 ^ mix(step as u64)));
    let threshold = (world.distractor_density.clamp(0.0, 1.0) as f64 * 65536.0) as u64;
    let first = (h >> 32) as usize % pool.len();
    if h & 0xffff < threshold {
        out[0] = Some(pool[first].as_str());
    }
    if (h >> 16) & 0xffff < threshold && pool.len() > 1 {
        let second = (first + 1 + ((h >> 48) as usize % (pool.len() - 1))) % pool.len();
        out[1] = Some(pool[second].as_str());
    }
    out
}

/// Room description for the current room of `state`.
pub fn describe_room(world: &World, state: &GameState) -> String {
    let room = &world.rooms[state.room];
    let [d1, d2] = pick_distractors(world, state.room, state.steps);
    let mut sentences: Vec<String> = vec![format!("You are in the {}.", room.name)];
    if let Some(d) = d1 {
        sentences.push(d.to_string());
    }
    if !room.utilities.is_empty() {
        let names: Vec<String> = room.utilities.iter().map(|u| with_article(u.name())).collect();
        sentences.push(format!("You see {}.", join_list(&names)));
    }
    if world.cookbook_room == state.room {
        sentences.push("A cookbook lies on the table.".to_string());
    }
    let floor: Vec<String> = state
        .items
        .iter()
        .enumerate()
        .filter(|(_, it)| it.location == super::Location::Room(state.room))
        .map(|(i, it)| with_article(&item_phrase(&world.items[i].name, it.cut, it.heat)))
        .collect();
    if !floor.is_empty() {
        sentences.push(format!("On the floor you see {}.", join_list(&floor)));
    }
    for d in Direction::ALL {
        if let Some(exit) = room.exit(d) {
            match exit.door {
                Some(door) => {
                    let state_word = if state.doors_open[door] { "an open" } else { "a closed" };
                    sentences.push(format!(
                        "There is {state_word} {} leading {}.",
                        world.doors[door].name,
                        d.name()
                    ));
                }
                None => sentences.push(format!("There is an exit to the {}.", d.name())),
            }
        }
    }
    if let Some(d) = d2 {
        sentences.push(d.to_string());
    }
    format!("-= {} =-\n{}", title_case(&room.name), sentences.join(" "))
}

pub fn inventory_text(world: &World, state: &GameState) -> String {
    let entries: Vec<String> = state
        .inventory
        .iter()
        .map(|h| match *h {
            Held::Item(i) => {
                let it = &state.items[i];
                item_phrase(&world.items[i].name, it.cut, it.heat)
            }
            Held::Meal => "meal".to_string(),
        })
        .collect();
    format_inventory(&entries)
}

/// Inventory response for already-built item phrases (without articles).
pub fn format_inventory(phrases: &[String]) -> String {
    if phrases.is_empty() {
        return "You are carrying nothing.".to_string();
    }
    let entries: Vec<String> = phrases.iter().map(|p| with_article(p)).collect();
    format!("You are carrying: {}.", entries.join(", "))
}

pub fn recipe_text(world: &World) -> String {
    let ingredients: Vec<String> = world.recipe.ingredients.iter().map(|g| g.name.clone()).collect();
    let directions: Vec<String> = world.recipe.directions.iter().map(|d| world.recipe.direction_text(d)).collect();
    format_recipe(&ingredients, &directions)
}

pub fn format_recipe(ingredients: &[String], directions: &[String]) -> String {
    let mut out = String::from("Ingredients:\n");
    for line in ingredients {
        out.push_str("  ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("Directions:\n");
    for line in directions {
        out.push_str("  ");
        out.push_str(line);
        out.push('\n');
    }
    out
}
