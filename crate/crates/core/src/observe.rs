//! Rule-based reading of engine text: recipes, inventories, descriptions.

use crate::engine::{Action, Utility};
use crate::lexicon::is_state_adjective;

/// One line of a recipe as read from the cookbook.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecipeLine {
    pub text: String,
    /// Ingredient named by the line.
    pub ingredient: String,
    /// `None` for a bare ingredient line.
    pub action: Option<Action>,
}

/// Splits recipe text into ingredient and direction lines.
pub fn parse_recipe(text: &str) -> Vec<RecipeLine> {
    let mut out = Vec::new();
    let mut section = 0;
    for raw in text.lines() {
        let line = raw.trim();
        match line {
            "Ingredients:" => section = 1,
            "Directions:" => section = 2,
            "" => {}
            _ if section == 1 => {
                out.push(RecipeLine { text: line.to_string(), ingredient: line.to_string(), action: None })
            }
            _ if section == 2 => {
                let mut words = line.splitn(3, ' ');
                let verb = words.next().unwrap_or("");
                let the = words.next().unwrap_or("");
                let rest = words.next().unwrap_or("");
                if let (Some(a), "the", false) = (Action::from_verb(verb), the, rest.is_empty()) {
                    out.push(RecipeLine { text: line.to_string(), ingredient: rest.to_string(), action: Some(a) });
                }
            }
            _ => {}
        }
    }
    out
}

/// Ingredient names listed in recipe text.
pub fn recipe_ingredients(text: &str) -> Vec<String> {
    parse_recipe(text).into_iter().filter(|l| l.action.is_none()).map(|l| l.ingredient).collect()
}

/// Strips the article and leading state adjectives from an item phrase.
pub fn bare_name(phrase: &str) -> String {
    let mut words: Vec<&str> = phrase.split_whitespace().collect();
    if matches!(words.first(), Some(&"a" | &"an" | &"some" | &"the")) {
        words.remove(0);
    }
    while words.len() > 1 && is_state_adjective(words[0]) {
        words.remove(0);
    }
    words.join(" ")
}

fn split_list(list: &str) -> Vec<String> {
    list.trim_end_matches('.')
        .split(", ")
        .flat_map(|part| part.split(" and "))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// Item names held according to an inventory response, in listed order.
pub fn inventory_items(text: &str) -> Vec<String> {
    let Some(rest) = text.trim().strip_prefix("You are carrying:") else { return Vec::new() };
    rest.trim().trim_end_matches('.').split(", ").map(bare_name).filter(|s| !s.is_empty()).collect()
}

fn sentences(description: &str) -> impl Iterator<Item = &str> {
    description.lines().flat_map(|l| l.split_inclusive(". ")).map(str::trim)
}

/// Names of items on the floor in a room description.
pub fn floor_items(description: &str) -> Vec<String> {
    for s in sentences(description) {
        if let Some(rest) = s.strip_prefix("On the floor you see ") {
            return split_list(rest).iter().map(|p| bare_name(p)).collect();
        }
    }
    Vec::new()
}

/// Utilities listed in a room description.
pub fn utilities(description: &str) -> Vec<Utility> {
    for s in sentences(description) {
        if let Some(rest) = s.strip_prefix("You see ") {
            return split_list(rest).iter().filter_map(|p| Utility::parse(&bare_name(p))).collect();
        }
    }
    Vec::new()
}

/// Room name from a `-= Name =-` header.
pub fn room_name(description: &str) -> Option<String> {
    let first = description.lines().find(|l| l.trim_start().starts_with("-= "))?;
    let inner = first.trim().strip_prefix("-= ")?.strip_suffix(" =-")?;
    Some(inner.to_lowercase())
}

pub fn mentions_cookbook(description: &str) -> bool {
    description.contains("cookbook")
}
