use std::collections::VecDeque;

use super::state::{apply_command, GameState, Held, Status};
use super::world::{Action, Direction, Location, World};
use super::EngineError;

/// BFS distances and first-hop parents from `from`, ignoring door states.
fn bfs(world: &World, from: usize) -> Vec<Option<(usize, Direction)>> {
    let mut parent: Vec<Option<(usize, Direction)>> = vec![None; world.rooms.len()];
    let mut seen = vec![false; world.rooms.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(r) = queue.pop_front() {
        for d in Direction::ALL {
            if let Some(exit) = world.rooms[r].exit(d) {
                if !seen[exit.to] {
                    seen[exit.to] = true;
                    parent[exit.to] = Some((r, d));
                    queue.push_back(exit.to);
                }
            }
        }
    }
    parent
}

/// Directions of a shortest route between two rooms, if connected.
pub fn shortest_path(world: &World, from: usize, to: usize) -> Option<Vec<Direction>> {
    if from == to {
        return Some(Vec::new());
    }
    let parent = bfs(world, from);
    let mut path = Vec::new();
    let mut cur = to;
    while cur != from {
        let (p, d) = parent[cur]?;
        path.push(d);
        cur = p;
    }
    path.reverse();
    Some(path)
}

struct Planner<'w> {
    world: &'w World,
    state: GameState,
    commands: Vec<String>,
}

impl Planner<'_> {
    fn exec(&mut self, cmd: String) -> Result<(), EngineError> {
        let (next, fb) = apply_command(self.world, &self.state, &cmd);
        self.state = next;
        self.commands.push(cmd);
        if let Status::Lost(reason) = self.state.status {
            return Err(EngineError::Unwinnable(format!("plan lost the game ({reason:?}): {}", fb.text)));
        }
        Ok(())
    }

    fn goto(&mut self, target: usize) -> Result<(), EngineError> {
        let path = shortest_path(self.world, self.state.room, target).ok_or_else(|| {
            EngineError::Unreachable(format!("room {} from {}", self.world.rooms[target].name, self.world.rooms[self.state.room].name))
        })?;
        for d in path {
            let exit = self.world.rooms[self.state.room].exit(d).expect("path follows exits");
            if let Some(door) = exit.door {
                if !self.state.doors_open[door] {
                    self.exec(format!("open {}", self.world.doors[door].name))?;
                }
            }
            self.exec(format!("go {}", d.name()))?;
        }
        Ok(())
    }

    fn distance(&self, target: usize) -> usize {
        shortest_path(self.world, self.state.room, target).map_or(usize::MAX, |p| p.len())
    }
}

/// Command list that wins `world` with the maximum score.
pub fn walkthrough(world: &World) -> Result<Vec<String>, EngineError> {
    let mut p = Planner { world, state: GameState::initial(world), commands: Vec::new() };
    let recipe = &world.recipe;

    let junk: Vec<usize> = p
        .state
        .inventory
        .iter()
        .filter_map(|h| match h {
            Held::Item(i) if world.ingredient_of_item(*i).is_none() => Some(*i),
            _ => None,
        })
        .collect();
    for i in junk {
        p.exec(format!("drop {}", world.items[i].name))?;
    }

    p.goto(world.cookbook_room)?;
    p.exec("examine cookbook".into())?;

    loop {
        let pending: Vec<usize> = recipe
            .ingredients
            .iter()
            .filter_map(|g| match p.state.items[g.item].location {
                Location::Room(r) => Some(r),
                _ => None,
            })
            .collect();
        let Some(&target) = pending.iter().min_by_key(|r| (p.distance(**r), **r)) else { break };
        if p.distance(target) == usize::MAX {
            return Err(EngineError::Unreachable(format!("ingredient room {}", world.rooms[target].name)));
        }
        p.goto(target)?;
        for g in &recipe.ingredients {
            if p.state.items[g.item].location == Location::Room(target) {
                p.exec(format!("take {}", g.name))?;
                if !p.state.holds_item(g.item) {
                    return Err(EngineError::Unwinnable(format!("cannot carry {}", g.name)));
                }
            }
        }
    }

    let mut todo: Vec<(usize, Action)> = Vec::new();
    for d in &recipe.directions {
        let g = &recipe.ingredients[d.ingredient];
        let s = &p.state.items[g.item];
        let needed = match d.action {
            Action::Cut(c) => match s.cut {
                None => true,
                Some(have) if have == c => false,
                Some(_) => return Err(EngineError::Unwinnable(format!("{} has the wrong cut", g.name))),
            },
            Action::Heat(h) => match s.heat {
                None => true,
                Some(have) if have == h => false,
                Some(_) => return Err(EngineError::Unwinnable(format!("{} has the wrong heat", g.name))),
            },
        };
        if needed {
            todo.push((g.item, d.action));
        }
    }
    while !todo.is_empty() {
        let rooms: Vec<usize> = todo
            .iter()
            .filter_map(|(_, a)| world.rooms.iter().position(|r| r.has_utility(a.utility())))
            .collect();
        if rooms.len() < todo.len() {
            return Err(EngineError::Unwinnable("required utility missing".into()));
        }
        let target = *rooms.iter().min_by_key(|r| (p.distance(**r), **r)).expect("non-empty");
        p.goto(target)?;
        let (here, rest): (Vec<_>, Vec<_>) =
            todo.into_iter().partition(|(_, a)| world.rooms[target].has_utility(a.utility()));
        for (item, action) in here {
            p.exec(action.command(&world.items[item].name))?;
        }
        todo = rest;
    }

    p.goto(world.kitchen)?;
    p.exec("prepare meal".into())?;
    p.exec("eat meal".into())?;
    if p.state.status != Status::Won || p.state.score != world.max_score() {
        return Err(EngineError::Unwinnable(format!(
            "plan ended with status {:?} and score {}/{}",
            p.state.status,
            p.state.score,
            world.max_score()
        )));
    }
    Ok(p.commands)
}
