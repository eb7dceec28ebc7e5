//! Parameterized instance generators and the named instance families.
//!
//! Blocksworld uses the four-schema encoding (Pickup, Putdown, Stack,
//! Unstack). Grids use atoms `at(x,y)` over coordinate objects `1..k`, and
//! sliding puzzles use `at(t,x,y)` and `atB(x,y)`.
//!
//! Initial-state distributions of the seeded generators:
//! - blocks are shuffled uniformly, then cut into towers with an independent
//!   fair coin between consecutive blocks;
//! - puzzle layouts are uniform permutations of tiles and blank (both
//!   parities occur, since the goal only constrains one tile);
//! - Q_on and Q_tower draws are rejection-sampled until the family's
//!   initial-state condition holds.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pattern::AtomPattern;
use crate::strips::{ActionSpec, Atom, Instance, InstanceBuilder};

/// Towers listed bottom block first; entries index into the block names.
pub type Towers = Vec<Vec<usize>>;

/// `a`, `b`, ... `z`, then `b26`, `b27`, ...
pub fn block_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("b{i}")
            }
        })
        .collect()
}

/// Every arm-empty configuration of `n` labeled blocks, each exactly once.
/// Towers are ordered by their bottom block.
pub fn tower_configurations(n: usize) -> Vec<Towers> {
    fn extend(i: usize, n: usize, current: &mut Towers, out: &mut Vec<Towers>) {
        if i == n {
            let mut towers = current.clone();
            towers.sort();
            out.push(towers);
            return;
        }
        // Block i is inserted at any position of an existing tower or starts
        // a new one; each configuration arises exactly once.
        for t in 0..current.len() {
            for pos in 0..=current[t].len() {
                current[t].insert(pos, i);
                extend(i + 1, n, current, out);
                current[t].remove(pos);
            }
        }
        current.push(vec![i]);
        extend(i + 1, n, current, out);
        current.pop();
    }
    let mut out = Vec::new();
    extend(0, n, &mut Vec::new(), &mut out);
    out.sort();
    out
}

pub fn random_towers(n: usize, rng: &mut impl Rng) -> Towers {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut towers: Towers = Vec::new();
    for (k, b) in order.into_iter().enumerate() {
        if k == 0 || rng.gen_bool(0.5) {
            towers.push(vec![b]);
        } else {
            towers.last_mut().unwrap().push(b);
        }
    }
    towers.sort();
    towers
}

fn tower_of(towers: &Towers, block: usize) -> (usize, usize) {
    for (t, tower) in towers.iter().enumerate() {
        if let Some(pos) = tower.iter().position(|&b| b == block) {
            return (t, pos);
        }
    }
    panic!("block {block} is not placed");
}

/// Number of blocks above `block`.
pub fn blocks_above(towers: &Towers, block: usize) -> usize {
    let (t, pos) = tower_of(towers, block);
    towers[t].len() - pos - 1
}

fn blocks_below(towers: &Towers, block: usize) -> usize {
    tower_of(towers, block).1
}

fn same_tower(towers: &Towers, a: usize, b: usize) -> bool {
    tower_of(towers, a).0 == tower_of(towers, b).0
}

fn blocksworld_actions(blocks: &[String]) -> Vec<ActionSpec> {
    let a = |p: &str, args: &[&str]| Atom::new(p, args.iter().copied());
    let mut actions = Vec::new();
    for x in blocks {
        actions.push(ActionSpec {
            name: "Pickup".into(),
            args: vec![x.clone()],
            pre: vec![a("clear", &[x]), a("ontable", &[x]), Atom::nullary("armempty")],
            add: vec![a("holding", &[x])],
            del: vec![a("clear", &[x]), a("ontable", &[x]), Atom::nullary("armempty")],
        });
    }
    for x in blocks {
        actions.push(ActionSpec {
            name: "Putdown".into(),
            args: vec![x.clone()],
            pre: vec![a("holding", &[x])],
            add: vec![a("clear", &[x]), a("ontable", &[x]), Atom::nullary("armempty")],
            del: vec![a("holding", &[x])],
        });
    }
    for x in blocks {
        for y in blocks.iter().filter(|y| *y != x) {
            actions.push(ActionSpec {
                name: "Stack".into(),
                args: vec![x.clone(), y.clone()],
                pre: vec![a("holding", &[x]), a("clear", &[y])],
                add: vec![a("on", &[x, y]), a("clear", &[x]), Atom::nullary("armempty")],
                del: vec![a("holding", &[x]), a("clear", &[y])],
            });
        }
    }
    for x in blocks {
        for y in blocks.iter().filter(|y| *y != x) {
            actions.push(ActionSpec {
                name: "Unstack".into(),
                args: vec![x.clone(), y.clone()],
                pre: vec![a("on", &[x, y]), a("clear", &[x]), Atom::nullary("armempty")],
                add: vec![a("holding", &[x]), a("clear", &[y])],
                del: vec![a("on", &[x, y]), a("clear", &[x]), Atom::nullary("armempty")],
            });
        }
    }
    actions
}

/// Blocksworld instance skeleton with an arm-empty initial state; the
/// caller adds the goal.
pub fn blocksworld(name: &str, n: usize, towers: &Towers) -> Result<InstanceBuilder> {
    if n == 0 {
        return Err(Error::InvalidParams("blocksworld needs at least one block".into()));
    }
    let names = block_names(n);
    let mut placed: Vec<usize> = towers.iter().flatten().copied().collect();
    placed.sort_unstable();
    if placed != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidParams(
            "towers must place every block exactly once".into(),
        ));
    }
    let mut init = vec![Atom::nullary("armempty")];
    for tower in towers {
        init.push(Atom::new("ontable", [&names[tower[0]]]));
        for w in tower.windows(2) {
            init.push(Atom::new("on", [&names[w[1]], &names[w[0]]]));
        }
        init.push(Atom::new("clear", [&names[*tower.last().unwrap()]]));
    }
    Ok(InstanceBuilder::new(name, "blocksworld")
        .objects(names.iter().cloned())
        .init(init)
        .actions(blocksworld_actions(&names)))
}

fn config_tag(towers: &Towers) -> String {
    let names = block_names(towers.iter().map(Vec::len).sum());
    towers
        .iter()
        .map(|t| t.iter().map(|&b| names[b].as_str()).collect::<String>())
        .collect::<Vec<_>>()
        .join(".")
}

pub fn clear_instance(n: usize, towers: &Towers, x: usize) -> Result<Instance> {
    let names = block_names(n);
    let name = format!("clear-{}-x{}", config_tag(towers), names[x]);
    blocksworld(&name, n, towers)?
        .goal([Atom::new("clear", [&names[x]])])
        .build()
}

pub fn on_instance(n: usize, towers: &Towers, x: usize, y: usize) -> Result<Instance> {
    let names = block_names(n);
    let name = format!("on-{}-x{}-y{}", config_tag(towers), names[x], names[y]);
    blocksworld(&name, n, towers)?
        .goal([Atom::new("on", [&names[x], &names[y]])])
        .build()
}

/// Single-tower goal with `x` bound explicitly; `x_at_bottom` also asks for
/// `ontable(x)`.
pub fn tower_instance(n: usize, towers: &Towers, x: usize, x_at_bottom: bool) -> Result<Instance> {
    let names = block_names(n);
    let tag = if x_at_bottom { "tower-bottom" } else { "tower" };
    let name = format!("{tag}-{}-x{}", config_tag(towers), names[x]);
    let mut goal = vec![Atom::nullary("armempty")];
    if x_at_bottom {
        goal.push(Atom::new("ontable", [&names[x]]));
    }
    blocksworld(&name, n, towers)?
        .goal(goal)
        .goal_count(AtomPattern::parse("ontable(_)")?, 1)
        .param("x", names[x].clone())
        .build()
}

fn on_condition(towers: &Towers, x: usize, y: usize) -> bool {
    x != y && !same_tower(towers, x, y) && blocks_above(towers, x) > 0 && blocks_above(towers, y) > 0
}

fn tower_condition(towers: &Towers, x: usize) -> bool {
    let n: usize = towers.iter().map(Vec::len).sum();
    let (t, _) = tower_of(towers, x);
    blocks_below(towers, x) > 0 && blocks_above(towers, x) > 0 && towers[t].len() < n
}

fn coords(k: usize) -> Vec<String> {
    (1..=k).map(|i| i.to_string()).collect()
}

const DIRECTIONS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

fn neighbours(w: usize, h: usize, x: usize, y: usize) -> impl Iterator<Item = (usize, usize)> {
    DIRECTIONS.iter().filter_map(move |&(dx, dy)| {
        let nx = x as i64 + dx;
        let ny = y as i64 + dy;
        (nx >= 1 && ny >= 1 && nx <= w as i64 && ny <= h as i64).then_some((nx as usize, ny as usize))
    })
}

/// Agent on a `w`×`h` grid with 1-based coordinates.
pub fn grid_instance(w: usize, h: usize, start: (usize, usize), goal: (usize, usize)) -> Result<Instance> {
    if w == 0 || h == 0 {
        return Err(Error::InvalidParams("grid dimensions must be at least 1".into()));
    }
    let inside = |(x, y): (usize, usize)| (1..=w).contains(&x) && (1..=h).contains(&y);
    if !inside(start) || !inside(goal) {
        return Err(Error::InvalidParams("start and goal must lie on the grid".into()));
    }
    let at = |x: usize, y: usize| Atom::new("at", [x.to_string(), y.to_string()]);
    let mut actions = Vec::new();
    for x in 1..=w {
        for y in 1..=h {
            for (nx, ny) in neighbours(w, h, x, y) {
                actions.push(ActionSpec {
                    name: "Move".into(),
                    args: vec![x.to_string(), y.to_string(), nx.to_string(), ny.to_string()],
                    pre: vec![at(x, y)],
                    add: vec![at(nx, ny)],
                    del: vec![at(x, y)],
                });
            }
        }
    }
    let name = format!("grid{w}x{h}-s{}.{}-g{}.{}", start.0, start.1, goal.0, goal.1);
    InstanceBuilder::new(name, "grid")
        .objects(coords(w.max(h)))
        .init([at(start.0, start.1)])
        .goal([at(goal.0, goal.1)])
        .actions(actions)
        .build()
}

/// Sliding puzzle. `layout[(y-1)*w + (x-1)]` holds the tile number at
/// `(x,y)`, with 0 for the blank; tiles are named `t1`, `t2`, ...
pub fn slide_instance(
    w: usize,
    h: usize,
    layout: &[usize],
    tile: usize,
    target: (usize, usize),
) -> Result<Instance> {
    if w < 2 || h < 2 {
        return Err(Error::InvalidParams("sliding puzzles need at least 2x2 cells".into()));
    }
    let cells = w * h;
    let mut sorted = layout.to_vec();
    sorted.sort_unstable();
    if sorted != (0..cells).collect::<Vec<_>>() {
        return Err(Error::InvalidParams("layout must be a permutation of 0..w*h".into()));
    }
    if tile == 0 || tile >= cells {
        return Err(Error::InvalidParams(format!("no tile t{tile}")));
    }
    if !(1..=w).contains(&target.0) || !(1..=h).contains(&target.1) {
        return Err(Error::InvalidParams("target must lie on the grid".into()));
    }
    let tiles: Vec<String> = (1..cells).map(|t| format!("t{t}")).collect();
    let at = |t: &str, x: usize, y: usize| Atom::new("at", [t.to_string(), x.to_string(), y.to_string()]);
    let blank = |x: usize, y: usize| Atom::new("atB", [x.to_string(), y.to_string()]);
    let mut init = Vec::new();
    for y in 1..=h {
        for x in 1..=w {
            match layout[(y - 1) * w + (x - 1)] {
                0 => init.push(blank(x, y)),
                t => init.push(at(&tiles[t - 1], x, y)),
            }
        }
    }
    let mut actions = Vec::new();
    for t in &tiles {
        for x in 1..=w {
            for y in 1..=h {
                for (nx, ny) in neighbours(w, h, x, y) {
                    actions.push(ActionSpec {
                        name: "Move".into(),
                        args: vec![t.clone(), x.to_string(), y.to_string(), nx.to_string(), ny.to_string()],
                        pre: vec![at(t, x, y), blank(nx, ny)],
                        add: vec![at(t, nx, ny), blank(x, y)],
                        del: vec![at(t, x, y), blank(nx, ny)],
                    });
                }
            }
        }
    }
    let layout_tag: String = layout.iter().map(|d| std::char::from_digit(*d as u32, 36).unwrap_or('?')).collect();
    let name = format!("slide{w}x{h}-{layout_tag}-t{tile}-{}.{}", target.0, target.1);
    let mut objects = tiles.clone();
    objects.extend(coords(w.max(h)));
    InstanceBuilder::new(name, "slide")
        .objects(objects)
        .init(init)
        .goal([at(&tiles[tile - 1], target.0, target.1)])
        .actions(actions)
        .build()
}

/// Parameters for [`generate_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainSpec {
    /// Blocksworld with goal `clear(x)` for a block with blocks above it.
    Clear { blocks: usize },
    /// Blocksworld with goal `on(x,y)`, arm empty, `x` and `y` in different
    /// towers with blocks above both.
    On { blocks: usize },
    /// Single-tower goal; `x` has blocks above and below and some block lies
    /// outside its tower.
    Tower { blocks: usize, x_at_bottom: bool },
    Grid { width: usize, height: usize },
    Slide { width: usize, height: usize },
}

const MAX_DRAWS: usize = 10_000;

/// Seeded instance generator; equal inputs give equal instances.
pub fn generate_instance(spec: DomainSpec, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec {
        DomainSpec::Clear { blocks } => {
            if blocks < 2 {
                return Err(Error::InvalidParams("clear(x) needs at least 2 blocks".into()));
            }
            for _ in 0..MAX_DRAWS {
                let towers = random_towers(blocks, &mut rng);
                let x = rng.gen_range(0..blocks);
                if blocks_above(&towers, x) > 0 {
                    return clear_instance(blocks, &towers, x);
                }
            }
            Err(Error::InvalidParams("rejection sampling did not converge".into()))
        }
        DomainSpec::On { blocks } => {
            if blocks < 4 {
                return Err(Error::InvalidParams("on(x,y) needs at least 4 blocks".into()));
            }
            for _ in 0..MAX_DRAWS {
                let towers = random_towers(blocks, &mut rng);
                let x = rng.gen_range(0..blocks);
                let y = rng.gen_range(0..blocks);
                if on_condition(&towers, x, y) {
                    return on_instance(blocks, &towers, x, y);
                }
            }
            Err(Error::InvalidParams("rejection sampling did not converge".into()))
        }
        DomainSpec::Tower { blocks, x_at_bottom } => {
            if blocks < 4 {
                return Err(Error::InvalidParams("tower family needs at least 4 blocks".into()));
            }
            for _ in 0..MAX_DRAWS {
                let towers = random_towers(blocks, &mut rng);
                let x = rng.gen_range(0..blocks);
                if tower_condition(&towers, x) {
                    return tower_instance(blocks, &towers, x, x_at_bottom);
                }
            }
            Err(Error::InvalidParams("rejection sampling did not converge".into()))
        }
        DomainSpec::Grid { width, height } => {
            if width == 0 || height == 0 {
                return Err(Error::InvalidParams("grid dimensions must be at least 1".into()));
            }
            let mut cell = || (rng.gen_range(1..=width), rng.gen_range(1..=height));
            let start = cell();
            let goal = cell();
            grid_instance(width, height, start, goal)
        }
        DomainSpec::Slide { width, height } => {
            if width < 2 || height < 2 {
                return Err(Error::InvalidParams("sliding puzzles need at least 2x2 cells".into()));
            }
            let cells = width * height;
            let mut layout: Vec<usize> = (0..cells).collect();
            layout.shuffle(&mut rng);
            let tile = rng.gen_range(1..cells);
            let target = (rng.gen_range(1..=width), rng.gen_range(1..=height));
            slide_instance(width, height, &layout, tile, target)
        }
    }
}

/// A named, deterministic list of instances.
#[derive(Debug, Clone)]
pub struct Family {
    pub name: String,
    pub description: &'static str,
    pub instances: Vec<Instance>,
}

pub const FAMILY_NAMES: &[(&str, &str)] = &[
    ("qclear_le4", "every arm-empty Blocksworld configuration of 2-4 blocks, goal clear(x) for each x with blocks above"),
    ("qclear_sampled", "seeded clear(x) instances with 5-7 blocks, three per size"),
    ("qon_le5", "every arm-empty configuration of 4-5 blocks, goal on(x,y) with x, y in different towers and blocks above both"),
    ("qtower_le5", "every arm-empty configuration of 4-5 blocks and x with blocks above and below and a block outside its tower; goal: one tower, arm empty"),
    ("qtower_bottom_le5", "as qtower_le5, with x required on the table"),
    ("qmove_le6", "every start/goal pair on every grid up to 6x6"),
    ("qslide_small", "2x2, 2x3 and 3x2 puzzles, every tile and target cell, two seeded layouts each"),
    ("qslide_3x3", "500 seeded 3x3 puzzles with a random tile and target"),
];

pub fn family(name: &str) -> Result<Family> {
    let description = FAMILY_NAMES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| *d)
        .ok_or_else(|| Error::InvalidParams(format!("unknown family `{name}`")))?;
    let instances = match name {
        "qclear_le4" => {
            let mut out = Vec::new();
            for n in 2..=4 {
                for towers in tower_configurations(n) {
                    for x in 0..n {
                        if blocks_above(&towers, x) > 0 {
                            out.push(clear_instance(n, &towers, x)?);
                        }
                    }
                }
            }
            out
        }
        "qclear_sampled" => {
            let mut out = Vec::new();
            for blocks in 5..=7 {
                for seed in 0..3 {
                    out.push(generate_instance(DomainSpec::Clear { blocks }, seed)?);
                }
            }
            out
        }
        "qon_le5" => {
            let mut out = Vec::new();
            for n in 4..=5 {
                for towers in tower_configurations(n) {
                    for x in 0..n {
                        for y in 0..n {
                            if on_condition(&towers, x, y) {
                                out.push(on_instance(n, &towers, x, y)?);
                            }
                        }
                    }
                }
            }
            out
        }
        "qtower_le5" | "qtower_bottom_le5" => {
            let bottom = name == "qtower_bottom_le5";
            let mut out = Vec::new();
            for n in 4..=5 {
                for towers in tower_configurations(n) {
                    for x in 0..n {
                        if tower_condition(&towers, x) {
                            out.push(tower_instance(n, &towers, x, bottom)?);
                        }
                    }
                }
            }
            out
        }
        "qmove_le6" => {
            let mut out = Vec::new();
            for w in 1..=6 {
                for h in 1..=6 {
                    let cells: Vec<(usize, usize)> =
                        (1..=w).flat_map(|x| (1..=h).map(move |y| (x, y))).collect();
                    for &s in &cells {
                        for &g in &cells {
                            out.push(grid_instance(w, h, s, g)?);
                        }
                    }
                }
            }
            out
        }
        "qslide_small" => {
            let mut out = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            for (w, h) in [(2, 2), (2, 3), (3, 2)] {
                let cells = w * h;
                for tile in 1..cells {
                    for tx in 1..=w {
                        for ty in 1..=h {
                            for _ in 0..2 {
                                let mut layout: Vec<usize> = (0..cells).collect();
                                layout.shuffle(&mut rng);
                                out.push(slide_instance(w, h, &layout, tile, (tx, ty))?);
                            }
                        }
                    }
                }
            }
            out
        }
        "qslide_3x3" => (0..500)
            .map(|seed| generate_instance(DomainSpec::Slide { width: 3, height: 3 }, seed))
            .collect::<Result<Vec<_>>>()?,
        _ => unreachable!(),
    };
    Ok(Family {
        name: name.to_string(),
        description,
        instances,
    })
}
