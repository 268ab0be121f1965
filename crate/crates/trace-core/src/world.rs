//! Grid environment, motion rules, and the binary feasibility function.
//!
//! A transition is feasible when it passes both the kinematic check
//! (speed/heading deltas and displacement geometry) and the compliance
//! check (collision-free swept cells, lane alignment, yield speed caps).
//! Everything here is a pure function of immutable inputs.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{AgentState, Heading};

/// Zone label of a single grid cell. Lane cells carry a direction that
/// constrains the heading of any agent occupying them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellZone {
    Free,
    Obstacle,
    Restricted,
    Lane { direction: Heading },
}

impl CellZone {
    pub fn blocks(&self) -> bool {
        matches!(self, CellZone::Obstacle | CellZone::Restricted)
    }
}

/// Numeric motion and compliance bounds.
///
/// `max_heading_delta` applies only while moving; a stopped agent may
/// re-orient freely. Yield cells cap entry speed at `yield_speed_cap`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub max_speed: u8,
    pub max_speed_delta: u8,
    pub max_heading_delta: u8,
    pub lane_tolerance: u8,
    pub yield_speed_cap: u8,
    pub yield_cells: BTreeSet<(i32, i32)>,
}

impl Default for RuleSet {
    fn default() -> RuleSet {
        RuleSet {
            max_speed: 2,
            max_speed_delta: 1,
            max_heading_delta: 1,
            lane_tolerance: 1,
            yield_speed_cap: 1,
            yield_cells: BTreeSet::new(),
        }
    }
}

/// The static environment: a rectangular grid of zones plus the rule set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct EnvMap {
    width: i32,
    height: i32,
    cells: Vec<CellZone>,
    pub rules: RuleSet,
}

/// Serialized form of an `EnvMap`: the same row characters as the map
/// file format, so wire messages and map files stay interchangeable.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MapRepr {
    width: i32,
    height: i32,
    rows: Vec<String>,
    rules: RuleSet,
}

impl From<EnvMap> for MapRepr {
    fn from(env: EnvMap) -> MapRepr {
        let rows = (0..env.height).map(|y| env.row_chars(y)).collect();
        MapRepr {
            width: env.width,
            height: env.height,
            rows,
            rules: env.rules,
        }
    }
}

impl TryFrom<MapRepr> for EnvMap {
    type Error = String;

    fn try_from(repr: MapRepr) -> Result<EnvMap, String> {
        let mut env = EnvMap::from_rows(repr.width, repr.height, &repr.rows)
            .map_err(|e| e.to_string())?;
        // Yield membership is carried by the row characters; everything
        // else in the rule set comes from the explicit field.
        let yields = std::mem::take(&mut env.rules.yield_cells);
        env.rules = repr.rules;
        env.rules.yield_cells = yields;
        Ok(env)
    }
}

/// Parse failure with 1-based line/column coordinates.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

/// A parsed map file: the environment plus any `key = value` lines that
/// are not rule overrides, with their line numbers (scenario files put
/// their own parameters there).
#[derive(Debug, Clone)]
pub struct MapDocument {
    pub env: EnvMap,
    pub extra_params: Vec<(String, String, usize)>,
}

impl EnvMap {
    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && x < self.width && y < self.height
    }

    pub fn zone(&self, x: i32, y: i32) -> CellZone {
        debug_assert!(self.in_bounds(x, y));
        self.cells[(y * self.width + x) as usize]
    }

    pub fn is_yield(&self, x: i32, y: i32) -> bool {
        self.rules.yield_cells.contains(&(x, y))
    }

    /// Chebyshev diameter, useful as an "always consistent" noise radius.
    pub fn diagonal(&self) -> u32 {
        (self.width.max(self.height) - 1).max(0) as u32
    }

    fn row_chars(&self, y: i32) -> String {
        (0..self.width)
            .map(|x| {
                if self.is_yield(x, y) {
                    'Y'
                } else {
                    match self.zone(x, y) {
                        CellZone::Free => '.',
                        CellZone::Obstacle => '#',
                        CellZone::Restricted => 'x',
                        CellZone::Lane { direction } => match direction {
                            Heading::E => '>',
                            Heading::W => '<',
                            Heading::N => '^',
                            Heading::S => 'v',
                            // Diagonal lanes have no file glyph; they can
                            // only be built programmatically.
                            _ => '?',
                        },
                    }
                }
            })
            .collect()
    }

    fn from_rows(width: i32, height: i32, rows: &[String]) -> Result<EnvMap, ParseError> {
        if width < 1 || height < 1 {
            return Err(ParseError::new(1, 1, "map dimensions must be at least 1x1"));
        }
        if rows.len() != height as usize {
            return Err(ParseError::new(
                1 + rows.len(),
                1,
                format!("expected {} map rows, found {}", height, rows.len()),
            ));
        }
        let mut cells = Vec::with_capacity((width * height) as usize);
        let mut yields = BTreeSet::new();
        for (yi, row) in rows.iter().enumerate() {
            let chars: Vec<char> = row.chars().collect();
            if chars.len() != width as usize {
                return Err(ParseError::new(
                    yi + 2,
                    chars.len() + 1,
                    format!("row has {} cells, expected {}", chars.len(), width),
                ));
            }
            for (xi, ch) in chars.iter().enumerate() {
                let zone = match ch {
                    '.' => CellZone::Free,
                    '#' => CellZone::Obstacle,
                    'x' => CellZone::Restricted,
                    '>' => CellZone::Lane {
                        direction: Heading::E,
                    },
                    '<' => CellZone::Lane {
                        direction: Heading::W,
                    },
                    '^' => CellZone::Lane {
                        direction: Heading::N,
                    },
                    'v' => CellZone::Lane {
                        direction: Heading::S,
                    },
                    'Y' => {
                        yields.insert((xi as i32, yi as i32));
                        CellZone::Free
                    }
                    other => {
                        return Err(ParseError::new(
                            yi + 2,
                            xi + 1,
                            format!("unknown map character '{}'", other),
                        ))
                    }
                };
                cells.push(zone);
            }
        }
        let mut rules = RuleSet::default();
        rules.yield_cells = yields;
        Ok(EnvMap {
            width,
            height,
            cells,
            rules,
        })
    }

    /// Build directly from row strings using default rules; handy in tests.
    pub fn from_text_rows(rows: &[&str]) -> EnvMap {
        let owned: Vec<String> = rows.iter().map(|r| r.to_string()).collect();
        let width = owned.first().map(|r| r.chars().count()).unwrap_or(0) as i32;
        EnvMap::from_rows(width, owned.len() as i32, &owned).expect("valid literal map")
    }

    /// Parse the map file format: a `W H` header, `H` rows of `W` zone
    /// characters, then optional `key = value` lines. Recognized rule
    /// keys are applied; everything else is returned for the caller.
    pub fn parse(text: &str) -> Result<MapDocument, ParseError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| ParseError::new(1, 1, "empty map file"))?;
        let mut parts = header.split_whitespace();
        let width: i32 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ParseError::new(1, 1, "header must be `W H`"))?;
        let height: i32 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ParseError::new(1, 1, "header must be `W H`"))?;
        if parts.next().is_some() {
            return Err(ParseError::new(1, 1, "header must be exactly `W H`"));
        }

        let mut rows = Vec::with_capacity(height.max(0) as usize);
        for _ in 0..height {
            match lines.next() {
                Some((_, row)) => rows.push(row.to_string()),
                None => {
                    return Err(ParseError::new(
                        rows.len() + 2,
                        1,
                        format!("expected {} map rows, found {}", height, rows.len()),
                    ))
                }
            }
        }
        let mut env = EnvMap::from_rows(width, height, &rows)?;

        let mut extra = Vec::new();
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ParseError::new(line_no, 1, "expected `key = value` after the grid")
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let parse_u8 = |v: &str| -> Result<u8, ParseError> {
                v.parse()
                    .map_err(|_| ParseError::new(line_no, 1, format!("invalid value for {}", key)))
            };
            match key.as_str() {
                "max_speed" => env.rules.max_speed = parse_u8(&value)?,
                "max_speed_delta" => env.rules.max_speed_delta = parse_u8(&value)?,
                "max_heading_delta" => env.rules.max_heading_delta = parse_u8(&value)?,
                "lane_tolerance" => env.rules.lane_tolerance = parse_u8(&value)?,
                "yield_speed_cap" => env.rules.yield_speed_cap = parse_u8(&value)?,
                _ => extra.push((key, value, line_no)),
            }
        }
        Ok(MapDocument {
            env,
            extra_params: extra,
        })
    }

    /// Render back to the map file format (header, rows, rule overrides
    /// that differ from defaults).
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.width, self.height);
        for y in 0..self.height {
            out.push_str(&self.row_chars(y));
            out.push('\n');
        }
        let d = RuleSet::default();
        let mut kv = Vec::new();
        if self.rules.max_speed != d.max_speed {
            kv.push(format!("max_speed = {}", self.rules.max_speed));
        }
        if self.rules.max_speed_delta != d.max_speed_delta {
            kv.push(format!("max_speed_delta = {}", self.rules.max_speed_delta));
        }
        if self.rules.max_heading_delta != d.max_heading_delta {
            kv.push(format!("max_heading_delta = {}", self.rules.max_heading_delta));
        }
        if self.rules.lane_tolerance != d.lane_tolerance {
            kv.push(format!("lane_tolerance = {}", self.rules.lane_tolerance));
        }
        if self.rules.yield_speed_cap != d.yield_speed_cap {
            kv.push(format!("yield_speed_cap = {}", self.rules.yield_speed_cap));
        }
        if !kv.is_empty() {
            out.push('\n');
            for line in kv {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }
}

pub type SharedEnv = Arc<EnvMap>;

/// The first rule a rejected transition breaks, in check order:
/// bounds/collision, kinematics, swept-cell collision, lane alignment,
/// yield cap. `Observation` is produced by the engine's consistency
/// check, never by the world model itself.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Kinematic,
    Collision,
    Lane,
    Yield,
    Observation,
}

/// Kinematic admissibility of a single transition: speed within bounds
/// and changed by at most `max_speed_delta`; heading changed by at most
/// `max_heading_delta` while moving (free while stopped); and the
/// position displaced exactly `next.speed` cells along `next.heading`.
pub fn check_kinematic(prev: &AgentState, next: &AgentState, rules: &RuleSet) -> bool {
    if next.speed > rules.max_speed {
        return false;
    }
    if (next.speed as i16 - prev.speed as i16).abs() > rules.max_speed_delta as i16 {
        return false;
    }
    if prev.speed > 0 && prev.heading.wrapped_distance(next.heading) > rules.max_heading_delta {
        return false;
    }
    let expected = prev.displaced(next.heading, next.speed);
    (next.x, next.y) == (expected.x, expected.y)
}

/// Domain compliance of a single transition: every swept cell (the
/// intermediate cell of a speed-2 move plus the destination) is neither
/// obstacle nor restricted, the destination lane tolerates the new
/// heading, and yield cells cap the entry speed.
pub fn check_compliance(prev: &AgentState, next: &AgentState, env: &EnvMap) -> bool {
    swept_violation(prev, next, env).is_none() && lane_ok(next, env) && yield_ok(next, env)
}

fn swept_violation(prev: &AgentState, next: &AgentState, env: &EnvMap) -> Option<(i32, i32)> {
    let (dx, dy) = next.heading.delta();
    for step in 1..=next.speed.max(1) as i32 {
        let (cx, cy) = if next.speed == 0 {
            (next.x, next.y)
        } else {
            (prev.x + dx * step, prev.y + dy * step)
        };
        if !env.in_bounds(cx, cy) || env.zone(cx, cy).blocks() {
            return Some((cx, cy));
        }
    }
    None
}

fn lane_ok(next: &AgentState, env: &EnvMap) -> bool {
    match env.zone(next.x, next.y) {
        CellZone::Lane { direction } => {
            next.heading.wrapped_distance(direction) <= env.rules.lane_tolerance
        }
        _ => true,
    }
}

fn yield_ok(next: &AgentState, env: &EnvMap) -> bool {
    !env.is_yield(next.x, next.y) || next.speed <= env.rules.yield_speed_cap
}

/// The binary feasibility function over one transition: true iff the
/// move is kinematically admissible and domain compliant. Out-of-bounds
/// destinations are always infeasible.
pub fn feasibility(prev: &AgentState, next: &AgentState, env: &EnvMap) -> bool {
    classify_violation(prev, next, env).is_none()
}

/// Explain why a transition is rejected, or `None` when it is feasible.
/// Checks run in a fixed order so the reported kind is deterministic.
pub fn classify_violation(
    prev: &AgentState,
    next: &AgentState,
    env: &EnvMap,
) -> Option<ViolationKind> {
    if !env.in_bounds(prev.x, prev.y) || !env.in_bounds(next.x, next.y) {
        return Some(ViolationKind::Collision);
    }
    if !check_kinematic(prev, next, &env.rules) {
        return Some(ViolationKind::Kinematic);
    }
    if swept_violation(prev, next, env).is_some() {
        return Some(ViolationKind::Collision);
    }
    if !lane_ok(next, env) {
        return Some(ViolationKind::Lane);
    }
    if !yield_ok(next, env) {
        return Some(ViolationKind::Yield);
    }
    None
}

/// Every state transition is feasible — the trajectory-level safety
/// predicate used at engine boundaries.
pub fn trajectory_feasible(traj: &crate::state::Trajectory, env: &EnvMap) -> bool {
    traj.transitions().all(|(a, b)| feasibility(a, b, env))
}

/// Exactly the set `{ next : feasibility(state, next, env) }`, built by
/// iterating every (heading, speed) pair inside the kinematic deltas.
/// Output is sorted by (heading, speed).
pub fn successors(state: &AgentState, env: &EnvMap) -> Vec<AgentState> {
    let rules = &env.rules;
    let mut out = Vec::new();
    for heading in crate::state::ALL_HEADINGS {
        if state.speed > 0 && state.heading.wrapped_distance(heading) > rules.max_heading_delta {
            continue;
        }
        let lo = state.speed.saturating_sub(rules.max_speed_delta);
        let hi = (state.speed + rules.max_speed_delta).min(rules.max_speed);
        for speed in lo..=hi {
            let next = state.displaced(heading, speed);
            if feasibility(state, &next, env) {
                out.push(next);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Heading::*;
    use proptest::prelude::*;

    fn open(w: usize, h: usize) -> EnvMap {
        let row = ".".repeat(w);
        let rows: Vec<&str> = (0..h).map(|_| row.as_str()).collect();
        EnvMap::from_text_rows(&rows)
    }

    fn st(x: i32, y: i32, h: Heading, s: u8) -> AgentState {
        AgentState::new(x, y, h, s)
    }

    #[test]
    fn kinematic_straight_unit_step() {
        let env = open(10, 10);
        assert!(check_kinematic(
            &st(5, 5, E, 1),
            &st(6, 5, E, 1),
            &env.rules
        ));
    }

    #[test]
    fn kinematic_rejects_speed_jump() {
        let env = open(10, 10);
        // 0 -> 2 exceeds the acceleration bound.
        assert!(!check_kinematic(
            &st(5, 5, E, 0),
            &st(7, 5, E, 2),
            &env.rules
        ));
    }

    #[test]
    fn kinematic_stop_in_place() {
        let env = open(10, 10);
        assert!(check_kinematic(
            &st(5, 5, E, 1),
            &st(5, 5, E, 0),
            &env.rules
        ));
        // Speed 0 with displacement is not a stop.
        assert!(!check_kinematic(
            &st(5, 5, E, 1),
            &st(6, 5, E, 0),
            &env.rules
        ));
    }

    #[test]
    fn kinematic_free_reorientation_when_stopped() {
        let env = open(10, 10);
        assert!(check_kinematic(
            &st(5, 5, E, 0),
            &st(5, 5, W, 0),
            &env.rules
        ));
        assert!(!check_kinematic(
            &st(5, 5, E, 1),
            &st(5, 4, N, 1),
            &env.rules
        ));
    }

    #[test]
    fn compliance_rejects_obstacle_destination() {
        let env = EnvMap::from_text_rows(&["...", ".#.", "..."]);
        assert!(!check_compliance(&st(0, 1, E, 1), &st(1, 1, E, 1), &env));
    }

    #[test]
    fn compliance_checks_speed2_midpoint() {
        // Midpoint cell (2,1) is restricted; destination (3,1) is free.
        let env = EnvMap::from_text_rows(&["....", ".x..", "...."]);
        let prev = st(1, 0, E, 1);
        let next = prev.displaced(SE, 2); // passes through (2,1)
        assert_eq!(next.pos(), (3, 2));
        let env2 = EnvMap::from_text_rows(&["....", "..x.", "...."]);
        assert!(!check_compliance(&prev, &next, &env2));
        // Same move without the restricted midpoint passes.
        assert!(check_compliance(&prev, &next, &env));
    }

    #[test]
    fn compliance_rejects_cross_lane_heading() {
        let env = EnvMap::from_text_rows(&["...", ">>>", "..."]);
        // Heading N in an E lane: 2 units away, beyond the +/-1 tolerance.
        assert!(!check_compliance(&st(1, 2, N, 1), &st(1, 1, N, 1), &env));
        // Heading NE is within tolerance.
        assert!(check_compliance(&st(0, 2, NE, 1), &st(1, 1, NE, 1), &env));
    }

    #[test]
    fn yield_cells_cap_entry_speed() {
        let doc = EnvMap::parse("3 1\n.Y.\n").unwrap();
        let env = doc.env;
        assert!(env.is_yield(1, 0));
        assert!(!check_compliance(&st(0, 0, E, 1), &st(2, 0, E, 2), &env));
        assert!(check_compliance(&st(0, 0, E, 0), &st(1, 0, E, 1), &env));
    }

    #[test]
    fn feasibility_is_a_conjunction() {
        let env = EnvMap::from_text_rows(&["..#", "...", "..."]);
        // Kinematically fine but collides.
        assert!(check_kinematic(
            &st(1, 0, E, 1),
            &st(2, 0, E, 1),
            &env.rules
        ));
        assert!(!feasibility(&st(1, 0, E, 1), &st(2, 0, E, 1), &env));
        assert!(feasibility(&st(1, 1, E, 1), &st(2, 1, E, 1), &env));
        // Out of bounds is infeasible regardless.
        assert!(!feasibility(&st(2, 1, E, 1), &st(3, 1, E, 1), &env));
    }

    #[test]
    fn violation_kinds_follow_check_order() {
        let env = EnvMap::from_text_rows(&["..#", "...", ">>>"]);
        assert_eq!(
            classify_violation(&st(1, 1, E, 1), &st(5, 1, E, 1), &env),
            Some(ViolationKind::Collision)
        );
        assert_eq!(
            classify_violation(&st(1, 0, E, 0), &st(3, 0, E, 2), &env),
            Some(ViolationKind::Kinematic)
        );
        assert_eq!(
            classify_violation(&st(1, 0, E, 1), &st(2, 0, E, 1), &env),
            Some(ViolationKind::Collision)
        );
        assert_eq!(
            classify_violation(&st(1, 1, S, 1), &st(1, 2, S, 1), &env),
            Some(ViolationKind::Lane)
        );
        assert_eq!(classify_violation(&st(0, 1, E, 1), &st(1, 1, E, 1), &env), None);
    }

    #[test]
    fn successors_of_enclosed_state_are_stationary() {
        let env = EnvMap::from_text_rows(&["###", "#.#", "###"]);
        let s = st(1, 1, E, 0);
        let succ = successors(&s, &env);
        // Brute force over every (heading, speed) candidate pair.
        let mut expected = Vec::new();
        for h in crate::state::ALL_HEADINGS {
            for speed in 0..=2u8 {
                let next = s.displaced(h, speed);
                if feasibility(&s, &next, &env) {
                    expected.push(next);
                }
            }
        }
        expected.sort();
        assert_eq!(succ, expected);
        assert!(!succ.is_empty());
        assert!(succ.iter().all(|n| n.speed == 0 && n.pos() == (1, 1)));
        assert_eq!(succ.len(), 8);
    }

    #[test]
    fn successors_open_interior_matches_exhaustive_filter() {
        let env = open(9, 9);
        let s = st(4, 4, E, 1);
        let succ = successors(&s, &env);
        let naive = naive_successors(&s, &env);
        assert_eq!(succ, naive);
        // Headings NE/E/SE at speeds 0..2 all land in free space: 9 states.
        assert_eq!(succ.len(), 9);
    }

    /// Independent oracle: filter every state in (and slightly beyond)
    /// the map against the feasibility predicate directly.
    fn naive_successors(s: &AgentState, env: &EnvMap) -> Vec<AgentState> {
        let mut out = Vec::new();
        for x in -2..env.width() + 2 {
            for y in -2..env.height() + 2 {
                for h in crate::state::ALL_HEADINGS {
                    for speed in 0..=3u8 {
                        let cand = AgentState::new(x, y, h, speed);
                        if feasibility(s, &cand, env) {
                            out.push(cand);
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn map_text_round_trip() {
        let text = "4 3\n.>.Y\n.#..\nx..v\n\nmax_speed = 1\n";
        let doc = EnvMap::parse(text).unwrap();
        assert_eq!(doc.env.rules.max_speed, 1);
        assert_eq!(doc.env.zone(1, 0), CellZone::Lane { direction: E });
        assert!(doc.env.is_yield(3, 0));
        let rendered = doc.env.to_text();
        let reparsed = EnvMap::parse(&rendered).unwrap();
        assert_eq!(reparsed.env, doc.env);
    }

    #[test]
    fn parse_reports_line_and_column() {
        let err = EnvMap::parse("3 2\n...\n..Q\n").unwrap_err();
        assert_eq!((err.line, err.col), (3, 3));
        let err = EnvMap::parse("3 2\n...\n").unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn unknown_params_are_passed_through() {
        let doc = EnvMap::parse("2 1\n..\nanchor = 0 0 E 1\n").unwrap();
        assert_eq!(doc.extra_params.len(), 1);
        assert_eq!(doc.extra_params[0].0, "anchor");
    }

    fn arb_map() -> impl Strategy<Value = EnvMap> {
        (3usize..=10, 3usize..=10).prop_flat_map(|(w, h)| {
            proptest::collection::vec(
                proptest::sample::select(vec!['.', '.', '.', '#', 'x', '>', 'v', 'Y']),
                w * h,
            )
            .prop_map(move |chars| {
                let rows: Vec<String> = chars
                    .chunks(w)
                    .map(|c| c.iter().collect::<String>())
                    .collect();
                EnvMap::from_rows(w as i32, h as i32, &rows).unwrap()
            })
        })
    }

    proptest! {
        // successors() must equal a naive filter over all candidate states.
        #[test]
        fn successors_equal_naive_filter(env in arb_map(), x in 0i32..10, y in 0i32..10,
                                         h in 0u8..8, speed in 0u8..3) {
            prop_assume!(env.in_bounds(x, y));
            let s = AgentState::new(x, y, Heading::from_index(h), speed);
            let fast = successors(&s, &env);
            let naive = naive_successors(&s, &env);
            prop_assert_eq!(fast, naive);
        }

        // Kinematic bound: successors never change speed by more than one level.
        #[test]
        fn successors_respect_speed_delta(env in arb_map(), x in 0i32..10, y in 0i32..10,
                                          h in 0u8..8, speed in 0u8..3) {
            prop_assume!(env.in_bounds(x, y));
            let s = AgentState::new(x, y, Heading::from_index(h), speed);
            for n in successors(&s, &env) {
                prop_assert!((n.speed as i16 - s.speed as i16).abs() <= 1);
            }
        }
    }
}
