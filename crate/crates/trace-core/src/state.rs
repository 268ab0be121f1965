//! Discrete agent states, trajectories, and sparse observations.
//!
//! The target agent lives on a grid with 8 compass headings (45° apart)
//! and three speed levels (0, 1, 2 cells per step). Trajectories are
//! state sequences over consecutive time steps; observations are noisy
//! position measurements with a Chebyshev consistency radius.

use serde::{Deserialize, Serialize};

/// One of 8 compass directions, 45° apart. Grid y grows southward
/// (row order of the map file), so `N` displaces by (0, -1).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Heading {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

pub const ALL_HEADINGS: [Heading; 8] = [
    Heading::N,
    Heading::NE,
    Heading::E,
    Heading::SE,
    Heading::S,
    Heading::SW,
    Heading::W,
    Heading::NW,
];

impl Heading {
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Heading {
        ALL_HEADINGS[(i % 8) as usize]
    }

    /// Unit displacement (dx, dy) for one cell of travel along this heading.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::N => (0, -1),
            Heading::NE => (1, -1),
            Heading::E => (1, 0),
            Heading::SE => (1, 1),
            Heading::S => (0, 1),
            Heading::SW => (-1, 1),
            Heading::W => (-1, 0),
            Heading::NW => (-1, -1),
        }
    }

    /// Rotate by `steps` 45° increments (positive = clockwise), wrapping mod 8.
    pub fn rotate(self, steps: i32) -> Heading {
        Heading::from_index((self.index() as i32 + steps).rem_euclid(8) as u8)
    }

    /// Smallest number of 45° increments between two headings (0..=4).
    pub fn wrapped_distance(self, other: Heading) -> u8 {
        let d = (self.index() as i32 - other.index() as i32).rem_euclid(8);
        d.min(8 - d) as u8
    }

    /// Signed rotation from `self` to `other` in the range -3..=4.
    pub fn signed_distance_to(self, other: Heading) -> i32 {
        let d = (other.index() as i32 - self.index() as i32).rem_euclid(8);
        if d > 4 {
            d - 8
        } else {
            d
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Heading::N => "N",
            Heading::NE => "NE",
            Heading::E => "E",
            Heading::SE => "SE",
            Heading::S => "S",
            Heading::SW => "SW",
            Heading::W => "W",
            Heading::NW => "NW",
        }
    }

    pub fn parse(s: &str) -> Option<Heading> {
        let h = match s {
            "N" => Heading::N,
            "NE" => Heading::NE,
            "E" => Heading::E,
            "SE" => Heading::SE,
            "S" => Heading::S,
            "SW" => Heading::SW,
            "W" => Heading::W,
            "NW" => Heading::NW,
            _ => return None,
        };
        Some(h)
    }
}

/// Full discrete state of the target agent at one time step.
///
/// Positions are signed so that perturbed states may leave the map;
/// such states are simply infeasible when checked against an `EnvMap`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct AgentState {
    pub x: i32,
    pub y: i32,
    pub heading: Heading,
    pub speed: u8,
}

impl AgentState {
    pub fn new(x: i32, y: i32, heading: Heading, speed: u8) -> AgentState {
        AgentState {
            x,
            y,
            heading,
            speed,
        }
    }

    pub fn pos(&self) -> (i32, i32) {
        (self.x, self.y)
    }

    /// The state reached by travelling `speed` cells along `heading`
    /// from this position.
    pub fn displaced(&self, heading: Heading, speed: u8) -> AgentState {
        let (dx, dy) = heading.delta();
        AgentState {
            x: self.x + dx * speed as i32,
            y: self.y + dy * speed as i32,
            heading,
            speed,
        }
    }
}

/// Chebyshev (chessboard) distance between two cells.
pub fn chebyshev(a: (i32, i32), b: (i32, i32)) -> u32 {
    ((a.0 - b.0).abs()).max((a.1 - b.1).abs()) as u32
}

/// An intermittent position measurement of the target agent.
///
/// A trajectory is consistent with the observation when its state at
/// `time` (if any) lies within `noise_radius` Chebyshev cells of the
/// measured position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub time: u32,
    pub measured_x: i32,
    pub measured_y: i32,
    pub noise_radius: u32,
}

impl Observation {
    pub fn new(time: u32, measured_x: i32, measured_y: i32, noise_radius: u32) -> Observation {
        Observation {
            time,
            measured_x,
            measured_y,
            noise_radius,
        }
    }

    pub fn measured_pos(&self) -> (i32, i32) {
        (self.measured_x, self.measured_y)
    }

    /// True when a state occupying `pos` at `self.time` agrees with this
    /// measurement.
    pub fn admits(&self, pos: (i32, i32)) -> bool {
        chebyshev(pos, self.measured_pos()) <= self.noise_radius
    }
}

/// A finite sequence of states over consecutive time steps.
///
/// `states[i]` is the state at time `start_time + i`. Always non-empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Trajectory {
    pub start_time: u32,
    pub states: Vec<AgentState>,
}

impl Trajectory {
    /// Panics if `states` is empty; trajectories always hold at least the
    /// anchor state.
    pub fn new(start_time: u32, states: Vec<AgentState>) -> Trajectory {
        assert!(!states.is_empty(), "trajectory must be non-empty");
        Trajectory { start_time, states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end_time(&self) -> u32 {
        self.start_time + (self.states.len() as u32 - 1)
    }

    pub fn state_at(&self, time: u32) -> Option<&AgentState> {
        if time < self.start_time {
            return None;
        }
        self.states.get((time - self.start_time) as usize)
    }

    pub fn first(&self) -> &AgentState {
        &self.states[0]
    }

    pub fn last(&self) -> &AgentState {
        self.states.last().expect("non-empty")
    }

    /// Consecutive state pairs, in time order.
    pub fn transitions(&self) -> impl Iterator<Item = (&AgentState, &AgentState)> {
        self.states.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// Index of the first state differing from `other`, if any.
    pub fn first_divergence(&self, other: &Trajectory) -> Option<usize> {
        self.states
            .iter()
            .zip(other.states.iter())
            .position(|(a, b)| a != b)
            .or_else(|| {
                if self.states.len() != other.states.len() {
                    Some(self.states.len().min(other.states.len()))
                } else {
                    None
                }
            })
    }
}

/// Exact structural equality: same start time, same length, identical
/// state sequences field by field. This is the identity used when
/// intersecting hypothesis sets with the ground-truth set.
pub fn trajectory_equals(a: &Trajectory, b: &Trajectory) -> bool {
    a == b
}

/// True when `obs` does not contradict `traj`: either the observation
/// time falls outside the trajectory's span, or the trajectory position
/// at that time lies within the noise radius of the measurement.
pub fn consistent_with(traj: &Trajectory, obs: &Observation) -> bool {
    match traj.state_at(obs.time) {
        None => true,
        Some(s) => obs.admits(s.pos()),
    }
}
