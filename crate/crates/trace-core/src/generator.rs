//! Hypothesis generators: the abstraction standing in for the
//! vision-language proposer, plus the deterministic scripted policy.
//!
//! The scripted generator ranks candidate next states with a
//! conservatism bias (heading/speed persistence, lane alignment,
//! obstacle avoidance) and deliberately reserves a configurable slice
//! of each batch for near-miss infeasible candidates so the downstream
//! filter has something to reject. Feedback flows back in two forms:
//! accepted offset motifs (boosting candidates that repeat a discovered
//! maneuver) and rejection notes (suppressing candidates that would
//! repeat a recorded violation). Emission decisions hash only the run
//! seed and the states involved — never the iteration counter — so a
//! candidate once suppressed stays suppressed as notes accumulate.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critic::StateOffset;
use crate::rng;
use crate::state::{AgentState, Observation, ALL_HEADINGS};
use crate::world::{classify_violation, SharedEnv, ViolationKind};

/// Where an accepted maneuver pattern came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotifSource {
    Critic,
    Generator,
}

/// A per-step offset pattern the loop accepted; the scripted generator
/// treats the non-zero (heading, speed) adjustments as maneuvers worth
/// proposing again.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetMotif {
    pub deltas: Vec<StateOffset>,
    pub source: MotifSource,
}

/// Record of one rejected candidate: which rule it broke first and at
/// which step of the tree it happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionNote {
    pub violation_kind: ViolationKind,
    pub step_index: usize,
}

/// Context handed to the generator on every call: the environment, the
/// current anchor estimate, the latest measurement, and the accumulated
/// feedback. `excluded` is local plumbing for the guided-iteration
/// baseline and never crosses the wire.
#[derive(Debug, Clone)]
pub struct GeneratorContext {
    pub env: SharedEnv,
    pub anchor: AgentState,
    pub last_obs: Observation,
    pub accepted_motifs: Vec<OffsetMotif>,
    pub rejection_notes: Vec<RejectionNote>,
    pub iteration: u32,
    pub excluded: BTreeSet<AgentState>,
}

impl GeneratorContext {
    pub fn new(env: SharedEnv, anchor: AgentState, last_obs: Observation) -> GeneratorContext {
        GeneratorContext {
            env,
            anchor,
            last_obs,
            accepted_motifs: Vec::new(),
            rejection_notes: Vec::new(),
            iteration: 0,
            excluded: BTreeSet::new(),
        }
    }

    pub fn clear_feedback(&mut self) {
        self.accepted_motifs.clear();
        self.rejection_notes.clear();
    }
}

/// Raised when an external wire-protocol peer times out, dies, or sends
/// a malformed record. The scripted generator never fails.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("external generator failure: {reason}")]
pub struct ExternalGeneratorFailure {
    pub reason: String,
}

impl ExternalGeneratorFailure {
    pub fn new(reason: impl Into<String>) -> ExternalGeneratorFailure {
        ExternalGeneratorFailure {
            reason: reason.into(),
        }
    }
}

/// Anything that can propose candidate next states for a given state.
/// Candidates are not guaranteed feasible; the engine filters them.
pub trait HypothesisGenerator {
    fn propose(
        &mut self,
        ctx: &GeneratorContext,
        state: &AgentState,
        k: usize,
    ) -> Result<Vec<AgentState>, ExternalGeneratorFailure>;
}

/// Fixed scoring weights of the scripted policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedWeights {
    /// w1 — reward for keeping the current heading.
    pub heading_persistence: f64,
    /// w2 — reward for keeping the current speed.
    pub speed_persistence: f64,
    /// w3 — reward for sitting aligned inside a lane cell.
    pub lane_alignment: f64,
    /// w4 — penalty scaling with blocked neighborhood around the target cell.
    pub obstacle_proximity: f64,
    /// w5 — bonus when the candidate repeats an accepted motif's maneuver.
    pub motif_bonus: f64,
    /// w6 — penalty when the candidate would repeat a noted violation.
    pub note_penalty: f64,
    /// Damping of near-miss emission as matching rejection notes pile up.
    pub note_damping: f64,
}

impl Default for ScriptedWeights {
    fn default() -> ScriptedWeights {
        ScriptedWeights {
            heading_persistence: 1.0,
            speed_persistence: 0.6,
            lane_alignment: 0.8,
            obstacle_proximity: 0.7,
            motif_bonus: 0.5,
            note_penalty: 0.75,
            note_damping: 0.02,
        }
    }
}

/// Deterministic stand-in for the vision-language proposer.
#[derive(Debug, Clone)]
pub struct ScriptedGenerator {
    pub seed: u64,
    /// Fraction of each batch reserved for near-miss infeasible candidates.
    pub miss_rate: f64,
    pub weights: ScriptedWeights,
}

impl ScriptedGenerator {
    pub fn new(seed: u64, miss_rate: f64) -> ScriptedGenerator {
        ScriptedGenerator {
            seed,
            miss_rate,
            weights: ScriptedWeights::default(),
        }
    }

    /// Candidate next states the policy will consider: every (heading,
    /// speed) combination within two increments of the current motion,
    /// displaced accordingly. Wider than the kinematic envelope on
    /// purpose — the overshoot supplies the near-miss pool. Off-map
    /// results are dropped.
    fn candidate_pool(&self, ctx: &GeneratorContext, state: &AgentState) -> Vec<AgentState> {
        let max_speed = ctx.env.rules.max_speed;
        let mut pool = BTreeSet::new();
        for heading in ALL_HEADINGS {
            if state.speed > 0 && state.heading.wrapped_distance(heading) > 2 {
                continue;
            }
            for ds in -2i16..=2 {
                let speed = (state.speed as i16 + ds).clamp(0, max_speed as i16) as u8;
                let cand = state.displaced(heading, speed);
                if ctx.env.in_bounds(cand.x, cand.y) && !ctx.excluded.contains(&cand) {
                    pool.insert(cand);
                }
            }
        }
        pool.into_iter().collect()
    }

    /// Conservatism-biased score; higher is better. The feedback terms
    /// use maneuver-level matching: a candidate extends a motif when
    /// some non-zero motif step prescribes the same (heading, speed)
    /// adjustment, and repeats a note when its first violation kind was
    /// already recorded.
    pub fn scripted_rank(
        &self,
        state: &AgentState,
        candidate: &AgentState,
        ctx: &GeneratorContext,
    ) -> f64 {
        let w = &self.weights;
        let env = &*ctx.env;
        let heading_term = 1.0 - state.heading.wrapped_distance(candidate.heading) as f64 / 4.0;
        let speed_term = 1.0
            - (candidate.speed as f64 - state.speed as f64).abs()
                / env.rules.max_speed.max(1) as f64;
        let lane_term = match env.in_bounds(candidate.x, candidate.y) {
            true => match env.zone(candidate.x, candidate.y) {
                crate::world::CellZone::Lane { direction }
                    if candidate.heading.wrapped_distance(direction)
                        <= env.rules.lane_tolerance =>
                {
                    1.0
                }
                _ => 0.0,
            },
            false => 0.0,
        };
        let proximity = obstacle_proximity(env, candidate);
        let motif_term = if self.matches_motif(state, candidate, ctx) {
            1.0
        } else {
            0.0
        };
        let note_term = if self.matching_notes(state, candidate, ctx) > 0 {
            1.0
        } else {
            0.0
        };
        w.heading_persistence * heading_term + w.speed_persistence * speed_term
            + w.lane_alignment * lane_term
            - w.obstacle_proximity * proximity
            + w.motif_bonus * motif_term
            - w.note_penalty * note_term
    }

    fn matches_motif(&self, state: &AgentState, candidate: &AgentState, ctx: &GeneratorContext) -> bool {
        let turn = state.heading.signed_distance_to(candidate.heading);
        let dspeed = candidate.speed as i16 - state.speed as i16;
        ctx.accepted_motifs.iter().any(|m| {
            m.deltas.iter().any(|d| {
                (d.dheading != 0 || d.dspeed != 0)
                    && d.dheading as i32 == turn
                    && d.dspeed as i16 == dspeed
            })
        })
    }

    fn matching_notes(&self, state: &AgentState, candidate: &AgentState, ctx: &GeneratorContext) -> usize {
        match classify_violation(state, candidate, &ctx.env) {
            None => 0,
            Some(kind) => ctx
                .rejection_notes
                .iter()
                .filter(|n| n.violation_kind == kind)
                .count(),
        }
    }

    fn sort_pool(&self, pool: &mut Vec<(f64, AgentState)>) {
        pool.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .expect("finite scores")
                .then_with(|| a.1.heading.index().cmp(&b.1.heading.index()))
                .then_with(|| a.1.speed.cmp(&b.1.speed))
                .then_with(|| a.1.cmp(&b.1))
        });
    }
}

/// Fraction of the 8-neighborhood of the candidate cell that is blocked
/// or off-map; 1.0 when the cell itself blocks.
fn obstacle_proximity(env: &crate::world::EnvMap, candidate: &AgentState) -> f64 {
    if !env.in_bounds(candidate.x, candidate.y) || env.zone(candidate.x, candidate.y).blocks() {
        return 1.0;
    }
    let mut blocked = 0;
    for dy in -1..=1 {
        for dx in -1..=1 {
            if (dx, dy) == (0, 0) {
                continue;
            }
            let (nx, ny) = (candidate.x + dx, candidate.y + dy);
            if !env.in_bounds(nx, ny) || env.zone(nx, ny).blocks() {
                blocked += 1;
            }
        }
    }
    blocked as f64 / 8.0
}

impl HypothesisGenerator for ScriptedGenerator {
    /// Deterministic given (ctx, state, k, seed). The batch is the
    /// top-ranked feasible candidates, with `round(k * miss_rate)` slots
    /// reserved for the best-ranked near-miss infeasible candidates.
    /// Each near-miss slot is kept only while its violation kind is
    /// still rarely noted: emission requires a per-(state, candidate)
    /// hash draw below `1 / (1 + note_damping * matching_notes)`, so the
    /// near-miss flow dries up as notes accumulate.
    fn propose(
        &mut self,
        ctx: &GeneratorContext,
        state: &AgentState,
        k: usize,
    ) -> Result<Vec<AgentState>, ExternalGeneratorFailure> {
        if k == 0 {
            return Ok(Vec::new());
        }
        let pool = self.candidate_pool(ctx, state);
        let mut good = Vec::new();
        let mut bad = Vec::new();
        for cand in pool {
            let score = self.scripted_rank(state, &cand, ctx);
            match classify_violation(state, &cand, &ctx.env) {
                None => good.push((score, cand)),
                Some(_) => bad.push((score, cand)),
            }
        }
        self.sort_pool(&mut good);
        self.sort_pool(&mut bad);

        let quota = (k as f64 * self.miss_rate + 0.5).floor() as usize;
        let mut emitted_bad = Vec::new();
        for (score, cand) in &bad {
            if emitted_bad.len() >= quota {
                break;
            }
            let matching = self.matching_notes(state, cand, ctx);
            let keep_p = 1.0 / (1.0 + self.weights.note_damping * matching as f64);
            let mut words = vec![0xBAD5107u64];
            words.extend_from_slice(&rng::state_words(state));
            words.extend_from_slice(&rng::state_words(cand));
            let u = rng::unit_from_hash(rng::mix(self.seed, &words));
            if u >= keep_p {
                // The policy only trusts its best near-misses; once
                // feedback kills the front of the queue it stops
                // spending slots on worse ones.
                break;
            }
            emitted_bad.push((*score, *cand));
        }

        let n_good = k - emitted_bad.len();
        let mut batch: Vec<(f64, AgentState)> = good.into_iter().take(n_good).collect();
        batch.extend(emitted_bad);
        self.sort_pool(&mut batch);
        Ok(batch.into_iter().map(|(_, c)| c).collect())
    }
}
