//! Counterfactual exploration around baseline trajectories.
//!
//! The critic draws per-step state offsets from an adaptive proposal
//! distribution, applies them to a baseline, scores the result with
//! `alpha * l_feas + beta * l_div`, and keeps only fully feasible,
//! observation-consistent counterfactuals. Feasibility violations are a
//! hard disqualifier; the divergence term only ranks survivors. When the
//! offset space is no larger than the sample budget the search
//! enumerates it exhaustively, which is what the brute-force comparison
//! tests rely on.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::rng;
use crate::state::{chebyshev, consistent_with, AgentState, Observation, Trajectory};
use crate::world::{feasibility, EnvMap};

/// Per-step perturbation of one state, each component in {-1, 0, +1}.
/// Headings wrap mod 8; speeds clamp to the legal range.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct StateOffset {
    pub dx: i8,
    pub dy: i8,
    pub dheading: i8,
    pub dspeed: i8,
}

impl StateOffset {
    pub const ZERO: StateOffset = StateOffset {
        dx: 0,
        dy: 0,
        dheading: 0,
        dspeed: 0,
    };

    pub fn is_zero(&self) -> bool {
        *self == StateOffset::ZERO
    }

    fn components(&self) -> [i8; 4] {
        [self.dx, self.dy, self.dheading, self.dspeed]
    }

    fn from_components(c: [i8; 4]) -> StateOffset {
        StateOffset {
            dx: c[0],
            dy: c[1],
            dheading: c[2],
            dspeed: c[3],
        }
    }
}

/// One offset per step of the perturbed suffix (everything after the
/// anchor state).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OffsetSequence {
    pub deltas: Vec<StateOffset>,
}

impl OffsetSequence {
    pub fn zero(len: usize) -> OffsetSequence {
        OffsetSequence {
            deltas: vec![StateOffset::ZERO; len],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.deltas.iter().all(StateOffset::is_zero)
    }
}

/// Score breakdown for one counterfactual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticScore {
    pub l_feas: f64,
    pub l_div: f64,
    pub total: f64,
}

impl CriticScore {
    pub fn new(alpha: f64, beta: f64, l_feas: f64, l_div: f64) -> CriticScore {
        CriticScore {
            l_feas,
            l_div,
            total: alpha * l_feas + beta * l_div,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CriticError {
    #[error("offset sequence length {offsets} does not match suffix length {suffix}")]
    LengthMismatch { offsets: usize, suffix: usize },
}

const OFFSET_VALUES: [i8; 3] = [-1, 0, 1];

/// Categorical weights over {-1, 0, +1} for each of the four offset
/// components at each step. Starts uniform; re-estimated from accepted
/// offsets with add-one smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalWeights {
    /// `steps[i][c][v]`: weight of value `OFFSET_VALUES[v]` for component
    /// `c` (dx, dy, dheading, dspeed) at suffix step `i`.
    pub steps: Vec<[[f64; 3]; 4]>,
}

impl ProposalWeights {
    pub fn uniform(depth: usize) -> ProposalWeights {
        ProposalWeights {
            steps: vec![[[1.0 / 3.0; 3]; 4]; depth.max(1)],
        }
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    fn step_weights(&self, i: usize) -> &[[f64; 3]; 4] {
        &self.steps[i.min(self.steps.len() - 1)]
    }

    /// Draw one offset sequence of length `len`.
    pub fn sample<R: Rng>(&self, len: usize, rng: &mut R) -> OffsetSequence {
        let deltas = (0..len)
            .map(|i| {
                let w = self.step_weights(i);
                let mut c = [0i8; 4];
                for (comp, slot) in c.iter_mut().enumerate() {
                    let u: f64 = rng.gen::<f64>() * (w[comp][0] + w[comp][1] + w[comp][2]);
                    *slot = if u < w[comp][0] {
                        OFFSET_VALUES[0]
                    } else if u < w[comp][0] + w[comp][1] {
                        OFFSET_VALUES[1]
                    } else {
                        OFFSET_VALUES[2]
                    };
                }
                StateOffset::from_components(c)
            })
            .collect();
        OffsetSequence { deltas }
    }
}

/// Re-estimate the proposal distribution from the accepted offsets.
///
/// Each (step, component) categorical is refit by counting accepted
/// values with add-one smoothing, so an empty batch yields the uniform
/// distribution and weights always sum to one per component.
pub fn adapt_proposal(proposal: &ProposalWeights, accepted: &[OffsetSequence]) -> ProposalWeights {
    let depth = proposal.depth();
    let mut steps = Vec::with_capacity(depth);
    for i in 0..depth {
        let mut comp_weights = [[0.0f64; 3]; 4];
        for (comp, weights) in comp_weights.iter_mut().enumerate() {
            let mut counts = [0usize; 3];
            let mut total = 0usize;
            for seq in accepted {
                // Deeper steps of a run's offsets fold onto the last
                // weight slot, mirroring sampling.
                for (j, delta) in seq.deltas.iter().enumerate() {
                    if j.min(depth - 1) == i {
                        let v = delta.components()[comp];
                        let idx = OFFSET_VALUES.iter().position(|&o| o == v).unwrap_or(1);
                        counts[idx] += 1;
                        total += 1;
                    }
                }
            }
            for v in 0..3 {
                weights[v] = (counts[v] + 1) as f64 / (total + 3) as f64;
            }
        }
        steps.push(comp_weights);
    }
    ProposalWeights { steps }
}

/// Apply per-step offsets to the suffix of `baseline` (the start state
/// is never perturbed). Positions are shifted without clamping —
/// off-map results are kept and later scored infeasible; headings wrap
/// mod 8 and speeds clamp to [0, max].
pub fn apply_offsets(
    baseline: &Trajectory,
    offsets: &OffsetSequence,
    max_speed: u8,
) -> Result<Trajectory, CriticError> {
    let suffix = baseline.len() - 1;
    if offsets.deltas.len() != suffix {
        return Err(CriticError::LengthMismatch {
            offsets: offsets.deltas.len(),
            suffix,
        });
    }
    let mut states = Vec::with_capacity(baseline.len());
    states.push(baseline.states[0]);
    for (s, d) in baseline.states[1..].iter().zip(&offsets.deltas) {
        states.push(AgentState {
            x: s.x + d.dx as i32,
            y: s.y + d.dy as i32,
            heading: s.heading.rotate(d.dheading as i32),
            speed: (s.speed as i16 + d.dspeed as i16).clamp(0, max_speed as i16) as u8,
        });
    }
    Ok(Trajectory::new(baseline.start_time, states))
}

/// Feasibility loss: infeasible transitions plus an observation
/// contradiction, normalized by trajectory length. Zero iff every
/// transition passes the world model and the observation agrees.
pub fn loss_feas(traj: &Trajectory, env: &EnvMap, obs: &Observation) -> f64 {
    let infeasible = traj
        .transitions()
        .filter(|(a, b)| !feasibility(a, b, env))
        .count();
    let contradiction = if consistent_with(traj, obs) { 0 } else { 1 };
    (infeasible + contradiction) as f64 / traj.len() as f64
}

/// Divergence loss: `1 / (1 + D)` where `D` is the mean per-step
/// Chebyshev distance between corresponding positions. Identical
/// trajectories score 1; the score falls toward 0 as paths separate, so
/// minimizing total loss rewards divergence.
pub fn loss_div(baseline: &Trajectory, counterfactual: &Trajectory) -> Result<f64, CriticError> {
    if baseline.len() != counterfactual.len() {
        return Err(CriticError::LengthMismatch {
            offsets: counterfactual.len(),
            suffix: baseline.len(),
        });
    }
    let total: u32 = baseline
        .states
        .iter()
        .zip(&counterfactual.states)
        .map(|(a, b)| chebyshev(a.pos(), b.pos()))
        .sum();
    let mean = total as f64 / baseline.len() as f64;
    Ok(1.0 / (1.0 + mean))
}

/// A surviving counterfactual with its score and the offsets that
/// produced it.
#[derive(Debug, Clone)]
pub struct Counterfactual {
    pub trajectory: Trajectory,
    pub offsets: OffsetSequence,
    pub score: CriticScore,
}

/// Enumerate all `3^(4*len)` offset sequences in lexicographic order.
fn enumerate_offsets(len: usize) -> Vec<OffsetSequence> {
    let slots = 4 * len;
    let total = 3usize.pow(slots as u32);
    let mut out = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut comps = vec![0i8; slots];
        for slot in (0..slots).rev() {
            comps[slot] = OFFSET_VALUES[code % 3];
            code /= 3;
        }
        let deltas = comps
            .chunks(4)
            .map(|c| StateOffset::from_components([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push(OffsetSequence { deltas });
    }
    out
}

/// Number of distinct offset sequences for a suffix of `len` steps,
/// saturating at `usize::MAX`.
pub fn offset_space_size(len: usize) -> usize {
    3usize.checked_pow((4 * len) as u32).unwrap_or(usize::MAX)
}

/// Explore counterfactuals around `baseline`.
///
/// Draws `cfg.critic_samples` offset sequences from `proposal` (or the
/// full offset space when it fits inside the budget), hard-filters
/// anything with `l_feas > 0` or equal to the baseline, deduplicates,
/// and returns at most `cfg.critic_keep` survivors ordered by ascending
/// total score, then earliest divergence step, then lexicographic state
/// order. Deterministic given the seed.
pub fn explore(
    baseline: &Trajectory,
    env: &EnvMap,
    obs: &Observation,
    cfg: &RunConfig,
    proposal: &ProposalWeights,
) -> Vec<Counterfactual> {
    let suffix = baseline.len() - 1;
    if suffix == 0 || cfg.critic_samples == 0 || cfg.critic_keep == 0 {
        return Vec::new();
    }
    debug_assert!(crate::world::trajectory_feasible(baseline, env));

    let drawn: Vec<OffsetSequence> = if offset_space_size(suffix) <= cfg.critic_samples {
        enumerate_offsets(suffix)
    } else {
        let mut rng = rng::stream(cfg.seed, &[0xC417, rng::mix_trajectory(0, baseline)]);
        (0..cfg.critic_samples)
            .map(|_| proposal.sample(suffix, &mut rng))
            .collect()
    };

    let mut survivors: Vec<Counterfactual> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for offsets in drawn {
        if offsets.is_zero() {
            continue;
        }
        let candidate = apply_offsets(baseline, &offsets, env.rules.max_speed)
            .expect("offset length matches suffix");
        if candidate == *baseline || !seen.insert(candidate.clone()) {
            continue;
        }
        let lf = loss_feas(&candidate, env, obs);
        if lf > 0.0 {
            continue;
        }
        let ld = loss_div(baseline, &candidate).expect("equal lengths");
        survivors.push(Counterfactual {
            trajectory: candidate,
            offsets,
            score: CriticScore::new(cfg.alpha, cfg.beta, lf, ld),
        });
    }

    survivors.sort_by(|a, b| {
        a.score
            .total
            .partial_cmp(&b.score.total)
            .expect("finite scores")
            .then_with(|| {
                let da = a.trajectory.first_divergence(baseline).unwrap_or(usize::MAX);
                let db = b.trajectory.first_divergence(baseline).unwrap_or(usize::MAX);
                da.cmp(&db)
            })
            .then_with(|| a.trajectory.states.cmp(&b.trajectory.states))
    });
    survivors.truncate(cfg.critic_keep);
    survivors
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Heading::{self, *};
    use proptest::prelude::*;

    fn st(x: i32, y: i32, h: Heading, s: u8) -> AgentState {
        AgentState::new(x, y, h, s)
    }

    fn straight(len: usize) -> Trajectory {
        Trajectory::new(
            0,
            (0..len).map(|i| st(i as i32, 2, E, 1)).collect(),
        )
    }

    fn open(w: usize, h: usize) -> EnvMap {
        let row = ".".repeat(w);
        let rows: Vec<&str> = (0..h).map(|_| row.as_str()).collect();
        EnvMap::from_text_rows(&rows)
    }

    #[test]
    fn zero_offsets_are_identity() {
        let base = straight(4);
        let out = apply_offsets(&base, &OffsetSequence::zero(3), 2).unwrap();
        assert_eq!(out, base);
    }

    #[test]
    fn heading_offsets_rotate_modularly() {
        let base = straight(4);
        let offsets = OffsetSequence {
            deltas: vec![
                StateOffset { dx: 0, dy: 0, dheading: 1, dspeed: 0 };
                3
            ],
        };
        let out = apply_offsets(&base, &offsets, 2).unwrap();
        assert!(out.states[1..].iter().all(|s| s.heading == SE));
        assert_eq!(out.states[0].heading, E);
    }

    #[test]
    fn speed_offsets_clamp() {
        let mut base = straight(3);
        for s in &mut base.states {
            s.speed = 2;
        }
        let offsets = OffsetSequence {
            deltas: vec![
                StateOffset { dx: 0, dy: 0, dheading: 0, dspeed: 1 };
                2
            ],
        };
        let out = apply_offsets(&base, &offsets, 2).unwrap();
        assert!(out.states.iter().all(|s| s.speed == 2));
    }

    #[test]
    fn offsets_length_must_match() {
        let base = straight(3);
        let err = apply_offsets(&base, &OffsetSequence::zero(3), 2).unwrap_err();
        assert!(matches!(err, CriticError::LengthMismatch { .. }));
    }

    #[test]
    fn loss_feas_zero_for_clean_trajectory() {
        let env = open(8, 5);
        let base = straight(4);
        let obs = Observation::new(1, 1, 2, 1);
        assert_eq!(loss_feas(&base, &env, &obs), 0.0);
    }

    #[test]
    fn loss_feas_counts_one_bad_transition() {
        let env = open(8, 5);
        let mut traj = straight(4);
        // Teleport the last state: one infeasible transition in a
        // length-4 trajectory.
        traj.states[3] = st(7, 4, E, 1);
        let obs = Observation::new(0, 0, 2, 1);
        let bad = traj
            .transitions()
            .filter(|(a, b)| !feasibility(a, b, &env))
            .count();
        assert_eq!(bad, 1);
        assert_eq!(loss_feas(&traj, &env, &obs), 0.25);
    }

    #[test]
    fn loss_feas_counts_observation_contradiction() {
        let env = open(8, 5);
        let base = straight(4);
        let obs = Observation::new(2, 7, 4, 1);
        assert_eq!(loss_feas(&base, &env, &obs), 0.25);
    }

    #[test]
    fn loss_div_identity_is_one() {
        let base = straight(4);
        assert_eq!(loss_div(&base, &base).unwrap(), 1.0);
    }

    #[test]
    fn loss_div_uniform_unit_offset_is_half() {
        let base = straight(4);
        let mut shifted = base.clone();
        for s in &mut shifted.states {
            s.y += 1;
        }
        assert_eq!(loss_div(&base, &shifted).unwrap(), 0.5);
    }

    #[test]
    fn explore_survivors_always_pass_hard_filter() {
        let env = open(10, 7);
        let base = straight(4);
        let obs = Observation::new(0, 0, 2, 3);
        let cfg = RunConfig {
            critic_samples: 128,
            critic_keep: 16,
            ..RunConfig::default()
        };
        let found = explore(&base, &env, &obs, &cfg, &ProposalWeights::uniform(3));
        assert!(!found.is_empty());
        for c in &found {
            assert_eq!(c.score.l_feas, 0.0);
            assert!(crate::world::trajectory_feasible(&c.trajectory, &env));
            assert!(consistent_with(&c.trajectory, &obs));
            assert_ne!(c.trajectory, base);
        }
    }

    #[test]
    fn explore_with_no_feasible_divergence_returns_empty() {
        // A stationary baseline boxed into a single strict lane cell:
        // positions cannot move, the lane admits exactly one heading,
        // and any speed gain demands an impossible displacement.
        let mut env = EnvMap::from_text_rows(&["#v#"]);
        env.rules.lane_tolerance = 0;
        let anchor = st(1, 0, S, 0);
        let base = Trajectory::new(0, vec![anchor; 3]);
        assert!(crate::world::trajectory_feasible(&base, &env));
        let obs = Observation::new(0, 1, 0, 4);
        let cfg = RunConfig {
            critic_samples: offset_space_size(2),
            critic_keep: 16,
            ..RunConfig::default()
        };
        // Independent check: brute force over all offset sequences finds
        // no feasible divergent counterfactual.
        let mut any = false;
        for offsets in enumerate_offsets(2) {
            let cand = apply_offsets(&base, &offsets, 2).unwrap();
            if cand != base
                && crate::world::trajectory_feasible(&cand, &env)
                && consistent_with(&cand, &obs)
            {
                any = true;
            }
        }
        assert!(!any, "pocket should admit no divergent counterfactual");
        assert!(explore(&base, &env, &obs, &cfg, &ProposalWeights::uniform(2)).is_empty());
    }

    #[test]
    fn exhaustive_explore_matches_brute_force() {
        let env = EnvMap::from_text_rows(&["......", "......", "......"]);
        let base = Trajectory::new(0, vec![st(1, 1, E, 1), st(2, 1, E, 1), st(3, 1, E, 1)]);
        let obs = Observation::new(0, 1, 1, 5);
        let cfg = RunConfig {
            critic_samples: offset_space_size(2),
            critic_keep: usize::MAX,
            ..RunConfig::default()
        };

        // Brute force: independently apply every offset sequence and
        // filter by the survivor rules.
        let mut expected = std::collections::BTreeSet::new();
        for offsets in enumerate_offsets(2) {
            let cand = apply_offsets(&base, &offsets, 2).unwrap();
            if cand != base
                && crate::world::trajectory_feasible(&cand, &env)
                && consistent_with(&cand, &obs)
            {
                expected.insert(cand);
            }
        }
        let got: std::collections::BTreeSet<Trajectory> =
            explore(&base, &env, &obs, &cfg, &ProposalWeights::uniform(2))
                .into_iter()
                .map(|c| c.trajectory)
                .collect();
        assert_eq!(got, expected);
        assert!(!got.is_empty());
    }

    #[test]
    fn adapt_on_empty_batch_is_uniform() {
        let before = ProposalWeights::uniform(3);
        let after = adapt_proposal(&before, &[]);
        assert_eq!(before, after);
    }

    #[test]
    fn adapt_shifts_weight_toward_accepted_values() {
        let before = ProposalWeights::uniform(3);
        let accepted = vec![
            OffsetSequence {
                deltas: vec![
                    StateOffset { dx: 0, dy: 0, dheading: 1, dspeed: 0 },
                    StateOffset::ZERO,
                ],
            };
            4
        ];
        let after = adapt_proposal(&before, &accepted);
        // Component 2 = dheading, value index 2 = +1, at step 0.
        assert!(after.steps[0][2][2] > before.steps[0][2][2]);
        assert!(after.steps[0][2][0] < before.steps[0][2][0]);
    }

    proptest! {
        // Weights stay a probability distribution per component.
        #[test]
        fn adapt_preserves_normalization(n in 0usize..6, dh in -1i8..=1, ds in -1i8..=1) {
            let accepted: Vec<OffsetSequence> = (0..n)
                .map(|_| OffsetSequence {
                    deltas: vec![StateOffset { dx: 0, dy: 1, dheading: dh, dspeed: ds }],
                })
                .collect();
            let after = adapt_proposal(&ProposalWeights::uniform(2), &accepted);
            for step in &after.steps {
                for comp in step {
                    let sum: f64 = comp.iter().sum();
                    prop_assert!((sum - 1.0).abs() < 1e-12);
                }
            }
        }

        // total = alpha * l_feas + beta * l_div, exactly.
        #[test]
        fn score_invariant_holds(alpha in 0.0f64..4.0, beta in 0.0f64..4.0,
                                 lf in 0.0f64..1.0, ld in 0.0f64..=1.0) {
            let s = CriticScore::new(alpha, beta, lf, ld);
            prop_assert!((s.total - (alpha * lf + beta * ld)).abs() < 1e-12);
        }

        // 1/(1+D) strictly decreases as trajectories separate.
        #[test]
        fn loss_div_monotone_in_distance(shift in 1i32..5) {
            let base = straight(4);
            let mut near = base.clone();
            let mut far = base.clone();
            for s in &mut near.states { s.y += shift; }
            for s in &mut far.states { s.y += shift + 1; }
            let dn = loss_div(&base, &near).unwrap();
            let df = loss_div(&base, &far).unwrap();
            prop_assert!(df < dn);
        }
    }
}
