use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{smallest_safe_mode, Controller, ObjectiveKind, StateSet, NO_MODE, UNREACHED};
use crate::abstraction::{Post, SymbolicModel};

/// Winning set, strategy and (for reach objectives) distances.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub winning: StateSet,
    pub strategy: Vec<u16>,
    pub distances: Option<Vec<u32>>,
    pub iterations: usize,
}

fn has_safe_mode(model: &dyn SymbolicModel, s: usize, within: &StateSet) -> bool {
    (0..model.num_inputs()).any(|u| model.post(s, u).all(|t| within.contains(t)))
}

/// Sorted, deduplicated predecessors of `states` that satisfy `keep`.
fn predecessors(model: &dyn SymbolicModel, states: &[usize], keep: impl Fn(usize) -> bool + Sync) -> Vec<usize> {
    let mut pre: Vec<usize> = states
        .par_iter()
        .flat_map_iter(|&t| {
            let mut out = Vec::new();
            model.for_each_pre(t, &mut |s, _| {
                if keep(s) {
                    out.push(s);
                }
            });
            out
        })
        .collect();
    pre.par_sort_unstable();
    pre.dedup();
    pre
}

/// Greatest fixed point `W = {s ∈ Safe : ∃u, Post(s,u) ⊆ W}`. Only
/// predecessors of removed states are re-examined after the first sweep.
pub fn solve_safety(model: &dyn SymbolicModel, safe: &StateSet) -> Solution {
    let mut winning = safe.clone();
    let mut bad: Vec<usize> = {
        let w = &winning;
        (0..model.num_states()).into_par_iter().filter(|&s| w.contains(s) && !has_safe_mode(model, s, w)).collect()
    };
    let mut iterations = 1;
    while !bad.is_empty() {
        for &s in &bad {
            winning.remove(s);
        }
        let w = &winning;
        let candidates = predecessors(model, &bad, |s| w.contains(s));
        bad = candidates.into_par_iter().filter(|&s| !has_safe_mode(model, s, w)).collect();
        iterations += 1;
    }
    let strategy = smallest_safe_mode(model, &winning, &winning);
    Solution { winning, strategy, distances: None, iterations }
}

/// Least fixed point for reaching `target` while staying in `allowed`,
/// computed layer by layer so the strategy is the first move of a shortest
/// strategy (ties to the smallest mode).
pub fn solve_reach_avoid(model: &dyn SymbolicModel, target: &StateSet, allowed: Option<&StateSet>) -> Solution {
    let n = model.num_states();
    let mut winning = target.clone();
    let mut distances = vec![UNREACHED; n];
    let mut strategy = vec![NO_MODE; n];
    let mut frontier = target.to_vec();
    for &s in &frontier {
        distances[s] = 0;
        strategy[s] = (0..model.num_inputs())
            .find(|&u| !matches!(model.post(s, u), Post::Disabled | Post::Invalid))
            .unwrap_or(0) as u16;
    }
    let mut layer = 0u32;
    while !frontier.is_empty() {
        layer += 1;
        let w = &winning;
        let candidates = predecessors(model, &frontier, |s| !w.contains(s) && allowed.is_none_or(|a| a.contains(s)));
        let joined: Vec<(usize, u16)> = candidates
            .into_par_iter()
            .filter_map(|s| {
                (0..model.num_inputs())
                    .find(|&u| model.post(s, u).all(|t| w.contains(t)))
                    .map(|u| (s, u as u16))
            })
            .collect();
        for &(s, u) in &joined {
            winning.insert(s);
            strategy[s] = u;
            distances[s] = layer;
        }
        frontier = joined.into_iter().map(|(s, _)| s).collect();
    }
    Solution { winning, strategy, distances: Some(distances), iterations: layer as usize }
}

pub fn solve_reach(model: &dyn SymbolicModel, target: &StateSet) -> Solution {
    solve_reach_avoid(model, target, None)
}

/// Reach the maximal invariant core of `target` and stay there.
pub fn solve_reach_stay(model: &dyn SymbolicModel, target: &StateSet, allowed: Option<&StateSet>) -> Solution {
    let core = solve_safety(model, target);
    let mut reach = solve_reach_avoid(model, &core.winning, allowed);
    for s in core.winning.iter() {
        reach.strategy[s] = core.strategy[s];
    }
    reach.iterations += core.iterations;
    reach
}

/// Closure audit: every checked winning state's strategy mode keeps all
/// successors winning, and reach distances drop along the move. Target
/// states of a plain reach objective are exempt (the objective is met
/// there). Checks every winning state if `samples` is `None`, otherwise that
/// many random ones. Returns the violating states.
pub fn verify_closure(model: &dyn SymbolicModel, ctrl: &Controller, samples: Option<(usize, u64)>) -> Vec<usize> {
    let distances = ctrl.distances.as_deref();
    let exempt_targets = ctrl.spec.kind == ObjectiveKind::Reach;
    let check = |s: usize| {
        let Some(u) = ctrl.mode(s) else { return false };
        let d = distances.map_or(0, |d| d[s]);
        if exempt_targets && d == 0 {
            return true;
        }
        model.post(s, u).all(|t| {
            ctrl.winning.contains(t) && (d == 0 || distances.is_none_or(|all| all[t] < d))
        })
    };
    let members = ctrl.winning.to_vec();
    let picks: Vec<usize> = match samples {
        None => members,
        Some(_) if members.is_empty() => Vec::new(),
        Some((k, seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..k).map(|_| members[rng.random_range(0..members.len())]).collect()
        }
    };
    picks.into_par_iter().filter(|&s| !check(s)).collect()
}
