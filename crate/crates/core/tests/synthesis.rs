mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use switchsym_core::abstraction::{
    build_grid, build_seq, AnyModel, BuildOptions, ModelKind, Post, SeqBuildOptions, SymbolicModel,
};
use switchsym_core::model::{Aabb, BoxSet, Region};
use switchsym_core::quantizer::{GridParams, SeqParams};
use switchsym_core::synthesis::{
    contract_set, label_states, read_controller, solve_reach, solve_reach_stay, solve_safety, synthesize,
    verify_closure, write_controller, write_strategy_csv, Controller, GridRuntime, ObjectiveKind, SequenceRuntime,
    Spec, StateSet, SwitchingRuntime, NO_MODE, UNREACHED,
};

/// Explicit deterministic transition system on the real line: state `s` has output `s`.
#[derive(Debug)]
struct Explicit {
    succ: Vec<Vec<Option<usize>>>,
    inputs: usize,
}

impl SymbolicModel for Explicit {
    fn kind(&self) -> ModelKind {
        ModelKind::Grid
    }
    fn num_states(&self) -> usize {
        self.succ.len()
    }
    fn num_inputs(&self) -> usize {
        self.inputs
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn tau(&self) -> f64 {
        1.0
    }
    fn epsilon(&self) -> f64 {
        0.0
    }
    fn post(&self, s: usize, u: usize) -> Post<'_> {
        match self.succ[s][u] {
            Some(t) => Post::One(t),
            None => Post::Invalid,
        }
    }
    fn for_each_pre(&self, t: usize, f: &mut dyn FnMut(usize, usize)) {
        for (s, row) in self.succ.iter().enumerate() {
            for (u, &v) in row.iter().enumerate() {
                if v == Some(t) {
                    f(s, u);
                }
            }
        }
    }
    fn output_into(&self, s: usize, out: &mut [f64]) {
        out[0] = s as f64;
    }
    fn mode_of_state(&self, _s: usize) -> Option<usize> {
        None
    }
}

fn set(len: usize, members: &[usize]) -> StateSet {
    let mut s = StateSet::empty(len);
    members.iter().for_each(|&m| s.insert(m));
    s
}

fn boxes(lo: f64, hi: f64, n: usize) -> BoxSet {
    BoxSet::single(Aabb::cube(n, lo, hi))
}

#[test]
fn contraction_examples() {
    assert_eq!(contract_set(&boxes(0.0, 1.0, 2), 0.0), boxes(0.0, 1.0, 2));
    assert_eq!(contract_set(&boxes(19.0, 22.0, 6), 1.0), boxes(20.0, 21.0, 6));
    assert!(contract_set(&boxes(0.0, 1.0, 1), 0.6).is_empty());
}

#[test]
fn labeling_whole_domain_and_empty_set() {
    let sys = common::affine_system(vec![(DMatrix::from_element(1, 1, -1.0), DVector::zeros(1))], -1.0, 1.0);
    let g = build_grid(&sys, &GridParams { tau: 0.5, eta: 0.1, epsilon: 0.1, dwell_steps: None }, &BuildOptions::default())
        .unwrap();
    let all = label_states(&g, &Region::from_set(sys.domain.clone()));
    assert_eq!(all.count(), g.num_states());
    assert!(label_states(&g, &Region::from_set(BoxSet::default())).is_empty());
}

#[test]
fn safety_top_and_bottom() {
    let m = Explicit { succ: vec![vec![Some(1)], vec![Some(2)], vec![Some(0)]], inputs: 1 };
    let sol = solve_safety(&m, &StateSet::full(3));
    assert_eq!(sol.winning.count(), 3);
    assert!(sol.strategy.iter().all(|&u| u == 0));
    assert!(solve_safety(&m, &StateSet::empty(3)).winning.is_empty());
}

#[test]
fn invalid_sink_is_never_winning() {
    let m = Explicit { succ: vec![vec![None, Some(1)], vec![Some(1), None]], inputs: 2 };
    let sol = solve_safety(&m, &StateSet::full(2));
    assert_eq!(sol.winning.to_vec(), vec![0, 1]);
    assert_eq!(sol.strategy, vec![1, 0]);
}

#[test]
fn chain_reach_distances() {
    // a → b → c, c loops
    let m = Explicit { succ: vec![vec![Some(1)], vec![Some(2)], vec![Some(2)]], inputs: 1 };
    let sol = solve_reach(&m, &set(3, &[2]));
    assert_eq!(sol.winning.to_vec(), vec![0, 1, 2]);
    assert_eq!(sol.distances.unwrap(), vec![2, 1, 0]);
}

#[test]
fn unreachable_target_wins_only_itself() {
    // every state moves toward 0; target is 3
    let m = Explicit { succ: vec![vec![Some(0)], vec![Some(0)], vec![Some(1)], vec![Some(2)]], inputs: 1 };
    let sol = solve_reach(&m, &set(4, &[3]));
    assert_eq!(sol.winning.to_vec(), vec![3]);
    assert_eq!(sol.distances.unwrap(), vec![UNREACHED, UNREACHED, UNREACHED, 0]);
}

#[test]
fn reach_stay_cases() {
    // 2 is absorbing, 0 → 1 → 2
    let m = Explicit { succ: vec![vec![Some(1)], vec![Some(2)], vec![Some(2)]], inputs: 1 };
    let rs = solve_reach_stay(&m, &set(3, &[2]), None);
    let r = solve_reach(&m, &set(3, &[2]));
    assert_eq!((rs.winning, rs.strategy, rs.distances), (r.winning, r.strategy, r.distances));
    // target {2} is reachable but leaves immediately
    let leaky = Explicit { succ: vec![vec![Some(1)], vec![Some(2)], vec![Some(0)]], inputs: 1 };
    assert!(solve_reach(&leaky, &set(3, &[2])).winning.contains(0));
    assert!(solve_reach_stay(&leaky, &set(3, &[2]), None).winning.is_empty());
}

fn explicit_strategy() -> impl Strategy<Value = (Explicit, Vec<bool>)> {
    (2usize..40, 1usize..4).prop_flat_map(|(n, m)| {
        (
            proptest::collection::vec(proptest::collection::vec(proptest::option::weighted(0.9, 0..n), m), n),
            proptest::collection::vec(proptest::bool::weighted(0.7), n),
        )
            .prop_map(move |(succ, safe)| (Explicit { succ, inputs: m }, safe))
    })
}

fn as_controller(kind: ObjectiveKind, sol: switchsym_core::synthesis::Solution) -> Controller {
    Controller {
        model_checksum: 0,
        model_kind: ModelKind::Grid,
        spec: Spec { kind, safe: None, target: Some(BoxSet::default()), avoid: None, contract: false },
        winning: sol.winning,
        strategy: sol.strategy,
        distances: sol.distances,
    }
}

proptest! {
    #[test]
    fn safety_is_closed_and_maximal((m, safe) in explicit_strategy()) {
        let n = m.num_states();
        let safe_set = StateSet::from_fn_par(n, |s, _: &mut ()| safe[s]);
        let sol = solve_safety(&m, &safe_set);
        prop_assert!(sol.winning.is_subset(&safe_set));
        let ctrl = as_controller(ObjectiveKind::Safety, sol.clone());
        prop_assert!(verify_closure(&m, &ctrl, None).is_empty());
        for s in 0..n {
            prop_assert_eq!(sol.winning.contains(s), sol.strategy[s] != NO_MODE);
            if safe[s] && !sol.winning.contains(s) {
                let mut bigger = sol.winning.clone();
                bigger.insert(s);
                let closed = bigger.iter().all(|x| (0..m.inputs).any(|u| m.post(x, u).all(|t| bigger.contains(t))));
                prop_assert!(!closed);
            }
        }
    }

    #[test]
    fn reach_distances_drop_by_one((m, target) in explicit_strategy()) {
        let n = m.num_states();
        let target_set = StateSet::from_fn_par(n, |s, _: &mut ()| target[s]);
        let sol = solve_reach(&m, &target_set);
        let d = sol.distances.clone().unwrap();
        for s in sol.winning.iter() {
            if d[s] > 0 {
                let Post::One(t) = m.post(s, sol.strategy[s] as usize) else { panic!("winning move leaves") };
                prop_assert_eq!(d[t] + 1, d[s]);
                // no smaller mode reaches a closer state
                for u in 0..sol.strategy[s] as usize {
                    if let Post::One(t2) = m.post(s, u) {
                        prop_assert!(d[t2] == UNREACHED || d[t2] >= d[s]);
                    }
                }
            }
        }
        // every non-winning state really cannot reach
        for s in 0..n {
            if !sol.winning.contains(s) {
                prop_assert!((0..m.inputs).all(|u| !m.post(s, u).all(|t| sol.winning.contains(t))));
            }
        }
        let rs = solve_reach_stay(&m, &target_set, None);
        prop_assert!(verify_closure(&m, &as_controller(ObjectiveKind::ReachStay, rs), None).is_empty());
    }
}

fn room_like_sequence() -> (switchsym_core::model::SwitchedSystem, AnyModel) {
    let sys = common::affine_system(
        (0..3).map(|k| (DMatrix::from_element(1, 1, -0.5 - 0.2 * k as f64), DVector::from_element(1, k as f64))).collect(),
        -5.0,
        5.0,
    );
    let params = SeqParams { tau: 0.3, horizon: 5, source: vec![0.0], epsilon: 0.2, dwell_steps: None };
    let model = AnyModel::Sequence(build_seq(&sys, &params, &SeqBuildOptions::default()).unwrap());
    (sys, model)
}

#[test]
fn sequence_runtime_follows_the_shift() {
    let (_, model) = room_like_sequence();
    let s = model.as_sequence().unwrap();
    let n = s.num_states();
    // a strategy that plays 1, 0, 2 from (0,…,0) regardless of state
    let mut strategy = vec![0u16; n];
    let start = s.encode_sequence(&[0; 5]).unwrap();
    let second = s.shift(start, 1);
    let third = s.shift(second, 0);
    strategy[start] = 1;
    strategy[second] = 0;
    strategy[third] = 2;
    let ctrl = Controller {
        model_checksum: 0,
        model_kind: ModelKind::Sequence,
        spec: Spec { kind: ObjectiveKind::Safety, safe: Some(boxes(-5.0, 5.0, 1)), target: None, avoid: None, contract: false },
        winning: StateSet::full(n),
        strategy,
        distances: None,
    };
    let mut rt = SequenceRuntime::new(s, &ctrl, start);
    let modes: Vec<usize> = (0..3).map(|_| rt.next_mode(&[0.0]).0).collect();
    assert_eq!(modes, vec![1, 0, 2]);
    assert_eq!(s.decode_sequence(rt.state()), vec![0, 0, 1, 0, 2]);
}

#[test]
fn grid_runtime_reads_strategy_at_lattice_points() {
    let sys = common::affine_system(
        vec![
            (DMatrix::from_element(1, 1, -1.0), DVector::from_element(1, 0.5)),
            (DMatrix::from_element(1, 1, -1.0), DVector::from_element(1, -0.5)),
        ],
        -1.0,
        1.0,
    );
    let g = build_grid(&sys, &GridParams { tau: 0.5, eta: 0.25, epsilon: 0.25, dwell_steps: None }, &BuildOptions::default())
        .unwrap();
    let model = AnyModel::Grid(g);
    let spec = Spec { kind: ObjectiveKind::Safety, safe: Some(boxes(-0.5, 0.5, 1)), target: None, avoid: None, contract: false };
    let ctrl = synthesize(&model, &spec).unwrap();
    assert!(!ctrl.winning.is_empty());
    let g = model.as_grid().unwrap();
    let mut rt = GridRuntime::new(g, &ctrl);
    for s in ctrl.winning.iter() {
        let x = g.lattice().point(s);
        assert_eq!(rt.next_mode(&x), (ctrl.mode(s).unwrap(), None));
    }
    assert_eq!(rt.next_mode(&[3.0]).1, Some(switchsym_core::synthesis::RuntimeFault::OutsideDomain));
}

#[test]
fn controller_round_trip_and_csv() {
    let (_, model) = room_like_sequence();
    let spec = Spec {
        kind: ObjectiveKind::ReachStay,
        safe: None,
        target: Some(boxes(0.5, 2.0, 1)),
        avoid: Some(boxes(1.0, 1.2, 1)),
        contract: true,
    };
    let ctrl = synthesize(&model, &spec).unwrap();
    assert!(!ctrl.winning.is_empty());
    assert!(verify_closure(model.as_model(), &ctrl, None).is_empty());
    let mut a = Vec::new();
    write_controller(&ctrl, &mut a).unwrap();
    let back = read_controller(&a).unwrap();
    assert_eq!(back, ctrl);
    let mut b = Vec::new();
    write_controller(&back, &mut b).unwrap();
    assert_eq!(a, b);
    let mut csv = Vec::new();
    write_strategy_csv(&ctrl, model.as_model(), &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some("state,y1,mode"));
    assert_eq!(text.lines().count(), ctrl.winning.count() + 1);
}

#[test]
fn strategies_do_not_depend_on_thread_count() {
    let (_, model) = room_like_sequence();
    let spec = Spec { kind: ObjectiveKind::ReachStay, safe: None, target: Some(boxes(0.5, 2.0, 1)), avoid: None, contract: false };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| synthesize(&model, &spec).unwrap())
    };
    assert_eq!(run(1), run(4));
}
