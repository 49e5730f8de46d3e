mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use switchsym_core::abstraction::{
    audit_grid, build_grid, build_grid_dwell, build_seq, build_seq_dwell, counter_step, dwell_initial_sequences,
    initial_abstract_states, load_model, read_model, save_model, write_model, AbstractionRegistry, AnyModel,
    BuildOptions, BuildRequest, Post, SeqBuildOptions, SuccessorMode, SymbolicModel,
};
use switchsym_core::certificates::{CertificateSet, QuadraticCertificate};
use switchsym_core::flow::{nominal_flow, FlowConfig, FlowMap};
use switchsym_core::linalg::inf_distance;
use switchsym_core::quantizer::{eta_bar_analytic, GridParams, SeqParams};
use switchsym_core::Error;

fn scalar_decay() -> switchsym_core::model::SwitchedSystem {
    common::affine_system(vec![(DMatrix::from_element(1, 1, -1.0), DVector::zeros(1))], -1.0, 1.0)
}

fn two_mode_planar() -> switchsym_core::model::SwitchedSystem {
    common::affine_system(
        vec![
            (DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, -0.2, -0.8]), DVector::from_vec(vec![0.5, -0.2])),
            (DMatrix::from_row_slice(2, 2, &[-0.7, -0.1, 0.4, -1.2]), DVector::from_vec(vec![-0.4, 0.3])),
        ],
        -2.0,
        2.0,
    )
}

fn seq_params(source: Vec<f64>, horizon: usize, dwell_steps: Option<usize>) -> SeqParams {
    SeqParams { tau: 0.4, horizon, source, epsilon: 1.0, dwell_steps }
}

#[test]
fn grid_successor_hits_lattice_exactly() {
    let sys = scalar_decay();
    let params = GridParams { tau: std::f64::consts::LN_2, eta: 0.5, epsilon: 1.0, dwell_steps: None };
    let g = build_grid(&sys, &params, &BuildOptions::default()).unwrap();
    assert_eq!(g.num_states(), 5);
    let from = g.lattice().nearest_index(&[1.0]).unwrap();
    let Post::One(to) = g.post(from, 0) else { panic!("expected a single successor") };
    assert_eq!(g.output(to), vec![0.5]);
}

#[test]
fn grid_audit_and_invalid_sink() {
    let sys = common::affine_system(vec![(DMatrix::from_element(1, 1, 0.5), DVector::zeros(1))], -1.0, 1.0);
    let params = GridParams { tau: 1.0, eta: 0.1, epsilon: 1.0, dwell_steps: None };
    let g = build_grid(&sys, &params, &BuildOptions::default()).unwrap();
    // expanding flow leaves [-1,1] from the outer points
    let edge = g.lattice().nearest_index(&[1.0]).unwrap();
    assert_eq!(g.post(edge, 0), Post::Invalid);
    let audit = audit_grid(&g, &sys, &FlowConfig::default()).unwrap();
    assert_eq!(audit.violations, 0);
    assert!(audit.max_defect <= 0.05 + 1e-12);
}

#[test]
fn all_within_eta_successors_cover_nearest() {
    let sys = two_mode_planar();
    let params = GridParams { tau: 0.4, eta: 0.25, epsilon: 1.0, dwell_steps: None };
    let near = build_grid(&sys, &params, &BuildOptions::default()).unwrap();
    let opts = BuildOptions { successor_mode: SuccessorMode::AllWithinEta, ..Default::default() };
    let all = build_grid(&sys, &params, &opts).unwrap();
    assert!(all.transition_count() > near.transition_count());
    let audit = audit_grid(&all, &sys, &FlowConfig::default()).unwrap();
    assert_eq!(audit.violations, 0);
    for s in 0..near.num_states() {
        for u in 0..2 {
            if let Post::One(t) = near.post(s, u) {
                let mut found = false;
                all.post(s, u).for_each(|x| found |= x == t);
                assert!(found);
            }
        }
    }
}

#[test]
fn grid_cap_is_enforced() {
    let sys = two_mode_planar();
    let params = GridParams { tau: 0.4, eta: 0.01, epsilon: 1.0, dwell_steps: None };
    let opts = BuildOptions { max_transitions: 1000, ..Default::default() };
    assert!(matches!(build_grid(&sys, &params, &opts), Err(Error::CapExceeded { .. })));
}

#[test]
fn grid_dwell_counter_cases_hold_on_every_transition() {
    let sys = two_mode_planar();
    let params = GridParams { tau: 0.4, eta: 0.25, epsilon: 1.0, dwell_steps: Some(3) };
    let g = build_grid_dwell(&sys, &params, &BuildOptions::default()).unwrap();
    assert_eq!(g.num_states(), g.lattice().len() * 2 * 3);
    for s in 0..g.num_states() {
        let (x, p, i) = g.decode(s);
        assert_eq!(g.encode(x, p, i), s);
        for u in 0..2 {
            match g.post(s, u) {
                Post::Disabled => assert!(i < 2 && u != p),
                Post::One(t) => {
                    let (_, p2, i2) = g.decode(t);
                    assert_eq!(p2, u);
                    match (i < 2, u == p) {
                        (true, true) => assert_eq!(i2, i + 1),
                        (false, true) => assert_eq!(i2, 2),
                        (false, false) => assert_eq!(i2, 0),
                        (true, false) => unreachable!(),
                    }
                }
                Post::Invalid => {}
                Post::Many { .. } => unreachable!(),
            }
        }
    }
}

fn assert_pre_matches_post(model: &dyn SymbolicModel) {
    let mut expected = vec![Vec::new(); model.num_states()];
    for s in 0..model.num_states() {
        for u in 0..model.num_inputs() {
            model.post(s, u).for_each(|t| expected[t].push((s, u)));
        }
    }
    for (t, mut exp) in expected.into_iter().enumerate() {
        let mut got = Vec::new();
        model.for_each_pre(t, &mut |s, u| got.push((s, u)));
        got.sort_unstable();
        exp.sort_unstable();
        assert_eq!(got, exp, "predecessors of {t}");
    }
}

#[test]
fn predecessors_invert_successors() {
    let sys = two_mode_planar();
    let g = build_grid(&sys, &GridParams { tau: 0.4, eta: 0.5, epsilon: 1.0, dwell_steps: None }, &BuildOptions::default())
        .unwrap();
    assert_pre_matches_post(&g);
    let gd = build_grid_dwell(&sys, &GridParams { tau: 0.4, eta: 0.5, epsilon: 1.0, dwell_steps: Some(2) }, &BuildOptions::default())
        .unwrap();
    assert_pre_matches_post(&gd);
    let opts = BuildOptions { successor_mode: SuccessorMode::AllWithinEta, ..Default::default() };
    let ga = build_grid_dwell(&sys, &GridParams { tau: 0.4, eta: 0.5, epsilon: 1.0, dwell_steps: Some(2) }, &opts).unwrap();
    assert_pre_matches_post(&ga);
    let s = build_seq(&sys, &seq_params(vec![0.1, 0.2], 4, None), &SeqBuildOptions::default()).unwrap();
    assert_pre_matches_post(&s);
    let sd = build_seq_dwell(&sys, &seq_params(vec![0.1, 0.2], 3, Some(3)), &SeqBuildOptions::default()).unwrap();
    assert_pre_matches_post(&sd);
}

#[test]
fn single_step_sequence_outputs_are_one_flow() {
    let sys = two_mode_planar();
    let s = build_seq(&sys, &seq_params(vec![1.0, -1.0], 1, None), &SeqBuildOptions::default()).unwrap();
    assert_eq!(s.num_states(), 2);
    let cfg = FlowConfig::default();
    for p in 0..2 {
        let direct = nominal_flow(&sys, &[1.0, -1.0], p, 0.4, &cfg).unwrap();
        assert!(inf_distance(&s.output(p), &direct) < 1e-12);
    }
}

#[test]
fn sequence_outputs_match_independent_recomputation() {
    let sys = two_mode_planar();
    let source = vec![0.3, -0.6];
    let s = build_seq(&sys, &seq_params(source.clone(), 12, None), &SeqBuildOptions::default()).unwrap();
    assert_eq!(s.num_states(), 4096);
    let cfg = FlowConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let idx = rng.random_range(0..s.num_states());
        let mut x = source.clone();
        for p in s.decode_sequence(idx) {
            x = nominal_flow(&sys, &x, p, 0.4, &cfg).unwrap();
        }
        let out = s.output(idx);
        assert!(inf_distance(&out, &x) <= 1e-10 * (1.0 + x[0].abs().max(x[1].abs())));
    }
    // constant sequence = iterated single-mode flow
    let flows = FlowMap::new(&sys, 0.4, &cfg).unwrap();
    let ones = s.encode_sequence(&[1; 12]).unwrap();
    assert_eq!(s.output(ones), flows.flow_sequence(&[1; 12], &source).unwrap());
}

#[test]
fn dwell_initial_set_matches_brute_force() {
    // N = 3, N̂ = 2, m = 2
    let init = dwell_initial_sequences(2, 3, 2);
    let mut expected = Vec::new();
    for idx in 0..8usize {
        let seq = [(idx >> 2) & 1, (idx >> 1) & 1, idx & 1];
        let mut runs = vec![1usize];
        for w in seq.windows(2) {
            if w[0] == w[1] {
                *runs.last_mut().unwrap() += 1;
            } else {
                runs.push(1);
            }
        }
        let (last, rest) = runs.split_last().unwrap();
        if rest.iter().all(|&r| r >= 2) {
            expected.push((idx, (last - 1).min(1)));
        }
    }
    assert_eq!(init, expected);
    // 000, 001, 110, 111 and their counters
    assert_eq!(init, vec![(0, 1), (1, 0), (6, 0), (7, 1)]);
}

#[test]
fn dwell_one_sequence_model_is_unrestricted() {
    let sys = two_mode_planar();
    let sd = build_seq_dwell(&sys, &seq_params(vec![0.0, 0.0], 3, Some(1)), &SeqBuildOptions::default()).unwrap();
    assert_eq!(sd.num_states(), 8);
    for s in 0..8 {
        for u in 0..2 {
            assert_eq!(sd.post(s, u), Post::One(sd.shift(s, u)));
        }
    }
}

#[test]
fn equilibrium_source_has_zero_defect() {
    let sys = scalar_decay();
    let s = build_seq(&sys, &SeqParams { tau: 0.5, horizon: 5, source: vec![0.0], epsilon: 1.0, dwell_steps: None }, &SeqBuildOptions::default())
        .unwrap();
    assert_eq!(s.eta_bar(), 0.0);
}

#[test]
fn exact_eta_bar_is_dominated_by_analytic_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..50 {
        let n = 1 + trial % 3;
        let m = 2 + trial % 2;
        let horizon = 1 + trial % 6;
        let (sys, certs) = common::random_stable_system(&mut rng, n, m);
        let source: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tau = rng.random_range(0.1..0.8);
        let params = SeqParams { tau, horizon, source: source.clone(), epsilon: 1.0, dwell_steps: None };
        let s = build_seq(&sys, &params, &SeqBuildOptions::default()).unwrap();
        let flows = FlowMap::new(&sys, tau, &FlowConfig::default()).unwrap();
        let analytic = eta_bar_analytic(horizon, &flows, &source, &certs, None).unwrap();
        assert!(s.eta_bar() <= analytic * (1.0 + 1e-9), "trial {trial}: {} > {analytic}", s.eta_bar());
    }
}

#[test]
fn initial_states_use_certified_radius() {
    let sys = scalar_decay();
    let cert = QuadraticCertificate::new(DMatrix::from_element(1, 1, 1.0), 1.0, 0.5).unwrap();
    let certs = CertificateSet::new(vec![cert]).unwrap();
    let g = build_grid(&sys, &GridParams { tau: 0.5, eta: 0.25, epsilon: 1.0, dwell_steps: None }, &BuildOptions::default())
        .unwrap();
    let model = AnyModel::Grid(g);
    // identity envelopes: the radius is ε
    let init = initial_abstract_states(&model, &[0.0], 0.5, &certs, &sys).unwrap();
    let pts: Vec<f64> = init.iter().map(|&s| model.as_model().output(s)[0]).collect();
    assert_eq!(pts, vec![-0.5, -0.25, 0.0, 0.25, 0.5]);
    // a radius of zero keeps only the exact output
    let exact = initial_abstract_states(&model, &[0.25], 1e-300, &certs, &sys).unwrap();
    assert_eq!(exact.len(), 1);
    let off = initial_abstract_states(&model, &[0.3], 1e-300, &certs, &sys).unwrap();
    assert!(off.is_empty());
}

fn round_trip(model: &AnyModel) {
    let mut a = Vec::new();
    write_model(model, &mut a).unwrap();
    let back = read_model(&a).unwrap();
    let mut b = Vec::new();
    write_model(&back, &mut b).unwrap();
    assert_eq!(a, b);
    let truncated = &a[..a.len() - 3];
    assert!(matches!(read_model(truncated), Err(Error::Checksum { .. })));
}

#[test]
fn models_round_trip_byte_identically() {
    let sys = two_mode_planar();
    round_trip(&AnyModel::Grid(
        build_grid(&sys, &GridParams { tau: 0.4, eta: 0.25, epsilon: 1.0, dwell_steps: None }, &BuildOptions::default()).unwrap(),
    ));
    let opts = BuildOptions { successor_mode: SuccessorMode::AllWithinEta, ..Default::default() };
    round_trip(&AnyModel::Grid(
        build_grid_dwell(&sys, &GridParams { tau: 0.4, eta: 0.25, epsilon: 1.0, dwell_steps: Some(2) }, &opts).unwrap(),
    ));
    round_trip(&AnyModel::Sequence(
        build_seq_dwell(&sys, &seq_params(vec![0.5, 0.5], 6, Some(2)), &SeqBuildOptions::default()).unwrap(),
    ));
}

#[test]
fn model_file_errors() {
    let sys = two_mode_planar();
    let model = AnyModel::Sequence(build_seq(&sys, &seq_params(vec![0.5, 0.5], 3, None), &SeqBuildOptions::default()).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded.as_sequence().unwrap().outputs(), model.as_sequence().unwrap().outputs());

    let mut bytes = std::fs::read(&path).unwrap();
    let newer = String::from_utf8_lossy(&bytes).replacen("SWITCHSYM-MODEL v1", "SWITCHSYM-MODEL v2", 1);
    assert!(matches!(read_model(newer.as_bytes()), Err(Error::Version { found: 2, .. })));
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    assert!(matches!(read_model(&bytes), Err(Error::Checksum { .. })));
}

#[test]
fn registry_builds_by_name() {
    let sys = two_mode_planar();
    let reg = AbstractionRegistry::default();
    assert_eq!(reg.names(), vec!["grid", "grid-dwell", "seq", "seq-dwell"]);
    let req = BuildRequest {
        system: &sys,
        tau: 0.4,
        epsilon: 1.0,
        eta: Some(0.5),
        horizon: Some(3),
        source: Some(vec![0.0, 0.0]),
        dwell_steps: Some(2),
        grid: BuildOptions::default(),
        seq: SeqBuildOptions::default(),
    };
    for name in reg.names() {
        let model = reg.get(name).unwrap().build(&req).unwrap();
        assert_eq!(model.as_model().kind().name(), name);
    }
    assert!(reg.get("octree").is_err());
    let no_eta = BuildRequest { eta: None, ..req };
    assert!(reg.get("grid").unwrap().build(&no_eta).is_err());
}

proptest! {
    #[test]
    fn shift_law_holds(idx in 0usize..3usize.pow(7), p in 0usize..3) {
        let sys = common::affine_system(
            (0..3).map(|k| (DMatrix::from_element(1, 1, -1.0 - k as f64), DVector::zeros(1))).collect(),
            -1.0,
            1.0,
        );
        let s = build_seq(&sys, &SeqParams { tau: 0.1, horizon: 7, source: vec![0.5], epsilon: 1.0, dwell_steps: None }, &SeqBuildOptions::default()).unwrap();
        let seq = s.decode_sequence(idx);
        let mut shifted = seq[1..].to_vec();
        shifted.push(p);
        prop_assert_eq!(s.decode_sequence(s.shift(idx, p)), shifted);
        prop_assert_eq!(s.post(idx, p), Post::One(s.shift(idx, p)));
    }

    #[test]
    fn counter_automaton_has_exactly_one_case(p in 0usize..4, u in 0usize..4, k in 1usize..6, i_seed in 0usize..6) {
        let i = i_seed % k;
        let cases = [i < k - 1 && u == p, i == k - 1 && u == p, i == k - 1 && u != p];
        let applicable = cases.iter().filter(|&&c| c).count();
        match counter_step(p, i, u, k) {
            Some(next) => {
                prop_assert_eq!(applicable, 1);
                if u != p { prop_assert_eq!(i, k - 1); prop_assert_eq!(next, 0); }
            }
            None => prop_assert_eq!(applicable, 0),
        }
    }
}
