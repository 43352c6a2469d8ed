mod common;

use tricorr::bench::example_distributions;
use tricorr::ratereg::{
    adversarial_frontier, brute_force_oracle, collab_corner_points, collab_frontier, key_cost, reduce_cardinality,
    Model, OptimizerConfig, RatePoint, Roles, FINAL_TOL,
};

fn cfg() -> OptimizerConfig {
    OptimizerConfig {
        restarts: 16,
        ..OptimizerConfig::default()
    }
}

fn assert_witnessed(p: &RatePoint) {
    let (rp, rk) = p.witness.rates().unwrap();
    assert!((rp - p.rp).abs() <= 1e-9 && (rk - p.rk).abs() <= 1e-9);
    p.witness.validate(FINAL_TOL).unwrap();
}

#[test]
fn corners_are_sandwiched_and_witnessed() {
    for id in ["xor3", "and3", "copy3", "lshape(1)", "random(3,2,2,2)"] {
        let j = example_distributions(id).unwrap();
        let roles = Roles::first_three(&j).unwrap();
        let (a, b) = collab_corner_points(&j, &roles, &cfg()).unwrap();
        assert_witnessed(&a);
        assert_witnessed(&b);
        assert!(b.rk.abs() <= 1e-9, "{id}");
        assert!(a.rp <= b.rp + 1e-7, "{id}");
        assert!(b.rp <= a.rp + a.rk + 1e-7, "{id}");
    }
}

#[test]
fn xor_corners_match_the_oracle() {
    let j = example_distributions("xor3").unwrap();
    let roles = Roles::first_three(&j).unwrap();
    let (a, b) = collab_corner_points(&j, &roles, &cfg()).unwrap();
    let oa = brute_force_oracle(&j, &roles, Model::Collaborative, 16, 8, 8, 0).unwrap();
    let ob = brute_force_oracle(&j, &roles, Model::Wyner3, 16, 8, 8, 0).unwrap();
    assert!((a.rp - oa.rp).abs() <= 5e-3 && (a.rk - oa.rk).abs() <= 5e-3);
    assert!((b.rp - ob.rp).abs() <= 5e-3);
    let ln2 = 2f64.ln();
    assert!((a.rp - ln2).abs() <= 1e-4 && (a.rk - ln2).abs() <= 1e-4);
    assert!((b.rp - 2.0 * ln2).abs() <= 1e-4);
}

#[test]
fn collaborative_frontier_is_monotone() {
    let j = example_distributions("example2").unwrap();
    let roles = Roles::first_three(&j).unwrap();
    let f = collab_frontier(&j, &roles, &[0.1, 0.5, 1.0, 2.0, 10.0], &cfg()).unwrap();
    for w in f.points.windows(2) {
        assert!(w[0].rp < w[1].rp && w[1].rk <= w[0].rk + 1e-12);
    }
    for (_, p) in &f.by_lambda {
        assert_witnessed(p);
    }
    // larger λ trades public rate for private rate
    for w in f.by_lambda.windows(2) {
        assert!(w[1].1.rk <= w[0].1.rk + 1e-6);
    }
}

#[test]
fn adversarial_frontier_and_key_cost() {
    let j = example_distributions("copy3").unwrap();
    let roles = Roles::first_three(&j).unwrap();
    let k = key_cost(&j, &roles, &cfg()).unwrap();
    assert_witnessed(&k);
    assert!(k.rk.abs() <= 1e-6 && (k.rp - 2f64.ln()).abs() <= 1e-4);
    let f = adversarial_frontier(&j, &roles, &[0.5, 2.0], &cfg()).unwrap();
    for w in f.points.windows(2) {
        assert!(w[0].rp < w[1].rp && w[1].rk <= w[0].rk + 1e-12);
    }
    assert!(f.points.last().unwrap().rk <= k.rk + 1e-6);
}

#[test]
fn deterministic_z_has_one_to_one_tradeoff() {
    let j = example_distributions("random_deterministic_z(4,2,2,2)").unwrap();
    let roles = Roles::first_three(&j).unwrap();
    let (a, b) = collab_corner_points(&j, &roles, &cfg()).unwrap();
    let hz = j.entropy(&["Z"]).unwrap();
    assert!((a.rp - hz).abs() <= 1e-3);
    assert!((b.rp - (a.rp + a.rk)).abs() <= 1e-2);
}

#[test]
fn reduction_shrinks_v_and_keeps_rates() {
    for seed in 0..5 {
        let aux = common::collab_decomposition(seed, 6);
        let (rp, rk) = aux.rates().unwrap();
        let r = reduce_cardinality(&aux).unwrap();
        assert!(r.v_card() <= 4, "seed {seed}: |V'| = {}", r.v_card());
        let (rp2, rk2) = r.rates().unwrap();
        assert!((rp2 - rp).abs() <= 1e-7 && rk2 <= rk + 1e-7);
        let before = aux.joint.marginal(&["X", "Y", "Z"]).unwrap();
        let after = r.joint.marginal(&["X", "Y", "Z"]).unwrap();
        assert!(tricorr::probcore::variational_distance(&before, &after).unwrap() <= 1e-7);
    }
}
