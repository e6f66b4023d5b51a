//! Engine and oracle checked against closed forms and sampling done here.

mod common;

use std::time::Duration;

use cg_infer::harness::{experiment_evidence, generate_family, FamilySpec};
use cg_infer::metrics::error_report;
use cg_infer::reference::{exact_posteriors, likelihood_weighting, SampleBudget};
use cg_infer::*;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn normal_pdf(x: f64, m: f64, v: f64) -> f64 {
    (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
}

#[test]
fn oracle_two_node() {
    let ev = Evidence::new().with("X", Observation::Value(1.0));
    let b = exact_posteriors(&two_node(), &ev).unwrap();
    assert!((b["A"].as_discrete().unwrap()[1] - TWO_NODE_P_A1).abs() < 1e-12);
}

/// Z = 1.5U − 1.5V + c_D + e_W + e_Z, so (D, U) | Z has a closed form.
#[test]
fn oracle_hand_linear_closed_form() {
    let z = 2.0;
    let ev = Evidence::new().with("Z", Observation::Value(z));
    let b = exact_posteriors(&hand_linear(), &ev).unwrap();

    let prior = [0.3, 0.7];
    let c = [2.0, -3.0];
    let sw = [0.7f64, 1.3];
    let (vu, vv) = (4.0, 0.36);
    let mut post = [0.0; 2];
    let mut comps = Vec::new();
    for d in 0..2 {
        let mz = 1.5 * 1.0 - 1.5 * -0.5 + c[d];
        let vz = 2.25 * vu + 2.25 * vv + sw[d] * sw[d] + 1.0;
        post[d] = prior[d] * normal_pdf(z, mz, vz);
        let cov = 1.5 * vu;
        comps.push((post[d], 1.0 + cov / vz * (z - mz), vu - cov * cov / vz));
    }
    let s = post[0] + post[1];
    let pd = b["D"].as_discrete().unwrap();
    assert!((pd[0] - post[0] / s).abs() < 1e-10, "{pd:?}");

    let (_, m, v) = raw_moments(&comps);
    let (bm, bv) = b["U"].moments().unwrap();
    assert!((bm - m).abs() < 1e-9 && (bv - v).abs() < 1e-9, "({bm}, {bv}) vs ({m}, {v})");
}

/// Importance sampling over D with the continuous part drawn by hand.
#[test]
fn oracle_agrees_with_test_side_sampler() {
    let net = hand_linear();
    let order = net.topological_order().unwrap();
    let (d, w, z) = (net.index_of("D").unwrap(), net.index_of("W").unwrap(), net.index_of("Z").unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Condition on W ∈ [0, 0.1] by rejection, then compare E[Z] and P(D=1).
    let (mut hits, mut d1, mut zsum) = (0.0, 0.0, 0.0);
    for _ in 0..1_000_000 {
        let state = usize::from(rng.random::<f64>() < 0.7);
        let mut states = vec![0; net.len()];
        states[d] = state;
        let x = sample_given_states(&net, &states, &order, &mut rng);
        if (0.0..0.1).contains(&x[w]) {
            hits += 1.0;
            d1 += state as f64;
            zsum += x[z];
        }
    }
    let ev = Evidence::new().with("W", Observation::Value(0.05));
    let b = exact_posteriors(&net, &ev).unwrap();
    let p1 = b["D"].as_discrete().unwrap()[1];
    let ez = b["Z"].moments().unwrap().0;
    assert!((d1 / hits - p1).abs() < 0.02, "{} vs {p1}", d1 / hits);
    assert!((zsum / hits - ez).abs() < 0.05, "{} vs {ez}", zsum / hits);
}

#[test]
fn engine_exact_on_two_node() {
    let ev = Evidence::new().with("X", Observation::Value(1.0));
    let r = run_hmp_gmr(&two_node(), &ev, &RunSettings::new(Duration::from_secs(5), 100, 4)).unwrap();
    assert_eq!(r.status, Status::Converged);
    assert!((r.beliefs["A"].as_discrete().unwrap()[1] - TWO_NODE_P_A1).abs() < 1e-12);
}

#[test]
fn engine_matches_oracle_on_small_polytrees() {
    for seed in 0..5 {
        let net = generate_family(&FamilySpec::new(3, 2, seed).unwrap()).unwrap();
        let ev = experiment_evidence(&net, 2, seed).unwrap();
        let r = run_hmp_gmr(&net, &ev, &RunSettings::new(Duration::from_secs(5), 100, 16)).unwrap();
        assert_eq!(r.status, Status::Converged);
        let truth = exact_posteriors(&net, &ev).unwrap();
        assert!(error_report(&truth, &r.beliefs, &ev).unwrap().total < 1e-6);
    }
}

#[test]
fn engine_beliefs_are_normalized_on_loopy_nets() {
    for f in [1, 2, 4] {
        let net = generate_family(&FamilySpec::new(f, 4, 1).unwrap()).unwrap();
        let ev = experiment_evidence(&net, 4, 1).unwrap();
        let r = run_hmp_gmr(&net, &ev, &RunSettings::new(Duration::from_secs(5), 30, 2)).unwrap();
        assert!(r.beliefs.values().all(Belief::is_normalized), "family {f}");
        assert!(r.iterations <= 30);
    }
}

#[test]
fn lw_approaches_oracle() {
    let ev = Evidence::new().with("X", Observation::Value(1.0));
    let out = likelihood_weighting(&two_node(), &ev, SampleBudget::Samples(200_000), 3).unwrap();
    let p = out.beliefs["A"].as_discrete().unwrap()[1];
    assert!((p - TWO_NODE_P_A1).abs() < 0.01, "{p}");
}
