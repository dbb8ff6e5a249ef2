//! Solver properties checked against independent references.

mod common;

use common::{OracleCost, ScalarInstance};

use aoi_ncs::mdp::{decode, StateIndex};
use aoi_ncs::{
    value_iteration, CostKind, LoopModel64, NetworkConfig, Solution64, SolverConfig64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solve(
    a: &[f64],
    p: &[f64],
    r: usize,
    m: u32,
    cost: CostKind,
    gamma: f64,
    theta: f64,
) -> Solution64 {
    let loops: Vec<LoopModel64> = a
        .iter()
        .zip(p)
        .map(|(&a, &p)| LoopModel64::scalar(a, 1.0, p).unwrap())
        .collect();
    let net = NetworkConfig::new(a.len(), r, m).unwrap();
    let cfg = SolverConfig64::new(gamma, theta).unwrap();
    value_iteration(&loops, &net, cost, &cfg).unwrap()
}

#[test]
fn matches_brute_force_finite_horizon_dp() {
    let gamma = 0.9;
    let theta = 1e-10;
    let horizon = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let inst = ScalarInstance {
            a: (0..2).map(|_| rng.random_range(1.0..2.0)).collect(),
            p: (0..2).map(|_| rng.random_range(0.5..1.0)).collect(),
            m: 3,
            r: 1,
        };
        let oracle = inst.finite_horizon_values(OracleCost::Error, gamma, horizon);
        let sol = solve(&inst.a, &inst.p, 1, 3, CostKind::Error, gamma, theta);
        let tol = gamma.powi(horizon as i32) * inst.max_stage_cost(OracleCost::Error)
            / (1.0 - gamma)
            + 2.0 * theta;
        let net = NetworkConfig::new(2, 1, 3).unwrap();
        for idx in 0..net.state_count() {
            let ages = decode(StateIndex(idx), &net).unwrap().ages().to_vec();
            let want = oracle[&ages];
            let got = sol.values.values()[idx];
            assert!(
                (got - want).abs() <= tol,
                "case {case}: state {ages:?}: |{got} - {want}| > {tol:e}"
            );
        }
    }
}

#[test]
fn values_monotone_in_each_age() {
    for (n, m) in [(1usize, 7u32), (2, 5), (2, 7)] {
        let a: Vec<f64> = (0..n).map(|i| 1.1 + 0.2 * i as f64).collect();
        let p = vec![0.6; n];
        let sol = solve(&a, &p, 1, m, CostKind::Error, 0.9, 1e-8);
        let net = NetworkConfig::new(n, 1, m).unwrap();
        for idx in 0..net.state_count() {
            let ages = decode(StateIndex(idx), &net).unwrap().ages().to_vec();
            for i in 0..n {
                if ages[i] == m {
                    continue;
                }
                let mut raised = ages.clone();
                raised[i] += 1;
                let raised_idx = aoi_ncs::mdp::encode(&aoi_ncs::AoiState::new(raised), &net)
                    .unwrap()
                    .0;
                assert!(
                    sol.values.values()[raised_idx] >= sol.values.values()[idx],
                    "raising age {i} of {ages:?} lowered the value"
                );
            }
        }
    }
}

#[test]
fn identical_loops_give_permutation_symmetric_values() {
    // N = 2: the sweep arithmetic commutes exactly, so equality is bitwise
    let sol = solve(&[1.4, 1.4], &[0.7, 0.7], 1, 6, CostKind::Error, 0.9, 1e-8);
    let net = NetworkConfig::new(2, 1, 6).unwrap();
    for idx in 0..net.state_count() {
        let ages = decode(StateIndex(idx), &net).unwrap().ages().to_vec();
        let swapped: Vec<u32> = ages.iter().rev().copied().collect();
        let sw_idx = aoi_ncs::mdp::encode(&aoi_ncs::AoiState::new(swapped), &net)
            .unwrap()
            .0;
        assert_eq!(sol.values.values()[idx], sol.values.values()[sw_idx]);
    }

    // N = 3: cost summation order differs between permuted states, so allow
    // a few ulps
    let sol = solve(
        &[1.3, 1.3, 1.3],
        &[0.8, 0.8, 0.8],
        1,
        4,
        CostKind::Error,
        0.85,
        1e-8,
    );
    let net = NetworkConfig::new(3, 1, 4).unwrap();
    for idx in 0..net.state_count() {
        let ages = decode(StateIndex(idx), &net).unwrap().ages().to_vec();
        let mut perm = ages.clone();
        perm.rotate_left(1);
        let perm_idx = aoi_ncs::mdp::encode(&aoi_ncs::AoiState::new(perm), &net)
            .unwrap()
            .0;
        let a = sol.values.values()[idx];
        let b = sol.values.values()[perm_idx];
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn noise_scaling_scales_values_and_fixes_policy() {
    let base: Vec<LoopModel64> = [1.1, 1.3]
        .iter()
        .map(|&a| LoopModel64::scalar(a, 1.0, 0.5).unwrap())
        .collect();
    let net = NetworkConfig::new(2, 1, 7).unwrap();
    let cfg = SolverConfig64::new(0.9, 1e-9).unwrap();
    let reference = value_iteration(&base, &net, CostKind::Error, &cfg).unwrap();

    for scale in [2.0, 3.0, 0.5] {
        let scaled: Vec<LoopModel64> = [1.1, 1.3]
            .iter()
            .map(|&a| LoopModel64::scalar(a, scale, 0.5).unwrap())
            .collect();
        // the stop threshold scales with the costs, otherwise the scaled
        // run would simply iterate longer
        let cfg_scaled = SolverConfig64::new(0.9, 1e-9 * scale).unwrap();
        let sol = value_iteration(&scaled, &net, CostKind::Error, &cfg_scaled).unwrap();
        for (v, w) in reference.values.values().iter().zip(sol.values.values()) {
            assert!(
                (w - scale * v).abs() <= 1e-9 * scale * v.abs().max(1.0),
                "scale {scale}: {w} vs {}",
                scale * v
            );
        }
        assert_eq!(
            reference.policy.action_indices(),
            sol.policy.action_indices(),
            "policy must be invariant under noise scaling (scale {scale})"
        );
    }
}

#[test]
fn jacobi_residuals_contract_geometrically() {
    let gamma = 0.9;
    let sol = solve(
        &[1.1, 1.3],
        &[0.5, 0.5],
        1,
        7,
        CostKind::Error,
        gamma,
        1e-9,
    );
    assert!(sol.residuals.len() >= 10);
    for pair in sol.residuals.windows(2) {
        assert!(
            pair[1] <= gamma * pair[0] + 1e-9,
            "residual step {} -> {} violates the contraction",
            pair[0],
            pair[1]
        );
    }
}
