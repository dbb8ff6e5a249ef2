//! Reference implementations the solver tests check against.
//!
//! Everything here is deliberately naive and independent of the library's
//! kernel: states live in hash maps keyed by age vectors, successor lists
//! come from explicit product loops, penalties recompute matrix powers from
//! scratch.

// Each test binary uses its own subset of this module.
#![allow(dead_code)]

use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct ScalarInstance {
    pub a: Vec<f64>,
    pub p: Vec<f64>,
    pub m: u32,
    pub r: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleCost {
    Error,
    Aoi,
}

impl ScalarInstance {
    pub fn loops(&self) -> usize {
        self.a.len()
    }

    /// `g(age) = Σ_{r < age} a^{2r}` for unit noise, summed term by term.
    pub fn penalty(&self, loop_idx: usize, age: u32) -> f64 {
        (0..age)
            .map(|r| self.a[loop_idx].powi(2 * r as i32))
            .sum()
    }

    pub fn stage_cost(&self, cost: OracleCost, ages: &[u32]) -> f64 {
        match cost {
            OracleCost::Error => ages
                .iter()
                .enumerate()
                .map(|(i, &age)| self.penalty(i, age))
                .sum(),
            OracleCost::Aoi => ages.iter().map(|&age| age as f64).sum(),
        }
    }

    pub fn max_stage_cost(&self, cost: OracleCost) -> f64 {
        self.stage_cost(cost, &vec![self.m; self.loops()])
    }

    fn all_states(&self) -> Vec<Vec<u32>> {
        let mut states = vec![vec![]];
        for _ in 0..self.loops() {
            states = states
                .into_iter()
                .flat_map(|s| {
                    (1..=self.m).map(move |age| {
                        let mut next = s.clone();
                        next.push(age);
                        next
                    })
                })
                .collect();
        }
        states
    }

    fn all_actions(&self) -> Vec<Vec<usize>> {
        let n = self.loops();
        (0u64..1 << n)
            .filter(|mask| mask.count_ones() as usize <= self.r)
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
            .collect()
    }

    /// Successor distribution by product expansion over per-loop outcomes.
    fn transitions(&self, ages: &[u32], action: &[usize]) -> Vec<(Vec<u32>, f64)> {
        let mut branches: Vec<(Vec<u32>, f64)> = vec![(vec![], 1.0)];
        for (i, &age) in ages.iter().enumerate() {
            let aged = (age + 1).min(self.m);
            let mut grown = Vec::new();
            for (prefix, prob) in &branches {
                if action.contains(&i) {
                    let mut hit = prefix.clone();
                    hit.push(1);
                    grown.push((hit, prob * self.p[i]));
                    let mut miss = prefix.clone();
                    miss.push(aged);
                    grown.push((miss, prob * (1.0 - self.p[i])));
                } else {
                    let mut next = prefix.clone();
                    next.push(aged);
                    grown.push((next, *prob));
                }
            }
            branches = grown;
        }
        branches.retain(|(_, prob)| *prob > 0.0);
        branches
    }

    /// Finite-horizon DP from V ≡ 0, `horizon` backward steps.
    pub fn finite_horizon_values(
        &self,
        cost: OracleCost,
        gamma: f64,
        horizon: usize,
    ) -> HashMap<Vec<u32>, f64> {
        let states = self.all_states();
        let actions = self.all_actions();
        let mut values: HashMap<Vec<u32>, f64> =
            states.iter().map(|s| (s.clone(), 0.0)).collect();
        for _ in 0..horizon {
            let mut next = HashMap::with_capacity(values.len());
            for s in &states {
                let c = self.stage_cost(cost, s);
                let best = actions
                    .iter()
                    .map(|a| {
                        self.transitions(s, a)
                            .iter()
                            .map(|(succ, prob)| prob * values[succ])
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min);
                next.insert(s.clone(), c + gamma * best);
            }
            values = next;
        }
        values
    }
}
