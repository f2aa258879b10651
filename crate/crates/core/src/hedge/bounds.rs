//! Floor/ceiling projection of a probability vector.
//!
//! Each round runs a ceiling pass (cap, then hand the excess to below-ceiling
//! tasks in proportion to their current mass) followed by a floor pass (lift,
//! then take the deficit from above-floor tasks in proportion to their surplus
//! over their own floor). Rounds repeat until nothing changes or the round cap
//! is hit; the result is renormalized either way.

use std::collections::BTreeMap;

use crate::operator::Operator;

use super::HedgeError;

/// Output of [`enforce_bounds`].
#[derive(Debug, Clone, PartialEq)]
pub struct Bounded {
    pub probs: BTreeMap<Operator, f64>,
    /// Rounds executed, including the final no-change round when it fits.
    pub rounds: u32,
    /// `false` when the round cap was exhausted before a no-change round.
    pub stable: bool,
}

pub fn check_feasible(
    tasks: &[Operator],
    floors: &BTreeMap<Operator, f64>,
    ceilings: &BTreeMap<Operator, f64>,
) -> Result<(), HedgeError> {
    let mut floor_sum = 0.0;
    for &k in tasks {
        let f = floors.get(&k).copied().unwrap_or(0.0);
        if !(0.0..=1.0).contains(&f) {
            return Err(HedgeError::InvalidConfig(format!("floor for {k} is {f}, outside [0, 1]")));
        }
        if let Some(&c) = ceilings.get(&k) {
            if !(c > 0.0 && c <= 1.0) {
                return Err(HedgeError::InvalidConfig(format!("ceiling for {k} is {c}, outside (0, 1]")));
            }
            if f > c {
                return Err(HedgeError::InvalidConfig(format!("floor {f} exceeds ceiling {c} for {k}")));
            }
        }
        floor_sum += f;
    }
    if floor_sum > 1.0 + 1e-12 {
        return Err(HedgeError::InvalidConfig(format!("floors sum to {floor_sum}, more than 1")));
    }
    if !tasks.is_empty() && tasks.iter().all(|k| ceilings.contains_key(k)) {
        let ceiling_sum: f64 = tasks.iter().map(|k| ceilings[k]).sum();
        if ceiling_sum < 1.0 - 1e-12 {
            return Err(HedgeError::InvalidConfig(format!(
                "every task is capped and ceilings sum to {ceiling_sum}, less than 1"
            )));
        }
    }
    Ok(())
}

/// Project `probs` onto the configured floors and ceilings.
///
/// Tasks absent from `floors` have floor 0; tasks absent from `ceilings` are
/// uncapped. Bounds for operators not present in `probs` are ignored.
pub fn enforce_bounds(
    probs: &BTreeMap<Operator, f64>,
    floors: &BTreeMap<Operator, f64>,
    ceilings: &BTreeMap<Operator, f64>,
    max_rounds: u32,
) -> Result<Bounded, HedgeError> {
    let tasks: Vec<Operator> = probs.keys().copied().collect();
    check_feasible(&tasks, floors, ceilings)?;
    let floor: Vec<f64> = tasks.iter().map(|k| floors.get(k).copied().unwrap_or(0.0)).collect();
    let ceil: Vec<Option<f64>> = tasks.iter().map(|k| ceilings.get(k).copied()).collect();
    let mut p: Vec<f64> = probs.values().copied().collect();

    let mut rounds = 0;
    let mut stable = false;
    while rounds < max_rounds {
        rounds += 1;
        let before = p.clone();
        ceiling_pass(&mut p, &ceil);
        floor_pass(&mut p, &floor);
        if before == p {
            stable = true;
            break;
        }
    }

    let total: f64 = p.iter().sum();
    let probs = tasks.into_iter().zip(p.into_iter().map(|v| v / total)).collect();
    Ok(Bounded { probs, rounds, stable })
}

fn ceiling_pass(p: &mut [f64], ceil: &[Option<f64>]) {
    let mut excess = 0.0;
    for (v, c) in p.iter_mut().zip(ceil) {
        if let Some(c) = *c {
            if *v > c {
                excess += *v - c;
                *v = c;
            }
        }
    }
    if excess <= 0.0 {
        return;
    }
    let below: Vec<usize> = (0..p.len()).filter(|&i| ceil[i].is_none_or(|c| p[i] < c)).collect();
    if below.is_empty() {
        return;
    }
    let mass: f64 = below.iter().map(|&i| p[i]).sum();
    if mass > 0.0 {
        for &i in &below {
            p[i] += excess * p[i] / mass;
        }
    } else {
        let share = excess / below.len() as f64;
        for &i in &below {
            p[i] += share;
        }
    }
}

fn floor_pass(p: &mut [f64], floor: &[f64]) {
    let mut deficit = 0.0;
    for (v, &f) in p.iter_mut().zip(floor) {
        if *v < f {
            deficit += f - *v;
            *v = f;
        }
    }
    if deficit <= 0.0 {
        return;
    }
    let surplus: f64 = p.iter().zip(floor).filter(|(v, f)| **v > **f).map(|(v, f)| v - f).sum();
    if surplus <= 0.0 {
        return;
    }
    for (v, &f) in p.iter_mut().zip(floor) {
        if *v > f {
            // Clamp against rounding below the donor's own floor.
            *v = (*v - deficit * (*v - f) / surplus).max(f);
        }
    }
}
