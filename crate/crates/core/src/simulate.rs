//! Monte-Carlo simulation of the process a policy induces.
//!
//! Trajectory `i` draws from ChaCha8 seeded with `seed` on stream `i`, so the
//! result does not depend on how trajectories are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::eval::EvalError;
use crate::policy::Policy;
use crate::product::ProductMdp;

#[derive(Debug, Clone, PartialEq)]
pub struct Empirical {
    /// Number of trajectories ending in each automaton state.
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
}

fn sample<R: Rng>(rng: &mut R, weights: impl Iterator<Item = (usize, f64)> + Clone) -> Option<usize> {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (i, w) in weights {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if u < acc {
            return Some(i);
        }
    }
    // Rounding can leave the total a hair below 1.
    last
}

/// Final automaton state of one trajectory.
pub fn trajectory(
    product: &ProductMdp,
    policy: &Policy,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<usize, EvalError> {
    let mut x = sample(rng, product.initial.iter().copied()).expect("initial distribution has support");
    for t in 0..horizon - 1 {
        let (s, q) = product.states[x];
        let rule = policy.rule(t, s, q).ok_or(EvalError::UndefinedDecisionRule { t, s, q })?;
        let a = sample(rng, rule.iter().copied().enumerate()).ok_or(EvalError::UndefinedDecisionRule { t, s, q })?;
        let row = &product.transitions[x][a];
        x = sample(rng, row.iter().copied()).ok_or(EvalError::UnavailableAction { t, s, a })?;
    }
    Ok(product.states[x].1)
}

pub fn simulate(
    product: &ProductMdp,
    policy: &Policy,
    horizon: usize,
    n: usize,
    seed: u64,
) -> Result<Empirical, EvalError> {
    if horizon == 0 {
        return Err(EvalError::InvalidHorizon);
    }
    let k = product.num_automaton_states;
    let counts = (0..n as u64)
        .into_par_iter()
        .try_fold(
            || vec![0u64; k],
            |mut counts, i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                counts[trajectory(product, policy, horizon, &mut rng)?] += 1;
                Ok::<_, EvalError>(counts)
            },
        )
        .try_reduce(
            || vec![0u64; k],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let frequencies = counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect();
    Ok(Empirical { counts, frequencies })
}
