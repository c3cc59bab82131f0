use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use serde::Serialize;

use super::BallIndex;
use crate::error::{Error, Result};
use crate::geometry::ReducedWord;
use crate::walks::GroupLaw;

type Map<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

#[derive(Clone, Debug)]
pub struct DpOptions {
    pub tol: f64,
    pub max_steps: usize,
    pub max_states: usize,
    /// States lighter than `prune` times the heaviest state of their step are
    /// dropped and counted as escaped.
    pub prune: f64,
    /// Initial state radius around `x` and `y`; defaults to `d(x, y) + 2R + 4`.
    pub radius: Option<usize>,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions { tol: 1e-10, max_steps: 20_000, max_states: 2_000_000, prune: 1e-16, radius: None }
    }
}

/// Path-sum evaluation of `fb(x, y|z)`.
#[derive(Clone, Debug, Serialize)]
pub struct DpPassage {
    pub z: f64,
    /// `F^{yB}(x, yu|z)` for `u ∈ B`.
    pub values: Vec<f64>,
    pub steps: usize,
    /// Weighted mass discarded outside the state ball.
    pub escaped: f64,
    pub last_increment: f64,
    pub radius: usize,
}

/// Iterates `u_{n+1} = z·P u_n` off `yB`, absorbing mass on `yB`, with
/// states confined to a ball around `x` and `y`. The state radius grows by
/// `2R` until two successive radii agree within `tol`.
pub fn first_passage_to_ball(
    law: &GroupLaw,
    ball: &BallIndex,
    x: &ReducedWord,
    y: &ReducedWord,
    z: f64,
    opts: &DpOptions,
) -> Result<DpPassage> {
    let a = ball.alphabet();
    let step = 2 * ball.range();
    let mut radius = opts.radius.unwrap_or(a.distance(x, y) + step + 4);
    let mut last = run_dp(law, ball, x, y, z, opts, radius)?;
    for _ in 0..8 {
        radius += step;
        let run = run_dp(law, ball, x, y, z, opts, radius)?;
        let total: f64 = run.values.iter().sum();
        let change: f64 = run.values.iter().zip(&last.values).map(|(u, v)| (u - v).abs()).sum();
        if change <= opts.tol * total || total == 0.0 {
            return Ok(run);
        }
        log::debug!("state radius {radius}: change {change:e}");
        last = run;
    }
    Err(Error::Convergence(format!(
        "first-passage path sum still changing at state radius {radius} (escaped mass {:e})",
        last.escaped
    )))
}

fn run_dp(
    law: &GroupLaw,
    ball: &BallIndex,
    x: &ReducedWord,
    y: &ReducedWord,
    z: f64,
    opts: &DpOptions,
    radius: usize,
) -> Result<DpPassage> {
    let prune = opts.prune;
    let a = ball.alphabet();
    let big_r = ball.range();
    let nb = ball.len();
    let mut values = vec![0.0; nb];
    let mu: Vec<(ReducedWord, f64)> = law.float_entries().map(|(w, p)| (w.clone(), p)).collect();
    if a.distance(x, y) <= big_r {
        values[ball.position(&a.relative(y, x)).unwrap()] = 1.0;
        return Ok(DpPassage { z, values, steps: 0, escaped: 0.0, last_increment: 0.0, radius });
    }
    let mut dist: Map<ReducedWord, f64> = Map::default();
    dist.insert(x.clone(), 1.0);
    let mut escaped = 0.0;
    let mut quiet = 0;
    for step in 1..=opts.max_steps {
        let mut next: Map<ReducedWord, f64> = Map::default();
        let mut increment = 0.0;
        let heaviest = dist.values().fold(0.0f64, |a, &b| a.max(b));
        for (s, m) in &dist {
            if *m < prune * heaviest {
                escaped += m;
                continue;
            }
            for (g, p) in &mu {
                let t = a.multiply(s, g);
                let mass = m * p * z;
                if a.distance(&t, y) <= big_r {
                    values[ball.position(&a.relative(y, &t)).unwrap()] += mass;
                    increment += mass;
                } else if a.distance(&t, x) > radius && a.distance(&t, y) > radius {
                    escaped += mass;
                } else {
                    *next.entry(t).or_insert(0.0) += mass;
                }
            }
        }
        if next.len() > opts.max_states {
            return Err(Error::Budget { radius, states: next.len(), limit: opts.max_states });
        }
        dist = next;
        let total: f64 = values.iter().sum();
        quiet = if total > 0.0 && increment < opts.tol * total { quiet + 1 } else { 0 };
        if quiet >= 3 || dist.is_empty() {
            return Ok(DpPassage { z, values, steps: step, escaped, last_increment: increment, radius });
        }
    }
    Err(Error::Convergence(format!(
        "first-passage path sum not converged after {} steps at z = {z} (escaped mass {escaped:e})",
        opts.max_steps
    )))
}
