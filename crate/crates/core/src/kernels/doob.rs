use std::fmt::Display;

use num_traits::{One, Zero};
use serde::Serialize;

use super::spherical::spherical_coefficient;
use crate::error::{Error, Result};
use crate::scalar::{ratio_to_f64, Ratio};

/// Rows `p^f(x, y) = p(x, y) f(y)/(t f(x))` over the transformed states.
#[derive(Clone, Debug)]
pub struct TransformedRows<S, T = f64> {
    pub rows: Vec<(S, Vec<(S, T)>)>,
    pub max_residual: f64,
}

/// Doob transform from the ratios `f(y)/f(x)`; useful when `f` itself underflows.
pub fn doob_transform_ratio<S: Clone + Display>(
    states: &[S],
    row: impl Fn(&S) -> Vec<(S, f64)>,
    ratio: impl Fn(&S, &S) -> f64,
    t: f64,
    tol: f64,
) -> Result<TransformedRows<S>> {
    let mut rows = Vec::with_capacity(states.len());
    let mut worst: f64 = 0.0;
    for x in states {
        let r = row(x);
        let weighted: Vec<(S, f64)> = r.iter().map(|(y, p)| (y.clone(), p * ratio(x, y))).collect();
        if weighted.iter().any(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(format!("f is not positive near {x}")));
        }
        let pf: f64 = weighted.iter().map(|(_, v)| v).sum();
        let residual = (pf - t).abs() / t;
        if residual > tol {
            return Err(Error::NotHarmonic { at: x.to_string(), residual });
        }
        worst = worst.max(residual);
        rows.push((x.clone(), weighted.into_iter().map(|(y, v)| (y, v / t)).collect()));
    }
    Ok(TransformedRows { rows, max_residual: worst })
}

pub fn doob_transform<S: Clone + Display>(
    states: &[S],
    row: impl Fn(&S) -> Vec<(S, f64)>,
    f: impl Fn(&S) -> f64,
    t: f64,
    tol: f64,
) -> Result<TransformedRows<S>> {
    for x in states {
        if !(f(x) > 0.0) {
            return Err(Error::InvalidInput(format!("f is not strictly positive at {x}")));
        }
    }
    doob_transform_ratio(states, row, |x, y| f(y) / f(x), t, tol)
}

/// Exact Doob transform; harmonicity must hold exactly.
pub fn doob_transform_exact<S: Clone + Display>(
    states: &[S],
    row: impl Fn(&S) -> Vec<(S, Ratio)>,
    f: impl Fn(&S) -> Ratio,
    t: &Ratio,
) -> Result<TransformedRows<S, Ratio>> {
    let mut rows = Vec::with_capacity(states.len());
    for x in states {
        let fx = f(x);
        if fx <= Ratio::zero() {
            return Err(Error::InvalidInput(format!("f is not strictly positive at {x}")));
        }
        let r = row(x);
        let pf: Ratio = r.iter().map(|(y, p)| p * f(y)).sum();
        if pf != t * &fx {
            let residual = ratio_to_f64(&((pf - t * &fx) / &fx)).abs();
            return Err(Error::NotHarmonic { at: x.to_string(), residual });
        }
        let scale = t * &fx;
        rows.push((x.clone(), r.into_iter().map(|(y, p)| (y.clone(), p * f(&y) / &scale)).collect()));
    }
    Ok(TransformedRows { rows, max_residual: 0.0 })
}

impl<S> TransformedRows<S, Ratio> {
    pub fn rows_sum_to_one(&self) -> bool {
        self.rows.iter().all(|(_, r)| r.iter().map(|(_, p)| p.clone()).sum::<Ratio>().is_one())
    }
}

/// Green function `G_{Q₁}(k, 0|1)` of `Q₁ = P₁^Φ` on `T_{q+1}`, next to the
/// closed form `(2q/(q−1))/(1 + (q−1)k/(q+1))`.
#[derive(Clone, Debug, Serialize)]
pub struct DirichletDecay {
    pub q: u32,
    pub levels: Vec<usize>,
    /// `(k, extrapolated value, closed form, relative error)`.
    pub values: Vec<(usize, f64, f64, f64)>,
    pub max_residual: f64,
}

pub fn dirichlet_decay(q: u32, ks: &[usize], base_level: usize) -> Result<DirichletDecay> {
    let qf = q as f64;
    let levels = vec![base_level, 2 * base_level, 4 * base_level];
    let top = *levels.last().unwrap();
    let states: Vec<usize> = (0..=top + 1).collect();
    let row = |&k: &usize| -> Vec<(usize, f64)> {
        if k == 0 {
            vec![(1, 1.0)]
        } else {
            vec![(k - 1, 1.0 / (qf + 1.0)), (k + 1, qf / (qf + 1.0))]
        }
    };
    let c = |k: usize| ratio_to_f64(&spherical_coefficient(q, k));
    let ratio = |&x: &usize, &y: &usize| c(y) / c(x) * qf.powf((x as f64 - y as f64) / 2.0);
    let rho1 = 2.0 * qf.sqrt() / (qf + 1.0);
    let doob = doob_transform_ratio(&states, row, ratio, rho1, 1e-12)?;
    let up = |k: usize| doob.rows[k].1.iter().find(|(j, _)| *j == k + 1).map(|(_, p)| *p).unwrap_or(0.0);
    let down = |k: usize| doob.rows[k].1.iter().find(|(j, _)| *j + 1 == k).map(|(_, p)| *p).unwrap_or(0.0);
    // Birth–death Green function: G(k, 0) = Σ_{j≥k} w_j / p⁺(0), w_j = Π_{i≤j} p⁻(i)/p⁺(i).
    let mut w = vec![1.0; top + 1];
    for j in 1..=top {
        w[j] = w[j - 1] * down(j) / up(j);
    }
    let p0 = up(0);
    let mut values = Vec::new();
    for &k in ks {
        let partial = |level: usize| w[k..=level].iter().rev().sum::<f64>() / p0;
        let s: Vec<f64> = levels.iter().map(|&l| partial(l)).collect();
        let r1 = 2.0 * s[1] - s[0];
        let r2 = 2.0 * s[2] - s[1];
        let value = (4.0 * r2 - r1) / 3.0;
        let oracle = (2.0 * qf / (qf - 1.0)) / (1.0 + (qf - 1.0) / (qf + 1.0) * k as f64);
        values.push((k, value, oracle, (value - oracle).abs() / oracle));
    }
    Ok(DirichletDecay { q, levels, values, max_residual: doob.max_residual })
}
