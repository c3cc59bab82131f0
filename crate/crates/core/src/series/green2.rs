use std::collections::BTreeSet;

use serde::Serialize;

use super::FirstPassageSystem;
use crate::error::{Error, Result};
use crate::geometry::ReducedWord;

/// `G⁽²⁾(x, y|z) = Σ_v G(x, v|z) G(v, y|z)` by shells `|v| = m`.
#[derive(Clone, Debug, Serialize)]
pub struct Green2 {
    pub z: f64,
    pub g2: f64,
    pub g: f64,
    /// `Φ = G⁽²⁾/G`.
    pub phi: f64,
    /// Sum over `|v| ≤ shells` (times `G(e,e)²`).
    pub partial: f64,
    /// Geometric tail estimate beyond the last shell.
    pub tail: f64,
    pub shells: usize,
}

/// Sums `G⁽²⁾(x, y|z)` for a nearest-neighbour walk. Every `v` factors through its
/// projection `p` onto the subtree spanned by the prefixes of `x` and `y`, so
/// `G(x,v)G(v,y) = G(e,e)² F(x,p) F(p,y) Π_l F_{t_l}F_{t_l⁻¹}` with `v = p·t`.
pub fn green_second_order(
    sys: &FirstPassageSystem,
    x: &ReducedWord,
    y: &ReducedWord,
    z: f64,
    max_radius: usize,
    tol: f64,
) -> Result<Green2> {
    let a = sys.alphabet();
    a.word(x.letters())?;
    a.word(y.letters())?;
    let f = sys.solve(z)?;
    let g0 = sys.green_from(z, &f);
    let k = f.len();
    let c: Vec<f64> = (0..k).map(|l| f[l] * f[sys.inverse_index(l)]).collect();
    let tree: BTreeSet<ReducedWord> = (0..=x.len()).map(|j| x.prefix(j)).chain((0..=y.len()).map(|j| y.prefix(j))).collect();
    let depth = x.len().max(y.len());

    struct Branch {
        level: usize,
        weight: f64,
        u: Vec<f64>,
    }
    let mut branches: Vec<Branch> = tree
        .iter()
        .map(|p| {
            let weight = sys.word_passage_from(&f, &a.relative(x, p)) * sys.word_passage_from(&f, &a.relative(p, y));
            let mut u = vec![0.0; k];
            for l in a.forward_letters(p) {
                if !tree.contains(&a.step(p, l)) {
                    let i = sys.index(l);
                    u[i] = c[i];
                }
            }
            Branch { level: p.len(), weight, u }
        })
        .collect();

    let mut partial = 0.0;
    let mut prev_inc = f64::INFINITY;
    let (mut small, mut growing) = (0usize, 0usize);
    for m in 0..=max_radius {
        let mut inc = 0.0;
        for b in branches.iter_mut() {
            if m < b.level {
                continue;
            }
            if m == b.level {
                inc += b.weight;
                continue;
            }
            if m > b.level + 1 {
                let total: f64 = b.u.iter().sum();
                let next: Vec<f64> = (0..k).map(|l| c[l] * (total - b.u[sys.inverse_index(l)])).collect();
                b.u = next;
            }
            inc += b.weight * b.u.iter().sum::<f64>();
        }
        partial += inc;
        if m > depth + 1 {
            growing = if inc >= prev_inc { growing + 1 } else { 0 };
            if growing >= 3 {
                return Err(Error::Convergence(format!(
                    "G2 shell increments non-decreasing at radius {m} (z = {z} at or beyond the radius of convergence)"
                )));
            }
            small = if inc < tol * partial { small + 1 } else { 0 };
            if small >= 3 {
                let ratio = inc / prev_inc;
                if ratio >= 1.0 - 1e-13 {
                    return Err(Error::Convergence(format!("G2 shell ratio {ratio} >= 1 at radius {m}")));
                }
                let tail = inc * ratio / (1.0 - ratio);
                let g = g0 * sys.word_passage_from(&f, &a.relative(x, y));
                let g2 = g0 * g0 * (partial + tail);
                return Ok(Green2 { z, g2, g, phi: g2 / g, partial: g0 * g0 * partial, tail: g0 * g0 * tail, shells: m });
            }
        }
        prev_inc = inc;
    }
    Err(Error::Convergence(format!("G2 shells not converged within radius {max_radius} at z = {z}")))
}

/// `Φ(x,y|r−)/Φ(e,y|r−)` from evaluations at `z = r − ε`.
#[derive(Clone, Debug, Serialize)]
pub struct PhiLimit {
    pub eps: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Richardson extrapolation in `√ε` of the last two ratios.
    pub limit: f64,
    pub shells: Vec<usize>,
}

pub fn phi_ratio_limit(sys: &FirstPassageSystem, x: &ReducedWord, y: &ReducedWord, eps: &[f64], tol: f64) -> Result<PhiLimit> {
    let r = sys.singularity()?.r;
    let e = ReducedWord::identity();
    let mut ratios = Vec::new();
    let mut shells = Vec::new();
    for &ep in eps {
        let z = r - ep;
        let num = green_second_order(sys, x, y, z, 50_000_000, tol)?;
        let den = green_second_order(sys, &e, y, z, 50_000_000, tol)?;
        ratios.push(num.phi / den.phi);
        shells.push(num.shells.max(den.shells));
    }
    let n = ratios.len();
    let limit = if n >= 2 {
        let (s1, s2) = (eps[n - 2].sqrt(), eps[n - 1].sqrt());
        (ratios[n - 1] * s1 - ratios[n - 2] * s2) / (s1 - s2)
    } else {
        ratios[0]
    };
    Ok(PhiLimit { eps: eps.to_vec(), ratios, limit, shells })
}
