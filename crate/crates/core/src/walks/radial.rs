use num_bigint::BigInt;
use num_traits::{pow, Zero};

use super::{IsotropicLaw, WalkSpec};
use crate::error::{Error, Result};
use crate::scalar::Ratio;

/// Distance process `|X_n|` of an isotropic walk.
#[derive(Clone, Debug)]
pub struct RadialChain {
    q: u32,
    range: usize,
    /// Rows for `k < range`; row `range` is the translation-invariant bulk row.
    rows: Vec<Vec<(usize, Ratio)>>,
}

/// Landing distances of the `|S_d|` vertices at distance `d` from a vertex at
/// depth `k`, with multiplicities.
pub fn sphere_landing(q: u32, k: usize, d: usize) -> Vec<(usize, BigInt)> {
    if d == 0 {
        return vec![(k, BigInt::from(1))];
    }
    let qb = BigInt::from(q);
    let qp = |e: usize| pow(qb.clone(), e);
    let mut out = Vec::new();
    // Straight down without climbing.
    let first = if k >= 1 { qb.clone() } else { BigInt::from(q + 1) };
    out.push((k + d, first * qp(d - 1)));
    // Climb j levels, then descend d - j steps into a different branch.
    for j in 1..d.min(k + 1) {
        let branches = if j == k { q } else { q - 1 };
        out.push((k + d - 2 * j, BigInt::from(branches) * qp(d - j - 1)));
    }
    if d <= k {
        out.push((k - d, BigInt::from(1)));
    }
    out
}

/// Exact `|S_k| = (q+1) q^{k-1}`.
pub fn sphere_size(q: u32, k: usize) -> BigInt {
    if k == 0 {
        BigInt::from(1)
    } else {
        BigInt::from(q + 1) * pow(BigInt::from(q), k - 1)
    }
}

fn exact_row(law: &IsotropicLaw, k: usize) -> Vec<(usize, Ratio)> {
    let mut acc: Vec<Ratio> = vec![Ratio::zero(); k + law.range() + 1];
    for (d, a) in law.profile.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        let total = sphere_size(law.q, d);
        for (landing, count) in sphere_landing(law.q, k, d) {
            acc[landing] += a * Ratio::new(count, total.clone());
        }
    }
    acc.into_iter().enumerate().filter(|(_, p)| !p.is_zero()).collect()
}

/// Projects an isotropic walk (or a sphere-uniform group law) onto distances.
pub fn radial_projection(spec: &WalkSpec) -> Result<RadialChain> {
    let law = spec.isotropic().ok_or(Error::NotIsotropic)?;
    Ok(RadialChain::new(&law))
}

impl RadialChain {
    pub fn new(law: &IsotropicLaw) -> Self {
        let range = law.range();
        let rows = (0..=range).map(|k| exact_row(law, k)).collect();
        RadialChain { q: law.q, range, rows }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn range(&self) -> usize {
        self.range
    }

    /// `k ↦ {(k', p(k, k'))}`.
    pub fn row(&self, k: usize) -> Vec<(usize, Ratio)> {
        if k < self.range {
            self.rows[k].clone()
        } else {
            let shift = k - self.range;
            self.rows[self.range].iter().map(|(j, p)| (j + shift, p.clone())).collect()
        }
    }

    /// Row offsets relative to `k` for the bulk `k ≥ range`.
    pub(crate) fn bulk(&self) -> Vec<(i64, Ratio)> {
        self.rows[self.range]
            .iter()
            .map(|(j, p)| (*j as i64 - self.range as i64, p.clone()))
            .collect()
    }

    pub(crate) fn boundary_rows(&self) -> &[Vec<(usize, Ratio)>] {
        &self.rows[..self.range]
    }
}
