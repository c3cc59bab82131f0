//! Generating functions of nearest-neighbour walks on word groups: the
//! first-passage system, coefficient recursions, the singularity `r = 1/ρ`,
//! square-root Puiseux data and second-order Green sums.

mod first_passage;
mod green2;
mod puiseux;

pub use first_passage::FirstPassageSystem;
pub use green2::{green_second_order, phi_ratio_limit, Green2, PhiLimit};
pub use puiseux::{puiseux_extract, square_root_data, EPS, PuiseuxData, PuiseuxTable, PuiseuxTarget, WordPuiseux};

use serde::Serialize;

use crate::error::Result;
use crate::geometry::ReducedWord;
use crate::scalar::{Arithmetic, HiPrec, Ratio, Scalar};
use crate::walks::GroupLaw;

/// Truncated power series `Σ_{n ≤ N} c_n zⁿ`.
#[derive(Clone, Debug, Serialize)]
pub struct PowerSeries {
    pub coefficients: Vec<f64>,
    /// Exact coefficients as `p/q` strings in rational mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<Vec<String>>,
    pub precision: Arithmetic,
}

impl PowerSeries {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn derivative(&self, z: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (n, c)| acc * z + n as f64 * c)
    }
}

/// Which generating function to expand.
#[derive(Clone, Debug)]
pub enum SeriesTarget {
    /// `F_i(z)` for the generator letter.
    Passage(i32),
    /// `G(e, x|z)`.
    Green(ReducedWord),
}

fn mul_series<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let n = a.len();
    let mut out = vec![S::zero(); n];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().take(n - i).enumerate() {
            out[i + j].add_assign(&ai.mul(bj));
        }
    }
    out
}

/// Coefficients `f_i^{(n)}` for every letter, `n ≤ n_max`, by order-by-order
/// recursion of the first-passage equations.
fn passage_coefficients<S: Scalar>(sys: &FirstPassageSystem, law: &GroupLaw, n_max: usize, bits: usize) -> Vec<Vec<S>> {
    let a = sys.alphabet();
    let k = sys.letters().len();
    let mu: Vec<S> = sys
        .letters()
        .iter()
        .map(|&l| S::from_ratio(&law.exact_prob(&a.word(&[l]).unwrap()), bits))
        .collect();
    let mu_e = S::from_ratio(&law.exact_prob(&ReducedWord::identity()), bits);
    let mut f: Vec<Vec<S>> = vec![vec![S::zero(); n_max + 1]; k];
    for n in 1..=n_max {
        for i in 0..k {
            let mut c = if n == 1 { mu[i].clone() } else { S::zero() };
            c.add_assign(&mu_e.mul(&f[i][n - 1]));
            // Σ_{j≠i} μ_j Σ_m f_{j⁻¹}[m] f_i[n−1−m]
            for m in 1..n.saturating_sub(1) {
                let fi = &f[i][n - 1 - m];
                if fi.is_zero() {
                    continue;
                }
                let mut t = S::zero();
                for j in (0..k).filter(|&j| j != i) {
                    t.add_assign(&mu[j].mul(&f[sys.inverse_index(j)][m]));
                }
                c.add_assign(&t.mul(fi));
            }
            f[i][n] = c;
        }
    }
    f
}

fn green_coefficients<S: Scalar>(
    sys: &FirstPassageSystem,
    law: &GroupLaw,
    f: &[Vec<S>],
    x: &ReducedWord,
    n_max: usize,
    bits: usize,
) -> Vec<S> {
    let a = sys.alphabet();
    let mu_e = S::from_ratio(&law.exact_prob(&ReducedWord::identity()), bits);
    // G = 1/(1 − Q), Q = z μ(e) + z Σ_j μ_j F_{j⁻¹}.
    let mut q = vec![S::zero(); n_max + 1];
    if n_max >= 1 {
        q[1] = mu_e;
    }
    for (j, &l) in sys.letters().iter().enumerate() {
        let mj = S::from_ratio(&law.exact_prob(&a.word(&[l]).unwrap()), bits);
        for n in 1..n_max {
            q[n + 1].add_assign(&mj.mul(&f[sys.inverse_index(j)][n]));
        }
    }
    let mut g = vec![S::zero(); n_max + 1];
    g[0] = S::from_ratio(&Ratio::from_integer(1.into()), bits);
    for n in 1..=n_max {
        let mut c = S::zero();
        for k in 1..=n {
            if !q[k].is_zero() {
                c.add_assign(&q[k].mul(&g[n - k]));
            }
        }
        g[n] = c;
    }
    for &l in x.letters() {
        g = mul_series(&g, &f[sys.index(l)]);
    }
    g
}

fn coefficients<S: Scalar>(law: &GroupLaw, target: &SeriesTarget, n_max: usize, bits: usize) -> Result<Vec<S>> {
    let sys = FirstPassageSystem::new(law)?;
    let f = passage_coefficients::<S>(&sys, law, n_max, bits);
    Ok(match target {
        SeriesTarget::Passage(l) => f[sys.index(*l)].clone(),
        SeriesTarget::Green(x) => {
            sys.alphabet().word(x.letters())?;
            green_coefficients(&sys, law, &f, x, n_max, bits)
        }
    })
}

/// Coefficients of `F_i` or `G(e, x|·)` up to `z^{n_max}`.
pub fn series_coefficients(law: &GroupLaw, target: &SeriesTarget, n_max: usize, arith: Arithmetic) -> Result<PowerSeries> {
    Ok(match arith {
        Arithmetic::Exact => {
            let c = coefficients::<Ratio>(law, target, n_max, 0)?;
            PowerSeries {
                coefficients: c.iter().map(|v| v.to_f64()).collect(),
                exact: Some(c.iter().map(|v| v.to_string()).collect()),
                precision: arith,
            }
        }
        Arithmetic::Float { bits } if bits <= 64 => PowerSeries {
            coefficients: coefficients::<f64>(law, target, n_max, bits)?,
            exact: None,
            precision: arith,
        },
        Arithmetic::Float { bits } => PowerSeries {
            coefficients: coefficients::<HiPrec>(law, target, n_max, bits)?.iter().map(|v| v.to_f64()).collect(),
            exact: None,
            precision: arith,
        },
    })
}

/// Exact rational coefficients of `G(e, x|·)`.
pub fn exact_green_coefficients(law: &GroupLaw, x: &ReducedWord, n_max: usize) -> Result<Vec<Ratio>> {
    coefficients::<Ratio>(law, &SeriesTarget::Green(x.clone()), n_max, 0)
}
