use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{Alphabet, Letter, ReducedWord};
use crate::monotone::{self, FixedPoint, MonotoneSystem, Singularity};
use crate::walks::GroupLaw;

/// One-step decomposition of the first-passage functions `F_i(z) = F(e, a_i|z)`
/// of a nearest-neighbour walk:
/// `F_i = z(μ(a_i) + μ(e)F_i + Σ_{j≠i} μ(a_j) F_{j⁻¹} F_i)`.
#[derive(Debug)]
pub struct FirstPassageSystem {
    alphabet: Alphabet,
    letters: Vec<Letter>,
    mu_e: f64,
    mu: Vec<f64>,
    inv: Vec<usize>,
    singular: OnceLock<std::result::Result<Singularity, String>>,
}

impl Clone for FirstPassageSystem {
    fn clone(&self) -> Self {
        FirstPassageSystem {
            alphabet: self.alphabet,
            letters: self.letters.clone(),
            mu_e: self.mu_e,
            mu: self.mu.clone(),
            inv: self.inv.clone(),
            singular: OnceLock::new(),
        }
    }
}

impl FirstPassageSystem {
    pub fn new(law: &GroupLaw) -> Result<Self> {
        if !law.is_nearest_neighbour() {
            return Err(Error::NotNearestNeighbour(
                "support has words of length > 1; use the ball first-passage system in matrix_boundary".into(),
            ));
        }
        let alphabet = law.alphabet();
        let letters = alphabet.letters();
        let mu = letters.iter().map(|&l| law.prob(&alphabet.word(&[l]).unwrap())).collect();
        let inv = letters
            .iter()
            .map(|&l| letters.iter().position(|&m| m == alphabet.inverse(l)).unwrap())
            .collect();
        Ok(FirstPassageSystem { alphabet, letters, mu_e: law.identity_mass(), mu, inv, singular: OnceLock::new() })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn index(&self, l: Letter) -> usize {
        self.letters.iter().position(|&m| m == l).expect("letter of the alphabet")
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.inv[i]
    }

    pub fn mu_e(&self) -> f64 {
        self.mu_e
    }

    pub fn mu(&self, i: usize) -> f64 {
        self.mu[i]
    }

    /// Minimal fixed point `(F_i(z))_i`; at `z = r` the fold solution.
    pub fn solve(&self, z: f64) -> Result<Vec<f64>> {
        if let Ok(s) = self.singularity() {
            if (z - s.r).abs() <= 1e-14 * s.r {
                return Ok(s.x);
            }
        }
        Ok(monotone::solve(self, z, None)?.x)
    }

    pub fn solve_detailed(&self, z: f64, warm: Option<&[f64]>) -> Result<FixedPoint> {
        monotone::solve(self, z, warm)
    }

    pub fn singularity(&self) -> Result<Singularity> {
        self.singular
            .get_or_init(|| monotone::singularity(self).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Convergence)
    }

    /// `G(e, e|z)` from first-passage values.
    pub fn green_from(&self, z: f64, f: &[f64]) -> f64 {
        let s: f64 = (0..f.len()).map(|j| self.mu[j] * f[self.inv[j]]).sum();
        1.0 / (1.0 - z * self.mu_e - z * s)
    }

    /// `F(e, x|z) = Π F_{x_l}`.
    pub fn word_passage_from(&self, f: &[f64], x: &ReducedWord) -> f64 {
        x.letters().iter().map(|&l| f[self.index(l)]).product()
    }

    /// `G(e, x|z)`.
    pub fn green_word(&self, z: f64, x: &ReducedWord) -> Result<f64> {
        let f = self.solve(z)?;
        Ok(self.green_from(z, &f) * self.word_passage_from(&f, x))
    }
}

impl MonotoneSystem for FirstPassageSystem {
    fn dim(&self) -> usize {
        self.letters.len()
    }

    fn psi(&self, x: &[f64]) -> DVector<f64> {
        let total: f64 = (0..x.len()).map(|j| self.mu[j] * x[self.inv[j]]).sum();
        DVector::from_iterator(
            x.len(),
            (0..x.len()).map(|i| {
                let others = total - self.mu[i] * x[self.inv[i]];
                self.mu[i] + self.mu_e * x[i] + others * x[i]
            }),
        )
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let total: f64 = (0..n).map(|j| self.mu[j] * x[self.inv[j]]).sum();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] += self.mu_e + total - self.mu[i] * x[self.inv[i]];
            for k in 0..n {
                // d/dx_k of Σ_{j≠i} μ_j x_{inv j} is μ_{inv k} unless inv k = i.
                let j = self.inv[k];
                if j != i {
                    m[(i, k)] += self.mu[j] * x[i];
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::WalkSpec;

    pub(crate) fn f2_lazy() -> GroupLaw {
        WalkSpec::parse("mode finitely-supported\nrank 2\ne 1/5\n1 1/5\n-1 1/5\n2 1/5\n-2 1/5\n")
            .unwrap()
            .group_law()
    }

    fn quadratic_root(z: f64) -> f64 {
        let (a, b, c) = (3.0 * z / 5.0, z / 5.0 - 1.0, z / 5.0);
        (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
    }

    #[test]
    fn matches_quadratic_oracle() {
        let sys = FirstPassageSystem::new(&f2_lazy()).unwrap();
        for z in [0.01, 0.5, 1.0, 1.1] {
            let f = sys.solve(z).unwrap();
            for v in &f {
                assert!((v - quadratic_root(z)).abs() < 1e-13, "z={z}");
            }
        }
    }

    #[test]
    fn radius_and_value_at_r() {
        let sys = FirstPassageSystem::new(&f2_lazy()).unwrap();
        let s = sys.singularity().unwrap();
        let r = 5.0 / (1.0 + 2.0 * 3f64.sqrt());
        assert!((s.r - r).abs() < 1e-12);
        assert!(s.bracket.1 - s.bracket.0 <= 1e-12);
        let alpha = (1.0 - r / 5.0) / (6.0 * r / 5.0);
        assert!((s.x[0] - alpha).abs() < 1e-8);
        assert!((alpha - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_differences() {
        let law = WalkSpec::parse("mode finitely-supported\nrank 2\ne 1/10\n1 3/10\n-1 1/10\n2 1/5\n-2 3/10\n")
            .unwrap()
            .group_law();
        let sys = FirstPassageSystem::new(&law).unwrap();
        let x = [0.3, 0.5, 0.2, 0.7];
        let j = sys.jacobian(&x);
        for k in 0..4 {
            let mut xp = x;
            xp[k] += 1e-6;
            let mut xm = x;
            xm[k] -= 1e-6;
            let d = (sys.psi(&xp) - sys.psi(&xm)) / 2e-6;
            for i in 0..4 {
                assert!((d[i] - j[(i, k)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_long_range() {
        let law = WalkSpec::parse("mode finitely-supported\nrank 2\ne 1/5\n1 1/5\n-1 1/5\n2 1/5\n-2 1/10\n1,2 1/10\n")
            .unwrap()
            .group_law();
        assert!(matches!(FirstPassageSystem::new(&law), Err(Error::NotNearestNeighbour(_))));
    }
}
