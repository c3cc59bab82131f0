use serde::Serialize;

use super::FirstPassageSystem;
use crate::error::{Error, Result};
use crate::geometry::{Letter, ReducedWord};

/// Differencing scales below `r`.
pub const EPS: [f64; 2] = [1e-6, 1e-8];

/// Leading terms of `value(z) = α − β√(r − z) + O(r − z)`.
#[derive(Clone, Debug, Serialize)]
pub struct PuiseuxData {
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Fitted exponent of `α − value(r − ε)` in `ε`; `1/2` for a square root.
    pub exponent: f64,
    pub beta_coarse: f64,
    pub beta_fine: f64,
}

/// `β` by two-scale differencing with Richardson extrapolation in `√ε`.
pub fn square_root_data(r: f64, alpha: f64, below: [f64; 2]) -> Result<PuiseuxData> {
    let d: Vec<f64> = below.iter().map(|v| alpha - v).collect();
    let s: Vec<f64> = EPS.iter().map(|e| e.sqrt()).collect();
    let exponent = if d[0] > 0.0 && d[1] > 0.0 { (d[0] / d[1]).ln() / (EPS[0] / EPS[1]).ln() } else { f64::NAN };
    if !(0.45..=0.55).contains(&exponent) {
        return Err(Error::NotSquareRoot { exponent });
    }
    let coarse = d[0] / s[0];
    let fine = d[1] / s[1];
    let beta = (fine * s[0] - coarse * s[1]) / (s[0] - s[1]);
    Ok(PuiseuxData { r, alpha, beta, exponent, beta_coarse: coarse, beta_fine: fine })
}

/// Letter and Green-function Puiseux data at the singularity.
#[derive(Clone, Debug, Serialize)]
pub struct PuiseuxTable {
    pub r: f64,
    pub letters: Vec<Letter>,
    /// `(α_i, β_i)` per letter.
    pub passage: Vec<PuiseuxData>,
    /// `(α₀, β₀)` of `G(e, e|z)`.
    pub green: PuiseuxData,
    #[serde(skip)]
    values: [Vec<f64>; 3],
    #[serde(skip)]
    greens: [f64; 3],
    #[serde(skip)]
    sys: Option<FirstPassageSystem>,
}

impl PuiseuxTable {
    pub fn new(sys: &FirstPassageSystem) -> Result<Self> {
        let sing = sys.singularity()?;
        let r = sing.r;
        let at_r = sing.x.clone();
        let coarse = sys.solve_detailed(r - EPS[0], None)?.x;
        let fine = sys.solve_detailed(r - EPS[1], Some(&coarse))?.x;
        let passage = (0..at_r.len())
            .map(|i| square_root_data(r, at_r[i], [coarse[i], fine[i]]))
            .collect::<Result<Vec<_>>>()?;
        let greens = [
            sys.green_from(r, &at_r),
            sys.green_from(r - EPS[0], &coarse),
            sys.green_from(r - EPS[1], &fine),
        ];
        let green = square_root_data(r, greens[0], [greens[1], greens[2]])?;
        Ok(PuiseuxTable {
            r,
            letters: sys.letters().to_vec(),
            passage,
            green,
            values: [at_r, coarse, fine],
            greens,
            sys: Some(sys.clone()),
        })
    }

    fn idx(&self, l: Letter) -> usize {
        self.letters.iter().position(|&m| m == l).expect("letter of the alphabet")
    }

    pub fn alpha(&self, l: Letter) -> f64 {
        self.passage[self.idx(l)].alpha
    }

    /// `α(x) = α₀ Π α_{x_l}`.
    pub fn alpha_word(&self, x: &ReducedWord) -> f64 {
        self.green.alpha * x.letters().iter().map(|&l| self.alpha(l)).product::<f64>()
    }

    /// `γ(x) = β₀/α₀ + Σ β_{x_l}/α_{x_l}`.
    pub fn gamma(&self, x: &ReducedWord) -> f64 {
        let base = self.green.beta / self.green.alpha;
        base + x
            .letters()
            .iter()
            .map(|&l| {
                let p = &self.passage[self.idx(l)];
                p.beta / p.alpha
            })
            .sum::<f64>()
    }

    pub fn beta_word(&self, x: &ReducedWord) -> f64 {
        self.alpha_word(x) * self.gamma(x)
    }

    /// Assembled and directly differenced data for `G(e, x|z)`.
    pub fn word(&self, x: &ReducedWord) -> Result<WordPuiseux> {
        let sys = self.sys.as_ref().expect("table built from a system");
        let g = |k: usize| self.greens[k] * sys.word_passage_from(&self.values[k], x);
        let direct = square_root_data(self.r, g(0), [g(1), g(2)])?;
        Ok(WordPuiseux {
            x: x.to_string(),
            alpha: self.alpha_word(x),
            gamma: self.gamma(x),
            beta: self.beta_word(x),
            direct,
        })
    }
}

/// Puiseux data of `G(e, x|z)`: the product assembly next to direct differencing.
#[derive(Clone, Debug, Serialize)]
pub struct WordPuiseux {
    pub x: String,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub direct: PuiseuxData,
}

#[derive(Clone, Debug)]
pub enum PuiseuxTarget {
    Passage(Letter),
    Green(ReducedWord),
}

pub fn puiseux_extract(sys: &FirstPassageSystem, target: &PuiseuxTarget) -> Result<PuiseuxData> {
    let table = PuiseuxTable::new(sys)?;
    match target {
        PuiseuxTarget::Passage(l) => Ok(table.passage[table.idx(*l)].clone()),
        PuiseuxTarget::Green(x) => Ok(table.word(x)?.direct),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::WalkSpec;

    fn table(text: &str) -> PuiseuxTable {
        let law = WalkSpec::parse(text).unwrap().group_law();
        PuiseuxTable::new(&FirstPassageSystem::new(&law).unwrap()).unwrap()
    }

    #[test]
    fn f2_lazy_values() {
        let t = table("mode finitely-supported\nrank 2\ne 1/5\n1 1/5\n-1 1/5\n2 1/5\n-2 1/5\n");
        let r = 5.0 / (1.0 + 2.0 * 3f64.sqrt());
        let alpha = (1.0 - r / 5.0) / (6.0 * r / 5.0);
        for p in &t.passage {
            assert!((p.alpha - alpha).abs() < 1e-9);
            assert!((p.exponent - 0.5).abs() < 0.05);
            assert!(p.beta > 0.0);
        }
        assert!((t.gamma(&ReducedWord::identity()) - t.green.beta / t.green.alpha).abs() < 1e-15);
    }

    #[test]
    fn assembly_matches_direct_differencing() {
        let t = table("mode finitely-supported\nrank 2\ne 1/6\n1 1/3\n-1 1/12\n2 1/4\n-2 1/6\n");
        let a = crate::geometry::Alphabet::free(2);
        for w in a.ball(4) {
            let wp = t.word(&w).unwrap();
            assert!((wp.alpha - wp.direct.alpha).abs() <= 1e-9 * wp.alpha);
            assert!((wp.beta - wp.direct.beta).abs() <= 1e-4 * wp.beta, "{w}: {} vs {}", wp.beta, wp.direct.beta);
        }
    }

    #[test]
    fn rejects_non_square_root() {
        let err = square_root_data(1.0, 1.0, [1.0 - 1e-6, 1.0 - 1e-8]).unwrap_err();
        assert!(matches!(err, Error::NotSquareRoot { .. }));
    }
}
