use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{BallSystem, PassageMatrices};
use crate::error::{Error, Result};
use crate::geometry::{EndPrefix, ReducedWord};
use crate::series::{square_root_data, EPS};

/// `λ_z = min_{u,u' ∈ B} F_{B_N}(u, u'|z)`: the Green function of the walk
/// killed on leaving `B_N`, restricted to `B × B`.
pub fn lambda_z(sys: &BallSystem, z: f64) -> Result<f64> {
    let ball = sys.ball();
    let a = ball.alphabet();
    let states = a.ball(ball.connectivity());
    let index: BTreeMap<&ReducedWord, usize> = states.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let n = states.len();
    let mut lhs = DMatrix::<f64>::identity(n, n);
    for (i, u) in states.iter().enumerate() {
        for (g, p) in &sys.mu {
            if let Some(&j) = index.get(&a.multiply(u, g)) {
                lhs[(i, j)] -= z * p;
            }
        }
    }
    let inv = lhs.try_inverse().ok_or_else(|| Error::Convergence(format!("killed Green matrix singular at z = {z}")))?;
    let mut min = f64::INFINITY;
    for u in ball.words() {
        for v in ball.words() {
            let val = inv[(index[u], index[v])];
            if !(val > 0.0) {
                return Err(Error::Convergence(format!(
                    "F_B_N({u}, {v}) = {val:e} is not positive; increase N"
                )));
            }
            min = min.min(val);
        }
    }
    Ok(min)
}

/// Birkhoff contraction coefficient `(1 − √φ)/(1 + √φ)` of `M` on the
/// positive cone in the Hilbert projective metric, restricted to the nonzero
/// columns; `0` for rank one.
pub fn factor_contraction(m: &DMatrix<f64>) -> f64 {
    let cols: Vec<usize> = (0..m.ncols()).filter(|&j| m.column(j).max() > 0.0).collect();
    let mut phi: f64 = 1.0;
    for i in 0..m.nrows() {
        for j in 0..m.nrows() {
            for &k in &cols {
                for &l in &cols {
                    let num = m[(i, k)] * m[(j, l)];
                    let den = m[(j, k)] * m[(i, l)];
                    if den > 0.0 {
                        phi = phi.min(num / den);
                    } else if num > 0.0 {
                        return 1.0;
                    }
                }
            }
        }
    }
    let s = phi.sqrt();
    (1.0 - s) / (1.0 + s)
}

#[derive(Clone, Debug, Serialize)]
pub struct Contraction {
    /// `lim Proj F₁ ⋯ F_n a`.
    pub w_inf: Vec<f64>,
    /// L¹ distance between the two seed trajectories after each factor,
    /// starting with the seeds themselves.
    pub distances: Vec<f64>,
    /// Fitted geometric decay of `distances`.
    pub rate: f64,
    pub agreement: f64,
    pub factors: usize,
}

fn project(v: DVector<f64>) -> DVector<f64> {
    let s = v.sum();
    v / s
}

/// `Proj F₁ ⋯ F_n a` for two seeds, applied right to left.
pub fn contraction_limit(mats: &[DMatrix<f64>], seeds: [&DVector<f64>; 2], tol: f64) -> Result<Contraction> {
    let mut a = project(seeds[0].clone());
    let mut b = project(seeds[1].clone());
    let mut distances = vec![(&a - &b).abs().sum()];
    for m in mats.iter().rev() {
        a = project(m * &a);
        b = project(m * &b);
        if !a.iter().chain(b.iter()).all(|v| v.is_finite()) {
            return Err(Error::Convergence("projected product degenerate (zero vector)".into()));
        }
        distances.push((&a - &b).abs().sum());
    }
    let agreement = *distances.last().unwrap();
    if agreement > tol {
        return Err(Error::Convergence(format!(
            "not yet contracted: seeds differ by {agreement:e} after {} factors",
            mats.len()
        )));
    }
    Ok(Contraction { w_inf: a.iter().copied().collect(), rate: decay_rate(&distances), distances, agreement, factors: mats.len() })
}

fn decay_rate(d: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        d.iter().enumerate().filter(|(_, v)| **v > 1e-15).map(|(i, v)| (i as f64, v.ln())).collect();
    if pts.len() >= 3 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        return (sxy / sxx).exp();
    }
    d.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct MartinMatrixValue {
    pub value: f64,
    pub k: usize,
    pub contraction: Contraction,
}

/// `K(x, ξ|ρ) = ⟨fb(x, u_k|r), w_{k,∞}⟩ / ⟨fb(e, u_k|r), w_{k,∞}⟩` with
/// `u_j = ξ_{jD}`; `k` defaults to the smallest admissible block.
pub fn martin_kernel_matrix(
    pm: &PassageMatrices<'_>,
    x: &ReducedWord,
    xi: &EndPrefix,
    k: Option<usize>,
    tol: f64,
) -> Result<MartinMatrixValue> {
    let sys = pm.system();
    let a = sys.ball().alphabet();
    let d = sys.ball().block();
    let big_r = sys.ball().range();
    let word = xi.word();
    let depth = xi.depth();
    let m = x.common_prefix_len(word);
    if m >= depth {
        return Err(Error::PrefixTooShort { depth, needed: m });
    }
    let blocks = depth / d;
    let admissible = |j: usize| j * d >= m && a.distance(&word.prefix(j * d), x) > big_r;
    let k_min = (0..=blocks).find(|&j| admissible(j));
    let k = match (k, k_min) {
        (Some(k), Some(lo)) if k >= lo => k,
        (Some(k), _) => return Err(Error::InvalidInput(format!("block {k} is not admissible for x = {x}"))),
        (None, Some(lo)) => lo,
        (None, None) => return Err(Error::PrefixTooShort { depth, needed: (blocks + 1) * d }),
    };
    if k + 1 > blocks {
        return Err(Error::PrefixTooShort { depth, needed: (k + 1) * d });
    }
    let mats: Vec<DMatrix<f64>> = (k + 1..=blocks)
        .map(|j| pm.big_fb(&ReducedWord::from_letters_unchecked(word.letters()[(j - 1) * d..j * d].to_vec())))
        .collect();
    let nb = sys.ball().len();
    let ones = DVector::from_element(nb, 1.0);
    let ramp = DVector::from_iterator(nb, (0..nb).map(|i| (i + 1) as f64));
    let contraction = contraction_limit(&mats, [&ones, &ramp], tol)?;
    let w = DVector::from_column_slice(&contraction.w_inf);
    let u_k = word.prefix(k * d);
    let num = pm.fb(x, &u_k).dot(&w);
    let den = pm.fb(&ReducedWord::identity(), &u_k).dot(&w);
    Ok(MartinMatrixValue { value: num / den, k, contraction })
}

/// Ratio kernel `H(x, y) = β(x, y)/β(e, y)` from two-scale differencing of
/// `G(·, y|z)` below `r`.
pub struct RatioMatrixKernel<'a> {
    r: f64,
    at: [PassageMatrices<'a>; 3],
}

impl<'a> RatioMatrixKernel<'a> {
    pub fn new(sys: &'a BallSystem) -> Result<Self> {
        let r = sys.r()?;
        let coarse = crate::monotone::solve(sys, r - EPS[0], None)?.x;
        let fine = crate::monotone::solve(sys, r - EPS[1], Some(&coarse))?.x;
        Ok(RatioMatrixKernel {
            r,
            at: [sys.at(r)?, sys.at_solution(r - EPS[0], &coarse)?, sys.at_solution(r - EPS[1], &fine)?],
        })
    }

    pub fn at_r(&self) -> &PassageMatrices<'a> {
        &self.at[0]
    }

    /// `β(x, y)` in `G(x, y|z) = G(x, y|r) − β(x, y)√(r − z) + ⋯`.
    pub fn beta(&self, x: &ReducedWord, y: &ReducedWord) -> Result<f64> {
        let g: Vec<f64> = self.at.iter().map(|pm| pm.green(x, y)).collect();
        Ok(square_root_data(self.r, g[0], [g[1], g[2]])?.beta)
    }

    pub fn ratio(&self, x: &ReducedWord, y: &ReducedWord) -> Result<f64> {
        Ok(self.beta(x, y)? / self.beta(&ReducedWord::identity(), y)?)
    }
}

pub fn ratio_kernel_matrix(sys: &BallSystem, x: &ReducedWord, y: &ReducedWord) -> Result<f64> {
    RatioMatrixKernel::new(sys)?.ratio(x, y)
}

#[cfg(test)]
mod tests {
    use super::super::column_ratio;
    use super::super::tests::{f2_lazy, f2_range2};
    use super::*;
    use crate::geometry::{Alphabet, Ray};
    use crate::kernels::NnKernels;

    #[test]
    fn lambda_positive_and_monotone() {
        let sys = BallSystem::new(&f2_range2()).unwrap();
        let r = sys.r().unwrap();
        let vals: Vec<f64> = [0.3, 0.6, 1.0].iter().map(|c| lambda_z(&sys, c * r).unwrap()).collect();
        assert!(vals[0] > 0.0 && vals[0] <= vals[1] && vals[1] <= vals[2], "{vals:?}");
        let a = Alphabet::free(2);
        let pm = sys.at(r).unwrap();
        let w = a.parse("1,2,-1,-1,2,2,1").unwrap();
        assert_eq!(w.len(), sys.ball().block());
        let ratio = column_ratio(&pm.big_fb(&w)).unwrap();
        assert!(ratio >= vals[2], "{ratio} < {}", vals[2]);
    }

    #[test]
    fn contraction_of_identical_factors_finds_perron_direction() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let mats = vec![m; 60];
        let c = contraction_limit(&mats, [&DVector::from_vec(vec![1.0, 0.0]), &DVector::from_vec(vec![0.2, 0.8])], 1e-10)
            .unwrap();
        assert!((c.w_inf[0] - 0.5).abs() < 1e-12);
        assert!((c.rate - 1.0 / 3.0).abs() < 1e-3, "{}", c.rate);
    }

    #[test]
    fn birkhoff_below_one_on_blocks() {
        let sys = BallSystem::new(&f2_range2()).unwrap();
        let pm = sys.at(sys.r().unwrap()).unwrap();
        let a = Alphabet::free(2);
        for s in ["1,2,-1,-1,2,2,1", "2,2,2,2,2,2,2", "-1,-2,1,-2,-1,2,2"] {
            let tau = factor_contraction(&pm.big_fb(&a.parse(s).unwrap()));
            assert!(tau < 1.0, "{s}: {tau}");
        }
    }

    #[test]
    fn nn_martin_matches_closed_form() {
        let law = f2_lazy();
        let sys = BallSystem::new(&law).unwrap();
        let pm = sys.at(sys.r().unwrap()).unwrap();
        let nn = NnKernels::new(&law).unwrap();
        let a = Alphabet::free(2);
        let xi = Ray::parse(&a, "1,2|-1,2").unwrap().prefix(10);
        for x in a.ball(2) {
            let got = martin_kernel_matrix(&pm, &x, &xi, None, 1e-10).unwrap();
            let want = nn.martin_at(&x, &xi, nn.rho()).unwrap();
            assert!((got.value / want - 1.0).abs() < 1e-8, "{x}: {} vs {want}", got.value);
        }
        assert!(martin_kernel_matrix(&pm, &ReducedWord::identity(), &xi, None, 1e-10).unwrap().value == 1.0);
    }

    #[test]
    fn range2_martin_independent_of_block() {
        let sys = BallSystem::new(&f2_range2()).unwrap();
        let pm = sys.at(sys.r().unwrap()).unwrap();
        let a = Alphabet::free(2);
        let xi = Ray::parse(&a, "2|1,-2,1").unwrap().prefix(7 * 12);
        for x in a.ball(2) {
            let k1 = martin_kernel_matrix(&pm, &x, &xi, None, 1e-10).unwrap();
            let k2 = martin_kernel_matrix(&pm, &x, &xi, Some(k1.k + 2), 1e-10).unwrap();
            assert!((k1.value - k2.value).abs() < 1e-8 * k1.value, "{x}: {} vs {}", k1.value, k2.value);
            assert!(k1.contraction.rate < 1.0);
        }
    }

    #[test]
    fn range2_ratio_kernel_approaches_martin() {
        let sys = BallSystem::new(&f2_range2()).unwrap();
        let h = RatioMatrixKernel::new(&sys).unwrap();
        let a = Alphabet::free(2);
        let ray = Ray::parse(&a, "2|1,-2,1").unwrap();
        let x = a.parse("-1,2").unwrap();
        let k = martin_kernel_matrix(h.at_r(), &x, &ray.prefix(7 * 12), None, 1e-10).unwrap().value;
        let hs: Vec<f64> = [4, 8, 12, 16].iter().map(|&n| h.ratio(&x, &ray.vertex(n)).unwrap()).collect();
        let gaps: Vec<f64> = hs.iter().map(|v| (v - k).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?} (K = {k})");
        // The approach is O(1/n); extrapolating in 1/n lands much closer.
        let extrapolated = (16.0 * hs[3] - 12.0 * hs[2]) / 4.0;
        eprintln!("{hs:?} K={k} extrapolated={extrapolated}");
        assert!((extrapolated - k).abs() < 0.25 * gaps[3], "{extrapolated} vs {k}");
    }
}
