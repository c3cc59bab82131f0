use serde::Serialize;

use super::{GroupLaw, IsotropicLaw, WalkSpec};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    /// `ρ = P̂(ρ(P₁))` through the spherical transform.
    SphericalTransform,
    /// `min_c Σ μ(k) e^{ck}` on the integers.
    Laplace,
    /// Radius of convergence of the first-passage system.
    FirstPassage,
    /// Radius of convergence of the ball first-passage system.
    BallSystem,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralRadius {
    pub value: f64,
    pub method: SpectralMethod,
    /// Bracket `[lo, hi]` for `r = 1/ρ` when found by bisection.
    pub bracket: Option<(f64, f64)>,
}

/// `P̂(t) = Σ a_d P̂_d(t)` with `P̂_1(t) = t`.
pub fn isotropic_transform(law: &IsotropicLaw, t: f64) -> f64 {
    let q = law.q as f64;
    let (mut prev, mut cur) = (1.0, t);
    let mut acc = law.a(0);
    for d in 1..law.profile.len() {
        acc += law.a(d) * cur;
        let next = (q + 1.0) / q * (t * cur - prev / (q + 1.0));
        prev = cur;
        cur = next;
    }
    acc
}

/// `ρ(P₁) = 2√q/(q+1)`.
pub fn rho_p1(q: u32) -> f64 {
    let q = q as f64;
    2.0 * q.sqrt() / (q + 1.0)
}

/// Spectral radius of a walk on the integers.
pub fn lattice_spectral_radius(law: &GroupLaw) -> f64 {
    let terms: Vec<(f64, f64)> = law.float_entries().map(|(w, p)| (w.lattice_coordinate() as f64, p)).collect();
    let f = |c: f64| terms.iter().map(|(k, p)| p * (c * k).exp()).sum::<f64>();
    let df = |c: f64| terms.iter().map(|(k, p)| p * k * (c * k).exp()).sum::<f64>();
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if df(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    f(0.5 * (lo + hi))
}

/// Exponent `c` minimizing `Σ μ(k) e^{ck}`.
pub fn lattice_tilt(law: &GroupLaw) -> f64 {
    let terms: Vec<(f64, f64)> = law.float_entries().map(|(w, p)| (w.lattice_coordinate() as f64, p)).collect();
    let df = |c: f64| terms.iter().map(|(k, p)| p * k * (c * k).exp()).sum::<f64>();
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if df(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn spectral_radius(spec: &WalkSpec) -> Result<SpectralRadius> {
    if let Some(law) = spec.isotropic() {
        return Ok(SpectralRadius {
            value: isotropic_transform(&law, rho_p1(law.q)),
            method: SpectralMethod::SphericalTransform,
            bracket: None,
        });
    }
    let g = spec.group_law();
    if g.alphabet() == crate::geometry::Alphabet::free(1) {
        return Ok(SpectralRadius { value: lattice_spectral_radius(&g), method: SpectralMethod::Laplace, bracket: None });
    }
    if g.is_nearest_neighbour() {
        let s = crate::series::FirstPassageSystem::new(&g)?.singularity()?;
        return Ok(SpectralRadius { value: 1.0 / s.r, method: SpectralMethod::FirstPassage, bracket: Some(s.bracket) });
    }
    let s = crate::matrix_boundary::BallSystem::new(&g)?.singularity()?;
    Ok(SpectralRadius { value: 1.0 / s.r, method: SpectralMethod::BallSystem, bracket: Some(s.bracket) })
}
