use super::spherical::spherical_coefficient;
use super::{stabilize, BoundaryValue};
use crate::error::Result;
use crate::geometry::{horocycle, Alphabet, Ray, ReducedWord};
use crate::scalar::ratio_to_f64;

/// `H(x, y) = φ(d(x,y))/φ(|y|)` for isotropic walks on `T_{q+1}`.
pub fn ratio_kernel_isotropic(q: u32, x: &ReducedWord, y: &ReducedWord) -> f64 {
    let a = Alphabet::tree(q);
    let d = a.distance(x, y);
    let k = y.len();
    let c = ratio_to_f64(&(spherical_coefficient(q, d) / spherical_coefficient(q, k)));
    c * (q as f64).powf((k as f64 - d as f64) / 2.0)
}

/// `H(x, ξ) = q^{−hor(x,ξ)/2}` at a prefix of `ξ`.
pub fn tree_boundary_value(q: u32, x: &ReducedWord, ray: &Ray, depth: usize) -> Result<f64> {
    let h = horocycle(x, &ray.prefix(depth))?;
    Ok((q as f64).powf(-(h as f64) / 2.0))
}

/// Boundary kernel with a stabilization check at `depth + 4`.
pub fn tree_boundary_kernel(q: u32, x: &ReducedWord, ray: &Ray, depth: usize, tol: f64) -> Result<BoundaryValue> {
    stabilize(depth, tol, |d| tree_boundary_value(q, x, ray, d))
}
