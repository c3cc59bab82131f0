//! Minimal nonnegative fixed points of `x = z Ψ(x)` where `Ψ` has
//! nonnegative coefficients, and the radius `r` beyond which none exists.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub trait MonotoneSystem: Sync {
    fn dim(&self) -> usize;
    fn psi(&self, x: &[f64]) -> DVector<f64>;
    /// `∂Ψ/∂x`.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPoint {
    pub z: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `min (I − zJ)⁻¹ 1`; positive iff `ρ(zJ) < 1`.
    pub certificate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Singularity {
    pub r: f64,
    /// `[lo, hi]`: a fixed point with `ρ(zJ) < 1` exists at `lo` and not at `hi`.
    pub bracket: (f64, f64),
    /// Fixed point at `r`.
    pub x: Vec<f64>,
    /// Whether `r` and `x` come from the fold refinement.
    pub refined: bool,
}

const MAX_ITER: usize = 500;
const BLOWUP: f64 = 1e10;

/// Newton from below, starting at `warm` (which must lie below the minimal
/// fixed point) or at zero.
pub fn solve<M: MonotoneSystem + ?Sized>(sys: &M, z: f64, warm: Option<&[f64]>) -> Result<FixedPoint> {
    let n = sys.dim();
    let mut x: Vec<f64> = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let ones = DVector::from_element(n, 1.0);
    let mut last_step = f64::INFINITY;
    for it in 0..MAX_ITER {
        let a = DMatrix::identity(n, n) - sys.jacobian(&x) * z;
        let lu = a.lu();
        let y = lu.solve(&ones).ok_or_else(|| Error::Convergence(format!("singular Jacobian at z = {z}")))?;
        let cert = y.min();
        if !(cert > 0.0) || !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Convergence(format!("no fixed point with rho(zJ) < 1 at z = {z}")));
        }
        let g = sys.psi(&x) * z - DVector::from_column_slice(&x);
        let d = lu.solve(&g).ok_or_else(|| Error::Convergence(format!("singular Jacobian at z = {z}")))?;
        let scale = x.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        let step = d.amax();
        for (xi, di) in x.iter_mut().zip(d.iter()) {
            *xi += di;
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP) {
            return Err(Error::Convergence(format!("iteration diverged at z = {z}")));
        }
        // Near the fold `I − zJ` is ill-conditioned and the step stalls at a
        // round-off floor instead of reaching 1e-15.
        let converged = step <= 1e-15 * scale || (step <= 1e-10 * scale && step >= 0.5 * last_step);
        if converged {
            // Recheck spectral condition at the final point.
            let a = DMatrix::identity(n, n) - sys.jacobian(&x) * z;
            let y = a.lu().solve(&ones);
            let cert = y.as_ref().map(|y| y.min()).unwrap_or(-1.0);
            if !(cert > 0.0) {
                return Err(Error::Convergence(format!("no fixed point with rho(zJ) < 1 at z = {z}")));
            }
            for v in x.iter_mut() {
                if *v < 0.0 && *v > -1e-14 {
                    *v = 0.0;
                }
            }
            return Ok(FixedPoint { z, x, iterations: it + 1, certificate: cert });
        }
        last_step = step;
    }
    Err(Error::Convergence(format!("Newton did not converge at z = {z} in {MAX_ITER} steps")))
}

/// Plain iteration `x ← zΨ(x)`.
pub fn iterate<M: MonotoneSystem + ?Sized>(sys: &M, z: f64, start: &[f64], steps: usize) -> Vec<f64> {
    let mut x = start.to_vec();
    for _ in 0..steps {
        x = (sys.psi(&x) * z).iter().copied().collect();
    }
    x
}

/// Bisection for `r` on `(0, 2]`, sharpened by a bordered Newton solve of
/// the fold equations.
pub fn singularity<M: MonotoneSystem + ?Sized>(sys: &M) -> Result<Singularity> {
    let ok = |z: f64, warm: Option<&[f64]>| solve(sys, z, warm).ok();
    let mut hi = 2.0;
    if ok(hi, None).is_some() {
        return Err(Error::Convergence("no singularity bracket found in (0, 2]".into()));
    }
    let mut lo = 0.0;
    let mut x_lo = vec![0.0; sys.dim()];
    let bisect = |lo: &mut f64, hi: &mut f64, x_lo: &mut Vec<f64>, width: f64| {
        while *hi - *lo > width {
            let mid = 0.5 * (*lo + *hi);
            match ok(mid, Some(x_lo)) {
                Some(fp) => {
                    *lo = mid;
                    *x_lo = fp.x;
                }
                None => *hi = mid,
            }
        }
    };
    bisect(&mut lo, &mut hi, &mut x_lo, 1e-6);
    if lo == 0.0 {
        return Err(Error::Convergence("no fixed point found for any tested z > 0".into()));
    }
    if let Some((r, x)) = fold(sys, lo, &x_lo) {
        let half = 4.99e-13;
        if r > lo - 1e-9 && r < hi + 1e-9 {
            let below = ok(r - half, Some(&x_lo));
            if below.is_some() && ok(r + half, below.as_ref().map(|f| f.x.as_slice())).is_none() {
                return Ok(Singularity { r, bracket: (r - half, r + half), x, refined: true });
            }
        }
    }
    bisect(&mut lo, &mut hi, &mut x_lo, 1e-12);
    let r = 0.5 * (lo + hi);
    let x = fold(sys, lo, &x_lo).map(|(_, x)| x).unwrap_or(x_lo);
    Ok(Singularity { r, bracket: (lo, hi), x, refined: false })
}

/// Solves `x = zΨ(x)`, `det(I − zJ) = 0` from a nearby subcritical point.
fn fold<M: MonotoneSystem + ?Sized>(sys: &M, z0: f64, x0: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = sys.dim();
    let ones = DVector::from_element(n, 1.0);
    let a0 = DMatrix::identity(n, n) - sys.jacobian(x0) * z0;
    let c = a0.clone().lu().solve(&ones)?.normalize();
    let b = a0.transpose().lu().solve(&ones)?.normalize();
    let mut x = DVector::from_column_slice(x0);
    let mut z = z0;
    for _ in 0..60 {
        let xs = x.as_slice();
        let j = sys.jacobian(xs);
        let a = DMatrix::identity(n, n) - &j * z;
        let mut border = DMatrix::zeros(n + 1, n + 1);
        border.view_mut((0, 0), (n, n)).copy_from(&a);
        border.view_mut((0, n), (n, 1)).copy_from(&b);
        border.view_mut((n, 0), (1, n)).copy_from(&c.transpose());
        let mut e = DVector::zeros(n + 1);
        e[n] = 1.0;
        let ws = border.clone().lu().solve(&e)?;
        let vs = border.transpose().lu().solve(&e)?;
        let w = ws.rows(0, n).into_owned();
        let sigma = ws[n];
        let v = vs.rows(0, n).into_owned();
        let h = 1e-5 * x.amax().max(1.0) / w.amax().max(1e-300);
        let xp: Vec<f64> = (&x + &w * h).iter().copied().collect();
        let xm: Vec<f64> = (&x - &w * h).iter().copied().collect();
        let hw = (sys.jacobian(&xp) - sys.jacobian(&xm)) / (2.0 * h);
        let sigma_x = (v.transpose() * &hw) * z;
        let sigma_z = (v.transpose() * &j * &w)[0];
        let psi = sys.psi(xs);
        let g = &psi * z - &x;
        let mut jf = DMatrix::zeros(n + 1, n + 1);
        jf.view_mut((0, 0), (n, n)).copy_from(&(&j * z - DMatrix::identity(n, n)));
        jf.view_mut((0, n), (n, 1)).copy_from(&psi);
        jf.view_mut((n, 0), (1, n)).copy_from(&sigma_x);
        jf[(n, n)] = sigma_z;
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-g));
        rhs[n] = -sigma;
        let d = jf.lu().solve(&rhs)?;
        x += d.rows(0, n);
        z += d[n];
        if !z.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if d.amax() <= 1e-14 * x.amax().max(z) {
            if x.iter().any(|v| *v < -1e-12) {
                return None;
            }
            return Some((z, x.iter().copied().collect()));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar `x = z(1 + x²)/2`: minimal root `(1 − √(1 − z²))/z`, `r = 1`.
    struct Quadratic;

    impl MonotoneSystem for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn psi(&self, x: &[f64]) -> DVector<f64> {
            DVector::from_element(1, 0.5 * (1.0 + x[0] * x[0]))
        }
        fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_element(1, 1, x[0])
        }
    }

    #[test]
    fn minimal_root_and_radius() {
        let z = 0.6;
        let fp = solve(&Quadratic, z, None).unwrap();
        assert!((fp.x[0] - (1.0 - (1.0f64 - z * z).sqrt()) / z).abs() < 1e-15);
        assert!(solve(&Quadratic, 1.01, None).is_err());
        let s = singularity(&Quadratic).unwrap();
        assert!(s.refined);
        assert!((s.r - 1.0).abs() < 1e-12);
        assert!((s.x[0] - 1.0).abs() < 1e-7);
        assert!(s.bracket.1 - s.bracket.0 <= 1e-12);
    }

    #[test]
    fn iteration_from_above_dominates() {
        let z = 0.8;
        let fp = solve(&Quadratic, z, None).unwrap();
        let below = iterate(&Quadratic, z, &[0.0], 2000);
        let above = iterate(&Quadratic, z, &[fp.x[0] + 0.3], 2000);
        assert!(below[0] <= fp.x[0] + 1e-12);
        assert!(above[0] >= fp.x[0] - 1e-12);
    }
}
