use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares fit of `log p_n = n log ρ − α log n + c`.
#[derive(Clone, Debug, Serialize)]
pub struct LocalLimitFit {
    pub rho_hat: f64,
    pub alpha_hat: f64,
    pub log_c: f64,
    pub window: (usize, usize),
    /// Root-mean-square residual of the log fit.
    pub residual: f64,
    /// Same fit on `[2 n_min, n_max]`, when that window is long enough.
    pub shifted: Option<(f64, f64)>,
}

impl LocalLimitFit {
    /// `|Δρ|, |Δα|` between the full and shifted windows.
    pub fn sensitivity(&self) -> Option<(f64, f64)> {
        self.shifted.map(|(r, a)| ((r - self.rho_hat).abs(), (a - self.alpha_hat).abs()))
    }
}

fn solve(values: &[f64], lo: usize, hi: usize) -> Result<(f64, f64, f64, f64)> {
    let ns: Vec<usize> = (lo..=hi).collect();
    let m = ns.len();
    for &n in &ns {
        if !(values[n] > 0.0) {
            return Err(Error::InvalidInput(format!("value at n = {n} is not positive")));
        }
    }
    // Center n to keep the design well conditioned.
    let center = (lo + hi) as f64 / 2.0;
    let a = DMatrix::from_fn(m, 3, |i, j| {
        let n = ns[i] as f64;
        match j {
            0 => n - center,
            1 => n.ln(),
            _ => 1.0,
        }
    });
    let b = DVector::from_iterator(m, ns.iter().map(|&n| values[n].ln()));
    let qr = a.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().map(|v| v.abs()).fold(0.0, f64::max);
    if r.diagonal().iter().any(|v| v.abs() <= 1e-12 * scale) {
        return Err(Error::DegenerateFit);
    }
    let qtb = qr.q().transpose() * &b;
    let x = r.solve_upper_triangular(&qtb).ok_or(Error::DegenerateFit)?;
    let resid = (&a * &x - &b).norm() / (m as f64).sqrt();
    Ok((x[0], x[1], x[2] - x[0] * center, resid))
}

/// Fits `p_n ∼ C ρⁿ n^{−α}` on the window `[n_min, n_max]` of `values` (indexed by `n`).
pub fn fit_local_limit(values: &[f64], window: (usize, usize)) -> Result<LocalLimitFit> {
    let (lo, hi) = window;
    if hi >= values.len() || lo == 0 || hi < lo || hi - lo + 1 < 8 {
        return Err(Error::InvalidInput(format!(
            "window {lo}:{hi} must satisfy 1 <= n_min, length >= 8, n_max < {}",
            values.len()
        )));
    }
    let (slope, logn, c, residual) = solve(values, lo, hi)?;
    let shifted = if hi + 1 >= 2 * lo + 8 {
        solve(values, 2 * lo, hi).ok().map(|(s, l, _, _)| (s.exp(), -l))
    } else {
        None
    };
    Ok(LocalLimitFit { rho_hat: slope.exp(), alpha_hat: -logn, log_c: c, window, residual, shifted })
}
