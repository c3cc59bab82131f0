use num_bigint::BigInt;
use serde::Serialize;

use crate::scalar::{ratio_to_f64, Ratio};

/// Rational prefactor `c_n = 1 + (q−1)n/(q+1)` with `φ(n) = c_n q^{−n/2}`.
pub fn spherical_coefficient(q: u32, n: usize) -> Ratio {
    let q = BigInt::from(q);
    Ratio::from_integer(1.into()) + Ratio::new((&q - 1) * BigInt::from(n), &q + 1)
}

/// `φ(n) = (1 + (q−1)n/(q+1)) q^{−n/2}`.
pub fn spherical(q: u32, n: usize) -> f64 {
    ratio_to_f64(&spherical_coefficient(q, n)) * (q as f64).powf(-(n as f64) / 2.0)
}

/// `ρ(P₁) = 2√q/(q+1)` as `(2/(q+1), q)`, meaning `(2/(q+1))·√q`.
pub fn rho_p1_exact(q: u32) -> (Ratio, u32) {
    (Ratio::new(2.into(), (q + 1).into()), q)
}

#[derive(Clone, Debug, Serialize)]
pub struct SphericalFunction {
    pub q: u32,
    pub values: Vec<f64>,
}

impl SphericalFunction {
    pub fn new(q: u32, n_max: usize) -> Self {
        SphericalFunction { q, values: (0..=n_max).map(|n| spherical(q, n)).collect() }
    }

    /// `max_n |P₁φ(n) − ρ(P₁)φ(n)| / φ(n)` over `n < n_max`.
    pub fn recurrence_residual(&self) -> f64 {
        let q = self.q as f64;
        let rho = 2.0 * q.sqrt() / (q + 1.0);
        let v = &self.values;
        let mut worst = ((v[1] - rho * v[0]) / v[0]).abs();
        for n in 1..v.len() - 1 {
            let lhs = v[n - 1] / (q + 1.0) + q / (q + 1.0) * v[n + 1];
            worst = worst.max(((lhs - rho * v[n]) / v[n]).abs());
        }
        worst
    }

    /// The recurrence reduced to rationals: `c_1 = 2q/(q+1)` and `c_{n−1} + c_{n+1} = 2c_n`.
    pub fn exact_recurrence_holds(&self) -> bool {
        let c = |n| spherical_coefficient(self.q, n);
        let two = Ratio::from_integer(2.into());
        c(1) == Ratio::new((2 * self.q).into(), (self.q + 1).into())
            && (1..self.values.len() - 1).all(|n| c(n - 1) + c(n + 1) == &two * c(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(spherical(2, 0), 1.0);
        assert!((spherical(2, 1) - 4.0 / (3.0 * 2f64.sqrt())).abs() < 1e-15);
        for q in [2, 3, 4] {
            let s = SphericalFunction::new(q, 50);
            assert!(s.recurrence_residual() < 1e-12);
            assert!(s.exact_recurrence_holds());
        }
    }
}
