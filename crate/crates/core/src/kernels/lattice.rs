use crate::error::{Error, Result};
use crate::geometry::{Alphabet, ReducedWord};
use crate::walks::{lattice_spectral_radius, GroupLaw};

/// Ratio-limit kernel `H(x, y) = e^{c x}` of a walk on the integers, where
/// `c` minimizes `Σ μ(k) e^{ck}`.
#[derive(Clone, Debug)]
pub struct LatticeKernel {
    pub tilt: f64,
    pub rho: f64,
}

impl LatticeKernel {
    pub fn new(law: &GroupLaw) -> Result<Self> {
        if law.alphabet() != Alphabet::free(1) {
            return Err(Error::InvalidWalk("lattice kernel needs a walk on the integers".into()));
        }
        let tilt = if law.is_symmetric() { 0.0 } else { crate::walks::lattice_tilt(law) };
        Ok(LatticeKernel { tilt, rho: lattice_spectral_radius(law) })
    }

    pub fn h(&self, x: &ReducedWord, _y: &ReducedWord) -> f64 {
        (self.tilt * x.lattice_coordinate() as f64).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::WalkSpec;

    #[test]
    fn symmetric_is_flat_and_drift_is_harmonic() {
        let z = WalkSpec::parse("mode finitely-supported\nrank 1\ne 1/2\n1 1/4\n-1 1/4\n").unwrap().group_law();
        let k = LatticeKernel::new(&z).unwrap();
        let a = Alphabet::free(1);
        assert_eq!(k.h(&a.lattice_point(3), &a.lattice_point(-2)), 1.0);
        let d = WalkSpec::parse("mode finitely-supported\nrank 1\ne 1/4\n1 1/2\n-1 1/4\n").unwrap().group_law();
        let k = LatticeKernel::new(&d).unwrap();
        let e = ReducedWord::identity();
        for x in -3..=3 {
            let hx = k.h(&a.lattice_point(x), &e);
            let ph: f64 = d.float_entries().map(|(w, p)| p * k.h(&a.lattice_point(x + w.lattice_coordinate()), &e)).sum();
            assert!((ph - k.rho * hx).abs() < 1e-12 * hx);
        }
    }
}
