use super::{stabilize, BoundaryValue};
use crate::error::{Error, Result};
use crate::geometry::{confluent, EndPrefix, Ray, ReducedWord, TreePoint};
use crate::series::{FirstPassageSystem, PuiseuxTable};
use crate::walks::GroupLaw;

/// Kernels of a nearest-neighbour walk on a free group or free product.
#[derive(Clone, Debug)]
pub struct NnKernels {
    pub sys: FirstPassageSystem,
    pub table: PuiseuxTable,
}

impl NnKernels {
    pub fn new(law: &GroupLaw) -> Result<Self> {
        let sys = FirstPassageSystem::new(law)?;
        let table = PuiseuxTable::new(&sys)?;
        Ok(NnKernels { sys, table })
    }

    pub fn r(&self) -> f64 {
        self.table.r
    }

    pub fn rho(&self) -> f64 {
        1.0 / self.table.r
    }

    fn passage_at(&self, t: f64) -> Result<Vec<f64>> {
        let z = 1.0 / t;
        if z > self.r() * (1.0 + 1e-14) {
            return Err(Error::InvalidInput(format!("t = {t} is below the spectral radius {}", self.rho())));
        }
        self.sys.solve(z.min(self.r()))
    }

    /// `K(x, ξ|t)` from the first `depth` letters of `ξ`.
    pub fn martin_at(&self, x: &ReducedWord, xi: &EndPrefix, t: f64) -> Result<f64> {
        let f = self.passage_at(t)?;
        martin_from(&self.sys, &f, x, xi)
    }

    pub fn martin(&self, x: &ReducedWord, ray: &Ray, depth: usize, t: f64, tol: f64) -> Result<BoundaryValue> {
        let f = self.passage_at(t)?;
        stabilize(depth, tol, |d| martin_from(&self.sys, &f, x, &ray.prefix(d)))
    }

    /// `K(x, y|t) = F(x, y|1/t)/F(e, y|1/t)`.
    pub fn martin_finite(&self, x: &ReducedWord, y: &ReducedWord, t: f64) -> Result<f64> {
        let f = self.passage_at(t)?;
        let a = self.sys.alphabet();
        Ok(self.sys.word_passage_from(&f, &a.relative(x, y)) / self.sys.word_passage_from(&f, y))
    }

    /// `H(x, y) = β(x⁻¹y)/β(y)`.
    pub fn ratio(&self, x: &ReducedWord, y: &ReducedWord) -> f64 {
        let a = self.sys.alphabet();
        self.table.beta_word(&a.relative(x, y)) / self.table.beta_word(y)
    }

    /// `H(x, ξ) = K(x, ξ|ρ)` read at a prefix.
    pub fn ratio_boundary(&self, x: &ReducedWord, ray: &Ray, depth: usize, tol: f64) -> Result<BoundaryValue> {
        self.martin(x, ray, depth, self.rho(), tol)
    }
}

fn martin_from(sys: &FirstPassageSystem, f: &[f64], x: &ReducedWord, xi: &EndPrefix) -> Result<f64> {
    let a = sys.alphabet();
    if x.is_identity() {
        return Ok(1.0);
    }
    let m = confluent(&TreePoint::Vertex(x.clone()), &TreePoint::End(xi.clone()))?.len();
    if xi.depth() <= x.len() {
        return Err(Error::PrefixTooShort { depth: xi.depth(), needed: x.len() + 1 });
    }
    let letters = x.letters();
    let num: f64 = letters[m..].iter().map(|&l| f[sys.index(a.inverse(l))]).product();
    let den: f64 = letters[..m].iter().map(|&l| f[sys.index(l)]).product();
    Ok(num / den)
}

pub fn martin_kernel_nn(law: &GroupLaw, x: &ReducedWord, xi: &EndPrefix, t: f64) -> Result<f64> {
    NnKernels::new(law)?.martin_at(x, xi, t)
}

/// `K(x, ξ|ρ)` for a prebuilt kernel set.
pub fn martin_kernel_nn_at(k: &NnKernels, x: &ReducedWord, xi: &EndPrefix) -> Result<f64> {
    k.martin_at(x, xi, k.rho())
}

pub fn ratio_kernel_nn(law: &GroupLaw, x: &ReducedWord, y: &ReducedWord) -> Result<f64> {
    Ok(NnKernels::new(law)?.ratio(x, y))
}

/// `γ(x⁻¹y) − γ(y)`; constant in `y` beyond the confluent `x ∧ y`.
pub fn gamma_telescoping(table: &PuiseuxTable, sys: &FirstPassageSystem, x: &ReducedWord, y: &ReducedWord) -> f64 {
    table.gamma(&sys.alphabet().relative(x, y)) - table.gamma(y)
}
