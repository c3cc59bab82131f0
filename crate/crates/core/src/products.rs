//! Direct and Cartesian products of two walks and their ratio kernels.

use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{horocycle, EndPrefix, ReducedWord, TreePoint};
use crate::kernels::{ratio_kernel_isotropic, LatticeKernel, NnKernels};
use crate::scalar::{ratio_to_f64, Arithmetic, Ratio};
use crate::walks::{trace, Chain, EngineOptions, WalkSpec};

#[derive(Clone, Debug, PartialEq)]
pub enum ProductKind {
    /// `P = P₁ ⊗ P₂`.
    Direct,
    /// `P = s·P₁ ⊗ I₂ + (1 − s)·I₁ ⊗ P₂`.
    Cartesian { s: Ratio },
}

#[derive(Clone, Debug)]
pub struct ProductWalk {
    pub first: WalkSpec,
    pub second: WalkSpec,
    pub kind: ProductKind,
}

pub type ProductState = (ReducedWord, ReducedWord);

impl ProductWalk {
    pub fn new(first: WalkSpec, second: WalkSpec, kind: ProductKind) -> Result<Self> {
        if let ProductKind::Cartesian { s } = &kind {
            if *s <= Ratio::zero() || *s >= Ratio::one() {
                return Err(Error::InvalidWalk(format!("Cartesian parameter s = {s} outside (0, 1)")));
            }
        }
        Ok(ProductWalk { first, second, kind })
    }

    pub fn s(&self) -> Option<f64> {
        match &self.kind {
            ProductKind::Direct => None,
            ProductKind::Cartesian { s } => Some(ratio_to_f64(s)),
        }
    }

    /// `p^{(n)}(e, y₁y₂)` for `n ≤ n_max` from the factor sequences; the
    /// Cartesian mixture `Σ_k C(n,k) s^k (1−s)^{n−k} p₁^{(k)} p₂^{(n−k)}` is
    /// summed in logarithms.
    pub fn sequence(&self, y: (&ReducedWord, &ReducedWord), n_max: usize, opts: &EngineOptions) -> Result<Vec<f64>> {
        let p1 = trace(&self.first, &[y.0.clone()], n_max, Arithmetic::NATIVE, opts)?.column(0);
        let p2 = trace(&self.second, &[y.1.clone()], n_max, Arithmetic::NATIVE, opts)?.column(0);
        Ok(match &self.kind {
            ProductKind::Direct => p1.iter().zip(&p2).map(|(a, b)| a * b).collect(),
            ProductKind::Cartesian { s } => binomial_mixture(ratio_to_f64(s), &p1, &p2),
        })
    }

    /// Exact `p^{(n)}(e, y₁y₂)` from exact factor sequences.
    pub fn sequence_exact(&self, y: (&ReducedWord, &ReducedWord), n_max: usize) -> Result<Vec<Ratio>> {
        let opts = EngineOptions::default();
        let exact = |spec: &WalkSpec, t: &ReducedWord| -> Result<Vec<Ratio>> {
            let tr = trace(spec, &[t.clone()], n_max, Arithmetic::Exact, &opts)?;
            Ok(tr.exact.expect("exact mode").into_iter().map(|row| row[0].clone()).collect())
        };
        let p1 = exact(&self.first, y.0)?;
        let p2 = exact(&self.second, y.1)?;
        Ok(match &self.kind {
            ProductKind::Direct => p1.iter().zip(&p2).map(|(a, b)| a * b).collect(),
            ProductKind::Cartesian { s } => {
                let t = Ratio::one() - s;
                (0..=n_max)
                    .map(|n| {
                        let mut binom = Ratio::one();
                        let mut acc = Ratio::zero();
                        for k in 0..=n {
                            if k > 0 {
                                binom = binom * Ratio::from_integer((n - k + 1).into()) / Ratio::from_integer(k.into());
                            }
                            acc += &binom * pow(s, k) * pow(&t, n - k) * &p1[k] * &p2[n - k];
                        }
                        acc
                    })
                    .collect()
            }
        })
    }
}

fn pow(r: &Ratio, k: usize) -> Ratio {
    (0..k).fold(Ratio::one(), |acc, _| acc * r)
}

fn binomial_mixture(s: f64, p1: &[f64], p2: &[f64]) -> Vec<f64> {
    let n_max = p1.len() - 1;
    let mut ln_fact = vec![0.0; n_max + 1];
    for i in 1..=n_max {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let (ls, lt) = (s.ln(), (1.0 - s).ln());
    (0..=n_max)
        .map(|n| {
            let terms: Vec<f64> = (0..=n)
                .filter(|&k| p1[k] > 0.0 && p2[n - k] > 0.0)
                .map(|k| {
                    ln_fact[n] - ln_fact[k] - ln_fact[n - k]
                        + k as f64 * ls
                        + (n - k) as f64 * lt
                        + p1[k].ln()
                        + p2[n - k].ln()
                })
                .collect();
            let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                0.0
            } else {
                top.exp() * terms.iter().map(|t| (t - top).exp()).sum::<f64>()
            }
        })
        .collect()
}

impl Chain for ProductWalk {
    type State = ProductState;

    fn start(&self) -> ProductState {
        (ReducedWord::identity(), ReducedWord::identity())
    }

    fn transitions(&self, s: &ProductState) -> Vec<(ProductState, Ratio)> {
        let (a1, a2) = (self.first.alphabet(), self.second.alphabet());
        let g1 = self.first.group_law();
        let g2 = self.second.group_law();
        match &self.kind {
            ProductKind::Direct => g1
                .entries()
                .iter()
                .flat_map(|(w1, p1)| {
                    g2.entries()
                        .iter()
                        .map(move |(w2, p2)| ((a1.multiply(&s.0, w1), a2.multiply(&s.1, w2)), p1 * p2))
                })
                .collect(),
            ProductKind::Cartesian { s: c } => {
                let t = Ratio::one() - c;
                let mut out: Vec<(ProductState, Ratio)> =
                    g1.entries().iter().map(|(w, p)| ((a1.multiply(&s.0, w), s.1.clone()), c * p)).collect();
                out.extend(g2.entries().iter().map(|(w, p)| ((s.0.clone(), a2.multiply(&s.1, w)), &t * p)));
                out
            }
        }
    }
}

/// The Cartwright–Soardi combination of two local limit laws.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CartesianAsymptotics {
    pub rho: f64,
    pub alpha: f64,
    pub c: f64,
    pub theta: f64,
}

pub fn cartesian_asymptotics(s: f64, first: (f64, f64), second: (f64, f64)) -> CartesianAsymptotics {
    let (rho1, alpha1) = first;
    let (rho2, alpha2) = second;
    let rho = s * rho1 + (1.0 - s) * rho2;
    let theta = s * rho1 / rho;
    CartesianAsymptotics { rho, alpha: alpha1 + alpha2, c: theta.powf(alpha1) * (1.0 - theta).powf(alpha2), theta }
}

/// Ratio kernel of one factor, readable at vertices and at end prefixes.
pub enum FactorKernel {
    /// Isotropic walk on `T_{q+1}`: `Φ(x⁻¹y)/Φ(y)` and `q^{−hor(x,ξ)/2}`.
    Tree { q: u32 },
    Lattice(LatticeKernel),
    NearestNeighbour(Box<NnKernels>),
}

impl FactorKernel {
    pub fn new(spec: &WalkSpec) -> Result<Self> {
        if let Some(iso) = spec.isotropic() {
            return Ok(FactorKernel::Tree { q: iso.q });
        }
        let law = spec.group_law();
        if law.alphabet() == crate::geometry::Alphabet::free(1) {
            return Ok(FactorKernel::Lattice(LatticeKernel::new(&law)?));
        }
        if law.is_nearest_neighbour() {
            return Ok(FactorKernel::NearestNeighbour(Box::new(NnKernels::new(&law)?)));
        }
        Err(Error::NotNearestNeighbour("product kernels need isotropic, lattice or nearest-neighbour factors".into()))
    }

    pub fn value(&self, x: &ReducedWord, y: &TreePoint) -> Result<f64> {
        match (self, y) {
            (FactorKernel::Tree { q }, TreePoint::Vertex(y)) => Ok(ratio_kernel_isotropic(*q, x, y)),
            (FactorKernel::Tree { q }, TreePoint::End(p)) => Ok((*q as f64).powf(-(horocycle(x, p)? as f64) / 2.0)),
            (FactorKernel::Lattice(k), TreePoint::Vertex(y)) => Ok(k.h(x, y)),
            (FactorKernel::Lattice(k), TreePoint::End(p)) => Ok(k.h(x, p.word())),
            (FactorKernel::NearestNeighbour(k), TreePoint::Vertex(y)) => Ok(k.ratio(x, y)),
            (FactorKernel::NearestNeighbour(k), TreePoint::End(p)) => k.martin_at(x, p, k.rho()),
        }
    }
}

/// A point of the product space or of its boundary `(∂X₁ × ∂X₂) ∪ (X₁ × ∂X₂) ∪ (∂X₁ × X₂)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductPoint {
    pub first: TreePoint,
    pub second: TreePoint,
}

impl ProductPoint {
    pub fn vertex(y1: ReducedWord, y2: ReducedWord) -> Self {
        ProductPoint { first: TreePoint::Vertex(y1), second: TreePoint::Vertex(y2) }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self.first, TreePoint::End(_)) || matches!(self.second, TreePoint::End(_))
    }
}

fn fmt_point(p: &TreePoint) -> String {
    match p {
        TreePoint::Vertex(w) => w.to_string(),
        TreePoint::End(e) => format!("{}…", e.word()),
    }
}

impl fmt::Display for ProductPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; {})", fmt_point(&self.first), fmt_point(&self.second))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProductValue {
    pub value: f64,
    /// Largest relative change of a boundary coordinate when its prefix is
    /// shortened by four letters.
    pub error: f64,
    pub stabilized: bool,
}

/// `H(x₁x₂, y₁y₂) = H₁(x₁, y₁) H₂(x₂, y₂)`.
pub struct ProductKernel {
    pub first: FactorKernel,
    pub second: FactorKernel,
}

impl ProductKernel {
    pub fn new(pw: &ProductWalk) -> Result<Self> {
        Ok(ProductKernel { first: FactorKernel::new(&pw.first)?, second: FactorKernel::new(&pw.second)? })
    }

    pub fn value(&self, x: (&ReducedWord, &ReducedWord), y: &ProductPoint, tol: f64) -> Result<ProductValue> {
        let (v1, e1) = factor_reading(&self.first, x.0, &y.first)?;
        let (v2, e2) = factor_reading(&self.second, x.1, &y.second)?;
        let error = e1.max(e2);
        Ok(ProductValue { value: v1 * v2, error, stabilized: error <= tol })
    }
}

fn factor_reading(k: &FactorKernel, x: &ReducedWord, y: &TreePoint) -> Result<(f64, f64)> {
    let v = k.value(x, y)?;
    let err = match y {
        TreePoint::End(p) if p.depth() > 4 => {
            let shorter = EndPrefix(p.word().prefix(p.depth() - 4));
            match k.value(x, &TreePoint::End(shorter)) {
                Ok(w) => ((w - v) / v).abs(),
                Err(_) => f64::INFINITY,
            }
        }
        TreePoint::End(_) => f64::INFINITY,
        TreePoint::Vertex(_) => 0.0,
    };
    Ok((v, err))
}

/// Groups candidates whose product-kernel values agree on every probe within
/// `tol` (relative): the `≈`-classes at probe resolution.
pub fn identify_equivalent_boundary(
    kernel: &ProductKernel,
    candidates: &[ProductPoint],
    probes: &[(ReducedWord, ReducedWord)],
    tol: f64,
) -> Result<Vec<Vec<usize>>> {
    let profiles: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| probes.iter().map(|x| kernel.value((&x.0, &x.1), c, tol).map(|v| v.value)).collect())
        .collect::<Result<_>>()?;
    Ok(partition(&profiles, tol))
}

/// Greedy partition of profiles by relative sup-distance to a class representative.
pub(crate) fn partition(profiles: &[Vec<f64>], tol: f64) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, p) in profiles.iter().enumerate() {
        match classes.iter_mut().find(|c| relative_gap(&profiles[c[0]], p) <= tol) {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    classes
}

pub(crate) fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs() / u.abs().max(v.abs()).max(1e-300)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Alphabet, Ray};
    use crate::scalar::ratio;
    use crate::walks::{distribution, IsotropicLaw};

    fn lazy_tree(q: u32) -> WalkSpec {
        WalkSpec::Isotropic(IsotropicLaw::new(q, vec![ratio(1, 2), ratio(1, 2)]).unwrap())
    }

    fn lazy_z() -> WalkSpec {
        WalkSpec::parse("mode finitely-supported\nrank 1\ne 1/2\n1 1/4\n-1 1/4\n").unwrap()
    }

    #[test]
    fn asymptotics_symmetric_case() {
        let a = cartesian_asymptotics(0.5, (0.8, 1.5), (0.8, 0.5));
        assert!((a.rho - 0.8).abs() < 1e-15 && (a.theta - 0.5).abs() < 1e-15 && a.alpha == 2.0);
    }

    #[test]
    fn binomial_mixture_matches_product_chain() {
        let pw = ProductWalk::new(lazy_tree(2), lazy_z(), ProductKind::Cartesian { s: ratio(1, 3) }).unwrap();
        let t = Alphabet::tree(2);
        let y1 = t.parse("1,2").unwrap();
        let y2 = Alphabet::free(1).lattice_point(-1);
        let mixture = pw.sequence_exact((&y1, &y2), 8).unwrap();
        for n in 0..=8 {
            let dist = distribution::<_, Ratio>(&pw, n, 0);
            let direct = dist.iter().find(|(s, _)| s.0 == y1 && s.1 == y2).map(|(_, p)| p.clone()).unwrap_or_default();
            assert_eq!(direct, mixture[n], "n = {n}");
        }
        let floats = pw.sequence((&y1, &y2), 8, &EngineOptions::default()).unwrap();
        for n in 0..=8 {
            assert!((floats[n] - ratio_to_f64(&mixture[n])).abs() <= 1e-14 * floats[n].max(1e-300));
        }
    }

    #[test]
    fn direct_product_factorizes() {
        let pw = ProductWalk::new(lazy_tree(2), lazy_z(), ProductKind::Direct).unwrap();
        let y1 = Alphabet::tree(2).parse("3").unwrap();
        let y2 = Alphabet::free(1).lattice_point(2);
        let seq = pw.sequence_exact((&y1, &y2), 6).unwrap();
        for n in 0..=6 {
            let dist = distribution::<_, Ratio>(&pw, n, 0);
            let direct = dist.iter().find(|(s, _)| s.0 == y1 && s.1 == y2).map(|(_, p)| p.clone()).unwrap_or_default();
            assert_eq!(direct, seq[n]);
        }
    }

    #[test]
    fn kernel_at_roots_is_one_and_boundary_identification() {
        let pw = ProductWalk::new(lazy_tree(2), lazy_z(), ProductKind::Cartesian { s: ratio(1, 2) }).unwrap();
        let k = ProductKernel::new(&pw).unwrap();
        let e = ReducedWord::identity();
        let t = Alphabet::tree(2);
        let z = Alphabet::free(1);
        let y1 = t.parse("1,2").unwrap();
        let at_root = k.value((&e, &e), &ProductPoint::vertex(e.clone(), e.clone()), 1e-9).unwrap();
        assert_eq!(at_root.value, 1.0);
        let plus = ProductPoint { first: TreePoint::Vertex(y1.clone()), second: TreePoint::End(EndPrefix(z.lattice_point(30))) };
        let minus = ProductPoint { first: TreePoint::Vertex(y1.clone()), second: TreePoint::End(EndPrefix(z.lattice_point(-30))) };
        let ray = Ray::parse(&t, "1|2,3").unwrap();
        let tree_end = ProductPoint { first: TreePoint::End(ray.prefix(30)), second: TreePoint::End(EndPrefix(z.lattice_point(30))) };
        let probes: Vec<(ReducedWord, ReducedWord)> =
            t.ball(2).into_iter().flat_map(|x1| (-2..=2).map(move |m| (x1.clone(), z.lattice_point(m)))).collect();
        let classes = identify_equivalent_boundary(&k, &[plus.clone(), minus, tree_end, plus], &probes, 1e-9).unwrap();
        assert_eq!(classes, vec![vec![0, 1, 3], vec![2]]);
    }
}
