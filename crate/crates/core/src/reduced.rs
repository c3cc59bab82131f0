//! The relation `y ~ y' ⟺ H(·, y) = H(·, y')`, the subgroup
//! `R_μ = {y : H(·, y) = H(·, e)}` and the collapsed kernel tables.
//!
//! All decisions are taken on finite probe sets at a stated tolerance, so a
//! report certifies "no further member within radius r at tolerance t", never
//! triviality itself.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Alphabet, ReducedWord, TreePoint};
use crate::kernels::{KernelRow, KernelTable};
use crate::products::{partition, relative_gap, FactorKernel, ProductKernel, ProductPoint, ProductWalk};
use crate::walks::WalkSpec;

/// A group with a ratio kernel that can be probed pointwise.
pub trait KernelSource {
    type Point: Clone + fmt::Display + Ord;
    fn identity(&self) -> Self::Point;
    /// Elements of word length at most `radius`, identity first.
    fn ball(&self, radius: usize) -> Vec<Self::Point>;
    fn inverse(&self, y: &Self::Point) -> Self::Point;
    fn multiply(&self, a: &Self::Point, b: &Self::Point) -> Self::Point;
    fn length(&self, y: &Self::Point) -> usize;
    fn kernel(&self, x: &Self::Point, y: &Self::Point) -> Result<f64>;
}

/// Closed-form or Puiseux kernel of a single walk.
pub struct GroupKernel {
    alphabet: Alphabet,
    kernel: FactorKernel,
}

impl GroupKernel {
    pub fn new(spec: &WalkSpec) -> Result<Self> {
        Ok(GroupKernel { alphabet: spec.alphabet(), kernel: FactorKernel::new(spec)? })
    }
}

impl KernelSource for GroupKernel {
    type Point = ReducedWord;
    fn identity(&self) -> ReducedWord {
        ReducedWord::identity()
    }
    fn ball(&self, radius: usize) -> Vec<ReducedWord> {
        self.alphabet.ball(radius)
    }
    fn inverse(&self, y: &ReducedWord) -> ReducedWord {
        self.alphabet.invert(y)
    }
    fn multiply(&self, a: &ReducedWord, b: &ReducedWord) -> ReducedWord {
        self.alphabet.multiply(a, b)
    }
    fn length(&self, y: &ReducedWord) -> usize {
        y.len()
    }
    fn kernel(&self, x: &ReducedWord, y: &ReducedWord) -> Result<f64> {
        self.kernel.value(x, &TreePoint::Vertex(y.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pair(pub ReducedWord, pub ReducedWord);

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; {})", self.0, self.1)
    }
}

/// Product kernel on `Γ₁ × Γ₂` with the length `|y₁| + |y₂|`.
pub struct ProductGroupKernel {
    alphabets: (Alphabet, Alphabet),
    kernel: ProductKernel,
}

impl ProductGroupKernel {
    pub fn new(pw: &ProductWalk) -> Result<Self> {
        Ok(ProductGroupKernel {
            alphabets: (pw.first.alphabet(), pw.second.alphabet()),
            kernel: ProductKernel::new(pw)?,
        })
    }
}

impl KernelSource for ProductGroupKernel {
    type Point = Pair;
    fn identity(&self) -> Pair {
        Pair(ReducedWord::identity(), ReducedWord::identity())
    }
    fn ball(&self, radius: usize) -> Vec<Pair> {
        let mut out = Vec::new();
        for r in 0..=radius {
            for k in 0..=r {
                for y1 in self.alphabets.0.sphere(k) {
                    for y2 in self.alphabets.1.sphere(r - k) {
                        out.push(Pair(y1.clone(), y2));
                    }
                }
            }
        }
        out
    }
    fn inverse(&self, y: &Pair) -> Pair {
        Pair(self.alphabets.0.invert(&y.0), self.alphabets.1.invert(&y.1))
    }
    fn multiply(&self, a: &Pair, b: &Pair) -> Pair {
        Pair(self.alphabets.0.multiply(&a.0, &b.0), self.alphabets.1.multiply(&a.1, &b.1))
    }
    fn length(&self, y: &Pair) -> usize {
        y.0.len() + y.1.len()
    }
    fn kernel(&self, x: &Pair, y: &Pair) -> Result<f64> {
        Ok(self.kernel.value((&x.0, &x.1), &ProductPoint::vertex(y.0.clone(), y.1.clone()), f64::INFINITY)?.value)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub probe_radius: usize,
    pub candidate_radius: usize,
    pub tol: f64,
    pub candidates: Vec<String>,
    /// `max_x |H(x, y) − H(x, e)|` relative, per candidate.
    pub deviations: Vec<f64>,
    pub classes: Vec<Vec<String>>,
    pub r_mu_members: Vec<String>,
    /// Members closed under inversion.
    pub inverse_closed: bool,
    /// Products of members that stay in the candidate ball are members.
    pub product_closed: bool,
    pub statement: String,
}

impl EquivalenceReport {
    pub fn class_of(&self, y: &str) -> Option<&Vec<String>> {
        self.classes.iter().find(|c| c.iter().any(|m| m == y))
    }
}

/// Probes `H(x, y)` over `x` in the probe ball for every `y` in the candidate ball.
pub fn detect_r_mu<K: KernelSource>(
    source: &K,
    candidate_radius: usize,
    probe_radius: usize,
    tol: f64,
) -> Result<EquivalenceReport> {
    let probes = source.ball(probe_radius);
    let candidates = source.ball(candidate_radius);
    let profiles: Vec<Vec<f64>> = candidates
        .iter()
        .map(|y| probes.iter().map(|x| source.kernel(x, y)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    let e = source.identity();
    let e_pos = candidates.iter().position(|c| *c == e).expect("identity among candidates");
    let deviations: Vec<f64> = profiles.iter().map(|p| relative_gap(&profiles[e_pos], p)).collect();
    let members: Vec<K::Point> =
        candidates.iter().zip(&deviations).filter(|(_, d)| **d <= tol).map(|(c, _)| c.clone()).collect();
    let is_member = |y: &K::Point| members.contains(y);
    let inverse_closed = members.iter().all(|y| is_member(&source.inverse(y)));
    let product_closed = members.iter().all(|a| {
        members.iter().all(|b| {
            let ab = source.multiply(a, b);
            source.length(&ab) > candidate_radius || is_member(&ab)
        })
    });
    let classes = partition(&profiles, tol)
        .into_iter()
        .map(|c| c.into_iter().map(|i| candidates[i].to_string()).collect())
        .collect();
    let statement = if members.len() == 1 {
        format!("no member of R_mu other than e within radius {candidate_radius} at tolerance {tol:e}")
    } else {
        format!("{} members of R_mu within radius {candidate_radius} at tolerance {tol:e}", members.len())
    };
    Ok(EquivalenceReport {
        probe_radius,
        candidate_radius,
        tol,
        candidates: candidates.iter().map(|c| c.to_string()).collect(),
        deviations,
        classes,
        r_mu_members: members.iter().map(|m| m.to_string()).collect(),
        inverse_closed,
        product_closed,
        statement,
    })
}

/// One row per `(x, class)`, keyed by the class representative.
pub fn reduced_kernel_table(report: &EquivalenceReport, table: &KernelTable) -> Result<KernelTable> {
    let mut out = KernelTable::new(format!("{}-reduced", table.kernel));
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    for row in &table.rows {
        let rep = report.class_of(&row.y_or_prefix).map(|c| c[0].clone()).unwrap_or_else(|| row.y_or_prefix.clone());
        let key = (row.x.clone(), rep.clone());
        match seen.get(&key) {
            Some(&i) => {
                let kept: &KernelRow = &out.rows[i];
                let gap = (kept.value - row.value).abs() / kept.value.abs().max(row.value.abs()).max(1e-300);
                if gap > report.tol {
                    return Err(Error::InvalidInput(format!(
                        "class of {rep} disagrees at x = {}: {} vs {} (classes were wrong)",
                        row.x, kept.value, row.value
                    )));
                }
            }
            None => {
                seen.insert(key, out.rows.len());
                out.push(KernelRow { y_or_prefix: rep, ..row.clone() });
            }
        }
    }
    Ok(out)
}

/// Kernel table of `H(x, y)` on probe × candidate balls.
pub fn kernel_grid<K: KernelSource>(source: &K, probe_radius: usize, candidate_radius: usize) -> Result<KernelTable> {
    let mut t = KernelTable::new("H");
    for y in source.ball(candidate_radius) {
        for x in source.ball(probe_radius) {
            let value = source.kernel(&x, &y)?;
            t.push(KernelRow {
                x: x.to_string(),
                y_or_prefix: y.to_string(),
                depth: None,
                value,
                error: 0.0,
                stabilized: true,
            });
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::products::ProductKind;
    use crate::scalar::ratio;
    use crate::walks::IsotropicLaw;

    fn t3_z() -> ProductWalk {
        let tree = WalkSpec::Isotropic(IsotropicLaw::new(2, vec![ratio(1, 2), ratio(1, 2)]).unwrap());
        let z = WalkSpec::parse("mode finitely-supported\nrank 1\ne 1/2\n1 1/4\n-1 1/4\n").unwrap();
        ProductWalk::new(tree, z, ProductKind::Cartesian { s: ratio(1, 2) }).unwrap()
    }

    #[test]
    fn tree_times_z_members_are_the_z_fibre() {
        let k = ProductGroupKernel::new(&t3_z()).unwrap();
        let rep = detect_r_mu(&k, 4, 2, 1e-6).unwrap();
        let mut expect: Vec<String> = (-4..=4).map(|m| Pair(ReducedWord::identity(), Alphabet::free(1).lattice_point(m)).to_string()).collect();
        let mut got = rep.r_mu_members.clone();
        expect.sort();
        got.sort();
        assert_eq!(got, expect);
        assert!(rep.inverse_closed && rep.product_closed);
        let grid = kernel_grid(&k, 1, 2).unwrap();
        let reduced = reduced_kernel_table(&rep, &grid).unwrap();
        // Classes are indexed by the tree coordinate only.
        let ys: std::collections::BTreeSet<&str> = reduced.rows.iter().map(|r| r.y_or_prefix.as_str()).collect();
        assert_eq!(ys.len(), Alphabet::tree(2).ball(2).len());
    }

    #[test]
    fn trivial_classes_leave_table_unchanged() {
        let iso = WalkSpec::Isotropic(IsotropicLaw::new(2, vec![ratio(0, 1), ratio(1, 1)]).unwrap());
        let k = GroupKernel::new(&iso).unwrap();
        let rep = detect_r_mu(&k, 2, 2, 1e-9).unwrap();
        assert_eq!(rep.r_mu_members, vec!["e".to_string()]);
        let grid = kernel_grid(&k, 1, 2).unwrap();
        let reduced = reduced_kernel_table(&rep, &grid).unwrap();
        assert_eq!(reduced.rows, grid.rows);
    }

    #[test]
    fn membership_monotone_in_tolerance() {
        let k = ProductGroupKernel::new(&t3_z()).unwrap();
        let loose = detect_r_mu(&k, 3, 2, 1e-3).unwrap();
        let tight = detect_r_mu(&k, 3, 2, 1e-9).unwrap();
        assert!(tight.r_mu_members.iter().all(|m| loose.r_mu_members.contains(m)));
    }
}
