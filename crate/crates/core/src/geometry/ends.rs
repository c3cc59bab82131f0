//! Boundary points of the tree: eventually periodic rays, finite prefixes
//! of them, confluents, the ultrametric and horocycle indices.

use std::fmt;

use num_bigint::BigInt;
use num_traits::pow;
use serde::{Deserialize, Serialize};

use super::{common_prefix, Alphabet, Letter, ReducedWord};
use crate::error::{Error, Result};
use crate::scalar::Ratio;

/// An eventually periodic end `head · period^∞`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ray {
    head: Vec<Letter>,
    period: Vec<Letter>,
}

impl Ray {
    pub fn new(alphabet: &Alphabet, head: &[Letter], period: &[Letter]) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidWord("ray period must be non-empty".into()));
        }
        let mut probe = head.to_vec();
        probe.extend_from_slice(period);
        probe.extend_from_slice(period);
        alphabet.word(&probe)?;
        Ok(Ray { head: head.to_vec(), period: period.to_vec() })
    }

    /// Parses `head|period` with comma-separated letters; `head` may be `e`.
    pub fn parse(alphabet: &Alphabet, s: &str) -> Result<Self> {
        let (h, p) = s
            .split_once('|')
            .ok_or_else(|| Error::InvalidWord(format!("ray must be head|period, got {s}")))?;
        let head: ReducedWord = h.parse()?;
        let period: ReducedWord = p.parse()?;
        Ray::new(alphabet, head.letters(), period.letters())
    }

    pub fn letter(&self, i: usize) -> Letter {
        if i < self.head.len() {
            self.head[i]
        } else {
            self.period[(i - self.head.len()) % self.period.len()]
        }
    }

    pub fn prefix(&self, depth: usize) -> EndPrefix {
        EndPrefix(ReducedWord::from_letters_unchecked((0..depth).map(|i| self.letter(i)).collect()))
    }

    /// The vertex at distance `n` from the root along the ray.
    pub fn vertex(&self, n: usize) -> ReducedWord {
        self.prefix(n).0
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = ReducedWord::from_letters_unchecked(self.head.clone());
        let p = ReducedWord::from_letters_unchecked(self.period.clone());
        write!(f, "{h}|{p}")
    }
}

/// The first `depth` letters of an end.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EndPrefix(pub ReducedWord);

impl EndPrefix {
    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn word(&self) -> &ReducedWord {
        &self.0
    }
}

/// A vertex or a (truncated) end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreePoint {
    Vertex(ReducedWord),
    End(EndPrefix),
}

impl TreePoint {
    fn letters(&self) -> &[Letter] {
        match self {
            TreePoint::Vertex(w) => w.letters(),
            TreePoint::End(p) => p.0.letters(),
        }
    }
}

/// `v ∧ w`: the last common vertex of the geodesics from the root.
pub fn confluent(v: &TreePoint, w: &TreePoint) -> Result<ReducedWord> {
    let (a, b) = (v.letters(), w.letters());
    let k = common_prefix(a, b);
    let exhausted = |p: &TreePoint, len: usize| matches!(p, TreePoint::End(_)) && k == len;
    match (v, w) {
        (TreePoint::Vertex(x), TreePoint::Vertex(y)) if x == y => Err(Error::ConfluentUndefined),
        _ if exhausted(v, a.len()) || exhausted(w, b.len()) => Err(Error::PrefixTooShort {
            depth: a.len().min(b.len()),
            needed: k + 1,
        }),
        _ => Ok(ReducedWord::from_letters_unchecked(a[..k].to_vec())),
    }
}

/// `θ(v, w) = q^{-|v ∧ w|}` on vertices, zero on the diagonal.
pub fn ultrametric(v: &ReducedWord, w: &ReducedWord, q: u32) -> Ratio {
    if v == w {
        return Ratio::from_integer(BigInt::from(0));
    }
    let k = v.common_prefix_len(w);
    Ratio::new(BigInt::from(1), pow(BigInt::from(q), k))
}

/// Ultrametric for points that may be ends; needs the confluent to be resolved.
pub fn ultrametric_points(v: &TreePoint, w: &TreePoint, q: u32) -> Result<Ratio> {
    if v == w && matches!(v, TreePoint::Vertex(_)) {
        return Ok(Ratio::from_integer(BigInt::from(0)));
    }
    let c = confluent(v, w)?;
    Ok(Ratio::new(BigInt::from(1), pow(BigInt::from(q), c.len())))
}

/// Horocycle index `hor(x, ξ) = d(x, x∧ξ) − d(e, x∧ξ)`.
pub fn horocycle(x: &ReducedWord, xi: &EndPrefix) -> Result<i64> {
    let m = x.common_prefix_len(&xi.0);
    let needed = x.len() + m + 1;
    if xi.depth() < needed {
        return Err(Error::PrefixTooShort { depth: xi.depth(), needed });
    }
    Ok(x.len() as i64 - 2 * m as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use proptest::prelude::*;

    fn f2() -> Alphabet {
        Alphabet::free(2)
    }

    #[test]
    fn ray_letters_repeat() {
        let r = Ray::new(&f2(), &[2], &[1, -2]).unwrap();
        assert_eq!(r.prefix(5).0.letters(), &[2, 1, -2, 1, -2]);
        assert!(Ray::new(&f2(), &[1], &[-1]).is_err());
        assert!(Ray::new(&f2(), &[1], &[2, -1]).is_ok());
        assert!(Ray::new(&f2(), &[], &[1, -1]).is_err());
        let p = Ray::parse(&f2(), "e|1").unwrap();
        assert_eq!(p.vertex(3).letters(), &[1, 1, 1]);
        assert_eq!(p.to_string(), "e|1");
    }

    #[test]
    fn confluent_cases() {
        let a = f2();
        let x = TreePoint::Vertex(a.parse("1,2").unwrap());
        let y = TreePoint::Vertex(a.parse("1,-2").unwrap());
        assert_eq!(confluent(&x, &y).unwrap().letters(), &[1]);
        assert!(matches!(confluent(&x, &x), Err(Error::ConfluentUndefined)));
        let end = Ray::parse(&a, "e|1").unwrap();
        let short = TreePoint::End(end.prefix(1));
        let long = TreePoint::End(end.prefix(5));
        assert!(matches!(confluent(&TreePoint::Vertex(a.parse("1,1").unwrap()), &short), Err(Error::PrefixTooShort { .. })));
        assert_eq!(confluent(&x, &long).unwrap().letters(), &[1]);
    }

    #[test]
    fn horocycle_values() {
        let a = f2();
        let end = Ray::parse(&a, "e|1").unwrap();
        assert_eq!(horocycle(&ReducedWord::identity(), &end.prefix(1)).unwrap(), 0);
        assert_eq!(horocycle(&a.parse("1,1").unwrap(), &end.prefix(6)).unwrap(), -2);
        assert_eq!(horocycle(&a.parse("2").unwrap(), &end.prefix(6)).unwrap(), 1);
        assert!(horocycle(&a.parse("1,1").unwrap(), &end.prefix(4)).is_err());
    }

    #[test]
    fn ultrametric_scale() {
        let a = f2();
        let v = a.parse("1,2").unwrap();
        let w = a.parse("1,-2").unwrap();
        assert_eq!(ultrametric(&v, &w, 3), ratio(1, 3));
        assert_eq!(ultrametric(&v, &v, 3), ratio(0, 1));
    }

    fn word_strategy() -> impl Strategy<Value = ReducedWord> {
        prop::collection::vec(prop::sample::select(vec![1, -1, 2, -2]), 0..8)
            .prop_map(|ls| f2().reduce(&ls).unwrap())
    }

    proptest! {
        #[test]
        fn ultrametric_inequality(u in word_strategy(), v in word_strategy(), w in word_strategy()) {
            let d = |a: &ReducedWord, b: &ReducedWord| ultrametric(a, b, 3);
            let bound = std::cmp::max(d(&u, &v), d(&v, &w));
            prop_assert!(d(&u, &w) <= bound);
            prop_assert_eq!(d(&u, &v), d(&v, &u));
        }

        #[test]
        fn horocycle_cocycle(x in word_strategy(), y in word_strategy()) {
            // hor(x) − hor(y) is the Busemann difference, bounded by d(x, y).
            let end = Ray::parse(&f2(), "e|1,2").unwrap().prefix(40);
            let hx = horocycle(&x, &end).unwrap();
            let hy = horocycle(&y, &end).unwrap();
            let d = f2().distance(&x, &y) as i64;
            prop_assert!((hx - hy).abs() <= d);
            prop_assert_eq!((hx - hy - d).rem_euclid(2), 0);
        }
    }
}
