//! Reduced words, the Cayley-tree metric, ends and horocycles.
//!
//! A regular tree of degree `q + 1` is the Cayley graph of either a free
//! group (even degree) or a free product of `q + 1` copies of `Z/2` (odd
//! degree), so a single word type serves both.

mod ends;
mod geodesic;

pub use ends::{confluent, horocycle, ultrametric, ultrametric_points, EndPrefix, Ray, TreePoint};
pub use geodesic::GeodesicSegment;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Letter = i32;

/// Generator alphabet of the word group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphabet {
    /// Free group of the given rank; letters `±1..±rank`, `-i` inverts `i`.
    /// Rank 1 is the integer lattice.
    Free { rank: u32 },
    /// Free product of `count` involutions; letters `1..=count`, self-inverse.
    Involutions { count: u32 },
}

impl Alphabet {
    /// Cayley-graph model of the regular tree with `q + 1` neighbours per vertex.
    pub fn tree(q: u32) -> Self {
        let degree = q + 1;
        if degree % 2 == 0 {
            Alphabet::Free { rank: degree / 2 }
        } else {
            Alphabet::Involutions { count: degree }
        }
    }

    pub fn free(rank: u32) -> Self {
        Alphabet::Free { rank }
    }

    /// Number of neighbours of each vertex.
    pub fn degree(&self) -> u32 {
        match *self {
            Alphabet::Free { rank } => 2 * rank,
            Alphabet::Involutions { count } => count,
        }
    }

    /// `q`: the number of forward neighbours of a non-root vertex.
    pub fn branching(&self) -> u32 {
        self.degree() - 1
    }

    pub fn letters(&self) -> Vec<Letter> {
        match *self {
            Alphabet::Free { rank } => (1..=rank as Letter).flat_map(|i| [i, -i]).collect(),
            Alphabet::Involutions { count } => (1..=count as Letter).collect(),
        }
    }

    pub fn contains(&self, l: Letter) -> bool {
        match *self {
            Alphabet::Free { rank } => l != 0 && l.unsigned_abs() <= rank,
            Alphabet::Involutions { count } => l >= 1 && l as u32 <= count,
        }
    }

    pub fn inverse(&self, l: Letter) -> Letter {
        match self {
            Alphabet::Free { .. } => -l,
            Alphabet::Involutions { .. } => l,
        }
    }

    /// Validates an already reduced letter sequence.
    pub fn word(&self, letters: &[Letter]) -> Result<ReducedWord> {
        for (i, &l) in letters.iter().enumerate() {
            if !self.contains(l) {
                return Err(Error::InvalidWord(format!("letter {l} not in {self:?}")));
            }
            if i > 0 && letters[i - 1] == self.inverse(l) {
                return Err(Error::InvalidWord(format!(
                    "not freely reduced at position {i}: {} followed by {l}",
                    letters[i - 1]
                )));
            }
        }
        Ok(ReducedWord(letters.to_vec()))
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn reduce(&self, letters: &[Letter]) -> Result<ReducedWord> {
        let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
        for &l in letters {
            if !self.contains(l) {
                return Err(Error::InvalidWord(format!("letter {l} not in {self:?}")));
            }
            self.push_reduced(&mut out, l);
        }
        Ok(ReducedWord(out))
    }

    fn push_reduced(&self, out: &mut Vec<Letter>, l: Letter) {
        if out.last() == Some(&self.inverse(l)) {
            out.pop();
        } else {
            out.push(l);
        }
    }

    pub fn multiply(&self, x: &ReducedWord, y: &ReducedWord) -> ReducedWord {
        let mut out = x.0.clone();
        for &l in &y.0 {
            self.push_reduced(&mut out, l);
        }
        ReducedWord(out)
    }

    /// `x · l` for a single generator.
    pub fn step(&self, x: &ReducedWord, l: Letter) -> ReducedWord {
        let mut out = x.0.clone();
        self.push_reduced(&mut out, l);
        ReducedWord(out)
    }

    pub fn invert(&self, x: &ReducedWord) -> ReducedWord {
        ReducedWord(x.0.iter().rev().map(|&l| self.inverse(l)).collect())
    }

    /// `x⁻¹ y`.
    pub fn relative(&self, x: &ReducedWord, y: &ReducedWord) -> ReducedWord {
        let k = x.common_prefix_len(y);
        let mut out: Vec<Letter> = x.0[k..].iter().rev().map(|&l| self.inverse(l)).collect();
        out.extend_from_slice(&y.0[k..]);
        ReducedWord(out)
    }

    pub fn distance(&self, x: &ReducedWord, y: &ReducedWord) -> usize {
        let k = x.common_prefix_len(y);
        x.len() + y.len() - 2 * k
    }

    /// Letters `l` with `x·l` one step further from the root.
    pub fn forward_letters(&self, x: &ReducedWord) -> Vec<Letter> {
        let back = x.last().map(|l| self.inverse(l));
        self.letters().into_iter().filter(|&l| Some(l) != back).collect()
    }

    /// All reduced words of length `k`, in lexicographic order of generation.
    pub fn sphere(&self, k: usize) -> Vec<ReducedWord> {
        let mut layer = vec![ReducedWord::identity()];
        for _ in 0..k {
            let mut next = Vec::with_capacity(layer.len() * self.degree() as usize);
            for w in &layer {
                for l in self.forward_letters(w) {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(ReducedWord(v));
                }
            }
            layer = next;
        }
        layer
    }

    /// `|S_k| = (q+1) q^{k-1}` for `k ≥ 1`.
    pub fn sphere_size(&self, k: usize) -> u128 {
        if k == 0 {
            1
        } else {
            self.degree() as u128 * (self.branching() as u128).pow(k as u32 - 1)
        }
    }

    /// All words of length at most `k`, ordered by length.
    pub fn ball(&self, k: usize) -> Vec<ReducedWord> {
        (0..=k).flat_map(|j| self.sphere(j)).collect()
    }

    /// Ball of radius `k` around `center`.
    pub fn ball_around(&self, center: &ReducedWord, k: usize) -> Vec<ReducedWord> {
        self.ball(k).iter().map(|u| self.multiply(center, u)).collect()
    }

    /// Rank-1 word `a^k`.
    pub fn lattice_point(&self, k: i64) -> ReducedWord {
        debug_assert_eq!(*self, Alphabet::Free { rank: 1 });
        let l = if k >= 0 { 1 } else { -1 };
        ReducedWord(vec![l; k.unsigned_abs() as usize])
    }
}

/// A freely reduced word; also a vertex of the Cayley tree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReducedWord(Vec<Letter>);

impl ReducedWord {
    pub fn identity() -> Self {
        ReducedWord(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn prefix(&self, k: usize) -> ReducedWord {
        ReducedWord(self.0[..k.min(self.0.len())].to_vec())
    }

    pub fn common_prefix_len(&self, other: &ReducedWord) -> usize {
        common_prefix(&self.0, &other.0)
    }

    /// Exponent sum; the lattice coordinate of a rank-1 word.
    pub fn lattice_coordinate(&self) -> i64 {
        self.0.iter().map(|&l| l.signum() as i64).sum()
    }

    pub(crate) fn from_letters_unchecked(letters: Vec<Letter>) -> Self {
        ReducedWord(letters)
    }
}

pub(crate) fn common_prefix(a: &[Letter], b: &[Letter]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for ReducedWord {
    type Err = Error;

    /// `e` or comma-separated signed integers; reducedness is checked by [`Alphabet::word`].
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(ReducedWord::identity());
        }
        let letters = s
            .split(',')
            .map(|t| t.trim().parse::<Letter>().map_err(|_| Error::InvalidWord(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if letters.contains(&0) {
            return Err(Error::InvalidWord(format!("zero letter in {s}")));
        }
        Ok(ReducedWord(letters))
    }
}

impl Alphabet {
    /// Parses and validates a word over this alphabet.
    pub fn parse(&self, s: &str) -> Result<ReducedWord> {
        let raw: ReducedWord = s.parse()?;
        self.word(&raw.0)
    }
}
