//! Walk specifications, exact n-step transition probabilities, local-limit
//! fits and spectral radii.

mod engine;
mod fit;
mod radial;
mod spectral;

pub use engine::{distribution, ratio_sequence, trace, Chain, EngineKind, EngineOptions, RatioSequence, Trace};
pub use fit::{fit_local_limit, LocalLimitFit};
pub use radial::{radial_projection, sphere_landing, RadialChain};
pub use spectral::{isotropic_transform, lattice_spectral_radius, lattice_tilt, rho_p1, spectral_radius, SpectralMethod, SpectralRadius};

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Alphabet, ReducedWord};
use crate::scalar::{parse_ratio, ratio_to_f64, Ratio};

/// Isotropic walk `Σ a_d P_d` on `T_{q+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicLaw {
    pub q: u32,
    /// `profile[d] = a_d`.
    pub profile: Vec<Ratio>,
}

impl IsotropicLaw {
    pub fn new(q: u32, profile: Vec<Ratio>) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidWalk(format!("isotropic walks need q >= 2, got {q}")));
        }
        check_distribution(profile.iter())?;
        let mut profile = profile;
        while profile.len() > 1 && profile.last().is_some_and(Zero::is_zero) {
            profile.pop();
        }
        if profile.iter().skip(1).all(Zero::is_zero) {
            return Err(Error::InvalidWalk("profile has no mass at positive distances".into()));
        }
        Ok(IsotropicLaw { q, profile })
    }

    pub fn range(&self) -> usize {
        self.profile.len() - 1
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::tree(self.q)
    }

    pub fn a(&self, d: usize) -> f64 {
        self.profile.get(d).map(ratio_to_f64).unwrap_or(0.0)
    }

    /// The same walk as a law on the Cayley-tree model.
    pub fn to_group(&self) -> GroupLaw {
        let alphabet = self.alphabet();
        let mut entries = Vec::new();
        for (d, a) in self.profile.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let sphere = alphabet.sphere(d);
            let each = a / Ratio::from_integer((sphere.len() as i64).into());
            entries.extend(sphere.into_iter().map(|w| (w, each.clone())));
        }
        GroupLaw::from_entries_unchecked(alphabet, entries)
    }
}

/// Finitely supported law `μ` on a word group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupLaw {
    alphabet: Alphabet,
    entries: Vec<(ReducedWord, Ratio)>,
    floats: Vec<f64>,
}

impl GroupLaw {
    pub fn new(alphabet: Alphabet, entries: Vec<(ReducedWord, Ratio)>) -> Result<Self> {
        let mut merged: BTreeMap<ReducedWord, Ratio> = BTreeMap::new();
        for (w, p) in entries {
            alphabet.word(w.letters())?;
            *merged.entry(w).or_insert_with(Ratio::zero) += p;
        }
        check_distribution(merged.values())?;
        let law = GroupLaw::from_entries_unchecked(alphabet, merged.into_iter().collect());
        law.check_generates()?;
        Ok(law)
    }

    /// Nearest-neighbour law with identity mass `mu_e` and per-letter masses.
    pub fn nearest_neighbour(alphabet: Alphabet, mu_e: Ratio, letters: &[(i32, Ratio)]) -> Result<Self> {
        let mut entries = vec![(ReducedWord::identity(), mu_e)];
        for (l, p) in letters {
            entries.push((alphabet.word(&[*l])?, p.clone()));
        }
        GroupLaw::new(alphabet, entries)
    }

    fn from_entries_unchecked(alphabet: Alphabet, entries: Vec<(ReducedWord, Ratio)>) -> Self {
        let mut entries: Vec<_> = entries.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let floats = entries.iter().map(|(_, p)| ratio_to_f64(p)).collect();
        GroupLaw { alphabet, entries, floats }
    }

    /// The support must reach every generator by positive-probability paths.
    fn check_generates(&self) -> Result<()> {
        let radius = self.range().max(1) + 3;
        let mut seen: std::collections::HashSet<ReducedWord> = [ReducedWord::identity()].into();
        let mut frontier = vec![ReducedWord::identity()];
        while let Some(x) = frontier.pop() {
            for (w, _) in &self.entries {
                let y = self.alphabet.multiply(&x, w);
                if y.len() <= radius && seen.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        for l in self.alphabet.letters() {
            if !seen.contains(&ReducedWord::from_letters_unchecked(vec![l])) {
                return Err(Error::InvalidWalk(format!(
                    "support does not generate the group as a semigroup (generator {l} unreachable within radius {radius})"
                )));
            }
        }
        Ok(())
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn entries(&self) -> &[(ReducedWord, Ratio)] {
        &self.entries
    }

    /// `(word, μ(word))` with probabilities as doubles.
    pub fn float_entries(&self) -> impl Iterator<Item = (&ReducedWord, f64)> {
        self.entries.iter().map(|(w, _)| w).zip(self.floats.iter().copied())
    }

    pub fn prob(&self, w: &ReducedWord) -> f64 {
        match self.entries.binary_search_by(|(v, _)| v.cmp(w)) {
            Ok(i) => self.floats[i],
            Err(_) => 0.0,
        }
    }

    pub fn exact_prob(&self, w: &ReducedWord) -> Ratio {
        match self.entries.binary_search_by(|(v, _)| v.cmp(w)) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => Ratio::zero(),
        }
    }

    /// Maximal word length in the support.
    pub fn range(&self) -> usize {
        self.entries.iter().map(|(w, _)| w.len()).max().unwrap_or(0)
    }

    pub fn is_nearest_neighbour(&self) -> bool {
        self.range() <= 1
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries
            .iter()
            .all(|(w, p)| self.exact_prob(&self.alphabet.invert(w)) == *p)
    }

    /// Isotropic profile when `μ` is constant on spheres of the Cayley tree.
    pub fn as_isotropic(&self) -> Option<IsotropicLaw> {
        let q = self.alphabet.branching();
        if q < 2 {
            return None;
        }
        let range = self.range();
        let mut profile = Vec::with_capacity(range + 1);
        for d in 0..=range {
            let sphere = self.alphabet.sphere(d);
            let first = self.exact_prob(&sphere[0]);
            if sphere.iter().any(|w| self.exact_prob(w) != first) {
                return None;
            }
            profile.push(first * Ratio::from_integer((sphere.len() as i64).into()));
        }
        IsotropicLaw::new(q, profile).ok()
    }

    pub fn identity_mass(&self) -> f64 {
        self.prob(&ReducedWord::identity())
    }
}

/// A random walk: isotropic profile on a tree or a law on a word group.
#[derive(Clone, Debug, PartialEq)]
pub enum WalkSpec {
    Isotropic(IsotropicLaw),
    Group(GroupLaw),
}

impl WalkSpec {
    pub fn alphabet(&self) -> Alphabet {
        match self {
            WalkSpec::Isotropic(l) => l.alphabet(),
            WalkSpec::Group(g) => g.alphabet(),
        }
    }

    pub fn group_law(&self) -> GroupLaw {
        match self {
            WalkSpec::Isotropic(l) => l.to_group(),
            WalkSpec::Group(g) => g.clone(),
        }
    }

    /// Isotropic view, detecting sphere-uniform group laws.
    pub fn isotropic(&self) -> Option<IsotropicLaw> {
        match self {
            WalkSpec::Isotropic(l) => Some(l.clone()),
            WalkSpec::Group(g) => g.as_isotropic(),
        }
    }

    pub fn range(&self) -> usize {
        match self {
            WalkSpec::Isotropic(l) => l.range(),
            WalkSpec::Group(g) => g.range(),
        }
    }

    /// Sufficient aperiodicity test: a holding probability, or support at
    /// distances of both parities.
    pub fn is_aperiodic(&self) -> bool {
        let lengths: Vec<usize> = match self {
            WalkSpec::Isotropic(l) => (0..l.profile.len()).filter(|&d| !l.profile[d].is_zero()).collect(),
            WalkSpec::Group(g) => g.entries().iter().map(|(w, _)| w.len()).collect(),
        };
        lengths.contains(&0) || (lengths.iter().any(|d| d % 2 == 1) && lengths.iter().any(|d| d % 2 == 0))
    }

    /// Parses the text format described in the README.
    pub fn parse(text: &str) -> Result<Self> {
        let mut mode = None;
        let mut alphabet = None;
        let mut q = None;
        let mut pairs: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let mut it = line.split_whitespace();
            let (key, val) = match (it.next(), it.next(), it.next()) {
                (Some(k), Some(v), None) => (k, v),
                _ => return Err(Error::Parse { line: lineno, msg: format!("expected two fields, got '{line}'") }),
            };
            let parse_u32 = |v: &str| {
                v.parse::<u32>()
                    .map_err(|_| Error::Parse { line: lineno, msg: format!("expected a positive integer, got '{v}'") })
            };
            match key {
                "mode" => mode = Some(val.to_string()),
                "rank" => alphabet = Some(Alphabet::free(parse_u32(val)?)),
                "involutions" => alphabet = Some(Alphabet::Involutions { count: parse_u32(val)? }),
                "q" | "degree" => {
                    let v = parse_u32(val)?;
                    let qq = if key == "degree" { v.saturating_sub(1) } else { v };
                    q = Some(qq);
                }
                _ => pairs.push((lineno, key.to_string(), val.to_string())),
            }
        }
        let prob = |line: usize, s: &str| {
            let p = parse_ratio(s).ok_or_else(|| Error::Parse { line, msg: format!("bad probability '{s}'") })?;
            if p.is_negative() {
                return Err(Error::Parse { line, msg: format!("negative probability '{s}'") });
            }
            Ok(p)
        };
        match mode.as_deref() {
            Some("isotropic") => {
                let q = q.ok_or(Error::Parse { line: 0, msg: "isotropic mode needs a 'q' line".into() })?;
                let mut profile: Vec<Ratio> = Vec::new();
                for (line, k, v) in &pairs {
                    let d: usize = k
                        .parse()
                        .map_err(|_| Error::Parse { line: *line, msg: format!("expected distance, got '{k}'") })?;
                    if profile.len() <= d {
                        profile.resize(d + 1, Ratio::zero());
                    }
                    profile[d] += prob(*line, v)?;
                }
                Ok(WalkSpec::Isotropic(IsotropicLaw::new(q, profile)?))
            }
            Some("finitely-supported") => {
                let alphabet = alphabet
                    .or(q.map(Alphabet::tree))
                    .ok_or(Error::Parse { line: 0, msg: "need 'rank', 'involutions' or 'q'".into() })?;
                let mut entries = Vec::new();
                for (line, k, v) in &pairs {
                    let w = alphabet
                        .parse(k)
                        .map_err(|e| Error::Parse { line: *line, msg: e.to_string() })?;
                    entries.push((w, prob(*line, v)?));
                }
                Ok(WalkSpec::Group(GroupLaw::new(alphabet, entries)?))
            }
            Some(other) => Err(Error::Parse { line: 0, msg: format!("unknown mode '{other}'") }),
            None => Err(Error::Parse { line: 0, msg: "missing 'mode' line".into() }),
        }
    }
}

impl fmt::Display for WalkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WalkSpec::Isotropic(l) => {
                writeln!(f, "mode isotropic")?;
                writeln!(f, "q {}", l.q)?;
                for (d, a) in l.profile.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
                    writeln!(f, "{d} {a}")?;
                }
            }
            WalkSpec::Group(g) => {
                writeln!(f, "mode finitely-supported")?;
                match g.alphabet() {
                    Alphabet::Free { rank } => writeln!(f, "rank {rank}")?,
                    Alphabet::Involutions { count } => writeln!(f, "involutions {count}")?,
                }
                for (w, p) in g.entries() {
                    writeln!(f, "{w} {p}")?;
                }
            }
        }
        Ok(())
    }
}

/// Serializable summary of a walk.
#[derive(Clone, Debug, Serialize)]
pub struct WalkSummary {
    pub kind: &'static str,
    pub alphabet: Alphabet,
    pub range: usize,
    pub symmetric: bool,
    pub law: Vec<(String, String)>,
}

impl WalkSpec {
    pub fn summary(&self) -> WalkSummary {
        let g = self.group_law();
        WalkSummary {
            kind: match self {
                WalkSpec::Isotropic(_) => "isotropic",
                WalkSpec::Group(_) => "finitely-supported",
            },
            alphabet: g.alphabet(),
            range: g.range(),
            symmetric: g.is_symmetric(),
            law: g.entries().iter().map(|(w, p)| (w.to_string(), p.to_string())).collect(),
        }
    }
}

fn check_distribution<'a>(probs: impl Iterator<Item = &'a Ratio>) -> Result<()> {
    let mut total = Ratio::zero();
    for p in probs {
        if p.is_negative() {
            return Err(Error::InvalidWalk(format!("negative probability {p}")));
        }
        total += p;
    }
    if !total.is_one() {
        return Err(Error::InvalidWalk(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn parses_both_modes() {
        let iso = WalkSpec::parse("mode isotropic\nq 2\n0 1/2\n1 0.5\n").unwrap();
        assert!(matches!(iso, WalkSpec::Isotropic(ref l) if l.profile == vec![ratio(1, 2), ratio(1, 2)]));
        let f2 = WalkSpec::parse(
            "# lazy uniform\nmode finitely-supported\nrank 2\ne 1/5\n1 1/5\n-1 1/5\n2 1/5\n-2 0.2\n",
        )
        .unwrap();
        assert!(f2.isotropic().is_some());
        assert!(f2.is_aperiodic());
        let text = f2.to_string();
        assert_eq!(WalkSpec::parse(&text).unwrap(), f2);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(WalkSpec::parse("mode isotropic\nq 2\n0 1/2\n1 1/3\n"), Err(Error::InvalidWalk(_))));
        assert!(matches!(WalkSpec::parse("mode finitely-supported\nrank 2\n1,-1 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(WalkSpec::parse("mode finitely-supported\nrank 2\n1 1/2\n-1 1/2\n"), Err(Error::InvalidWalk(_))));
        assert!(WalkSpec::parse("q 2\n0 1\n").is_err());
        assert!(WalkSpec::parse("mode isotropic\nq 2\n0 x\n").is_err());
    }

    #[test]
    fn isotropic_roundtrip_through_group() {
        let l = IsotropicLaw::new(2, vec![ratio(1, 4), ratio(1, 4), ratio(1, 2)]).unwrap();
        let g = l.to_group();
        assert_eq!(g.entries().len(), 1 + 3 + 6);
        assert_eq!(g.as_isotropic().unwrap(), l);
        assert!(g.is_symmetric());
    }

    #[test]
    fn periodicity_flag() {
        let srw = IsotropicLaw::new(2, vec![ratio(0, 1), ratio(1, 1)]).unwrap();
        assert!(!WalkSpec::Isotropic(srw).is_aperiodic());
    }
}
