use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hash};

use num_bigint::BigInt;
use serde::Serialize;

use super::radial::{sphere_size, RadialChain};
use super::{GroupLaw, WalkSpec};
use crate::error::{Error, Result};
use crate::geometry::ReducedWord;
use crate::scalar::{Arithmetic, HiPrec, Ratio, Scalar};

type Map<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

/// A Markov chain with exact rational transition probabilities.
pub trait Chain {
    type State: Clone + Eq + Hash + Ord;
    fn start(&self) -> Self::State;
    fn transitions(&self, s: &Self::State) -> Vec<(Self::State, Ratio)>;
}

impl Chain for RadialChain {
    type State = usize;
    fn start(&self) -> usize {
        0
    }
    fn transitions(&self, s: &usize) -> Vec<(usize, Ratio)> {
        self.row(*s)
    }
}

impl Chain for GroupLaw {
    type State = ReducedWord;
    fn start(&self) -> ReducedWord {
        ReducedWord::identity()
    }
    fn transitions(&self, s: &ReducedWord) -> Vec<(ReducedWord, Ratio)> {
        let a = self.alphabet();
        self.entries().iter().map(|(w, p)| (a.multiply(s, w), p.clone())).collect()
    }
}

/// Full `n`-step distribution from the chain's start, sorted by state. No pruning.
pub fn distribution<C: Chain, S: Scalar>(chain: &C, n: usize, bits: usize) -> Vec<(C::State, S)> {
    let mut cur: Map<C::State, S> = Map::default();
    cur.insert(chain.start(), S::from_ratio(&Ratio::from_integer(1.into()), bits));
    let mut cache: Map<C::State, Vec<(C::State, S)>> = Map::default();
    for _ in 0..n {
        let mut states: Vec<_> = cur.into_iter().collect();
        states.sort_by(|a, b| a.0.cmp(&b.0));
        let mut next: Map<C::State, S> = Map::default();
        for (s, p) in states {
            let row = cache.entry(s.clone()).or_insert_with(|| {
                chain.transitions(&s).into_iter().map(|(t, r)| (t, S::from_ratio(&r, bits))).collect()
            });
            for (t, r) in row.iter() {
                next.entry(t.clone()).or_insert_with(S::zero).add_assign(&p.mul(r));
            }
        }
        cur = next;
    }
    let mut out: Vec<_> = cur.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    /// Distance chain of an isotropic walk.
    Radial,
    /// Dense one-dimensional convolution on the integers.
    Lattice,
    /// Sparse convolution over group elements.
    Convolution,
}

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    /// States below this mass are dropped (float modes only).
    pub prune: f64,
    /// Maximal number of live states for the sparse engine.
    pub max_states: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { prune: 1e-30, max_states: 4_000_000 }
    }
}

/// `p^{(n)}(e, y)` for a fixed target set and every `n ≤ n_max`.
#[derive(Clone, Debug)]
pub struct Trace {
    pub kind: EngineKind,
    pub targets: Vec<ReducedWord>,
    /// `values[n][t]`.
    pub values: Vec<Vec<f64>>,
    /// Exact values when run in rational mode.
    pub exact: Option<Vec<Vec<Ratio>>>,
    /// Cumulative pruned mass after `n` steps; the true value lies in
    /// `[value, value + pruned]`.
    pub pruned: Vec<f64>,
}

impl Trace {
    pub fn column(&self, t: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[t]).collect()
    }

    pub fn upper(&self, n: usize, t: usize) -> f64 {
        self.values[n][t] + self.pruned[n]
    }
}

trait Evolver<S: Scalar> {
    fn step(&mut self) -> Result<()>;
    fn value(&self, w: &ReducedWord) -> S;
    fn pruned(&self) -> f64;
}

struct RadialEvolver<S: Scalar> {
    boundary: Vec<Vec<(usize, S)>>,
    bulk: Vec<(i64, S)>,
    dist: Vec<S>,
    q: u32,
    bits: usize,
}

impl<S: Scalar> RadialEvolver<S> {
    fn new(chain: &RadialChain, bits: usize) -> Self {
        let conv = |r: &Ratio| S::from_ratio(r, bits);
        RadialEvolver {
            boundary: chain
                .boundary_rows()
                .iter()
                .map(|row| row.iter().map(|(j, p)| (*j, conv(p))).collect())
                .collect(),
            bulk: chain.bulk().iter().map(|(o, p)| (*o, conv(p))).collect(),
            dist: vec![S::from_ratio(&Ratio::from_integer(1.into()), bits)],
            q: chain.q(),
            bits,
        }
    }
}

impl<S: Scalar> Evolver<S> for RadialEvolver<S> {
    fn step(&mut self) -> Result<()> {
        let reach = self.bulk.iter().map(|(o, _)| *o).max().unwrap_or(0).max(0) as usize;
        let mut next = vec![S::zero(); self.dist.len() + reach];
        for (k, p) in self.dist.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            if k < self.boundary.len() {
                for (j, r) in &self.boundary[k] {
                    next[*j].add_assign(&p.mul(r));
                }
            } else {
                for (o, r) in &self.bulk {
                    next[(k as i64 + o) as usize].add_assign(&p.mul(r));
                }
            }
        }
        while next.len() > 1 && next.last().is_some_and(|v| v.is_zero()) {
            next.pop();
        }
        self.dist = next;
        Ok(())
    }

    fn value(&self, w: &ReducedWord) -> S {
        let k = w.len();
        match self.dist.get(k) {
            None => S::zero(),
            Some(p) => {
                p.mul(&S::from_ratio(&Ratio::new(BigInt::from(1), sphere_size(self.q, k)), self.bits))
            }
        }
    }

    fn pruned(&self) -> f64 {
        0.0
    }
}

struct LatticeEvolver<S: Scalar> {
    steps: Vec<(i64, S)>,
    lo: i64,
    dist: Vec<S>,
    prune: f64,
    pruned: f64,
}

impl<S: Scalar> Evolver<S> for LatticeEvolver<S> {
    fn step(&mut self) -> Result<()> {
        let min_o = self.steps.iter().map(|s| s.0).min().unwrap_or(0);
        let max_o = self.steps.iter().map(|s| s.0).max().unwrap_or(0);
        let width = self.dist.len() + (max_o - min_o) as usize;
        let mut next = vec![S::zero(); width];
        for (i, p) in self.dist.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (o, r) in &self.steps {
                next[(i as i64 + o - min_o) as usize].add_assign(&p.mul(r));
            }
        }
        let mut lo = self.lo + min_o;
        if self.prune > 0.0 {
            let mut start = 0;
            while start + 1 < next.len() && next[start].to_f64() < self.prune {
                self.pruned += next[start].to_f64();
                start += 1;
            }
            while next.len() > start + 1 && next.last().is_some_and(|v| v.to_f64() < self.prune) {
                self.pruned += next.pop().map(|v| v.to_f64()).unwrap_or(0.0);
            }
            next.drain(..start);
            lo += start as i64;
        }
        self.lo = lo;
        self.dist = next;
        Ok(())
    }

    fn value(&self, w: &ReducedWord) -> S {
        let i = w.lattice_coordinate() - self.lo;
        if i < 0 {
            return S::zero();
        }
        self.dist.get(i as usize).cloned().unwrap_or_else(S::zero)
    }

    fn pruned(&self) -> f64 {
        self.pruned
    }
}

struct ConvolutionEvolver<S: Scalar> {
    law: GroupLaw,
    steps: Vec<S>,
    dist: Map<ReducedWord, S>,
    prune: f64,
    pruned: f64,
    max_states: usize,
}

impl<S: Scalar> Evolver<S> for ConvolutionEvolver<S> {
    fn step(&mut self) -> Result<()> {
        let a = self.law.alphabet();
        let mut states: Vec<_> = std::mem::take(&mut self.dist).into_iter().collect();
        states.sort_by(|x, y| x.0.cmp(&y.0));
        let mut next: Map<ReducedWord, S> = Map::default();
        for (x, p) in &states {
            for ((w, _), r) in self.law.entries().iter().zip(&self.steps) {
                next.entry(a.multiply(x, w)).or_insert_with(S::zero).add_assign(&p.mul(r));
            }
        }
        if self.prune > 0.0 {
            let mut dropped = 0.0;
            next.retain(|_, v| {
                let f = v.to_f64();
                if f < self.prune {
                    dropped += f;
                    false
                } else {
                    true
                }
            });
            self.pruned += dropped;
        }
        if next.len() > self.max_states {
            let radius = next.keys().map(|w| w.len()).max().unwrap_or(0);
            return Err(Error::Budget { radius, states: next.len(), limit: self.max_states });
        }
        self.dist = next;
        Ok(())
    }

    fn value(&self, w: &ReducedWord) -> S {
        self.dist.get(w).cloned().unwrap_or_else(S::zero)
    }

    fn pruned(&self) -> f64 {
        self.pruned
    }
}

fn pick_engine(spec: &WalkSpec) -> EngineKind {
    if spec.isotropic().is_some() {
        EngineKind::Radial
    } else if spec.alphabet() == crate::geometry::Alphabet::free(1) {
        EngineKind::Lattice
    } else {
        EngineKind::Convolution
    }
}

fn build<S: Scalar>(spec: &WalkSpec, kind: EngineKind, bits: usize, prune: f64, opts: &EngineOptions) -> Result<Box<dyn Evolver<S>>> {
    Ok(match kind {
        EngineKind::Radial => {
            let chain = RadialChain::new(&spec.isotropic().ok_or(Error::NotIsotropic)?);
            Box::new(RadialEvolver::<S>::new(&chain, bits))
        }
        EngineKind::Lattice => {
            let law = spec.group_law();
            let steps = law
                .entries()
                .iter()
                .map(|(w, p)| (w.lattice_coordinate(), S::from_ratio(p, bits)))
                .collect();
            Box::new(LatticeEvolver {
                steps,
                lo: 0,
                dist: vec![S::from_ratio(&Ratio::from_integer(1.into()), bits)],
                prune,
                pruned: 0.0,
            })
        }
        EngineKind::Convolution => {
            let law = spec.group_law();
            let steps = law.entries().iter().map(|(_, p)| S::from_ratio(p, bits)).collect();
            let mut dist = Map::default();
            dist.insert(ReducedWord::identity(), S::from_ratio(&Ratio::from_integer(1.into()), bits));
            Box::new(ConvolutionEvolver { law, steps, dist, prune, pruned: 0.0, max_states: opts.max_states })
        }
    })
}

fn run<S: Scalar>(
    spec: &WalkSpec,
    targets: &[ReducedWord],
    n_max: usize,
    bits: usize,
    prune: f64,
    opts: &EngineOptions,
) -> Result<(EngineKind, Vec<Vec<S>>, Vec<f64>)> {
    let kind = pick_engine(spec);
    let mut ev = build::<S>(spec, kind, bits, prune, opts)?;
    let mut values = Vec::with_capacity(n_max + 1);
    let mut pruned = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            ev.step()?;
        }
        values.push(targets.iter().map(|t| ev.value(t)).collect());
        pruned.push(ev.pruned());
    }
    Ok((kind, values, pruned))
}

/// Runs the cheapest exact engine for `spec` and records `p^{(n)}(e, y)` for
/// each target.
pub fn trace(
    spec: &WalkSpec,
    targets: &[ReducedWord],
    n_max: usize,
    arith: Arithmetic,
    opts: &EngineOptions,
) -> Result<Trace> {
    let alphabet = spec.alphabet();
    for t in targets {
        alphabet.word(t.letters())?;
    }
    match arith {
        Arithmetic::Exact => {
            let (kind, values, pruned) = run::<Ratio>(spec, targets, n_max, 0, 0.0, opts)?;
            Ok(Trace {
                kind,
                targets: targets.to_vec(),
                values: to_f64_rows(&values),
                exact: Some(values),
                pruned,
            })
        }
        Arithmetic::Float { bits } if bits <= 64 => {
            let (kind, values, pruned) = run::<f64>(spec, targets, n_max, bits, opts.prune, opts)?;
            Ok(Trace { kind, targets: targets.to_vec(), values, exact: None, pruned })
        }
        Arithmetic::Float { bits } => {
            let (kind, values, pruned) = run::<HiPrec>(spec, targets, n_max, bits, opts.prune, opts)?;
            Ok(Trace {
                kind,
                targets: targets.to_vec(),
                values: to_f64_rows(&values),
                exact: None,
                pruned,
            })
        }
    }
}

fn to_f64_rows<S: Scalar>(rows: &[Vec<S>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|v| v.to_f64()).collect()).collect()
}

/// `p^{(n)}(x, y) / p^{(n)}(e, e)` along `n`, skipping zero denominators.
#[derive(Clone, Debug, Serialize)]
pub struct RatioSequence {
    pub n: Vec<usize>,
    pub values: Vec<f64>,
    pub last: f64,
    /// `max |v_n − v_last|` over the final quarter of the sequence.
    pub cauchy_tail: f64,
}

pub fn ratio_sequence(
    spec: &WalkSpec,
    x: &ReducedWord,
    y: &ReducedWord,
    n_max: usize,
    arith: Arithmetic,
    opts: &EngineOptions,
) -> Result<RatioSequence> {
    let a = spec.alphabet();
    let rel = a.relative(x, y);
    let tr = trace(spec, &[ReducedWord::identity(), rel], n_max, arith, opts)?;
    let mut n_out = Vec::new();
    let mut values = Vec::new();
    let mut skipped = 0;
    for n in 0..=n_max {
        let den = tr.values[n][0];
        if den == 0.0 {
            skipped += 1;
            continue;
        }
        let v = match &tr.exact {
            Some(ex) => (&ex[n][1] / &ex[n][0]).to_f64(),
            None => tr.values[n][1] / den,
        };
        n_out.push(n);
        values.push(v);
    }
    if skipped > 0 {
        log::warn!("ratio sequence: skipped {skipped} steps with p^(n)(e,e) = 0");
    }
    let last = *values.last().ok_or(Error::InvalidInput("no step with p^(n)(e,e) > 0".into()))?;
    let tail_start = values.len() - values.len().div_ceil(4);
    let cauchy_tail = values[tail_start..].iter().map(|v| (v - last).abs()).fold(0.0, f64::max);
    Ok(RatioSequence { n: n_out, values, last, cauchy_tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Alphabet;
    use crate::scalar::ratio;
    use crate::walks::IsotropicLaw;

    fn z_lazy() -> WalkSpec {
        WalkSpec::parse("mode finitely-supported\nrank 1\ne 1/2\n1 1/4\n-1 1/4\n").unwrap()
    }

    fn f2_lazy() -> WalkSpec {
        WalkSpec::parse("mode finitely-supported\nrank 2\ne 1/5\n1 1/5\n-1 1/5\n2 1/5\n-2 1/5\n").unwrap()
    }

    #[test]
    fn two_step_values() {
        let e = ReducedWord::identity();
        let tr = trace(&z_lazy(), &[e.clone()], 2, Arithmetic::Exact, &EngineOptions::default()).unwrap();
        assert_eq!(tr.kind, EngineKind::Lattice);
        let ex = tr.exact.unwrap();
        assert_eq!(ex[0][0], ratio(1, 1));
        assert_eq!(ex[2][0], ratio(3, 8));
        let tr = trace(&f2_lazy(), &[e], 2, Arithmetic::Exact, &EngineOptions::default()).unwrap();
        assert_eq!(tr.kind, EngineKind::Radial);
        assert_eq!(tr.exact.unwrap()[2][0], ratio(1, 5));
    }

    #[test]
    fn engines_agree() {
        // The same sphere-uniform law through the radial and the sparse engine.
        let law = IsotropicLaw::new(2, vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)]).unwrap();
        let spec = WalkSpec::Isotropic(law.clone());
        let a = Alphabet::tree(2);
        let targets: Vec<ReducedWord> = a.ball(4);
        let radial = trace(&spec, &targets, 6, Arithmetic::Exact, &EngineOptions::default()).unwrap();
        let g = law.to_group();
        let conv = distribution::<_, Ratio>(&g, 6, 0);
        let lookup: std::collections::HashMap<_, _> = conv.into_iter().collect();
        for (t, w) in targets.iter().enumerate() {
            assert_eq!(radial.exact.as_ref().unwrap()[6][t], lookup.get(w).cloned().unwrap_or(ratio(0, 1)));
        }
    }

    #[test]
    fn float_modes_track_exact() {
        let e = ReducedWord::identity();
        let spec = f2_lazy();
        let ex = trace(&spec, &[e.clone()], 40, Arithmetic::Exact, &EngineOptions::default()).unwrap();
        let fl = trace(&spec, &[e.clone()], 40, Arithmetic::NATIVE, &EngineOptions::default()).unwrap();
        let hp = trace(&spec, &[e], 40, Arithmetic::from_bits(160), &EngineOptions::default()).unwrap();
        for n in 0..=40 {
            let v = ex.values[n][0];
            assert!((fl.values[n][0] - v).abs() <= 1e-14 * v);
            assert!((hp.values[n][0] - v).abs() <= 1e-15 * v);
        }
    }

    #[test]
    fn sparse_engine_brackets_under_pruning() {
        let spec = WalkSpec::parse("mode finitely-supported\nrank 2\ne 1/4\n1 1/4\n2 1/8\n-2 1/8\n-1 1/4\n").unwrap();
        let e = ReducedWord::identity();
        let exact = trace(&spec, &[e.clone()], 12, Arithmetic::Exact, &EngineOptions::default()).unwrap();
        let opts = EngineOptions { prune: 1e-9, max_states: 1_000_000 };
        let pruned = trace(&spec, &[e], 12, Arithmetic::NATIVE, &opts).unwrap();
        assert_eq!(pruned.kind, EngineKind::Convolution);
        for n in 0..=12 {
            let v = exact.values[n][0];
            assert!(pruned.values[n][0] <= v + 1e-15 && v <= pruned.upper(n, 0) + 1e-15);
        }
        let tight = EngineOptions { prune: 0.0, max_states: 50 };
        assert!(matches!(trace(&spec, &[], 12, Arithmetic::NATIVE, &tight), Err(Error::Budget { .. })));
    }

    #[test]
    fn ratio_sequence_skips_periodic_zeros() {
        let srw = WalkSpec::parse("mode finitely-supported\nrank 1\n1 1/2\n-1 1/2\n").unwrap();
        let two = Alphabet::free(1).lattice_point(2);
        let rs = ratio_sequence(&srw, &ReducedWord::identity(), &two, 20, Arithmetic::Exact, &EngineOptions::default())
            .unwrap();
        assert_eq!(rs.n.len(), 11);
        assert!(rs.values.iter().all(|v| v.is_finite()));
    }
}
