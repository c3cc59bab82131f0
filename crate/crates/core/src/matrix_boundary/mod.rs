//! Ball-indexed first-passage matrices for finite-range walks on trees.
//!
//! For a walk of range `R` let `B` be the ball of radius `R`. For a letter
//! `c` the hop matrix `M_c(u, v) = F^{cB}(u, cv|z)` records where the walk
//! started at `u ∈ B` first enters the ball around `c`. Every walk from `u`
//! to a distant ball passes through the balls centred on the intermediate
//! geodesic vertices, so `Fb(w|z) = M_{w₁} ⋯ M_{w_k}` and all first-passage
//! data reduce to the finitely many `M_c`. These satisfy a polynomial system
//! with nonnegative coefficients whose minimal solution is computed by the
//! monotone solver, including at the radius of convergence.

mod dp;
mod martin;

use std::collections::{BTreeMap, VecDeque};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Alphabet, Letter, ReducedWord};
use crate::monotone::{self, MonotoneSystem, Singularity};
use crate::walks::GroupLaw;

pub use dp::{first_passage_to_ball, DpOptions, DpPassage};
pub use martin::{
    contraction_limit, factor_contraction, lambda_z, martin_kernel_matrix, ratio_kernel_matrix, Contraction,
    MartinMatrixValue, RatioMatrixKernel,
};

/// The ball `B = B_R` with its connectivity radius `N` and block length
/// `D = N + 2R + 1`.
#[derive(Clone, Debug)]
pub struct BallIndex {
    alphabet: Alphabet,
    range: usize,
    words: Vec<ReducedWord>,
    index: BTreeMap<ReducedWord, usize>,
    connectivity: usize,
}

impl BallIndex {
    /// `N` is the smallest radius `≥ R` inside which every pair of `B` is
    /// joined by a path of positive-probability steps.
    pub fn new(law: &GroupLaw) -> Result<Self> {
        let alphabet = law.alphabet();
        let range = law.range().max(1);
        let words = alphabet.ball(range);
        let index = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let steps: Vec<ReducedWord> =
            law.entries().iter().filter(|(w, _)| !w.is_identity()).map(|(w, _)| w.clone()).collect();
        let limit = range + 16;
        let connectivity = (range..=limit)
            .find(|&n| connected_within(&alphabet, &steps, &words, n))
            .ok_or_else(|| Error::InvalidWalk(format!("ball of radius {range} not connected within radius {limit}")))?;
        Ok(BallIndex { alphabet, range, words, index, connectivity })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn words(&self) -> &[ReducedWord] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn position(&self, w: &ReducedWord) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn connectivity(&self) -> usize {
        self.connectivity
    }

    pub fn block(&self) -> usize {
        self.connectivity + 2 * self.range + 1
    }

    pub fn labels(&self) -> Vec<String> {
        self.words.iter().map(|w| w.to_string()).collect()
    }
}

fn connected_within(alphabet: &Alphabet, steps: &[ReducedWord], ball: &[ReducedWord], n: usize) -> bool {
    ball.iter().all(|u| {
        let mut seen = std::collections::BTreeSet::from([u.clone()]);
        let mut queue = VecDeque::from([u.clone()]);
        while let Some(x) = queue.pop_front() {
            for g in steps {
                let y = alphabet.multiply(&x, g);
                if y.len() <= n && seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        ball.iter().all(|v| seen.contains(v))
    })
}

/// `e_start · M_{h₁} ⋯ M_{h_m}` with weight `weight`.
#[derive(Clone, Debug)]
struct Term {
    weight: f64,
    start: usize,
    hops: Vec<usize>,
}

#[derive(Clone, Debug)]
struct Equation {
    letter: usize,
    row: usize,
    terms: Vec<Term>,
    /// `(column, unknown)` pairs of this row.
    columns: Vec<(usize, usize)>,
}

/// The polynomial system for the hop matrices `M_c`, one per letter.
#[derive(Debug)]
pub struct BallSystem {
    ball: BallIndex,
    letters: Vec<Letter>,
    inverse: Vec<usize>,
    mu: Vec<(ReducedWord, f64)>,
    /// Row `u` of `M_c` is `e_{c⁻¹u}` when `u ∈ cB`.
    fixed: Vec<Vec<Option<usize>>>,
    equations: Vec<Equation>,
    dim: usize,
    singular: OnceLock<std::result::Result<Singularity, String>>,
}

impl BallSystem {
    pub fn new(law: &GroupLaw) -> Result<Self> {
        let ball = BallIndex::new(law)?;
        let a = ball.alphabet;
        let big_r = ball.range;
        let letters = a.letters();
        let letter_pos = |l: Letter| letters.iter().position(|&m| m == l).expect("letter");
        let inverse: Vec<usize> = letters.iter().map(|&l| letter_pos(a.inverse(l))).collect();
        let mu: Vec<(ReducedWord, f64)> = law.float_entries().map(|(w, p)| (w.clone(), p)).collect();
        let nb = ball.len();

        let mut fixed = vec![vec![None; nb]; letters.len()];
        let mut equations = Vec::new();
        for (li, &l) in letters.iter().enumerate() {
            let center = a.word(&[l])?;
            for (ui, u) in ball.words.iter().enumerate() {
                if a.distance(u, &center) <= big_r {
                    fixed[li][ui] = ball.position(&a.relative(&center, u));
                    continue;
                }
                let terms = mu
                    .iter()
                    .map(|(g, p)| {
                        let target = a.multiply(u, g);
                        let (start, hops) = if a.distance(&target, &center) <= big_r {
                            (ball.position(&a.relative(&center, &target)).unwrap(), vec![])
                        } else if target.len() <= big_r {
                            (ball.position(&target).unwrap(), vec![li])
                        } else {
                            let c = target.letters();
                            let (start, mut hops) = descend(&ball, &target, &inverse, &letters);
                            if c[0] == l {
                                // The last descent hop lands on the centre `c₁ = l`.
                                hops.pop();
                            } else {
                                hops.push(li);
                            }
                            (start, hops)
                        };
                        Term { weight: *p, start, hops }
                    })
                    .collect();
                equations.push(Equation { letter: li, row: ui, terms, columns: vec![] });
            }
        }
        let mut sys = BallSystem { ball, letters, inverse, mu, fixed, equations, dim: 0, singular: OnceLock::new() };
        sys.assign_support();
        Ok(sys)
    }

    /// Keeps only the structurally nonzero entries as unknowns.
    fn assign_support(&mut self) {
        let nb = self.ball.len();
        let nl = self.letters.len();
        let mut support = vec![vec![false; nb]; self.equations.len()];
        loop {
            let mats: Vec<DMatrix<f64>> = (0..nl)
                .map(|li| {
                    let mut m = self.fixed_part(li);
                    for (e, s) in self.equations.iter().zip(&support) {
                        if e.letter == li {
                            for (v, &on) in s.iter().enumerate() {
                                if on {
                                    m[(e.row, v)] = 1.0;
                                }
                            }
                        }
                    }
                    m
                })
                .collect();
            let mut changed = false;
            for (e, s) in self.equations.iter().zip(support.iter_mut()) {
                let row = self.row_value(&mats, e);
                for v in 0..nb {
                    if row[v] > 0.0 && !s[v] {
                        s[v] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut next = 0;
        for (e, s) in self.equations.iter_mut().zip(&support) {
            e.columns = (0..nb)
                .filter(|&v| s[v])
                .map(|v| {
                    next += 1;
                    (v, next - 1)
                })
                .collect();
        }
        self.dim = next;
    }

    fn fixed_part(&self, li: usize) -> DMatrix<f64> {
        let nb = self.ball.len();
        let mut m = DMatrix::zeros(nb, nb);
        for (u, col) in self.fixed[li].iter().enumerate() {
            if let Some(v) = col {
                m[(u, *v)] = 1.0;
            }
        }
        m
    }

    fn row_value(&self, mats: &[DMatrix<f64>], e: &Equation) -> DVector<f64> {
        let nb = self.ball.len();
        let mut out = DVector::zeros(nb);
        for t in &e.terms {
            out += chain_row(mats, t.start, &t.hops, nb) * t.weight;
        }
        out
    }

    pub fn ball(&self) -> &BallIndex {
        &self.ball
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn letter_index(&self, l: Letter) -> usize {
        self.letters.iter().position(|&m| m == l).expect("letter of the alphabet")
    }

    /// Hop matrices `M_c` from a vector of unknowns.
    pub fn matrices(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let mut mats: Vec<DMatrix<f64>> = (0..self.letters.len()).map(|li| self.fixed_part(li)).collect();
        for e in &self.equations {
            for &(v, k) in &e.columns {
                mats[e.letter][(e.row, v)] = x[k];
            }
        }
        mats
    }

    pub fn singularity(&self) -> Result<Singularity> {
        self.singular
            .get_or_init(|| monotone::singularity(self).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Convergence)
    }

    pub fn r(&self) -> Result<f64> {
        Ok(self.singularity()?.r)
    }

    /// Passage data at `z`; `z = r` (to within `1e−14·r`) uses the fold solution.
    pub fn at(&self, z: f64) -> Result<PassageMatrices<'_>> {
        let sing = self.singularity().ok();
        let x = match &sing {
            Some(s) if (z - s.r).abs() <= 1e-14 * s.r => s.x.clone(),
            Some(s) if z > s.r => {
                return Err(Error::InvalidInput(format!("z = {z} beyond the radius of convergence {}", s.r)))
            }
            _ => monotone::solve(self, z, None)?.x,
        };
        self.at_solution(z, &x)
    }

    fn at_solution(&self, z: f64, x: &[f64]) -> Result<PassageMatrices<'_>> {
        let mats = self.matrices(x);
        let nb = self.ball.len();
        // (I − zA) G_B = δ_e with A the one-step law followed by the return to B.
        let mut a = DMatrix::<f64>::zeros(nb, nb);
        for (ui, u) in self.ball.words.iter().enumerate() {
            for (g, p) in &self.mu {
                let target = self.ball.alphabet.multiply(u, g);
                let row = match self.ball.position(&target) {
                    Some(k) => basis(nb, k),
                    None => {
                        let (start, hops) = descend(&self.ball, &target, &self.inverse, &self.letters);
                        chain_row(&mats, start, &hops, nb)
                    }
                };
                for v in 0..nb {
                    a[(ui, v)] += p * row[v];
                }
            }
        }
        let lhs = DMatrix::identity(nb, nb) - a * z;
        let green = lhs
            .lu()
            .solve(&basis(nb, 0))
            .filter(|g| g.iter().all(|v| v.is_finite() && *v > 0.0))
            .ok_or_else(|| Error::Convergence(format!("ball Green system singular at z = {z}")))?;
        Ok(PassageMatrices { sys: self, z, mats, green })
    }
}

/// Start index and descent hops taking `p` (with `|p| > R`) back to `B`:
/// centres `p₁⋯p_{k−R}`, then successively shorter prefixes down to `e`.
fn descend(ball: &BallIndex, p: &ReducedWord, inverse: &[usize], letters: &[Letter]) -> (usize, Vec<usize>) {
    let c = p.letters();
    let k = c.len();
    let big_r = ball.range;
    let tail = ReducedWord::from_letters_unchecked(c[k - big_r..].to_vec());
    let start = ball.position(&tail).expect("suffix in ball");
    let hops = c[..k - big_r]
        .iter()
        .rev()
        .map(|&l| inverse[letters.iter().position(|&m| m == l).unwrap()])
        .collect();
    (start, hops)
}

fn basis(n: usize, k: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[k] = 1.0;
    v
}

fn chain_row(mats: &[DMatrix<f64>], start: usize, hops: &[usize], nb: usize) -> DVector<f64> {
    let mut v = basis(nb, start);
    for &h in hops {
        v = mats[h].tr_mul(&v);
    }
    v
}

impl MonotoneSystem for BallSystem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn psi(&self, x: &[f64]) -> DVector<f64> {
        let mats = self.matrices(x);
        let mut out = DVector::zeros(self.dim);
        for e in &self.equations {
            if e.columns.is_empty() {
                continue;
            }
            let row = self.row_value(&mats, e);
            for &(v, k) in &e.columns {
                out[k] = row[v];
            }
        }
        out
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mats = self.matrices(x);
        let nb = self.ball.len();
        // Unknown slots per letter: (row, column, index).
        let mut slots: Vec<Vec<(usize, usize, usize)>> = vec![vec![]; self.letters.len()];
        for e in &self.equations {
            for &(v, k) in &e.columns {
                slots[e.letter].push((e.row, v, k));
            }
        }
        let mut jac = DMatrix::zeros(self.dim, self.dim);
        for e in &self.equations {
            if e.columns.is_empty() {
                continue;
            }
            for t in &e.terms {
                let m = t.hops.len();
                // left[i] = e_start M_{h₁}⋯M_{h_i}; right[i] = M_{h_{i+1}}⋯M_{h_m}.
                let mut left = vec![basis(nb, t.start)];
                for &h in &t.hops {
                    let next = mats[h].tr_mul(left.last().unwrap());
                    left.push(next);
                }
                let mut right = vec![DMatrix::<f64>::identity(nb, nb); m + 1];
                for i in (0..m).rev() {
                    right[i] = &mats[t.hops[i]] * &right[i + 1];
                }
                for (i, &h) in t.hops.iter().enumerate() {
                    for &(a, b, s) in &slots[h] {
                        let la = left[i][a];
                        if la == 0.0 {
                            continue;
                        }
                        for &(v, k) in &e.columns {
                            jac[(k, s)] += t.weight * la * right[i + 1][(b, v)];
                        }
                    }
                }
            }
        }
        jac
    }
}

/// Hop matrices and the ball Green vector at a fixed `z`.
#[derive(Clone, Debug)]
pub struct PassageMatrices<'a> {
    sys: &'a BallSystem,
    pub z: f64,
    /// `M_c` in the order of `BallSystem::letters`.
    pub mats: Vec<DMatrix<f64>>,
    /// `G(u, e|z)` for `u ∈ B`.
    pub green: DVector<f64>,
}

impl PassageMatrices<'_> {
    pub fn system(&self) -> &BallSystem {
        self.sys
    }

    /// `Fb(w|z) = (F^{wB}(u, wv|z))_{u,v ∈ B}`.
    pub fn big_fb(&self, w: &ReducedWord) -> DMatrix<f64> {
        let nb = self.sys.ball.len();
        w.letters()
            .iter()
            .fold(DMatrix::identity(nb, nb), |acc, &l| acc * &self.mats[self.sys.letter_index(l)])
    }

    /// `fb(x, y|z) = (F^{yB}(x, yu|z))_{u ∈ B}`.
    pub fn fb(&self, x: &ReducedWord, y: &ReducedWord) -> DVector<f64> {
        let w = self.sys.ball.alphabet.relative(x, y);
        let hops: Vec<usize> = w.letters().iter().map(|&l| self.sys.letter_index(l)).collect();
        chain_row(&self.mats, 0, &hops, self.sys.ball.len())
    }

    /// `G(p, e|z)` for any `p`.
    pub fn green_to_root(&self, p: &ReducedWord) -> f64 {
        match self.sys.ball.position(p) {
            Some(k) => self.green[k],
            None => {
                let (start, hops) = descend(&self.sys.ball, p, &self.sys.inverse, &self.sys.letters);
                chain_row(&self.mats, start, &hops, self.sys.ball.len()).dot(&self.green)
            }
        }
    }

    /// `G(x, y|z)`.
    pub fn green(&self, x: &ReducedWord, y: &ReducedWord) -> f64 {
        self.green_to_root(&self.sys.ball.alphabet.relative(y, x))
    }

    /// `gb(x, y|z) = (G(xu, y|z))_{u ∈ B}`.
    pub fn gb(&self, x: &ReducedWord, y: &ReducedWord) -> DVector<f64> {
        let a = self.sys.ball.alphabet;
        DVector::from_iterator(
            self.sys.ball.len(),
            self.sys.ball.words.iter().map(|u| self.green(&a.multiply(x, u), y)),
        )
    }

    pub fn dump(&self, w: &ReducedWord) -> MatrixDump {
        let m = self.big_fb(w);
        MatrixDump {
            schema: 1,
            z: self.z,
            word: w.to_string(),
            labels: self.sys.ball.labels(),
            entries: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
        }
    }
}

/// `Fb(w|z)` with its ball labels, for export.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixDump {
    pub schema: u32,
    pub z: f64,
    pub word: String,
    pub labels: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

/// Zero columns are entirely zero; returns the smallest min/max ratio over
/// the nonzero columns, or `None` if some column mixes zeros and positives.
pub fn column_ratio(m: &DMatrix<f64>) -> Option<f64> {
    let mut worst: f64 = 1.0;
    for col in m.column_iter() {
        let max = col.max();
        let min = col.min();
        if max == 0.0 {
            continue;
        }
        if min <= 0.0 {
            return None;
        }
        worst = worst.min(min / max);
    }
    Some(worst)
}
