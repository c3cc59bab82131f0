use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{Alphabet, ReducedWord};

/// `G(x,y)/(G(x,w)G(w,y))` over sampled geodesic triples with `d(x,y) = distance`.
#[derive(Clone, Debug, Serialize)]
pub struct DistanceBracket {
    pub distance: usize,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Largest `G(x',y)/G(x,y)` over neighbours `x'` of `x`.
    pub harnack: f64,
}

/// `|G(x,y)G(x',y')/(G(x,y')G(x',y)) − 1|` against the separation of `[x,x']` and `[y,y']`.
#[derive(Clone, Debug, Serialize)]
pub struct QuadrupleDecay {
    pub separations: Vec<usize>,
    pub deviations: Vec<f64>,
    /// Fitted geometric decay ratio; `None` when every deviation vanishes.
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnconaReport {
    pub z: f64,
    pub seed: u64,
    pub brackets: Vec<DistanceBracket>,
    pub quadruple: QuadrupleDecay,
}

impl AnconaReport {
    /// Relative spread of the measured upper constant across the sampled distances.
    pub fn constant_spread(&self) -> f64 {
        let maxes: Vec<f64> = self.brackets.iter().map(|b| b.max_ratio).collect();
        let hi = maxes.iter().cloned().fold(f64::MIN, f64::max);
        let lo = maxes.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / lo
    }
}

fn random_word(a: &Alphabet, len: usize, rng: &mut ChaCha8Rng) -> ReducedWord {
    extend_random(a, ReducedWord::identity(), len, rng)
}

fn extend_random(a: &Alphabet, start: ReducedWord, len: usize, rng: &mut ChaCha8Rng) -> ReducedWord {
    let mut w = start;
    for _ in 0..len {
        let choices = a.forward_letters(&w);
        w = a.step(&w, choices[rng.gen_range(0..choices.len())]);
    }
    w
}

/// Measures Ancona and Harnack constants from `green(v) = G(e, v|z)`, using
/// group invariance `G(x, y) = G(e, x⁻¹y)`.
pub fn ancona_harnack_check(
    a: &Alphabet,
    green: impl Fn(&ReducedWord) -> Result<f64>,
    z: f64,
    distances: &[usize],
    samples: usize,
    seed: u64,
) -> Result<AnconaReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut brackets = Vec::new();
    for &d in distances {
        let (mut lo, mut hi, mut har) = (f64::MAX, f64::MIN, f64::MIN);
        for _ in 0..samples {
            let y = random_word(a, d, &mut rng);
            let k = rng.gen_range(1..d.max(2));
            let w = y.prefix(k);
            let gy = green(&y)?;
            let ratio = gy / (green(&w)? * green(&a.relative(&w, &y))?);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            for s in a.letters() {
                let moved = a.multiply(&a.invert(&a.word(&[s])?), &y);
                har = har.max(green(&moved)? / gy);
            }
        }
        brackets.push(DistanceBracket { distance: d, samples, min_ratio: lo, max_ratio: hi, harnack: har });
    }

    let letters = a.letters();
    let mut separations = Vec::new();
    let mut deviations = Vec::new();
    for n in 1..=8usize {
        let u = random_word(a, n, &mut rng);
        let branches = a.forward_letters(&u);
        let y = extend_random(a, a.step(&u, branches[0]), 2, &mut rng);
        let y2 = extend_random(a, a.step(&u, branches[1 % branches.len()]), 2, &mut rng);
        let first = u.letters()[0];
        let s = *letters.iter().find(|&&l| l != first && l != a.inverse(first)).unwrap_or(&letters[0]);
        let x2 = a.word(&[s])?;
        let e = ReducedWord::identity();
        let g = |p: &ReducedWord, q: &ReducedWord| green(&a.relative(p, q));
        let dev = (g(&e, &y)? * g(&x2, &y2)? / (g(&e, &y2)? * g(&x2, &y)?) - 1.0).abs();
        separations.push(n);
        deviations.push(dev);
    }
    let rate = if deviations.iter().all(|d| *d <= 1e-13) {
        None
    } else {
        let pts: Vec<(f64, f64)> = separations
            .iter()
            .zip(&deviations)
            .filter(|(_, d)| **d > 1e-15)
            .map(|(n, d)| (*n as f64, d.ln()))
            .collect();
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        Some(slope.exp())
    };
    Ok(AnconaReport { z, seed, brackets, quadruple: QuadrupleDecay { separations, deviations, rate } })
}
