use crate::error::Result;
use crate::geometry::ReducedWord;
use crate::walks::GroupLaw;

/// `max_x |Σ_w p(x,w) f(w) − t f(x)| / f(x)` over the listed states.
pub fn verify_t_harmonic<S>(states: &[S], row: impl Fn(&S) -> Vec<(S, f64)>, f: impl Fn(&S) -> f64, t: f64) -> f64 {
    states
        .iter()
        .map(|x| {
            let fx = f(x);
            let pf: f64 = row(x).iter().map(|(w, p)| p * f(w)).sum();
            (pf - t * fx).abs() / fx
        })
        .fold(0.0, f64::max)
}

/// Harmonicity residual of `f` for a group walk on the ball of radius `radius`;
/// `f` is evaluated out to `radius + range`.
pub fn verify_t_harmonic_group(
    law: &GroupLaw,
    f: impl Fn(&ReducedWord) -> Result<f64>,
    t: f64,
    radius: usize,
) -> Result<f64> {
    let a = law.alphabet();
    let mut worst: f64 = 0.0;
    for x in a.ball(radius) {
        let fx = f(&x)?;
        let mut pf = 0.0;
        for (w, p) in law.float_entries() {
            pf += p * f(&a.multiply(&x, w))?;
        }
        worst = worst.max((pf - t * fx).abs() / fx);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::WalkSpec;

    #[test]
    fn constants_are_harmonic() {
        let law = WalkSpec::parse("mode finitely-supported\nrank 2\ne 1/6\n1 1/3\n-1 1/12\n2 1/4\n-2 1/6\n").unwrap().group_law();
        assert_eq!(verify_t_harmonic_group(&law, |_| Ok(1.0), 1.0, 3).unwrap(), 0.0);
    }
}
