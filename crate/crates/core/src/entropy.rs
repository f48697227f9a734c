//! Shannon entropy and its relation to exposure.

use crate::distribution::{DiscreteDistribution, ValueId};
use crate::error::{invalid, Error, Result};

/// `H(p) = −Σ p_i log_base p_i`, with `0·log 0 = 0`.
pub fn entropy(dist: &DiscreteDistribution, base: f64) -> Result<f64> {
    if !(base.is_finite() && base > 1.0) {
        return Err(invalid("base", format!("{base} must exceed 1")));
    }
    Ok(entropy_nats(dist) / base.ln())
}

pub fn entropy_nats(dist: &DiscreteDistribution) -> f64 {
    let h: f64 = (0..dist.len())
        .map(|i| dist.mass(i))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    h.max(0.0)
}

pub fn entropy_bits(dist: &DiscreteDistribution) -> f64 {
    entropy_nats(dist) / std::f64::consts::LN_2
}

/// Markov bound on exposure from entropy: `Q(t) ≤ min(1, −H / log t)`,
/// with `H` and the logarithm in the same base.
pub fn entropy_exposure_bound(h: f64, t: f64, base: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid("t", format!("{t} must lie strictly in (0, 1)")));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("{h} is not a nonnegative entropy")));
    }
    if !(base.is_finite() && base > 1.0) {
        return Err(invalid("base", format!("{base} must exceed 1")));
    }
    let log_t = t.ln() / base.ln();
    Ok((-h / log_t).min(1.0))
}

/// Entropy budget (in nats) for which the tightness witness has exactly
/// `atoms` atoms of mass `t`: `B = −atoms·t·ln t`.
pub fn witness_budget(atoms: u64, t: f64) -> f64 {
    -(atoms as f64) * t * t.ln()
}

/// A distribution whose exposure just above `t` meets the entropy bound
/// `−B/ln t` while its entropy stays within `B + 1/e` (natural log).
///
/// It has `m = −B/(t ln t)` atoms of mass `t` plus one remainder atom of
/// mass `1 + B/ln t`.
pub fn entropy_tightness_witness(budget: f64, t: f64) -> Result<DiscreteDistribution> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::Precondition(format!("budget B = {budget} must be positive")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Precondition(format!("t = {t} must lie in (0, 1)")));
    }
    let ln_t = t.ln();
    let exposed = -budget / ln_t;
    if exposed >= 1.0 - t {
        return Err(Error::Precondition(format!(
            "−B/ln t = {exposed} must be below 1 − t = {}",
            1.0 - t
        )));
    }
    let atoms_real = -budget / (t * ln_t);
    let atoms = atoms_real.round();
    if atoms < 1.0 || (atoms_real - atoms).abs() > 1e-9 * atoms.max(1.0) {
        return Err(Error::Precondition(format!(
            "−B/(t ln t) = {atoms_real} is not an integer ≥ 1"
        )));
    }
    let atoms = atoms as usize;
    let mut probs = vec![t; atoms];
    let rest = 1.0 - probs.iter().sum::<f64>();
    probs.push(rest);
    let mut values: Vec<ValueId> = (0..atoms).map(|i| ValueId::single(format!("atom{i}"))).collect();
    values.push(ValueId::single("rest"));
    DiscreteDistribution::from_probabilities(values, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exposure::ExposureCurve;

    #[test]
    fn uniform_and_point_mass() {
        let u = DiscreteDistribution::uniform(4).unwrap();
        assert!((entropy(&u, 2.0).unwrap() - 2.0).abs() < 1e-15);
        let p = DiscreteDistribution::from_probs(&[1.0, 0.0]).unwrap();
        assert_eq!(entropy(&p, 2.0).unwrap(), 0.0);
        assert!(entropy(&u, 1.0).is_err());
    }

    #[test]
    fn direct_sum_532() {
        let d = DiscreteDistribution::from_probs(&[0.5, 0.3, 0.2]).unwrap();
        let want = -(0.5f64 * 0.5f64.ln() + 0.3 * 0.3f64.ln() + 0.2 * 0.2f64.ln());
        assert!((entropy(&d, std::f64::consts::E).unwrap() - want).abs() < 1e-15);
        assert!((want - 1.0296530140645737).abs() < 1e-15);
    }

    #[test]
    fn eight_bits_at_two_to_minus_sixteen() {
        let b = entropy_exposure_bound(8.0, 2f64.powi(-16), 2.0).unwrap();
        assert_eq!(b, 0.5);
        assert_eq!(entropy_exposure_bound(0.0, 0.3, 2.0).unwrap(), 0.0);
        assert!(entropy_exposure_bound(1.0, 0.0, 2.0).is_err());
        assert!(entropy_exposure_bound(1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn single_atom_witness() {
        let t = 0.1;
        let w = entropy_tightness_witness(witness_budget(1, t), t).unwrap();
        assert_eq!(w.len(), 2);
        let c = ExposureCurve::new(&w);
        assert_eq!(c.eval_f64(t.next_up()), t);
    }

    #[test]
    fn two_atom_witness_at_e_minus_two() {
        let t = (-2f64).exp();
        let b = witness_budget(2, t);
        assert!((b - 4.0 * t).abs() < 1e-15);
        let w = entropy_tightness_witness(b, t).unwrap();
        assert_eq!(w.probabilities()[..2], [t, t]);
        assert!(entropy_nats(&w) <= b + (-1f64).exp());
    }

    #[test]
    fn witness_precondition_errors() {
        let t = (-2f64).exp();
        // n ≈ 1.9988, not an integer
        assert!(matches!(entropy_tightness_witness(0.541, t), Err(Error::Precondition(_))));
        assert!(entropy_tightness_witness(-1.0, t).is_err());
        assert!(entropy_tightness_witness(1.0, 1.5).is_err());
        // −B/ln t ≥ 1 − t
        assert!(entropy_tightness_witness(witness_budget(9, 0.1), 0.1).is_err());
    }
}
