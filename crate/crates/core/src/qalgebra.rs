//! Math-type q-deformed calculus.
//!
//! The deformed oscillator obeys `A A† − q² A† A = 1`; every combinatorial
//! factor of the ordinary boson is replaced by the q-bracket
//! `[n] = (1 − q^{2n}) / (1 − q²)`, which reduces to `n` at `q = 1` and
//! saturates at `1 / (1 − q²)` for `q < 1`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest truncation accepted for coherent-state amplitudes.
pub const MAX_COHERENT_N: usize = 512;

/// Default relative tail weight tolerated when truncating a coherent state.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

const MAX_SERIES_TERMS: usize = 10_000;

/// Deformation parameter `q ∈ (0, 1]`; `q = 1` is the ordinary boson.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationParam(f64);

impl DeformationParam {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && q > 0.0 && q <= 1.0 {
            Ok(Self(q))
        } else {
            Err(Error::InvalidDeformation(q))
        }
    }

    pub fn undeformed() -> Self {
        Self(1.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_undeformed(self) -> bool {
        self.0 == 1.0
    }

    /// Convergence radius `1 / (1 − q²)` of the q-exponential; infinite at `q = 1`.
    pub fn radius(self) -> f64 {
        if self.is_undeformed() {
            f64::INFINITY
        } else {
            1.0 / (1.0 - self.0 * self.0)
        }
    }
}

/// Coherent-state label `α = √alpha_sq · e^{i alpha_phase}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentSpec {
    pub alpha_sq: f64,
    pub alpha_phase: f64,
}

impl CoherentSpec {
    pub fn new(alpha_sq: f64, alpha_phase: f64) -> Result<Self> {
        if !(alpha_sq.is_finite() && alpha_sq >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_sq must be finite and non-negative, got {alpha_sq}"
            )));
        }
        if !alpha_phase.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha_phase must be finite, got {alpha_phase}"
            )));
        }
        Ok(Self {
            alpha_sq,
            alpha_phase,
        })
    }

    /// Checks `|α|²` against the convergence radius of `e_q`.
    pub fn validate(&self, q: DeformationParam) -> Result<()> {
        let radius = q.radius();
        if self.alpha_sq >= radius {
            return Err(Error::OutsideRadius {
                x: self.alpha_sq,
                radius,
            });
        }
        Ok(())
    }
}

/// q-bracket `[n]`.
pub fn box_n(n: usize, q: DeformationParam) -> f64 {
    if q.is_undeformed() {
        return n as f64;
    }
    // expm1 keeps full relative precision as q → 1
    let ln_q2 = 2.0 * q.value().ln();
    (n as f64 * ln_q2).exp_m1() / ln_q2.exp_m1()
}

/// q-factorial `[n]! = [1][2]…[n]`.
pub fn q_factorial(n: usize, q: DeformationParam) -> Result<f64> {
    let mut acc = 1.0_f64;
    for k in 1..=n {
        acc *= box_n(k, q);
        if !acc.is_finite() {
            return Err(Error::Overflow(k));
        }
    }
    Ok(acc)
}

/// `e_q(x) = Σ xⁿ / [n]!`, summed until the current term drops below
/// `tail_tol · |partial sum|`.
pub fn q_exponential(x: f64, q: DeformationParam, tail_tol: f64) -> Result<f64> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tail_tol must be positive, got {tail_tol}"
        )));
    }
    let radius = q.radius();
    if !x.is_finite() || x.abs() >= radius {
        return Err(Error::OutsideRadius { x, radius });
    }
    let mut sum = 1.0;
    let mut term = 1.0;
    for n in 1..MAX_SERIES_TERMS {
        term *= x / box_n(n, q);
        sum += term;
        if term.abs() < tail_tol * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::SeriesNotConverged {
        terms: MAX_SERIES_TERMS,
    })
}

/// `⟨n−1| A |n⟩ = √[n]`.
pub fn ladder_down_element(n: usize, q: DeformationParam) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "annihilation matrix element needs n ≥ 1".into(),
        ));
    }
    Ok(box_n(n, q).sqrt())
}

/// `⟨n+1| A† |n⟩ = √[n+1]`.
pub fn ladder_up_element(n: usize, q: DeformationParam) -> f64 {
    box_n(n + 1, q).sqrt()
}

/// Unnormalized weights `|α|^{2n} / [n]!` for `n = 0..=n_max`.
fn coherent_weights(alpha_sq: f64, q: DeformationParam, n_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_max + 1);
    let mut cur = 1.0;
    w.push(cur);
    for n in 1..=n_max {
        cur *= alpha_sq / box_n(n, q);
        w.push(cur);
    }
    w
}

/// Upper bound on `Σ_{n > n_max} |α|^{2n}/[n]!`.
///
/// Successive ratios `|α|²/[n+1]` never increase, so the tail is dominated by a
/// geometric series started at the first omitted term.
fn tail_bound(alpha_sq: f64, q: DeformationParam, last_weight: f64, n_max: usize) -> f64 {
    let first = last_weight * alpha_sq / box_n(n_max + 1, q);
    let ratio = alpha_sq / box_n(n_max + 2, q);
    if ratio < 1.0 {
        first / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

/// Coherent amplitudes `αⁿ / √([n]!)` for `n = 0..=n_max`, rescaled to unit
/// Euclidean norm.
///
/// Fails when the weight left out beyond `n_max` exceeds
/// [`DEFAULT_TAIL_TOL`] of the total.
pub fn coherent_amplitudes(
    spec: &CoherentSpec,
    q: DeformationParam,
    n_max: usize,
) -> Result<Vec<Complex64>> {
    spec.validate(q)?;
    if n_max > MAX_COHERENT_N {
        return Err(Error::InvalidParameter(format!(
            "n_max = {n_max} exceeds the cap {MAX_COHERENT_N}"
        )));
    }
    let weights = coherent_weights(spec.alpha_sq, q, n_max);
    let total: f64 = weights.iter().sum();
    let tail = tail_bound(spec.alpha_sq, q, weights[n_max], n_max);
    if tail > DEFAULT_TAIL_TOL * total {
        return Err(Error::Truncation {
            n_max,
            tail: tail / total,
            limit: DEFAULT_TAIL_TOL,
        });
    }
    Ok(normalized_amplitudes(spec, &weights))
}

fn normalized_amplitudes(spec: &CoherentSpec, weights: &[f64]) -> Vec<Complex64> {
    let phase = Complex64::from_polar(1.0, spec.alpha_phase);
    let mut amps: Vec<Complex64> = weights
        .iter()
        .enumerate()
        .map(|(n, w)| phase.powu(n as u32) * w.sqrt())
        .collect();
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut amps {
        *c /= norm;
    }
    amps
}

/// Smallest truncation whose relative tail weight is below `tail_tol`.
pub fn coherent_cutoff(spec: &CoherentSpec, q: DeformationParam, tail_tol: f64) -> Result<usize> {
    spec.validate(q)?;
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tail_tol must be positive, got {tail_tol}"
        )));
    }
    let mut weight = 1.0;
    let mut total = 1.0;
    for n_max in 0..=MAX_COHERENT_N {
        if n_max > 0 {
            weight *= spec.alpha_sq / box_n(n_max, q);
            total += weight;
        }
        if tail_bound(spec.alpha_sq, q, weight, n_max) <= tail_tol * total {
            return Ok(n_max);
        }
    }
    Err(Error::Truncation {
        n_max: MAX_COHERENT_N,
        tail: tail_bound(spec.alpha_sq, q, weight, MAX_COHERENT_N) / total,
        limit: tail_tol,
    })
}

/// Coherent amplitudes truncated automatically at [`coherent_cutoff`].
pub fn coherent_amplitudes_auto(
    spec: &CoherentSpec,
    q: DeformationParam,
    tail_tol: f64,
) -> Result<Vec<Complex64>> {
    let n_max = coherent_cutoff(spec, q, tail_tol)?;
    let weights = coherent_weights(spec.alpha_sq, q, n_max);
    Ok(normalized_amplitudes(spec, &weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q(v: f64) -> DeformationParam {
        DeformationParam::new(v).unwrap()
    }

    #[test]
    fn bracket_values() {
        assert_eq!(box_n(3, q(1.0)), 3.0);
        assert_relative_eq!(box_n(2, q(0.5)), 1.25, epsilon = 1e-15);
        assert_eq!(box_n(0, q(0.7)), 0.0);
        assert_relative_eq!(box_n(1, q(0.3)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_q() {
        for bad in [0.0, -0.2, 1.0000001, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                DeformationParam::new(bad),
                Err(Error::InvalidDeformation(_))
            ));
        }
    }

    #[test]
    fn factorial_values() {
        assert_eq!(q_factorial(0, q(0.5)).unwrap(), 1.0);
        assert_eq!(q_factorial(3, q(1.0)).unwrap(), 6.0);
        assert_relative_eq!(q_factorial(3, q(0.5)).unwrap(), 1.640625, epsilon = 1e-15);
    }

    #[test]
    fn factorial_overflow_is_reported() {
        assert!(matches!(q_factorial(200, q(1.0)), Err(Error::Overflow(_))));
    }

    #[test]
    fn ladder_elements() {
        assert_relative_eq!(
            ladder_down_element(1, q(0.3)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(ladder_up_element(0, q(0.6)), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            ladder_down_element(2, q(0.5)).unwrap(),
            1.118_033_988_749_895,
            epsilon = 1e-12
        );
        assert!(ladder_down_element(0, q(0.5)).is_err());
    }

    #[test]
    fn exponential_limits() {
        assert_relative_eq!(
            q_exponential(1.0, q(1.0), 1e-15).unwrap(),
            std::f64::consts::E,
            max_relative = 1e-14
        );
        assert_eq!(q_exponential(0.0, q(0.8), 1e-15).unwrap(), 1.0);
    }

    #[test]
    fn exponential_matches_direct_sum() {
        // 200-term direct summation with factorials built independently
        let qv = 0.5_f64;
        let mut fact = 1.0;
        let mut oracle = 1.0;
        for n in 1..200 {
            fact *= (1.0 - qv.powi(2 * n)) / (1.0 - qv * qv);
            oracle += 0.5_f64.powi(n) / fact;
        }
        let got = q_exponential(0.5, q(qv), 1e-15).unwrap();
        assert_relative_eq!(got, oracle, max_relative = 1e-14);
    }

    #[test]
    fn exponential_outside_radius() {
        // radius for q = 0.5 is 4/3
        assert!(matches!(
            q_exponential(1.4, q(0.5), 1e-15),
            Err(Error::OutsideRadius { .. })
        ));
        assert!(q_exponential(-1.4, q(0.5), 1e-15).is_err());
        assert!(q_exponential(1.0, q(0.5), 0.0).is_err());
    }

    #[test]
    fn vacuum_amplitudes() {
        let spec = CoherentSpec::new(0.0, 0.0).unwrap();
        let amps = coherent_amplitudes(&spec, q(0.4), 4).unwrap();
        assert_eq!(amps.len(), 5);
        assert_eq!(amps[0], Complex64::new(1.0, 0.0));
        assert!(amps[1..].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn undeformed_amplitudes_are_poissonian() {
        let spec = CoherentSpec::new(0.5, 0.0).unwrap();
        let amps = coherent_amplitudes(&spec, q(1.0), 30).unwrap();
        let mut fact = 1.0;
        for (n, c) in amps.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let poisson = (-0.5_f64).exp() * 0.5_f64.powi(n as i32) / fact;
            assert!((c.norm_sqr() - poisson).abs() < 1e-15, "n = {n}");
        }
    }

    #[test]
    fn deformed_amplitudes_match_direct_evaluation() {
        let spec = CoherentSpec::new(0.5, 0.3).unwrap();
        let amps = coherent_amplitudes(&spec, q(0.9), 30).unwrap();
        let qv = 0.9_f64;
        let mut fact = 1.0;
        let mut direct = Vec::new();
        for n in 0..=30 {
            if n > 0 {
                fact *= (1.0 - qv.powi(2 * n)) / (1.0 - qv * qv);
            }
            direct.push(0.5_f64.powi(n) / fact);
        }
        let total: f64 = direct.iter().sum();
        for (n, c) in amps.iter().enumerate() {
            assert!((c.norm_sqr() - direct[n] / total).abs() < 1e-14, "n = {n}");
            let expected_phase = Complex64::from_polar(1.0, 0.3 * n as f64);
            if c.norm() > 1e-12 {
                assert!((c / c.norm() - expected_phase).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn truncation_too_short_is_an_error() {
        let spec = CoherentSpec::new(0.5, 0.0).unwrap();
        assert!(matches!(
            coherent_amplitudes(&spec, q(1.0), 3),
            Err(Error::Truncation { .. })
        ));
        assert!(coherent_amplitudes(&spec, q(1.0), MAX_COHERENT_N + 1).is_err());
    }

    #[test]
    fn coherent_outside_radius_rejected() {
        // radius for q = 0.5 is 4/3
        let spec = CoherentSpec::new(1.5, 0.0).unwrap();
        assert!(matches!(
            coherent_amplitudes(&spec, q(0.5), 20),
            Err(Error::OutsideRadius { .. })
        ));
        assert!(CoherentSpec::new(-0.1, 0.0).is_err());
    }

    #[test]
    fn cutoff_meets_tolerance() {
        for qv in [1.0, 0.99, 0.9, 0.7] {
            let spec = CoherentSpec::new(0.5, 0.0).unwrap();
            let n = coherent_cutoff(&spec, q(qv), 1e-10).unwrap();
            // independent tail: sum 2000 terms beyond the cutoff
            let w = coherent_weights(0.5, q(qv), n + 2000);
            let total: f64 = w.iter().sum();
            let tail: f64 = w[n + 1..].iter().sum();
            assert!(tail / total < 1e-10, "q = {qv}, n = {n}");
            assert!(n < 30, "q = {qv}, n = {n}");
            if n > 0 {
                let shorter: f64 = w[n..].iter().sum();
                assert!(
                    shorter / total > 1e-11,
                    "cutoff {n} not near-minimal for q = {qv}"
                );
            }
        }
    }
}
