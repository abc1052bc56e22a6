//! Finite sums of decaying exponentials, `f(x) = Σ αᵢ e^(−μᵢ x)`.
//!
//! Survival functions and densities of parallel systems with exponential
//! components, and every difference `F̄_Y(x) − F̄_X(ax + b)` built from them,
//! are of this form. The canonical representation keeps the rates strictly
//! increasing with nonzero coefficients, which is what the coefficient
//! sign-change bound on real zeros is stated against.

mod pattern;
mod roots;

use std::fmt;
use std::ops::{Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pattern::{sign_at_origin, sign_pattern, ScanOptions, Sign, SignPattern, SignRegion};
pub use roots::{count_roots, isolate_roots, RealRoot, RootCount, RootIsolation, RootKind};

/// Relative tolerance used when merging nearly equal rates.
pub const DEFAULT_MERGE_TOL: f64 = 1e-12;

/// Multiple of machine epsilon (times the absolute term sum) below which an
/// evaluated value is indistinguishable from rounding noise.
pub(crate) const NOISE_FACTOR: f64 = 64.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub rate: f64,
    pub coeff: f64,
}

/// Canonical exponential sum. Rates are strictly increasing and every
/// coefficient is nonzero; the empty sum is the zero function.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpSum {
    terms: Vec<Term>,
}

/// A value `mantissa · e^log_scale` that neither overflows nor underflows.
#[derive(Clone, Copy, Debug)]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
    /// `Σ |αᵢ e^(−μᵢ x − log_scale)|`, the scale rounding errors are relative to.
    pub abs_sum: f64,
}

impl Scaled {
    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }

    /// `ln |value|`, finite whenever the mantissa is nonzero.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }

    pub fn sign(&self) -> Sign {
        Sign::of(self.mantissa)
    }

    /// True when the mantissa sits above the rounding-noise level.
    pub fn resolved(&self) -> bool {
        self.mantissa.abs() > NOISE_FACTOR * f64::EPSILON * self.abs_sum
    }
}

/// Neumaier compensated summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl ExpSum {
    pub fn zero() -> Self {
        ExpSum { terms: Vec::new() }
    }

    /// Sorts terms by rate, merges rates that agree within `tol` (relative),
    /// and drops merged coefficients whose magnitude is at most `tol` times the
    /// magnitude of what was merged. With `tol = 0` only exactly equal rates are
    /// merged and only exact cancellations are dropped.
    pub fn canonicalize<I>(raw: I, tol: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        if !(tol >= 0.0) || !tol.is_finite() {
            return Err(Error::domain(format!(
                "merge tolerance must be >= 0, got {tol}"
            )));
        }
        let mut raw: Vec<(f64, f64)> = raw.into_iter().collect();
        for &(rate, coeff) in &raw {
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::domain(format!(
                    "rate must be finite and >= 0, got {rate}"
                )));
            }
            if !coeff.is_finite() {
                return Err(Error::domain(format!(
                    "coefficient must be finite, got {coeff}"
                )));
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut terms = Vec::with_capacity(raw.len());
        let mut i = 0;
        while i < raw.len() {
            let lead = raw[i].0;
            let mut j = i + 1;
            while j < raw.len() && raw[j].0 - lead <= tol * raw[j].0.max(lead) {
                j += 1;
            }
            let group = &raw[i..j];
            let coeff = compensated_sum(group.iter().map(|t| t.1));
            let magnitude: f64 = group.iter().map(|t| t.1.abs()).sum();
            if coeff != 0.0 && coeff.abs() > tol * magnitude {
                terms.push(Term { rate: lead, coeff });
            }
            i = j;
        }
        Ok(ExpSum { terms })
    }

    /// Canonicalizes with [`DEFAULT_MERGE_TOL`].
    pub fn new<I>(raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        Self::canonicalize(raw, DEFAULT_MERGE_TOL)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Whether this is the zero function.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        compensated_sum(self.terms.iter().map(|t| t.coeff * (-t.rate * x).exp()))
    }

    /// Evaluates with the largest exponent factored out, so signs and
    /// magnitudes stay available far into either tail.
    pub fn eval_scaled(&self, x: f64) -> Scaled {
        if self.terms.is_empty() {
            return Scaled {
                mantissa: 0.0,
                log_scale: 0.0,
                abs_sum: 0.0,
            };
        }
        let log_scale = self
            .terms
            .iter()
            .map(|t| -t.rate * x)
            .fold(f64::NEG_INFINITY, f64::max);
        let parts = self
            .terms
            .iter()
            .map(|t| t.coeff * (-t.rate * x - log_scale).exp());
        let abs_sum = parts.clone().map(f64::abs).sum();
        Scaled {
            mantissa: compensated_sum(parts),
            log_scale,
            abs_sum,
        }
    }

    pub fn derivative(&self) -> ExpSum {
        ExpSum {
            terms: self
                .terms
                .iter()
                .filter(|t| t.rate != 0.0)
                .map(|t| Term {
                    rate: t.rate,
                    coeff: -t.coeff * t.rate,
                })
                .collect(),
        }
    }

    /// The `k`-th derivative at the origin, `Σ αᵢ (−μᵢ)^k`, together with the
    /// magnitude `Σ |αᵢ μᵢ^k|` that bounds its rounding error.
    pub fn derivative_at_zero(&self, k: u32) -> (f64, f64) {
        let exact = self
            .terms
            .iter()
            .map(|t| t.coeff * (-t.rate).powi(k as i32));
        let mag = exact.clone().map(f64::abs).sum();
        (compensated_sum(exact), mag)
    }

    /// Returns `g` with `g(x) = f(a·x + b)`.
    pub fn shift_scale(&self, a: f64, b: f64) -> Result<ExpSum> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::domain(format!("scale a must be positive, got {a}")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::domain(format!("shift b must be >= 0, got {b}")));
        }
        ExpSum::new(
            self.terms
                .iter()
                .map(|t| (t.rate * a, t.coeff * (-t.rate * b).exp())),
        )
    }

    /// Sign changes in the coefficient sequence taken by ascending rate, i.e.
    /// by descending base `e^(−μ)`. Bounds the number of real zeros.
    pub fn sign_change_bound(&self) -> usize {
        self.terms
            .windows(2)
            .filter(|w| (w[0].coeff > 0.0) != (w[1].coeff > 0.0))
            .count()
    }

    /// Sign of `f` as `x → +∞`: the sign of the smallest-rate coefficient.
    pub fn asymptotic_sign(&self) -> Sign {
        self.terms.first().map_or(Sign::Zero, |t| Sign::of(t.coeff))
    }

    /// Sign of `f` as `x → −∞`: the sign of the largest-rate coefficient.
    pub fn negative_asymptotic_sign(&self) -> Sign {
        self.terms.last().map_or(Sign::Zero, |t| Sign::of(t.coeff))
    }

    pub fn scale(&self, c: f64) -> ExpSum {
        if c == 0.0 {
            return ExpSum::zero();
        }
        ExpSum {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    rate: t.rate,
                    coeff: t.coeff * c,
                })
                .collect(),
        }
    }

    pub fn min_rate(&self) -> Option<f64> {
        self.terms.first().map(|t| t.rate)
    }

    pub fn max_rate(&self) -> Option<f64> {
        self.terms.last().map(|t| t.rate)
    }

    /// `Σ αᵢ/μᵢ`, the integral over `[0, ∞)`; `None` if a zero rate is present.
    pub fn integral(&self) -> Option<f64> {
        if self.terms.iter().any(|t| t.rate == 0.0) {
            return None;
        }
        Some(compensated_sum(self.terms.iter().map(|t| t.coeff / t.rate)))
    }

    /// `f' + μ₀ f` where `μ₀` is the smallest rate: the derivative of
    /// `e^(μ₀ x) f(x)` multiplied back by `e^(−μ₀ x)`. It has one term fewer,
    /// and its zeros are the critical points of `e^(μ₀ x) f`.
    pub(crate) fn rolle_reduction(&self) -> ExpSum {
        let Some(first) = self.terms.first() else {
            return ExpSum::zero();
        };
        let mu0 = first.rate;
        ExpSum {
            terms: self.terms[1..]
                .iter()
                .map(|t| Term {
                    rate: t.rate,
                    coeff: -(t.rate - mu0) * t.coeff,
                })
                .filter(|t| t.coeff != 0.0)
                .collect(),
        }
    }
}

impl Sub for &ExpSum {
    type Output = ExpSum;

    fn sub(self, rhs: &ExpSum) -> ExpSum {
        let raw = self
            .terms
            .iter()
            .map(|t| (t.rate, t.coeff))
            .chain(rhs.terms.iter().map(|t| (t.rate, -t.coeff)));
        ExpSum::new(raw).expect("terms of canonical sums are valid")
    }
}

impl Neg for &ExpSum {
    type Output = ExpSum;

    fn neg(self) -> ExpSum {
        self.scale(-1.0)
    }
}

impl fmt::Display for ExpSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let sign = if t.coeff < 0.0 {
                "-"
            } else if i > 0 {
                "+"
            } else {
                ""
            };
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{sign}{}·e^(-{}x)", t.coeff.abs(), t.rate)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(f: &ExpSum) -> Vec<(f64, f64)> {
        f.terms().iter().map(|t| (t.rate, t.coeff)).collect()
    }

    #[test]
    fn canonicalize_keeps_distinct_terms() {
        let f = ExpSum::canonicalize([(2.0, 1.0), (3.0, 1.0), (5.0, -1.0)], 0.0).unwrap();
        assert_eq!(pairs(&f), vec![(2.0, 1.0), (3.0, 1.0), (5.0, -1.0)]);
    }

    #[test]
    fn canonicalize_merges_equal_rates() {
        let f = ExpSum::canonicalize([(1.0, 1.0), (1.0, 1.0), (2.0, -1.0)], 0.0).unwrap();
        assert_eq!(pairs(&f), vec![(1.0, 2.0), (2.0, -1.0)]);
    }

    #[test]
    fn canonicalize_drops_cancelled_terms() {
        let f = ExpSum::canonicalize([(1.0, 1.0), (3.0, 1.0), (3.0, -1.0)], 0.0).unwrap();
        assert_eq!(pairs(&f), vec![(1.0, 1.0)]);
    }

    #[test]
    fn canonicalize_sorts_and_rejects_negative_rates() {
        let f = ExpSum::canonicalize([(3.0, 1.0), (1.0, -2.0)], 0.0).unwrap();
        assert_eq!(pairs(&f), vec![(1.0, -2.0), (3.0, 1.0)]);
        assert!(matches!(ExpSum::new([(-1.0, 1.0)]), Err(Error::Domain(_))));
    }

    #[test]
    fn near_equal_rates_merge_under_default_tolerance() {
        let f = ExpSum::new([(5.0, 1.0), (5.0 * (1.0 + 1e-15), -1.0), (2.0, 1.0)]).unwrap();
        assert_eq!(pairs(&f), vec![(2.0, 1.0)]);
    }

    #[test]
    fn eval_basic_values() {
        let surv = ExpSum::new([(2.0, 1.0), (3.0, 1.0), (5.0, -1.0)]).unwrap();
        assert_eq!(surv.eval(0.0), 1.0);
        assert!((surv.eval(0.5) - 0.50893).abs() < 1e-5);
        assert_eq!(ExpSum::zero().eval(1.7), 0.0);
    }

    #[test]
    fn derivative_termwise() {
        let f = ExpSum::new([(2.0, 1.0), (3.0, 1.0), (5.0, -1.0)]).unwrap();
        assert_eq!(
            pairs(&f.derivative()),
            vec![(2.0, -2.0), (3.0, -3.0), (5.0, 5.0)]
        );
        let c = ExpSum::new([(0.0, 4.0), (1.0, 1.0)]).unwrap();
        assert_eq!(pairs(&c.derivative()), vec![(1.0, -1.0)]);
    }

    #[test]
    fn shift_scale_examples() {
        let f = ExpSum::new([(2.0, 1.0)]).unwrap();
        assert_eq!(pairs(&f.shift_scale(1.0, 0.0).unwrap()), vec![(2.0, 1.0)]);
        let g = f.shift_scale(0.5, 1.0).unwrap();
        assert_eq!(g.terms()[0].rate, 1.0);
        assert!((g.terms()[0].coeff - (-2.0f64).exp()).abs() < 1e-16);

        let surv = ExpSum::new([(2.0, 1.0), (3.0, 1.0), (5.0, -1.0)]).unwrap();
        let h = surv.shift_scale(0.75, 0.0).unwrap();
        let rates: Vec<f64> = h.terms().iter().map(|t| t.rate).collect();
        assert_eq!(rates, vec![1.5, 2.25, 3.75]);

        assert!(matches!(f.shift_scale(0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(f.shift_scale(1.0, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn sign_change_bound_examples() {
        let v = ExpSum::new([(1.5, 1.0), (2.0, -1.0), (3.0, -1.0), (3.5, 1.0)]).unwrap();
        assert_eq!(v.sign_change_bound(), 2);
        assert_eq!(ExpSum::new([(2.0, 1.0)]).unwrap().sign_change_bound(), 0);
        assert_eq!(
            ExpSum::new([(1.0, 1.0), (2.0, -1.0)])
                .unwrap()
                .sign_change_bound(),
            1
        );
    }

    #[test]
    fn asymptotic_sign_examples() {
        let v = ExpSum::new([(1.5, 1.0), (2.0, -1.0), (3.0, -1.0), (3.5, 1.0)]).unwrap();
        assert_eq!(v.asymptotic_sign(), Sign::Positive);
        let h = ExpSum::new([(1.5, -1.0), (2.25, 1.0), (3.5, 1.0), (5.0, -1.0)]).unwrap();
        assert_eq!(h.asymptotic_sign(), Sign::Negative);
        assert_eq!(ExpSum::zero().asymptotic_sign(), Sign::Zero);
    }

    #[test]
    fn second_derivative_of_case_one_difference() {
        let y = ExpSum::new([(1.5, 1.0), (3.5, 1.0), (5.0, -1.0)]).unwrap();
        let x = ExpSum::new([(2.0, 1.0), (3.0, 1.0), (5.0, -1.0)]).unwrap();
        let v = &y - &x;
        assert_eq!(v.derivative().eval(0.0), 0.0);
        let d2 = v.derivative().derivative().eval(0.0);
        // −λ₁² + θ₁² − λ₂² + θ₂² = −4 + 2.25 − 9 + 12.25
        assert!((d2 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn integral_of_density_is_one() {
        let surv = ExpSum::new([(2.0, 1.0), (3.0, 1.0), (5.0, -1.0)]).unwrap();
        let dens = -&surv.derivative();
        assert!((dens.integral().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_eval_survives_far_tails() {
        let f = ExpSum::new([(1.0, 1.0), (2.0, -3.0)]).unwrap();
        let far = f.eval_scaled(2000.0);
        assert_eq!(far.sign(), Sign::Positive);
        assert!((far.ln_abs() + 2000.0).abs() < 1e-9);
        let neg = f.eval_scaled(-2000.0);
        assert_eq!(neg.sign(), Sign::Negative);
    }
}
