//! Parallel systems of independent exponential components.
//!
//! A parallel system works while any component works, so its lifetime is the
//! maximum of the component lifetimes and `F(x) = Π (1 − e^(−λᵢ x))`.
//! Expanding the product by inclusion-exclusion gives the survival function as
//! an [`ExpSum`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::ExpSum;

/// Largest component count whose `2ⁿ − 1` term expansion is attempted.
pub const MAX_COMPONENTS: usize = 20;

/// Relative tolerance for sum comparisons in [`majorizes`].
pub const MAJORIZATION_TOL: f64 = 1e-12;

/// Component hazard rates, sorted ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HazardVector {
    rates: Vec<f64>,
}

impl HazardVector {
    pub fn new(mut rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::domain("a hazard vector needs at least one rate"));
        }
        if let Some(bad) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::domain(format!(
                "hazard rates must be finite and positive, got {bad}"
            )));
        }
        rates.sort_by(f64::total_cmp);
        Ok(HazardVector { rates })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn smallest(&self) -> f64 {
        self.rates[0]
    }

    pub fn largest(&self) -> f64 {
        self.rates[self.rates.len() - 1]
    }

    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// Multiplies every rate by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        HazardVector::new(self.rates.iter().map(|r| r * k).collect())
    }

    /// True when all rates agree to within [`MAJORIZATION_TOL`].
    pub fn is_homogeneous(&self) -> bool {
        self.largest() - self.smallest() <= MAJORIZATION_TOL * self.largest()
    }

    /// Componentwise equality within [`MAJORIZATION_TOL`].
    pub fn approx_eq(&self, other: &HazardVector) -> bool {
        self.len() == other.len()
            && self
                .rates
                .iter()
                .zip(&other.rates)
                .all(|(a, b)| (a - b).abs() <= MAJORIZATION_TOL * a.abs().max(b.abs()))
    }
}

impl TryFrom<Vec<f64>> for HazardVector {
    type Error = Error;

    fn try_from(rates: Vec<f64>) -> Result<Self> {
        HazardVector::new(rates)
    }
}

impl From<HazardVector> for Vec<f64> {
    fn from(h: HazardVector) -> Vec<f64> {
        h.rates
    }
}

/// Survival function of the system lifetime,
/// `Σ_{∅≠S} (−1)^(|S|+1) e^(−(Σ_{i∈S} λᵢ) x)`, with equal subset sums merged.
pub fn survival(h: &HazardVector) -> Result<ExpSum> {
    let n = h.len();
    if n > MAX_COMPONENTS {
        return Err(Error::Size {
            n,
            max: MAX_COMPONENTS,
        });
    }
    let rates = h.rates();
    let mut raw = Vec::with_capacity((1usize << n) - 1);
    for mask in 1u32..(1u32 << n) {
        let rate: f64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| rates[i])
            .sum();
        let coeff = if mask.count_ones() % 2 == 1 {
            1.0
        } else {
            -1.0
        };
        raw.push((rate, coeff));
    }
    let f = ExpSum::new(raw)?;
    debug_assert!((f.eval(0.0) - 1.0).abs() < 1e-12);
    Ok(f)
}

/// Density of the system lifetime, `−F̄'`.
pub fn density(h: &HazardVector) -> Result<ExpSum> {
    Ok(-&survival(h)?.derivative())
}

/// Failure rate `f(x)/F̄(x)` at `x > 0`.
pub fn failure_rate(h: &HazardVector, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("failure rate needs x > 0, got {x}")));
    }
    let surv = survival(h)?;
    let s = surv.eval(x);
    if !(s >= f64::MIN_POSITIVE) {
        let largest_safe_x = inverse_survival(&surv, f64::MIN_POSITIVE)?;
        return Err(Error::Overflow { largest_safe_x });
    }
    Ok(density(h)?.eval(x) / s)
}

/// Solves `F̄(x) = u` for a survival-form sum by doubling a bracket and
/// bisecting to full floating-point resolution.
pub fn inverse_survival(f: &ExpSum, u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::domain(format!(
            "quantile level must lie in (0, 1], got {u}"
        )));
    }
    if (f.eval(0.0) - 1.0).abs() > 1e-12 || f.asymptotic_sign() != crate::expsum::Sign::Positive {
        return Err(Error::domain(
            "not a survival function: need F̄(0) = 1 and F̄ → 0⁺",
        ));
    }
    if u == 1.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0 / f.min_rate().unwrap_or(1.0);
    let mut doublings = 0;
    while f.eval(hi) >= u {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2100 || !hi.is_finite() {
            return Err(Error::Inconclusive {
                message: format!("no bracket found for survival level {u}"),
                brackets: Vec::new(),
            });
        }
    }
    let mut lo = 0.0_f64;
    for _ in 0..2200 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.eval(mid) >= u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Both ends are within one ulp; return the closer one.
    Ok(if (f.eval(lo) - u).abs() <= (f.eval(hi) - u).abs() {
        lo
    } else {
        hi
    })
}

/// Whether `(λ) ≺ (θ)`: sorted prefix sums of `λ` dominate those of `θ` and
/// the totals agree.
pub fn majorizes(lambda: &HazardVector, theta: &HazardVector) -> Result<bool> {
    if lambda.len() != theta.len() {
        return Err(Error::domain(format!(
            "majorization needs equal lengths, got {} and {}",
            lambda.len(),
            theta.len()
        )));
    }
    let (mut sl, mut st) = (0.0_f64, 0.0_f64);
    let n = lambda.len();
    for k in 0..n {
        sl += lambda.rates()[k];
        st += theta.rates()[k];
        let slack = MAJORIZATION_TOL * sl.abs().max(st.abs());
        if k + 1 < n {
            if sl < st - slack {
                return Ok(false);
            }
        } else if (sl - st).abs() > slack {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hv(r: &[f64]) -> HazardVector {
        HazardVector::new(r.to_vec()).unwrap()
    }

    fn pairs(f: &ExpSum) -> Vec<(f64, f64)> {
        f.terms().iter().map(|t| (t.rate, t.coeff)).collect()
    }

    #[test]
    fn hazard_vector_validation() {
        assert!(HazardVector::new(vec![]).is_err());
        assert!(HazardVector::new(vec![1.0, 0.0]).is_err());
        assert!(HazardVector::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(hv(&[3.0, 1.0]).rates(), &[1.0, 3.0]);
    }

    #[test]
    fn survival_two_components() {
        assert_eq!(
            pairs(&survival(&hv(&[2.0, 3.0])).unwrap()),
            vec![(2.0, 1.0), (3.0, 1.0), (5.0, -1.0)]
        );
        assert_eq!(
            pairs(&survival(&hv(&[1.0, 1.0])).unwrap()),
            vec![(1.0, 2.0), (2.0, -1.0)]
        );
    }

    #[test]
    fn survival_three_components_cancels_rate_three() {
        // Brute force over the seven subsets: {1}+,{2}+,{3}+,{1,2}−,{1,3}−,{2,3}−,{1,2,3}+
        let mut raw = Vec::new();
        let r = [1.0, 2.0, 3.0];
        for mask in 1..8u32 {
            let s: f64 = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| r[i]).sum();
            raw.push((
                s,
                if mask.count_ones() % 2 == 1 {
                    1.0
                } else {
                    -1.0
                },
            ));
        }
        let expected = ExpSum::canonicalize(raw, 0.0).unwrap();
        let got = survival(&hv(&r)).unwrap();
        assert_eq!(got, expected);
        assert_eq!(
            pairs(&got),
            vec![(1.0, 1.0), (2.0, 1.0), (4.0, -1.0), (5.0, -1.0), (6.0, 1.0)]
        );
    }

    #[test]
    fn survival_size_limit() {
        let big = hv(&[1.0; 21]);
        assert!(matches!(survival(&big), Err(Error::Size { n: 21, .. })));
    }

    #[test]
    fn density_examples() {
        assert_eq!(
            pairs(&density(&hv(&[1.0, 1.0])).unwrap()),
            vec![(1.0, 2.0), (2.0, -2.0)]
        );
        for r in [&[1.0, 2.0][..], &[2.0, 3.0, 7.0], &[0.5, 0.5, 4.0, 9.0]] {
            let d = density(&hv(r)).unwrap();
            assert!(d.eval(0.0).abs() < 1e-12);
            assert!((d.integral().unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn failure_rate_examples() {
        let single = hv(&[2.0]);
        for x in [0.01, 1.0, 30.0] {
            assert!((failure_rate(&single, x).unwrap() - 2.0).abs() < 1e-12);
        }
        assert!(failure_rate(&hv(&[1.0, 1.0]), 1e-9).unwrap() < 1e-8);
        let (e2, e3, e5) = ((-2.0f64).exp(), (-3.0f64).exp(), (-5.0f64).exp());
        let expected = (2.0 * e2 + 3.0 * e3 - 5.0 * e5) / (e2 + e3 - e5);
        assert!((failure_rate(&hv(&[2.0, 3.0]), 1.0).unwrap() - expected).abs() < 1e-10);
        assert!(failure_rate(&single, 0.0).is_err());
    }

    #[test]
    fn failure_rate_reports_underflow() {
        match failure_rate(&hv(&[2.0, 3.0]), 1000.0) {
            Err(Error::Overflow { largest_safe_x }) => {
                assert!(largest_safe_x > 300.0 && largest_safe_x < 400.0);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn inverse_survival_examples() {
        let f = survival(&hv(&[1.0, 1.0])).unwrap();
        assert_eq!(inverse_survival(&f, 1.0).unwrap(), 0.0);
        assert!((inverse_survival(&f, 0.75).unwrap() - 2f64.ln()).abs() < 1e-9);
        assert!(inverse_survival(&f, 0.0).is_err());
        assert!(inverse_survival(&f, 1.5).is_err());
        let not_survival = ExpSum::new([(1.0, 2.0)]).unwrap();
        assert!(inverse_survival(&not_survival, 0.5).is_err());
    }

    #[test]
    fn majorization_examples() {
        assert!(majorizes(&hv(&[2.0, 3.0]), &hv(&[1.5, 3.5])).unwrap());
        assert!(majorizes(&hv(&[2.0, 3.0]), &hv(&[2.0, 3.0])).unwrap());
        assert!(!majorizes(&hv(&[1.5, 3.5]), &hv(&[2.0, 3.0])).unwrap());
        assert!(!majorizes(&hv(&[2.0, 3.0]), &hv(&[1.5, 3.6])).unwrap());
        assert!(majorizes(&hv(&[2.0, 3.0, 4.0]), &hv(&[1.0, 3.0, 5.0])).unwrap());
        assert!(majorizes(&hv(&[2.0]), &hv(&[2.0, 3.0])).is_err());
    }
}
