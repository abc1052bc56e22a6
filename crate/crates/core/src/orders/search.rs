//! Constructive search for convex-order violations.
//!
//! With `a_high = θ₁/λ₁` and a small shift `b₀ > 0`, `V` has the pattern
//! `+,−,+`: positive at the origin, dipping negative, and positive in the tail
//! because the smallest rate on the `Y` side wins. Lowering `a` slightly below
//! `a_high` flips the tail to `−` while `V` only decreases pointwise (its
//! derivative in `a` is `x·f_X(ax + b) > 0`), so the middle positive bump
//! survives for a narrow range of `a` and the pattern becomes `+,−,+,−`.

use serde::Serialize;

use super::SystemPair;
use crate::error::{Error, Result};
use crate::expsum::{ExpSum, SignPattern};
use crate::orders::OrderOptions;
use crate::systems::{density, inverse_survival, majorizes, HazardVector};

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
    pub a: f64,
    pub b: f64,
    /// `(θ₁/λ₂, θ₁/λ₁)`.
    pub strip: (f64, f64),
    pub pattern: SignPattern,
    pub b0_used: f64,
    pub x0_seed: f64,
    /// Sign changes of `V` on `(0, ∞)`.
    pub crossings: Vec<f64>,
    /// Interval on the `X` time scale where `F̄_Y⁻¹∘F̄_X` must fail to be
    /// convex: the images `a·x + b` of the first and last crossings.
    pub concavity_window: (f64, f64),
    /// `(x₀, b)` pairs tried while looking for `+,−,+` at `a_high`.
    pub attempts: Vec<(f64, f64)>,
}

const MAX_HALVINGS: usize = 40;
const DESCENT_STEPS: i32 = 52;
const GOLDEN_STEPS: usize = 40;

pub fn violation_search(
    lambda: &HazardVector,
    theta: &HazardVector,
    opts: &OrderOptions,
) -> Result<CounterexampleReport> {
    let pair = SystemPair::new(lambda, theta)?;
    pair.require_two("violation_search")?;
    if !majorizes(lambda, theta)? {
        return Err(Error::Domain("violation_search needs (λ) ≺ (θ)".into()));
    }
    if lambda.approx_eq(theta) {
        return Err(Error::Degenerate(
            "identical systems have no violating strip".into(),
        ));
    }
    let (a_low, a_high) = pair.strip();
    if lambda.is_homogeneous() {
        return Err(Error::Degenerate(format!(
            "homogeneous λ: the strip ({a_low}, {a_high}) is empty"
        )));
    }

    let (t1, t2) = (theta.smallest(), theta.largest());
    let x0 = 1.0 / (t1 + t2);
    let target = pair.survival_y().eval(x0);
    let slack = inverse_survival(pair.survival_x(), target)? - a_high * x0;
    if !(slack > 0.0) {
        return Err(Error::Search {
            attempts: vec![(x0, slack)],
        });
    }

    let mut attempts = Vec::new();
    let mut b0 = None;
    let mut b = 0.5 * slack;
    for _ in 0..=MAX_HALVINGS {
        attempts.push((x0, b));
        let p = pair.pattern(a_high, b, &opts.scan)?;
        if p.certified && p.signature() == "+,-,+" {
            b0 = Some(b);
            break;
        }
        b *= 0.5;
    }
    let Some(b0) = b0 else {
        return Err(Error::Search { attempts });
    };

    let score = |a: f64| -> Result<(f64, Option<SignPattern>)> {
        let p = pair.pattern(a, b0, &opts.scan)?;
        if p.certified && p.signature() == "+,-,+,-" {
            Ok((p.weakest_witness().ln(), Some(p)))
        } else {
            Ok((f64::NEG_INFINITY, None))
        }
    };

    // Walk down from a_high with geometrically growing offsets.
    let width = a_high - a_low;
    let offset = |k: i32| width * 2f64.powi(-k);
    let mut found = None;
    for k in (1..=DESCENT_STEPS).rev() {
        let a = a_high - offset(k);
        let (s, p) = score(a)?;
        if let Some(p) = p {
            found = Some((k, a, s, p));
            break;
        }
    }
    let Some((k, a_found, s_found, p_found)) = found else {
        return Err(Error::Search { attempts });
    };

    // Golden-section refinement of the weakest witness around the first hit.
    let mut best = (a_found, s_found, p_found);
    let mut lo = (a_high - offset(k - 1)).max(a_low + 0.5 * offset(k));
    let mut hi = a_high - offset(k + 1);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, pc) = score(c)?;
    let (mut fd, pd) = score(d)?;
    for (a, s, p) in [(c, fc, pc), (d, fd, pd)] {
        if let Some(p) = p {
            if s > best.1 {
                best = (a, s, p);
            }
        }
    }
    for _ in 0..GOLDEN_STEPS {
        let keep_left = fc > fd || (fc == fd && (best.0 - lo) < (hi - best.0));
        if keep_left {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            let (s, p) = score(c)?;
            fc = s;
            if let Some(p) = p {
                if s > best.1 {
                    best = (c, s, p);
                }
            }
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            let (s, p) = score(d)?;
            fd = s;
            if let Some(p) = p {
                if s > best.1 {
                    best = (d, s, p);
                }
            }
        }
    }

    let (a, _, pattern) = best;
    debug_assert!(a > a_low && a < a_high);
    let crossings = pattern.crossings.clone();
    let window = (
        a * crossings.first().copied().unwrap_or(0.0) + b0,
        a * crossings.last().copied().unwrap_or(0.0) + b0,
    );
    Ok(CounterexampleReport {
        lambda: lambda.rates().to_vec(),
        theta: theta.rates().to_vec(),
        a,
        b: b0,
        strip: (a_low, a_high),
        pattern,
        b0_used: b0,
        x0_seed: x0,
        crossings,
        concavity_window: window,
        attempts,
    })
}

/// `∂V/∂a (x, a, b) = x · f_X(a·x + b)`.
pub fn dv_da(lambda: &HazardVector, x: f64, a: f64, b: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x must be >= 0, got {x}")));
    }
    if !(a > 0.0) || !(b >= 0.0) {
        return Err(Error::Domain(format!(
            "need a > 0 and b >= 0, got a = {a}, b = {b}"
        )));
    }
    let dens: ExpSum = density(lambda)?;
    Ok(x * dens.eval(a * x + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hv(r: &[f64]) -> HazardVector {
        HazardVector::new(r.to_vec()).unwrap()
    }

    #[test]
    fn finds_violation_for_worked_example() {
        let r =
            violation_search(&hv(&[2.0, 3.0]), &hv(&[1.5, 3.5]), &OrderOptions::default()).unwrap();
        assert!(r.a > 0.5 && r.a < 0.75, "a = {}", r.a);
        assert!(r.b > 0.0);
        assert_eq!(r.pattern.signature(), "+,-,+,-");
        assert!(r.pattern.certified);
        assert_eq!(r.strip, (0.5, 0.75));
        assert!((r.x0_seed - 0.2).abs() < 1e-15);
        assert!(r.concavity_window.0 < r.concavity_window.1);
    }

    #[test]
    fn homogeneous_strip_is_degenerate() {
        let r = violation_search(&hv(&[2.5, 2.5]), &hv(&[1.5, 3.5]), &OrderOptions::default());
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn requires_majorization() {
        let r = violation_search(&hv(&[1.5, 3.5]), &hv(&[2.0, 3.0]), &OrderOptions::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_in_a() {
        let l = hv(&[2.0, 3.0]);
        assert_eq!(dv_da(&l, 0.0, 0.6, 0.01).unwrap(), 0.0);
        let pair = SystemPair::new(&l, &hv(&[1.5, 3.5])).unwrap();
        let h = 1e-6;
        let fd = (pair.difference(0.6 + h, 0.01).unwrap().eval(1.0)
            - pair.difference(0.6 - h, 0.01).unwrap().eval(1.0))
            / (2.0 * h);
        let exact = dv_da(&l, 1.0, 0.6, 0.01).unwrap();
        assert!(exact > 0.0);
        assert!(((fd - exact) / exact).abs() < 1e-6);
        assert!(dv_da(&l, -1.0, 0.6, 0.0).is_err());
    }
}
