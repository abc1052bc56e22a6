//! Sign patterns of exponential sums on `(0, ∞)`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{isolate_roots, ExpSum, RootKind, NOISE_FACTOR};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Negative => '-',
            Sign::Zero => '0',
            Sign::Positive => '+',
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match i8::deserialize(d)? {
            -1 => Ok(Sign::Negative),
            0 => Ok(Sign::Zero),
            1 => Ok(Sign::Positive),
            other => Err(serde::de::Error::custom(format!("invalid sign {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Magnitudes at or below this are never trusted as a sign.
    pub sign_floor: f64,
    /// Points in the logarithmic consistency grid.
    pub grid_points: usize,
    /// Cap on bracket expansions and bisection steps per root.
    pub max_refinements: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            sign_floor: 1e-18,
            grid_points: 512,
            max_refinements: 400,
        }
    }
}

/// One maximal interval of constant sign, represented by the point where
/// `|f|` is largest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignRegion {
    pub sign: Sign,
    pub x: f64,
    pub value: f64,
    pub certain: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SignPattern {
    pub regions: Vec<SignRegion>,
    /// Every region is certain and the regions are consistent with the
    /// sampled grid and with the coefficient bound.
    pub certified: bool,
    /// Sign-changing roots on `(0, ∞)`.
    pub crossings: Vec<f64>,
    /// Zeros on `(0, ∞)` without a sign change.
    pub tangencies: Vec<f64>,
}

impl SignPattern {
    pub fn signs(&self) -> Vec<Sign> {
        self.regions.iter().map(|r| r.sign).collect()
    }

    /// Compact form such as `"+,-,+"`; empty for the zero function.
    pub fn signature(&self) -> String {
        signature_of(&self.signs())
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn changes(&self) -> usize {
        self.regions.len().saturating_sub(1)
    }

    /// Signs of the certain regions with equal neighbours merged. Any sign
    /// change present here is also present in the true pattern.
    pub fn certain_signs(&self) -> Vec<Sign> {
        let mut out: Vec<Sign> = Vec::new();
        for r in self.regions.iter().filter(|r| r.certain) {
            if out.last() != Some(&r.sign) {
                out.push(r.sign);
            }
        }
        out
    }

    /// The certain regions only, merged, keeping the strongest witness.
    pub fn certain_only(&self) -> SignPattern {
        let mut regions: Vec<SignRegion> = Vec::new();
        for r in self.regions.iter().filter(|r| r.certain) {
            match regions.last_mut() {
                Some(last) if last.sign == r.sign => {
                    if r.value.abs() > last.value.abs() {
                        *last = *r;
                    }
                }
                _ => regions.push(*r),
            }
        }
        SignPattern {
            certified: true,
            regions,
            crossings: self.crossings.clone(),
            tangencies: self.tangencies.clone(),
        }
    }

    /// Smallest witness magnitude among the regions.
    pub fn weakest_witness(&self) -> f64 {
        self.regions
            .iter()
            .map(|r| r.value.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn signature_of(signs: &[Sign]) -> String {
    signs
        .iter()
        .map(|s| s.symbol().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.regions.is_empty() {
            return write!(f, "(zero)");
        }
        for (i, r) in self.regions.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", r.sign.symbol())?;
            if !r.certain {
                write!(f, "?")?;
            }
        }
        Ok(())
    }
}

/// Sign of `f` just to the right of the origin, read off the first of
/// `f(0), f'(0), f''(0), f'''(0)` that is distinguishable from zero.
pub fn sign_at_origin(f: &ExpSum) -> Sign {
    for k in 0..=3 {
        let (value, magnitude) = f.derivative_at_zero(k);
        if value.abs() > NOISE_FACTOR * f64::EPSILON * magnitude {
            return Sign::of(value);
        }
    }
    Sign::Zero
}

struct RawRegion {
    region: SignRegion,
}

/// Sign pattern of `f` on `(0, ∞)`.
///
/// Region boundaries are the sign-changing roots from [`isolate_roots`]. Each
/// region is represented by its largest `|f|` among the critical points of
/// `f` and a logarithmic grid inside it; the grid also cross-checks the signs.
/// Near-zero regions at the origin are settled with [`sign_at_origin`] and the
/// tail with [`ExpSum::asymptotic_sign`].
pub fn sign_pattern(f: &ExpSum, opts: &ScanOptions) -> Result<SignPattern> {
    if f.is_zero() {
        return Ok(SignPattern {
            certified: true,
            ..Default::default()
        });
    }
    let iso = isolate_roots(f, opts.max_refinements)?;
    let crossings: Vec<f64> = iso.crossings().map(|r| r.x).filter(|&x| x > 0.0).collect();
    let tangencies: Vec<f64> = iso
        .roots
        .iter()
        .filter(|r| r.kind == RootKind::Touch && r.x > 0.0)
        .map(|r| r.x)
        .collect();
    let critical: Vec<f64> = isolate_roots(&f.derivative(), opts.max_refinements)?
        .roots
        .iter()
        .map(|r| r.x)
        .filter(|&x| x > 0.0)
        .collect();

    let grid = consistency_grid(f, &crossings, &critical, opts.grid_points);
    let mut edges = Vec::with_capacity(crossings.len() + 2);
    edges.push(0.0);
    edges.extend(crossings.iter().copied());
    edges.push(f64::INFINITY);

    let mut certified = true;
    let mut raw = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let inside = |x: &f64| *x > lo && *x < hi;
        let filler = if hi.is_finite() {
            lo + 0.5 * (hi - lo)
        } else {
            2.0 * lo + 1.0
        };
        let best = critical
            .iter()
            .chain(grid.iter())
            .copied()
            .filter(inside)
            .chain(std::iter::once(filler))
            .map(|x| (x, f.eval_scaled(x)))
            .filter(|(_, s)| s.mantissa != 0.0)
            .max_by(|a, b| a.1.ln_abs().total_cmp(&b.1.ln_abs()));
        let Some((x, scaled)) = best else {
            raw.push(RawRegion {
                region: SignRegion {
                    sign: Sign::Zero,
                    x: filler,
                    value: 0.0,
                    certain: false,
                },
            });
            continue;
        };
        let value = f.eval(x);
        let sign = scaled.sign();
        let certain = scaled.resolved() && value.abs() > opts.sign_floor;
        if certain {
            for g in grid.iter().filter(|g| inside(g)) {
                let s = f.eval_scaled(*g);
                if s.resolved() && s.value().abs() > opts.sign_floor && s.sign() != sign {
                    certified = false;
                }
            }
        }
        raw.push(RawRegion {
            region: SignRegion {
                sign,
                x,
                value,
                certain,
            },
        });
    }

    let origin = sign_at_origin(f);
    let tail = f.asymptotic_sign();
    let mut regions: Vec<SignRegion> = Vec::new();
    let first_certain = raw.iter().position(|r| r.region.certain);
    let last_certain = raw.iter().rposition(|r| r.region.certain);

    match (first_certain, last_certain) {
        (Some(first), Some(last)) => {
            if first > 0 {
                // Uncertain regions hugging the origin.
                let lead = raw[first].region.sign;
                if origin != lead && origin != Sign::Zero {
                    regions.push(raw[0].region_with_sign(origin));
                    certified = false;
                } else if origin == Sign::Zero {
                    certified = false;
                }
            } else if origin != Sign::Zero && origin != raw[0].region.sign {
                regions.push(SignRegion {
                    sign: origin,
                    x: raw[0].region.x * 1e-3,
                    value: 0.0,
                    certain: false,
                });
                certified = false;
            }
            for r in &raw[first..=last] {
                if !r.region.certain {
                    certified = false;
                    continue;
                }
                push_merged(&mut regions, r.region, &mut certified);
            }
            if last + 1 < raw.len() {
                let trail = raw[last].region.sign;
                if tail != trail && tail != Sign::Zero {
                    regions.push(raw[raw.len() - 1].region_with_sign(tail));
                    certified = false;
                }
            } else if tail != Sign::Zero && tail != raw[last].region.sign {
                certified = false;
            }
        }
        _ => {
            certified = false;
            for r in &raw {
                push_merged(&mut regions, r.region, &mut certified);
            }
        }
    }

    if regions.len() > f.sign_change_bound() + 1 {
        certified = false;
    }
    Ok(SignPattern {
        regions,
        certified,
        crossings,
        tangencies,
    })
}

impl RawRegion {
    fn region_with_sign(&self, sign: Sign) -> SignRegion {
        SignRegion {
            sign,
            certain: false,
            ..self.region
        }
    }
}

fn push_merged(regions: &mut Vec<SignRegion>, r: SignRegion, certified: &mut bool) {
    match regions.last_mut() {
        Some(last) if last.sign == r.sign => {
            if last.certain && r.certain {
                // Two certain regions of one sign separated by a crossing
                // means the crossing pair was rounding noise.
                *certified = false;
            }
            if r.value.abs() > last.value.abs() || !last.certain {
                *last = r;
            }
        }
        _ => regions.push(r),
    }
}

fn consistency_grid(f: &ExpSum, crossings: &[f64], critical: &[f64], points: usize) -> Vec<f64> {
    let max_rate = f.max_rate().unwrap_or(1.0).max(1e-12);
    let min_rate = f
        .terms()
        .iter()
        .map(|t| t.rate)
        .find(|&r| r > 0.0)
        .unwrap_or(1.0);
    let far = crossings
        .iter()
        .chain(critical.iter())
        .copied()
        .fold(0.0_f64, f64::max);
    let lo = 1e-6 / max_rate;
    let hi = (60.0 / min_rate).max(4.0 * far).max(10.0 * lo);
    let n = points.max(2);
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (ratio * i as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surv(l1: f64, l2: f64) -> ExpSum {
        ExpSum::new([(l1, 1.0), (l2, 1.0), (l1 + l2, -1.0)]).unwrap()
    }

    fn v(a: f64, b: f64) -> ExpSum {
        &surv(1.5, 3.5) - &surv(2.0, 3.0).shift_scale(a, b).unwrap()
    }

    #[test]
    fn sign_symbols_and_serialisation() {
        assert_eq!(Sign::of(-2.0).symbol(), '-');
        assert_eq!(serde_json::to_string(&Sign::Positive).unwrap(), "1");
        let s: Sign = serde_json::from_str("-1").unwrap();
        assert_eq!(s, Sign::Negative);
    }

    #[test]
    fn case_one_difference_is_positive() {
        let p = sign_pattern(&v(1.0, 0.0), &ScanOptions::default()).unwrap();
        assert_eq!(p.signature(), "+");
        assert!(p.certified, "{p:?}");
    }

    #[test]
    fn h_function_is_negative() {
        let p = sign_pattern(&v(0.75, 0.0), &ScanOptions::default()).unwrap();
        assert_eq!(p.signature(), "-");
        assert!(p.certified, "{p:?}");
    }

    #[test]
    fn violating_parameters_give_four_regions() {
        let p = sign_pattern(&v(0.749, 0.0125), &ScanOptions::default()).unwrap();
        assert_eq!(p.signature(), "+,-,+,-");
        assert!(p.certified, "{p:?}");
        assert_eq!(p.crossings.len(), 3);
        assert!((p.crossings[0] - 0.07).abs() < 1e-3);
        assert!((p.crossings[1] - 5.714).abs() < 1e-3);
        assert!((p.crossings[2] - 12.457).abs() < 1e-3);
        for r in &p.regions {
            assert!(r.value.abs() > 1e-18);
            assert_eq!(Sign::of(v(0.749, 0.0125).eval(r.x)), r.sign);
        }
    }

    #[test]
    fn zero_function_pattern_is_empty() {
        let p = sign_pattern(&ExpSum::zero(), &ScanOptions::default()).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.signature(), "");
    }

    #[test]
    fn origin_sign_uses_higher_derivatives() {
        assert_eq!(sign_at_origin(&v(1.0, 0.0)), Sign::Positive);
        assert_eq!(sign_at_origin(&v(0.75, 0.0)), Sign::Negative);
        assert_eq!(sign_at_origin(&v(0.749, 0.0125)), Sign::Positive);
    }

    #[test]
    fn tiny_tail_region_is_uncertain() {
        // Just below θ₁/λ₁ the final negative region lives where |V| is far
        // below the sign floor.
        let p = sign_pattern(&v(0.74999, 0.0125), &ScanOptions::default()).unwrap();
        assert_eq!(p.signature(), "+,-,+,-");
        assert!(!p.certified);
        assert!(!p.regions[3].certain);
        assert_eq!(
            p.certain_signs(),
            vec![Sign::Positive, Sign::Negative, Sign::Positive]
        );
    }
}
