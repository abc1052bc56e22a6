//! Star and convex transform orders between two parallel systems.
//!
//! Both orders are decided through sign patterns of
//! `V(x) = F̄_Y(x) − F̄_X(a·x + b)` on `[0, ∞)`:
//!
//! * `X ≤* Y` (star) iff for every `a > 0`, `V` (with `b = 0`) changes sign at
//!   most once, and then from `−` to `+`.
//! * `X ≤c Y` (convex) iff for all `a > 0` and `b`, `V` changes sign at most
//!   twice, and when it does twice the order is `+, −, +`.
//!
//! When the star order holds, the convex criterion only needs `b ≥ 0`.

mod convex;
mod search;
mod sign_map;
mod star;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expsum::{sign_pattern, ExpSum, ScanOptions, Sign, SignPattern};
use crate::systems::{survival, HazardVector};

pub use convex::{convex_check, convex_check_at, region_classify, RegionLabel};
pub use search::{dv_da, violation_search, CounterexampleReport};
pub use sign_map::{sign_map, SignMap};
pub use star::{star_check, star_check_n};

/// Analytic certificate: two-component systems with majorized hazard vectors.
pub const CERT_MAJORIZED_PAIR: &str = "majorized-two-component-star";
/// Analytic certificate: both systems have the same distribution.
pub const CERT_IDENTICAL: &str = "identical-distributions";
/// Analytic certificate: homogeneous components against any heterogeneous system.
pub const CERT_HOMOGENEOUS: &str = "homogeneous-vs-heterogeneous";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

/// Parameters and the certain part of a violating sign pattern.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub a: f64,
    pub b: f64,
    pub pattern: SignPattern,
}

/// A numerical check of one analytic case.
#[derive(Clone, Debug, Serialize)]
pub struct SpotCheck {
    pub case: String,
    pub a: f64,
    pub b: f64,
    pub pattern: String,
    pub certified: bool,
    /// False only when a certified pattern contradicts the case's prediction.
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderVerdict {
    pub status: Status,
    pub certificate: Option<String>,
    pub witness: Option<Witness>,
    pub spot_checks: Vec<SpotCheck>,
    /// Parameter interval in `a` left unresolved, if any.
    pub suspect_region: Option<(f64, f64)>,
    pub notes: Vec<String>,
}

impl OrderVerdict {
    fn new(status: Status) -> Self {
        OrderVerdict {
            status,
            certificate: None,
            witness: None,
            spot_checks: Vec::new(),
            suspect_region: None,
            notes: Vec::new(),
        }
    }

    fn holds(certificate: &str) -> Self {
        OrderVerdict {
            certificate: Some(certificate.to_string()),
            ..Self::new(Status::Holds)
        }
    }

    fn fails(witness: Witness) -> Self {
        OrderVerdict {
            witness: Some(witness),
            ..Self::new(Status::Fails)
        }
    }

    /// FAILS with a witness at `(a, b)`.
    pub fn failing(a: f64, b: f64, pattern: SignPattern) -> Self {
        Self::fails(Witness { a, b, pattern })
    }

    pub fn inconclusive(note: impl Into<String>) -> Self {
        Self::new(Status::Inconclusive).note(note)
    }

    fn note(mut self, msg: impl Into<String>) -> Self {
        self.notes.push(msg.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderOptions {
    pub scan: ScanOptions,
    /// Report HOLDS from grid evidence alone when no certificate applies.
    pub allow_numerical_holds: bool,
    pub a_grid_points: usize,
    pub b_grid_points: usize,
}

impl Default for OrderOptions {
    fn default() -> Self {
        OrderOptions {
            scan: ScanOptions::default(),
            allow_numerical_holds: false,
            a_grid_points: 64,
            b_grid_points: 24,
        }
    }
}

/// Two systems `X` (rates `λ`) and `Y` (rates `θ`) with their survival functions.
#[derive(Clone, Debug)]
pub struct SystemPair {
    pub lambda: HazardVector,
    pub theta: HazardVector,
    surv_x: ExpSum,
    surv_y: ExpSum,
}

impl SystemPair {
    pub fn new(lambda: &HazardVector, theta: &HazardVector) -> Result<Self> {
        Ok(SystemPair {
            lambda: lambda.clone(),
            theta: theta.clone(),
            surv_x: survival(lambda)?,
            surv_y: survival(theta)?,
        })
    }

    pub fn survival_x(&self) -> &ExpSum {
        &self.surv_x
    }

    pub fn survival_y(&self) -> &ExpSum {
        &self.surv_y
    }

    /// `V(x) = F̄_Y(x) − F̄_X(a·x + b)`.
    pub fn difference(&self, a: f64, b: f64) -> Result<ExpSum> {
        Ok(&self.surv_y - &self.surv_x.shift_scale(a, b)?)
    }

    pub fn pattern(&self, a: f64, b: f64, opts: &ScanOptions) -> Result<SignPattern> {
        sign_pattern(&self.difference(a, b)?, opts)
    }

    /// `(θ₁/λ₂, θ₁/λ₁)` for two-component systems.
    pub fn strip(&self) -> (f64, f64) {
        let t1 = self.theta.smallest();
        (t1 / self.lambda.largest(), t1 / self.lambda.smallest())
    }

    pub(crate) fn require_two(&self, what: &str) -> Result<()> {
        if self.lambda.len() != 2 || self.theta.len() != 2 {
            return Err(Error::Unsupported(format!(
                "{what} handles two-component systems only (got {} and {})",
                self.lambda.len(),
                self.theta.len()
            )));
        }
        Ok(())
    }
}

/// Whether a certain sign sequence already rules out the star criterion.
pub fn star_violation(signs: &[Sign]) -> bool {
    signs.len() > 2 || (signs.len() == 2 && signs[0] == Sign::Positive)
}

/// Whether a certain sign sequence already rules out the convex criterion.
pub fn convex_violation(signs: &[Sign]) -> bool {
    signs.len() > 3 || (signs.len() == 3 && signs[0] == Sign::Negative)
}

/// `n` points spaced geometrically on `[lo, hi]`, merged with `extra` points
/// and sorted.
pub(crate) fn log_grid(lo: f64, hi: f64, n: usize, extra: &[f64]) -> Vec<f64> {
    let n = n.max(2);
    let step = (hi / lo).ln() / (n - 1) as f64;
    let mut pts: Vec<f64> = (0..n).map(|i| lo * (step * i as f64).exp()).collect();
    pts.extend(extra.iter().copied().filter(|v| v.is_finite() && *v > 0.0));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    pts
}
