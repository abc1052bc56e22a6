//! Real-root isolation for exponential sums.
//!
//! If `f` has smallest rate `μ₀`, then `g(x) = e^(μ₀ x) f(x)` has the same
//! zeros, and `g'` is `e^(μ₀ x)` times an exponential sum with one term fewer.
//! Isolating the zeros of that shorter sum recursively splits the real line
//! into pieces on which `g` is monotone, so each piece holds at most one root
//! and bisection finds it. The recursion bottoms out at a single term, which
//! never vanishes.

use serde::Serialize;

use super::{ExpSum, ScanOptions, Sign};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RootKind {
    /// The function changes sign through the root.
    Crossing,
    /// A zero at which the sign does not change (even multiplicity).
    Touch,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RealRoot {
    pub lo: f64,
    pub hi: f64,
    pub x: f64,
    pub kind: RootKind,
}

/// Every real root of an exponential sum, ascending.
#[derive(Clone, Debug, Default)]
pub struct RootIsolation {
    pub roots: Vec<RealRoot>,
    /// Set when some sign decision was made at rounding-noise level, so a
    /// nearby root pair could have been merged or split spuriously.
    pub ambiguous: bool,
}

impl RootIsolation {
    pub fn crossings(&self) -> impl Iterator<Item = &RealRoot> {
        self.roots.iter().filter(|r| r.kind == RootKind::Crossing)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RootCount {
    pub count: usize,
    pub brackets: Vec<(f64, f64)>,
    pub roots: Vec<RealRoot>,
    /// Roots found over the whole real line.
    pub total_real_roots: usize,
    pub bound: usize,
    /// True when every sign decision was resolved above rounding noise, or
    /// when the roots found over ℝ already exhaust the coefficient bound.
    pub certified: bool,
}

/// Isolates all real roots of `f`.
pub fn isolate_roots(f: &ExpSum, max_refinements: usize) -> Result<RootIsolation> {
    if f.len() <= 1 {
        return Ok(RootIsolation::default());
    }
    let reduced = isolate_roots(&f.rolle_reduction(), max_refinements)?;
    let mut breaks: Vec<f64> = reduced.roots.iter().map(|r| r.x).collect();
    breaks.dedup();

    let span = f.max_rate().unwrap_or(1.0) - f.min_rate().unwrap_or(0.0);
    let mut iso = RootIsolation {
        roots: Vec::new(),
        ambiguous: reduced.ambiguous,
    };
    let ctx = Ctx {
        f,
        max_refinements,
        step: 1.0 / span.max(1e-12),
        x_scale: 1.0 / f.max_rate().unwrap_or(1.0).max(1e-300),
    };

    let at_breaks: Vec<Sign> = breaks
        .iter()
        .map(|&x| {
            let s = f.eval_scaled(x);
            if !s.resolved() {
                iso.ambiguous = true;
            }
            s.sign()
        })
        .collect();

    let left_limit = f.negative_asymptotic_sign();
    let right_limit = f.asymptotic_sign();
    let sign_before = |k: usize| if k == 0 { left_limit } else { at_breaks[k - 1] };
    let sign_after = |k: usize| {
        if k + 1 >= at_breaks.len() {
            right_limit
        } else {
            at_breaks[k + 1]
        }
    };

    // Exact zeros landing on a critical point.
    for (k, &x) in breaks.iter().enumerate() {
        if at_breaks[k] == Sign::Zero {
            let (l, r) = (sign_before(k), sign_after(k));
            let kind = if l != Sign::Zero && r != Sign::Zero && l != r {
                RootKind::Crossing
            } else {
                RootKind::Touch
            };
            iso.roots.push(RealRoot {
                lo: x,
                hi: x,
                x,
                kind,
            });
        }
    }

    for piece in 0..=breaks.len() {
        let lo = if piece == 0 {
            None
        } else {
            Some(breaks[piece - 1])
        };
        let hi = breaks.get(piece).copied();
        let s_lo = if piece == 0 {
            left_limit
        } else {
            at_breaks[piece - 1]
        };
        let s_hi = if piece == breaks.len() {
            right_limit
        } else {
            at_breaks[piece]
        };
        if s_lo == Sign::Zero || s_hi == Sign::Zero || s_lo == s_hi {
            continue;
        }
        match ctx.solve_piece(lo, hi, s_lo, s_hi) {
            Ok(root) => iso.roots.push(root),
            Err(Error::Inconclusive { message, .. }) => {
                return Err(Error::Inconclusive {
                    message,
                    brackets: iso.roots.iter().map(|r| (r.lo, r.hi)).collect(),
                })
            }
            Err(e) => return Err(e),
        }
    }
    iso.roots.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(iso)
}

struct Ctx<'a> {
    f: &'a ExpSum,
    max_refinements: usize,
    step: f64,
    x_scale: f64,
}

enum Probe {
    Bracket(f64),
    Root(f64),
}

impl Ctx<'_> {
    fn sign(&self, x: f64) -> Sign {
        self.f.eval_scaled(x).sign()
    }

    /// Walks away from `from` with doubling steps until the sign equals `target`.
    fn expand(&self, from: f64, dir: f64, target: Sign) -> Result<Probe> {
        let mut d = self.step;
        for _ in 0..self.max_refinements {
            let x = from + dir * d;
            if !x.is_finite() {
                break;
            }
            match self.sign(x) {
                Sign::Zero => return Ok(Probe::Root(x)),
                s if s == target => return Ok(Probe::Bracket(x)),
                _ => d *= 2.0,
            }
        }
        Err(Error::Inconclusive {
            message: format!("could not bracket a root beyond x = {from} in direction {dir}"),
            brackets: Vec::new(),
        })
    }

    /// Solves on one monotone piece whose end signs differ.
    fn solve_piece(
        &self,
        lo: Option<f64>,
        hi: Option<f64>,
        s_lo: Sign,
        s_hi: Sign,
    ) -> Result<RealRoot> {
        let (a, b) = match (lo, hi) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => match self.expand(a, 1.0, s_hi)? {
                Probe::Bracket(b) => (a, b),
                Probe::Root(x) => return Ok(point(x)),
            },
            (None, Some(b)) => match self.expand(b, -1.0, s_lo)? {
                Probe::Bracket(a) => (a, b),
                Probe::Root(x) => return Ok(point(x)),
            },
            (None, None) => match self.sign(0.0) {
                Sign::Zero => return Ok(point(0.0)),
                s if s == s_lo => match self.expand(0.0, 1.0, s_hi)? {
                    Probe::Bracket(b) => (0.0, b),
                    Probe::Root(x) => return Ok(point(x)),
                },
                _ => match self.expand(0.0, -1.0, s_lo)? {
                    Probe::Bracket(a) => (a, 0.0),
                    Probe::Root(x) => return Ok(point(x)),
                },
            },
        };
        self.bisect(a, b, s_lo)
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, s_lo: Sign) -> Result<RealRoot> {
        for _ in 0..self.max_refinements {
            let mid = lo + 0.5 * (hi - lo);
            let tol = 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) + f64::EPSILON * self.x_scale;
            if mid <= lo || mid >= hi || hi - lo <= tol {
                return Ok(RealRoot {
                    lo,
                    hi,
                    x: mid,
                    kind: RootKind::Crossing,
                });
            }
            match self.sign(mid) {
                Sign::Zero => return Ok(point(mid)),
                s if s == s_lo => lo = mid,
                _ => hi = mid,
            }
        }
        Err(Error::Inconclusive {
            message: format!(
                "bisection did not converge within {} refinements on [{lo}, {hi}]",
                self.max_refinements
            ),
            brackets: vec![(lo, hi)],
        })
    }
}

fn point(x: f64) -> RealRoot {
    RealRoot {
        lo: x,
        hi: x,
        x,
        kind: RootKind::Crossing,
    }
}

/// Counts the real roots of `f` inside `[lo, hi]`; either end may be infinite.
pub fn count_roots(f: &ExpSum, lo: f64, hi: f64, opts: &ScanOptions) -> Result<RootCount> {
    if f.is_zero() {
        return Err(Error::domain("the zero function has no isolated roots"));
    }
    if !(lo < hi) {
        return Err(Error::domain(format!("empty interval [{lo}, {hi}]")));
    }
    let iso = isolate_roots(f, opts.max_refinements)?;
    let bound = f.sign_change_bound();
    let total = iso.roots.len();
    if total > bound {
        return Err(Error::Inconclusive {
            message: format!("found {total} real roots but the coefficient bound is {bound}"),
            brackets: iso.roots.iter().map(|r| (r.lo, r.hi)).collect(),
        });
    }
    let roots: Vec<RealRoot> = iso
        .roots
        .iter()
        .copied()
        .filter(|r| r.x >= lo && r.x <= hi)
        .collect();
    Ok(RootCount {
        count: roots.len(),
        brackets: roots.iter().map(|r| (r.lo.max(lo), r.hi.min(hi))).collect(),
        roots,
        total_real_roots: total,
        bound,
        certified: !iso.ambiguous || total == bound,
    })
}
